//! Reverse-mode automatic differentiation over dense float-64 tensors.
//!
//! A [`Tensor`] is a handle to a graph node holding values, an optional
//! gradient buffer, and the recorded parents needed for backpropagation.
//! Calling [`Tensor::backward`] on a scalar output walks the graph in
//! reverse topological order exactly once and accumulates gradients
//! additively into every node with `requires_grad` set, so a tensor that
//! feeds two consumers receives the sum of both contributions.
//!
//! Shape errors are programmer errors and panic with the offending
//! operation name and shapes.

mod adam;
mod loss;
mod lstm;

pub use adam::{AdamState, NonFiniteGradient};
pub use loss::{
    bce_loss, cross_entropy_logits, embedding_distances, triplet_loss, DistanceMetric,
};
pub use lstm::{encode_batch, encode_sequence, lstm_cell, LstmParams};

use std::cell::{Ref, RefCell};
use std::collections::HashSet;
use std::rc::Rc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Guard added under square roots so norms stay differentiable at zero.
pub(crate) const NORM_EPS: f64 = 1e-12;

type BackwardFn = Box<dyn Fn(&Node)>;

struct Node {
    shape: Vec<usize>,
    values: RefCell<Vec<f64>>,
    grad: RefCell<Option<Vec<f64>>>,
    requires_grad: bool,
    parents: Vec<Tensor>,
    backward: Option<BackwardFn>,
}

/// A dense float-64 tensor participating in the autodiff graph.
#[derive(Clone)]
pub struct Tensor {
    node: Rc<Node>,
}

impl Tensor {
    /// A constant leaf; gradients are not tracked through it.
    pub fn leaf(shape: Vec<usize>, values: Vec<f64>) -> Self {
        Self::new_leaf(shape, values, false)
    }

    /// A trainable leaf; `backward` accumulates into its grad buffer.
    pub fn param(shape: Vec<usize>, values: Vec<f64>) -> Self {
        Self::new_leaf(shape, values, true)
    }

    pub fn zeros(shape: Vec<usize>, requires_grad: bool) -> Self {
        let n = shape.iter().product();
        Self::new_leaf(shape, vec![0.0; n], requires_grad)
    }

    pub fn scalar(v: f64) -> Self {
        Self::leaf(vec![1], vec![v])
    }

    fn new_leaf(shape: Vec<usize>, values: Vec<f64>, requires_grad: bool) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "tensor: shape {:?} does not match {} values",
            shape,
            values.len()
        );
        Tensor {
            node: Rc::new(Node {
                shape,
                values: RefCell::new(values),
                grad: RefCell::new(None),
                requires_grad,
                parents: Vec::new(),
                backward: None,
            }),
        }
    }

    fn from_op(shape: Vec<usize>, values: Vec<f64>, parents: Vec<Tensor>, back: BackwardFn) -> Self {
        let requires_grad = parents.iter().any(|p| p.node.requires_grad);
        if !requires_grad {
            // Nothing upstream wants gradients; drop the graph edge.
            return Self::new_leaf(shape, values, false);
        }
        Tensor {
            node: Rc::new(Node {
                shape,
                values: RefCell::new(values),
                grad: RefCell::new(None),
                requires_grad: true,
                parents,
                backward: Some(back),
            }),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.node.shape
    }

    pub fn len(&self) -> usize {
        self.node.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn requires_grad(&self) -> bool {
        self.node.requires_grad
    }

    /// Borrow of the value buffer (row-major).
    pub fn values(&self) -> Ref<'_, Vec<f64>> {
        self.node.values.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.node.values.borrow().clone()
    }

    pub fn item(&self) -> f64 {
        assert_eq!(self.len(), 1, "item: tensor has shape {:?}", self.shape());
        self.node.values.borrow()[0]
    }

    /// Current gradient, zeros if backward has not reached this tensor.
    pub fn grad(&self) -> Vec<f64> {
        match &*self.node.grad.borrow() {
            Some(g) => g.clone(),
            None => vec![0.0; self.len()],
        }
    }

    pub fn zero_grad(&self) {
        *self.node.grad.borrow_mut() = None;
    }

    /// Overwrite values in place (used by the optimizer).
    pub fn set_values(&self, new: &[f64]) {
        let mut v = self.node.values.borrow_mut();
        assert_eq!(v.len(), new.len(), "set_values: length mismatch");
        v.copy_from_slice(new);
    }

    /// A constant copy sharing no graph history.
    pub fn detach(&self) -> Tensor {
        Self::new_leaf(self.node.shape.clone(), self.to_vec(), false)
    }

    fn accumulate_grad(&self, delta: &[f64]) {
        if !self.node.requires_grad {
            return;
        }
        let mut slot = self.node.grad.borrow_mut();
        match slot.as_mut() {
            Some(g) => {
                for (gi, di) in g.iter_mut().zip(delta) {
                    *gi += di;
                }
            }
            None => *slot = Some(delta.to_vec()),
        }
    }

    /// Backpropagate from a scalar output. Visits each reachable node
    /// exactly once in reverse topological order.
    pub fn backward(&self) {
        assert_eq!(
            self.len(),
            1,
            "backward: output must be scalar, got shape {:?}",
            self.shape()
        );
        self.accumulate_grad(&[1.0]);

        let order = topo_order(self);
        for t in order.iter().rev() {
            if let Some(back) = &t.node.backward {
                back(&t.node);
            }
        }
    }
}

/// Post-order DFS over parents; iterative to keep deep unrolls off the
/// call stack.
fn topo_order(root: &Tensor) -> Vec<Tensor> {
    let mut order: Vec<Tensor> = Vec::new();
    let mut visited: HashSet<*const Node> = HashSet::new();
    // (tensor, next parent index to visit)
    let mut stack: Vec<(Tensor, usize)> = vec![(root.clone(), 0)];
    visited.insert(Rc::as_ptr(&root.node));
    while let Some((t, i)) = stack.pop() {
        if i < t.node.parents.len() {
            let parent = t.node.parents[i].clone();
            stack.push((t, i + 1));
            if parent.node.requires_grad && visited.insert(Rc::as_ptr(&parent.node)) {
                stack.push((parent, 0));
            }
        } else {
            order.push(t);
        }
    }
    order
}

fn node_grad(node: &Node) -> Vec<f64> {
    node.grad
        .borrow()
        .as_ref()
        .map(|g| g.clone())
        .unwrap_or_else(|| vec![0.0; node.values.borrow().len()])
}

// ---------------------------------------------------------------------
// Elementwise and scalar operations
// ---------------------------------------------------------------------

fn assert_same_shape(op: &str, a: &Tensor, b: &Tensor) {
    assert_eq!(
        a.shape(),
        b.shape(),
        "{op}: shape mismatch {:?} vs {:?}",
        a.shape(),
        b.shape()
    );
}

impl Tensor {
    pub fn add(&self, other: &Tensor) -> Tensor {
        assert_same_shape("add", self, other);
        let vals: Vec<f64> = self
            .values()
            .iter()
            .zip(other.values().iter())
            .map(|(a, b)| a + b)
            .collect();
        Tensor::from_op(
            self.node.shape.clone(),
            vals,
            vec![self.clone(), other.clone()],
            Box::new(|node| {
                let g = node_grad(node);
                node.parents[0].accumulate_grad(&g);
                node.parents[1].accumulate_grad(&g);
            }),
        )
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        assert_same_shape("sub", self, other);
        let vals: Vec<f64> = self
            .values()
            .iter()
            .zip(other.values().iter())
            .map(|(a, b)| a - b)
            .collect();
        Tensor::from_op(
            self.node.shape.clone(),
            vals,
            vec![self.clone(), other.clone()],
            Box::new(|node| {
                let g = node_grad(node);
                node.parents[0].accumulate_grad(&g);
                let neg: Vec<f64> = g.iter().map(|x| -x).collect();
                node.parents[1].accumulate_grad(&neg);
            }),
        )
    }

    /// Elementwise product.
    pub fn mul(&self, other: &Tensor) -> Tensor {
        assert_same_shape("mul", self, other);
        let vals: Vec<f64> = self
            .values()
            .iter()
            .zip(other.values().iter())
            .map(|(a, b)| a * b)
            .collect();
        Tensor::from_op(
            self.node.shape.clone(),
            vals,
            vec![self.clone(), other.clone()],
            Box::new(|node| {
                let g = node_grad(node);
                let a = node.parents[0].values();
                let b = node.parents[1].values();
                let da: Vec<f64> = g.iter().zip(b.iter()).map(|(gi, bi)| gi * bi).collect();
                let db: Vec<f64> = g.iter().zip(a.iter()).map(|(gi, ai)| gi * ai).collect();
                drop(a);
                drop(b);
                node.parents[0].accumulate_grad(&da);
                node.parents[1].accumulate_grad(&db);
            }),
        )
    }

    /// Elementwise quotient.
    pub fn div(&self, other: &Tensor) -> Tensor {
        assert_same_shape("div", self, other);
        let vals: Vec<f64> = self
            .values()
            .iter()
            .zip(other.values().iter())
            .map(|(a, b)| a / b)
            .collect();
        Tensor::from_op(
            self.node.shape.clone(),
            vals,
            vec![self.clone(), other.clone()],
            Box::new(|node| {
                let g = node_grad(node);
                let a = node.parents[0].values();
                let b = node.parents[1].values();
                let da: Vec<f64> = g.iter().zip(b.iter()).map(|(gi, bi)| gi / bi).collect();
                let db: Vec<f64> = g
                    .iter()
                    .zip(a.iter().zip(b.iter()))
                    .map(|(gi, (ai, bi))| -gi * ai / (bi * bi))
                    .collect();
                drop(a);
                drop(b);
                node.parents[0].accumulate_grad(&da);
                node.parents[1].accumulate_grad(&db);
            }),
        )
    }

    pub fn scale(&self, c: f64) -> Tensor {
        let vals: Vec<f64> = self.values().iter().map(|a| a * c).collect();
        Tensor::from_op(
            self.node.shape.clone(),
            vals,
            vec![self.clone()],
            Box::new(move |node| {
                let g: Vec<f64> = node_grad(node).iter().map(|x| x * c).collect();
                node.parents[0].accumulate_grad(&g);
            }),
        )
    }

    pub fn add_scalar(&self, c: f64) -> Tensor {
        let vals: Vec<f64> = self.values().iter().map(|a| a + c).collect();
        Tensor::from_op(
            self.node.shape.clone(),
            vals,
            vec![self.clone()],
            Box::new(|node| {
                node.parents[0].accumulate_grad(&node_grad(node));
            }),
        )
    }

    fn unary(&self, f: impl Fn(f64) -> f64, dfdx: impl Fn(f64, f64) -> f64 + 'static) -> Tensor {
        let vals: Vec<f64> = self.values().iter().map(|&a| f(a)).collect();
        Tensor::from_op(
            self.node.shape.clone(),
            vals,
            vec![self.clone()],
            Box::new(move |node| {
                let g = node_grad(node);
                let out = node.values.borrow();
                let x = node.parents[0].values();
                let dx: Vec<f64> = g
                    .iter()
                    .zip(x.iter().zip(out.iter()))
                    .map(|(gi, (xi, oi))| gi * dfdx(*xi, *oi))
                    .collect();
                drop(x);
                drop(out);
                node.parents[0].accumulate_grad(&dx);
            }),
        )
    }

    pub fn sigmoid(&self) -> Tensor {
        self.unary(|x| 1.0 / (1.0 + (-x).exp()), |_, o| o * (1.0 - o))
    }

    pub fn tanh(&self) -> Tensor {
        self.unary(|x| x.tanh(), |_, o| 1.0 - o * o)
    }

    pub fn relu(&self) -> Tensor {
        self.unary(|x| x.max(0.0), |x, _| if x > 0.0 { 1.0 } else { 0.0 })
    }

    pub fn exp(&self) -> Tensor {
        self.unary(|x| x.exp(), |_, o| o)
    }

    /// Natural logarithm.
    pub fn log(&self) -> Tensor {
        self.unary(|x| x.ln(), |x, _| 1.0 / x)
    }

    pub fn sqrt(&self) -> Tensor {
        self.unary(|x| x.sqrt(), |_, o| 0.5 / o)
    }

    /// Clamp with pass-through gradient strictly inside the range.
    pub fn clamp(&self, lo: f64, hi: f64) -> Tensor {
        self.unary(
            move |x| x.clamp(lo, hi),
            move |x, _| if x > lo && x < hi { 1.0 } else { 0.0 },
        )
    }

    // -----------------------------------------------------------------
    // Reductions
    // -----------------------------------------------------------------

    pub fn sum(&self) -> Tensor {
        let s: f64 = self.values().iter().sum();
        Tensor::from_op(
            vec![1],
            vec![s],
            vec![self.clone()],
            Box::new(|node| {
                let g = node_grad(node)[0];
                let n = node.parents[0].len();
                node.parents[0].accumulate_grad(&vec![g; n]);
            }),
        )
    }

    pub fn mean(&self) -> Tensor {
        let n = self.len() as f64;
        self.sum().scale(1.0 / n)
    }

    /// Euclidean norm of all elements, guarded at zero.
    pub fn l2_norm(&self) -> Tensor {
        self.mul(self).sum().add_scalar(NORM_EPS).sqrt()
    }

    /// Column sums: `[m, n] -> [n]`.
    pub fn sum_axis0(&self) -> Tensor {
        assert_eq!(self.shape().len(), 2, "sum_axis0: need 2-D, got {:?}", self.shape());
        let (m, n) = (self.shape()[0], self.shape()[1]);
        let v = self.values();
        let mut out = vec![0.0; n];
        for i in 0..m {
            let row = &v[i * n..(i + 1) * n];
            for (o, x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        drop(v);
        Tensor::from_op(
            vec![n],
            out,
            vec![self.clone()],
            Box::new(move |node| {
                let g = node_grad(node);
                let mut dx = vec![0.0; m * n];
                for i in 0..m {
                    dx[i * n..(i + 1) * n].copy_from_slice(&g);
                }
                node.parents[0].accumulate_grad(&dx);
            }),
        )
    }

    // -----------------------------------------------------------------
    // Structure
    // -----------------------------------------------------------------

    /// Matrix product `[m,k] x [k,n] -> [m,n]`; a 1-D right operand is
    /// treated as a column vector and the result is 1-D.
    pub fn matmul(&self, other: &Tensor) -> Tensor {
        let a_shape = self.shape().to_vec();
        let vec_rhs = other.shape().len() == 1;
        let (k2, n) = if vec_rhs {
            (other.shape()[0], 1)
        } else {
            (other.shape()[0], other.shape()[1])
        };
        assert!(
            a_shape.len() == 2 && a_shape[1] == k2,
            "matmul: shape mismatch {:?} vs {:?}",
            self.shape(),
            other.shape()
        );
        let (m, k) = (a_shape[0], a_shape[1]);
        let out = matmul_raw(&self.values(), &other.values(), m, k, n);
        let out_shape = if vec_rhs { vec![m] } else { vec![m, n] };
        Tensor::from_op(
            out_shape,
            out,
            vec![self.clone(), other.clone()],
            Box::new(move |node| {
                let g = node_grad(node);
                let a = node.parents[0].values();
                let b = node.parents[1].values();
                // dA = G B^T ; dB = A^T G
                let bt = transpose_raw(&b, k, n);
                let da = matmul_raw(&g, &bt, m, n, k);
                let at = transpose_raw(&a, m, k);
                let db = matmul_raw(&at, &g, k, m, n);
                drop(a);
                drop(b);
                node.parents[0].accumulate_grad(&da);
                node.parents[1].accumulate_grad(&db);
            }),
        )
    }

    /// Broadcast-add a per-row bias `[m]` to every column of `[m, n]`.
    pub fn add_bias(&self, bias: &Tensor) -> Tensor {
        assert!(
            self.shape().len() == 2 && bias.shape() == [self.shape()[0]],
            "add_bias: shape mismatch {:?} vs {:?}",
            self.shape(),
            bias.shape()
        );
        let (m, n) = (self.shape()[0], self.shape()[1]);
        let b = bias.values();
        let mut vals = self.to_vec();
        for i in 0..m {
            for v in &mut vals[i * n..(i + 1) * n] {
                *v += b[i];
            }
        }
        drop(b);
        Tensor::from_op(
            vec![m, n],
            vals,
            vec![self.clone(), bias.clone()],
            Box::new(move |node| {
                let g = node_grad(node);
                node.parents[0].accumulate_grad(&g);
                let mut db = vec![0.0; m];
                for i in 0..m {
                    db[i] = g[i * n..(i + 1) * n].iter().sum();
                }
                node.parents[1].accumulate_grad(&db);
            }),
        )
    }

    /// Concatenate along the feature axis: 1-D tensors end to end, 2-D
    /// tensors by rows (columns are batch items).
    pub fn concat(&self, other: &Tensor) -> Tensor {
        match (self.shape().len(), other.shape().len()) {
            (1, 1) => {
                let (m1, m2) = (self.shape()[0], other.shape()[0]);
                let mut vals = self.to_vec();
                vals.extend_from_slice(&other.values());
                Tensor::from_op(
                    vec![m1 + m2],
                    vals,
                    vec![self.clone(), other.clone()],
                    Box::new(move |node| {
                        let g = node_grad(node);
                        node.parents[0].accumulate_grad(&g[..m1]);
                        node.parents[1].accumulate_grad(&g[m1..]);
                    }),
                )
            }
            (2, 2) => {
                assert_eq!(
                    self.shape()[1],
                    other.shape()[1],
                    "concat: column mismatch {:?} vs {:?}",
                    self.shape(),
                    other.shape()
                );
                let (m1, m2, n) = (self.shape()[0], other.shape()[0], self.shape()[1]);
                let mut vals = self.to_vec();
                vals.extend_from_slice(&other.values());
                Tensor::from_op(
                    vec![m1 + m2, n],
                    vals,
                    vec![self.clone(), other.clone()],
                    Box::new(move |node| {
                        let g = node_grad(node);
                        node.parents[0].accumulate_grad(&g[..m1 * n]);
                        node.parents[1].accumulate_grad(&g[m1 * n..]);
                    }),
                )
            }
            _ => panic!(
                "concat: rank mismatch {:?} vs {:?}",
                self.shape(),
                other.shape()
            ),
        }
    }

    /// Rows `r0..r1`; works on 1-D (element range) and 2-D tensors.
    pub fn slice_rows(&self, r0: usize, r1: usize) -> Tensor {
        let rank = self.shape().len();
        let (m, n) = match rank {
            1 => (self.shape()[0], 1),
            2 => (self.shape()[0], self.shape()[1]),
            _ => panic!("slice_rows: need 1-D or 2-D, got {:?}", self.shape()),
        };
        assert!(
            r0 < r1 && r1 <= m,
            "slice_rows: range {r0}..{r1} out of bounds for {:?}",
            self.shape()
        );
        let vals = self.values()[r0 * n..r1 * n].to_vec();
        let out_shape = if rank == 1 {
            vec![r1 - r0]
        } else {
            vec![r1 - r0, n]
        };
        Tensor::from_op(
            out_shape,
            vals,
            vec![self.clone()],
            Box::new(move |node| {
                let g = node_grad(node);
                let mut dx = vec![0.0; m * n];
                dx[r0 * n..r1 * n].copy_from_slice(&g);
                node.parents[0].accumulate_grad(&dx);
            }),
        )
    }

    /// Columns `c0..c1` of a 2-D tensor.
    pub fn slice_cols(&self, c0: usize, c1: usize) -> Tensor {
        assert_eq!(self.shape().len(), 2, "slice_cols: need 2-D, got {:?}", self.shape());
        let (m, n) = (self.shape()[0], self.shape()[1]);
        assert!(
            c0 < c1 && c1 <= n,
            "slice_cols: range {c0}..{c1} out of bounds for {:?}",
            self.shape()
        );
        let w = c1 - c0;
        let v = self.values();
        let mut vals = vec![0.0; m * w];
        for i in 0..m {
            vals[i * w..(i + 1) * w].copy_from_slice(&v[i * n + c0..i * n + c1]);
        }
        drop(v);
        Tensor::from_op(
            vec![m, w],
            vals,
            vec![self.clone()],
            Box::new(move |node| {
                let g = node_grad(node);
                let mut dx = vec![0.0; m * n];
                for i in 0..m {
                    dx[i * n + c0..i * n + c1].copy_from_slice(&g[i * w..(i + 1) * w]);
                }
                node.parents[0].accumulate_grad(&dx);
            }),
        )
    }

    /// Same buffer under a new shape of equal length.
    pub fn reshape(&self, shape: Vec<usize>) -> Tensor {
        assert_eq!(
            shape.iter().product::<usize>(),
            self.len(),
            "reshape: {:?} incompatible with {:?}",
            shape,
            self.shape()
        );
        Tensor::from_op(
            shape,
            self.to_vec(),
            vec![self.clone()],
            Box::new(|node| {
                node.parents[0].accumulate_grad(&node_grad(node));
            }),
        )
    }
}

pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * n..(i + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b[kk * n..(kk + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    }
    c
}

fn transpose_raw(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            t[j * m + i] = a[i * n + j];
        }
    }
    t
}

/// Inverted dropout: zero each element with probability `p` and scale
/// survivors by `1/(1-p)` in train mode; identity in eval mode. `p = 0`
/// is an identity that leaves the RNG untouched.
pub fn dropout(x: &Tensor, p: f64, train: bool, rng: &mut ChaCha8Rng) -> Tensor {
    assert!((0.0..1.0).contains(&p), "dropout: p must be in [0, 1), got {p}");
    if !train || p == 0.0 {
        return x.clone();
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..x.len())
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    let vals: Vec<f64> = x.values().iter().zip(&mask).map(|(v, m)| v * m).collect();
    Tensor::from_op(
        x.shape().to_vec(),
        vals,
        vec![x.clone()],
        Box::new(move |node| {
            let g = node_grad(node);
            let dx: Vec<f64> = g.iter().zip(&mask).map(|(gi, m)| gi * m).collect();
            node.parents[0].accumulate_grad(&dx);
        }),
    )
}

/// Per-column Euclidean norms of a `[m, n]` matrix, guarded at zero.
pub fn col_norms(x: &Tensor) -> Tensor {
    x.mul(x).sum_axis0().add_scalar(NORM_EPS).sqrt()
}

/// Per-column cosine similarity of two `[m, n]` matrices.
pub fn col_cosine(a: &Tensor, b: &Tensor) -> Tensor {
    assert_same_shape("col_cosine", a, b);
    let num = a.mul(b).sum_axis0();
    let den = col_norms(a).mul(&col_norms(b));
    num.div(&den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::finite_difference;
    use rand::SeedableRng;

    #[test]
    fn relu_forward() {
        let x = Tensor::leaf(vec![2], vec![-2.0, 3.0]);
        assert_eq!(x.relu().to_vec(), vec![0.0, 3.0]);
    }

    #[test]
    fn matmul_identity() {
        let eye = Tensor::leaf(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let a = Tensor::leaf(vec![2, 2], vec![3.0, -1.0, 2.0, 5.0]);
        assert_eq!(eye.matmul(&a).to_vec(), a.to_vec());
    }

    #[test]
    #[should_panic(expected = "matmul: shape mismatch")]
    fn matmul_rejects_bad_shapes() {
        let a = Tensor::leaf(vec![2, 3], vec![0.0; 6]);
        let b = Tensor::leaf(vec![2, 2], vec![0.0; 4]);
        a.matmul(&b);
    }

    #[test]
    fn fan_out_accumulates() {
        // y = x*x + x  =>  dy/dx = 2x + 1
        let x = Tensor::param(vec![1], vec![3.0]);
        let y = x.mul(&x).add(&x);
        y.backward();
        assert_eq!(y.item(), 12.0);
        assert_eq!(x.grad(), vec![7.0]);
    }

    #[test]
    fn backward_through_shared_subgraph_runs_once() {
        // s = sum(x); y = s * s  =>  dy/dx_i = 2s
        let x = Tensor::param(vec![3], vec![1.0, 2.0, 3.0]);
        let s = x.sum();
        let y = s.mul(&s);
        y.backward();
        assert_eq!(x.grad(), vec![12.0, 12.0, 12.0]);
    }

    /// Central finite differences against the analytic gradient of
    /// sum(sigmoid(W x)) with respect to W, several seeds.
    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w0: Vec<f64> = (0..12).map(|_| rng.random::<f64>() - 0.5).collect();
            let x0: Vec<f64> = (0..4).map(|_| rng.random::<f64>() - 0.5).collect();

            let w = Tensor::param(vec![3, 4], w0.clone());
            let x = Tensor::leaf(vec![4], x0.clone());
            let y = w.matmul(&x).sigmoid().sum();
            y.backward();
            let analytic = w.grad();

            let numeric = finite_difference(&w0, 1e-5, |wv| {
                let w = Tensor::leaf(vec![3, 4], wv.to_vec());
                let x = Tensor::leaf(vec![4], x0.clone());
                w.matmul(&x).sigmoid().sum().item()
            });
            for (a, n) in analytic.iter().zip(&numeric) {
                let rel = (a - n).abs() / n.abs().max(1e-8);
                assert!(rel < 1e-4, "seed {seed}: {a} vs {n}");
            }
        }
    }

    #[test]
    fn composite_ops_match_finite_differences() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0: Vec<f64> = (0..6).map(|_| rng.random::<f64>() + 0.5).collect();
            let f = |xv: &[f64]| {
                let x = Tensor::leaf(vec![2, 3], xv.to_vec());
                let t = x.tanh().mul(&x.exp()).add(&x.log().relu());
                t.sum_axis0().l2_norm().item()
            };
            let x = Tensor::param(vec![2, 3], x0.clone());
            let t = x.tanh().mul(&x.exp()).add(&x.log().relu());
            let y = t.sum_axis0().l2_norm();
            y.backward();
            let analytic = x.grad();
            let numeric = finite_difference(&x0, 1e-5, f);
            for (a, n) in analytic.iter().zip(&numeric) {
                let rel = (a - n).abs() / n.abs().max(1e-6);
                assert!(rel < 1e-4, "seed {seed}: {a} vs {n}");
            }
        }
    }

    #[test]
    fn dropout_eval_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::leaf(vec![4], vec![1.0, 2.0, 3.0, 4.0]);
        let y = dropout(&x, 0.25, false, &mut rng);
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn dropout_zero_p_is_identity_in_train_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::leaf(vec![3], vec![1.0, -2.0, 0.5]);
        let y = dropout(&x, 0.0, true, &mut rng);
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn dropout_preserves_mean_in_expectation() {
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = Tensor::leaf(vec![n], vec![1.0; n]);
        let y = dropout(&x, 0.25, true, &mut rng);
        let mean = y.values().iter().sum::<f64>() / n as f64;
        assert!((0.99..=1.01).contains(&mean), "mean {mean}");
    }

    #[test]
    fn dropout_deterministic_under_seed() {
        let x = Tensor::leaf(vec![64], (0..64).map(|i| i as f64).collect());
        let out: Vec<Vec<f64>> = (0..2)
            .map(|_| {
                let mut rng = ChaCha8Rng::seed_from_u64(42);
                dropout(&x, 0.5, true, &mut rng).to_vec()
            })
            .collect();
        assert_eq!(out[0], out[1]);
    }
}
