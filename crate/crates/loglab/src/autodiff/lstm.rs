//! LSTM cell and sequence encoder.
//!
//! Gate layout is `[input; forget; cell; output]` stacked along the
//! first axis, so the input weights are `[4h, d]`, the recurrent
//! weights `[4h, h]` and the bias `[4h]`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Tensor;

/// Parameters of one LSTM layer.
#[derive(Clone)]
pub struct LstmParams {
    pub w_input: Tensor,
    pub w_recurrent: Tensor,
    pub bias: Tensor,
    hidden: usize,
    input_dim: usize,
}

impl LstmParams {
    /// Uniform init in `[-1/sqrt(h), 1/sqrt(h)]`, forget-gate bias +1.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let w_input = Tensor::param(vec![4 * hidden, input_dim], draw(4 * hidden * input_dim));
        let w_recurrent = Tensor::param(vec![4 * hidden, hidden], draw(4 * hidden * hidden));
        let mut b = vec![0.0; 4 * hidden];
        for v in &mut b[hidden..2 * hidden] {
            *v = 1.0;
        }
        let bias = Tensor::param(vec![4 * hidden], b);
        LstmParams {
            w_input,
            w_recurrent,
            bias,
            hidden,
            input_dim,
        }
    }

    pub fn from_tensors(w_input: Tensor, w_recurrent: Tensor, bias: Tensor) -> Self {
        let hidden = w_recurrent.shape()[1];
        let input_dim = w_input.shape()[1];
        assert_eq!(w_input.shape(), [4 * hidden, input_dim], "lstm: bad input weights");
        assert_eq!(bias.shape(), [4 * hidden], "lstm: bad bias");
        LstmParams {
            w_input,
            w_recurrent,
            bias,
            hidden,
            input_dim,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn tensors(&self) -> Vec<Tensor> {
        vec![
            self.w_input.clone(),
            self.w_recurrent.clone(),
            self.bias.clone(),
        ]
    }
}

/// One LSTM step. Accepts a single step vector (`[d]`, state `[h]`) or a
/// batch of columns (`[d, B]`, state `[h, B]`).
pub fn lstm_cell(
    x: &Tensor,
    h_prev: &Tensor,
    c_prev: &Tensor,
    params: &LstmParams,
) -> (Tensor, Tensor) {
    let batched = x.shape().len() == 2;
    let (x2, h2, c2) = if batched {
        (x.clone(), h_prev.clone(), c_prev.clone())
    } else {
        (
            x.reshape(vec![x.shape()[0], 1]),
            h_prev.reshape(vec![h_prev.shape()[0], 1]),
            c_prev.reshape(vec![c_prev.shape()[0], 1]),
        )
    };
    let h = params.hidden;
    let pre = params
        .w_input
        .matmul(&x2)
        .add(&params.w_recurrent.matmul(&h2))
        .add_bias(&params.bias);
    let i = pre.slice_rows(0, h).sigmoid();
    let f = pre.slice_rows(h, 2 * h).sigmoid();
    let g = pre.slice_rows(2 * h, 3 * h).tanh();
    let o = pre.slice_rows(3 * h, 4 * h).sigmoid();
    let c_t = f.mul(&c2).add(&i.mul(&g));
    let h_t = o.mul(&c_t.tanh());
    if batched {
        (h_t, c_t)
    } else {
        (h_t.reshape(vec![h]), c_t.reshape(vec![h]))
    }
}

/// Unroll the cell over an `l x d` row-major sequence from zero state
/// and return the last hidden state `[h]`.
pub fn encode_sequence(data: &[f64], l: usize, d: usize, params: &LstmParams) -> Tensor {
    assert_eq!(data.len(), l * d, "encode_sequence: data length mismatch");
    assert!(l >= 1, "encode_sequence: empty sequence");
    let out = encode_batch(&[data], l, d, params);
    out.reshape(vec![params.hidden])
}

/// Encode a batch of equal-length sequences; returns `[h, B]` with one
/// column per sequence.
pub fn encode_batch(seqs: &[&[f64]], l: usize, d: usize, params: &LstmParams) -> Tensor {
    assert!(!seqs.is_empty(), "encode_batch: empty batch");
    assert_eq!(d, params.input_dim, "encode_batch: input dim mismatch");
    let b = seqs.len();
    for s in seqs {
        assert_eq!(s.len(), l * d, "encode_batch: sequence length mismatch");
    }
    let mut h = Tensor::zeros(vec![params.hidden, b], false);
    let mut c = Tensor::zeros(vec![params.hidden, b], false);
    for t in 0..l {
        // Column j of x_t is row t of sequence j.
        let mut vals = vec![0.0; d * b];
        for (j, s) in seqs.iter().enumerate() {
            for ch in 0..d {
                vals[ch * b + j] = s[t * d + ch];
            }
        }
        let x_t = Tensor::leaf(vec![d, b], vals);
        let (h_t, c_t) = lstm_cell(&x_t, &h, &c, params);
        h = h_t;
        c = c_t;
    }
    h
}
