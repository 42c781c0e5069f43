//! Gradient-boosted regression trees on the logistic loss.
//!
//! Classic second-order boosting: the model starts from the class-prior
//! logit; every round fits a depth-limited tree to the current
//! gradients/hessians with greedy exact splits (gain `G^2/H` form, split
//! candidates at midpoints of consecutive distinct feature values) and
//! adds its shrunken leaf values to the running score. Ties resolve to
//! the first (feature, threshold) encountered, so training is
//! deterministic.

use super::{Checkpoint, ModelError, NamedParam};

#[derive(Debug, Clone, Copy)]
pub struct GbdtConfig {
    pub rounds: usize,
    pub depth: usize,
    pub shrinkage: f64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            rounds: 100,
            depth: 3,
            shrinkage: 0.1,
        }
    }
}

/// A binary regression tree in array form; `feature < 0` marks a leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            if node.feature < 0 {
                return node.value;
            }
            i = if x[node.feature as usize] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gbdt {
    pub base_score: f64,
    pub shrinkage: f64,
    pub trees: Vec<Tree>,
}

impl Gbdt {
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        let mut f = self.base_score;
        for tree in &self.trees {
            f += self.shrinkage * tree.predict(x);
        }
        f
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.decision_value(x)).exp())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut params = vec![NamedParam {
            name: "base_score".into(),
            shape: vec![1],
            values: vec![self.base_score],
        }];
        for (i, tree) in self.trees.iter().enumerate() {
            let mut values = Vec::with_capacity(tree.nodes.len() * 5);
            for n in &tree.nodes {
                values.extend_from_slice(&[
                    f64::from(n.feature),
                    n.threshold,
                    f64::from(n.left),
                    f64::from(n.right),
                    n.value,
                ]);
            }
            params.push(NamedParam {
                name: format!("tree_{i:04}"),
                shape: vec![tree.nodes.len(), 5],
                values,
            });
        }
        Checkpoint::new(
            format!("gbdt;trees={};shrinkage={}", self.trees.len(), self.shrinkage),
            params,
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Gbdt, ModelError> {
        if ck.arch() != "gbdt" {
            return Err(ModelError::ArchitectureMismatch {
                expected: "gbdt".into(),
                got: ck.arch().to_string(),
            });
        }
        let n_trees: usize = ck.descriptor_field("trees")?;
        let shrinkage: f64 = ck.descriptor_field("shrinkage")?;
        let base_score = ck.param("base_score")?.values[0];
        let mut trees = Vec::with_capacity(n_trees);
        for i in 0..n_trees {
            let p = ck.param(&format!("tree_{i:04}"))?;
            let nodes = p
                .values
                .chunks(5)
                .map(|c| TreeNode {
                    feature: c[0] as i32,
                    threshold: c[1],
                    left: c[2] as u32,
                    right: c[3] as u32,
                    value: c[4],
                })
                .collect();
            trees.push(Tree { nodes });
        }
        Ok(Gbdt {
            base_score,
            shrinkage,
            trees,
        })
    }
}

struct TreeBuilder<'a> {
    features: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    max_depth: usize,
    nodes: Vec<TreeNode>,
}

const EPS_H: f64 = 1e-16;
const MIN_GAIN: f64 = 1e-12;

impl<'a> TreeBuilder<'a> {
    fn build(&mut self, items: Vec<usize>, depth: usize) -> u32 {
        let g: f64 = items.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = items.iter().map(|&i| self.hess[i]).sum();
        let leaf_value = -g / (h + EPS_H);

        let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, gain)
        if depth < self.max_depth && items.len() >= 2 {
            let parent_score = g * g / (h + EPS_H);
            let dim = self.features[0].len();
            for feature in 0..dim {
                let mut order: Vec<usize> = items.clone();
                order.sort_by(|&a, &b| {
                    self.features[a][feature].total_cmp(&self.features[b][feature])
                });
                let mut gl = 0.0;
                let mut hl = 0.0;
                for w in 0..order.len() - 1 {
                    let i = order[w];
                    gl += self.grad[i];
                    hl += self.hess[i];
                    let x_here = self.features[i][feature];
                    let x_next = self.features[order[w + 1]][feature];
                    if x_here == x_next {
                        continue;
                    }
                    let gr = g - gl;
                    let hr = h - hl;
                    let gain =
                        gl * gl / (hl + EPS_H) + gr * gr / (hr + EPS_H) - parent_score;
                    if gain > MIN_GAIN && best.map_or(true, |(_, _, bg)| gain > bg) {
                        best = Some((feature, (x_here + x_next) / 2.0, gain));
                    }
                }
            }
        }

        match best {
            None => {
                self.nodes.push(TreeNode {
                    feature: -1,
                    threshold: 0.0,
                    left: 0,
                    right: 0,
                    value: leaf_value,
                });
                (self.nodes.len() - 1) as u32
            }
            Some((feature, threshold, _)) => {
                let (left_items, right_items): (Vec<usize>, Vec<usize>) = items
                    .into_iter()
                    .partition(|&i| self.features[i][feature] <= threshold);
                let idx = self.nodes.len();
                self.nodes.push(TreeNode {
                    feature: feature as i32,
                    threshold,
                    left: 0,
                    right: 0,
                    value: 0.0,
                });
                let left = self.build(left_items, depth + 1);
                let right = self.build(right_items, depth + 1);
                self.nodes[idx].left = left;
                self.nodes[idx].right = right;
                idx as u32
            }
        }
    }
}

/// Train on binary labels. Needs both classes present with at least two
/// samples each.
pub fn train_gbdt(
    features: &[Vec<f64>],
    labels: &[u8],
    config: GbdtConfig,
) -> Result<Gbdt, ModelError> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(ModelError::DegenerateTraining(
            "empty or mismatched training set".into(),
        ));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos < 2 || neg < 2 {
        return Err(ModelError::DegenerateTraining(format!(
            "need at least 2 samples per class, got {pos} positive / {neg} negative"
        )));
    }
    let prior = pos as f64 / labels.len() as f64;
    let base_score = (prior / (1.0 - prior)).ln();

    let n = labels.len();
    let mut scores = vec![base_score; n];
    let mut trees = Vec::with_capacity(config.rounds);
    for _ in 0..config.rounds {
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for i in 0..n {
            let p = 1.0 / (1.0 + (-scores[i]).exp());
            grad[i] = p - f64::from(labels[i]);
            hess[i] = p * (1.0 - p);
        }
        let mut builder = TreeBuilder {
            features,
            grad: &grad,
            hess: &hess,
            max_depth: config.depth,
            nodes: Vec::new(),
        };
        let root = builder.build((0..n).collect(), 0);
        debug_assert_eq!(root, 0);
        let tree = Tree {
            nodes: builder.nodes,
        };
        for i in 0..n {
            scores[i] += config.shrinkage * tree.predict(&features[i]);
        }
        trees.push(tree);
    }
    Ok(Gbdt {
        base_score,
        shrinkage: config.shrinkage,
        trees,
    })
}
