//! Gradient-boosted regression trees on the logistic loss.
//!
//! Each round fits one tree to first and second derivatives of the loss with
//! exact greedy split search over presorted feature columns. Leaf weights are
//! the regularized Newton step `-G / (H + lambda)` shrunk by the learning
//! rate. A split is taken whenever its gain is non-negative, so symmetric
//! problems like XOR, where no single split helps on its own, can still be
//! fit by a deeper tree.

use serde::{Deserialize, Serialize};

use super::{sigmoid, validate, TrainingExample};
use crate::error::{Error, Result};

/// Margins are clamped to this many log-odds so probabilities stay in (0, 1).
pub const MARGIN_CLAMP: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub max_depth: usize,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub lambda: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            max_depth: 6,
            n_rounds: 100,
            learning_rate: 0.3,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    /// `x[feature] < threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] < threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub n_features: usize,
    pub params: GbdtParams,
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub seed: u64,
    /// Mean weighted logistic loss on the training set after each round,
    /// starting with the base score alone.
    pub loss_history: Vec<f64>,
}

impl GbdtModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        let m = self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>();
        m.clamp(-MARGIN_CLAMP, MARGIN_CLAMP)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(sigmoid(self.margin(x)))
    }
}

fn logloss(margin: f64, y: f64) -> f64 {
    // log(1 + e^m) - y m, computed stably.
    let softplus = if margin > 0.0 {
        margin + (-margin).exp().ln_1p()
    } else {
        margin.exp().ln_1p()
    };
    softplus - y * margin
}

/// Training is deterministic; `seed` is recorded for provenance only since
/// no subsampling is done.
pub fn train_gbdt(examples: &[TrainingExample], params: GbdtParams, seed: u64) -> Result<GbdtModel> {
    let d = validate(examples, 2)?;
    if params.max_depth == 0 {
        return Err(Error::invalid("max_depth must be at least 1"));
    }
    let n = examples.len();
    let y: Vec<f64> = examples.iter().map(|e| if e.label { 1.0 } else { 0.0 }).collect();
    let w: Vec<f64> = examples.iter().map(|e| e.weight).collect();
    let wsum: f64 = w.iter().sum();
    let pos: f64 = y.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / wsum;
    let base_score = (pos / (1.0 - pos)).ln();

    let mut sorted: Vec<Vec<usize>> = (0..d)
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| examples[a].features[f].total_cmp(&examples[b].features[f]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut margin = vec![base_score; n];
    let loss = |margin: &[f64]| {
        margin.iter().zip(&y).zip(&w).map(|((&m, &y), &w)| w * logloss(m, y)).sum::<f64>() / wsum
    };
    let mut loss_history = vec![loss(&margin)];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(margin[i].clamp(-MARGIN_CLAMP, MARGIN_CLAMP));
            grad[i] = w[i] * (p - y[i]);
            hess[i] = w[i] * p * (1.0 - p);
        }
        let mut builder = Builder {
            examples,
            grad: &grad,
            hess: &hess,
            params,
            nodes: Vec::new(),
        };
        builder.grow(&mut sorted, 0);
        let tree = Tree { nodes: builder.nodes };
        for (m, e) in margin.iter_mut().zip(examples) {
            *m += tree.predict(&e.features);
        }
        trees.push(tree);
        loss_history.push(loss(&margin));
    }
    Ok(GbdtModel {
        n_features: d,
        params,
        base_score,
        trees,
        seed,
        loss_history,
    })
}

struct Builder<'a> {
    examples: &'a [TrainingExample],
    grad: &'a [f64],
    hess: &'a [f64],
    params: GbdtParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    /// Grows the subtree over the samples listed (in per-feature sorted
    /// order) by `sorted`; returns its node index.
    fn grow(&mut self, sorted: &mut [Vec<usize>], depth: usize) -> usize {
        let rows = &sorted[0];
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let id = self.nodes.len();
        let leaf = Node::Leaf {
            value: -g / (h + self.params.lambda) * self.params.learning_rate,
        };
        self.nodes.push(leaf);
        if depth >= self.params.max_depth || rows.len() < 2 {
            return id;
        }
        let parent = self.score(g, h);
        // (gain, feature, split position, threshold)
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for (f, order) in sorted.iter().enumerate() {
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                gl += self.grad[i];
                hl += self.hess[i];
                let x0 = self.examples[i].features[f];
                let x1 = self.examples[order[k + 1]].features[f];
                if x0 == x1 {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(g - gl, h - hl) - parent);
                if gain >= 0.0 && best.is_none_or(|b| gain > b.0) {
                    let mid = x0 + (x1 - x0) / 2.0;
                    let threshold = if mid > x0 { mid } else { x1 };
                    best = Some((gain, f, k + 1, threshold));
                }
            }
        }
        let Some((_, feature, _, threshold)) = best else {
            return id;
        };
        let goes_left = |i: usize| self.examples[i].features[feature] < threshold;
        let (mut left, mut right): (Vec<Vec<usize>>, Vec<Vec<usize>>) = sorted
            .iter()
            .map(|order| order.iter().partition::<Vec<usize>, _>(|&&i| goes_left(i)))
            .unzip();
        let l = self.grow(&mut left, depth + 1);
        let r = self.grow(&mut right, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left: l,
            right: r,
        };
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(x: &[f64], y: bool) -> TrainingExample {
        TrainingExample::new(x.to_vec(), y)
    }

    #[test]
    fn xor_with_depth_two() {
        let data = [
            ex(&[0.0, 0.0], false),
            ex(&[1.0, 1.0], false),
            ex(&[0.0, 1.0], true),
            ex(&[1.0, 0.0], true),
        ];
        let params = GbdtParams {
            max_depth: 2,
            ..Default::default()
        };
        let m = train_gbdt(&data, params, 0).unwrap();
        for e in &data {
            assert_eq!(m.predict_proba(&e.features).unwrap() >= 0.5, e.label);
        }
    }

    #[test]
    fn constant_features_predict_base_rate() {
        let data: Vec<_> = (0..10).map(|i| ex(&[1.0, 2.0], i < 3)).collect();
        let m = train_gbdt(&data, GbdtParams::default(), 0).unwrap();
        assert!((m.predict_proba(&[1.0, 2.0]).unwrap() - 0.3).abs() < 1e-6);
        assert!((m.predict_proba(&[9.0, -2.0]).unwrap() - 0.3).abs() < 1e-6);
    }

    #[test]
    fn zero_trees_give_sigmoid_of_base_score() {
        let data: Vec<_> = (0..4).map(|i| ex(&[i as f64], i == 0)).collect();
        let params = GbdtParams {
            n_rounds: 0,
            ..Default::default()
        };
        let m = train_gbdt(&data, params, 0).unwrap();
        assert!(m.trees.is_empty());
        assert!((m.predict_proba(&[5.0]).unwrap() - sigmoid(m.base_score)).abs() < 1e-15);
        assert!((m.predict_proba(&[5.0]).unwrap() - 0.25).abs() < 1e-12);
        assert!(m.predict_proba(&[5.0, 1.0]).is_err());
    }

    #[test]
    fn single_class_is_rejected() {
        let data: Vec<_> = (0..4).map(|i| ex(&[i as f64], true)).collect();
        assert!(train_gbdt(&data, GbdtParams::default(), 0).is_err());
    }

    #[test]
    fn hand_traced_single_stump() {
        // Two points, one split. Base rate 1/2 so base score 0; g = -0.5 and
        // +0.5, h = 0.25 each. Leaves: -g/(h+1) * 0.3 = +-0.12.
        let data = [ex(&[0.0, 7.0], true), ex(&[1.0, 7.0], false)];
        let params = GbdtParams {
            max_depth: 1,
            n_rounds: 1,
            ..Default::default()
        };
        let m = train_gbdt(&data, params, 0).unwrap();
        assert_eq!(m.base_score, 0.0);
        assert_eq!(
            m.trees[0].nodes[0],
            Node::Split {
                feature: 0,
                threshold: 0.5,
                left: 1,
                right: 2
            }
        );
        assert!((m.predict_proba(&[0.2, 0.0]).unwrap() - sigmoid(0.12)).abs() < 1e-12);
        assert!((m.predict_proba(&[0.9, 0.0]).unwrap() - sigmoid(-0.12)).abs() < 1e-12);
    }
}
