//! CART trees (Gini for classes, squared error for values) and bagged forests.
//!
//! Splits send `x <= threshold` left. Among equally good splits the lower
//! feature index wins, then the lower threshold. A node is split whenever it
//! is impure, above the depth limit and some feature still varies, even when
//! the best split does not reduce impurity (XOR-like layouts need this).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::linalg::Matrix;
use super::majority;
use crate::hexfloat::HexF64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Gini { classes: usize },
    Variance,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "camelCase")]
pub enum Node {
    /// Class index (as a float) for classification trees, mean otherwise.
    Leaf {
        #[serde_as(as = "HexF64")]
        value: f64,
    },
    Split {
        feature: usize,
        #[serde_as(as = "HexF64")]
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tree {
    pub nodes: Vec<Node>,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    criterion: Criterion,
    max_depth: usize,
    nodes: Vec<Node>,
}

impl Tree {
    /// Grow a tree on the sample multiset `samples` (row indices into `x`).
    pub fn fit(x: &Matrix, y: &[f64], samples: &[usize], criterion: Criterion, max_depth: usize) -> Tree {
        let mut b = Builder { x, y, criterion, max_depth, nodes: Vec::new() };
        b.grow(samples.to_vec(), 0);
        Tree { nodes: b.nodes }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Builder<'_> {
    fn leaf_value(&self, samples: &[usize]) -> f64 {
        match self.criterion {
            Criterion::Gini { classes } => {
                let cls: Vec<usize> = samples.iter().map(|&s| self.y[s] as usize).collect();
                majority(&cls, classes) as f64
            }
            Criterion::Variance => samples.iter().map(|&s| self.y[s]).sum::<f64>() / samples.len() as f64,
        }
    }

    fn is_pure(&self, samples: &[usize]) -> bool {
        let first = self.y[samples[0]];
        samples.iter().all(|&s| self.y[s] == first)
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: self.leaf_value(&samples) });
        if depth >= self.max_depth || samples.len() < 2 || self.is_pure(&samples) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&samples) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&s| self.x.get(s, feature) <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    /// Lowest weighted impurity over all features and midpoints between
    /// consecutive distinct values.
    fn best_split(&self, samples: &[usize]) -> Option<(usize, f64)> {
        let n = samples.len();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = samples.to_vec();
        for feature in 0..self.x.cols {
            order.sort_by(|&a, &b| self.x.get(a, feature).total_cmp(&self.x.get(b, feature)));
            let value = |i: usize| self.x.get(order[i], feature);
            if value(0) == value(n - 1) {
                continue;
            }
            let mut eval = SplitStats::new(self.criterion, &order, self.y);
            for i in 0..n - 1 {
                eval.move_left(self.y[order[i]]);
                let (a, b) = (value(i), value(i + 1));
                if a == b {
                    continue;
                }
                let impurity = eval.impurity();
                if best.is_none_or(|(bi, _, _)| impurity < bi) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some((impurity, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Incremental left/right statistics for a sorted sweep.
enum SplitStats {
    Gini { left: Vec<f64>, right: Vec<f64>, n_left: f64, n_right: f64, sq_left: f64, sq_right: f64 },
    Variance { n_left: f64, n_right: f64, s_left: f64, s_right: f64, q_left: f64, q_right: f64 },
}

impl SplitStats {
    fn new(criterion: Criterion, samples: &[usize], y: &[f64]) -> Self {
        match criterion {
            Criterion::Gini { classes } => {
                let mut right = vec![0.0; classes];
                for &s in samples {
                    right[y[s] as usize] += 1.0;
                }
                let sq_right = right.iter().map(|c| c * c).sum();
                SplitStats::Gini {
                    left: vec![0.0; classes],
                    right,
                    n_left: 0.0,
                    n_right: samples.len() as f64,
                    sq_left: 0.0,
                    sq_right,
                }
            }
            Criterion::Variance => SplitStats::Variance {
                n_left: 0.0,
                n_right: samples.len() as f64,
                s_left: 0.0,
                s_right: samples.iter().map(|&s| y[s]).sum(),
                q_left: 0.0,
                q_right: samples.iter().map(|&s| y[s] * y[s]).sum(),
            },
        }
    }

    fn move_left(&mut self, target: f64) {
        match self {
            SplitStats::Gini { left, right, n_left, n_right, sq_left, sq_right } => {
                let c = target as usize;
                *sq_left += 2.0 * left[c] + 1.0;
                *sq_right -= 2.0 * right[c] - 1.0;
                left[c] += 1.0;
                right[c] -= 1.0;
                *n_left += 1.0;
                *n_right -= 1.0;
            }
            SplitStats::Variance { n_left, n_right, s_left, s_right, q_left, q_right } => {
                *n_left += 1.0;
                *n_right -= 1.0;
                *s_left += target;
                *s_right -= target;
                *q_left += target * target;
                *q_right -= target * target;
            }
        }
    }

    /// Count-weighted Gini impurity, or total within-side squared error.
    fn impurity(&self) -> f64 {
        match self {
            SplitStats::Gini { n_left, n_right, sq_left, sq_right, .. } => {
                (n_left - sq_left / n_left) + (n_right - sq_right / n_right)
            }
            SplitStats::Variance { n_left, n_right, s_left, s_right, q_left, q_right } => {
                (q_left - s_left * s_left / n_left) + (q_right - s_right * s_right / n_right)
            }
        }
    }
}

/// Bagged classification trees. Tree `t` trains on the `t`-th bootstrap draw
/// from a single ChaCha8 stream seeded with the fit seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Forest {
    pub classes: usize,
    pub trees: Vec<Tree>,
}

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn bootstrap_sample(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

impl Forest {
    pub fn fit(x: &Matrix, y: &[f64], classes: usize, trees: usize, max_depth: usize, seed: u64) -> Forest {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let criterion = Criterion::Gini { classes };
        let trees = (0..trees)
            .map(|_| {
                let sample = bootstrap_sample(x.rows, &mut rng);
                Tree::fit(x, y, &sample, criterion, max_depth)
            })
            .collect();
        Forest { classes, trees }
    }

    /// Majority vote; ties go to the lowest class index.
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let votes: Vec<usize> = self.trees.iter().map(|t| t.predict_row(row) as usize).collect();
        majority(&votes, self.classes)
    }
}
