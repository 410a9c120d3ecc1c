//! Regression forest surrogate with jackknife-after-bootstrap standard errors.
//!
//! Trees split numeric features on thresholds and categorical features on
//! level subsets. Inactive parameters reach the forest already imputed by
//! [`ParamSpace::encode`](crate::space::ParamSpace::encode): numerics sit
//! outside the box and categoricals carry an extra level, so the trees need
//! no special missing-value handling.
//!
//! The standard error of the bagged prediction `t(x) = mean_b t_b(x)` is the
//! bias-corrected jackknife-after-bootstrap estimate
//!
//! ```text
//! V_J  = (n - 1) / n * sum_i (t_(-i)(x) - t(x))^2
//! V    = V_J - (e - 1) * n / B^2 * sum_b (t_b(x) - t(x))^2
//! ```
//!
//! where `t_(-i)` averages the trees whose bootstrap sample left out point
//! `i`. The result is clamped at zero.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::FeatureKind;

/// Above this many levels, categorical splits use the ordered-by-mean scan
/// instead of exhaustive subset search.
const EXHAUSTIVE_LEVELS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct ForestConfig {
    pub num_trees: usize,
    pub min_node_size: usize,
    /// Features tried per split; `None` means `ceil(features / 3)`.
    pub mtry: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            num_trees: 500,
            min_node_size: 5,
            mtry: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Rule {
    /// Go left when `x <= threshold`.
    Le(f64),
    /// Go left when the level is in the sorted set.
    In(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf {
        value: f64,
        size: usize,
    },
    Split {
        feature: usize,
        rule: Rule,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    rule,
                    left,
                    right,
                } => {
                    let go_left = match rule {
                        Rule::Le(t) => x[*feature] <= *t,
                        Rule::In(set) => set.binary_search(&(x[*feature] as usize)).is_ok(),
                    };
                    at = if go_left { *left } else { *right };
                }
            }
        }
    }

    fn leaf_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { size, .. } => Some(*size),
            _ => None,
        })
    }
}

/// Prediction with a flag set when the ensemble cannot support a jackknife.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForestPrediction {
    pub mean: f64,
    pub se: f64,
    /// True when no training point is out-of-bag for any tree (e.g. a single
    /// tree); `se` is then reported as 0.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct ForestFit {
    trees: Vec<Tree>,
    /// Bootstrap multiplicity of each training point, per tree.
    inbag: Vec<Vec<u32>>,
    /// Trees for which training point `i` is out-of-bag.
    oob_trees: Vec<Vec<usize>>,
    targets: Vec<f64>,
    kinds: Vec<FeatureKind>,
    config: ForestConfig,
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    kinds: &'a [FeatureKind],
    min_node: usize,
    mtry: usize,
}

struct Candidate {
    gain: f64,
    feature: usize,
    rule: Rule,
}

impl Grower<'_> {
    fn grow(&self, sample: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        self.grow_node(&mut tree, sample, rng);
        tree
    }

    fn grow_node(&self, tree: &mut Tree, idx: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let at = tree.nodes.len();
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        tree.nodes.push(Node::Leaf {
            value: mean,
            size: idx.len(),
        });
        if idx.len() < 2 * self.min_node {
            return at;
        }
        let first = self.y[idx[0]];
        if idx.iter().all(|&i| self.y[i] == first) {
            return at;
        }
        let n_features = self.kinds.len();
        let mut features = sample(rng, n_features, self.mtry.min(n_features)).into_vec();
        features.sort_unstable();
        let mut best: Option<Candidate> = None;
        for f in features {
            let found = match self.kinds[f] {
                FeatureKind::Numeric => self.best_numeric(&idx, f),
                FeatureKind::Categorical { .. } => self.best_categorical(&idx, f),
            };
            if let Some(c) = found {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best else { return at };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| {
            let v = self.x[i][best.feature];
            match &best.rule {
                Rule::Le(t) => v <= *t,
                Rule::In(set) => set.binary_search(&(v as usize)).is_ok(),
            }
        });
        let left = self.grow_node(tree, l, rng);
        let right = self.grow_node(tree, r, rng);
        tree.nodes[at] = Node::Split {
            feature: best.feature,
            rule: best.rule,
            left,
            right,
        };
        at
    }

    fn score(&self, sum_l: f64, n_l: usize, sum_r: f64, n_r: usize, sum: f64, n: usize) -> f64 {
        sum_l * sum_l / n_l as f64 + sum_r * sum_r / n_r as f64 - sum * sum / n as f64
    }

    fn best_numeric(&self, idx: &[usize], f: usize) -> Option<Candidate> {
        let mut order: Vec<(f64, f64)> = idx.iter().map(|&i| (self.x[i][f], self.y[i])).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = order.len();
        let total: f64 = order.iter().map(|p| p.1).sum();
        let mut sum_l = 0.0;
        let mut best: Option<Candidate> = None;
        for k in 0..n - 1 {
            sum_l += order[k].1;
            let n_l = k + 1;
            if order[k].0 == order[k + 1].0 || n_l < self.min_node || n - n_l < self.min_node {
                continue;
            }
            let gain = self.score(sum_l, n_l, total - sum_l, n - n_l, total, n);
            if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(Candidate {
                    gain,
                    feature: f,
                    rule: Rule::Le(0.5 * (order[k].0 + order[k + 1].0)),
                });
            }
        }
        best
    }

    fn best_categorical(&self, idx: &[usize], f: usize) -> Option<Candidate> {
        let FeatureKind::Categorical { n_levels } = self.kinds[f] else {
            unreachable!()
        };
        let mut sums = vec![0.0; n_levels];
        let mut counts = vec![0usize; n_levels];
        for &i in idx {
            let l = self.x[i][f] as usize;
            sums[l] += self.y[i];
            counts[l] += 1;
        }
        let present: Vec<usize> = (0..n_levels).filter(|&l| counts[l] > 0).collect();
        if present.len() < 2 {
            return None;
        }
        let total: f64 = sums.iter().sum();
        let n = idx.len();
        let mut best: Option<Candidate> = None;
        let consider = |left: Vec<usize>, best: &mut Option<Candidate>| {
            let n_l: usize = left.iter().map(|&l| counts[l]).sum();
            if n_l < self.min_node || n - n_l < self.min_node {
                return;
            }
            let sum_l: f64 = left.iter().map(|&l| sums[l]).sum();
            let gain = self.score(sum_l, n_l, total - sum_l, n - n_l, total, n);
            if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                let mut set = left;
                set.sort_unstable();
                *best = Some(Candidate {
                    gain,
                    feature: f,
                    rule: Rule::In(set),
                });
            }
        };
        if present.len() <= EXHAUSTIVE_LEVELS {
            // the first present level always goes left; this skips mirrored partitions
            let m = present.len();
            for mask in 0u32..(1 << (m - 1)) - 1 {
                let mut left = vec![present[0]];
                left.extend((1..m).filter(|b| mask & (1 << (b - 1)) != 0).map(|b| present[b]));
                consider(left, &mut best);
            }
        } else {
            let mut by_mean = present.clone();
            by_mean.sort_by(|&a, &b| {
                (sums[a] / counts[a] as f64)
                    .total_cmp(&(sums[b] / counts[b] as f64))
                    .then(a.cmp(&b))
            });
            for k in 1..by_mean.len() {
                consider(by_mean[..k].to_vec(), &mut best);
            }
        }
        best
    }
}

impl ForestFit {
    /// Grows `num_trees` trees on bootstrap resamples. Per-tree seeds are
    /// drawn from `rng` up front, so the result does not depend on how the
    /// trees are scheduled.
    pub fn fit<R: Rng + ?Sized>(
        inputs: &[Vec<f64>],
        targets: &[f64],
        kinds: &[FeatureKind],
        config: &ForestConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let n = inputs.len();
        if n != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: targets.len(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidArgument("a forest needs at least 2 points".into()));
        }
        if let Some(bad) = inputs.iter().find(|x| x.len() != kinds.len()) {
            return Err(Error::DimensionMismatch {
                expected: kinds.len(),
                got: bad.len(),
            });
        }
        if config.num_trees == 0 || config.min_node_size == 0 {
            return Err(Error::InvalidArgument(
                "num_trees and min_node_size must be positive".into(),
            ));
        }
        let mtry = config
            .mtry
            .unwrap_or_else(|| kinds.len().div_ceil(3))
            .clamp(1, kinds.len());
        let grower = Grower {
            x: inputs,
            y: targets,
            kinds,
            min_node: config.min_node_size,
            mtry,
        };
        let seeds: Vec<u64> = (0..config.num_trees).map(|_| rng.random()).collect();
        let grown: Vec<(Tree, Vec<u32>)> = seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut counts = vec![0u32; n];
                let sample: Vec<usize> = (0..n)
                    .map(|_| {
                        let i = rng.random_range(0..n);
                        counts[i] += 1;
                        i
                    })
                    .collect();
                (grower.grow(sample, &mut rng), counts)
            })
            .collect();
        let (trees, inbag): (Vec<Tree>, Vec<Vec<u32>>) = grown.into_iter().unzip();
        let oob_trees = (0..n)
            .map(|i| (0..trees.len()).filter(|&b| inbag[b][i] == 0).collect())
            .collect();
        Ok(Self {
            trees,
            inbag,
            oob_trees,
            targets: targets.to_vec(),
            kinds: kinds.to_vec(),
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Bootstrap multiplicities, one row per tree.
    pub fn inbag(&self) -> &[Vec<u32>] {
        &self.inbag
    }

    /// Training-point counts of every leaf, across all trees.
    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.trees.iter().flat_map(|t| t.leaf_sizes()).collect()
    }

    /// Individual tree predictions.
    pub fn tree_predictions(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<ForestPrediction> {
        if x.len() != self.kinds.len() {
            return Err(Error::DimensionMismatch {
                expected: self.kinds.len(),
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> ForestPrediction {
        let preds = self.tree_predictions(x);
        let b = preds.len() as f64;
        let mean = preds.iter().sum::<f64>() / b;
        let n = self.targets.len() as f64;
        let mut jack = 0.0;
        let mut used = 0usize;
        for oob in &self.oob_trees {
            if oob.is_empty() {
                continue;
            }
            let m = oob.iter().map(|&t| preds[t]).sum::<f64>() / oob.len() as f64;
            jack += (m - mean).powi(2);
            used += 1;
        }
        if used == 0 || preds.len() < 2 {
            return ForestPrediction {
                mean,
                se: 0.0,
                degenerate: true,
            };
        }
        jack *= (n - 1.0) / n;
        let spread: f64 = preds.iter().map(|p| (p - mean).powi(2)).sum();
        let bias = (std::f64::consts::E - 1.0) * n / (b * b) * spread;
        ForestPrediction {
            mean,
            se: (jack - bias).max(0.0).sqrt(),
            degenerate: false,
        }
    }
}
