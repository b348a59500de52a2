//! Weighted least-squares regression trees and the ensembles built on them.
//!
//! With a 0/1 target the weighted squared error of a node is half its
//! weighted Gini impurity, so one builder serves CART classification,
//! forests, boosting stumps and gradient-boosting regressors.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BaggingParams, ForestParams, GradientBoostingParams};
use crate::rng::{self, StageRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeOptions {
    /// 0 = unlimited.
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` = all.
    pub max_features: Option<usize>,
    /// Draw one uniform threshold per candidate feature instead of scanning.
    pub random_thresholds: bool,
}

impl Default for TreeOptions {
    fn default() -> Self {
        TreeOptions { max_depth: 0, min_samples_split: 2, min_samples_leaf: 1, max_features: None, random_thresholds: false }
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    target: &'a [f64],
    weight: &'a [f64],
    opts: &'a TreeOptions,
    rng: StageRng,
    nodes: Vec<Node>,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

const MIN_GAIN: f64 = 1e-12;

impl Builder<'_> {
    fn stats(&self, samples: &[usize]) -> (f64, f64) {
        let mut w = 0.0;
        let mut wt = 0.0;
        for &i in samples {
            w += self.weight[i];
            wt += self.weight[i] * self.target[i];
        }
        (w, wt)
    }

    fn build(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let (w, wt) = self.stats(&samples);
        let value = if w > 0.0 { wt / w } else { 0.0 };
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value });
        let depth_ok = self.opts.max_depth == 0 || depth < self.opts.max_depth;
        let first = self.target[samples[0]];
        let pure = samples.iter().all(|&i| self.target[i] == first);
        if !depth_ok || pure || samples.len() < self.opts.min_samples_split {
            return id;
        }
        let Some(split) = self.best_split(&samples, w, wt) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left: l, right: r };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x[0].len();
        match self.opts.max_features {
            Some(m) if m < d => {
                let mut f = sample(&mut self.rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, samples: &[usize], w: f64, wt: f64) -> Option<Split> {
        let parent = wt * wt / w;
        let min_leaf = self.opts.min_samples_leaf;
        let mut best: Option<Split> = None;
        let consider = |best: &mut Option<Split>, feature, threshold, gain: f64| {
            if gain > MIN_GAIN && best.as_ref().is_none_or(|b| gain > b.gain) {
                *best = Some(Split { feature, threshold, gain });
            }
        };
        for f in self.candidate_features() {
            if self.opts.random_thresholds {
                let lo = samples.iter().map(|&i| self.x[i][f]).fold(f64::INFINITY, f64::min);
                let hi = samples.iter().map(|&i| self.x[i][f]).fold(f64::NEG_INFINITY, f64::max);
                if hi <= lo {
                    continue;
                }
                let mut t = self.rng.gen_range(lo..hi);
                if t >= hi {
                    t = lo;
                }
                let (mut lw, mut lwt, mut ln) = (0.0, 0.0, 0usize);
                for &i in samples {
                    if self.x[i][f] <= t {
                        lw += self.weight[i];
                        lwt += self.weight[i] * self.target[i];
                        ln += 1;
                    }
                }
                let rn = samples.len() - ln;
                let (rw, rwt) = (w - lw, wt - lwt);
                if ln < min_leaf || rn < min_leaf || lw <= 0.0 || rw <= 0.0 {
                    continue;
                }
                consider(&mut best, f, t, lwt * lwt / lw + rwt * rwt / rw - parent);
                continue;
            }
            let mut order: Vec<usize> = samples.to_vec();
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let (mut lw, mut lwt) = (0.0, 0.0);
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                lw += self.weight[i];
                lwt += self.weight[i] * self.target[i];
                let a = self.x[i][f];
                let b = self.x[order[pos + 1]][f];
                if a == b {
                    continue;
                }
                let ln = pos + 1;
                if ln < min_leaf || order.len() - ln < min_leaf {
                    continue;
                }
                let rw = w - lw;
                if lw <= 0.0 || rw <= 0.0 {
                    continue;
                }
                let rwt = wt - lwt;
                let gain = lwt * lwt / lw + rwt * rwt / rw - parent;
                let mut t = a + (b - a) / 2.0;
                if !(t >= a && t < b) {
                    t = a;
                }
                consider(&mut best, f, t, gain);
            }
        }
        best
    }
}

impl Tree {
    /// Grow a tree on the samples with positive weight.
    pub fn fit(x: &[Vec<f64>], target: &[f64], weight: &[f64], opts: &TreeOptions, rng: StageRng) -> Tree {
        let samples: Vec<usize> = (0..x.len()).filter(|&i| weight[i] > 0.0).collect();
        let mut b = Builder { x, target, weight, opts, rng, nodes: Vec::new() };
        if samples.is_empty() {
            return Tree { nodes: vec![Node::Leaf { value: 0.0 }] };
        }
        b.build(samples, 0);
        Tree { nodes: b.nodes }
    }

    /// CART on labels in {+1, -1}; leaves hold the positive fraction.
    pub fn fit_classifier(x: &[Vec<f64>], y: &[i8], opts: &TreeOptions, seed: u64) -> Tree {
        let target = positive_indicator(y);
        Tree::fit(x, &target, &vec![1.0; x.len()], opts, rng::stream(seed, "tree"))
    }

    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Split { feature, threshold, left, right } => {
                    id = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict_value(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_of(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_of stops at a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

fn positive_indicator(y: &[i8]) -> Vec<f64> {
    y.iter().map(|&v| if v > 0 { 1.0 } else { 0.0 }).collect()
}

fn bootstrap_weights(n: usize, rng: &mut StageRng) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for _ in 0..n {
        w[rng.gen_range(0..n)] += 1.0;
    }
    w
}

/// Averaged trees: random forest, extra trees or bagging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    fn grow(
        x: &[Vec<f64>],
        y: &[i8],
        n_trees: usize,
        opts: &TreeOptions,
        bootstrap: bool,
        seed: u64,
        stream: &str,
    ) -> Forest {
        let target = positive_indicator(y);
        let trees = (0..n_trees)
            .map(|t| {
                let mut r = rng::stream(seed, &format!("{stream}/tree{t}"));
                let weight = if bootstrap { bootstrap_weights(x.len(), &mut r) } else { vec![1.0; x.len()] };
                Tree::fit(x, &target, &weight, opts, r)
            })
            .collect();
        Forest { trees }
    }

    fn sqrt_features(d: usize) -> Option<usize> {
        Some(((d as f64).sqrt().floor() as usize).max(1))
    }

    pub fn random_forest(x: &[Vec<f64>], y: &[i8], p: &ForestParams, seed: u64) -> Forest {
        let opts = TreeOptions {
            max_depth: p.max_depth,
            min_samples_leaf: p.min_samples_leaf,
            max_features: Self::sqrt_features(x[0].len()),
            ..TreeOptions::default()
        };
        Self::grow(x, y, p.n_trees, &opts, true, seed, "random-forest")
    }

    pub fn extra_trees(x: &[Vec<f64>], y: &[i8], p: &ForestParams, seed: u64) -> Forest {
        let opts = TreeOptions {
            max_depth: p.max_depth,
            min_samples_leaf: p.min_samples_leaf,
            max_features: Self::sqrt_features(x[0].len()),
            random_thresholds: true,
            ..TreeOptions::default()
        };
        Self::grow(x, y, p.n_trees, &opts, false, seed, "extra-trees")
    }

    pub fn bagging(x: &[Vec<f64>], y: &[i8], p: &BaggingParams, seed: u64) -> Forest {
        let opts = TreeOptions { max_depth: p.max_depth, ..TreeOptions::default() };
        Self::grow(x, y, p.n_estimators, &opts, true, seed, "bagging")
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_value(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Discrete AdaBoost over depth-1 stumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    pub stumps: Vec<Tree>,
    pub alphas: Vec<f64>,
}

fn stump_vote(t: &Tree, x: &[f64]) -> f64 {
    if t.predict_value(x) > 0.5 {
        1.0
    } else {
        -1.0
    }
}

impl Boosted {
    pub fn fit(x: &[Vec<f64>], y: &[i8], n_estimators: usize, learning_rate: f64) -> Boosted {
        let n = x.len();
        let target = positive_indicator(y);
        let mut w = vec![1.0 / n as f64; n];
        let opts = TreeOptions { max_depth: 1, ..TreeOptions::default() };
        let mut stumps = Vec::new();
        let mut alphas = Vec::new();
        for m in 0..n_estimators {
            let stump = Tree::fit(x, &target, &w, &opts, rng::stream(0, "stump"));
            let votes: Vec<f64> = x.iter().map(|r| stump_vote(&stump, r)).collect();
            let err: f64 = (0..n).filter(|&i| votes[i] != f64::from(y[i])).map(|i| w[i]).sum::<f64>()
                / w.iter().sum::<f64>();
            if err >= 0.5 {
                if m == 0 {
                    stumps.push(stump);
                    alphas.push(0.0);
                }
                break;
            }
            let e = err.max(1e-10);
            let alpha = learning_rate * 0.5 * ((1.0 - e) / e).ln();
            stumps.push(stump);
            alphas.push(alpha);
            if err <= 0.0 {
                break;
            }
            for i in 0..n {
                w[i] *= (-alpha * f64::from(y[i]) * votes[i]).exp();
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
        }
        Boosted { stumps, alphas }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.stumps.iter().zip(&self.alphas).map(|(t, a)| a * stump_vote(t, x)).sum()
    }
}

/// Gradient boosting on the logistic loss with Newton leaf values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosted {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GradientBoosted {
    pub fn fit(x: &[Vec<f64>], y: &[i8], p: &GradientBoostingParams) -> GradientBoosted {
        let n = x.len();
        let target = positive_indicator(y);
        let prior = (target.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let init = (prior / (1.0 - prior)).ln();
        let mut f = vec![init; n];
        let opts = TreeOptions { max_depth: p.max_depth, ..TreeOptions::default() };
        let ones = vec![1.0; n];
        let mut trees = Vec::with_capacity(p.n_estimators);
        for _ in 0..p.n_estimators {
            let prob: Vec<f64> = f.iter().map(|&v| super::linear::sigmoid(v)).collect();
            let residual: Vec<f64> = target.iter().zip(&prob).map(|(t, q)| t - q).collect();
            let mut tree = Tree::fit(x, &residual, &ones, &opts, rng::stream(0, "gbm"));
            let mut num = vec![0.0; tree.nodes.len()];
            let mut den = vec![0.0; tree.nodes.len()];
            let leaves: Vec<usize> = x.iter().map(|r| tree.leaf_of(r)).collect();
            for i in 0..n {
                num[leaves[i]] += residual[i];
                den[leaves[i]] += prob[i] * (1.0 - prob[i]);
            }
            for (id, node) in tree.nodes.iter_mut().enumerate() {
                if let Node::Leaf { value } = node {
                    *value = if den[id] > 1e-12 { (num[id] / den[id]).clamp(-10.0, 10.0) } else { 0.0 };
                }
            }
            for i in 0..n {
                f[i] += p.learning_rate * tree.predict_value(&x[i]);
            }
            trees.push(tree);
        }
        GradientBoosted { init, learning_rate: p.learning_rate, trees }
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        let f = self.init + self.learning_rate * self.trees.iter().map(|t| t.predict_value(x)).sum::<f64>();
        super::linear::sigmoid(f)
    }
}
