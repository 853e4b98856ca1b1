use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfParams {
    pub trees: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            trees: 100,
            max_features: None,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classification tree grown on Gini impurity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Best Gini split of `idx` on `feature`, scored by the weighted child impurity.
fn best_split_on(
    x: &[Vec<f64>],
    y: &[usize],
    idx: &[usize],
    feature: usize,
    n_classes: usize,
    order: &mut Vec<usize>,
) -> Option<SplitChoice> {
    order.clear();
    order.extend_from_slice(idx);
    order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]));
    let n = order.len();
    let mut right = vec![0usize; n_classes];
    for &i in order.iter() {
        right[y[i]] += 1;
    }
    let mut left = vec![0usize; n_classes];
    let mut best: Option<SplitChoice> = None;
    for pos in 0..n - 1 {
        let c = y[order[pos]];
        left[c] += 1;
        right[c] -= 1;
        let here = x[order[pos]][feature];
        let next = x[order[pos + 1]][feature];
        if here == next {
            continue;
        }
        let nl = pos + 1;
        let nr = n - nl;
        let score = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
        if best.as_ref().is_none_or(|b| score < b.score) {
            let mut threshold = here + (next - here) / 2.0;
            if threshold >= next {
                threshold = here;
            }
            best = Some(SplitChoice {
                feature,
                threshold,
                score,
            });
        }
    }
    best
}

impl DecisionTree {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        sample: Vec<usize>,
        n_classes: usize,
        params: &RfParams,
        max_features: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let dim = x[0].len();
        let mut nodes = vec![Node::Leaf { class: 0 }];
        let mut stack = vec![(0usize, sample, 0usize)];
        let mut features: Vec<usize> = (0..dim).collect();
        let mut order = Vec::new();

        while let Some((slot, idx, depth)) = stack.pop() {
            let mut counts = vec![0usize; n_classes];
            for &i in &idx {
                counts[y[i]] += 1;
            }
            let class = majority(&counts);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
            if pure || depth_capped || idx.len() < params.min_samples_split {
                nodes[slot] = Node::Leaf { class };
                continue;
            }

            // Examine at least `max_features` random features, continuing past
            // that only while no valid split has been found.
            features.shuffle(rng);
            let mut best: Option<SplitChoice> = None;
            for (tried, &f) in features.iter().enumerate() {
                if tried >= max_features && best.is_some() {
                    break;
                }
                if let Some(s) = best_split_on(x, y, &idx, f, n_classes, &mut order) {
                    if best.as_ref().is_none_or(|b| s.score < b.score) {
                        best = Some(s);
                    }
                }
            }
            let Some(split) = best else {
                nodes[slot] = Node::Leaf { class };
                continue;
            };
            let (l, r): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| x[i][split.feature] <= split.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf { class });
            let right = nodes.len();
            nodes.push(Node::Leaf { class });
            nodes[slot] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push((right, r, depth + 1));
            stack.push((left, l, depth + 1));
        }
        DecisionTree { nodes }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

/// Bootstrap-aggregated trees with per-split feature subsampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_classes: usize,
}

impl RandomForest {
    /// Trees are fitted in parallel; tree `t` draws from ChaCha stream `t`
    /// of `seed`, so results do not depend on scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &RfParams, seed: u64) -> Self {
        let n = x.len();
        let dim = x[0].len();
        let max_features = params
            .max_features
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .clamp(1, dim.max(1));
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                DecisionTree::fit(x, y, sample, n_classes, params, max_features, &mut rng)
            })
            .collect();
        RandomForest { trees, n_classes }
    }

    pub fn from_trees(trees: Vec<DecisionTree>, n_classes: usize) -> Self {
        RandomForest { trees, n_classes }
    }

    /// Fraction of trees voting for each class.
    pub fn votes(&self, x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.n_classes];
        for t in &self.trees {
            v[t.predict(x)] += 1.0;
        }
        let n = self.trees.len() as f64;
        v.iter_mut().for_each(|c| *c /= n);
        v
    }
}
