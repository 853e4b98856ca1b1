use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

/// Brute-force Euclidean nearest neighbours with majority voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    n_classes: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl Knn {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &KnnParams) -> Self {
        Knn {
            k: params.k,
            n_classes,
            points: x.to_vec(),
            labels: y.to_vec(),
        }
    }

    /// Fraction of the `k` nearest neighbours in each class. Distance ties
    /// are resolved by class order, so the result does not depend on the
    /// order of the training set.
    pub fn votes(&self, x: &[f64]) -> Vec<f64> {
        let mut dists: Vec<(f64, usize)> = self
            .points
            .iter()
            .zip(&self.labels)
            .map(|(p, &c)| {
                let d: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, c)
            })
            .collect();
        let k = self.k.min(dists.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, cmp);
        }
        let mut votes = vec![0.0; self.n_classes];
        for &(_, c) in &dists[..k] {
            votes[c] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= k as f64);
        votes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::argmax;

    #[test]
    fn one_nn_recovers_training_labels() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0], vec![5.0, 5.0]];
        let y = vec![0, 1, 1, 0];
        let m = Knn::fit(&x, &y, 2, &KnnParams { k: 1 });
        for (row, &c) in x.iter().zip(&y) {
            assert_eq!(argmax(&m.votes(row)), c);
        }
    }

    #[test]
    fn majority_of_three() {
        let x = vec![vec![0.0], vec![0.1], vec![0.2], vec![10.0], vec![11.0]];
        let y = vec![0, 0, 1, 1, 1];
        let m = Knn::fit(&x, &y, 2, &KnnParams { k: 3 });
        let v = m.votes(&[0.05]);
        assert_eq!(argmax(&v), 0);
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tie_goes_to_first_label() {
        let x = vec![vec![-1.0], vec![1.0]];
        let m = Knn::fit(&x, &[1, 0], 2, &KnnParams { k: 2 });
        assert_eq!(argmax(&m.votes(&[0.0])), 0);
    }

    #[test]
    fn k_larger_than_training_set() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let m = Knn::fit(&x, &[0, 1, 1], 2, &KnnParams { k: 10 });
        let v = m.votes(&[0.0]);
        assert!((v[1] - 2.0 / 3.0).abs() < 1e-15);
    }
}
