use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NbParams {
    /// Added to every per-class variance, as a fraction of the largest
    /// feature variance in the training set (absolute when that is zero).
    pub var_smoothing: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams { var_smoothing: 1e-9 }
    }
}

/// Gaussian naive Bayes with per-class, per-feature mean and variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    log_prior: Vec<f64>,
    mean: Vec<Vec<f64>>,
    var: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &NbParams) -> Self {
        let dim = x[0].len();
        let n = x.len() as f64;

        let mut total_mean = vec![0.0; dim];
        for row in x {
            for (m, v) in total_mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let max_var = (0..dim)
            .map(|j| x.iter().map(|r| (r[j] - total_mean[j]).powi(2)).sum::<f64>() / n)
            .fold(0.0, f64::max);
        let epsilon = if max_var > 0.0 {
            params.var_smoothing * max_var
        } else {
            params.var_smoothing.max(f64::MIN_POSITIVE)
        };

        let mut counts = vec![0usize; n_classes];
        let mut mean = vec![vec![0.0; dim]; n_classes];
        for (row, &c) in x.iter().zip(y) {
            counts[c] += 1;
            for (m, v) in mean[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        for (c, m) in mean.iter_mut().enumerate() {
            if counts[c] > 0 {
                let k = counts[c] as f64;
                m.iter_mut().for_each(|v| *v /= k);
            }
        }
        let mut var = vec![vec![0.0; dim]; n_classes];
        for (row, &c) in x.iter().zip(y) {
            for ((s, v), m) in var[c].iter_mut().zip(row).zip(&mean[c]) {
                *s += (v - m) * (v - m);
            }
        }
        for (c, s) in var.iter_mut().enumerate() {
            let k = counts[c].max(1) as f64;
            s.iter_mut().for_each(|v| *v = *v / k + epsilon);
        }
        let log_prior = counts
            .iter()
            .map(|&c| {
                if c == 0 {
                    f64::NEG_INFINITY
                } else {
                    (c as f64 / n).ln()
                }
            })
            .collect();
        GaussianNb {
            log_prior,
            mean,
            var,
        }
    }

    pub fn joint_log_likelihood(&self, x: &[f64]) -> Vec<f64> {
        self.log_prior
            .iter()
            .enumerate()
            .map(|(c, &lp)| {
                if lp == f64::NEG_INFINITY {
                    return lp;
                }
                let mut ll = lp;
                for ((v, m), s) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
                    ll -= 0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / s);
                }
                ll
            })
            .collect()
    }

    /// Class posteriors via log-sum-exp.
    pub fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let jll = self.joint_log_likelihood(x);
        let max = jll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = jll.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fits_class_statistics() {
        let x = vec![vec![0.0], vec![2.0], vec![10.0], vec![12.0]];
        let nb = GaussianNb::fit(&x, &[0, 0, 1, 1], 2, &NbParams { var_smoothing: 0.0 });
        assert_eq!(nb.mean, vec![vec![1.0], vec![11.0]]);
        assert_eq!(nb.var, vec![vec![1.0], vec![1.0]]);
        let p = nb.posterior(&[1.0]);
        assert!(p[0] > 0.999);
    }

    #[test]
    fn hand_computed_posterior() {
        // Equal priors, unit variances, means 1 and 11: at x=6 both classes tie.
        let x = vec![vec![0.0], vec![2.0], vec![10.0], vec![12.0]];
        let nb = GaussianNb::fit(&x, &[0, 0, 1, 1], 2, &NbParams { var_smoothing: 0.0 });
        let p = nb.posterior(&[6.0]);
        assert!((p[0] - 0.5).abs() < 1e-12);
        // At x=2: log-odds = ((2-11)^2 - (2-1)^2)/2 = 40.
        let p = nb.posterior(&[2.0]);
        assert!((p[1] - 1.0 / (1.0 + 40f64.exp())).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn posterior_sums_to_one(
            rows in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 3), 4..20),
            probe in proptest::collection::vec(-1e3f64..1e3, 3),
        ) {
            let y: Vec<usize> = (0..rows.len()).map(|i| i % 3).collect();
            let nb = GaussianNb::fit(&rows, &y, 3, &NbParams::default());
            let p = nb.posterior(&probe);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
