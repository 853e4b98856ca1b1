use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrParams {
    /// L2 penalty; the objective is mean log-loss + `l2 / (2n) * ||w||^2`.
    pub l2: f64,
    /// Stop once the largest gradient component falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LrParams {
    fn default() -> Self {
        LrParams {
            l2: 1.0,
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

/// Binary logistic model: `P(positive | x) = sigmoid(w.x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLogistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl BinaryLogistic {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    fn objective(&self, x: &[Vec<f64>], t: &[f64], l2: f64) -> f64 {
        let n = x.len() as f64;
        let loss: f64 = x
            .iter()
            .zip(t)
            .map(|(row, &ti)| {
                let z = self.decision(row);
                softplus(z) - ti * z
            })
            .sum();
        loss / n + l2 / (2.0 * n) * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    fn gradient(&self, x: &[Vec<f64>], t: &[f64], l2: f64) -> (Vec<f64>, f64) {
        let n = x.len() as f64;
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = 0.0;
        for (row, &ti) in x.iter().zip(t) {
            let r = sigmoid(self.decision(row)) - ti;
            gb += r;
            for (g, v) in gw.iter_mut().zip(row) {
                *g += r * v;
            }
        }
        for (g, w) in gw.iter_mut().zip(&self.weights) {
            *g = *g / n + l2 / n * w;
        }
        (gw, gb / n)
    }

    /// Full-batch gradient descent with a backtracking (Armijo) step size.
    pub fn fit(x: &[Vec<f64>], targets: &[f64], params: &LrParams) -> Self {
        let dim = x[0].len();
        let mut model = BinaryLogistic {
            weights: vec![0.0; dim],
            bias: 0.0,
        };
        let mut step = 1.0;
        let mut f = model.objective(x, targets, params.l2);
        for _ in 0..params.max_iter {
            let (gw, gb) = model.gradient(x, targets, params.l2);
            let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
            if gmax < params.tol {
                break;
            }
            let gnorm2 = gb * gb + gw.iter().map(|g| g * g).sum::<f64>();
            step *= 2.0;
            loop {
                let trial = BinaryLogistic {
                    weights: model.weights.iter().zip(&gw).map(|(w, g)| w - step * g).collect(),
                    bias: model.bias - step * gb,
                };
                let ft = trial.objective(x, targets, params.l2);
                if ft <= f - 0.5 * step * gnorm2 || step < 1e-12 {
                    model = trial;
                    f = ft;
                    break;
                }
                step *= 0.5;
            }
            if step < 1e-12 {
                break;
            }
        }
        model
    }
}

/// Logistic regression; one model for two classes (positive = second label),
/// one-vs-rest otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub models: Vec<BinaryLogistic>,
    pub n_classes: usize,
}

impl LogisticRegression {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &LrParams) -> Self {
        let fit_for = |positive: usize| {
            let t: Vec<f64> = y.iter().map(|&c| f64::from(u8::from(c == positive))).collect();
            BinaryLogistic::fit(x, &t, params)
        };
        let models = if n_classes == 2 {
            vec![fit_for(1)]
        } else {
            (0..n_classes).map(fit_for).collect()
        };
        LogisticRegression { models, n_classes }
    }

    /// Builds a binary model from explicit parameters.
    pub fn binary(weights: Vec<f64>, bias: f64) -> Self {
        LogisticRegression {
            models: vec![BinaryLogistic { weights, bias }],
            n_classes: 2,
        }
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        if self.n_classes == 2 {
            let p = sigmoid(self.models[0].decision(x));
            return vec![1.0 - p, p];
        }
        let raw: Vec<f64> = self.models.iter().map(|m| sigmoid(m.decision(x))).collect();
        let z: f64 = raw.iter().sum();
        if z > 0.0 {
            raw.into_iter().map(|p| p / z).collect()
        } else {
            vec![1.0 / self.n_classes as f64; self.n_classes]
        }
    }
}
