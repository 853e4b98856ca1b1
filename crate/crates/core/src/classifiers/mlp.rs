use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    /// Drop probability applied after every hidden activation.
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![64, 32, 16],
            dropout: 0.3,
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 50,
        }
    }
}

/// Feed-forward network: ReLU hidden layers, softmax output, cross-entropy loss.
///
/// All weights and biases live in one flat vector; layer `l` stores its
/// `out x in` weight matrix row-major followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

struct Trace {
    /// Layer inputs: `inputs[0]` is the sample, `inputs[l]` the (dropped-out) activation feeding layer `l`.
    inputs: Vec<Vec<f64>>,
    /// Per hidden layer, the derivative of its output w.r.t. its pre-activation.
    slopes: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}

impl Mlp {
    fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// All-zero network with the given layer widths (input first, classes last).
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "network needs input and output layers");
        Mlp {
            sizes: sizes.to_vec(),
            params: vec![0.0; Self::param_count(sizes)],
        }
    }

    /// He-initialized weights, zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        let mut net = Mlp::zeros(sizes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut off = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("valid std");
            for p in &mut net.params[off..off + fan_in * fan_out] {
                *p = normal.sample(&mut rng);
            }
            off += fan_in * fan_out + fan_out;
        }
        net
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(weight offset, bias offset)` of each layer.
    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let o = (off, off + w[0] * w[1]);
                off += w[0] * w[1] + w[1];
                o
            })
            .collect()
    }

    fn forward(&self, x: &[f64], mut dropout: Option<(f64, &mut ChaCha8Rng)>) -> Trace {
        let offsets = self.offsets();
        let layers = offsets.len();
        let mut inputs = vec![x.to_vec()];
        let mut slopes = Vec::with_capacity(layers - 1);
        let mut logits = Vec::new();
        for (l, &(wo, bo)) in offsets.iter().enumerate() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let a = &inputs[l];
            let mut z: Vec<f64> = self.params[bo..bo + n_out].to_vec();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &self.params[wo + o * n_in..wo + (o + 1) * n_in];
                *zo += row.iter().zip(a).map(|(w, v)| w * v).sum::<f64>();
            }
            if l + 1 == layers {
                logits = z;
                break;
            }
            let mut slope = Vec::with_capacity(n_out);
            let mut out = Vec::with_capacity(n_out);
            for v in z {
                let keep = match dropout.as_mut() {
                    Some((rate, rng)) => {
                        if rng.random::<f64>() < *rate {
                            0.0
                        } else {
                            1.0 / (1.0 - *rate)
                        }
                    }
                    None => 1.0,
                };
                let active = if v > 0.0 { keep } else { 0.0 };
                slope.push(active);
                out.push(v * active);
            }
            slopes.push(slope);
            inputs.push(out);
        }
        Trace {
            inputs,
            slopes,
            logits,
        }
    }

    /// Adds the cross-entropy gradient of one traced sample into `grad`.
    fn backward(&self, trace: &Trace, target: usize, scale: f64, grad: &mut [f64]) {
        let offsets = self.offsets();
        let mut delta = softmax(&trace.logits);
        delta[target] -= 1.0;
        for l in (0..offsets.len()).rev() {
            let (wo, bo) = offsets[l];
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let a = &trace.inputs[l];
            for o in 0..n_out {
                let d = delta[o] * scale;
                grad[bo + o] += d;
                if d != 0.0 {
                    for (g, v) in grad[wo + o * n_in..wo + (o + 1) * n_in].iter_mut().zip(a) {
                        *g += d * v;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let slope = &trace.slopes[l - 1];
            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                if delta[o] == 0.0 {
                    continue;
                }
                let row = &self.params[wo + o * n_in..wo + (o + 1) * n_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += delta[o] * w;
                }
            }
            for (p, s) in prev.iter_mut().zip(slope) {
                *p *= s;
            }
            delta = prev;
        }
    }

    /// Mean cross-entropy over a batch, without dropout.
    pub fn loss(&self, x: &[Vec<f64>], y: &[usize]) -> f64 {
        let total: f64 = x
            .iter()
            .zip(y)
            .map(|(row, &t)| cross_entropy(&self.forward(row, None).logits, t))
            .sum();
        total / x.len() as f64
    }

    /// Gradient of [`Mlp::loss`] with respect to every parameter, via back-propagation.
    pub fn gradient(&self, x: &[Vec<f64>], y: &[usize]) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / x.len() as f64;
        for (row, &t) in x.iter().zip(y) {
            let trace = self.forward(row, None);
            self.backward(&trace, t, scale, &mut grad);
        }
        grad
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.forward(x, None).logits)
    }

    /// Mini-batch training with Adam and inverted dropout on hidden layers.
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &MlpParams, seed: u64) -> Self {
        let mut sizes = vec![x[0].len()];
        sizes.extend_from_slice(&params.hidden);
        sizes.push(n_classes);
        let mut net = Mlp::new(&sizes, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);

        let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let mut m = vec![0.0; net.params.len()];
        let mut v = vec![0.0; net.params.len()];
        let mut step = 0i32;
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut grad = vec![0.0; net.params.len()];

        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(params.batch_size) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let scale = 1.0 / batch.len() as f64;
                for &i in batch {
                    let dropout = (params.dropout > 0.0).then_some((params.dropout, &mut rng));
                    let trace = net.forward(&x[i], dropout);
                    net.backward(&trace, y[i], scale, &mut grad);
                }
                step += 1;
                let c1 = 1.0 - beta1.powi(step);
                let c2 = 1.0 - beta2.powi(step);
                for (((p, g), mi), vi) in net.params.iter_mut().zip(&grad).zip(&mut m).zip(&mut v) {
                    *mi = beta1 * *mi + (1.0 - beta1) * g;
                    *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                    *p -= params.learning_rate * (*mi / c1) / ((*vi / c2).sqrt() + eps);
                }
            }
        }
        net
    }
}

/// Largest relative deviation between back-propagated and central
/// finite-difference gradients (step 1e-5) over all parameters.
///
/// Relative deviation is `|a - n| / max(|a|, |n|, 1e-7)`; the floor keeps
/// parameters whose true gradient is zero (inactive ReLU paths) from
/// reporting round-off as relative error.
pub fn gradient_check(net: &Mlp, x: &[Vec<f64>], y: &[usize]) -> f64 {
    const STEP: f64 = 1e-5;
    let analytic = net.gradient(x, y);
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = probe.params[i];
        probe.params[i] = orig + STEP;
        let up = probe.loss(x, y);
        probe.params[i] = orig - STEP;
        let down = probe.loss(x, y);
        probe.params[i] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let denom = a.abs().max(numeric.abs()).max(1e-7);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_batch(n: usize, dim: usize, classes: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y = (0..n).map(|i| i % classes).collect();
        (x, y)
    }

    #[test]
    fn gradient_check_small_network() {
        for seed in 0..5 {
            // Zero biases put units fed by dead layers exactly on the ReLU kink;
            // check at a generic point instead.
            let mut net = Mlp::new(&[2, 3, 3, 3, 2], seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 50);
            for p in net.params_mut() {
                *p += rng.random_range(-0.1..0.1);
            }
            let (x, y) = random_batch(6, 2, 2, seed + 100);
            let dev = gradient_check(&net, &x, &y);
            assert!(dev < 1e-4, "seed {seed}: deviation {dev}");
        }
    }

    #[test]
    fn zero_network_has_exchangeable_hidden_units() {
        let net = Mlp::zeros(&[2, 3, 3, 3, 2]);
        let x = vec![vec![0.5, 0.5], vec![-0.5, -0.5]];
        let y = vec![0, 1];
        let g = net.gradient(&x, &y);
        let offsets = net.offsets();
        for (l, &(wo, bo)) in offsets.iter().enumerate() {
            let (n_in, n_out) = (net.sizes[l], net.sizes[l + 1]);
            if l + 1 == offsets.len() {
                break;
            }
            for o in 1..n_out {
                for i in 0..n_in {
                    assert!((g[wo + o * n_in + i] - g[wo + i]).abs() < 1e-10);
                }
                assert!((g[bo + o] - g[bo]).abs() < 1e-10);
            }
        }
        // Uniform softmax at zero weights: output bias gradient is p - onehot averaged.
        let (_, last_bias) = offsets[offsets.len() - 1];
        assert!((g[last_bias] - 0.0).abs() < 1e-12);
        assert!(net.loss(&x, &y) - 2f64.ln() < 1e-12);
    }

    #[test]
    fn converges_on_separable_toy() {
        let x = vec![vec![-2.0, -1.0], vec![-1.5, -2.0], vec![2.0, 1.0], vec![1.0, 2.5]];
        let y = vec![0, 0, 1, 1];
        let params = MlpParams {
            hidden: vec![4, 4, 4],
            dropout: 0.0,
            learning_rate: 1e-2,
            batch_size: 4,
            epochs: 8000,
        };
        let net = Mlp::fit(&x, &y, 2, &params, 3);
        let g = net.gradient(&x, &y);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "gradient norm {norm}");
        assert!(net.loss(&x, &y) < 1e-3);
    }

    #[test]
    fn dropout_training_is_seeded() {
        let (x, y) = random_batch(20, 3, 2, 1);
        let p = MlpParams { hidden: vec![5, 5, 5], epochs: 3, ..MlpParams::default() };
        assert_eq!(Mlp::fit(&x, &y, 2, &p, 8), Mlp::fit(&x, &y, 2, &p, 8));
        assert_ne!(Mlp::fit(&x, &y, 2, &p, 8), Mlp::fit(&x, &y, 2, &p, 9));
    }

    #[test]
    fn softmax_and_loss_agree() {
        let z = [1.0, 2.0, 0.5];
        let p = softmax(&z);
        assert!((cross_entropy(&z, 1) + p[1].ln()).abs() < 1e-12);
    }
}
