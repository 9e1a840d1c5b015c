//! Feed-forward networks with ReLU hidden layers and a sigmoid output.
//!
//! Training is plain mini-batch gradient descent at a fixed learning rate on
//! the mean cross-entropy. Hidden weights initialize from a seeded normal
//! scaled by sqrt(2 / fan_in); the output layer starts at zero, so the
//! untrained network scores everything 0.5. Batch order reshuffles each
//! epoch from the same seeded generator.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{log1p_exp, mix_seed, sigmoid, Dataset, Standardization};
use crate::error::{Error, Result};

/// Dense layer: `weights[out][in]` and one bias per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpLayer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl MlpLayer {
    fn zeros(inputs: usize, outputs: usize) -> MlpLayer {
        MlpLayer {
            weights: vec![vec![0.0; inputs]; outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn he_init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> MlpLayer {
        let scale = (2.0 / inputs as f64).sqrt();
        MlpLayer {
            weights: (0..outputs)
                .map(|_| {
                    (0..inputs)
                        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect(),
            biases: vec![0.0; outputs],
        }
    }
}

/// Per-layer gradient accumulator mirroring [`MlpLayer`].
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

/// The network: hidden layers apply ReLU, the final layer emits one logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNet {
    pub layers: Vec<MlpLayer>,
    pub standardization: Standardization,
}

fn relu(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        x
    }
}

impl MlpNet {
    /// Fresh network for `inputs` features and the given hidden widths.
    pub fn new(
        inputs: usize,
        hidden: &[usize],
        standardization: Standardization,
        rng: &mut ChaCha8Rng,
    ) -> MlpNet {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = inputs;
        for &width in hidden {
            layers.push(MlpLayer::he_init(fan_in, width, rng));
            fan_in = width;
        }
        layers.push(MlpLayer::zeros(fan_in, 1));
        MlpNet {
            layers,
            standardization,
        }
    }

    /// Activations per layer for one standardized input row; the last entry
    /// holds the single output logit.
    fn forward(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for (depth, layer) in self.layers.iter().enumerate() {
            let prev = activations.last().unwrap();
            let is_output = depth + 1 == self.layers.len();
            let out: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.biases)
                .map(|(w, &b)| {
                    let z: f64 = b + w.iter().zip(prev).map(|(wi, xi)| wi * xi).sum::<f64>();
                    if is_output {
                        z
                    } else {
                        relu(z)
                    }
                })
                .collect();
            activations.push(out);
        }
        activations
    }

    /// Logit for one standardized row.
    pub fn logit(&self, input: &[f64]) -> f64 {
        self.forward(input).last().unwrap()[0]
    }

    /// Mean cross-entropy over standardized rows.
    pub fn loss(&self, rows: &[Vec<f64>], labels: &[u8]) -> f64 {
        rows.iter()
            .zip(labels)
            .map(|(row, &y)| {
                let z = self.logit(row);
                log1p_exp(z) - f64::from(y) * z
            })
            .sum::<f64>()
            / rows.len() as f64
    }

    /// Mean loss and parameter gradients over a batch of standardized rows.
    pub fn gradients(&self, rows: &[Vec<f64>], labels: &[u8]) -> (f64, Vec<LayerGrads>) {
        let mut grads: Vec<LayerGrads> = self
            .layers
            .iter()
            .map(|l| LayerGrads {
                weights: vec![vec![0.0; l.weights[0].len()]; l.weights.len()],
                biases: vec![0.0; l.biases.len()],
            })
            .collect();
        let mut total_loss = 0.0;
        let scale = 1.0 / rows.len() as f64;

        for (row, &y) in rows.iter().zip(labels) {
            let activations = self.forward(row);
            let z = activations.last().unwrap()[0];
            total_loss += log1p_exp(z) - f64::from(y) * z;

            // delta at the output: dL/dz = sigmoid(z) - y
            let mut delta = vec![sigmoid(z) - f64::from(y)];
            for depth in (0..self.layers.len()).rev() {
                let inputs = &activations[depth];
                let grad = &mut grads[depth];
                for (unit, &d) in delta.iter().enumerate() {
                    grad.biases[unit] += scale * d;
                    for (j, &a) in inputs.iter().enumerate() {
                        grad.weights[unit][j] += scale * d * a;
                    }
                }
                if depth == 0 {
                    break;
                }
                // backpropagate through the ReLU of the previous layer
                let prev_out = &activations[depth];
                let layer = &self.layers[depth];
                let mut next_delta = vec![0.0; prev_out.len()];
                for (j, nd) in next_delta.iter_mut().enumerate() {
                    if prev_out[j] <= 0.0 {
                        continue;
                    }
                    *nd = delta
                        .iter()
                        .enumerate()
                        .map(|(unit, &d)| d * layer.weights[unit][j])
                        .sum();
                }
                delta = next_delta;
            }
        }
        (total_loss * scale, grads)
    }

    pub fn apply_gradients(&mut self, grads: &[LayerGrads], learning_rate: f64) {
        for (layer, grad) in self.layers.iter_mut().zip(grads) {
            for (w_row, g_row) in layer.weights.iter_mut().zip(&grad.weights) {
                for (w, g) in w_row.iter_mut().zip(g_row) {
                    *w -= learning_rate * g;
                }
            }
            for (b, g) in layer.biases.iter_mut().zip(&grad.biases) {
                *b -= learning_rate * g;
            }
        }
    }

    pub fn predict(&self, x: &Array2<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                let row = self.standardization.apply_row(x.row(i));
                sigmoid(self.logit(&row))
            })
            .collect()
    }
}

pub fn train_mlp(
    data: &Dataset,
    hidden: &[usize],
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    seed: u64,
) -> Result<MlpNet> {
    let n = data.n_rows();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| data.standardization.apply_row(data.x.row(i)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x6d6c70));
    let mut net = MlpNet::new(data.n_features(), hidden, data.standardization.clone(), &mut rng);

    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let batch_rows: Vec<Vec<f64>> = batch.iter().map(|&i| rows[i].clone()).collect();
            let batch_labels: Vec<u8> = batch.iter().map(|&i| data.y[i]).collect();
            let (loss, grads) = net.gradients(&batch_rows, &batch_labels);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "network training diverged at epoch {epoch}"
                )));
            }
            net.apply_gradients(&grads, learning_rate);
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn standardization(p: usize) -> Standardization {
        Standardization {
            means: vec![0.0; p],
            sds: vec![1.0; p],
        }
    }

    fn random_rows(n: usize, p: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<u8>) {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.4))).collect();
        (rows, labels)
    }

    /// Central finite differences over every parameter of the network.
    fn max_gradient_relative_error(hidden: &[usize], seed: u64) -> f64 {
        let p = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = MlpNet::new(p, hidden, standardization(p), &mut rng);
        // nudge the output layer off zero so its upstream gradients are alive
        for w in net.layers.last_mut().unwrap().weights[0].iter_mut() {
            *w = rng.gen_range(-0.5..0.5);
        }
        let (rows, labels) = random_rows(10, p, &mut rng);
        let (_, grads) = net.gradients(&rows, &labels);

        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for depth in 0..net.layers.len() {
            for unit in 0..net.layers[depth].weights.len() {
                for j in 0..net.layers[depth].weights[unit].len() {
                    let orig = net.layers[depth].weights[unit][j];
                    net.layers[depth].weights[unit][j] = orig + eps;
                    let up = net.loss(&rows, &labels);
                    net.layers[depth].weights[unit][j] = orig - eps;
                    let down = net.loss(&rows, &labels);
                    net.layers[depth].weights[unit][j] = orig;
                    let numeric = (up - down) / (2.0 * eps);
                    let analytic = grads[depth].weights[unit][j];
                    let denom = (analytic.abs() + numeric.abs()).max(1e-8);
                    worst = worst.max((analytic - numeric).abs() / denom);
                }
                let orig = net.layers[depth].biases[unit];
                net.layers[depth].biases[unit] = orig + eps;
                let up = net.loss(&rows, &labels);
                net.layers[depth].biases[unit] = orig - eps;
                let down = net.loss(&rows, &labels);
                net.layers[depth].biases[unit] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let analytic = grads[depth].biases[unit];
                let denom = (analytic.abs() + numeric.abs()).max(1e-8);
                worst = worst.max((analytic - numeric).abs() / denom);
            }
        }
        worst
    }

    #[test]
    fn analytic_gradient_matches_finite_differences_nn3() {
        let err = max_gradient_relative_error(&[32, 16, 8], 101);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn analytic_gradient_matches_finite_differences_nn5() {
        let err = max_gradient_relative_error(&[64, 32, 16, 8, 4], 102);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn relu_values() {
        assert_eq!(relu(-1.0), 0.0);
        assert_eq!(relu(2.0), 2.0);
        assert_eq!(relu(0.0), 0.0);
    }

    #[test]
    fn untrained_network_scores_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = MlpNet::new(3, &[32, 16, 8], standardization(3), &mut rng);
        let x = Array2::from_shape_vec((2, 3), vec![0.3, -1.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(net.predict(&x), vec![0.5, 0.5]);
    }

    #[test]
    fn training_is_deterministic_and_learns_a_linear_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 400;
        let mut x = Array2::<f64>::zeros((n, 3));
        for v in x.iter_mut() {
            *v = rng.gen_range(-1.5..1.5);
        }
        let y: Vec<u8> = (0..n)
            .map(|i| u8::from(x[(i, 0)] - 0.5 * x[(i, 1)] > 0.2))
            .collect();
        let data = Dataset::from_training(
            x.clone(),
            y.clone(),
            None,
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let net1 = train_mlp(&data, &[32, 16, 8], 40, 0.05, 32, 7).unwrap();
        let net2 = train_mlp(&data, &[32, 16, 8], 40, 0.05, 32, 7).unwrap();
        assert_eq!(net1.predict(&x), net2.predict(&x));

        // in-sample separation should be clearly better than chance
        let scores = net1.predict(&x);
        let auc = crate::eval::auc(&scores, &y).unwrap().unwrap();
        assert!(auc > 0.9, "in-sample AUC {auc}");
    }

    #[test]
    fn divergent_learning_rate_reports_epoch() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 64;
        let mut x = Array2::<f64>::zeros((n, 2));
        for v in x.iter_mut() {
            *v = rng.gen_range(-1.0..1.0) * 1e4;
        }
        let y: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let mut data =
            Dataset::from_training(x, y, None, vec!["a".into(), "b".into()]).unwrap();
        // zero scale poisons the standardized inputs (x/0 = inf, 0*inf = NaN
        // through the zero output layer), so the first loss is already NaN
        data.standardization = Standardization {
            means: vec![0.0, 0.0],
            sds: vec![0.0, 0.0],
        };
        let result = train_mlp(&data, &[32, 16, 8], 50, 1.0, 8, 3);
        match result {
            Err(Error::Numeric(msg)) => assert!(msg.contains("epoch")),
            Err(other) => panic!("unexpected error {other}"),
            Ok(_) => panic!("expected divergence"),
        }
    }
}
