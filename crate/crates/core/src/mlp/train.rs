//! Network training: Adam over mini-batches with early stopping on a
//! stratified validation carve-out and best-weights restore.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::stratified::stratified_split_indices;
use crate::error::{Error, Result};
use crate::mlp::MlpModel;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    /// Stratified validation carve-out fraction.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            batch_size: 32,
            max_epochs: 500,
            patience: 10,
            validation_fraction: 0.10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Epochs actually run (1-based count).
    pub epochs_run: usize,
    /// Epoch whose weights were restored (1-based).
    pub best_epoch: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Wait,
    Stop,
}

/// Patience-based stopping on a monitored loss. Improvement is a strict
/// decrease below the best value seen so far.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    patience: usize,
    best_loss: f64,
    best_epoch: usize,
    stale: usize,
    epoch: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> EarlyStopper {
        assert!(patience >= 1, "patience must be >= 1");
        EarlyStopper {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
            epoch: 0,
        }
    }

    pub fn observe(&mut self, loss: f64) -> StopDecision {
        self.epoch += 1;
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_epoch = self.epoch;
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Wait
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }
}

/// Derives an independent RNG stream from a seed and a purpose tag
/// (splitmix64 finalizer).
fn substream(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

const TAG_VAL_SPLIT: u64 = 1;
const TAG_SHUFFLE: u64 = 2;

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    fn new(n: usize) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Trains the model on an already-standardized matrix. Returns the model
/// with the best-epoch weights restored, plus the loss history.
///
/// Deterministic for a fixed seed: the validation carve-out and each
/// epoch's shuffle come from seeded substreams, and training is
/// single-threaded.
pub fn train(
    model: &MlpModel,
    xs: &[f64],
    ys: &[u8],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    if ys.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if xs.len() != ys.len() * model.n_features {
        return Err(Error::Dimension {
            expected: ys.len() * model.n_features,
            got: xs.len(),
        });
    }
    if let Some(&bad) = ys.iter().find(|&&y| y as usize >= model.n_classes) {
        return Err(Error::Argument(format!(
            "label {bad} out of range for {} classes",
            model.n_classes
        )));
    }
    if !(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0) {
        return Err(Error::Argument(
            "validation fraction must be in (0, 1)".into(),
        ));
    }

    let mut history = TrainHistory::default();

    let split = stratified_split_indices(
        ys,
        model.n_classes,
        cfg.validation_fraction,
        substream(cfg.seed, TAG_VAL_SPLIT),
    )?;
    if split.singleton_classes > 0 {
        history.warnings.push(format!(
            "{} singleton class(es) kept in the training partition only",
            split.singleton_classes
        ));
    }
    let n_feat = model.n_features;
    let gather = |idx: &[usize]| -> (Vec<f64>, Vec<u8>) {
        let mut gx = Vec::with_capacity(idx.len() * n_feat);
        let mut gy = Vec::with_capacity(idx.len());
        for &i in idx {
            gx.extend_from_slice(&xs[i * n_feat..(i + 1) * n_feat]);
            gy.push(ys[i]);
        }
        (gx, gy)
    };
    let (train_x, train_y) = gather(&split.train);
    let (val_x, val_y) = gather(&split.test);
    let monitor_train = val_y.is_empty();
    if monitor_train {
        history
            .warnings
            .push("validation carve-out is empty; monitoring training loss".into());
    }

    let mut net = model.to_net();
    let mut adam = Adam::new(net.params.len());
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best_params = net.params.clone();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(substream(cfg.seed, TAG_SHUFFLE));
    let mut order: Vec<usize> = (0..train_y.len()).collect();
    let mut batch_x = Vec::with_capacity(cfg.batch_size * n_feat);
    let mut batch_y = Vec::with_capacity(cfg.batch_size);

    for _epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.extend_from_slice(&train_x[i * n_feat..(i + 1) * n_feat]);
                batch_y.push(train_y[i]);
            }
            let (loss, grad) = net.loss_and_grad(&batch_x, &batch_y);
            adam.step(&mut net.params, &grad, cfg);
            epoch_loss += loss * chunk.len() as f64;
        }
        let train_loss = epoch_loss / train_y.len() as f64;
        let val_loss = if monitor_train {
            train_loss
        } else {
            net.loss(&val_x, &val_y)
        };
        history.train_loss.push(train_loss);
        history.val_loss.push(val_loss);

        match stopper.observe(val_loss) {
            StopDecision::Improved => best_params.copy_from_slice(&net.params),
            StopDecision::Wait => {}
            StopDecision::Stop => break,
        }
    }

    history.epochs_run = history.val_loss.len();
    history.best_epoch = stopper.best_epoch();
    net.params = best_params;
    let trained = MlpModel::from_net(&net, model.scaler.clone(), model.label_names.clone());
    Ok((trained, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{build_mlp, ArchSpec};
    use rand::Rng;

    #[test]
    fn stopper_forced_sequence() {
        // Losses 1.0, 0.5, then 0.6 forever with patience 10: stops at
        // epoch 12, best epoch 2.
        let mut stopper = EarlyStopper::new(10);
        assert_eq!(stopper.observe(1.0), StopDecision::Improved);
        assert_eq!(stopper.observe(0.5), StopDecision::Improved);
        let mut stopped_at = 0;
        for epoch in 3..=100 {
            if stopper.observe(0.6) == StopDecision::Stop {
                stopped_at = epoch;
                break;
            }
        }
        assert_eq!(stopped_at, 12);
        assert_eq!(stopper.best_epoch(), 2);
        assert_eq!(stopper.best_loss(), 0.5);
    }

    #[test]
    fn stopper_never_triggers_on_strict_improvement() {
        let mut stopper = EarlyStopper::new(10);
        for epoch in 1..=50 {
            let loss = 1.0 / epoch as f64;
            assert_eq!(stopper.observe(loss), StopDecision::Improved);
        }
        assert_eq!(stopper.best_epoch(), 50);
    }

    #[test]
    fn equal_loss_is_not_improvement() {
        let mut stopper = EarlyStopper::new(2);
        stopper.observe(0.5);
        assert_eq!(stopper.observe(0.5), StopDecision::Wait);
        assert_eq!(stopper.observe(0.5), StopDecision::Stop);
    }

    /// Two Gaussian blobs, linearly separable by a margin.
    fn blobs(n_per_class: usize, seed: u64) -> (Vec<f64>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for c in 0..2u8 {
            let center = if c == 0 { -2.0 } else { 2.0 };
            for _ in 0..n_per_class {
                for _ in 0..4 {
                    xs.push(center + rng.gen::<f64>() - 0.5);
                }
                ys.push(c);
            }
        }
        (xs, ys)
    }

    /// Logistic-regression oracle: plain gradient descent on the same
    /// data confirms linear separability before the MLP is blamed.
    fn logistic_accuracy(xs: &[f64], ys: &[u8], n_feat: usize) -> f64 {
        let n = ys.len();
        let mut w = vec![0f64; n_feat + 1];
        for _ in 0..300 {
            let mut grad = vec![0f64; n_feat + 1];
            for i in 0..n {
                let row = &xs[i * n_feat..(i + 1) * n_feat];
                let z: f64 = w[n_feat] + row.iter().zip(&w[..n_feat]).map(|(x, wi)| x * wi).sum::<f64>();
                let p = 1.0 / (1.0 + (-z).exp());
                let d = p - ys[i] as f64;
                for j in 0..n_feat {
                    grad[j] += d * row[j];
                }
                grad[n_feat] += d;
            }
            for j in 0..=n_feat {
                w[j] -= 0.5 * grad[j] / n as f64;
            }
        }
        let mut correct = 0;
        for i in 0..n {
            let row = &xs[i * n_feat..(i + 1) * n_feat];
            let z: f64 = w[n_feat] + row.iter().zip(&w[..n_feat]).map(|(x, wi)| x * wi).sum::<f64>();
            if (z > 0.0) as u8 == ys[i] {
                correct += 1;
            }
        }
        correct as f64 / n as f64
    }

    #[test]
    fn separable_blobs_reach_99_percent() {
        let (xs, ys) = blobs(150, 7);
        assert!(
            logistic_accuracy(&xs, &ys, 4) >= 0.99,
            "oracle says blobs are not separable"
        );

        let model = build_mlp(&ArchSpec::Custom(vec![8, 8]), 4, 2, 0).unwrap();
        let cfg = TrainConfig {
            max_epochs: 60,
            ..Default::default()
        };
        let (trained, history) = train(&model, &xs, &ys, &cfg).unwrap();
        let correct = ys
            .iter()
            .enumerate()
            .filter(|(i, &y)| trained.predict(&xs[i * 4..(i + 1) * 4]).unwrap() == y)
            .count();
        assert!(
            correct as f64 / ys.len() as f64 >= 0.99,
            "train accuracy {} after {} epochs",
            correct as f64 / ys.len() as f64,
            history.epochs_run
        );
    }

    #[test]
    fn training_is_deterministic() {
        let (xs, ys) = blobs(60, 3);
        let model = build_mlp(&ArchSpec::Custom(vec![6]), 4, 2, 1).unwrap();
        let cfg = TrainConfig {
            max_epochs: 10,
            ..Default::default()
        };
        let (a, ha) = train(&model, &xs, &ys, &cfg).unwrap();
        let (b, hb) = train(&model, &xs, &ys, &cfg).unwrap();
        assert_eq!(a.serialize(), b.serialize());
        assert_eq!(ha.train_loss, hb.train_loss);
        assert_eq!(ha.val_loss, hb.val_loss);
    }

    #[test]
    fn early_stop_invariants_hold_on_real_run() {
        let (xs, ys) = blobs(80, 11);
        let model = build_mlp(&ArchSpec::Custom(vec![4]), 4, 2, 2).unwrap();
        let cfg = TrainConfig {
            max_epochs: 200,
            patience: 5,
            ..Default::default()
        };
        let (_, history) = train(&model, &xs, &ys, &cfg).unwrap();
        assert!(history.epochs_run <= history.best_epoch + cfg.patience);
        let min_val = history.val_loss.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(history.val_loss[history.best_epoch - 1], min_val);
    }

    #[test]
    fn rejects_out_of_range_labels() {
        let model = build_mlp(&ArchSpec::Custom(vec![4]), 2, 2, 0).unwrap();
        let err = train(&model, &[0.0, 1.0], &[5], &TrainConfig::default());
        assert!(err.is_err());
    }
}
