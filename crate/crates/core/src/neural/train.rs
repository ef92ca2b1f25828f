//! Mini-batch Adam on mean squared error.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::{flatten_grads, mse, MlpModel, Mode};
use super::{featurize, Sample, TargetEncoding};
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Training stops after this many epochs when set.
    pub early_stop: Option<usize>,
    /// Fraction of samples used for training, in `(0, 1)`.
    pub split: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub encoding: TargetEncoding,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 64,
            max_epochs: 300,
            early_stop: Some(110),
            split: 0.9,
            seed: 0,
            hidden: vec![256, 128],
            encoding: TargetEncoding::UnitCircle,
        }
    }
}

impl TrainConfig {
    /// `count` hidden layers: 256, 128, then 64, 32, 16, ...
    pub fn with_hidden_layers(mut self, count: usize) -> Self {
        self.hidden = (0..count).map(|i| (256usize >> i).max(8)).collect();
        self
    }

    pub fn epochs(&self) -> usize {
        self.early_stop.map_or(self.max_epochs, |e| e.min(self.max_epochs))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad("split must lie in (0, 1)");
        }
        if self.epochs() == 0 {
            return bad("at least one epoch is required");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be finite and nonnegative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.adam_eps > 0.0) {
            return bad("Adam moments need beta in [0, 1) and eps > 0");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }
}

/// Per-epoch losses. `train_loss` averages the train-mode batch losses
/// weighted by batch size; `test_loss` is the infer-mode loss on the held-out
/// split after the epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub test_loss: Vec<f64>,
}

impl History {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }

    pub fn final_test_loss(&self) -> Option<f64> {
        self.test_loss.last().copied()
    }
}

/// Adam state for every trainable tensor of one model.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(model: &mut MlpModel, cfg: &TrainConfig) -> Self {
        let shapes: Vec<usize> = model.parameters_mut().iter().map(|p| p.len()).collect();
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_eps,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn update(&mut self, params: Vec<&mut [f64]>, grads: &[&[f64]]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

/// Consecutive `[start, end)` ranges of at most `batch` items. A trailing
/// batch of one is merged into its predecessor because batch statistics of a
/// single sample are degenerate.
pub fn batch_ranges(len: usize, batch: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..len).step_by(batch.max(1)).map(|s| (s, (s + batch).min(len))).collect();
    if out.len() >= 2 && out[out.len() - 1].1 - out[out.len() - 1].0 == 1 {
        let (_, end) = out.pop().expect("nonempty");
        let last = out.len() - 1;
        out[last].1 = end;
    }
    out
}

/// Trains `model` in place. Inputs and targets hold one sample per column.
pub fn fit(
    model: &mut MlpModel,
    train_x: &DMatrix<f64>,
    train_t: &DMatrix<f64>,
    test_x: &DMatrix<f64>,
    test_t: &DMatrix<f64>,
    cfg: &TrainConfig,
) -> Result<History> {
    cfg.validate()?;
    let n = train_x.ncols();
    if n < 2 || test_x.ncols() == 0 {
        return Err(Error::Dataset(format!(
            "need at least 2 training and 1 test sample, got {n} and {}",
            test_x.ncols()
        )));
    }
    if train_t.ncols() != n || test_t.ncols() != test_x.ncols() {
        return Err(Error::DimensionMismatch("inputs and targets differ in sample count".into()));
    }
    let mut rng = SimRng::new(cfg.seed);
    let mut adam = Adam::new(model, cfg);
    let mut order: Vec<usize> = (0..n).collect();
    let ranges = batch_ranges(n, cfg.batch_size);
    let mut history = History::default();

    for epoch in 1..=cfg.epochs() {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for &(s, e) in &ranges {
            let idx = &order[s..e];
            let x = train_x.select_columns(idx);
            let t = train_t.select_columns(idx);
            let (pred, tape) = model.forward_batch(&x, Mode::Train)?;
            let (loss, grad) = mse(&pred, &t);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            total += loss * idx.len() as f64;
            let grads = model.backward(&tape, &grad);
            model.update_running_stats(&tape);
            adam.update(model.parameters_mut(), &flatten_grads(&grads));
        }
        let (test_loss, _) = mse(&model.predict(test_x)?, test_t);
        if !test_loss.is_finite() {
            return Err(Error::Divergence { epoch, loss: test_loss });
        }
        history.train_loss.push(total / n as f64);
        history.test_loss.push(test_loss);
    }
    Ok(history)
}

fn stack(samples: &[Sample], encoding: TargetEncoding) -> (DMatrix<f64>, DMatrix<f64>) {
    let xs: Vec<Vec<f64>> = samples.iter().map(|s| featurize(&s.channels, s.tx_power)).collect();
    let ts: Vec<Vec<f64>> = samples.iter().map(|s| encoding.encode(&s.target_theta)).collect();
    let to_matrix = |cols: &[Vec<f64>]| {
        let rows = cols.first().map_or(0, Vec::len);
        DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
    };
    (to_matrix(&xs), to_matrix(&ts))
}

/// Splits `data` in order (first `split` fraction trains), builds the
/// default architecture and trains it.
pub fn train(data: &[Sample], cfg: &TrainConfig) -> Result<(MlpModel, History)> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::Dataset(format!("need at least 2 samples, got {}", data.len())));
    }
    let cut = (cfg.split * data.len() as f64).round() as usize;
    if cut == 0 || cut == data.len() {
        return Err(Error::Dataset(format!("split {} of {} samples leaves an empty side", cfg.split, data.len())));
    }
    train_on(&data[..cut], &data[cut..], cfg)
}

/// Trains the default architecture on explicit train and test sets; the
/// split fraction in `cfg` is ignored.
pub fn train_on(train_set: &[Sample], test_set: &[Sample], cfg: &TrainConfig) -> Result<(MlpModel, History)> {
    cfg.validate()?;
    let first = train_set
        .first()
        .ok_or_else(|| Error::Dataset("empty training set".into()))?;
    let (m, n) = (first.channels.antennas(), first.channels.elements());
    if train_set
        .iter()
        .chain(test_set)
        .any(|s| s.channels.antennas() != m || s.channels.elements() != n || s.target_theta.len() != n)
    {
        return Err(Error::Dataset("samples disagree on system dimensions".into()));
    }
    let (train_x, train_t) = stack(train_set, cfg.encoding);
    let (test_x, test_t) = stack(test_set, cfg.encoding);
    let mut model = MlpModel::new(train_x.nrows(), &cfg.hidden, n, cfg.encoding, &mut SimRng::new(cfg.seed))?;
    let history = fit(&mut model, &train_x, &train_t, &test_x, &test_t, cfg)?;
    Ok((model, history))
}
