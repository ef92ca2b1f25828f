//! Layers, forward/backward passes and finite-difference gradient checking.
//!
//! Batches are stored column-wise: a `width × batch` matrix holds one sample
//! per column.

use nalgebra::{DMatrix, DVector};

use super::TargetEncoding;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Epsilon of the input normalization. Raw channel features have variances
/// near 1e-10, so the usual 1e-3/1e-5 would swamp them.
pub const INPUT_BN_EPS: f64 = 1e-20;
pub const HIDDEN_BN_EPS: f64 = 1e-5;
/// Weight of the old value in the running-statistics update.
pub const BN_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `outputs × inputs`
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
    pub relu: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: DVector<f64>,
    pub beta: DVector<f64>,
    pub running_mean: DVector<f64>,
    /// Always positive.
    pub running_var: DVector<f64>,
    pub eps: f64,
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    BatchNorm(BatchNorm),
}

impl Layer {
    pub fn input_width(&self) -> usize {
        match self {
            Layer::Dense(d) => d.w.ncols(),
            Layer::BatchNorm(b) => b.gamma.len(),
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            Layer::Dense(d) => d.w.nrows(),
            Layer::BatchNorm(b) => b.gamma.len(),
        }
    }
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot(inputs: usize, outputs: usize, relu: bool, rng: &mut SimRng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            w: DMatrix::from_fn(outputs, inputs, |_, _| limit * (2.0 * rng.uniform() - 1.0)),
            b: DVector::zeros(outputs),
            relu,
        }
    }
}

impl BatchNorm {
    pub fn identity(width: usize, eps: f64) -> Self {
        Self {
            gamma: DVector::from_element(width, 1.0),
            beta: DVector::zeros(width),
            running_mean: DVector::zeros(width),
            running_var: DVector::from_element(width, 1.0),
            eps,
            momentum: BN_MOMENTUM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics.
    Train,
    /// Running statistics.
    Infer,
}

/// Multilayer perceptron mapping a feature vector to an encoded phase vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub encoding: TargetEncoding,
    pub elements: usize,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub enum TapeEntry {
    Dense { input: DMatrix<f64>, pre: DMatrix<f64> },
    BatchNorm { xhat: DMatrix<f64>, inv_std: DVector<f64>, mean: DVector<f64>, var: DVector<f64> },
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerGrad {
    Dense { w: DMatrix<f64>, b: DVector<f64> },
    BatchNorm { gamma: DVector<f64>, beta: DVector<f64> },
}

impl LayerGrad {
    fn slices(&self) -> Vec<&[f64]> {
        match self {
            LayerGrad::Dense { w, b } => vec![w.as_slice(), b.as_slice()],
            LayerGrad::BatchNorm { gamma, beta } => vec![gamma.as_slice(), beta.as_slice()],
        }
    }
}

/// Gradients of every trainable tensor, in the order of [`MlpModel::parameters_mut`].
pub fn flatten_grads(grads: &[LayerGrad]) -> Vec<&[f64]> {
    grads.iter().flat_map(LayerGrad::slices).collect()
}

fn add_column(m: &mut DMatrix<f64>, v: &DVector<f64>) {
    for mut col in m.column_iter_mut() {
        col += v;
    }
}

impl MlpModel {
    /// `input BN → [Dense + ReLU → BN] × hidden → Dense (linear)`.
    pub fn new(input_width: usize, hidden: &[usize], elements: usize, encoding: TargetEncoding, rng: &mut SimRng) -> Result<Self> {
        if input_width == 0 || elements == 0 || hidden.contains(&0) {
            return Err(Error::InvalidParameter("layer widths must be positive".into()));
        }
        let mut layers = vec![Layer::BatchNorm(BatchNorm::identity(input_width, INPUT_BN_EPS))];
        let mut width = input_width;
        for &h in hidden {
            layers.push(Layer::Dense(Dense::glorot(width, h, true, rng)));
            layers.push(Layer::BatchNorm(BatchNorm::identity(h, HIDDEN_BN_EPS)));
            width = h;
        }
        layers.push(Layer::Dense(Dense::glorot(width, encoding.width(elements), false, rng)));
        Self::from_layers(layers, encoding, elements)
    }

    /// Checks that widths chain and the output matches the encoding.
    pub fn from_layers(layers: Vec<Layer>, encoding: TargetEncoding, elements: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("model needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].output_width() != pair[1].input_width() {
                return Err(Error::DimensionMismatch(format!(
                    "layer widths do not chain: {} -> {}",
                    pair[0].output_width(),
                    pair[1].input_width()
                )));
            }
        }
        let out = layers[layers.len() - 1].output_width();
        if out != encoding.width(elements) {
            return Err(Error::DimensionMismatch(format!(
                "output width {out} does not match encoding width {}",
                encoding.width(elements)
            )));
        }
        for layer in &layers {
            if let Layer::BatchNorm(bn) = layer {
                if bn.running_var.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::InvalidParameter("running variance must be positive".into()));
                }
            }
        }
        Ok(Self { layers, encoding, elements })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].output_width()
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, Layer::Dense(_))).count() - 1
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => d.w.len() + d.b.len(),
                Layer::BatchNorm(b) => 2 * b.gamma.len(),
            })
            .sum()
    }

    /// Every trainable tensor: dense weights and biases, batch-norm scale and shift.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.w.as_mut_slice());
                    out.push(d.b.as_mut_slice());
                }
                Layer::BatchNorm(b) => {
                    out.push(b.gamma.as_mut_slice());
                    out.push(b.beta.as_mut_slice());
                }
            }
        }
        out
    }

    fn check_input(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.input_width() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} features, model expects {}",
                x.nrows(),
                self.input_width()
            )));
        }
        Ok(())
    }

    /// Batched forward pass. The tape is empty in infer mode.
    pub fn forward_batch(&self, x: &DMatrix<f64>, mode: Mode) -> Result<(DMatrix<f64>, Vec<TapeEntry>)> {
        self.check_input(x)?;
        let mut h = x.clone();
        let mut tape = Vec::with_capacity(self.layers.len());
        let batch = x.ncols() as f64;
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    let mut pre = &d.w * &h;
                    add_column(&mut pre, &d.b);
                    let out = if d.relu { pre.map(|v| v.max(0.0)) } else { pre.clone() };
                    if mode == Mode::Train {
                        tape.push(TapeEntry::Dense { input: h, pre });
                    }
                    h = out;
                }
                Layer::BatchNorm(bn) => {
                    let (mean, var) = match mode {
                        Mode::Train => {
                            let mean = h.column_mean();
                            let mut var = DVector::zeros(h.nrows());
                            for col in h.column_iter() {
                                for i in 0..h.nrows() {
                                    var[i] += (col[i] - mean[i]).powi(2);
                                }
                            }
                            (mean, var / batch)
                        }
                        Mode::Infer => (bn.running_mean.clone(), bn.running_var.clone()),
                    };
                    let inv_std = var.map(|v| 1.0 / (v + bn.eps).sqrt());
                    let mut xhat = h.clone();
                    for mut col in xhat.column_iter_mut() {
                        for i in 0..col.len() {
                            col[i] = (col[i] - mean[i]) * inv_std[i];
                        }
                    }
                    let mut out = xhat.clone();
                    for mut col in out.column_iter_mut() {
                        for i in 0..col.len() {
                            col[i] = bn.gamma[i] * col[i] + bn.beta[i];
                        }
                    }
                    if mode == Mode::Train {
                        tape.push(TapeEntry::BatchNorm { xhat, inv_std, mean, var });
                    }
                    h = out;
                }
            }
        }
        Ok((h, tape))
    }

    /// Infer-mode forward pass on a batch.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.forward_batch(x, Mode::Infer)?.0)
    }

    /// Single-sample forward pass returning the raw network output.
    pub fn forward(&self, x: &[f64], mode: Mode) -> Result<Vec<f64>> {
        let xm = DMatrix::from_column_slice(x.len(), 1, x);
        let (out, _) = self.forward_batch(&xm, mode)?;
        Ok(out.as_slice().to_vec())
    }

    /// Predicted phases (radians, unwrapped) for one feature vector.
    pub fn predict_theta(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.encoding.decode(&self.forward(x, Mode::Infer)?))
    }

    /// Back-propagates `grad_out` (gradient of the loss w.r.t. the output).
    pub fn backward(&self, tape: &[TapeEntry], grad_out: &DMatrix<f64>) -> Vec<LayerGrad> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for (layer, entry) in self.layers.iter().zip(tape).rev() {
            match (layer, entry) {
                (Layer::Dense(d), TapeEntry::Dense { input, pre }) => {
                    if d.relu {
                        g.zip_apply(pre, |gi, p| {
                            if p <= 0.0 {
                                *gi = 0.0;
                            }
                        });
                    }
                    let gw = &g * input.transpose();
                    let gb = g.column_sum();
                    g = d.w.transpose() * &g;
                    grads.push(LayerGrad::Dense { w: gw, b: gb });
                }
                (Layer::BatchNorm(bn), TapeEntry::BatchNorm { xhat, inv_std, .. }) => {
                    let batch = g.ncols() as f64;
                    let mut dgamma = DVector::zeros(bn.gamma.len());
                    let dbeta = g.column_sum();
                    for (gc, xc) in g.column_iter().zip(xhat.column_iter()) {
                        for i in 0..gc.len() {
                            dgamma[i] += gc[i] * xc[i];
                        }
                    }
                    // dx = inv_std / B * (B dxhat - sum dxhat - xhat * sum(dxhat xhat))
                    let sum_dxhat = dbeta.component_mul(&bn.gamma);
                    let sum_dxhat_xhat = dgamma.component_mul(&bn.gamma);
                    let mut dx = g.clone();
                    for (mut col, xc) in dx.column_iter_mut().zip(xhat.column_iter()) {
                        for i in 0..col.len() {
                            let dxhat = col[i] * bn.gamma[i];
                            col[i] = inv_std[i] / batch * (batch * dxhat - sum_dxhat[i] - xc[i] * sum_dxhat_xhat[i]);
                        }
                    }
                    g = dx;
                    grads.push(LayerGrad::BatchNorm { gamma: dgamma, beta: dbeta });
                }
                _ => unreachable!("tape does not match layers"),
            }
        }
        grads.reverse();
        grads
    }

    /// Moves running statistics towards the batch statistics stored on the tape.
    pub fn update_running_stats(&mut self, tape: &[TapeEntry]) {
        for (layer, entry) in self.layers.iter_mut().zip(tape) {
            if let (Layer::BatchNorm(bn), TapeEntry::BatchNorm { mean, var, .. }) = (layer, entry) {
                let m = bn.momentum;
                bn.running_mean = bn.running_mean.scale(m) + mean.scale(1.0 - m);
                bn.running_var = bn.running_var.scale(m) + var.scale(1.0 - m);
                // a constant feature has zero batch variance; keep the invariant
                bn.running_var.apply(|v| *v = v.max(f64::MIN_POSITIVE));
            }
        }
    }
}

/// Mean squared error over every output element and its gradient.
pub fn mse(pred: &DMatrix<f64>, target: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let diff = pred - target;
    let count = diff.len() as f64;
    let loss = diff.norm_squared() / count;
    (loss, diff.scale(2.0 / count))
}

/// Largest relative error between back-propagated gradients and central
/// differences of the train-mode MSE, over all trainable parameters.
pub fn gradient_check(model: &MlpModel, x: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<f64> {
    const STEP: f64 = 1e-5;
    let (pred, tape) = model.forward_batch(x, Mode::Train)?;
    if pred.shape() != t.shape() {
        return Err(Error::DimensionMismatch("target shape differs from output".into()));
    }
    let (_, grad_out) = mse(&pred, t);
    let grads = model.backward(&tape, &grad_out);
    let analytic: Vec<Vec<f64>> = flatten_grads(&grads).into_iter().map(<[f64]>::to_vec).collect();

    let loss_at = |m: &MlpModel| -> Result<f64> {
        let (p, _) = m.forward_batch(x, Mode::Train)?;
        Ok(mse(&p, t).0)
    };
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (ti, tensor) in analytic.iter().enumerate() {
        for (pi, &ga) in tensor.iter().enumerate() {
            let orig = probe.parameters_mut()[ti][pi];
            probe.parameters_mut()[ti][pi] = orig + STEP;
            let up = loss_at(&probe)?;
            probe.parameters_mut()[ti][pi] = orig - STEP;
            let down = loss_at(&probe)?;
            probe.parameters_mut()[ti][pi] = orig;
            let gf = (up - down) / (2.0 * STEP);
            worst = worst.max((ga - gf).abs() / (ga.abs() + gf.abs()).max(1e-8));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_batch(rows: usize, cols: usize, rng: &mut SimRng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.normal())
    }

    #[test]
    fn hand_set_dense_layer() {
        let layer = Dense {
            w: DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
            b: DVector::from_element(1, 0.5),
            relu: false,
        };
        let model = MlpModel::from_layers(vec![Layer::Dense(layer)], TargetEncoding::Radians, 1).unwrap();
        assert_eq!(model.forward(&[1.0, 1.0], Mode::Infer).unwrap(), vec![3.5]);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut rng = SimRng::new(1);
        let mut model = MlpModel::new(6, &[4, 3], 2, TargetEncoding::Radians, &mut rng).unwrap();
        for p in model.parameters_mut() {
            p.fill(0.0);
        }
        // BN shift and scale are zero too, so every layer emits zeros
        let out = model.forward(&[1.0, -2.0, 0.3, 4.0, 5.0, 6.0], Mode::Infer).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn widths_must_chain() {
        let mut rng = SimRng::new(2);
        let a = Layer::Dense(Dense::glorot(3, 4, true, &mut rng));
        let b = Layer::Dense(Dense::glorot(5, 2, false, &mut rng));
        assert!(MlpModel::from_layers(vec![a, b], TargetEncoding::Radians, 2).is_err());
        let model = MlpModel::new(3, &[4], 2, TargetEncoding::UnitCircle, &mut rng).unwrap();
        assert_eq!(model.output_width(), 4);
        assert!(model.forward(&[1.0, 2.0], Mode::Infer).is_err());
    }

    #[test]
    fn infer_is_deterministic() {
        let mut rng = SimRng::new(3);
        let model = MlpModel::new(5, &[8, 6], 3, TargetEncoding::UnitCircle, &mut rng).unwrap();
        let x = [0.1, 0.2, -0.3, 0.4, 2.0];
        assert_eq!(model.forward(&x, Mode::Infer).unwrap(), model.forward(&x, Mode::Infer).unwrap());
    }

    #[test]
    fn batch_norm_standardizes_in_train_mode() {
        let mut rng = SimRng::new(4);
        let bn = BatchNorm::identity(3, HIDDEN_BN_EPS);
        let model = MlpModel::from_layers(vec![Layer::BatchNorm(bn)], TargetEncoding::Radians, 3).unwrap();
        let mut x = random_batch(3, 64, &mut rng);
        x.row_mut(1).scale_mut(1e3);
        let (out, _) = model.forward_batch(&x, Mode::Train).unwrap();
        for row in out.row_iter() {
            let mean = row.mean();
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 64.0;
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn input_normalization_handles_tiny_features() {
        let mut rng = SimRng::new(5);
        let bn = BatchNorm::identity(2, INPUT_BN_EPS);
        let model = MlpModel::from_layers(vec![Layer::BatchNorm(bn)], TargetEncoding::Radians, 2).unwrap();
        let x = random_batch(2, 128, &mut rng).scale(1e-5);
        let (out, _) = model.forward_batch(&x, Mode::Train).unwrap();
        let var = out.row(0).variance();
        assert!((var - 1.0).abs() < 1e-6, "{var}");
    }

    #[test]
    fn linear_model_gradient_is_exact() {
        let mut rng = SimRng::new(6);
        let model = MlpModel::from_layers(
            vec![Layer::Dense(Dense::glorot(4, 3, false, &mut rng))],
            TargetEncoding::Radians,
            3,
        )
        .unwrap();
        let x = random_batch(4, 5, &mut rng);
        let t = random_batch(3, 5, &mut rng);
        assert!(gradient_check(&model, &x, &t).unwrap() < 1e-9);
    }

    #[test]
    fn batch_norm_network_gradient() {
        let mut rng = SimRng::new(7);
        let model = MlpModel::new(5, &[6, 4], 2, TargetEncoding::UnitCircle, &mut rng).unwrap();
        let x = random_batch(5, 8, &mut rng);
        let t = random_batch(4, 8, &mut rng);
        let err = gradient_check(&model, &x, &t).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn zero_everything_bias_gradient() {
        // zero weights: output = bias = 0, target 0, so every gradient vanishes;
        // with target 1 the output bias gradient is 2 (0 - 1) / D per sample summed
        let mut rng = SimRng::new(8);
        let mut model = MlpModel::from_layers(
            vec![
                Layer::Dense(Dense::glorot(3, 2, true, &mut rng)),
                Layer::Dense(Dense::glorot(2, 2, false, &mut rng)),
            ],
            TargetEncoding::Radians,
            2,
        )
        .unwrap();
        for p in model.parameters_mut() {
            p.fill(0.0);
        }
        let x = DMatrix::zeros(3, 4);
        let (pred, tape) = model.forward_batch(&x, Mode::Train).unwrap();
        let (_, g0) = mse(&pred, &DMatrix::zeros(2, 4));
        for g in flatten_grads(&model.backward(&tape, &g0)) {
            assert!(g.iter().all(|v| *v == 0.0));
        }
        let (_, g1) = mse(&pred, &DMatrix::from_element(2, 4, 1.0));
        let grads = model.backward(&tape, &g1);
        match &grads[1] {
            LayerGrad::Dense { b, .. } => {
                // 4 samples × 2 (0 - 1) / 8
                assert!(b.iter().all(|v| (*v + 1.0).abs() < 1e-15));
            }
            _ => panic!("expected dense"),
        }
        match &grads[0] {
            // ReLU at exactly zero passes no gradient
            LayerGrad::Dense { b, .. } => assert!(b.iter().all(|v| *v == 0.0)),
            _ => panic!("expected dense"),
        }
    }
}
