//! Supervised phase prediction: channel features in, IRS phases out.
//!
//! The network never has to learn the unit-modulus constraint. It emits
//! either raw angles or `(cos, sin)` pairs, and [`to_phase`] maps the decoded
//! angles onto the unit circle before the beamformer and the rates are
//! recomputed.

mod checkpoint;
mod model;
mod train;

use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use model::{
    flatten_grads, gradient_check, mse, BatchNorm, Dense, Layer, LayerGrad, MlpModel, Mode, TapeEntry, BN_MOMENTUM,
    HIDDEN_BN_EPS, INPUT_BN_EPS,
};
pub use train::{batch_ranges, fit, train, train_on, Adam, History, TrainConfig};

use crate::channel::{watts_to_dbm, ChannelSet, SystemParams};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::rates::{secrecy_rate, PhaseVector, RateReport};
use crate::txbf::f_step;

/// How phase targets are presented to the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetEncoding {
    /// One output per element, the angle itself. Suffers from 2π wrap-around.
    Radians,
    /// Two outputs per element, `(cos θ, sin θ)` interleaved.
    #[default]
    UnitCircle,
}

impl TargetEncoding {
    pub fn width(self, elements: usize) -> usize {
        match self {
            TargetEncoding::Radians => elements,
            TargetEncoding::UnitCircle => 2 * elements,
        }
    }

    pub fn encode(self, theta: &[f64]) -> Vec<f64> {
        match self {
            TargetEncoding::Radians => theta.to_vec(),
            TargetEncoding::UnitCircle => theta.iter().flat_map(|t| [t.cos(), t.sin()]).collect(),
        }
    }

    /// Inverse of [`encode`](Self::encode); angles are not wrapped.
    pub fn decode(self, out: &[f64]) -> Vec<f64> {
        match self {
            TargetEncoding::Radians => out.to_vec(),
            TargetEncoding::UnitCircle => out.chunks_exact(2).map(|p| p[1].atan2(p[0])).collect(),
        }
    }
}

/// One training pair: a channel realization and the phases the alternating
/// optimizer found for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub channels: ChannelSet,
    /// watts
    pub tx_power: f64,
    /// radians in `[0, 2π)`
    pub target_theta: Vec<f64>,
    /// Secrecy rate reached by the optimizer, kept for evaluation only.
    pub target_rate: f64,
}

pub fn feature_width(antennas: usize, elements: usize) -> usize {
    2 * antennas * elements + 4 * antennas + 4 * elements + 1
}

/// Real/imaginary parts of `G` (row-major), `h_au`, `h_ae`, `h_iu`, `h_ie`,
/// then the transmit power in dBm.
pub fn featurize(ch: &ChannelSet, tx_power: f64) -> Vec<f64> {
    let (m, n) = (ch.antennas(), ch.elements());
    let mut x = Vec::with_capacity(feature_width(m, n));
    let mut push = |z: &C64| {
        x.push(z.re);
        x.push(z.im);
    };
    for i in 0..n {
        for j in 0..m {
            push(&ch.g[(i, j)]);
        }
    }
    ch.h_au.iter().for_each(&mut push);
    ch.h_ae.iter().for_each(&mut push);
    ch.h_iu.iter().for_each(&mut push);
    ch.h_ie.iter().for_each(&mut push);
    x.push(watts_to_dbm(tx_power));
    x
}

/// Euler step: `φ_n = exp(j θ_n)` with `θ` wrapped to `[0, 2π)`.
pub fn to_phase(theta: &[f64]) -> Result<PhaseVector> {
    PhaseVector::from_angles(theta)
}

/// Predicted phases, recomputed optimal beamformer and resulting rates for
/// every sample.
pub fn evaluate(model: &MlpModel, data: &[Sample], params: &SystemParams) -> Result<Vec<RateReport>> {
    data.iter()
        .map(|s| {
            if s.channels.elements() != model.elements {
                return Err(Error::DimensionMismatch(format!(
                    "sample has {} elements, model predicts {}",
                    s.channels.elements(),
                    model.elements
                )));
            }
            let theta = model.predict_theta(&featurize(&s.channels, s.tx_power))?;
            rates_for_theta(&s.channels, &theta, s.tx_power, params)
        })
        .collect()
}

/// Rates when the IRS uses `theta` and the beamformer is re-optimized for it.
pub fn rates_for_theta(ch: &ChannelSet, theta: &[f64], tx_power: f64, params: &SystemParams) -> Result<RateReport> {
    let phase = to_phase(theta)?;
    let params = SystemParams {
        tx_power,
        ..params.clone()
    };
    let f = f_step(ch, Some(&phase), &params)?;
    secrecy_rate(ch, &f, &phase, &params)
}
