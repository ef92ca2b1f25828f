//! JSON checkpoints. Floats are written with shortest round-trip formatting,
//! so a reloaded model reproduces infer-mode outputs bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::{BatchNorm, Dense, Layer, MlpModel};
use super::train::TrainConfig;
use super::TargetEncoding;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "irs-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LayerRecord {
    Dense {
        inputs: usize,
        outputs: usize,
        relu: bool,
        /// row-major `outputs × inputs`
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    BatchNorm {
        width: usize,
        eps: f64,
        momentum: f64,
        gamma: Vec<f64>,
        beta: Vec<f64>,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct CheckpointRecord {
    format: String,
    version: u32,
    encoding: TargetEncoding,
    elements: usize,
    input_dim: usize,
    layers: Vec<LayerRecord>,
    train_config: TrainConfig,
}

fn vector(v: Vec<f64>, len: usize, what: &str) -> Result<DVector<f64>> {
    if v.len() != len {
        return Err(Error::DimensionMismatch(format!("{what}: expected {len} values, found {}", v.len())));
    }
    Ok(DVector::from_vec(v))
}

impl LayerRecord {
    fn from_layer(layer: &Layer) -> Self {
        match layer {
            Layer::Dense(d) => LayerRecord::Dense {
                inputs: d.w.ncols(),
                outputs: d.w.nrows(),
                relu: d.relu,
                weights: d.w.transpose().as_slice().to_vec(),
                bias: d.b.as_slice().to_vec(),
            },
            Layer::BatchNorm(b) => LayerRecord::BatchNorm {
                width: b.gamma.len(),
                eps: b.eps,
                momentum: b.momentum,
                gamma: b.gamma.as_slice().to_vec(),
                beta: b.beta.as_slice().to_vec(),
                running_mean: b.running_mean.as_slice().to_vec(),
                running_var: b.running_var.as_slice().to_vec(),
            },
        }
    }

    fn into_layer(self) -> Result<Layer> {
        Ok(match self {
            LayerRecord::Dense { inputs, outputs, relu, weights, bias } => {
                if weights.len() != inputs * outputs {
                    return Err(Error::DimensionMismatch(format!(
                        "dense weights: expected {} values, found {}",
                        inputs * outputs,
                        weights.len()
                    )));
                }
                Layer::Dense(Dense {
                    w: DMatrix::from_row_slice(outputs, inputs, &weights),
                    b: vector(bias, outputs, "dense bias")?,
                    relu,
                })
            }
            LayerRecord::BatchNorm { width, eps, momentum, gamma, beta, running_mean, running_var } => {
                Layer::BatchNorm(BatchNorm {
                    gamma: vector(gamma, width, "gamma")?,
                    beta: vector(beta, width, "beta")?,
                    running_mean: vector(running_mean, width, "running mean")?,
                    running_var: vector(running_var, width, "running variance")?,
                    eps,
                    momentum,
                })
            }
        })
    }
}

pub fn write_checkpoint<W: Write>(model: &MlpModel, cfg: &TrainConfig, out: W) -> Result<()> {
    let record = CheckpointRecord {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        encoding: model.encoding,
        elements: model.elements,
        input_dim: model.input_width(),
        layers: model.layers.iter().map(LayerRecord::from_layer).collect(),
        train_config: cfg.clone(),
    };
    serde_json::to_writer_pretty(out, &record)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<(MlpModel, TrainConfig)> {
    let record: CheckpointRecord = serde_json::from_reader(input)?;
    if record.format != CHECKPOINT_FORMAT || record.version != CHECKPOINT_VERSION {
        return Err(Error::Dataset(format!(
            "unsupported checkpoint {} v{}",
            record.format, record.version
        )));
    }
    let layers = record.layers.into_iter().map(LayerRecord::into_layer).collect::<Result<Vec<_>>>()?;
    let model = MlpModel::from_layers(layers, record.encoding, record.elements)?;
    if model.input_width() != record.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "checkpoint declares input width {}, layers take {}",
            record.input_dim,
            model.input_width()
        )));
    }
    Ok((model, record.train_config))
}

pub fn save_checkpoint(model: &MlpModel, cfg: &TrainConfig, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(model, cfg, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(MlpModel, TrainConfig)> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
