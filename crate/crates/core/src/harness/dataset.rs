//! JSON-lines dataset: one header line, then one sample per line. Complex
//! numbers are `[re, im]` pairs and `g` is a list of rows.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{par_map_seeds, optimize_realization, ExperimentConfig, OptimizerConfig};
use crate::channel::{ChannelSet, SystemParams};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::neural::Sample;

pub const DATASET_FORMAT: &str = "irs-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub params: SystemParams,
    pub optimizer: OptimizerConfig,
    pub count: usize,
    /// Samples `[0, train_count)` train, the rest test.
    pub train_count: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn train(&self) -> &[Sample] {
        &self.samples[..self.header.train_count]
    }

    pub fn test(&self) -> &[Sample] {
        &self.samples[self.header.train_count..]
    }
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    seed: u64,
    tx_power: f64,
    g: Vec<Vec<[f64; 2]>>,
    h_au: Vec<[f64; 2]>,
    h_ae: Vec<[f64; 2]>,
    h_iu: Vec<[f64; 2]>,
    h_ie: Vec<[f64; 2]>,
    target_theta: Vec<f64>,
    target_rate: f64,
}

fn pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn vector(p: &[[f64; 2]]) -> CVector {
    CVector::from_iterator(p.len(), p.iter().map(|&[re, im]| C64::new(re, im)))
}

impl SampleRecord {
    fn from_sample(s: &Sample) -> Self {
        let ch = &s.channels;
        Self {
            seed: ch.seed,
            tx_power: s.tx_power,
            g: ch.g.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect(),
            h_au: pairs(&ch.h_au),
            h_ae: pairs(&ch.h_ae),
            h_iu: pairs(&ch.h_iu),
            h_ie: pairs(&ch.h_ie),
            target_theta: s.target_theta.clone(),
            target_rate: s.target_rate,
        }
    }

    fn into_sample(self, params: &SystemParams) -> Result<Sample> {
        let rows = self.g.len();
        let cols = self.g.first().map_or(0, Vec::len);
        if self.g.iter().any(|r| r.len() != cols) {
            return Err(Error::Dataset(format!("ragged g in sample {}", self.seed)));
        }
        let g = CMatrix::from_fn(rows, cols, |i, j| C64::new(self.g[i][j][0], self.g[i][j][1]));
        let channels = ChannelSet {
            g,
            h_au: vector(&self.h_au),
            h_ae: vector(&self.h_ae),
            h_iu: vector(&self.h_iu),
            h_ie: vector(&self.h_ie),
            seed: self.seed,
        };
        channels
            .check_dims(params)
            .map_err(|e| Error::Dataset(format!("sample {}: {e}", self.seed)))?;
        if self.target_theta.len() != params.elements {
            return Err(Error::Dataset(format!("sample {}: wrong number of target phases", self.seed)));
        }
        Ok(Sample {
            channels,
            tx_power: self.tx_power,
            target_theta: self.target_theta,
            target_rate: self.target_rate,
        })
    }
}

/// Runs the alternating optimizer on `dataset_size` seeded realizations.
pub fn gen_dataset(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Dataset> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.dataset_size as u64).map(|i| cfg.dataset_seed + i).collect();
    let samples = par_map_seeds(&seeds, threads, |seed| {
        let (ch, design) = optimize_realization(&cfg.system, &cfg.optimizer, seed)?;
        let phase = design.phase.ok_or_else(|| Error::Dataset("optimizer returned a switched-off IRS".into()))?;
        Ok(Sample {
            channels: ch,
            tx_power: cfg.system.tx_power,
            target_theta: phase.theta().to_vec(),
            target_rate: design.rates.secrecy,
        })
    })?;
    let train_count = (cfg.train.split * samples.len() as f64).round() as usize;
    Ok(Dataset {
        header: DatasetHeader {
            format: DATASET_FORMAT.to_string(),
            version: DATASET_VERSION,
            params: cfg.system.clone(),
            optimizer: cfg.optimizer.clone(),
            count: samples.len(),
            train_count,
            base_seed: cfg.dataset_seed,
        },
        samples,
    })
}

pub fn write_dataset<W: Write>(data: &Dataset, mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, &data.header)?;
    out.write_all(b"\n")?;
    for s in &data.samples {
        serde_json::to_writer(&mut out, &SampleRecord::from_sample(s))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut lines = BufReader::new(input).lines();
    let first = lines.next().ok_or_else(|| Error::Dataset("empty dataset file".into()))??;
    let header: DatasetHeader = serde_json::from_str(&first)?;
    if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
        return Err(Error::Dataset(format!("unsupported dataset {} v{}", header.format, header.version)));
    }
    header.params.validate()?;
    let mut samples = Vec::with_capacity(header.count);
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord =
            serde_json::from_str(&line).map_err(|e| Error::Dataset(format!("line {}: {e}", k + 2)))?;
        samples.push(record.into_sample(&header.params)?);
    }
    if samples.len() != header.count || header.train_count > header.count {
        return Err(Error::Dataset(format!(
            "header announces {} samples ({} train), file holds {}",
            header.count,
            header.train_count,
            samples.len()
        )));
    }
    Ok(Dataset { header, samples })
}

pub fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        super::create_dir(dir)?;
    }
    write_dataset(data, BufWriter::new(File::create(path)?))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(File::open(path)?)
}
