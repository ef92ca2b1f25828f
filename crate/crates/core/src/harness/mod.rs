//! Experiment driver behind the command-line tool: configuration, dataset
//! generation, scheme comparison, the overfitting study and single-instance
//! optimization, plus the files they write.
//!
//! Every realization derives its randomness from its own seed, and results
//! are collected in seed order, so the thread count never changes output
//! bytes.

pub mod compare;
pub mod dataset;
pub mod overfit;
pub mod stats;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::altopt::{alternate, AltOptions, Design, Scheme};
use crate::channel::{ChannelSet, SystemParams};
use crate::error::{Error, Result};
use crate::irsopt::PhaseOptions;
use crate::neural::TrainConfig;
use crate::rng::SimRng;
use crate::sdp::SdpOptions;

pub use compare::{run_comparison, Comparison, ComparisonSummary, DesignRecord, RealizationRecord, SchemeSummary};
pub use dataset::{gen_dataset, load_dataset, read_dataset, save_dataset, write_dataset, Dataset, DatasetHeader};
pub use overfit::{run_overfitting_study, write_overfit, OverfitConfig, OverfitRun};

/// Stream used for the optimizer's randomization draws; stream 0 draws channels.
pub const OPTIMIZER_STREAM: u64 = 1;

/// Alternating-optimization settings as they appear in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    pub epsilon: f64,
    pub randomization_count: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = AltOptions::default();
        Self {
            max_iter: d.max_iter,
            epsilon: d.epsilon,
            randomization_count: d.phase.randomization_count,
        }
    }
}

impl OptimizerConfig {
    pub fn alt_options(&self) -> AltOptions {
        AltOptions {
            max_iter: self.max_iter,
            epsilon: self.epsilon,
            phase: self.phase_options(),
        }
    }

    pub fn phase_options(&self) -> PhaseOptions {
        PhaseOptions {
            randomization_count: self.randomization_count,
            sdp: SdpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    pub optimizer: OptimizerConfig,
    pub train: TrainConfig,
    pub overfit: OverfitConfig,
    /// Samples written by `gen-data`.
    pub dataset_size: usize,
    /// First channel seed of the dataset; sample `i` uses `dataset_seed + i`.
    pub dataset_seed: u64,
    /// Realizations evaluated by `compare`.
    pub realizations: usize,
    /// First channel seed of the comparison.
    pub eval_seed: u64,
    pub schemes: Vec<Scheme>,
    /// Histogram bins of the PDF estimate.
    pub bins: usize,
    /// Dataset file; defaults to `<out_dir>/dataset.jsonl`.
    pub dataset: Option<PathBuf>,
    /// Model checkpoint; defaults to `<out_dir>/model.json`.
    pub checkpoint: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemParams::default(),
            optimizer: OptimizerConfig::default(),
            train: TrainConfig::default(),
            overfit: OverfitConfig::default(),
            dataset_size: 10_000,
            dataset_seed: 0,
            realizations: 1000,
            eval_seed: 1_000_000,
            schemes: vec![Scheme::NoIrs, Scheme::ApMev, Scheme::Alternating],
            bins: 50,
            dataset: None,
            checkpoint: None,
            out_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file. Distances that follow from `d_ae`, `d_au` and
    /// `d_ie` are derived when the file leaves all of them out.
    pub fn load(path: &Path) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        Self::from_json(raw)
    }

    pub fn from_json(raw: serde_json::Value) -> Result<Self> {
        let derive = raw
            .get("system")
            .and_then(|s| s.as_object())
            .is_some_and(|s| ["d_eu", "d_iu", "d_ai"].iter().all(|k| !s.contains_key(*k)));
        let mut cfg: Self = serde_json::from_value(raw)?;
        if derive {
            let s = &cfg.system;
            cfg.system = s.clone().with_geometry(s.d_ae, s.d_au, s.d_ie)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.train.validate()?;
        self.overfit.validate()?;
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.dataset_size == 0 || self.realizations == 0 || self.bins == 0 {
            return bad("dataset_size, realizations and bins must be at least 1");
        }
        if self.optimizer.max_iter == 0 || self.optimizer.randomization_count == 0 {
            return bad("optimizer needs max_iter and randomization_count of at least 1");
        }
        if !(self.optimizer.epsilon >= 0.0) {
            return bad("optimizer epsilon must be nonnegative");
        }
        if self.schemes.is_empty() {
            return bad("at least one scheme is required");
        }
        Ok(())
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.dataset.clone().unwrap_or_else(|| self.out_dir.join("dataset.jsonl"))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.out_dir.join("model.json"))
    }
}

/// Maps `job` over `seeds` on a pool of `threads` workers (all cores when
/// `None`), keeping input order in the output.
pub fn par_map_seeds<T, F>(seeds: &[u64], threads: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        if k == 0 {
            return Err(Error::InvalidParameter("thread count must be positive".into()));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                job(seed).map_err(|e| match e {
                    e @ Error::Realization { .. } => e,
                    e => Error::Realization {
                        seed,
                        source: Box::new(e),
                    },
                })
            })
            .collect()
    })
}

/// Channel draw and alternating optimization for one seed.
pub fn optimize_realization(params: &SystemParams, opts: &OptimizerConfig, seed: u64) -> Result<(ChannelSet, Design)> {
    let ch = ChannelSet::generate(params, seed)?;
    let mut rng = SimRng::with_stream(seed, OPTIMIZER_STREAM);
    let design = alternate(&ch, params, &opts.alt_options(), &mut rng)?;
    Ok((ch, design))
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
