//! Loss curves for several training-set sizes and depths, with and without
//! early stopping.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::create_dir;
use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::neural::{train_on, History, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverfitConfig {
    /// Training-set sizes swept at the default depth.
    pub train_sizes: Vec<usize>,
    /// Hidden-layer counts swept at the largest training size.
    pub hidden_layers: Vec<usize>,
    /// Held-out samples, taken from the end of the dataset.
    pub test_size: usize,
    /// Also train the largest size at the default depth for the full epoch budget.
    pub without_early_stop: bool,
}

impl Default for OverfitConfig {
    fn default() -> Self {
        Self {
            train_sizes: vec![100, 2700, 9000],
            hidden_layers: vec![4, 3, 2],
            test_size: 1000,
            without_early_stop: true,
        }
    }
}

impl OverfitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_sizes.is_empty() || self.train_sizes.iter().any(|&n| n < 2) || self.test_size == 0 {
            return Err(Error::InvalidParameter(
                "overfit study needs training sizes of at least 2 and a nonempty test set".into(),
            ));
        }
        Ok(())
    }

    /// `(train_size, hidden_layers, early_stop)` for every run, duplicates removed.
    pub fn plan(&self, base: &TrainConfig) -> Vec<(usize, usize, Option<usize>)> {
        let depth = base.hidden.len();
        let largest = *self.train_sizes.iter().max().expect("validated");
        let mut runs: Vec<(usize, usize, Option<usize>)> = Vec::new();
        let mut add = |run| {
            if !runs.contains(&run) {
                runs.push(run);
            }
        };
        for &n in &self.train_sizes {
            add((n, depth, base.early_stop));
        }
        for &h in &self.hidden_layers {
            add((largest, h, base.early_stop));
        }
        if self.without_early_stop {
            add((largest, depth, None));
        }
        runs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitRun {
    pub train_size: usize,
    pub hidden_layers: usize,
    pub early_stop: Option<usize>,
    pub history: History,
}

impl OverfitRun {
    pub fn label(&self) -> String {
        let stop = self.early_stop.map_or("full".to_string(), |e| format!("es{e}"));
        format!("n{}_h{}_{stop}", self.train_size, self.hidden_layers)
    }
}

/// Trains every planned configuration on the first `train_size` samples and
/// tests on the last `test_size` samples.
pub fn run_overfitting_study(data: &Dataset, study: &OverfitConfig, base: &TrainConfig) -> Result<Vec<OverfitRun>> {
    study.validate()?;
    let total = data.samples.len();
    let largest = *study.train_sizes.iter().max().expect("validated");
    if largest + study.test_size > total {
        return Err(Error::Dataset(format!(
            "overfit study needs {} samples, dataset holds {total}",
            largest + study.test_size
        )));
    }
    let test = &data.samples[total - study.test_size..];
    study
        .plan(base)
        .into_iter()
        .map(|(n, depth, early_stop)| {
            let cfg = TrainConfig {
                early_stop,
                hidden: if depth == base.hidden.len() {
                    base.hidden.clone()
                } else {
                    base.clone().with_hidden_layers(depth).hidden
                },
                ..base.clone()
            };
            let (_, history) = train_on(&data.samples[..n], test, &cfg)?;
            Ok(OverfitRun {
                train_size: n,
                hidden_layers: depth,
                early_stop,
                history,
            })
        })
        .collect()
}

/// One `history_<label>.json` per run plus `overfit.json` with all runs.
pub fn write_overfit(runs: &[OverfitRun], dir: &Path) -> Result<()> {
    create_dir(dir)?;
    for run in runs {
        let f = BufWriter::new(File::create(dir.join(format!("history_{}.json", run.label())))?);
        serde_json::to_writer_pretty(f, run)?;
    }
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("overfit.json"))?), runs)?;
    Ok(())
}
