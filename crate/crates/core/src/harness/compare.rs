//! Runs every requested scheme on the same channel realizations.
//!
//! Output files in the result directory:
//! - `results.csv`: `seed,scheme,user_rate,eve_rate,secrecy_rate,iterations`
//! - `summary.json`: per-scheme mean, median, histogram PDF and empirical CDF
//! - `designs.jsonl`: the beamformer and phases behind every record
//! - `timings.csv`: wall time per record, the only nondeterministic file

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::stats::{empirical_cdf, histogram, mean, median, Cdf, Pdf};
use super::{create_dir, par_map_seeds, ExperimentConfig, OPTIMIZER_STREAM};
use crate::altopt::{alternate, baseline_ap_mev, baseline_no_irs, Scheme};
use crate::channel::{ChannelSet, SystemParams};
use crate::error::{Error, Result};
use crate::neural::{featurize, MlpModel};
use crate::rates::{secrecy_rate_with, Beamformer, PhaseVector, RateReport};
use crate::rng::SimRng;
use crate::txbf::f_step;

/// Randomization stream of the single-phase-step baseline.
const AP_MEV_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub seed: u64,
    pub scheme: Scheme,
    pub user_rate: f64,
    pub eve_rate: f64,
    pub secrecy_rate: f64,
    pub iterations: usize,
}

/// Stored design, enough to recompute the rates of a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub seed: u64,
    pub scheme: Scheme,
    /// `[re, im]` per antenna.
    pub f: Vec<[f64; 2]>,
    /// Radians in `[0, 2π)`; `None` when the IRS is switched off.
    pub theta: Option<Vec<f64>>,
}

impl DesignRecord {
    pub fn beamformer(&self) -> Beamformer {
        Beamformer::new(crate::linalg::CVector::from_iterator(
            self.f.len(),
            self.f.iter().map(|&[re, im]| crate::linalg::C64::new(re, im)),
        ))
    }

    pub fn phase(&self) -> Result<Option<PhaseVector>> {
        self.theta.as_deref().map(PhaseVector::from_angles).transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub count: usize,
    pub mean_secrecy: f64,
    pub median_secrecy: f64,
    pub mean_user: f64,
    pub mean_eve: f64,
    pub pdf: Pdf,
    pub cdf: Cdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub realizations: usize,
    pub antennas: usize,
    pub elements: usize,
    pub tx_power_dbm: f64,
    pub schemes: Vec<SchemeSummary>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// Sorted by seed, then by the configured scheme order.
    pub records: Vec<RealizationRecord>,
    pub designs: Vec<DesignRecord>,
    /// Milliseconds, aligned with `records`.
    pub wall_ms: Vec<f64>,
    pub summary: ComparisonSummary,
}

struct Outcome {
    f: Beamformer,
    phase: Option<PhaseVector>,
    rates: RateReport,
    iterations: usize,
}

fn run_scheme(
    scheme: Scheme,
    ch: &ChannelSet,
    cfg: &ExperimentConfig,
    model: Option<&MlpModel>,
    seed: u64,
) -> Result<Outcome> {
    let params = &cfg.system;
    let design = match scheme {
        Scheme::NoIrs => baseline_no_irs(ch, params)?,
        Scheme::ApMev => baseline_ap_mev(
            ch,
            params,
            &cfg.optimizer.phase_options(),
            &mut SimRng::with_stream(seed, AP_MEV_STREAM),
        )?,
        Scheme::Alternating => alternate(
            ch,
            params,
            &cfg.optimizer.alt_options(),
            &mut SimRng::with_stream(seed, OPTIMIZER_STREAM),
        )?,
        Scheme::Supervised => {
            let model = model.ok_or_else(|| Error::InvalidParameter("supervised scheme needs a checkpoint".into()))?;
            return supervised(model, ch, params);
        }
    };
    Ok(Outcome {
        f: design.f,
        phase: design.phase,
        rates: design.rates,
        iterations: design.iterations,
    })
}

fn supervised(model: &MlpModel, ch: &ChannelSet, params: &SystemParams) -> Result<Outcome> {
    let theta = model.predict_theta(&featurize(ch, params.tx_power))?;
    let phase = PhaseVector::from_angles(&theta)?;
    let f = f_step(ch, Some(&phase), params)?;
    let rates = secrecy_rate_with(ch, &f, Some(&phase), params)?;
    Ok(Outcome {
        f,
        phase: Some(phase),
        rates,
        iterations: 0,
    })
}

/// Evaluates `cfg.schemes` on `cfg.realizations` channels seeded from
/// `cfg.eval_seed`.
pub fn run_comparison(cfg: &ExperimentConfig, model: Option<&MlpModel>, threads: Option<usize>) -> Result<Comparison> {
    cfg.validate()?;
    if cfg.schemes.contains(&Scheme::Supervised) && model.is_none() {
        return Err(Error::InvalidParameter("supervised scheme requested without a checkpoint".into()));
    }
    let seeds: Vec<u64> = (0..cfg.realizations as u64).map(|i| cfg.eval_seed + i).collect();
    let rows = par_map_seeds(&seeds, threads, |seed| {
        let ch = ChannelSet::generate(&cfg.system, seed)?;
        cfg.schemes
            .iter()
            .map(|&scheme| {
                let start = Instant::now();
                let out = run_scheme(scheme, &ch, cfg, model, seed)?;
                let ms = start.elapsed().as_secs_f64() * 1e3;
                let record = RealizationRecord {
                    seed,
                    scheme,
                    user_rate: out.rates.user,
                    eve_rate: out.rates.eve,
                    secrecy_rate: out.rates.secrecy,
                    iterations: out.iterations,
                };
                let design = DesignRecord {
                    seed,
                    scheme,
                    f: out.f.f.iter().map(|z| [z.re, z.im]).collect(),
                    theta: out.phase.map(|p| p.theta().to_vec()),
                };
                Ok((record, design, ms))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut records = Vec::new();
    let mut designs = Vec::new();
    let mut wall_ms = Vec::new();
    for (r, d, ms) in rows.into_iter().flatten() {
        records.push(r);
        designs.push(d);
        wall_ms.push(ms);
    }
    let summary = summarize(&records, cfg);
    Ok(Comparison {
        records,
        designs,
        wall_ms,
        summary,
    })
}

fn summarize(records: &[RealizationRecord], cfg: &ExperimentConfig) -> ComparisonSummary {
    let all: Vec<f64> = records.iter().map(|r| r.secrecy_rate).collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let schemes = cfg
        .schemes
        .iter()
        .map(|&scheme| {
            let pick = |f: fn(&RealizationRecord) -> f64| -> Vec<f64> {
                records.iter().filter(|r| r.scheme == scheme).map(f).collect()
            };
            let sec = pick(|r| r.secrecy_rate);
            SchemeSummary {
                scheme,
                count: sec.len(),
                mean_secrecy: mean(&sec),
                median_secrecy: median(&sec),
                mean_user: mean(&pick(|r| r.user_rate)),
                mean_eve: mean(&pick(|r| r.eve_rate)),
                pdf: histogram(&sec, cfg.bins, lo, hi),
                cdf: empirical_cdf(&sec),
            }
        })
        .collect();
    ComparisonSummary {
        realizations: cfg.realizations,
        antennas: cfg.system.antennas,
        elements: cfg.system.elements,
        tx_power_dbm: cfg.system.tx_power_dbm(),
        schemes,
    }
}

impl Comparison {
    pub fn summary_for(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.summary.schemes.iter().find(|s| s.scheme == scheme)
    }

    pub fn write_results_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.summary)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_designs<W: Write>(&self, mut out: W) -> Result<()> {
        for d in &self.designs {
            serde_json::to_writer(&mut out, d)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_timings_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["seed", "scheme", "wall_ms"]).map_err(csv_error)?;
        for (r, ms) in self.records.iter().zip(&self.wall_ms) {
            w.write_record([r.seed.to_string(), r.scheme.as_str().to_string(), format!("{ms:.3}")])
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes all four files into `dir`, creating it if needed.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        let open = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
        self.write_results_csv(open("results.csv")?)?;
        self.write_summary_json(open("summary.json")?)?;
        self.write_designs(open("designs.jsonl")?)?;
        self.write_timings_csv(open("timings.csv")?)?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
