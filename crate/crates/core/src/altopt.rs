//! Alternating optimization of beamformer and IRS phases, and the two
//! benchmark schemes it is compared against.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, SystemParams};
use crate::error::{Error, Result};
use crate::irsopt::{phase_step, PhaseOptions};
use crate::rates::{secrecy_rate_with, Beamformer, PhaseVector, RateReport};
use crate::rng::SimRng;
use crate::txbf::f_step;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltOptions {
    pub max_iter: usize,
    /// Stop once an outer iteration improves `R_u - R_e` by less than this (bits/s/Hz).
    pub epsilon: f64,
    pub phase: PhaseOptions,
}

impl Default for AltOptions {
    fn default() -> Self {
        Self {
            max_iter: 20,
            epsilon: 1e-4,
            phase: PhaseOptions::default(),
        }
    }
}

/// Which design produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Alternating,
    ApMev,
    NoIrs,
    Supervised,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Alternating => "alternating",
            Scheme::ApMev => "ap_mev",
            Scheme::NoIrs => "no_irs",
            Scheme::Supervised => "supervised",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Design {
    pub scheme: Scheme,
    pub f: Beamformer,
    /// `None` means the IRS reflects nothing.
    pub phase: Option<PhaseVector>,
    pub rates: RateReport,
    /// Unclamped `R_u - R_e` after the initial beamformer and after each
    /// outer iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn evaluate(ch: &ChannelSet, f: &Beamformer, phase: Option<&PhaseVector>, params: &SystemParams) -> Result<RateReport> {
    secrecy_rate_with(ch, f, phase, params)
}

/// Starts at `theta = 0` and alternates the phase step and the beamformer
/// step. The trace is non-decreasing because each sub-step is either exact
/// or only accepts strict improvements.
pub fn alternate(ch: &ChannelSet, params: &SystemParams, opts: &AltOptions, rng: &mut SimRng) -> Result<Design> {
    params.validate()?;
    if opts.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be positive".into()));
    }
    let mut phase = Some(PhaseVector::identity(params.elements));
    let mut f = f_step(ch, phase.as_ref(), params)?;
    let mut rates = evaluate(ch, &f, phase.as_ref(), params)?;
    let mut trace = vec![rates.raw_difference()];
    let mut converged = false;

    for iteration in 1..=opts.max_iter {
        let wrap = |e: Error| Error::AltOpt {
            iteration,
            source: Box::new(e),
        };
        let step = phase_step(ch, &f, params, phase.as_ref(), &opts.phase, rng).map_err(wrap)?;
        phase = step.phase;
        f = f_step(ch, phase.as_ref(), params).map_err(wrap)?;
        rates = evaluate(ch, &f, phase.as_ref(), params)?;
        let prev = trace[trace.len() - 1];
        trace.push(rates.raw_difference());
        if rates.raw_difference() - prev < opts.epsilon {
            converged = true;
            break;
        }
    }
    Ok(Design {
        scheme: Scheme::Alternating,
        f,
        phase,
        rates,
        iterations: trace.len() - 1,
        trace,
        converged,
    })
}

/// Optimal beamformer on the direct links only.
pub fn baseline_no_irs(ch: &ChannelSet, params: &SystemParams) -> Result<Design> {
    params.validate()?;
    let f = f_step(ch, None, params)?;
    let rates = evaluate(ch, &f, None, params)?;
    Ok(Design {
        scheme: Scheme::NoIrs,
        f,
        phase: None,
        trace: vec![rates.raw_difference()],
        rates,
        iterations: 0,
        converged: true,
    })
}

/// Keeps the no-IRS beamformer and runs one phase step against the
/// switched-off IRS as incumbent, so it never falls below the no-IRS rate.
pub fn baseline_ap_mev(ch: &ChannelSet, params: &SystemParams, opts: &PhaseOptions, rng: &mut SimRng) -> Result<Design> {
    let base = baseline_no_irs(ch, params)?;
    let step = phase_step(ch, &base.f, params, None, opts, rng)?;
    let rates = evaluate(ch, &base.f, step.phase.as_ref(), params)?;
    Ok(Design {
        scheme: Scheme::ApMev,
        f: base.f,
        phase: step.phase,
        trace: vec![base.rates.raw_difference(), rates.raw_difference()],
        rates,
        iterations: 1,
        converged: true,
    })
}
