//! User, eavesdropper and secrecy rates for a given beamformer and IRS state.
//!
//! Every optimizer in the crate scores candidates through this module.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, SystemParams};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

/// IRS reflection coefficients `phi_n = exp(j theta_n)` with unit amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    theta: Vec<f64>,
    phi: CVector,
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl PhaseVector {
    /// Builds from angles in radians (any real value). Fails on NaN/inf.
    pub fn from_angles(theta: &[f64]) -> Result<Self> {
        if let Some(bad) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite phase {bad}")));
        }
        let theta: Vec<f64> = theta.iter().map(|&t| wrap_angle(t)).collect();
        let phi = CVector::from_iterator(theta.len(), theta.iter().map(|&t| C64::from_polar(1.0, t)));
        Ok(Self { theta, phi })
    }

    /// Projects arbitrary complex entries onto the unit circle; zero maps to 1.
    pub fn from_complex(entries: &[C64]) -> Self {
        let theta: Vec<f64> = entries
            .iter()
            .map(|z| if *z == C64::new(0.0, 0.0) { 0.0 } else { wrap_angle(z.arg()) })
            .collect();
        Self::from_angles(&theta).expect("finite angles")
    }

    /// All-zero angles, i.e. identity reflection.
    pub fn identity(n: usize) -> Self {
        Self::from_angles(&vec![0.0; n]).expect("finite")
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &CVector {
        &self.phi
    }
}

/// Transmit beamformer `f` (length `M`).
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub f: CVector,
}

impl Beamformer {
    pub fn new(f: CVector) -> Self {
        Self { f }
    }

    pub fn power(&self) -> f64 {
        self.f.norm_squared()
    }

    pub fn check_budget(&self, params: &SystemParams) -> Result<()> {
        if self.f.len() != params.antennas {
            return Err(Error::DimensionMismatch(format!(
                "beamformer has {} entries, expected {}",
                self.f.len(),
                params.antennas
            )));
        }
        if self.power() > params.tx_power * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "beamformer power {} exceeds budget {}",
                self.power(),
                params.tx_power
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// bits/s/Hz
    pub user: f64,
    pub eve: f64,
    /// `max(0, user - eve)`
    pub secrecy: f64,
}

impl RateReport {
    pub fn new(user: f64, eve: f64) -> Self {
        Self {
            user,
            eve,
            secrecy: (user - eve).max(0.0),
        }
    }

    /// Unclamped `user - eve`, the quantity optimizers work with.
    pub fn raw_difference(&self) -> f64 {
        self.user - self.eve
    }
}

/// `h_irs · diag(phi) · G + h_direct`, as a length-`M` vector.
pub fn effective_channel(
    h_irs: &CVector,
    phase: &PhaseVector,
    g: &CMatrix,
    h_direct: &CVector,
) -> Result<CVector> {
    let (n, m) = g.shape();
    if h_irs.len() != n || phase.len() != n || h_direct.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "effective channel: h_irs {} / phase {} / G {n}x{m} / h_direct {}",
            h_irs.len(),
            phase.len(),
            h_direct.len()
        )));
    }
    let mut out = h_direct.clone();
    for k in 0..n {
        let w = h_irs[k] * phase.phi[k];
        for j in 0..m {
            out[j] += w * g[(k, j)];
        }
    }
    Ok(out)
}

/// Same quantity as [`effective_channel`] computed as `phi^T (diag(h_irs) G) + h_direct`.
pub fn effective_channel_vectorized(
    h_irs: &CVector,
    phase: &PhaseVector,
    g: &CMatrix,
    h_direct: &CVector,
) -> Result<CVector> {
    if h_irs.len() != g.nrows() || phase.len() != g.nrows() || h_direct.len() != g.ncols() {
        return Err(Error::DimensionMismatch("effective channel (vectorized)".into()));
    }
    let cascade = cascade_matrix(h_irs, g);
    Ok((phase.phi.transpose() * cascade).transpose() + h_direct)
}

/// `diag(h_irs) · G`.
pub fn cascade_matrix(h_irs: &CVector, g: &CMatrix) -> CMatrix {
    let mut k = g.clone();
    for (i, mut row) in k.row_iter_mut().enumerate() {
        row *= h_irs[i];
    }
    k
}

/// Effective user and eavesdropper channels; `None` means the IRS is switched
/// off (zero reflection), leaving only the direct links.
pub fn effective_pair(ch: &ChannelSet, phase: Option<&PhaseVector>) -> Result<(CVector, CVector)> {
    match phase {
        Some(p) => Ok((
            effective_channel(&ch.h_iu, p, &ch.g, &ch.h_au)?,
            effective_channel(&ch.h_ie, p, &ch.g, &ch.h_ae)?,
        )),
        None => Ok((ch.h_au.clone(), ch.h_ae.clone())),
    }
}

fn rate_from(channel: &CVector, f: &CVector, noise: f64) -> f64 {
    let s = channel.transpose() * f;
    (1.0 + s[(0, 0)].norm_sqr() / noise).log2()
}

fn check_beamformer(ch: &ChannelSet, f: &Beamformer) -> Result<()> {
    if f.f.len() != ch.antennas() {
        return Err(Error::DimensionMismatch(format!(
            "beamformer has {} entries, channels have {} antennas",
            f.f.len(),
            ch.antennas()
        )));
    }
    Ok(())
}

pub fn secrecy_rate(
    ch: &ChannelSet,
    f: &Beamformer,
    phase: &PhaseVector,
    params: &SystemParams,
) -> Result<RateReport> {
    secrecy_rate_with(ch, f, Some(phase), params)
}

/// Rates with an optional IRS state (`None` = no reflection).
pub fn secrecy_rate_with(
    ch: &ChannelSet,
    f: &Beamformer,
    phase: Option<&PhaseVector>,
    params: &SystemParams,
) -> Result<RateReport> {
    check_beamformer(ch, f)?;
    let (hu, he) = effective_pair(ch, phase)?;
    Ok(RateReport::new(
        rate_from(&hu, &f.f, params.noise_user),
        rate_from(&he, &f.f, params.noise_eve),
    ))
}

/// SNR ratio `(1 + SNR_u) / (1 + SNR_e)`; `log2` of it is `R_u - R_e`.
pub fn snr_ratio(
    ch: &ChannelSet,
    f: &Beamformer,
    phase: Option<&PhaseVector>,
    params: &SystemParams,
) -> Result<f64> {
    check_beamformer(ch, f)?;
    let (hu, he) = effective_pair(ch, phase)?;
    let su = (hu.transpose() * &f.f)[(0, 0)].norm_sqr() / params.noise_user;
    let se = (he.transpose() * &f.f)[(0, 0)].norm_sqr() / params.noise_eve;
    Ok((1.0 + su) / (1.0 + se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar_set(h: C64, g: C64, hd: C64) -> ChannelSet {
        ChannelSet {
            g: CMatrix::from_element(1, 1, g),
            h_au: CVector::from_element(1, hd),
            h_ae: CVector::from_element(1, hd),
            h_iu: CVector::from_element(1, h),
            h_ie: CVector::from_element(1, h),
            seed: 0,
        }
    }

    #[test]
    fn phase_vector_wraps_and_is_unit_modulus() {
        let p = PhaseVector::from_angles(&[0.0, PI, TAU + 0.3, -0.5]).unwrap();
        assert_eq!(p.phi()[0], c(1.0, 0.0));
        assert!((p.phi()[1].re + 1.0).abs() < 1e-15 && p.phi()[1].im.abs() < 1e-15);
        let q = PhaseVector::from_angles(&[0.3]).unwrap();
        assert!((p.phi()[2] - q.phi()[0]).norm() < 1e-15);
        for (t, z) in p.theta().iter().zip(p.phi().iter()) {
            assert!((0.0..TAU).contains(t));
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        assert!(PhaseVector::from_angles(&[f64::NAN]).is_err());
        assert!(PhaseVector::from_angles(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn tiny_negative_angle_wraps_inside_range() {
        let w = wrap_angle(-1e-18);
        assert!((0.0..TAU).contains(&w));
    }

    #[test]
    fn effective_channel_scalar_case() {
        // h_i = 1, G = 2, h_d = j, theta = pi/2: j*2 + j = 3j
        let ch = scalar_set(c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0));
        let p = PhaseVector::from_angles(&[PI / 2.0]).unwrap();
        let e = effective_channel(&ch.h_iu, &p, &ch.g, &ch.h_au).unwrap();
        assert!((e[0] - c(0.0, 3.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_and_disconnected_reflection() {
        let params = SystemParams::default().with_sizes(3, 5);
        let ch = ChannelSet::generate(&params, 9).unwrap();
        let id = PhaseVector::identity(5);
        let e = effective_channel(&ch.h_iu, &id, &ch.g, &ch.h_au).unwrap();
        let expect = (ch.h_iu.transpose() * &ch.g).transpose() + &ch.h_au;
        assert!((e - expect).norm() < 1e-18);

        let zero = CVector::zeros(5);
        let p = PhaseVector::from_angles(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let e = effective_channel(&zero, &p, &ch.g, &ch.h_au).unwrap();
        assert_eq!(e, ch.h_au);
    }

    #[test]
    fn direct_and_vectorized_agree() {
        let params = SystemParams::default();
        let mut rng = SimRng::new(4);
        for s in 0..20 {
            let ch = ChannelSet::generate(&params, s).unwrap();
            let th: Vec<f64> = (0..params.elements).map(|_| rng.phase()).collect();
            let p = PhaseVector::from_angles(&th).unwrap();
            let a = effective_channel(&ch.h_ie, &p, &ch.g, &ch.h_ae).unwrap();
            let b = effective_channel_vectorized(&ch.h_ie, &p, &ch.g, &ch.h_ae).unwrap();
            assert!((&a - &b).norm() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let params = SystemParams::default().with_sizes(2, 3);
        let ch = ChannelSet::generate(&params, 1).unwrap();
        let p = PhaseVector::identity(4);
        assert!(matches!(
            effective_channel(&ch.h_iu, &p, &ch.g, &ch.h_au),
            Err(Error::DimensionMismatch(_))
        ));
        let f = Beamformer::new(CVector::zeros(3));
        assert!(secrecy_rate(&ch, &f, &PhaseVector::identity(3), &params).is_err());
    }

    #[test]
    fn scalar_secrecy_rate() {
        // all channels 1, theta 0, f = 1, noise 1 / 4
        let ch = scalar_set(c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0));
        let mut params = SystemParams::default().with_sizes(1, 1);
        params.noise_user = 1.0;
        params.noise_eve = 4.0;
        params.tx_power = 1.0;
        let f = Beamformer::new(CVector::from_element(1, c(1.0, 0.0)));
        let r = secrecy_rate(&ch, &f, &PhaseVector::identity(1), &params).unwrap();
        assert!((r.user - 5f64.log2()).abs() < 1e-15);
        assert!((r.eve - 1.0).abs() < 1e-15);
        // log2(5) - 1 = 1.32192809488736234787...
        assert!((r.secrecy - 1.321_928_094_887_362_3).abs() < 1e-14);
    }

    #[test]
    fn identical_links_have_zero_secrecy() {
        let params = SystemParams::default();
        let mut ch = ChannelSet::generate(&params, 2).unwrap();
        ch.h_ie = ch.h_iu.clone();
        ch.h_ae = ch.h_au.clone();
        let f = Beamformer::new(CVector::from_element(params.antennas, c(0.1, 0.05)));
        let r = secrecy_rate(&ch, &f, &PhaseVector::identity(params.elements), &params).unwrap();
        assert_eq!(r.secrecy, 0.0);
        assert_eq!(r.user, r.eve);
    }

    #[test]
    fn silent_transmitter() {
        let params = SystemParams::default();
        let ch = ChannelSet::generate(&params, 2).unwrap();
        let f = Beamformer::new(CVector::zeros(params.antennas));
        let r = secrecy_rate(&ch, &f, &PhaseVector::identity(params.elements), &params).unwrap();
        assert_eq!((r.user, r.eve, r.secrecy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn budget_check() {
        let params = SystemParams::default().with_sizes(2, 1);
        let ok = Beamformer::new(CVector::from_element(2, c((params.tx_power / 2.0).sqrt(), 0.0)));
        ok.check_budget(&params).unwrap();
        let too_much = Beamformer::new(CVector::from_element(2, c(params.tx_power.sqrt(), 0.0)));
        assert!(too_much.check_budget(&params).is_err());
    }
}
