//! Geometry, path loss and Rician fading for the five links of the
//! AP / IRS / user / eavesdropper scenario.
//!
//! Link naming follows the usual convention: `au` is AP→user, `ae` AP→eve,
//! `ai` AP→IRS (the matrix `G`), `iu` IRS→user and `ie` IRS→eve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::rng::SimRng;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Derived distances `(d_eu, d_iu, d_ai)` for AP, eavesdropper and user on one
/// line with the IRS offset `d_ie` from the eavesdropper.
pub fn derive_geometry(d_ae: f64, d_au: f64, d_ie: f64) -> Result<(f64, f64, f64)> {
    if !(d_ae > 0.0) {
        return Err(Error::InvalidParameter(format!("d_ae must be positive, got {d_ae}")));
    }
    if !(d_ie > 0.0) {
        return Err(Error::InvalidParameter(format!("d_ie must be positive, got {d_ie}")));
    }
    if !(d_au > d_ae) {
        return Err(Error::InvalidParameter(format!(
            "user must lie beyond the eavesdropper (d_au = {d_au} <= d_ae = {d_ae})"
        )));
    }
    let d_eu = d_au - d_ae;
    let d_iu = (d_ie * d_ie + d_eu * d_eu).sqrt();
    let d_ai = (d_ae * d_ae + d_ie * d_ie).sqrt();
    Ok((d_eu, d_iu, d_ai))
}

/// Large-scale gain `eta0 * (d0 / d)^psi`.
pub fn path_loss(d: f64, psi: f64, eta0: f64, d0: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidParameter(format!("distance must be positive, got {d}")));
    }
    Ok(eta0 * (d0 / d).powf(psi))
}

/// Static description of one simulated deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemParams {
    /// AP antenna count `M`.
    pub antennas: usize,
    /// IRS element count `N`.
    pub elements: usize,
    /// Transmit power budget in watts.
    pub tx_power: f64,
    pub noise_user: f64,
    pub noise_eve: f64,
    pub d_ae: f64,
    pub d_au: f64,
    pub d_eu: f64,
    pub d_ie: f64,
    pub d_iu: f64,
    pub d_ai: f64,
    /// Reference path loss (linear).
    pub eta0: f64,
    pub d0: f64,
    pub psi_au: f64,
    pub psi_ae: f64,
    pub psi_ai: f64,
    pub psi_iu: f64,
    pub psi_ie: f64,
    pub k_au: f64,
    pub k_ae: f64,
    pub k_ai: f64,
    pub k_iu: f64,
    pub k_ie: f64,
    /// Cross-link correlation between the scattered parts of `h_au` and `h_ae`.
    pub correlation: f64,
}

impl Default for SystemParams {
    /// M = 4, N = 25, 20 dBm, -80 dBm noise, 145/150/5 m geometry.
    fn default() -> Self {
        let (d_ae, d_au, d_ie) = (145.0, 150.0, 5.0);
        let (d_eu, d_iu, d_ai) = derive_geometry(d_ae, d_au, d_ie).expect("valid geometry");
        Self {
            antennas: 4,
            elements: 25,
            tx_power: dbm_to_watts(20.0),
            noise_user: dbm_to_watts(-80.0),
            noise_eve: dbm_to_watts(-80.0),
            d_ae,
            d_au,
            d_eu,
            d_ie,
            d_iu,
            d_ai,
            eta0: db_to_linear(-30.0),
            d0: 1.0,
            psi_au: 3.0,
            psi_ae: 3.0,
            psi_ai: 2.2,
            psi_iu: 3.0,
            psi_ie: 3.0,
            k_au: 1.0,
            k_ae: 1.0,
            k_ai: 1.0,
            k_iu: 1.0,
            k_ie: 1.0,
            correlation: 0.95,
        }
    }
}

impl SystemParams {
    pub fn with_sizes(mut self, antennas: usize, elements: usize) -> Self {
        self.antennas = antennas;
        self.elements = elements;
        self
    }

    pub fn with_tx_power_dbm(mut self, dbm: f64) -> Self {
        self.tx_power = dbm_to_watts(dbm);
        self
    }

    /// Replaces the three free distances and recomputes the derived ones.
    pub fn with_geometry(mut self, d_ae: f64, d_au: f64, d_ie: f64) -> Result<Self> {
        let (d_eu, d_iu, d_ai) = derive_geometry(d_ae, d_au, d_ie)?;
        self.d_ae = d_ae;
        self.d_au = d_au;
        self.d_ie = d_ie;
        self.d_eu = d_eu;
        self.d_iu = d_iu;
        self.d_ai = d_ai;
        Ok(self)
    }

    pub fn tx_power_dbm(&self) -> f64 {
        watts_to_dbm(self.tx_power)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.antennas == 0 || self.elements == 0 {
            return bad(format!(
                "need at least one antenna and one element, got M={} N={}",
                self.antennas, self.elements
            ));
        }
        if !(self.tx_power > 0.0) || !self.tx_power.is_finite() {
            return bad(format!("tx power must be positive, got {}", self.tx_power));
        }
        if !(self.noise_user > 0.0) || !(self.noise_eve > 0.0) {
            return bad("noise variances must be positive".into());
        }
        let (d_eu, d_iu, d_ai) = derive_geometry(self.d_ae, self.d_au, self.d_ie)?;
        if d_eu != self.d_eu || d_iu != self.d_iu || d_ai != self.d_ai {
            return bad("derived distances disagree with d_ae, d_au, d_ie".into());
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return bad(format!("correlation must lie in [0, 1), got {}", self.correlation));
        }
        for k in [self.k_au, self.k_ae, self.k_ai, self.k_iu, self.k_ie] {
            if !(k >= 0.0) || !k.is_finite() {
                return bad(format!("Rician factor must be finite and nonnegative, got {k}"));
            }
        }
        if !(self.eta0 > 0.0) || !(self.d0 > 0.0) {
            return bad("eta0 and d0 must be positive".into());
        }
        Ok(())
    }

    pub fn gain_au(&self) -> f64 {
        self.eta0 * (self.d0 / self.d_au).powf(self.psi_au)
    }
    pub fn gain_ae(&self) -> f64 {
        self.eta0 * (self.d0 / self.d_ae).powf(self.psi_ae)
    }
    pub fn gain_ai(&self) -> f64 {
        self.eta0 * (self.d0 / self.d_ai).powf(self.psi_ai)
    }
    pub fn gain_iu(&self) -> f64 {
        self.eta0 * (self.d0 / self.d_iu).powf(self.psi_iu)
    }
    pub fn gain_ie(&self) -> f64 {
        self.eta0 * (self.d0 / self.d_ie).powf(self.psi_ie)
    }
}

/// One realization of all five links. Row vectors (`1×M`, `1×N`) are stored
/// as column vectors of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// AP→IRS, `N×M`.
    pub g: CMatrix,
    pub h_au: CVector,
    pub h_ae: CVector,
    pub h_iu: CVector,
    pub h_ie: CVector,
    pub seed: u64,
}

impl ChannelSet {
    pub fn antennas(&self) -> usize {
        self.g.ncols()
    }

    pub fn elements(&self) -> usize {
        self.g.nrows()
    }

    pub fn check_dims(&self, params: &SystemParams) -> Result<()> {
        let (m, n) = (params.antennas, params.elements);
        let ok = self.g.shape() == (n, m)
            && self.h_au.len() == m
            && self.h_ae.len() == m
            && self.h_iu.len() == n
            && self.h_ie.len() == n;
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "channel set {}x{} / {} / {} / {} / {} does not match M={m}, N={n}",
                self.g.nrows(),
                self.g.ncols(),
                self.h_au.len(),
                self.h_ae.len(),
                self.h_iu.len(),
                self.h_ie.len()
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        let fin = |z: &C64| z.re.is_finite() && z.im.is_finite();
        self.g.iter().all(fin)
            && self.h_au.iter().all(fin)
            && self.h_ae.iter().all(fin)
            && self.h_iu.iter().all(fin)
            && self.h_ie.iter().all(fin)
    }

    /// Convenience wrapper: fresh generator seeded with `seed`.
    pub fn generate(params: &SystemParams, seed: u64) -> Result<Self> {
        sample_channels(params, &mut SimRng::new(seed))
    }
}

/// Scattered (NLOS) components of the user and eavesdropper direct links,
/// each antenna carrying an independent pair coloured by the 2×2 correlation
/// `[[1, r], [r, 1]]` through its Cholesky factor.
pub fn correlated_nlos_pair(m: usize, r: f64, rng: &mut SimRng) -> (CVector, CVector) {
    let tail = (1.0 - r * r).sqrt();
    let mut a = CVector::zeros(m);
    let mut b = CVector::zeros(m);
    for k in 0..m {
        let z1 = rng.complex_normal();
        let z2 = rng.complex_normal();
        a[k] = z1;
        b[k] = z1 * r + z2 * tail;
    }
    (a, b)
}

fn rician_weights(k: f64) -> (f64, f64) {
    ((k / (1.0 + k)).sqrt(), (1.0 / (1.0 + k)).sqrt())
}

fn rician_vector(len: usize, k: f64, gain: f64, rng: &mut SimRng) -> CVector {
    let (w_los, w_nlos) = rician_weights(k);
    let los = C64::from_polar(1.0, rng.phase());
    let amp = gain.sqrt();
    CVector::from_fn(len, |_, _| (los * w_los + rng.complex_normal() * w_nlos) * amp)
}

/// Draws one realization of every link.
///
/// Each link is `sqrt(gain) * (sqrt(K/(1+K)) g_los + sqrt(1/(1+K)) g_nlos)`
/// where `g_los` has unit-modulus entries sharing one random phase and
/// `g_nlos` is CN(0, 1). Only the direct user/eavesdropper links are
/// correlated.
pub fn sample_channels(params: &SystemParams, rng: &mut SimRng) -> Result<ChannelSet> {
    params.validate()?;
    let (m, n) = (params.antennas, params.elements);

    let los_au = C64::from_polar(1.0, rng.phase());
    let los_ae = C64::from_polar(1.0, rng.phase());
    let (nlos_au, nlos_ae) = correlated_nlos_pair(m, params.correlation, rng);
    let direct = |los: C64, nlos: &CVector, k: f64, gain: f64| {
        let (w_los, w_nlos) = rician_weights(k);
        let amp = gain.sqrt();
        nlos.map(|z| (los * w_los + z * w_nlos) * amp)
    };
    let h_au = direct(los_au, &nlos_au, params.k_au, params.gain_au());
    let h_ae = direct(los_ae, &nlos_ae, params.k_ae, params.gain_ae());

    let g = {
        let (w_los, w_nlos) = rician_weights(params.k_ai);
        let los = C64::from_polar(1.0, rng.phase());
        let amp = params.gain_ai().sqrt();
        CMatrix::from_fn(n, m, |_, _| (los * w_los + rng.complex_normal() * w_nlos) * amp)
    };
    let h_iu = rician_vector(n, params.k_iu, params.gain_iu(), rng);
    let h_ie = rician_vector(n, params.k_ie, params.gain_ie(), rng);

    Ok(ChannelSet {
        g,
        h_au,
        h_ae,
        h_iu,
        h_ie,
        seed: rng.seed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_of_default_deployment() {
        let (d_eu, d_iu, d_ai) = derive_geometry(145.0, 150.0, 5.0).unwrap();
        assert_eq!(d_eu, 5.0);
        assert!((d_iu - 50f64.sqrt()).abs() < 1e-12);
        assert!((d_iu - 7.0711).abs() < 1e-4);
        assert!((d_ai - 21050f64.sqrt()).abs() < 1e-12);
        assert!((d_ai - 145.0862).abs() < 1e-4);
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        assert!(derive_geometry(1.0, 2.0, 0.0).is_err());
        assert!(derive_geometry(100.0, 100.0, 5.0).is_err());
        assert!(derive_geometry(0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn path_loss_values() {
        assert_eq!(path_loss(1.0, 2.7, 1e-3, 1.0).unwrap(), 1e-3);
        assert!((path_loss(10.0, 2.0, 1e-3, 1.0).unwrap() - 1e-5).abs() < 1e-20);
        // 1e-3 / 145^3 evaluated in 50-digit arithmetic: 3.2801672885317151...e-10
        let v = path_loss(145.0, 3.0, 1e-3, 1.0).unwrap();
        assert!((v - 3.280_167_288_531_715e-10).abs() < 1e-13);
        assert!(path_loss(0.0, 3.0, 1e-3, 1.0).is_err());
        assert!(path_loss(-1.0, 3.0, 1e-3, 1.0).is_err());
    }

    #[test]
    fn default_params_are_valid_and_exact() {
        let p = SystemParams::default();
        p.validate().unwrap();
        assert!((p.tx_power - 0.1).abs() < 1e-15);
        assert!((p.noise_user - 1e-11).abs() < 1e-25);
        assert!((p.tx_power_dbm() - 20.0).abs() < 1e-12);
        assert_eq!(p.d_eu, p.d_au - p.d_ae);
    }

    #[test]
    fn validation_catches_bad_fields() {
        let p = SystemParams {
            correlation: 1.0,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
        let mut p = SystemParams::default();
        p.d_iu += 1.0;
        assert!(p.validate().is_err());
        let p = SystemParams::default().with_sizes(0, 3);
        assert!(p.validate().is_err());
        let p = SystemParams {
            noise_eve: 0.0,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn channel_dimensions_and_determinism() {
        let p = SystemParams::default();
        let a = ChannelSet::generate(&p, 42).unwrap();
        let b = ChannelSet::generate(&p, 42).unwrap();
        assert_eq!(a, b);
        a.check_dims(&p).unwrap();
        assert!(a.is_finite());
        assert_eq!(a.seed, 42);
        let c = ChannelSet::generate(&p, 43).unwrap();
        assert_ne!(a, c);
    }

    fn empirical_correlation(r: f64, m: usize, draws: usize) -> f64 {
        let mut rng = SimRng::new(11);
        let (mut sab, mut saa, mut sbb) = (C64::new(0.0, 0.0), 0.0, 0.0);
        for _ in 0..draws {
            let (a, b) = correlated_nlos_pair(m, r, &mut rng);
            for k in 0..m {
                sab += a[k] * b[k].conj();
                saa += a[k].norm_sqr();
                sbb += b[k].norm_sqr();
            }
        }
        sab.re / (saa * sbb).sqrt()
    }

    #[test]
    fn nlos_correlation_limits() {
        assert!(empirical_correlation(0.0, 1, 10_000).abs() < 0.05);
        assert!((empirical_correlation(0.95, 4, 10_000) - 0.95).abs() < 0.03);
    }

    #[test]
    fn average_power_matches_path_loss() {
        let p = SystemParams::default().with_sizes(4, 2);
        let draws = 10_000;
        let mut acc = [0.0; 5];
        for s in 0..draws {
            let ch = ChannelSet::generate(&p, s).unwrap();
            acc[0] += ch.h_au[0].norm_sqr();
            acc[1] += ch.h_ae[2].norm_sqr();
            acc[2] += ch.g[(1, 3)].norm_sqr();
            acc[3] += ch.h_iu[0].norm_sqr();
            acc[4] += ch.h_ie[1].norm_sqr();
        }
        let expect = [p.gain_au(), p.gain_ae(), p.gain_ai(), p.gain_iu(), p.gain_ie()];
        for (a, e) in acc.iter().zip(expect) {
            let rel = (a / draws as f64 - e).abs() / e;
            assert!(rel < 0.05, "relative error {rel}");
        }
    }
}
