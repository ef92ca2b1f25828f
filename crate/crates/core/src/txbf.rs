//! Transmit beamforming for a fixed IRS state.
//!
//! With `‖f‖² = P_t` the secrecy objective `(f^H A f + 1)/(f^H B f + 1)` is the
//! generalized Rayleigh quotient of the pencil `(A + I/P_t, B + I/P_t)`. The
//! pencil is reduced to a Hermitian eigenproblem through the Cholesky factor
//! of `B + I/P_t`, so the non-Hermitian product `(B + I/P_t)^{-1}(A + I/P_t)`
//! is never formed.

use nalgebra::Cholesky;

use crate::channel::{ChannelSet, SystemParams};
use crate::error::{Error, Result};
use crate::linalg::{conj_outer, hermitian_eigen, CMatrix, CVector, C64};
use crate::rates::{effective_pair, Beamformer, PhaseVector};

/// Rank-one Hermitian matrices `A` (user) and `B` (eavesdropper).
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighQuotientPair {
    pub a: CMatrix,
    pub b: CMatrix,
}

impl RayleighQuotientPair {
    /// `A = h^H h / σ²` for an effective row channel `h`.
    pub fn from_effective(h_user: &CVector, h_eve: &CVector, noise_user: f64, noise_eve: f64) -> Self {
        Self {
            a: conj_outer(h_user, h_user).unscale(noise_user),
            b: conj_outer(h_eve, h_eve).unscale(noise_eve),
        }
    }

    /// `(f^H A f + 1) / (f^H B f + 1)`.
    pub fn objective(&self, f: &CVector) -> f64 {
        let num = f.dotc(&(&self.a * f)).re + 1.0;
        let den = f.dotc(&(&self.b * f)).re + 1.0;
        num / den
    }
}

pub fn build_rayleigh_pair(
    ch: &ChannelSet,
    phase: Option<&PhaseVector>,
    params: &SystemParams,
) -> Result<RayleighQuotientPair> {
    ch.check_dims(params)?;
    let (hu, he) = effective_pair(ch, phase)?;
    Ok(RayleighQuotientPair::from_effective(
        &hu,
        &he,
        params.noise_user,
        params.noise_eve,
    ))
}

/// Largest generalized eigenvalue of `(A + I/P_t, B + I/P_t)` and its
/// eigenvector normalized to unit Euclidean norm.
pub fn pencil_max(pair: &RayleighQuotientPair, tx_power: f64) -> Result<(f64, CVector)> {
    if !(tx_power > 0.0) || !tx_power.is_finite() {
        return Err(Error::InvalidParameter(format!("tx power must be positive, got {tx_power}")));
    }
    let m = pair.a.nrows();
    if pair.a.shape() != (m, m) || pair.b.shape() != (m, m) {
        return Err(Error::DimensionMismatch("A and B must be square and equal-sized".into()));
    }
    let shift = CMatrix::identity(m, m).scale(1.0 / tx_power);
    let a_reg = &pair.a + &shift;
    let b_reg = &pair.b + &shift;

    let chol = Cholesky::new(b_reg)
        .ok_or_else(|| Error::NotPositiveDefinite("B + I/P_t".into()))?;
    let l = chol.l();
    // L^{-1} (A + I/P) L^{-H}
    let left = l
        .solve_lower_triangular(&a_reg)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let reduced = l
        .solve_lower_triangular(&left.adjoint())
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;

    let eig = hermitian_eigen(&reduced)?;
    let (lambda, u) = eig.max_pair();
    let e = l
        .adjoint()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let norm = e.norm();
    Ok((lambda, e.unscale(norm)))
}

/// Rotates `f` so its largest-magnitude entry is real and nonnegative.
pub fn canonical_phase(f: &CVector) -> CVector {
    let mut best = 0;
    for k in 1..f.len() {
        if f[k].norm() > f[best].norm() {
            best = k;
        }
    }
    let mag = f[best].norm();
    if mag == 0.0 {
        return f.clone();
    }
    let rot = f[best].conj() / mag;
    let mut out = f.map(|z| z * rot);
    out[best] = C64::new(mag, 0.0);
    out
}

/// `f_opt = sqrt(P_t) e_max`, always at full power.
pub fn optimize_beamformer(pair: &RayleighQuotientPair, tx_power: f64) -> Result<Beamformer> {
    let (_, e) = pencil_max(pair, tx_power)?;
    Ok(Beamformer::new(canonical_phase(&e).scale(tx_power.sqrt())))
}

/// Builds the pencil for the given IRS state and returns the optimal beamformer.
pub fn f_step(ch: &ChannelSet, phase: Option<&PhaseVector>, params: &SystemParams) -> Result<Beamformer> {
    let pair = build_rayleigh_pair(ch, phase, params)?;
    optimize_beamformer(&pair, params.tx_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_defect;
    use crate::rng::SimRng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_vec(m: usize, rng: &mut SimRng) -> CVector {
        CVector::from_fn(m, |_, _| rng.complex_normal())
    }

    fn random_sphere_point(m: usize, power: f64, rng: &mut SimRng) -> CVector {
        let v = random_vec(m, rng);
        let n = v.norm();
        v.scale(power.sqrt() / n)
    }

    #[test]
    fn outer_product_example() {
        // effective user channel (1, j), sigma^2 = 1: A = h^H h, A_12 = conj(1) * j
        let h = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let pair = RayleighQuotientPair::from_effective(&h, &CVector::zeros(2), 1.0, 1.0);
        let expect = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        assert!((&pair.a - expect).norm() < 1e-15);
        // f^H A f must equal |h f|^2 for any f
        let mut rng = SimRng::new(1);
        for _ in 0..10 {
            let f = random_vec(2, &mut rng);
            let direct = (h[0] * f[0] + h[1] * f[1]).norm_sqr();
            assert!((f.dotc(&(&pair.a * &f)).re - direct).abs() < 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn vanishing_user_link_gives_zero_a() {
        let params = SystemParams::default().with_sizes(3, 4);
        let mut ch = ChannelSet::generate(&params, 1).unwrap();
        ch.h_iu.fill(C64::new(0.0, 0.0));
        ch.h_au.fill(C64::new(0.0, 0.0));
        let pair = build_rayleigh_pair(&ch, Some(&PhaseVector::identity(4)), &params).unwrap();
        assert_eq!(pair.a.norm(), 0.0);
    }

    #[test]
    fn pair_is_rank_one_hermitian_psd() {
        let params = SystemParams::default();
        let ch = ChannelSet::generate(&params, 5).unwrap();
        let pair = build_rayleigh_pair(&ch, Some(&PhaseVector::identity(params.elements)), &params).unwrap();
        for m in [&pair.a, &pair.b] {
            assert!(hermitian_defect(m) < 1e-12);
            let e = hermitian_eigen(m).unwrap();
            let top = e.values[e.values.len() - 1];
            assert!(e.values[0] >= -1e-10 * top);
            // every eigenvalue except the largest is numerically zero
            for k in 0..e.values.len() - 1 {
                assert!(e.values[k].abs() <= 1e-10 * top);
            }
        }
    }

    #[test]
    fn mrt_when_no_eavesdropper() {
        let mut rng = SimRng::new(2);
        let a_vec = random_vec(4, &mut rng);
        let pair = RayleighQuotientPair {
            a: conj_outer(&a_vec, &a_vec),
            b: CMatrix::zeros(4, 4),
        };
        let f = optimize_beamformer(&pair, 2.0).unwrap();
        // MRT direction for f^H (a^* a^T) f is conj(a)
        let mrt = canonical_phase(&a_vec.map(|z| z.conj()).scale(2f64.sqrt() / a_vec.norm()));
        assert!((f.f - mrt).norm() < 1e-10);
    }

    #[test]
    fn equal_matrices_give_unit_objective_at_full_power() {
        let mut rng = SimRng::new(8);
        let v = random_vec(3, &mut rng);
        let a = conj_outer(&v, &v);
        let pair = RayleighQuotientPair { a: a.clone(), b: a };
        let f = optimize_beamformer(&pair, 0.5).unwrap();
        assert!((f.power() - 0.5).abs() < 1e-9 * 0.5);
        assert!((pair.objective(&f.f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_domination_m2() {
        let mut rng = SimRng::new(21);
        let hu = random_vec(2, &mut rng);
        let he = random_vec(2, &mut rng);
        let pair = RayleighQuotientPair::from_effective(&hu, &he, 0.3, 0.2);
        let power = 1.7;
        let f = optimize_beamformer(&pair, power).unwrap();
        let best = pair.objective(&f.f);
        for _ in 0..10_000 {
            let g = random_sphere_point(2, power, &mut rng);
            assert!(pair.objective(&g) <= best * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pencil_eigenvalue_is_the_quotient_maximum() {
        let mut rng = SimRng::new(13);
        for _ in 0..20 {
            let hu = random_vec(4, &mut rng);
            let he = random_vec(4, &mut rng);
            let pair = RayleighQuotientPair::from_effective(&hu, &he, 0.7, 1.3);
            let p = 0.9;
            let (lambda, e) = pencil_max(&pair, p).unwrap();
            let f = e.scale(p.sqrt());
            assert!((pair.objective(&f) - lambda).abs() < 1e-8 * lambda);
        }
    }

    #[test]
    fn canonical_phase_makes_largest_entry_real() {
        let f = CVector::from_vec(vec![c(0.1, 0.2), c(-1.0, 1.0), c(0.0, 0.3)]);
        let g = canonical_phase(&f);
        assert_eq!(g[1].im, 0.0);
        assert!(g[1].re > 0.0);
        assert!((g.norm() - f.norm()).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_power() {
        let pair = RayleighQuotientPair {
            a: CMatrix::zeros(2, 2),
            b: CMatrix::zeros(2, 2),
        };
        assert!(optimize_beamformer(&pair, 0.0).is_err());
    }
}
