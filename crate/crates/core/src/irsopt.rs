//! IRS phase design for a fixed beamformer.
//!
//! With `f` fixed, the SNR ratio is a ratio of two quadratic forms in
//! `v = [phi; 1]`. Lifting `V = v v^H`, dropping the rank constraint and
//! applying the Charnes-Cooper change of variables `Z = mu V` yields the
//! linear SDP
//!
//! ```text
//!     max  tr(Γ_U Z) + mu (ν_U + 1)
//!     s.t. tr(Γ_E Z) + mu (ν_E + 1) = 1
//!          Z_nn = mu,  n = 1..N+1
//!          Z ⪰ 0, mu ≥ 0
//! ```
//!
//! A unit-modulus `phi` is recovered from `V = Z / mu` by Gaussian
//! randomization.

use nalgebra::DMatrix;

use crate::channel::{ChannelSet, SystemParams};
use crate::error::{Error, Result};
use crate::linalg::{conj_outer, hermitian_eigen, quad_form, trace_product, CMatrix, CVector, C64, ONE};
use crate::rates::{cascade_matrix, Beamformer, PhaseVector};
use crate::rng::SimRng;
use crate::sdp::{self, embed_hermitian, extract_hermitian, SdpOptions, SdpProblem, SdpSolution};

/// Fractional quadratic program in `v = [phi; 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalQuadratic {
    /// `(N+1)×(N+1)` Hermitian, last diagonal entry zero.
    pub gamma_u: CMatrix,
    pub gamma_e: CMatrix,
    pub nu_u: f64,
    pub nu_e: f64,
    /// `diag(h_iu) G`, `N×M`.
    pub k_u: CMatrix,
    /// `diag(h_ie) G`, `N×M`.
    pub k_e: CMatrix,
    /// `conj(f) f^T`, `M×M`.
    pub f_outer: CMatrix,
}

fn hermitian_part(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()).scale(0.5)
}

/// Lifted matrix `conj(b) b^T / σ²` for `b = [K f; h f]` with the constant
/// term moved out of the last diagonal entry. Returns the matrix and `ν`.
fn lifted_block(k: &CMatrix, h: &CVector, f_outer: &CMatrix, noise: f64) -> (CMatrix, f64) {
    let n = k.nrows();
    // K^* F K^T and friends, kept in the matrix form of the derivation
    let kc = k.map(|z| z.conj());
    let hc = h.map(|z| z.conj());
    let top_left = &kc * f_outer * k.transpose();
    let top_right = &kc * f_outer * h;
    let bottom_left = hc.transpose() * f_outer * k.transpose();
    let nu = (hc.transpose() * f_outer * h)[(0, 0)].re / noise;

    let mut gamma = CMatrix::zeros(n + 1, n + 1);
    gamma.view_mut((0, 0), (n, n)).copy_from(&top_left);
    gamma.view_mut((0, n), (n, 1)).copy_from(&top_right);
    gamma.view_mut((n, 0), (1, n)).copy_from(&bottom_left);
    (hermitian_part(gamma.unscale(noise)), nu)
}

impl FractionalQuadratic {
    pub fn elements(&self) -> usize {
        self.gamma_u.nrows() - 1
    }

    fn lifted_vector(phi: &CVector) -> CVector {
        let n = phi.len();
        CVector::from_fn(n + 1, |i, _| if i < n { phi[i] } else { ONE })
    }

    /// `(v^H Γ_U v + ν_U + 1) / (v^H Γ_E v + ν_E + 1)` for `v = [phi; 1]`.
    pub fn objective(&self, phi: &CVector) -> f64 {
        let v = Self::lifted_vector(phi);
        (quad_form(&self.gamma_u, &v) + self.nu_u + 1.0) / (quad_form(&self.gamma_e, &v) + self.nu_e + 1.0)
    }

    /// Objective with the IRS switched off (`phi = 0`).
    pub fn objective_without_irs(&self) -> f64 {
        (self.nu_u + 1.0) / (self.nu_e + 1.0)
    }

    /// Objective of a lifted matrix, `(tr(Γ_U V) + ν_U + 1) / (tr(Γ_E V) + ν_E + 1)`.
    pub fn lifted_objective(&self, v: &CMatrix) -> f64 {
        (trace_product(&self.gamma_u, v) + self.nu_u + 1.0) / (trace_product(&self.gamma_e, v) + self.nu_e + 1.0)
    }

    /// Charnes-Cooper SDP in real embedded form. The first equality is
    /// scaled to `β = ν_E + 1` so that `mu` stays near one; the objective of
    /// the returned problem is `β` times the lifted ratio.
    pub fn charnes_cooper_problem(&self) -> Result<(SdpProblem, f64)> {
        let n1 = self.gamma_u.nrows();
        let dim = 2 * n1 + 1;
        let mu_idx = 2 * n1;
        let beta = self.nu_e + 1.0;

        let block = |h: &CMatrix, corner: f64| -> Result<DMatrix<f64>> {
            let mut m = DMatrix::zeros(dim, dim);
            m.view_mut((0, 0), (2 * n1, 2 * n1)).copy_from(&embed_hermitian(h)?.scale(0.5));
            m[(mu_idx, mu_idx)] = corner;
            Ok(m)
        };
        let c = block(&self.gamma_u, self.nu_u + 1.0)?;
        let mut constraints = vec![block(&self.gamma_e, self.nu_e + 1.0)?];
        let mut b = vec![beta];
        for k in 0..n1 {
            let mut m = DMatrix::zeros(dim, dim);
            m[(k, k)] = 0.5;
            m[(k + n1, k + n1)] = 0.5;
            m[(mu_idx, mu_idx)] = -1.0;
            constraints.push(m);
            b.push(0.0);
        }
        Ok((SdpProblem::with_blocks(c, constraints, b, vec![2 * n1, 1])?, beta))
    }
}

/// Builds `Γ_U, Γ_E, ν_U, ν_E` for the beamformer `f`.
///
/// The eavesdropper block uses the same conjugation pattern as the user
/// block (`K_e^* F K_e^T`), which is what makes the quadratic form real.
pub fn build_fractional(ch: &ChannelSet, f: &Beamformer, params: &SystemParams) -> Result<FractionalQuadratic> {
    ch.check_dims(params)?;
    if f.f.len() != params.antennas {
        return Err(Error::DimensionMismatch(format!(
            "beamformer has {} entries, expected {}",
            f.f.len(),
            params.antennas
        )));
    }
    let k_u = cascade_matrix(&ch.h_iu, &ch.g);
    let k_e = cascade_matrix(&ch.h_ie, &ch.g);
    let f_outer = conj_outer(&f.f, &f.f);
    let (gamma_u, nu_u) = lifted_block(&k_u, &ch.h_au, &f_outer, params.noise_user);
    let (gamma_e, nu_e) = lifted_block(&k_e, &ch.h_ae, &f_outer, params.noise_eve);
    Ok(FractionalQuadratic {
        gamma_u,
        gamma_e,
        nu_u,
        nu_e,
        k_u,
        k_e,
        f_outer,
    })
}

/// Optimal point of the relaxed problem.
#[derive(Debug, Clone)]
pub struct LiftedSolution {
    /// `Z / mu`, unit diagonal.
    pub v: CMatrix,
    pub mu: f64,
    /// Lifted ratio attained by `v`.
    pub objective: f64,
    /// Dual objective; bounds the ratio over all unit-modulus `phi` up to the
    /// dual residual.
    pub upper_bound: f64,
    pub sdp: SdpSolution,
}

pub fn solve_relaxation(fq: &FractionalQuadratic, opts: &SdpOptions) -> Result<LiftedSolution> {
    let (problem, beta) = fq.charnes_cooper_problem()?;
    let sol = sdp::solve(&problem, opts).into_result()?;
    let n1 = fq.gamma_u.nrows();
    let z = extract_hermitian(&sol.x.view((0, 0), (2 * n1, 2 * n1)).into_owned());
    let mu = sol.x[(2 * n1, 2 * n1)];
    if !(mu > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("relaxation returned mu = {mu}")));
    }
    Ok(LiftedSolution {
        v: z.unscale(mu),
        mu: mu / beta,
        objective: sol.primal_obj / beta,
        upper_bound: sol.dual_obj / beta,
        sdp: sol,
    })
}

/// Best candidate found by randomization.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub phase: PhaseVector,
    pub objective: f64,
}

/// Draws `count` vectors from CN(0, V), rotates each so its last entry is
/// real, projects the first `N` entries onto the unit circle and keeps the
/// best by exact objective. Ties keep the earliest draw.
pub fn gaussian_randomization(
    sol: &LiftedSolution,
    fq: &FractionalQuadratic,
    count: usize,
    rng: &mut SimRng,
) -> Result<Candidate> {
    if count == 0 {
        return Err(Error::InvalidParameter("randomization count must be positive".into()));
    }
    let n1 = sol.v.nrows();
    let n = n1 - 1;
    let eig = hermitian_eigen(&sol.v)?;
    // eigenvalues below this are roundoff; keeping them would blur a rank-one V
    let floor = eig.values[n1 - 1].max(0.0) * 1e-12;
    let mut factor = eig.vectors.clone();
    for (k, mut col) in factor.column_iter_mut().enumerate() {
        let lam = if eig.values[k] > floor { eig.values[k] } else { 0.0 };
        col *= C64::new(lam.sqrt(), 0.0);
    }

    let mut best: Option<(CVector, f64)> = None;
    let mut z = CVector::zeros(n1);
    let mut phi = CVector::zeros(n);
    for _ in 0..count {
        for zi in z.iter_mut() {
            *zi = rng.complex_normal();
        }
        let xi = &factor * &z;
        let last = xi[n];
        let rot = if last.norm() > 0.0 { last.conj() / last.norm() } else { ONE };
        for k in 0..n {
            let e = xi[k] * rot;
            let mag = e.norm();
            phi[k] = if mag > 0.0 { e / mag } else { ONE };
        }
        let value = fq.objective(&phi);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((phi.clone(), value));
        }
    }
    let (phi, _) = best.expect("count >= 1");
    let phase = PhaseVector::from_complex(phi.as_slice());
    let objective = fq.objective(phase.phi());
    Ok(Candidate { phase, objective })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseOptions {
    pub randomization_count: usize,
    pub sdp: SdpOptions,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self {
            randomization_count: 500,
            sdp: SdpOptions::default(),
        }
    }
}

/// Outcome of one phase update.
#[derive(Debug, Clone)]
pub struct PhaseStep {
    /// Selected IRS state; the incumbent when no candidate improved on it.
    pub phase: Option<PhaseVector>,
    pub objective: f64,
    pub improved: bool,
    pub relaxation_bound: f64,
    pub sdp_iterations: usize,
}

/// Relaxation + randomization, accepting the candidate only if it strictly
/// beats the incumbent (`None` = IRS switched off).
pub fn phase_step(
    ch: &ChannelSet,
    f: &Beamformer,
    params: &SystemParams,
    incumbent: Option<&PhaseVector>,
    opts: &PhaseOptions,
    rng: &mut SimRng,
) -> Result<PhaseStep> {
    let fq = build_fractional(ch, f, params)?;
    let incumbent_value = match incumbent {
        Some(p) => fq.objective(p.phi()),
        None => fq.objective_without_irs(),
    };
    let relaxed = solve_relaxation(&fq, &opts.sdp)?;
    let cand = gaussian_randomization(&relaxed, &fq, opts.randomization_count, rng)?;
    let improved = cand.objective > incumbent_value;
    Ok(PhaseStep {
        phase: if improved { Some(cand.phase) } else { incumbent.cloned() },
        objective: if improved { cand.objective } else { incumbent_value },
        improved,
        relaxation_bound: relaxed.upper_bound,
        sdp_iterations: relaxed.sdp.iterations,
    })
}

/// Rank-one lift `V = v v^H` of `v = [phi; 1]`.
pub fn lift(phi: &CVector) -> CMatrix {
    let v = FractionalQuadratic::lifted_vector(phi);
    let mut m = CMatrix::zeros(v.len(), v.len());
    for j in 0..v.len() {
        for i in 0..v.len() {
            m[(i, j)] = v[i] * v[j].conj();
        }
    }
    m
}
