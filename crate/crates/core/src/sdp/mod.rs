//! Dense semidefinite programming with trace equality constraints.
//!
//! Problems are stated in the maximization form
//!
//! ```text
//!     max  tr(C X)
//!     s.t. tr(A_i X) = b_i,   i = 1..k
//!          X ⪰ 0
//! ```
//!
//! with dual `min b^T y  s.t.  S = Σ y_i A_i - C ⪰ 0`. `X` may carry a
//! block-diagonal structure; off-block entries are held at zero.
//! Complex Hermitian problems are handled through [`embed_hermitian`].

mod ipm;
mod triplet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, CMatrix};

pub use ipm::solve;
pub use triplet::{read_triplets, write_triplets};

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub c: DMatrix<f64>,
    pub constraints: Vec<DMatrix<f64>>,
    pub b: Vec<f64>,
    /// Sizes of the diagonal blocks of `X`, summing to `n`.
    pub blocks: Vec<usize>,
}

impl SdpProblem {
    /// Single dense block.
    pub fn new(c: DMatrix<f64>, constraints: Vec<DMatrix<f64>>, b: Vec<f64>) -> Result<Self> {
        let n = c.nrows();
        Self::with_blocks(c, constraints, b, vec![n])
    }

    pub fn with_blocks(
        c: DMatrix<f64>,
        constraints: Vec<DMatrix<f64>>,
        b: Vec<f64>,
        blocks: Vec<usize>,
    ) -> Result<Self> {
        let p = Self {
            c,
            constraints,
            b,
            blocks,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.nrows();
        if n == 0 || self.c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "objective must be square and nonempty, got {}x{}",
                self.c.nrows(),
                self.c.ncols()
            )));
        }
        if self.b.is_empty() || self.constraints.len() != self.b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint matrices for {} right-hand sides",
                self.constraints.len(),
                self.b.len()
            )));
        }
        if self.blocks.iter().sum::<usize>() != n || self.blocks.contains(&0) {
            return Err(Error::DimensionMismatch(format!("blocks {:?} do not partition {n}", self.blocks)));
        }
        let symmetric = |m: &DMatrix<f64>| {
            let scale = m.amax().max(1.0);
            (m - m.transpose()).amax() <= 1e-12 * scale
        };
        if !symmetric(&self.c) {
            return Err(Error::InvalidParameter("objective matrix is not symmetric".into()));
        }
        for (i, a) in self.constraints.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!("constraint {i} is {}x{}", a.nrows(), a.ncols())));
            }
            if !symmetric(a) {
                return Err(Error::InvalidParameter(format!("constraint {i} is not symmetric")));
            }
            if !self.respects_blocks(a) {
                return Err(Error::InvalidParameter(format!("constraint {i} couples distinct blocks")));
            }
        }
        if !self.respects_blocks(&self.c) {
            return Err(Error::InvalidParameter("objective couples distinct blocks".into()));
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite right-hand side".into()));
        }
        Ok(())
    }

    /// Block index of every row/column.
    pub(crate) fn block_of(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for (k, &s) in self.blocks.iter().enumerate() {
            out.extend(std::iter::repeat_n(k, s));
        }
        out
    }

    fn respects_blocks(&self, m: &DMatrix<f64>) -> bool {
        if self.blocks.len() == 1 {
            return true;
        }
        let owner = self.block_of();
        let n = self.dim();
        for j in 0..n {
            for i in 0..n {
                if owner[i] != owner[j] && m[(i, j)] != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// `A(X)_i = tr(A_i X)`.
    pub fn apply(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.constraints.iter().map(|a| a.dot(x)).collect()
    }

    /// `A^*(y) = Σ y_i A_i`.
    pub fn adjoint(&self, y: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for (a, &yi) in self.constraints.iter().zip(y) {
            add_scaled(&mut out, yi, a);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Relative duality gap target, scaled by `1 + |primal objective|`.
    pub gap_tol: f64,
    /// Absolute bound on `‖A(X) - b‖∞`; the dual residual is held to the
    /// same bound scaled by `max(1, ‖C‖∞)`.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary factor for step lengths.
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            residual_tol: 1e-8,
            max_iter: 200,
            step_fraction: 0.98,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub s: DMatrix<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `dual_obj - primal_obj`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SdpStatus,
    /// Complementarity measure `tr(XS)/n` at the start of every iteration
    /// and at exit.
    pub mu_history: Vec<f64>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Turns a non-optimal status into an error.
    pub fn into_result(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Sdp {
                status: self.status,
                iterations: self.iterations,
            })
        }
    }
}

/// `m += alpha * a`.
pub(crate) fn add_scaled(m: &mut DMatrix<f64>, alpha: f64, a: &DMatrix<f64>) {
    m.zip_apply(a, |x, y| *x += alpha * y);
}

/// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]` of a Hermitian matrix.
pub fn embed_hermitian(h: &CMatrix) -> Result<DMatrix<f64>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch("embedding needs a square matrix".into()));
    }
    if hermitian_defect(h) > 1e-12 {
        return Err(Error::InvalidParameter("matrix is not Hermitian".into()));
    }
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    // remove the rounding-level asymmetry the Hermitian check tolerates
    let sym = (&out + out.transpose()).scale(0.5);
    Ok(sym)
}

/// Inverse of [`embed_hermitian`] for an arbitrary symmetric `2n×2n`
/// matrix: averages the two copies of the real and imaginary parts.
pub fn extract_hermitian(x: &DMatrix<f64>) -> CMatrix {
    let n = x.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + n, j + n)]);
        let im = 0.5 * (x[(i + n, j)] - x[(i, j + n)]);
        nalgebra::Complex::new(re, im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{trace_product, C64};
    use crate::rng::SimRng;

    #[test]
    fn identity_embeds_to_identity() {
        let e = embed_hermitian(&CMatrix::identity(3, 3)).unwrap();
        assert_eq!(e, DMatrix::identity(6, 6));
    }

    #[test]
    fn pauli_y_embedding_spectrum() {
        let j = C64::new(0.0, 1.0);
        let z = C64::new(0.0, 0.0);
        let h = CMatrix::from_row_slice(2, 2, &[z, -j, j, z]);
        let e = embed_hermitian(&h).unwrap();
        let mut ev: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expect = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn real_matrix_embeds_block_diagonally() {
        let h = CMatrix::from_row_slice(2, 2, &[C64::new(2.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(3.0, 0.0)]);
        let e = embed_hermitian(&h).unwrap();
        let re = h.map(|z| z.re);
        assert_eq!(e.view((0, 0), (2, 2)), re.view((0, 0), (2, 2)));
        assert_eq!(e.view((2, 2), (2, 2)), re.view((0, 0), (2, 2)));
        assert_eq!(e.view((0, 2), (2, 2)).amax(), 0.0);
    }

    #[test]
    fn embedding_preserves_traces_and_spectrum() {
        let mut rng = SimRng::new(6);
        let rand_h = |rng: &mut SimRng| {
            let g = CMatrix::from_fn(4, 4, |_, _| rng.complex_normal());
            (&g + g.adjoint()).scale(0.5)
        };
        let h = rand_h(&mut rng);
        let x = rand_h(&mut rng);
        let eh = embed_hermitian(&h).unwrap();
        let ex = embed_hermitian(&x).unwrap();
        assert!((eh.dot(&ex) - 2.0 * trace_product(&h, &x)).abs() < 1e-12);

        let mut real_ev: Vec<f64> = eh.symmetric_eigenvalues().iter().copied().collect();
        real_ev.sort_by(f64::total_cmp);
        let cev = crate::linalg::hermitian_eigen(&h).unwrap().values;
        for (k, v) in cev.iter().enumerate() {
            assert!((real_ev[2 * k] - v).abs() < 1e-12);
            assert!((real_ev[2 * k + 1] - v).abs() < 1e-12);
        }
        let back = extract_hermitian(&eh);
        assert!((back - h).norm() < 1e-15);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let h = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(embed_hermitian(&h).is_err());
    }

    #[test]
    fn problem_validation() {
        let c = DMatrix::identity(2, 2);
        assert!(SdpProblem::new(c.clone(), vec![], vec![]).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(SdpProblem::new(c.clone(), vec![bad], vec![1.0]).is_err());
        let coupled = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(SdpProblem::with_blocks(c.clone(), vec![coupled], vec![1.0], vec![1, 1]).is_err());
        assert!(SdpProblem::with_blocks(c, vec![DMatrix::identity(2, 2)], vec![1.0], vec![1, 2]).is_err());
    }
}
