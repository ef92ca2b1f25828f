//! Small dense complex linear-algebra helpers.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    /// Unit-norm eigenvectors stored as columns, matching `values`.
    pub vectors: CMatrix,
    pub sweeps: usize,
}

impl HermitianEigen {
    pub fn max_pair(&self) -> (f64, CVector) {
        let k = self.values.len() - 1;
        (self.values[k], self.vectors.column(k).into_owned())
    }
}

pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigen-solver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary, then applies a real Givens rotation. Sweeps stop once the
/// off-diagonal Frobenius norm falls below `tol * ‖A‖_F`.
pub fn hermitian_eigen_with(a: &CMatrix, tol: f64, max_sweeps: usize) -> Result<HermitianEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigen-solver needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    // work on the exactly Hermitian part
    let mut m = (a + a.adjoint()).scale(0.5);
    let mut v = CMatrix::identity(n, n);
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let mut sweeps = 0;

    while off_diagonal_norm(&m) > tol * scale {
        if sweeps == max_sweeps {
            return Err(Error::EigenNonConvergence {
                sweeps,
                residual: off_diagonal_norm(&m),
            });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = 0.5 * (2.0 * mag).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // U = diag(1, conj(phase)) * [[c, s], [-s, c]]
                let u_pp = C64::new(c, 0.0);
                let u_pq = C64::new(s, 0.0);
                let u_qp = phase.conj() * (-s);
                let u_qq = phase.conj() * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * u_pp + mkq * u_qp;
                    m[(k, q)] = mkp * u_pq + mkq * u_qq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = u_pp.conj() * mpk + u_qp.conj() * mqk;
                    m[(q, k)] = u_pq.conj() * mpk + u_qq.conj() * mqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)].re));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    Ok(HermitianEigen {
        values,
        vectors,
        sweeps,
    })
}

pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    hermitian_eigen_with(a, JACOBI_TOL, JACOBI_MAX_SWEEPS)
}

/// max |A - A^H|, scaled by max(1, max|A|).
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    let mut largest: f64 = 1.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
            largest = largest.max(a[(i, j)].norm());
        }
    }
    worst / largest
}

/// `x^H A x`, real part (exact for Hermitian `A`).
pub fn quad_form(a: &CMatrix, x: &CVector) -> f64 {
    x.dotc(&(a * x)).re
}

/// `conj(a) * b^T`, the Hermitian outer product used for `v^H Q v = |b^T v|^2`.
pub fn conj_outer(a: &CVector, b: &CVector) -> CMatrix {
    let mut out = CMatrix::zeros(a.len(), b.len());
    for j in 0..b.len() {
        for i in 0..a.len() {
            out[(i, j)] = a[i].conj() * b[j];
        }
    }
    out
}

/// Real trace of a product of two Hermitian matrices, `tr(A B)`.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = ZERO;
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s.re
}
