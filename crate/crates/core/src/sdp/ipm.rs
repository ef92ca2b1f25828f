//! Infeasible primal-dual path-following method with Nesterov-Todd scaling
//! and Mehrotra predictor-corrector steps.
//!
//! Internally the problem is handled in minimization form
//! `min tr(C' X), A(X) = b, A^*(y) + S = C'` with `C' = -C`; the returned
//! multipliers are converted back to the maximization convention.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{add_scaled, SdpOptions, SdpProblem, SdpSolution, SdpStatus};

/// Constraint matrix with a triplet view when it has few nonzeros.
struct Prepared<'a> {
    dense: &'a DMatrix<f64>,
    sparse: Option<Vec<(usize, usize, f64)>>,
}

impl<'a> Prepared<'a> {
    fn new(a: &'a DMatrix<f64>) -> Self {
        let n = a.nrows();
        let nnz = a.iter().filter(|v| **v != 0.0).count();
        let sparse = (nnz <= 2 * n).then(|| {
            let mut entries = Vec::with_capacity(nnz);
            for j in 0..n {
                for i in 0..n {
                    let v = a[(i, j)];
                    if v != 0.0 {
                        entries.push((i, j, v));
                    }
                }
            }
            entries
        });
        Self { dense: a, sparse }
    }

    fn dot(&self, x: &DMatrix<f64>) -> f64 {
        match &self.sparse {
            Some(e) => e.iter().map(|&(i, j, v)| v * x[(i, j)]).sum(),
            None => self.dense.dot(x),
        }
    }

    fn add_to(&self, out: &mut DMatrix<f64>, alpha: f64) {
        match &self.sparse {
            Some(e) => {
                for &(i, j, v) in e {
                    out[(i, j)] += alpha * v;
                }
            }
            None => add_scaled(out, alpha, self.dense),
        }
    }
}

/// `tr(A W B W)` for two triplet-form symmetric matrices.
fn sparse_schur_entry(a: &[(usize, usize, f64)], b: &[(usize, usize, f64)], w: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for &(p, q, u) in a {
        for &(r, t, v) in b {
            acc += u * v * w[(q, r)] * w[(t, p)];
        }
    }
    acc
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

struct BlockMask {
    owner: Vec<usize>,
    active: bool,
}

impl BlockMask {
    fn apply(&self, m: &mut DMatrix<f64>) {
        if !self.active {
            return;
        }
        let n = m.nrows();
        for j in 0..n {
            for i in 0..n {
                if self.owner[i] != self.owner[j] {
                    m[(i, j)] = 0.0;
                }
            }
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix: Householder reduction to
/// tridiagonal form, then Sturm-sequence bisection.
fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 1 {
        return m[(0, 0)];
    }
    // column-major copy; only the trailing block is updated in place
    let mut a: Vec<f64> = m.as_slice().to_vec();
    let idx = |i: usize, j: usize| i + j * n;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n - 2 {
        let lo = k + 1;
        let norm = a[k * n + lo..k * n + n].iter().map(|x| x * x).sum::<f64>().sqrt();
        diag[k] = a[idx(k, k)];
        if norm == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let x0 = a[idx(lo, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        v[lo..n].copy_from_slice(&a[k * n + lo..k * n + n]);
        v[lo] -= alpha;
        let vnorm = (lo..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        off[k] = alpha;
        if vnorm == 0.0 {
            continue;
        }
        for vi in &mut v[lo..n] {
            *vi /= vnorm;
        }
        // trailing block <- H A H with H = I - 2 v v^T
        let vt = &v[lo..n];
        for j in lo..n {
            let col = &a[j * n + lo..j * n + n];
            p[j] = col.iter().zip(vt).map(|(x, y)| x * y).sum();
        }
        let kappa: f64 = vt.iter().zip(&p[lo..n]).map(|(x, y)| x * y).sum();
        for i in lo..n {
            p[i] -= kappa * v[i];
        }
        let pt = &p[lo..n];
        for j in lo..n {
            let (vj, pj) = (v[j], p[j]);
            let col = &mut a[j * n + lo..j * n + n];
            for ((x, vi), pi) in col.iter_mut().zip(vt).zip(pt) {
                *x -= 2.0 * (vi * pj + pi * vj);
            }
        }
    }
    diag[n - 2] = a[idx(n - 2, n - 2)];
    diag[n - 1] = a[idx(n - 1, n - 1)];
    off[n - 2] = a[idx(n - 1, n - 2)];

    // Gershgorin interval
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    // number of eigenvalues strictly below x
    let below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let denom = if q == 0.0 { f64::EPSILON * scale } else { q };
            q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * scale || mid <= lo || mid >= hi {
            break;
        }
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `min(1, frac * alpha_max)` where `alpha_max` is the largest step keeping
/// `X + alpha dX ⪰ 0`, given `L^{-1}` for the Cholesky factor `L` of `X`.
fn max_step(linv: &DMatrix<f64>, dx: &DMatrix<f64>, frac: f64) -> f64 {
    let mut y = linv * dx * linv.transpose();
    symmetrize(&mut y);
    let lambda_min = min_eigenvalue(&y);
    if lambda_min >= 0.0 {
        1.0
    } else {
        (frac / -lambda_min).min(1.0)
    }
}

fn lower_inverse(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    l.solve_lower_triangular(&DMatrix::identity(l.nrows(), l.ncols()))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> SdpSolution {
    let n = problem.dim();
    let k = problem.num_constraints();
    let nf = n as f64;
    let c_min = -&problem.c;
    let b = &problem.b;
    let prepared: Vec<Prepared> = problem.constraints.iter().map(Prepared::new).collect();
    let mask = BlockMask {
        owner: problem.block_of(),
        active: problem.blocks.len() > 1,
    };

    let a_norms: Vec<f64> = problem.constraints.iter().map(|a| a.norm()).collect();
    let c_norm = problem.c.norm();
    let c_inf = problem.c.amax().max(1.0);
    let b_inf = inf_norm(b);
    let xi = (10f64)
        .max(nf.sqrt())
        .max(a_norms.iter().zip(b).map(|(an, bi)| nf * (1.0 + bi.abs()) / (1.0 + an)).fold(0.0, f64::max));
    let eta = (10f64).max(nf.sqrt()).max(c_norm).max(a_norms.iter().copied().fold(0.0, f64::max));

    let mut x = DMatrix::<f64>::identity(n, n).scale(xi);
    let mut s = DMatrix::<f64>::identity(n, n).scale(eta);
    let mut y = vec![0.0; k];
    let mut mu_history = Vec::new();

    let apply = |m: &DMatrix<f64>| -> Vec<f64> { prepared.iter().map(|a| a.dot(m)).collect() };
    let adjoint = |v: &[f64]| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, n);
        for (a, &vi) in prepared.iter().zip(v) {
            if vi != 0.0 {
                a.add_to(&mut out, vi);
            }
        }
        out
    };

    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut stalled = 0;

    loop {
        let ax = apply(&x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut rd = &c_min - &s - adjoint(&y);
        symmetrize(&mut rd);
        let mu = x.dot(&s) / nf;
        mu_history.push(mu);

        let pobj = problem.c.dot(&x);
        let dobj: f64 = -b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum::<f64>();
        let scale = 1.0 + pobj.abs();
        let p_res = inf_norm(&rp);
        let d_res = rd.amax();
        if (dobj - pobj).abs() < opts.gap_tol * scale
            && mu * nf < opts.gap_tol * scale
            && p_res < opts.residual_tol
            && d_res < opts.residual_tol * c_inf
        {
            status = SdpStatus::Optimal;
            break;
        }
        let y_inf = inf_norm(&y);
        if x.trace() > 1e12 * (1.0 + xi) * (1.0 + b_inf) || y_inf > 1e12 * (1.0 + eta) {
            status = SdpStatus::Infeasible;
            break;
        }
        if iterations >= opts.max_iter || stalled >= 5 {
            break;
        }
        iterations += 1;

        let (Some(chol_x), Some(chol_s)) = (Cholesky::new(x.clone()), Cholesky::new(s.clone())) else {
            break;
        };
        let lx = chol_x.l();
        let ls = chol_s.l();
        let (Some(lx_inv), Some(ls_inv)) = (lower_inverse(&lx), lower_inverse(&ls)) else {
            break;
        };

        // Nesterov-Todd scaling: G with G^T S G = G^{-1} X G^{-T} = diag(d)
        let r = ls.transpose() * &lx;
        let mut kmat = r.transpose() * &r;
        symmetrize(&mut kmat);
        let eig = kmat.symmetric_eigen();
        let d: DVector<f64> = eig.eigenvalues.map(|v| v.max(f64::MIN_POSITIVE).sqrt());
        let mut q = eig.eigenvectors;
        for (jcol, mut col) in q.column_iter_mut().enumerate() {
            col /= d[jcol].sqrt();
        }
        let g = &lx * q;
        let mut w = &g * g.transpose();
        symmetrize(&mut w);
        mask.apply(&mut w);

        // Schur complement M_ij = tr(A_i W A_j W); dense rows go through W A_i W
        let dense_rows: Vec<Option<DMatrix<f64>>> = prepared
            .iter()
            .map(|a| {
                a.sparse.is_none().then(|| {
                    let mut p = &w * a.dense * &w;
                    symmetrize(&mut p);
                    p
                })
            })
            .collect();
        let mut m = DMatrix::<f64>::zeros(k, k);
        for jc in 0..k {
            for ic in 0..=jc {
                let v = match (&dense_rows[ic], &dense_rows[jc]) {
                    (Some(pi), _) => prepared[jc].dot(pi),
                    (None, Some(pj)) => prepared[ic].dot(pj),
                    (None, None) => sparse_schur_entry(
                        prepared[ic].sparse.as_deref().expect("sparse"),
                        prepared[jc].sparse.as_deref().expect("sparse"),
                        &w,
                    ),
                };
                m[(ic, jc)] = v;
                m[(jc, ic)] = v;
            }
        }
        let chol_m = match Cholesky::new(m.clone()) {
            Some(cm) => cm,
            None => {
                let bump = 1e-14 * m.diagonal().amax().max(1.0);
                let mut mr = m.clone();
                for i in 0..k {
                    mr[(i, i)] += bump;
                }
                match Cholesky::new(mr) {
                    Some(cm) => cm,
                    None => break,
                }
            }
        };
        let mut wrdw = &w * &rd * &w;
        symmetrize(&mut wrdw);

        let direction = |rhat: &DMatrix<f64>| -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
            let q0 = rhat - &wrdw;
            let a_q0 = apply(&q0);
            let h = DVector::from_iterator(k, rp.iter().zip(&a_q0).map(|(r, a)| r - a));
            let dy = chol_m.solve(&h);
            let dyv: Vec<f64> = dy.iter().copied().collect();
            let a_dy = adjoint(&dyv);
            let mut dx = q0 + &w * &a_dy * &w;
            symmetrize(&mut dx);
            mask.apply(&mut dx);
            let mut ds = &rd - a_dy;
            symmetrize(&mut ds);
            mask.apply(&mut ds);
            (dx, dyv, ds)
        };

        // predictor (affine scaling): X + W dS W = -X
        let (dx_a, _dy_a, ds_a) = direction(&(-&x));
        let ap = max_step(&lx_inv, &dx_a, 1.0);
        let ad = max_step(&ls_inv, &ds_a, 1.0);
        let mu_aff = (&x + dx_a.scale(ap)).dot(&(&s + ds_a.scale(ad))) / nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector in the scaled space
        let gt = g.transpose();
        let ds_scaled = &gt * &ds_a * &g;
        let mut dx_scaled = -ds_scaled.clone();
        for i in 0..n {
            dx_scaled[(i, i)] -= d[i];
        }
        let cross = &dx_scaled * &ds_scaled;
        let mut rc = -(&cross + cross.transpose()).scale(0.5);
        for i in 0..n {
            rc[(i, i)] += sigma * mu - d[i] * d[i];
        }
        let t = DMatrix::<f64>::from_fn_generic(Dyn(n), Dyn(n), |i, j| 2.0 * rc[(i, j)] / (d[i] + d[j]));
        let mut rhat = &g * t * &gt;
        symmetrize(&mut rhat);
        let (dx, dy, ds) = direction(&rhat);

        let ap = max_step(&lx_inv, &dx, opts.step_fraction);
        let ad = max_step(&ls_inv, &ds, opts.step_fraction);
        if ap < 1e-10 && ad < 1e-10 {
            stalled += 1;
        } else {
            stalled = 0;
        }
        add_scaled(&mut x, ap, &dx);
        add_scaled(&mut s, ad, &ds);
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += ad * di;
        }
        symmetrize(&mut x);
        symmetrize(&mut s);
    }

    let ax = apply(&x);
    let primal_residual = inf_norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
    let y_max: Vec<f64> = y.iter().map(|v| -v).collect();
    let s_check = problem.adjoint(&y_max) - &problem.c - &s;
    let primal_obj = problem.c.dot(&x);
    let dual_obj: f64 = b.iter().zip(&y_max).map(|(bi, yi)| bi * yi).sum();
    SdpSolution {
        x,
        y: y_max,
        s,
        primal_obj,
        dual_obj,
        gap: dual_obj - primal_obj,
        primal_residual,
        dual_residual: s_check.amax(),
        iterations,
        status,
        mu_history,
    }
}
