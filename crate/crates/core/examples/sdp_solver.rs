//! The interior-point solver on a textbook problem: the max-cut relaxation
//! of a 5-cycle, whose optimum is known in closed form.

use irs_secrecy::sdp::{solve, SdpOptions, SdpProblem};
use nalgebra::DMatrix;

fn main() -> irs_secrecy::Result<()> {
    let n = 5;
    // max tr(L X)/4 s.t. X_ii = 1, X ⪰ 0, with L the cycle Laplacian
    let mut laplacian = DMatrix::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        laplacian[(i, i)] += 1.0;
        laplacian[(j, j)] += 1.0;
        laplacian[(i, j)] -= 1.0;
        laplacian[(j, i)] -= 1.0;
    }
    let constraints = (0..n)
        .map(|i| {
            let mut a = DMatrix::zeros(n, n);
            a[(i, i)] = 1.0;
            a
        })
        .collect();
    let problem = SdpProblem::new(laplacian.scale(0.25), constraints, vec![1.0; n])?;
    let sol = solve(&problem, &SdpOptions::default()).into_result()?;
    let exact = (25.0 + 5.0 * 5f64.sqrt()) / 8.0;
    println!("status {:?} after {} iterations", sol.status, sol.iterations);
    println!("primal {:.10}  dual {:.10}  gap {:.2e}", sol.primal_obj, sol.dual_obj, sol.gap);
    println!("closed form {exact:.10}");
    println!("primal residual {:.2e}  dual residual {:.2e}", sol.primal_residual, sol.dual_residual);
    Ok(())
}
