//! One phase update for a fixed beamformer: the semidefinite relaxation's
//! bound, the randomized candidate, and how both compare with the starting
//! phases.

use irs_secrecy::channel::{ChannelSet, SystemParams};
use irs_secrecy::irsopt::{build_fractional, gaussian_randomization, solve_relaxation};
use irs_secrecy::rates::PhaseVector;
use irs_secrecy::rng::SimRng;
use irs_secrecy::sdp::SdpOptions;
use irs_secrecy::txbf::f_step;

fn main() -> irs_secrecy::Result<()> {
    let params = SystemParams::default();
    let ch = ChannelSet::generate(&params, 11)?;
    let start = PhaseVector::identity(params.elements);
    let f = f_step(&ch, Some(&start), &params)?;
    let fq = build_fractional(&ch, &f, &params)?;

    let relaxed = solve_relaxation(&fq, &SdpOptions::default())?;
    println!(
        "relaxation: {} interior-point iterations, bound {:.6}, gap {:.2e}",
        relaxed.sdp.iterations, relaxed.upper_bound, relaxed.sdp.gap
    );
    let mut rng = SimRng::new(1);
    for draws in [1, 10, 100, 500] {
        let cand = gaussian_randomization(&relaxed, &fq, draws, &mut rng)?;
        println!(
            "{draws:>4} draws: ratio {:.6} ({:.3}% of bound)",
            cand.objective,
            100.0 * cand.objective / relaxed.upper_bound
        );
    }
    println!("theta = 0:  ratio {:.6}", fq.objective(start.phi()));
    println!("IRS off:    ratio {:.6}", fq.objective_without_irs());
    Ok(())
}
