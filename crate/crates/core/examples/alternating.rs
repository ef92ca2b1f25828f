//! Alternating optimization on a few realizations, with its convergence trace
//! and the two benchmark schemes for reference.
//!
//! `cargo run --release --example alternating -- [realizations]`

use irs_secrecy::altopt::{alternate, baseline_ap_mev, baseline_no_irs, AltOptions};
use irs_secrecy::channel::{ChannelSet, SystemParams};
use irs_secrecy::irsopt::PhaseOptions;
use irs_secrecy::rng::SimRng;

fn main() -> irs_secrecy::Result<()> {
    let count: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let params = SystemParams::default();
    for seed in 0..count {
        let ch = ChannelSet::generate(&params, seed)?;
        let none = baseline_no_irs(&ch, &params)?;
        let mev = baseline_ap_mev(&ch, &params, &PhaseOptions::default(), &mut SimRng::with_stream(seed, 2))?;
        let alt = alternate(&ch, &params, &AltOptions::default(), &mut SimRng::with_stream(seed, 1))?;
        println!(
            "seed {seed}: no-IRS {:.4}  AP-MEV {:.4}  alternating {:.4} bits/s/Hz ({} iterations, converged {})",
            none.rates.secrecy, mev.rates.secrecy, alt.rates.secrecy, alt.iterations, alt.converged
        );
        let steps: Vec<String> = alt.trace.iter().map(|r| format!("{r:.5}")).collect();
        println!("  trace {}", steps.join(" "));
        println!("  R_u {:.4}  R_e {:.3e}", alt.rates.user, alt.rates.eve);
    }
    Ok(())
}
