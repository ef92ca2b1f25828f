//! Compares the no-IRS, single-phase-step and alternating schemes on fresh
//! realizations and writes the result files into a temporary directory.
//!
//! `cargo run --release --example scheme_comparison -- [realizations]`

use irs_secrecy::harness::{run_comparison, ExperimentConfig};

fn main() -> irs_secrecy::Result<()> {
    let realizations = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let out = std::env::temp_dir().join("irs-secrecy-comparison");
    let cfg = ExperimentConfig {
        realizations,
        bins: 20,
        out_dir: out.clone(),
        ..ExperimentConfig::default()
    };
    let cmp = run_comparison(&cfg, None, None)?;
    cmp.write_all(&out)?;
    for s in &cmp.summary.schemes {
        println!(
            "{:<12} mean {:.4}  median {:.4}  (R_u {:.3}, R_e {:.3})",
            s.scheme.as_str(),
            s.mean_secrecy,
            s.median_secrecy,
            s.mean_user,
            s.mean_eve
        );
    }
    println!("files written to {}", out.display());
    Ok(())
}
