//! Optimal transmit beamformer for a fixed IRS state versus random
//! full-power beamformers.

use irs_secrecy::channel::{ChannelSet, SystemParams};
use irs_secrecy::linalg::CVector;
use irs_secrecy::rates::PhaseVector;
use irs_secrecy::rng::SimRng;
use irs_secrecy::txbf::{build_rayleigh_pair, optimize_beamformer, pencil_max};

fn main() -> irs_secrecy::Result<()> {
    let params = SystemParams::default();
    let ch = ChannelSet::generate(&params, 3)?;
    let phase = PhaseVector::identity(params.elements);
    let pair = build_rayleigh_pair(&ch, Some(&phase), &params)?;
    let (lambda, _) = pencil_max(&pair, params.tx_power)?;
    let f = optimize_beamformer(&pair, params.tx_power)?;
    println!("largest generalized eigenvalue {lambda:.6}");
    println!("objective at f_opt            {:.6}", pair.objective(&f.f));
    println!("secrecy rate bound            {:.4} bits/s/Hz", lambda.log2());

    let mut rng = SimRng::new(5);
    let mut best: f64 = 0.0;
    for _ in 0..10_000 {
        let g = CVector::from_fn(params.antennas, |_, _| rng.complex_normal());
        let g = g.scale(params.tx_power.sqrt() / g.norm());
        best = best.max(pair.objective(&g));
    }
    println!("best of 10^4 random beamformers {best:.6}");
    Ok(())
}
