//! User, eavesdropper and secrecy rates for a fixed beamformer as the IRS
//! goes from switched off to identity reflection to random phases.

use irs_secrecy::channel::{ChannelSet, SystemParams};
use irs_secrecy::rates::{secrecy_rate_with, Beamformer, PhaseVector};
use irs_secrecy::rng::SimRng;

fn main() -> irs_secrecy::Result<()> {
    let params = SystemParams::default();
    let ch = ChannelSet::generate(&params, 7)?;
    // maximum-ratio transmission towards the user's direct link
    let mrt = ch.h_au.map(|z| z.conj());
    let f = Beamformer::new(mrt.scale(params.tx_power.sqrt() / mrt.norm()));

    let mut rng = SimRng::new(1);
    let random: Vec<f64> = (0..params.elements).map(|_| rng.phase()).collect();
    let cases = [
        ("IRS off", None),
        ("theta = 0", Some(PhaseVector::identity(params.elements))),
        ("random theta", Some(PhaseVector::from_angles(&random)?)),
    ];
    for (label, phase) in &cases {
        let r = secrecy_rate_with(&ch, &f, phase.as_ref(), &params)?;
        println!("{label:<13} R_u {:.4}  R_e {:.4}  R_sec {:.4} bits/s/Hz", r.user, r.eve, r.secrecy);
    }
    Ok(())
}
