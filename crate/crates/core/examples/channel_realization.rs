//! Draws one realization of every link and prints its size and average
//! power next to the large-scale gain it should match.

use irs_secrecy::channel::{ChannelSet, SystemParams};
use irs_secrecy::linalg::CVector;

fn mean_power(v: &CVector) -> f64 {
    v.norm_squared() / v.len() as f64
}

fn main() -> irs_secrecy::Result<()> {
    let params = SystemParams::default();
    println!(
        "M = {}, N = {}, d_au = {} m, d_ae = {} m, d_iu = {:.2} m, d_ai = {:.2} m",
        params.antennas, params.elements, params.d_au, params.d_ae, params.d_iu, params.d_ai
    );
    let ch = ChannelSet::generate(&params, 42)?;
    let g_power = ch.g.norm_squared() / ch.g.len() as f64;
    println!("link  entries  mean |h|^2     path gain");
    println!("G     {:>7}  {:.3e}  {:.3e}", ch.g.len(), g_power, params.gain_ai());
    for (name, v, gain) in [
        ("h_au", &ch.h_au, params.gain_au()),
        ("h_ae", &ch.h_ae, params.gain_ae()),
        ("h_iu", &ch.h_iu, params.gain_iu()),
        ("h_ie", &ch.h_ie, params.gain_ie()),
    ] {
        println!("{name:<5} {:>7}  {:.3e}  {:.3e}", v.len(), mean_power(v), gain);
    }
    let rho = ch.h_au.dotc(&ch.h_ae).norm() / (ch.h_au.norm() * ch.h_ae.norm());
    println!("|corr(h_au, h_ae)| = {rho:.3} (scattered parts drawn with r = {})", params.correlation);
    Ok(())
}
