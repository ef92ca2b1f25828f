//! Randomized invariants across the crate.

use std::f64::consts::TAU;

use irs_secrecy::altopt::{alternate, AltOptions};
use irs_secrecy::channel::{derive_geometry, ChannelSet, SystemParams};
use irs_secrecy::harness::stats::{empirical_cdf, histogram};
use irs_secrecy::irsopt::{build_fractional, gaussian_randomization, lift, solve_relaxation};
use irs_secrecy::linalg::{CVector, C64};
use irs_secrecy::neural::{gradient_check, to_phase, MlpModel, Mode, TargetEncoding};
use irs_secrecy::rates::{
    effective_channel, effective_channel_vectorized, secrecy_rate, secrecy_rate_with, Beamformer, PhaseVector,
};
use irs_secrecy::rng::SimRng;
use irs_secrecy::sdp::{solve, SdpOptions, SdpProblem};
use irs_secrecy::txbf::{build_rayleigh_pair, f_step, pencil_max};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn params(m: usize, n: usize) -> SystemParams {
    SystemParams::default().with_sizes(m, n)
}

fn angles(n: usize, rng: &mut SimRng) -> Vec<f64> {
    (0..n).map(|_| rng.phase()).collect()
}

fn random_beamformer(m: usize, power: f64, rng: &mut SimRng) -> Beamformer {
    let v = CVector::from_fn(m, |_, _| rng.complex_normal());
    let n = v.norm();
    Beamformer::new(v.scale(power.sqrt() / n))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn channel_draw_is_pure(seed in any::<u64>(), m in 1usize..5, n in 1usize..8) {
        let p = params(m, n);
        prop_assert_eq!(ChannelSet::generate(&p, seed).unwrap(), ChannelSet::generate(&p, seed).unwrap());
    }

    #[test]
    fn geometry_identities_hold(d_ae in 1.0f64..200.0, extra in 0.1f64..50.0, d_ie in 0.1f64..20.0) {
        let d_au = d_ae + extra;
        let p = SystemParams::default().with_geometry(d_ae, d_au, d_ie).unwrap();
        let (d_eu, d_iu, d_ai) = derive_geometry(d_ae, d_au, d_ie).unwrap();
        prop_assert_eq!(p.d_eu, d_eu);
        prop_assert_eq!(p.d_eu, d_au - d_ae);
        prop_assert!(close(p.d_iu * p.d_iu, d_ie * d_ie + d_eu * d_eu, 1e-12));
        prop_assert!(close(p.d_ai * p.d_ai, d_ae * d_ae + d_ie * d_ie, 1e-12));
        prop_assert_eq!(p.d_iu, d_iu);
        prop_assert_eq!(p.d_ai, d_ai);
    }

    #[test]
    fn rates_ignore_common_snr_scaling(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let p = params(3, 5);
        let ch = ChannelSet::generate(&p, seed).unwrap();
        let mut rng = SimRng::new(seed);
        let f = random_beamformer(3, p.tx_power, &mut rng);
        let phase = PhaseVector::from_angles(&angles(5, &mut rng)).unwrap();
        let base = secrecy_rate(&ch, &f, &phase, &p).unwrap();
        let scaled_params = SystemParams { noise_user: p.noise_user * scale, noise_eve: p.noise_eve * scale, ..p.clone() };
        let scaled_f = Beamformer::new(f.f.scale(scale.sqrt()));
        let r = secrecy_rate(&ch, &scaled_f, &phase, &scaled_params).unwrap();
        prop_assert!(close(r.user, base.user, 1e-10));
        prop_assert!(close(r.eve, base.eve, 1e-10));
    }

    #[test]
    fn rates_ignore_global_beamformer_phase(seed in any::<u64>(), alpha in 0.0f64..TAU) {
        let p = params(4, 6);
        let ch = ChannelSet::generate(&p, seed).unwrap();
        let mut rng = SimRng::new(seed ^ 1);
        let f = random_beamformer(4, p.tx_power, &mut rng);
        let rot = Beamformer::new(f.f.map(|z| z * C64::from_polar(1.0, alpha)));
        let phase = PhaseVector::from_angles(&angles(6, &mut rng)).unwrap();
        let a = secrecy_rate(&ch, &f, &phase, &p).unwrap();
        let b = secrecy_rate(&ch, &rot, &phase, &p).unwrap();
        prop_assert!(close(a.user, b.user, 1e-12) && close(a.eve, b.eve, 1e-12));
    }

    #[test]
    fn effective_channel_forms_agree(seed in any::<u64>(), m in 1usize..6, n in 1usize..30) {
        let p = params(m, n);
        let ch = ChannelSet::generate(&p, seed).unwrap();
        let phase = PhaseVector::from_angles(&angles(n, &mut SimRng::new(seed))).unwrap();
        let a = effective_channel(&ch.h_iu, &phase, &ch.g, &ch.h_au).unwrap();
        let b = effective_channel_vectorized(&ch.h_iu, &phase, &ch.g, &ch.h_au).unwrap();
        prop_assert!((a - &b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn optimal_beamformer_uses_full_power_and_dominates(seed in any::<u64>()) {
        let p = params(4, 6);
        let ch = ChannelSet::generate(&p, seed).unwrap();
        let mut rng = SimRng::new(seed);
        let phase = PhaseVector::from_angles(&angles(6, &mut rng)).unwrap();
        let f = f_step(&ch, Some(&phase), &p).unwrap();
        prop_assert!(close(f.power(), p.tx_power, 1e-9));
        let best = secrecy_rate(&ch, &f, &phase, &p).unwrap().raw_difference();
        for _ in 0..1000 {
            let power = p.tx_power * rng.uniform();
            let g = random_beamformer(4, power, &mut rng);
            prop_assert!(secrecy_rate(&ch, &g, &phase, &p).unwrap().raw_difference() <= best + 1e-12);
        }
    }

    #[test]
    fn pencil_eigenvalue_matches_quotient(seed in any::<u64>()) {
        let p = params(3, 4);
        let ch = ChannelSet::generate(&p, seed).unwrap();
        let phase = PhaseVector::from_angles(&angles(4, &mut SimRng::new(seed))).unwrap();
        let pair = build_rayleigh_pair(&ch, Some(&phase), &p).unwrap();
        let (lambda, e) = pencil_max(&pair, p.tx_power).unwrap();
        let f = e.scale(p.tx_power.sqrt());
        prop_assert!(close(pair.objective(&f), lambda, 1e-8));
    }

    #[test]
    fn lifted_objective_reproduces_direct_ratio(seed in any::<u64>(), n in 1usize..10) {
        let p = params(3, n);
        let ch = ChannelSet::generate(&p, seed).unwrap();
        let mut rng = SimRng::new(seed);
        let f = random_beamformer(3, p.tx_power, &mut rng);
        let fq = build_fractional(&ch, &f, &p).unwrap();
        let phase = PhaseVector::from_angles(&angles(n, &mut rng)).unwrap();
        let direct = fq.objective(phase.phi());
        prop_assert!(close(fq.lifted_objective(&lift(phase.phi())), direct, 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn randomized_candidates_are_unit_modulus(seed in any::<u64>(), n in 1usize..6) {
        let p = params(2, n);
        let ch = ChannelSet::generate(&p, seed).unwrap();
        let f = f_step(&ch, Some(&PhaseVector::identity(n)), &p).unwrap();
        let fq = build_fractional(&ch, &f, &p).unwrap();
        let sol = solve_relaxation(&fq, &SdpOptions::default()).unwrap();
        let cand = gaussian_randomization(&sol, &fq, 50, &mut SimRng::new(seed)).unwrap();
        for z in cand.phase.phi().iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-15);
        }
        prop_assert!(cand.objective <= sol.upper_bound * (1.0 + 1e-9));
    }

    #[test]
    fn relaxation_bounds_every_grid_point(seed in any::<u64>()) {
        let p = params(2, 2);
        let ch = ChannelSet::generate(&p, seed).unwrap();
        let f = f_step(&ch, Some(&PhaseVector::identity(2)), &p).unwrap();
        let fq = build_fractional(&ch, &f, &p).unwrap();
        let sol = solve_relaxation(&fq, &SdpOptions::default()).unwrap();
        let pts = 48;
        for i in 0..pts {
            for j in 0..pts {
                let th = [TAU * i as f64 / pts as f64, TAU * j as f64 / pts as f64];
                let v = fq.objective(PhaseVector::from_angles(&th).unwrap().phi());
                prop_assert!(v <= sol.upper_bound * (1.0 + 1e-9), "{} > {}", v, sol.upper_bound);
            }
        }
    }

    #[test]
    fn random_sdp_satisfies_duality_and_shrinks_mu(seed in any::<u64>(), n in 2usize..7, k in 1usize..4) {
        let mut rng = SimRng::new(seed);
        let sym = |rng: &mut SimRng| {
            let a = DMatrix::from_fn(n, n, |_, _| rng.normal());
            (&a + a.transpose()).scale(0.5)
        };
        let c = sym(&mut rng);
        let root = DMatrix::from_fn(n, n, |_, _| rng.normal());
        let x0 = &root * root.transpose() + DMatrix::identity(n, n);
        let mut constraints = vec![DMatrix::identity(n, n)];
        for _ in 0..k {
            constraints.push(sym(&mut rng));
        }
        let b: Vec<f64> = constraints.iter().map(|a| a.dot(&x0)).collect();
        let problem = SdpProblem::new(c, constraints, b).unwrap();
        let sol = solve(&problem, &SdpOptions::default());
        prop_assert!(sol.is_optimal());
        prop_assert!(sol.dual_obj >= sol.primal_obj - 1e-9);
        for w in sol.mu_history.windows(2) {
            prop_assert!(w[1] <= 0.9 * w[0], "{:?}", sol.mu_history);
        }
    }

    #[test]
    fn alternating_trace_is_monotone_and_recomputes(seed in any::<u64>()) {
        let p = params(3, 5);
        let ch = ChannelSet::generate(&p, seed).unwrap();
        let d = alternate(&ch, &p, &AltOptions::default(), &mut SimRng::new(seed)).unwrap();
        for w in d.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        let again = secrecy_rate_with(&ch, &d.f, d.phase.as_ref(), &p).unwrap();
        prop_assert!((again.secrecy - d.rates.secrecy).abs() <= 1e-10);
    }

    #[test]
    fn backprop_matches_finite_differences(seed in any::<u64>(), width in 2usize..6, batch in 3usize..7) {
        let mut rng = SimRng::new(seed);
        let model = MlpModel::new(4, &[width, 3], 2, TargetEncoding::UnitCircle, &mut rng).unwrap();
        let x = DMatrix::from_fn(4, batch, |_, _| rng.normal());
        let t = DMatrix::from_fn(4, batch, |_, _| rng.normal());
        let err = gradient_check(&model, &x, &t).unwrap();
        prop_assert!(err < 1e-4, "{}", err);
    }

    #[test]
    fn decoded_predictions_are_unit_modulus(seed in any::<u64>()) {
        let mut rng = SimRng::new(seed);
        let model = MlpModel::new(6, &[5], 4, TargetEncoding::UnitCircle, &mut rng).unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.normal() * 1e3).collect();
        let theta = model.encoding.decode(&model.forward(&x, Mode::Infer).unwrap());
        let phase = to_phase(&theta).unwrap();
        for z in phase.phi().iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-15);
        }
        prop_assert!(phase.theta().iter().all(|t| (0.0..TAU).contains(t)));
    }

    #[test]
    fn distributions_are_normalized(xs in prop::collection::vec(-5.0f64..5.0, 1..200), bins in 1usize..40) {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pdf = histogram(&xs, bins, lo, hi);
        let area: f64 = pdf.density.iter().zip(pdf.edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum();
        prop_assert!((area - 1.0).abs() < 1e-9);
        let cdf = empirical_cdf(&xs);
        prop_assert!(cdf.probability.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(cdf.value.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(*cdf.probability.last().unwrap(), 1.0);
    }
}
