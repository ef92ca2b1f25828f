//! Builds a small supervised dataset with the alternating optimizer, trains
//! the phase-prediction network and checks the learned phases against the
//! optimizer and the no-IRS baseline. Uses a reduced surface so it finishes
//! in about a minute.

use irs_secrecy::altopt::baseline_no_irs;
use irs_secrecy::channel::SystemParams;
use irs_secrecy::harness::{gen_dataset, ExperimentConfig};
use irs_secrecy::neural::{evaluate, train, TrainConfig};

fn main() -> irs_secrecy::Result<()> {
    let cfg = ExperimentConfig {
        system: SystemParams::default().with_sizes(4, 8),
        dataset_size: 400,
        ..ExperimentConfig::default()
    };
    let data = gen_dataset(&cfg, None)?;
    println!("{} samples, {} for training", data.samples.len(), data.header.train_count);

    let tc = TrainConfig {
        hidden: vec![64, 32],
        early_stop: Some(60),
        ..TrainConfig::default()
    };
    let (model, history) = train(&data.samples, &tc)?;
    for e in [0, 9, history.epochs() - 1] {
        println!(
            "epoch {:>3}: train {:.4e}  test {:.4e}",
            e + 1,
            history.train_loss[e],
            history.test_loss[e]
        );
    }

    let rates = evaluate(&model, data.test(), &cfg.system)?;
    let n = rates.len() as f64;
    let learned = rates.iter().map(|r| r.secrecy).sum::<f64>() / n;
    let optimized = data.test().iter().map(|s| s.target_rate).sum::<f64>() / n;
    let mut direct = 0.0;
    for s in data.test() {
        direct += baseline_no_irs(&s.channels, &cfg.system)?.rates.secrecy;
    }
    println!(
        "mean secrecy rate: learned {learned:.4}, alternating {optimized:.4}, no IRS {:.4} bits/s/Hz",
        direct / n
    );
    Ok(())
}
