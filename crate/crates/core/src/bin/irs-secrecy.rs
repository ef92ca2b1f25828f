use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irs_secrecy::altopt::Scheme;
use irs_secrecy::harness::{
    gen_dataset, load_dataset, optimize_realization, run_comparison, run_overfitting_study, save_dataset,
    write_overfit, ExperimentConfig,
};
use irs_secrecy::neural::{evaluate, load_checkpoint, save_checkpoint, train};
use irs_secrecy::Result;

#[derive(Parser)]
#[command(name = "irs-secrecy", version, about = "IRS-assisted secure downlink experiments")]
struct Cli {
    /// JSON experiment configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the base seed of the selected command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for realization-parallel commands.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the supervised dataset with the alternating optimizer.
    GenData,
    /// Train the phase-prediction network on the dataset.
    Train,
    /// Compare schemes on fresh channel realizations.
    Compare,
    /// Loss curves across training-set sizes and depths.
    OverfitStudy,
    /// Optimize a single realization and print the design.
    Optimize,
}

fn write_json<T: serde::Serialize>(value: &T, path: PathBuf) -> Result<()> {
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), value)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    match cli.command {
        Command::GenData => {
            if let Some(s) = cli.seed {
                cfg.dataset_seed = s;
            }
            let data = gen_dataset(&cfg, cli.threads)?;
            let path = cfg.dataset_path();
            save_dataset(&data, &path)?;
            println!(
                "wrote {} samples ({} train) to {}",
                data.samples.len(),
                data.header.train_count,
                path.display()
            );
        }
        Command::Train => {
            if let Some(s) = cli.seed {
                cfg.train.seed = s;
            }
            let data = load_dataset(&cfg.dataset_path())?;
            let mut tc = cfg.train.clone();
            tc.split = data.header.train_count as f64 / data.samples.len() as f64;
            let (model, history) = train(&data.samples, &tc)?;
            save_checkpoint(&model, &tc, &cfg.checkpoint_path())?;
            write_json(&history, cfg.out_dir.join("history.json"))?;
            let rates = evaluate(&model, data.test(), &data.header.params)?;
            let mean = rates.iter().map(|r| r.secrecy).sum::<f64>() / rates.len().max(1) as f64;
            println!(
                "{} epochs, final train loss {:.6e}, test loss {:.6e}, mean test secrecy rate {mean:.4} bits/s/Hz",
                history.epochs(),
                history.train_loss.last().copied().unwrap_or(f64::NAN),
                history.final_test_loss().unwrap_or(f64::NAN)
            );
        }
        Command::Compare => {
            if let Some(s) = cli.seed {
                cfg.eval_seed = s;
            }
            let model = if cfg.schemes.contains(&Scheme::Supervised) {
                Some(load_checkpoint(&cfg.checkpoint_path())?.0)
            } else {
                None
            };
            let cmp = run_comparison(&cfg, model.as_ref(), cli.threads)?;
            cmp.write_all(&cfg.out_dir)?;
            for s in &cmp.summary.schemes {
                println!(
                    "{:<12} mean {:.4}  median {:.4} bits/s/Hz",
                    s.scheme.as_str(),
                    s.mean_secrecy,
                    s.median_secrecy
                );
            }
        }
        Command::OverfitStudy => {
            if let Some(s) = cli.seed {
                cfg.train.seed = s;
            }
            let data = load_dataset(&cfg.dataset_path())?;
            let runs = run_overfitting_study(&data, &cfg.overfit, &cfg.train)?;
            write_overfit(&runs, &cfg.out_dir.join("overfit"))?;
            for r in &runs {
                println!(
                    "{:<18} final test loss {:.6e}",
                    r.label(),
                    r.history.final_test_loss().unwrap_or(f64::NAN)
                );
            }
        }
        Command::Optimize => {
            let seed = cli.seed.unwrap_or(cfg.eval_seed);
            let (_, d) = optimize_realization(&cfg.system, &cfg.optimizer, seed)?;
            println!("seed {seed}: {} iterations, converged {}", d.iterations, d.converged);
            for (k, z) in d.f.f.iter().enumerate() {
                println!("f[{k}] = {:+.6e} {:+.6e}j", z.re, z.im);
            }
            if let Some(p) = &d.phase {
                let theta: Vec<String> = p.theta().iter().map(|t| format!("{t:.4}")).collect();
                println!("theta = [{}]", theta.join(", "));
            }
            println!(
                "R_u = {:.6}  R_e = {:.6}  R_sec = {:.6} bits/s/Hz",
                d.rates.user, d.rates.eve, d.rates.secrecy
            );
            let record = serde_json::json!({
                "seed": seed,
                "iterations": d.iterations,
                "converged": d.converged,
                "f": d.f.f.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "theta": d.phase.as_ref().map(|p| p.theta().to_vec()),
                "rates": d.rates,
                "trace": d.trace,
            });
            write_json(&record, cfg.out_dir.join("optimize.json"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver_failure() { 2 } else { 1 })
        }
    }
}
