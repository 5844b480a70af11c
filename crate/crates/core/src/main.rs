// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use readout_eta::experiment::{commands, exit_code, ChainInputs, Context, Overrides, SimMode};

/// Quantum-efficiency experiments on a simulated dispersive readout.
///
/// Exit status: 0 success, 1 selftest failure, 2 configuration or input
/// format error, 3 invalid physical input or degenerate weights, 4 fit
/// failure, 5 file system error.
#[derive(Parser)]
#[command(name = "readout-eta", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Noiseless,
    Mc,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shots per prepared state and drive amplitude in the SNR sweep.
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Subcommand)]
enum Command {
    /// Tune depletion, average transients and write the weight functions.
    CalibrateWeights(Common),
    /// Run the three-step extraction at one detuning.
    ExtractEta(Common),
    /// Repeat the extraction over detunings for all configured conditions.
    SweepDetuning(Common),
    /// Tune the depletion steps by Nelder–Mead and compare with the linear solve.
    OptimizeDepletion(Common),
    /// Fit the amplification-chain model to efficiency-versus-gain data.
    FitChain {
        #[command(flatten)]
        common: Common,
        /// CSV with columns gain_db, eta_e, eta_err.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        freq_ghz: Option<f64>,
        #[arg(long)]
        sections: Option<usize>,
    },
    /// Quick consistency checks of the models.
    Selftest,
}

fn context(c: &Common) -> readout_eta::Result<Context> {
    let overrides = Overrides {
        seed: c.seed,
        out: c.out.clone(),
        shots: c.shots,
        mode: c.mode.map(|m| match m {
            Mode::Noiseless => SimMode::Noiseless,
            Mode::Mc => SimMode::Mc,
        }),
    };
    Context::load(c.config.as_deref(), &overrides)
}

fn run(cli: Cli) -> readout_eta::Result<u8> {
    match cli.command {
        Command::CalibrateWeights(c) => {
            let r = commands::calibrate_weights(&context(&c)?)?;
            println!("epsilon_max = {:.6}", r.epsilon_max);
        }
        Command::ExtractEta(c) => {
            let r = commands::extract_eta(&context(&c)?)?;
            for w in &r.extraction.results {
                println!(
                    "{:<10} eta_e = {:.4} +/- {:.4} (a = {:.4}, sigma_m = {:.5})",
                    readout_eta::experiment::pipeline::weight_label(&w.weights),
                    w.eta.eta_e,
                    w.eta.eta_err,
                    w.eta.a,
                    w.eta.sigma_m
                );
            }
        }
        Command::SweepDetuning(c) => {
            let r = commands::sweep_detuning(&context(&c)?)?;
            for s in &r.stats {
                println!(
                    "{:<16} mean {:.4} std {:.4} slope {:+.4} +/- {:.4} /MHz ({} failed)",
                    s.condition, s.mean, s.std, s.slope_per_mhz, s.slope_err, s.n_failed
                );
            }
        }
        Command::OptimizeDepletion(c) => {
            let r = commands::optimize_depletion(&context(&c)?)?;
            if let Some(e) = r.depletion.relative_error {
                println!("relative deviation from linear solve: {:.2e} {:.2e} {:.2e} {:.2e}", e[0], e[1], e[2], e[3]);
            }
            if let Some(w) = r.depletion.tuneup.and_then(|t| t.warning) {
                eprintln!("warning: {w}");
            }
        }
        Command::FitChain {
            common,
            csv,
            freq_ghz,
            sections,
        } => {
            let inputs = ChainInputs {
                csv,
                freq_ghz,
                n_sections: sections,
            };
            let r = commands::fit_chain(&context(&common)?, &inputs)?;
            let (p, e) = (r.fit.params, r.fit.errors);
            println!(
                "eta_pre = {:.4} +/- {:.4}, loss = {:.3} +/- {:.3} dB, T_N = {:.3} +/- {:.3} K, chi2_red = {:.3}",
                p.eta_pre, e[0], p.insertion_loss_db, e[1], p.t_noise, e[2], r.fit.chi2_red
            );
        }
        Command::Selftest => {
            let checks = commands::selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
