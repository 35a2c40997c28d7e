use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sixdma::Execution;
use sixdma_cli::config::parse_powers;
use sixdma_cli::export::load_record;
use sixdma_cli::pipeline::{default_scene, load_scene};
use sixdma_cli::{cmd_export_geometry, cmd_optimize, cmd_sweep, cmd_verify, Failure, RunConfig};

/// Rotation and position design for 6DMA base stations.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design rotations, place the surfaces and evaluate against the sector baseline.
    Optimize(RunArgs),
    /// Evaluate a stored design at new power points (optimizes first without --run).
    Sweep {
        /// run.json of an earlier optimize.
        #[arg(long)]
        run: Option<PathBuf>,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Write geometry.json for a stored run.
    Export {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Recheck the placement of a stored run; exits with 2 if infeasible.
    Verify {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Print the reference scene as TOML.
    Scene {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone)]
struct PowerList(Vec<f64>);

fn parse_power_list(s: &str) -> Result<PowerList, String> {
    parse_powers(s).map(PowerList)
}

#[derive(Args)]
struct RunArgs {
    /// Scene TOML; the jittered reference scene when omitted.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// TOML with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Gradient iterations.
    #[arg(long)]
    kappa_max: Option<usize>,
    /// Fibonacci candidates for the greedy start.
    #[arg(long)]
    mbar: Option<usize>,
    /// Finite-difference step, radians.
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated transmit powers, dBm.
    #[arg(long, value_parser = parse_power_list, allow_hyphen_values = true)]
    powers: Option<PowerList>,
    /// Monte Carlo realizations per point; 0 disables sampling.
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Run every loop on the calling thread.
    #[arg(long)]
    sequential: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.kappa_max {
            c.kappa_max = v;
        }
        if let Some(v) = self.mbar {
            c.mbar = v;
        }
        if let Some(v) = self.eps {
            c.eps = v;
        }
        if let Some(v) = &self.powers {
            c.powers_dbm = v.0.clone();
        }
        if let Some(v) = self.mc_samples {
            c.mc_samples = v;
        }
        Ok(c)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn optimize(&self) -> Result<(), Failure> {
        let cfg = self.config()?;
        let scene = match &self.scene {
            Some(p) => load_scene(p)?,
            None => default_scene(cfg.seed),
        };
        let rec = cmd_optimize(&scene, &cfg, &self.out, self.exec())?;
        eprintln!(
            "objective {:.6} -> {:.6}, cube edge {:.4} m, wrote {}",
            rec.design.initial_objective,
            rec.design.trace.last().copied().unwrap_or(f64::NAN),
            rec.cube_edge(),
            self.out.display()
        );
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Optimize(args) => args.optimize(),
        Command::Sweep { run: None, args } => args.optimize(),
        Command::Sweep {
            run: Some(path),
            args,
        } => {
            let rec = load_record(&path)?;
            let powers = args
                .powers
                .clone()
                .map(|p| p.0)
                .unwrap_or_else(|| rec.config.powers_dbm.clone());
            let mc = args.mc_samples.unwrap_or(rec.config.mc_samples);
            print!("{}", cmd_sweep(&rec, &powers, mc, &args.out, args.exec())?);
            Ok(())
        }
        Command::Export { run, out } => cmd_export_geometry(&load_record(&run)?, &out),
        Command::Verify { run, tol } => {
            cmd_verify(&load_record(&run)?, tol)?;
            eprintln!("feasible");
            Ok(())
        }
        Command::Scene { seed } => {
            print!("{}", default_scene(seed).to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
