//! Command-line driver for the cut-cell DG experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use cutdg::config::RunConfig;
use cutdg::error::Error;
use cutdg::harness::{self, Growth};

#[derive(Parser)]
#[command(name = "cutdg", version, about = "Cut-cell DG with domain-of-dependence stabilization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stabilization residual of projected global polynomials.
    Consistency(Common),
    /// Propagation-form identities on every stabilized cell.
    CheckAxioms(Common),
    /// Error table over the configured refinements.
    Convergence(Common),
    /// Integrates the configured problem and writes a trace.
    Evolve(Common),
    /// Long run on a sliver mesh with the background time step.
    Stability {
        #[command(flatten)]
        common: Common,
        /// Also run without stabilization and report its growth.
        #[arg(long)]
        no_dod: bool,
    },
    /// Mesh statistics and a mesh dump.
    MeshInfo(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the `output` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks, overriding the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; more than one enables the parallel assembly path.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Check,
    Config(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::IntegrationFailure { .. } | Error::SingularMass { .. } => {
                eprintln!("error: {e}");
                Failure::Check
            }
            e => Failure::Config(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

struct Run {
    cfg: RunConfig,
    out: Option<PathBuf>,
    parallel: bool,
}

impl Run {
    fn new(c: &Common) -> Result<Self, Failure> {
        let mut cfg = match &c.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                RunConfig::parse(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = c.seed {
            cfg.seed = seed;
        }
        if c.threads == 0 {
            return Err(Failure::Config(anyhow::anyhow!("--threads must be positive")));
        }
        if c.threads > 1 {
            rayon::ThreadPoolBuilder::new().num_threads(c.threads).build_global().context("starting thread pool")?;
        }
        let out = c.out.clone().or_else(|| cfg.output.clone());
        Ok(Run { cfg, out, parallel: c.threads > 1 })
    }

    fn emit(&self, name: &str, contents: &str) -> Result<(), Failure> {
        if let Some(dir) = &self.out {
            harness::write_output(dir, name, contents)?;
        }
        Ok(())
    }

    fn report(&self, contents: &str, pass: bool) -> Result<(), Failure> {
        print!("{contents}");
        self.emit("report.txt", contents)?;
        if pass {
            Ok(())
        } else {
            Err(Failure::Check)
        }
    }
}

fn execute(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Consistency(c) => {
            let run = Run::new(c)?;
            let rep = harness::consistency(&run.cfg, run.parallel)?;
            run.report(&rep.render(), rep.pass)
        }
        Command::CheckAxioms(c) => {
            let run = Run::new(c)?;
            let rep = harness::check_axioms(&run.cfg)?;
            run.report(&rep.render(), rep.pass)
        }
        Command::Convergence(c) => {
            let run = Run::new(c)?;
            let rows = harness::convergence(&run.cfg, run.parallel)?;
            let csv = harness::convergence_csv(&rows)?;
            print!("{csv}");
            run.emit("convergence.csv", &csv)?;
            if rows.iter().all(|r| r.l2_error.is_some()) {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
        Command::Evolve(c) => {
            let run = Run::new(c)?;
            let rep = harness::run_evolve(&run.cfg, run.parallel)?;
            run.emit("trace.csv", &rep.trace_csv()?)?;
            run.report(&rep.render(), true)
        }
        Command::Stability { common, no_dod } => {
            let run = Run::new(common)?;
            let rep = harness::stability(&run.cfg, *no_dod, run.parallel)?;
            if let Growth::Unstable { step } = rep.growth {
                eprintln!("stabilized run became non-finite at step {step}");
            }
            run.report(&rep.render(), rep.pass)
        }
        Command::MeshInfo(c) => {
            let run = Run::new(c)?;
            let info = harness::mesh_info(&run.cfg)?;
            run.emit("mesh.txt", &info.dump)?;
            run.report(&info.render(), true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
