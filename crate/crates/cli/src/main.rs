use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gpwb::experiments::{self, ExperimentConfig, Mode};
use gpwb::{par, Error};

/// Moment-map and vortex-flow experiments.
#[derive(Parser, Debug)]
#[command(name = "gpwb", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Finite-dimensional gradient flow against the stability test.
    #[command(alias = "kempf_ness")]
    KempfNess(Common),
    /// Bisect the vortex threshold on L(d) with heat-flow convergence.
    #[command(alias = "vortex_threshold")]
    VortexThreshold(Common),
    /// Pairs (ℰ₁, ℰ₂, Φ) with ℰ₂ fixed.
    Pair(Common),
    /// Holomorphic triples with ℰ₂ fixed.
    Triple(Common),
    /// Coherent systems (ℰ, S).
    #[command(alias = "coherent_system")]
    CoherentSystem(Common),
    /// Twisted triples.
    #[command(alias = "twisted_triple")]
    TwistedTriple(Common),
    /// Higgs bundles with a fixed cotangent line.
    Higgs(Common),
    /// All named property checks.
    #[command(alias = "invariant_suite")]
    InvariantSuite(Common),
    /// Run whatever mode the config file names.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment config; its mode must match the subcommand.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Args, Debug)]
struct Overrides {
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory for report.txt, timing.txt and CSVs.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, value_name = "N", default_value_t = 0)]
    workers: usize,
    /// Convergence tolerance of the lattice heat flow.
    #[arg(long, value_name = "FLOAT")]
    tol: Option<f64>,
}

fn resolve(cmd: Cmd) -> Result<(ExperimentConfig, Overrides), Error> {
    let (mode, config, opts) = match cmd {
        Cmd::Run(a) => return Ok((ExperimentConfig::load(&a.config)?, a.opts)),
        Cmd::KempfNess(c) => (Mode::KempfNess, c.config, c.opts),
        Cmd::VortexThreshold(c) => (Mode::VortexThreshold, c.config, c.opts),
        Cmd::Pair(c) => (Mode::Pair, c.config, c.opts),
        Cmd::Triple(c) => (Mode::Triple, c.config, c.opts),
        Cmd::CoherentSystem(c) => (Mode::CoherentSystem, c.config, c.opts),
        Cmd::TwistedTriple(c) => (Mode::TwistedTriple, c.config, c.opts),
        Cmd::Higgs(c) => (Mode::Higgs, c.config, c.opts),
        Cmd::InvariantSuite(c) => (Mode::InvariantSuite, c.config, c.opts),
    };
    let cfg = match config {
        Some(path) => {
            let cfg = ExperimentConfig::load(&path)?;
            if cfg.mode != mode {
                return Err(Error::Config {
                    location: format!("{}: mode", path.display()),
                    message: format!("config is for {} but the subcommand is {mode}", cfg.mode),
                });
            }
            cfg
        }
        None => ExperimentConfig::for_mode(mode),
    };
    Ok((cfg, opts))
}

fn execute(cli: Cli) -> Result<(), Error> {
    let (mut cfg, opts) = resolve(cli.cmd)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = opts.tol {
        cfg.flow.tol = tol;
    }
    if let Some(out) = opts.out {
        cfg.output.dir = Some(out);
    }
    cfg.validate()?;
    let report = par::with_workers(opts.workers, || experiments::run(&cfg))?;
    print!("{}", report.to_text());
    if let Some(dir) = &cfg.output.dir {
        report.write(dir, cfg.output.csv)?;
        eprintln!("wrote {}", dir.display());
    }
    eprintln!("wall clock {:.2} s", report.wall_clock);
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::Format(_) => ExitCode::from(2),
                Error::Io { .. } => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
