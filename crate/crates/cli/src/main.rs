//! heatbloch: certified schlicht disks for heat maps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use heatbloch_cli::config::{Overrides, RunConfig};
use heatbloch_cli::error::{CliError, CliResult};
use heatbloch_cli::pipeline::{self, BranchChoice};
use heatbloch_cli::report::{emit, OutputFormat};

#[derive(Parser)]
#[command(
    name = "heatbloch",
    version,
    about = "Certified univalent disks, Takahashi constants, and inversion for heat maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BranchArg {
    Interior,
    Origin,
    Best,
}

impl From<BranchArg> for BranchChoice {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Interior => BranchChoice::Interior,
            BranchArg::Origin => BranchChoice::Origin,
            BranchArg::Best => BranchChoice::Best,
        }
    }
}

#[derive(Args, Clone, Debug)]
struct CommonArgs {
    /// Run configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Seed override; every run is deterministic given (config, seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Growth factor override (clears r0).
    #[arg(long)]
    gamma: Option<f64>,
    /// Initial radius override (clears gamma).
    #[arg(long)]
    r0: Option<f64>,
    /// Contraction margin override.
    #[arg(long)]
    sigma: Option<f64>,
    /// Derivative-estimate constant override.
    #[arg(long = "a-m")]
    a_m: Option<f64>,
    /// Takahashi constant override.
    #[arg(long)]
    k: Option<f64>,
    /// Sample budget override.
    #[arg(long)]
    budget: Option<usize>,
    /// Certificate store path override.
    #[arg(long)]
    certs: Option<PathBuf>,
    /// Worker threads for the sampling loops; reports are byte-identical
    /// for any value.
    #[arg(long)]
    threads: Option<usize>,
}

impl CommonArgs {
    fn load_config(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            gamma: self.gamma,
            r0: self.r0,
            sigma: self.sigma,
            a_m: self.a_m,
            k: self.k,
            budget: self.budget,
            certs: self
                .certs
                .as_ref()
                .map(|p| p.display().to_string()),
        });
        cfg.validate()?;
        Ok(cfg)
    }

    fn store_path(&self, cfg: &RunConfig) -> CliResult<PathBuf> {
        if let Some(p) = &self.certs {
            return Ok(p.clone());
        }
        if let Some(p) = &cfg.certificate_store {
            return Ok(PathBuf::from(p));
        }
        Err(CliError::invalid(
            "no certificate store: set certificate_store in the config or pass --certs",
        ))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the Takahashi constant over a radii grid.
    EstimateK(CommonArgs),
    /// Run the full certification pipeline and store the certificates.
    Certify(CommonArgs),
    /// Invert the map at a target inside a certified disk.
    Invert {
        #[command(flatten)]
        common: CommonArgs,
        /// Target point, comma-separated coordinates (x_1,...,x_m,t).
        #[arg(long, short = 'w', allow_hyphen_values = true)]
        w: String,
        /// Which stored certificate to use.
        #[arg(long, value_enum, default_value = "best")]
        branch: BranchArg,
    },
    /// Re-check stored certificates; exit 0 only if everything passes.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the number of schlicht targets.
        #[arg(long)]
        targets: Option<usize>,
        /// Override the number of contraction pairs.
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Reproduce the constant optimization and the final bound table.
    Constants {
        /// Grid points per axis for the optimization.
        #[arg(long, default_value_t = 20_000)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
    },
}

fn parse_target(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| CliError::invalid(format!("bad coordinate {p:?}: {e}")))
        })
        .collect()
}

fn dispatch(command: Command) -> CliResult<u8> {
    match command {
        Command::EstimateK(common) => {
            let cfg = common.load_config()?;
            let report = with_pool(common.threads, || pipeline::run_estimate_k(&cfg))?;
            emit(&report.render(common.format.into())?, common.out.as_deref())?;
            Ok(0)
        }
        Command::Certify(common) => {
            let cfg = common.load_config()?;
            let (report, store) = with_pool(common.threads, || pipeline::run_certify(&cfg))?;
            let store_path = common.store_path(&cfg)?;
            store.save(&store_path)?;
            emit(&report.render(common.format.into())?, common.out.as_deref())?;
            Ok(0)
        }
        Command::Invert { common, w, branch } => {
            let cfg = common.load_config()?;
            let target = parse_target(&w)?;
            let store_path = common.store_path(&cfg)?;
            let report = with_pool(common.threads, || {
                pipeline::run_invert(&cfg, &store_path, &target, branch.into())
            })?;
            emit(&report.render(common.format.into())?, common.out.as_deref())?;
            Ok(0)
        }
        Command::Verify {
            common,
            targets,
            pairs,
        } => {
            let mut cfg = common.load_config()?;
            if let Some(t) = targets {
                cfg.tolerances.verify_targets = t;
            }
            if let Some(p) = pairs {
                cfg.tolerances.verify_pairs = p;
            }
            let store_path = common.store_path(&cfg)?;
            let report =
                with_pool(common.threads, || pipeline::run_verify(&cfg, &store_path))?;
            emit(&report.render(common.format.into())?, common.out.as_deref())?;
            Ok(if report.all_passed { 0 } else { 1 })
        }
        Command::Constants {
            resolution,
            out,
            format,
        } => {
            let report = pipeline::run_constants(resolution)?;
            emit(&report.render(format.into())?, out.as_deref())?;
            Ok(0)
        }
    }
}

/// Run inside a fixed-size rayon pool when requested; the deterministic
/// reductions make the output independent of the choice.
fn with_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> CliResult<T> + Send,
) -> CliResult<T> {
    match threads {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            pool.install(f)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
