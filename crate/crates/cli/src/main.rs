use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ladder_dmrm::blocks::build_blocks;
use ladder_dmrm::cli_io::output::sidecar;
use ladder_dmrm::cli_io::{
    blocks_table, config_from_text, run_sweep, verify, window_rho, write_csv, write_sweep_files, OutputFormat,
    RunConfig, RungRange,
};
use ladder_dmrm::entanglement::{ggm_exact, ggm_from_window};
use ladder_dmrm::lattice::LadderSpec;
use ladder_dmrm::oracle::{rvb_literal_even, rvb_literal_odd};
use ladder_dmrm::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_CAP: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dmrm",
    version,
    about = "Two-rung reduced density matrices of RVB ladder states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Shared {
    /// Leg count, or a comma-separated list for sweeps
    #[arg(long)]
    legs: Option<String>,
    /// Total rungs, or start:end:step for sweeps
    #[arg(long)]
    rungs: Option<String>,
    #[arg(long)]
    periodic: bool,
    /// Largest window subset searched for the GGM (default 2M-1)
    #[arg(long)]
    max_subset: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Output file, or base path for sweep outputs
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// key=value settings file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Site cap for oracle state vectors
    #[arg(long)]
    oracle_cap: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the block scalars for one leg count
    Blocks(Shared),
    /// Print the normalised two-rung density matrix
    Rho(Shared),
    /// GGM of one ladder from its two-rung window
    Ggm {
        #[command(flatten)]
        shared: Shared,
        /// Also brute-force every bipartition of the oracle state
        #[arg(long)]
        exact: bool,
    },
    /// Sweep leg counts and rung ranges, writing CSV, JSON and a plot script
    Sweep(Shared),
    /// Compare the recursion against the exact oracle
    Verify(Shared),
}

impl Shared {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                config_from_text(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = &self.legs {
            cfg.set("legs", v)?;
        }
        if let Some(v) = &self.rungs {
            cfg.set("rungs", v)?;
        }
        if self.periodic {
            cfg.periodic = true;
        }
        if let Some(v) = self.max_subset {
            cfg.max_subset = Some(v);
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = &self.format {
            cfg.set("format", v)?;
        }
        if let Some(v) = self.oracle_cap {
            cfg.oracle_cap = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// A single ladder: one leg count and one rung count.
    fn single(&self) -> Result<(RunConfig, LadderSpec), Error> {
        let cfg = self.resolve()?;
        let [legs] = cfg.legs[..] else {
            return Err(Error::Validation("expected a single --legs value".into()));
        };
        let RungRange { start, end, .. } = cfg.rungs;
        if start != end {
            return Err(Error::Validation("expected a single --rungs value".into()));
        }
        let spec = LadderSpec::new(legs, start, cfg.periodic)?;
        Ok((cfg, spec))
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), Error> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

enum Outcome {
    Done,
    VerifyFailed,
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Blocks(shared) => {
            let cfg = shared.resolve()?;
            for &m in &cfg.legs {
                print!("{}", blocks_table(&build_blocks(m)?)?);
            }
        }
        Command::Rho(shared) => {
            let (cfg, spec) = shared.single()?;
            let (rho, _) = window_rho(&build_blocks(spec.legs)?, spec)?;
            let text = match cfg.format {
                OutputFormat::Csv => rho.to_text(),
                OutputFormat::Json => {
                    let rows: Vec<Vec<f64>> = (0..rho.dim())
                        .map(|i| (0..rho.dim()).map(|j| rho.matrix[(i, j)]).collect())
                        .collect();
                    let sites: Vec<String> = rho.sites.iter().map(ToString::to_string).collect();
                    serde_json::json!({ "spec": spec.to_string(), "sites": sites, "matrix": rows }).to_string() + "\n"
                }
            };
            emit(&cfg, &text)?;
        }
        Command::Ggm { shared, exact } => {
            let (cfg, spec) = shared.single()?;
            let lib = build_blocks(spec.legs)?;
            let (rho, _) = window_rho(&lib, spec)?;
            let g = ggm_from_window(&rho, cfg.max_subset_for(spec.legs))?;
            let mut text = format!(
                "{spec}: ggm={} lambda_sq_max={} argmax={}\n",
                g.ggm,
                g.lambda_sq_max,
                g.argmax_label()
            );
            if exact {
                let psi = if lib.is_even() {
                    rvb_literal_even(spec, cfg.oracle_cap)?
                } else {
                    rvb_literal_odd(spec, cfg.oracle_cap)?
                };
                let e = ggm_exact(&psi)?;
                text.push_str(&format!(
                    "exact: ggm={} lambda_sq_max={} argmax={}\n",
                    e.ggm,
                    e.lambda_sq_max,
                    e.argmax_label()
                ));
            }
            emit(&cfg, &text)?;
        }
        Command::Sweep(shared) => {
            let cfg = shared.resolve()?;
            let outcome = run_sweep(&cfg)?;
            match &cfg.out {
                Some(base) => {
                    let files = write_sweep_files(base, &cfg, &outcome)?;
                    eprintln!(
                        "wrote {}, {}, {}, {}",
                        files.csv.display(),
                        files.json.display(),
                        files.schema.display(),
                        files.plot.display()
                    );
                }
                None => match cfg.format {
                    OutputFormat::Csv => print!("{}", write_csv(&outcome.rows())),
                    OutputFormat::Json => println!(
                        "{}",
                        serde_json::to_string_pretty(&sidecar(&cfg, &outcome)).expect("sidecar serialises")
                    ),
                },
            }
        }
        Command::Verify(shared) => {
            let (cfg, spec) = shared.single()?;
            let report = verify(&build_blocks(spec.legs)?, spec.rungs, cfg.tol, cfg.oracle_cap)?;
            let text = match cfg.format {
                OutputFormat::Csv => format!("{report}\n"),
                OutputFormat::Json => serde_json::to_string_pretty(&report).expect("report serialises") + "\n",
            };
            emit(&cfg, &text)?;
            if !report.passed {
                return Ok(Outcome::VerifyFailed);
            }
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::VerifyFailed) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::CapExceeded { .. } => EXIT_CAP,
                _ => EXIT_VALIDATION,
            })
        }
    }
}
