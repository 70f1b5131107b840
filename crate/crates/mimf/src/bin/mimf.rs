//! Command-line front end: generate benchmark instances, build their MILP
//! relaxations, solve LPs/MILPs, probe the hull conjecture, and run the
//! benchmark table. Machine-readable output goes to stdout, logs to
//! stderr (opt in with MIMF_LOG=info).

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mimf::bench::{
    aggregate_median, build_relaxed_milp, emit_table, generate_instance, run_experiment,
    BenchFormulation, TableFormat,
};
use mimf::io::{instance_from_json, instance_to_json, read_mps, write_mps};
use mimf::oracle::check_projection_conjecture;
use mimf::rng::Xorshift64Star;
use mimf::solver::{solve_lp, solve_milp, MilpOptions, SolveStatus};

#[derive(Parser)]
#[command(
    name = "mimf",
    about = "Convex-hull MILP relaxations for mixed-integer multilinear functions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormulationArg {
    Flambda,
    Frmc,
}

impl From<FormulationArg> for BenchFormulation {
    fn from(f: FormulationArg) -> Self {
        match f {
            FormulationArg::Flambda => BenchFormulation::FLambda,
            FormulationArg::Frmc => BenchFormulation::FRmc,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Lp,
    Milp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

#[derive(Args)]
struct OutputArg {
    /// Write output here instead of stdout.
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random benchmark instance as JSON.
    Generate {
        #[arg(short)]
        n: usize,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Demand is this factor times n.
        #[arg(long, default_value_t = 0.7)]
        demand_factor: f64,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Build the MILP relaxation of an instance and emit MPS.
    Build {
        /// Instance JSON path ('-' for stdin).
        #[arg(short, long)]
        input: String,
        #[arg(long, value_enum, default_value_t = FormulationArg::Flambda)]
        formulation: FormulationArg,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Solve an MPS model or an instance JSON; result as JSON.
    Solve {
        /// MPS or instance JSON path ('-' for stdin, sniffed by content).
        #[arg(short, long)]
        input: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Milp)]
        mode: ModeArg,
        /// Used when the input is an instance JSON.
        #[arg(long, value_enum, default_value_t = FormulationArg::Flambda)]
        formulation: FormulationArg,
        #[arg(long, default_value_t = 100_000)]
        node_limit: u64,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Probe the projection conjecture for one term shape; report as JSON.
    VerifyHull {
        /// Number of continuous factors.
        #[arg(long)]
        ni: usize,
        /// Number of binary factors.
        #[arg(long)]
        nj: usize,
        #[arg(long, default_value_t = 100)]
        directions: usize,
        /// Seeds the box draw (lower in (0,1), upper = 10 lower) and the
        /// direction sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-7)]
        tolerance: f64,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Run the benchmark protocol and emit a table.
    Bench {
        #[arg(short)]
        k: usize,
        /// Problem sizes, comma separated.
        #[arg(short, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Number of seeds per size (seeds 1..=count).
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, value_enum)]
        formulation: Option<FormulationArg>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Emit per-seed rows instead of per-size medians.
        #[arg(long)]
        raw: bool,
        #[arg(long, default_value_t = 0.7)]
        demand_factor: f64,
        #[arg(long, default_value_t = 100_000)]
        node_limit: u64,
        #[command(flatten)]
        out: OutputArg,
    },
}

fn log_enabled() -> bool {
    matches!(
        std::env::var("MIMF_LOG").as_deref(),
        Ok("info") | Ok("debug")
    )
}

macro_rules! log_info {
    ($($arg:tt)*) => {
        if log_enabled() {
            eprintln!($($arg)*);
        }
    };
}

fn read_input(path: &str) -> std::io::Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path)
    }
}

fn emit(out: &OutputArg, text: &str) -> std::io::Result<()> {
    match &out.output {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

/// Exit policy: 0 success, 1 usage or data error, 2 solver limit.
fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Generate {
            n,
            k,
            seed,
            demand_factor,
            out,
        } => {
            let instance =
                generate_instance(n, k, seed, demand_factor).map_err(|e| e.to_string())?;
            emit(&out, &instance_to_json(&instance)).map_err(|e| e.to_string())?;
            Ok(0)
        }
        Command::Build {
            input,
            formulation,
            out,
        } => {
            let text = read_input(&input).map_err(|e| format!("{input}: {e}"))?;
            let instance = instance_from_json(&text).map_err(|e| e.to_string())?;
            let (model, handles) =
                build_relaxed_milp(&instance, formulation.into()).map_err(|e| e.to_string())?;
            log_info!(
                "built {} rows, {} columns, {} lifted terms",
                model.num_constraints(),
                model.num_variables(),
                handles.len()
            );
            emit(&out, &write_mps(&model).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            Ok(0)
        }
        Command::Solve {
            input,
            mode,
            formulation,
            node_limit,
            out,
        } => {
            let text = read_input(&input).map_err(|e| format!("{input}: {e}"))?;
            let model = if text.trim_start().starts_with('{') {
                let instance = instance_from_json(&text).map_err(|e| e.to_string())?;
                build_relaxed_milp(&instance, formulation.into())
                    .map_err(|e| e.to_string())?
                    .0
            } else {
                read_mps(&text).map_err(|e| e.to_string())?
            };
            log_info!(
                "solving {} rows x {} columns",
                model.num_constraints(),
                model.num_variables()
            );
            let result = match mode {
                ModeArg::Lp => solve_lp(&model),
                ModeArg::Milp => solve_milp(
                    &model,
                    &MilpOptions {
                        node_limit,
                        ..MilpOptions::default()
                    },
                ),
            };
            let json = serde_json::to_string_pretty(&result).map_err(|e| e.to_string())?;
            emit(&out, &json).map_err(|e| e.to_string())?;
            match result.status {
                SolveStatus::NodeLimit | SolveStatus::IterLimit => Ok(2),
                _ => Ok(0),
            }
        }
        Command::VerifyHull {
            ni,
            nj,
            directions,
            seed,
            tolerance,
            out,
        } => {
            // Paper-style boxes: lower in (0, 1), upper = 10 lower.
            let mut rng = Xorshift64Star::new(seed);
            let bounds: Vec<(f64, f64)> = (0..ni)
                .map(|_| {
                    let l = rng.uniform();
                    (l, 10.0 * l)
                })
                .collect();
            let report = check_projection_conjecture(&bounds, nj, directions, tolerance, seed)
                .map_err(|e| e.to_string())?;
            log_info!(
                "{} directions, max membership slack {:.3e}",
                report.directions,
                report.max_membership_slack
            );
            let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            emit(&out, &json).map_err(|e| e.to_string())?;
            Ok(0)
        }
        Command::Bench {
            k,
            n,
            seeds,
            formulation,
            format,
            raw,
            demand_factor,
            node_limit,
            out,
        } => {
            let seed_list: Vec<u64> = (1..=seeds).collect();
            let formulations: Vec<BenchFormulation> = match formulation {
                Some(f) => vec![f.into()],
                None => BenchFormulation::BOTH.to_vec(),
            };
            let opts = MilpOptions {
                node_limit,
                ..MilpOptions::default()
            };
            let rows = run_experiment(&n, k, &seed_list, &formulations, demand_factor, &opts)
                .map_err(|e| e.to_string())?;
            let rows = if raw { rows } else { aggregate_median(&rows) };
            let table = emit_table(
                &rows,
                match format {
                    FormatArg::Csv => TableFormat::Csv,
                    FormatArg::Markdown => TableFormat::Markdown,
                },
            )
            .map_err(|e| e.to_string())?;
            emit(&out, &table).map_err(|e| e.to_string())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print to stdout and succeed; real usage
            // errors go to stderr with exit code 1.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
