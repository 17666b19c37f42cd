use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dagprobit::{Error, Result};
use dagprobit_cli::commands;
use dagprobit_cli::config::{
    file_sha256, EffectsSettings, EvaluateSettings, FileConfig, FitSettings, GridSettings, SimulateSettings,
};
use dagprobit_cli::exit_code;
use dagprobit_cli::io::TRUTH_FILES;

#[derive(Parser, Debug)]
#[command(name = "dagprobit", version, about = "Two-group Gaussian DAG-probit structure learning and causal effects")]
struct Cli {
    /// TOML file with top-level `seed`, `threads`, `out_dir` and one table per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate two groups of data plus the ground truth behind them.
    Simulate(SimulateArgs),
    /// Run the sampler on two group CSVs.
    Fit(FitArgs),
    /// Bayesian-model-averaged intervention effects from a fit's trace.
    Effects(EffectsArgs),
    /// Score a fit against a truth bundle, or run a replication grid.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    xi: Option<f64>,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Group 1 CSV (`y` then covariates).
    #[arg(long)]
    data1: Option<PathBuf>,
    #[arg(long)]
    data2: Option<PathBuf>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    edge_threshold: Option<f64>,
    #[arg(long)]
    x_tilde: Option<f64>,
    /// Use covariates as given instead of centering them.
    #[arg(long)]
    no_center: bool,
}

#[derive(Args, Debug)]
struct EffectsArgs {
    #[arg(long)]
    trace: Option<PathBuf>,
    /// 1-based node to intervene on; repeatable. Defaults to every covariate.
    #[arg(long = "node")]
    nodes: Vec<usize>,
    /// Intervention level; repeatable.
    #[arg(long = "x-tilde")]
    x_tilde: Vec<f64>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    truth_dir: Option<PathBuf>,
    #[arg(long)]
    fit_dir: Option<PathBuf>,
    /// Run the replication grid from `[evaluate.grid]` instead.
    #[arg(long)]
    grid: bool,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    q: Vec<usize>,
    #[arg(long)]
    xi: Vec<f64>,
}

fn required<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::Validation(format!("missing {what}")))
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(1);
    let out_dir = cli.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from("."));
    if let Some(n) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(a) => {
            let f = file.simulate;
            let s = SimulateSettings {
                q: a.q.or(f.q).unwrap_or(10),
                n1: a.n1.or(f.n1).unwrap_or(200),
                n2: a.n2.or(f.n2).unwrap_or(200),
                xi: a.xi.or(f.xi).unwrap_or(0.1),
                coef_range: (f.coef_min.unwrap_or(0.3), f.coef_max.unwrap_or(1.0)),
                d_range: (f.d_min.unwrap_or(0.5), f.d_max.unwrap_or(1.5)),
                theta_range: (f.theta_min.unwrap_or(-0.7), f.theta_max.unwrap_or(0.7)),
            };
            commands::simulate(&s, seed, &out_dir)
        }
        Command::Fit(a) => {
            let f = file.fit;
            let data = [
                required(a.data1.or(f.data1), "--data1")?,
                required(a.data2.or(f.data2), "--data2")?,
            ];
            let s = FitSettings {
                data_sha256: [file_sha256(&data[0])?, file_sha256(&data[1])?],
                data,
                iterations: a.iters.or(f.iterations).unwrap_or(5000),
                burn_in: a.burnin.or(f.burn_in).unwrap_or(1000),
                xi: a.xi.or(f.xi).unwrap_or(0.1),
                a: f.a,
                g1: f.g1,
                g2: f.g2,
                sigma0_sq: f.sigma0_sq.unwrap_or(0.5),
                edge_threshold: a.edge_threshold.or(f.edge_threshold).unwrap_or(0.5),
                zero_tol: f.zero_tol.unwrap_or(0.1),
                x_tilde: a.x_tilde.or(f.x_tilde).unwrap_or(1.0),
                targets: f.targets,
                center: !a.no_center && f.center.unwrap_or(true),
                exact_proposal_ratio: f.exact_proposal_ratio.unwrap_or(true),
            };
            commands::fit(&s, seed, &out_dir)
        }
        Command::Effects(a) => {
            let f = file.effects;
            let trace = required(a.trace.or(f.trace), "--trace")?;
            let s = EffectsSettings {
                trace_sha256: file_sha256(&trace)?,
                trace,
                nodes: if a.nodes.is_empty() { f.nodes } else { Some(a.nodes) },
                x_tilde: if a.x_tilde.is_empty() {
                    f.x_tilde.unwrap_or_else(|| vec![1.0])
                } else {
                    a.x_tilde
                },
            };
            commands::effects(&s, seed, &out_dir)
        }
        Command::Evaluate(a) => {
            let f = file.evaluate;
            let s = if a.grid || (f.grid.is_some() && a.truth_dir.is_none() && f.truth_dir.is_none()) {
                let g = f.grid.unwrap_or_default();
                let d = GridSettings::default();
                EvaluateSettings::Grid(GridSettings {
                    q: if a.q.is_empty() { g.q.unwrap_or(d.q) } else { a.q },
                    xi: if a.xi.is_empty() { g.xi.unwrap_or(d.xi) } else { a.xi },
                    sizes: g.sizes.unwrap_or(d.sizes),
                    replications: a.replications.or(g.replications).unwrap_or(d.replications),
                    iterations: a.iters.or(g.iterations).unwrap_or(d.iterations),
                    burn_in: a.burnin.or(g.burn_in).unwrap_or(d.burn_in),
                    x_tilde: g.x_tilde.unwrap_or(d.x_tilde),
                    include_skipped: g.include_skipped.unwrap_or(d.include_skipped),
                })
            } else {
                let truth_dir = required(a.truth_dir.or(f.truth_dir), "--truth-dir")?;
                let fit_dir = required(a.fit_dir.or(f.fit_dir), "--fit-dir")?;
                EvaluateSettings::Pair {
                    truth_sha256: TRUTH_FILES
                        .iter()
                        .map(|n| file_sha256(&truth_dir.join(n)))
                        .collect::<Result<Vec<String>>>()?,
                    trace_sha256: file_sha256(&fit_dir.join(commands::TRACE_FILE))?,
                    truth_dir,
                    fit_dir,
                }
            };
            commands::evaluate_cmd(&s, seed, &out_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
