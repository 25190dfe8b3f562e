use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use edue_cli::{compare_runs, load_scenario, read_summary, run, RunSpec, EXIT_ERROR};
use edue_core::diagnostics::scenario_monotonicity_probe;
use edue_core::io::{delay_field_csv, parse_flow_profile, write_atomic};
use edue_core::loader::delay_operator;
use edue_core::solvers::initial_point;
use edue_core::{Method, SolverConfig};

/// Elastic-demand dynamic user equilibrium solver.
///
/// SCENARIO is a JSON file or one of `bundled:seven-arc`, `bundled:sioux-falls`.
#[derive(Parser)]
#[command(name = "edue", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for equilibrium and write history, final point, violation and summary files.
    Solve(SolveArgs),
    /// Parse and validate a scenario.
    Validate { scenario: String },
    /// Load the network for one departure profile and write the delay field as CSV.
    Load {
        scenario: String,
        /// Profile in the final-point layout; the uniform start when absent.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value = "delay_field.csv")]
        out: PathBuf,
    },
    /// Sample monotonicity quotients of the traffic operator.
    Probe {
        scenario: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Path ids of the strongly monotone partition.
        #[arg(long, num_args = 1..)]
        strong: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate iterations, loadings and time of several runs of one scenario.
    Compare {
        #[arg(required = true, num_args = 1..)]
        summaries: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    scenario: String,
    #[arg(long, default_value = "projection")]
    method: Method,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    max_dnl: Option<usize>,
    #[arg(long)]
    ppm_a: Option<f64>,
    #[arg(long)]
    ppm_delta: Option<f64>,
    #[arg(long)]
    inner_alpha: Option<f64>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    inner_max_iters: Option<usize>,
    #[arg(long)]
    sa_scale: Option<f64>,
    /// Write the final point's cumulative curves.
    #[arg(long)]
    dump_curves: bool,
    /// Write the per-iteration gap and demand trace.
    #[arg(long)]
    gap_trace: bool,
    /// Include wall-clock time in the history.
    #[arg(long)]
    timings: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl SolveArgs {
    fn config(&self) -> SolverConfig {
        let mut c = SolverConfig::for_method(self.method);
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.epsilon {
            c.epsilon = v;
        }
        if let Some(v) = self.max_iters {
            c.max_iters = v;
        }
        if let Some(v) = self.max_dnl {
            c.max_dnl_calls = v;
        }
        if let Some(v) = self.ppm_a {
            c.ppm_a = v;
        }
        if let Some(v) = self.ppm_delta {
            c.ppm_delta = v;
        }
        if self.inner_alpha.is_some() {
            c.inner_alpha = self.inner_alpha;
        }
        if let Some(v) = self.inner_tol {
            c.inner_tol = v;
        }
        if let Some(v) = self.inner_max_iters {
            c.inner_max_iters = v;
        }
        if let Some(v) = self.sa_scale {
            c.sa_scale = v;
        }
        c
    }
}

fn execute(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Solve(args) => {
            let spec = RunSpec {
                scenario: args.scenario.clone(),
                config: args.config(),
                out_dir: args.out.clone(),
                dump_curves: args.dump_curves,
                gap_trace: args.gap_trace,
                timings: args.timings,
                seed: args.seed,
            };
            let (summary, code) = run(&spec)?;
            match summary {
                Some(s) => println!(
                    "{} {}: {} after {} iterations, {} loadings, {:.2} s",
                    s.scenario, s.method, s.termination, s.iterations, s.dnl_calls, s.time_s
                ),
                None => eprintln!("solve failed; see {}", args.out.join(edue_cli::ERROR_FILE).display()),
            }
            Ok(code)
        }
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            println!(
                "{}: {} nodes, {} links, {} OD pairs, {} paths, {} steps of {} h",
                s.document().name,
                s.document().nodes.len(),
                s.links().len(),
                s.od_pairs().len(),
                s.paths().len(),
                s.grid().n_steps(),
                s.grid().dt()
            );
            Ok(0)
        }
        Command::Load { scenario, profile, out } => {
            let s = load_scenario(&scenario)?;
            let h = match profile {
                Some(p) => {
                    let bytes = std::fs::read(&p).with_context(|| format!("reading `{}`", p.display()))?;
                    parse_flow_profile(&bytes, &s)?
                }
                None => initial_point(s.feasible_set()).flow,
            };
            let field = delay_operator(&h, &s)?;
            write_atomic(&out, &delay_field_csv(&s, &h, &field)?)?;
            Ok(0)
        }
        Command::Probe {
            scenario,
            samples,
            seed,
            strong,
            out,
        } => {
            let s = load_scenario(&scenario)?;
            let report = scenario_monotonicity_probe(&s, samples, seed, strong.as_deref())?;
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            match out {
                Some(p) => write_atomic(&p, text.as_bytes())?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Compare { summaries } => {
            let runs = summaries.iter().map(|p| read_summary(p)).collect::<anyhow::Result<Vec<_>>>()?;
            print!("{}", compare_runs(&runs)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
