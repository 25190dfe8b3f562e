//! Run orchestration and report files behind the `edue` command.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use edue_core::diagnostics::gap_trace_export;
use edue_core::io::{curves_csv, history_csv, read_scenario, scenario_point_csv, write_atomic};
use edue_core::loader::load_network;
use edue_core::solvers::{solve_scenario, ProximalStop};
use edue_core::vi::scenario_violation;
use edue_core::{bundled, Error, IterateHistory, Scenario, SolverConfig, Termination};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_ITERS: i32 = 3;
pub const EXIT_MAX_DNL: i32 = 4;

/// Share of the largest cell flow below which a cell counts as unused in reports.
pub const USED_THRESHOLD: f64 = 1e-3;

pub const HISTORY_FILE: &str = "history.csv";
pub const FINAL_POINT_FILE: &str = "final_point.csv";
pub const VIOLATION_FILE: &str = "violation.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const GAP_TRACE_FILE: &str = "gap_trace.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const ERROR_FILE: &str = "error.json";

/// Resolves `bundled:seven-arc`, `bundled:sioux-falls` or a file path.
pub fn load_scenario(arg: &str) -> anyhow::Result<Scenario> {
    match arg.strip_prefix("bundled:") {
        Some("seven-arc") => Ok(bundled::seven_arc()?),
        Some("sioux-falls") => Ok(bundled::sioux_falls()?),
        Some(other) => bail!("unknown bundled scenario `{other}` (expected seven-arc or sioux-falls)"),
        None => read_scenario(Path::new(arg)).with_context(|| format!("reading scenario `{arg}`")),
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub scenario: String,
    pub config: SolverConfig,
    pub out_dir: PathBuf,
    pub dump_curves: bool,
    pub gap_trace: bool,
    /// Adds wall-clock columns to the history; off by default so reruns are byte-identical.
    pub timings: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdSummary {
    pub od: String,
    pub demand: f64,
    /// `None` when the final demand is zero.
    pub avg_cost: Option<f64>,
}

/// Per-run row of the method comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub method: String,
    pub termination: String,
    pub iterations: usize,
    pub dnl_calls: usize,
    pub time_s: f64,
    pub final_gap: Option<f64>,
    pub seed: u64,
    pub od: Vec<OdSummary>,
    pub proximal: Option<ProximalStop>,
    pub config: SolverConfig,
}

#[derive(Debug, Serialize)]
struct ErrorRecord<'a> {
    scenario: &'a str,
    method: &'a str,
    error: String,
}

pub fn exit_code(t: Termination) -> i32 {
    match t {
        Termination::Converged => EXIT_CONVERGED,
        Termination::MaxIters => EXIT_MAX_ITERS,
        Termination::MaxDnl => EXIT_MAX_DNL,
        Termination::Error => EXIT_ERROR,
    }
}

fn json_bytes<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Solves and writes the artifacts; returns the summary and the process exit code.
/// Solver failures are recorded in `error.json` and reported as exit code 1.
pub fn run(spec: &RunSpec) -> anyhow::Result<(Option<RunSummary>, i32)> {
    fs::create_dir_all(&spec.out_dir)
        .with_context(|| format!("creating output directory `{}`", spec.out_dir.display()))?;
    let scenario = load_scenario(&spec.scenario)?;
    spec.config.validate()?;
    let started = std::time::Instant::now();
    let history = match solve_scenario(&scenario, &spec.config) {
        Ok(h) => h,
        Err(e) => {
            write_error(spec, &scenario, &e)?;
            return Ok((None, EXIT_ERROR));
        }
    };
    let elapsed = started.elapsed().as_secs_f64();
    let summary = write_artifacts(spec, &scenario, &history, elapsed)?;
    Ok((Some(summary), exit_code(history.termination)))
}

fn write_error(spec: &RunSpec, scenario: &Scenario, e: &Error) -> anyhow::Result<()> {
    log::error!("{e}");
    if let Error::InnerStall { best, .. } = e {
        write_atomic(&spec.out_dir.join(FINAL_POINT_FILE), &scenario_point_csv(best, scenario)?)?;
    }
    let record = ErrorRecord {
        scenario: &scenario.document().name,
        method: spec.config.method.label(),
        error: e.to_string(),
    };
    write_atomic(&spec.out_dir.join(ERROR_FILE), &json_bytes(&record)?)?;
    Ok(())
}

fn write_artifacts(
    spec: &RunSpec,
    scenario: &Scenario,
    history: &IterateHistory,
    elapsed: f64,
) -> anyhow::Result<RunSummary> {
    let out = &spec.out_dir;
    let od_ids: Vec<String> = scenario.od_pairs().iter().map(|o| o.id.clone()).collect();
    write_atomic(&out.join(HISTORY_FILE), &history_csv(history, &od_ids, spec.timings)?)?;
    write_atomic(&out.join(FINAL_POINT_FILE), &scenario_point_csv(&history.final_point, scenario)?)?;
    let violation = scenario_violation(&history.final_point, scenario, USED_THRESHOLD)?;
    write_atomic(&out.join(VIOLATION_FILE), &json_bytes(&violation)?)?;
    if spec.gap_trace {
        gap_trace_export(history, &od_ids, &out.join(GAP_TRACE_FILE))?;
    }
    if spec.dump_curves {
        let (curves, _) = load_network(&history.final_point.flow, scenario)?;
        write_atomic(&out.join(CURVES_FILE), &curves_csv(scenario, &curves)?)?;
    }
    let last = history.records.last();
    let od = od_ids
        .iter()
        .enumerate()
        .map(|(w, id)| OdSummary {
            od: id.clone(),
            demand: history.final_point.demand[w],
            avg_cost: last.map(|r| r.avg_cost[w]).filter(|v| v.is_finite()),
        })
        .collect();
    let summary = RunSummary {
        scenario: scenario.document().name.clone(),
        method: history.method.label().to_string(),
        termination: history.termination.label().to_string(),
        iterations: history.iterations(),
        dnl_calls: history.dnl_calls(),
        time_s: elapsed,
        final_gap: history.final_gap(),
        seed: spec.seed,
        od,
        proximal: history.proximal,
        config: spec.config.clone(),
    };
    write_atomic(&out.join(SUMMARY_FILE), &json_bytes(&summary)?)?;
    Ok(summary)
}

pub fn read_summary(path: &Path) -> anyhow::Result<RunSummary> {
    let text = fs::read_to_string(path).with_context(|| format!("reading `{}`", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing `{}`", path.display()))
}

/// Method comparison table with the fixed columns
/// `Scenario, Method, Iteration #, DNL #, Time (s), Termination`.
pub fn compare_runs(summaries: &[RunSummary]) -> anyhow::Result<String> {
    if summaries.len() < 2 {
        bail!("comparison needs at least two summaries, got {}", summaries.len());
    }
    let scenario = &summaries[0].scenario;
    if let Some(other) = summaries.iter().find(|s| &s.scenario != scenario) {
        bail!(
            "summaries mix scenarios `{scenario}` and `{}`; compare runs of one scenario at a time",
            other.scenario
        );
    }
    let header = ["Scenario", "Method", "Iteration #", "DNL #", "Time (s)", "Termination"];
    let rows: Vec<[String; 6]> = summaries
        .iter()
        .map(|s| {
            [
                s.scenario.clone(),
                s.method.clone(),
                s.iterations.to_string(),
                s.dnl_calls.to_string(),
                format!("{:.2}", s.time_s),
                s.termination.clone(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[&str]| -> String {
        let parts: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("| {} |\n", parts.join(" | "))
    };
    let mut table = line(&header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    table.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for r in &rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        table.push_str(&line(&cells));
    }
    Ok(table)
}
