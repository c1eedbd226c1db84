//! Replication runner and output files.
//!
//! For an output prefix `P` a run writes:
//!
//! * `P.replications.csv`: one row per (sweep value, replication),
//! * `P.summary.json`: seed-averaged values with standard errors,
//! * `P.metadata.json`: resolved scenario, version and wall-clock stamp,
//! * `P.trace.<point>.<replication>.csv` when traces are requested.
//!
//! Everything except the metadata file is a deterministic function of the
//! scenario, independent of the number of worker threads.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use dynmatch::sim::{run_simulation, Policy, SimConfig};
use dynmatch::stats::{mean_and_se, summarize, Report};
use dynmatch::theory::{
    batching_bounds, greedy_limits, patient_easy_waiting_small_lambda, patient_limits, small_lambda_limits,
    unmatched_hard_waiting_candidates, Predictions,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses all logical cores.
    pub jobs: Option<usize>,
    pub write_traces: bool,
}

#[derive(Debug, Clone)]
pub struct ReplicationResult {
    pub point: usize,
    pub sweep_value: Option<f64>,
    pub replication: usize,
    pub config: SimConfig,
    pub report: Report,
    pub trace_csv: Option<String>,
}

#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub replications: PathBuf,
    pub summary: PathBuf,
    pub metadata: PathBuf,
    pub traces: Vec<PathBuf>,
}

/// Theory values matching a configuration, when the regime has them.
pub fn predictions_for(config: &SimConfig) -> Option<Predictions> {
    let (lambda, d) = (config.lambda, config.d);
    if lambda < 0.0 {
        let mut p = small_lambda_limits(lambda, d).ok()?;
        if config.policy == Policy::Patient {
            p.w_e = patient_easy_waiting_small_lambda(lambda, d).ok()?;
        }
        return Some(p);
    }
    match config.policy {
        Policy::Greedy => greedy_limits(lambda, d).ok(),
        Policy::Patient => patient_limits(lambda, d).ok(),
        Policy::Batching { period } => batching_bounds(lambda, d, period).ok(),
    }
}

fn prediction_fields(p: Option<Predictions>) -> Vec<(&'static str, Option<f64>)> {
    vec![
        ("pred_q_H", p.map(|p| p.q_h)),
        ("pred_q_E", p.map(|p| p.q_e)),
        ("pred_w_H", p.map(|p| p.w_h)),
        ("pred_w_E", p.map(|p| p.w_e)),
        ("pred_rate_H", p.and_then(|p| p.dist_rate_h)),
    ]
}

fn period_of(policy: Policy) -> Option<f64> {
    match policy {
        Policy::Batching { period } => Some(period),
        _ => None,
    }
}

fn thread_pool(jobs: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        b = b.num_threads(j);
    }
    b.build().map_err(|e| CliError::Runtime(e.to_string()))
}

/// Runs every (sweep value, replication) pair, in parallel, returning results
/// in a fixed order.
pub fn run_replications(scenario: &Scenario, opts: RunOptions) -> CliResult<Vec<ReplicationResult>> {
    let tasks: Vec<(usize, Option<f64>, usize)> = scenario
        .sweep_values()
        .into_iter()
        .enumerate()
        .flat_map(|(point, v)| (0..scenario.replications).map(move |r| (point, v, r)))
        .collect();
    let pool = thread_pool(opts.jobs)?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|&(point, sweep_value, replication)| {
                let config = scenario.sim_config(sweep_value, replication);
                let trace = run_simulation(&config)?;
                let report = summarize(&trace, config.warmup_agents)?;
                let trace_csv = if opts.write_traces { Some(trace.to_csv_string()?) } else { None };
                Ok(ReplicationResult { point, sweep_value, replication, config, report, trace_csv })
            })
            .collect::<Result<Vec<_>, dynmatch::Error>>()
    })
    .map_err(|e| CliError::Runtime(e.to_string()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const ID_COLUMNS: [&str; 9] =
    ["sweep_parameter", "sweep_value", "replication", "seed", "policy", "m", "lambda", "d", "T"];

/// Header of the replication CSV.
pub fn replication_header() -> Vec<String> {
    ID_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(Report::csv_header())
        .chain(prediction_fields(None).into_iter().map(|(k, _)| k.to_string()))
        .collect()
}

pub fn write_replications_csv(scenario: &Scenario, results: &[ReplicationResult], path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(replication_header())?;
    let param = scenario.sweep.as_ref().map(|s| s.parameter.as_str()).unwrap_or("");
    for r in results {
        let c = &r.config;
        let mut row = vec![
            param.to_string(),
            fmt_opt(r.sweep_value),
            r.replication.to_string(),
            c.seed.to_string(),
            c.policy.name().to_string(),
            c.m.to_string(),
            c.lambda.to_string(),
            c.d.to_string(),
            fmt_opt(period_of(c.policy)),
        ];
        row.extend(r.report.csv_row());
        row.extend(prediction_fields(predictions_for(c)).into_iter().map(|(_, v)| fmt_opt(v)));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

/// Seed-averaged values and standard errors per sweep point.
pub fn summary_json(scenario: &Scenario, results: &[ReplicationResult]) -> Value {
    let mut points = Vec::new();
    for (point, value) in scenario.sweep_values().into_iter().enumerate() {
        let reps: Vec<&ReplicationResult> = results.iter().filter(|r| r.point == point).collect();
        let Some(first) = reps.first() else { continue };
        let mut mean = Map::new();
        let mut se = Map::new();
        for (k, key) in Report::csv_header().iter().enumerate() {
            let xs: Vec<f64> = reps.iter().filter_map(|r| r.report.flat()[k].1).collect();
            let (m, s) = mean_and_se(&xs).map_or((Value::Null, Value::Null), |(m, s)| (number(m), number(s)));
            mean.insert(key.clone(), m);
            se.insert(key.clone(), s);
        }
        let mut entry = json!({
            "sweep_value": value,
            "replications": reps.len(),
            "seeds": reps.iter().map(|r| r.config.seed).collect::<Vec<_>>(),
            "policy": first.config.policy.name(),
            "m": first.config.m,
            "lambda": first.config.lambda,
            "d": first.config.d,
            "T": period_of(first.config.policy),
            "mean": mean,
            "se": se,
            "predictions": predictions_for(&first.config),
        });
        if first.config.policy == Policy::Greedy && first.config.lambda > 0.0 {
            if let Ok((memoryless, closed_form)) = unmatched_hard_waiting_candidates(first.config.lambda, first.config.d)
            {
                entry["unmatched_hard_waiting_candidates"] =
                    json!({ "memoryless": memoryless, "closed_form": closed_form });
            }
        }
        points.push(entry);
    }
    json!({
        "sweep_parameter": scenario.sweep.as_ref().map(|s| s.parameter.as_str()),
        "points": points,
    })
}

/// Runs a scenario and writes all outputs.
pub fn run_scenario(scenario: &Scenario, opts: RunOptions) -> CliResult<OutputPaths> {
    let results = run_replications(scenario, opts)?;
    let prefix = &scenario.output;
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let paths = OutputPaths {
        replications: with_suffix(prefix, ".replications.csv"),
        summary: with_suffix(prefix, ".summary.json"),
        metadata: with_suffix(prefix, ".metadata.json"),
        traces: Vec::new(),
    };
    write_replications_csv(scenario, &results, &paths.replications)?;
    fs::write(&paths.summary, serde_json::to_string_pretty(&summary_json(scenario, &results))? + "\n")?;

    let mut traces = Vec::new();
    for r in &results {
        if let Some(csv) = &r.trace_csv {
            let path = with_suffix(prefix, &format!(".trace.{}.{}.csv", r.point, r.replication));
            fs::write(&path, csv)?;
            traces.push(path);
        }
    }

    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let metadata = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix": created,
        "jobs": opts.jobs.unwrap_or_else(rayon::current_num_threads),
        "scenario": scenario,
        "outputs": {
            "replications": paths.replications,
            "summary": paths.summary,
            "traces": traces,
        },
    });
    fs::write(&paths.metadata, serde_json::to_string_pretty(&metadata)? + "\n")?;
    Ok(OutputPaths { traces, ..paths })
}
