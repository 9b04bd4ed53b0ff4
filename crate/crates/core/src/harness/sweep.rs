use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{GsamError, Result};

use super::config::ExperimentConfig;
use super::output::{read_summary, write_file, write_outputs};
use super::run::{run, RunResult, RunSummary};

/// One `key=v1,v2,...` grid dimension; `key` is a dotted path into the
/// config tree, e.g. `optimizer.alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

impl GridAxis {
    /// Values are TOML literals; anything that does not parse is a string,
    /// so `optimizer.variant=sam,gsam` works unquoted.
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| GsamError::Argument(format!("grid axis {spec:?} is not of the form key=v1,v2")))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(GsamError::Argument(format!("bad grid key {key:?}")));
        }
        let values: Vec<toml::Value> = values.split(',').map(|v| parse_literal(v.trim())).collect();
        if values.iter().any(|v| matches!(v, toml::Value::String(s) if s.is_empty())) {
            return Err(GsamError::Argument(format!("empty value in grid axis {spec:?}")));
        }
        Ok(GridAxis {
            key: key.to_string(),
            values,
        })
    }
}

fn parse_literal(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

fn render(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("non-empty key");
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| GsamError::Argument(format!("grid key {key:?}: {p:?} is not a table")))?;
    }
    // Integers written where the config has a float stay floats.
    let value = match (&value, cur.get(last)) {
        (toml::Value::Integer(i), Some(toml::Value::Float(_))) => toml::Value::Float(*i as f64),
        _ => value,
    };
    cur.insert(last.to_string(), value);
    Ok(())
}

/// One grid point: the overrides applied and the resulting config.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub overrides: Vec<(String, String)>,
    pub config: ExperimentConfig,
}

impl GridPoint {
    pub fn label(&self) -> String {
        self.overrides.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}

/// Cartesian product of `grid` over `base`, last axis varying fastest.
/// Every point is validated before anything runs.
pub fn expand_grid(base: &toml::Table, grid: &[GridAxis]) -> Result<Vec<GridPoint>> {
    if grid.is_empty() || grid.iter().any(|a| a.values.is_empty()) {
        return Err(GsamError::Argument("sweep grid is empty".into()));
    }
    let mut combos: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for (ai, axis) in grid.iter().enumerate() {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (0..axis.values.len()).map(move |vi| {
                    let mut c = c.clone();
                    c.push((ai, vi));
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|combo| {
            let mut table = base.clone();
            let mut overrides = Vec::new();
            for (ai, vi) in combo {
                let axis = &grid[ai];
                let v = axis.values[vi].clone();
                overrides.push((axis.key.clone(), render(&v)));
                set_path(&mut table, &axis.key, v)?;
            }
            let config = ExperimentConfig::from_toml_table(table)?;
            Ok(GridPoint { overrides, config })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SweepRun {
    pub index: usize,
    pub point: String,
    pub seed: u64,
    /// Errors other than divergence end up here; divergence is a completed
    /// `RunResult` with a failed status.
    pub outcome: std::result::Result<RunResult, String>,
}

impl SweepRun {
    pub fn summary(&self) -> Option<&RunSummary> {
        self.outcome.as_ref().ok().map(|r| &r.summary)
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub runs: Vec<SweepRun>,
}

/// Runs every `(point, seed)` pair. Each run is single-threaded; up to
/// `parallelism` run at once. Results come back in job order regardless of
/// scheduling.
pub fn sweep(points: &[GridPoint], parallelism: usize) -> Result<SweepResult> {
    if points.is_empty() {
        return Err(GsamError::Argument("sweep needs at least one configuration".into()));
    }
    if parallelism == 0 {
        return Err(GsamError::Argument("parallelism must be at least 1".into()));
    }
    let jobs: Vec<(String, &ExperimentConfig, u64)> = points
        .iter()
        .flat_map(|p| p.config.seeds.iter().map(move |&s| (p.label(), &p.config, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| GsamError::Argument(format!("cannot build thread pool: {e}")))?;
    let runs = pool.install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(index, (point, cfg, seed))| SweepRun {
                index,
                point: point.clone(),
                seed: *seed,
                outcome: run(cfg, *seed).map_err(|e| e.to_string()),
            })
            .collect()
    });
    Ok(SweepResult { runs })
}

/// Sweep over ready-made configs (each with its own seed list).
pub fn sweep_configs(configs: &[ExperimentConfig], parallelism: usize) -> Result<SweepResult> {
    let points: Vec<GridPoint> = configs
        .iter()
        .map(|c| GridPoint {
            overrides: vec![("name".into(), c.name.clone())],
            config: c.clone(),
        })
        .collect();
    sweep(&points, parallelism)
}

const SUMMARY_HEADER: &str = "run,point,variant,alpha,rho_max,lambda,seed,status,steps,final_f,final_f_p,final_h,\
dataset_gap,final_loss,train_accuracy,test_accuracy,sigma_power,sigma_gap_proxy";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn summary_row(out: &mut String, run: &str, point: &str, s: &RunSummary) {
    let status = if s.status.is_completed() { "completed" } else { "failed" };
    let (sp, proxy) = match &s.sharpness {
        Some(r) => (Some(r.sigma_power), r.sigma_gap_proxy),
        None => (None, None),
    };
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{status},{},{},{},{},{},{},{},{},{},{}",
        csv_field(run),
        csv_field(point),
        s.variant.label(),
        s.alpha,
        s.rho_max,
        s.lambda,
        s.seed,
        s.steps_completed,
        opt(s.final_f),
        opt(s.final_f_p),
        opt(s.final_h),
        opt(s.dataset_gap),
        opt(s.final_loss),
        opt(s.train_accuracy),
        opt(s.test_accuracy),
        opt(sp),
        opt(proxy),
    );
}

/// Per-run table keyed by (variant, alpha, rho, seed).
pub fn summary_csv(result: &SweepResult) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in &result.runs {
        match &r.outcome {
            Ok(res) => summary_row(&mut out, &run_dir_name(r), &r.point, &res.summary),
            Err(msg) => {
                let _ = writeln!(
                    out,
                    "{},{},,,,,{},error: {},,,,,,,,,,",
                    run_dir_name(r),
                    csv_field(&r.point),
                    r.seed,
                    csv_field(msg)
                );
            }
        }
    }
    out
}

/// Summary table over previously written run directories.
pub fn compare(run_dirs: &[PathBuf]) -> Result<String> {
    if run_dirs.is_empty() {
        return Err(GsamError::Argument("compare needs at least one run directory".into()));
    }
    let mut out = format!("{SUMMARY_HEADER}\n");
    for dir in run_dirs {
        let s = read_summary(&dir.join("summary.json"))?;
        summary_row(&mut out, &dir.display().to_string(), &s.name, &s);
    }
    Ok(out)
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Ranks starting at 1; ties share their average rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation. `None` for fewer than two pairs, mismatched
/// lengths or a constant input.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let (ma, mb) = (mean(&ra)?, mean(&rb)?);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

/// Mean and median across seeds of one grid point. Values are accumulated in
/// job order, so the numbers do not depend on scheduling.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub point: String,
    pub completed: usize,
    pub failed: usize,
    /// `(metric, mean, median)`.
    pub metrics: Vec<(&'static str, Option<f64>, Option<f64>)>,
}

pub fn aggregate(result: &SweepResult) -> Vec<AggregateRow> {
    let mut order: Vec<String> = Vec::new();
    for r in &result.runs {
        if !order.contains(&r.point) {
            order.push(r.point.clone());
        }
    }
    type Getter = fn(&RunSummary) -> Option<f64>;
    let getters: [(&'static str, Getter); 6] = [
        ("final_loss", |s| s.final_loss),
        ("dataset_gap", |s| s.dataset_gap),
        ("train_accuracy", |s| s.train_accuracy),
        ("test_accuracy", |s| s.test_accuracy),
        ("sigma_power", |s| s.sharpness.as_ref().map(|r| r.sigma_power)),
        ("sigma_gap_proxy", |s| s.sharpness.as_ref().and_then(|r| r.sigma_gap_proxy)),
    ];
    order
        .into_iter()
        .map(|point| {
            let done: Vec<&RunSummary> = result
                .runs
                .iter()
                .filter(|r| r.point == point)
                .filter_map(SweepRun::summary)
                .filter(|s| s.status.is_completed())
                .collect();
            let total = result.runs.iter().filter(|r| r.point == point).count();
            let metrics = getters
                .iter()
                .map(|(name, get)| {
                    let xs: Vec<f64> = done.iter().filter_map(|s| get(s)).collect();
                    (*name, mean(&xs), median(&xs))
                })
                .collect();
            AggregateRow {
                completed: done.len(),
                failed: total - done.len(),
                point,
                metrics,
            }
        })
        .collect()
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from("point,completed,failed");
    if let Some(first) = rows.first() {
        for (name, _, _) in &first.metrics {
            let _ = write!(out, ",{name}_mean,{name}_median");
        }
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{},{}", csv_field(&r.point), r.completed, r.failed);
        for (_, m, md) in &r.metrics {
            let _ = write!(out, ",{},{}", opt(*m), opt(*md));
        }
        out.push('\n');
    }
    out
}

fn run_dir_name(r: &SweepRun) -> String {
    format!("run{:04}_seed{}", r.index, r.seed)
}

/// Writes each run into `dir/<run>/` plus `summary.csv` and `aggregate.csv`.
pub fn write_sweep(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| GsamError::io(dir, e))?;
    let mut paths = Vec::new();
    for r in &result.runs {
        if let Ok(res) = &r.outcome {
            write_outputs(res, &dir.join(run_dir_name(r)))?;
        }
    }
    let p = dir.join("summary.csv");
    write_file(&p, &summary_csv(result))?;
    paths.push(p);
    let p = dir.join("aggregate.csv");
    write_file(&p, &aggregate_csv(&aggregate(result)))?;
    paths.push(p);
    Ok(paths)
}
