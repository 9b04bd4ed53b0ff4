//! On-disk artifacts of a run.
//!
//! | file             | contents                                              |
//! |------------------|-------------------------------------------------------|
//! | `trace.csv`      | one row per logged step, header [`TRACE_HEADER`]      |
//! | `summary.json`   | [`RunSummary`]                                        |
//! | `trajectory.csv` | `t,w0,w1` for 2D objectives                           |
//! | `eigen.csv`      | `every_k` sharpness samples, when any were taken      |
//! | `checkpoint.json`| [`Checkpoint`]                                        |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};
use crate::sharpness::StepTrace;

use super::config::ExperimentConfig;
use super::run::{RunResult, RunState, RunSummary};

/// Column set of `trace.csv`, version 1.
pub const TRACE_HEADER: &str = "t,f,f_p,h,cos_theta,grad_norm,gp_norm,gperp_norm,lr,rho,pred_gap_dec";

pub const CHECKPOINT_VERSION: u32 = 1;

/// Flat parameters plus everything needed to continue the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub fingerprint: String,
    pub seed: u64,
    /// Carries the objective descriptor.
    pub config: ExperimentConfig,
    pub state: RunState,
}

impl Checkpoint {
    pub fn from_result(result: &RunResult) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            fingerprint: result.summary.fingerprint.clone(),
            seed: result.summary.seed,
            config: result.config.clone(),
            state: RunState {
                step: result.summary.steps_completed,
                params: result.final_params.clone(),
                optimizer: result.optimizer_state.clone(),
                last_trace: result.last_trace.clone(),
                status: result.summary.status.clone(),
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| GsamError::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| GsamError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(GsamError::Parse {
                path: path.to_path_buf(),
                message: format!("unsupported checkpoint version {}", ck.version),
            });
        }
        let config = ck.config.clone().resolve()?;
        if config.fingerprint() != ck.fingerprint {
            return Err(GsamError::Parse {
                path: path.to_path_buf(),
                message: "checkpoint fingerprint does not match its config".into(),
            });
        }
        Ok(ck)
    }
}

/// Writes every artifact of `result` into `dir` (created if needed) and
/// returns the paths written.
pub fn write_outputs(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| GsamError::io(dir, e))?;
    let mut paths = Vec::new();

    let trace_path = dir.join("trace.csv");
    write_file(&trace_path, &trace_csv(&result.traces)?)?;
    paths.push(trace_path);

    let summary_path = dir.join("summary.json");
    write_file(&summary_path, &to_json(&result.summary)?)?;
    paths.push(summary_path);

    if let Some(traj) = &result.trajectory {
        let mut text = String::from("t,w0,w1\n");
        for (t, [a, b]) in traj {
            text.push_str(&format!("{t},{a},{b}\n"));
        }
        let p = dir.join("trajectory.csv");
        write_file(&p, &text)?;
        paths.push(p);
    }

    if !result.eigen_history.is_empty() {
        let mut text = String::from("t,sigma_power,sigma_gap_proxy,converged,residual,grad_norm\n");
        for s in &result.eigen_history {
            let r = &s.report;
            let proxy = r.sigma_gap_proxy.map(|p| p.to_string()).unwrap_or_default();
            text.push_str(&format!(
                "{},{},{proxy},{},{},{}\n",
                s.t, r.sigma_power, r.converged, r.residual, r.grad_norm
            ));
        }
        let p = dir.join("eigen.csv");
        write_file(&p, &text)?;
        paths.push(p);
    }

    let ck_path = dir.join("checkpoint.json");
    write_file(&ck_path, &to_json(&Checkpoint::from_result(result))?)?;
    paths.push(ck_path);
    Ok(paths)
}

/// Renders traces with the fixed header. Floats use shortest round-trip form.
pub fn trace_csv(traces: &[StepTrace]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for tr in traces {
        w.serialize(tr).map_err(|e| GsamError::Config(format!("cannot serialise trace: {e}")))?;
    }
    let body = w.into_inner().map_err(|e| GsamError::Config(format!("cannot serialise trace: {e}")))?;
    let mut out = String::with_capacity(TRACE_HEADER.len() + 1 + body.len());
    out.push_str(TRACE_HEADER);
    out.push('\n');
    out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
    Ok(out)
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<StepTrace>> {
    let parse_err = |message: String| GsamError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => GsamError::io(path, io),
        other => parse_err(format!("{other:?}")),
    })?;
    let header = r.headers().map_err(|e| parse_err(e.to_string()))?.iter().collect::<Vec<_>>().join(",");
    if header != TRACE_HEADER {
        return Err(parse_err(format!("unexpected trace header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(|e| parse_err(e.to_string()))).collect()
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path).map_err(|e| GsamError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| GsamError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| GsamError::Config(format!("cannot serialise: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| GsamError::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| GsamError::io(path, e))
}
