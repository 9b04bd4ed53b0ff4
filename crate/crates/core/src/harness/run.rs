use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};
use crate::objective::{Batch, Dataset, ObjectiveSpec};
use crate::optimizer::{BaseOptimizerState, StepContext, Variant};
use crate::rng::{substream, Purpose};
use crate::sharpness::{dataset_surrogate_gap, sharpness_report, GapDirectionMode, SharpnessReport, StepTrace};
use crate::vector::ParamVector;

use super::config::{BuiltObjective, EigenPolicy, ExperimentConfig};

/// Deterministic minibatch order: one shuffle per epoch, drawn from the
/// run's batch-order substream with the epoch number as index.
#[derive(Clone, Debug)]
pub struct BatchSampler {
    seed: u64,
    n: usize,
    batch_size: Option<usize>,
    epoch: Option<u64>,
    perm: Vec<usize>,
}

impl BatchSampler {
    /// `batch_size = None` (or `>= n`) means full batch.
    pub fn new(seed: u64, n: usize, batch_size: Option<usize>) -> Self {
        let batch_size = batch_size.filter(|&b| b < n);
        BatchSampler {
            seed,
            n,
            batch_size,
            epoch: None,
            perm: Vec::new(),
        }
    }

    pub fn steps_per_epoch(&self) -> u64 {
        self.batch_size.map_or(1, |b| self.n.div_ceil(b) as u64)
    }

    /// Batch used at step `t >= 1`; a pure function of `(seed, t)`.
    pub fn batch_for(&mut self, t: u64) -> Batch {
        let Some(b) = self.batch_size else {
            return Batch::full();
        };
        let spe = self.steps_per_epoch();
        let epoch = (t - 1) / spe;
        let k = ((t - 1) % spe) as usize;
        if self.epoch != Some(epoch) {
            let mut rng = substream(self.seed, Purpose::BatchOrder, epoch as u32);
            self.perm = (0..self.n).collect();
            self.perm.shuffle(&mut rng);
            self.epoch = Some(epoch);
        }
        Batch::new(self.perm[k * b..((k + 1) * b).min(self.n)].to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Diverged; the trace stops at the last finite step.
    Failed { step: u64, message: String },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// Final metrics of a run; serialised as `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub fingerprint: String,
    pub name: String,
    pub seed: u64,
    pub variant: Variant,
    pub alpha: f64,
    pub rho_max: f64,
    pub lambda: f64,
    pub status: RunStatus,
    pub steps_completed: u64,
    pub total_steps: u64,
    /// `f`, `f_p` and `h` of the last completed step.
    pub final_f: Option<f64>,
    pub final_f_p: Option<f64>,
    pub final_h: Option<f64>,
    /// Dataset-level surrogate gap at the final parameters, radius `rho_max`.
    pub dataset_gap: Option<f64>,
    pub final_loss: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub sharpness: Option<SharpnessReport>,
    /// Not written to `summary.json`, which must be identical across reruns.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// Sharpness measured mid-run under the `every_k` policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSample {
    pub t: u64,
    pub report: SharpnessReport,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub summary: RunSummary,
    /// Logged steps: `t = 1`, every multiple of `log_every`, and the last step.
    pub traces: Vec<StepTrace>,
    /// `(t, w)` for 2D objectives, including `t = 0`.
    pub trajectory: Option<Vec<(u64, [f64; 2])>>,
    pub eigen_history: Vec<EigenSample>,
    pub final_params: ParamVector,
    pub optimizer_state: BaseOptimizerState,
    pub last_trace: Option<StepTrace>,
}

impl RunResult {
    pub fn fingerprint(&self) -> &str {
        &self.summary.fingerprint
    }
}

/// Mid-run state from which a run can continue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub step: u64,
    pub params: ParamVector,
    pub optimizer: BaseOptimizerState,
    pub last_trace: Option<StepTrace>,
    pub status: RunStatus,
}

/// Runs `config` for one seed from scratch.
pub fn run(config: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    run_until(config, seed, None, config.total_steps)
}

/// Continues from `state` for at most `steps` more steps (never past
/// `total_steps`). Zero steps recomputes the summary only.
pub fn resume(config: &ExperimentConfig, seed: u64, state: RunState, steps: u64) -> Result<RunResult> {
    let until = state.step.saturating_add(steps).min(config.total_steps);
    run_until(config, seed, Some(state), until)
}

fn run_until(config: &ExperimentConfig, seed: u64, start: Option<RunState>, until: u64) -> Result<RunResult> {
    config.validate()?;
    let clock = Instant::now();
    let BuiltObjective { spec, test_set } = config.objective.build()?;
    let lr_schedule = config.lr_schedule();
    let ctx = StepContext {
        spec: &spec,
        cfg: &config.optimizer,
        lr_schedule: &lr_schedule,
        rho_schedule: &config.rho,
    };
    let mut state = match start {
        Some(s) => {
            if s.params.dim() != spec.dim() || s.optimizer.dim() != spec.dim() {
                return Err(GsamError::Dimension {
                    context: "checkpoint parameters",
                    expected: spec.dim(),
                    got: s.params.dim(),
                });
            }
            s
        }
        None => RunState {
            step: 0,
            params: config.init.initial_point(&spec, seed)?,
            optimizer: BaseOptimizerState::new(config.base, spec.dim()),
            last_trace: None,
            status: RunStatus::Completed,
        },
    };

    let mut sampler = BatchSampler::new(seed, config.objective.sample_count(), config.batch_size);
    let two_d = matches!(spec, ObjectiveSpec::Landscape2D(_));
    let mut trajectory = two_d.then(|| vec![(state.step, [state.params[0], state.params[1]])]);
    let mut traces = Vec::new();
    let mut eigen_history = Vec::new();
    let full = Batch::full();

    if state.status.is_completed() {
        for t in state.step + 1..=until {
            let batch = sampler.batch_for(t);
            match ctx.step(&state.params, &mut state.optimizer, t, &batch) {
                Ok((w_next, trace)) => {
                    state.params = w_next;
                    state.step = t;
                    if t == 1 || t % config.log_every == 0 || t == until {
                        traces.push(trace.clone());
                    }
                    state.last_trace = Some(trace);
                    if let Some(traj) = trajectory.as_mut() {
                        traj.push((t, [state.params[0], state.params[1]]));
                    }
                }
                Err(e @ GsamError::Numeric { .. }) => {
                    state.status = RunStatus::Failed {
                        step: t,
                        message: e.to_string(),
                    };
                    break;
                }
                Err(e) => return Err(e),
            }
            if let EigenPolicy::EveryK(k) = config.eigen.policy {
                if t % k == 0 {
                    let report = eigen_report(config, &spec, &state.params, seed)?;
                    eigen_history.push(EigenSample { t, report });
                }
            }
        }
    }

    let finished = state.status.is_completed();
    let w = &state.params;
    let (final_loss, final_grad_norm, dataset_gap) = if finished {
        let (f, g) = spec.value_and_gradient(w, &full)?;
        let chunk = config.batch_size.unwrap_or(usize::MAX);
        let gap = dataset_surrogate_gap(&spec, w, config.optimizer.rho_max, GapDirectionMode::PerSample, chunk)?;
        (Some(f), Some(g.norm()), Some(gap))
    } else {
        (None, None, None)
    };
    let (train_accuracy, test_accuracy) = match &spec {
        ObjectiveSpec::Mlp(m) if finished => (
            Some(m.accuracy(w.as_slice(), m.dataset())),
            test_set.as_deref().map(|d: &Dataset| m.accuracy(w.as_slice(), d)),
        ),
        _ => (None, None),
    };
    let sharpness = match config.eigen.policy {
        EigenPolicy::AtEnd if finished => Some(eigen_report(config, &spec, w, seed)?),
        _ => None,
    };
    let last = state.last_trace.as_ref();
    let summary = RunSummary {
        fingerprint: config.fingerprint(),
        name: config.name.clone(),
        seed,
        variant: config.optimizer.variant,
        alpha: config.optimizer.alpha,
        rho_max: config.optimizer.rho_max,
        lambda: config.optimizer.lambda,
        status: state.status.clone(),
        steps_completed: state.step,
        total_steps: config.total_steps,
        final_f: last.map(|t| t.f),
        final_f_p: last.map(|t| t.f_p),
        final_h: last.map(|t| t.h),
        dataset_gap,
        final_loss,
        final_grad_norm,
        train_accuracy,
        test_accuracy,
        sharpness,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
    };
    Ok(RunResult {
        config: config.clone(),
        summary,
        traces,
        trajectory,
        eigen_history,
        final_params: state.params,
        optimizer_state: state.optimizer,
        last_trace: state.last_trace,
    })
}

/// Batch for Hessian products: a fixed random subset of the training set
/// for MLPs, the full objective otherwise.
pub fn eigen_batch(spec: &ObjectiveSpec, fraction: f64, seed: u64) -> Batch {
    match spec {
        ObjectiveSpec::Mlp(m) if fraction < 1.0 => {
            let n = m.dataset().len();
            let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut substream(seed, Purpose::EigenSubset, 0));
            idx.truncate(k);
            idx.sort_unstable();
            Batch::new(idx)
        }
        _ => Batch::full(),
    }
}

fn eigen_report(config: &ExperimentConfig, spec: &ObjectiveSpec, w: &ParamVector, seed: u64) -> Result<SharpnessReport> {
    let batch = eigen_batch(spec, config.eigen.subset_fraction, seed);
    sharpness_report(spec, w, &batch, &config.eigen.sharpness(seed))
}
