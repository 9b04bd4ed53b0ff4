//! Adversarial points, perturbed loss and the surrogate gap.
//!
//! The perturbed loss `f_p(w)` is the largest loss inside a ball of radius
//! `rho` around `w`. During training it is approximated by a single
//! normalised ascent step along the gradient, and the surrogate gap is
//! `h(w) = f_p(w) - f(w)`. At a stationary point that ascent direction is
//! undefined, so [`gap_at_minimum`] instead probes the ball along the
//! dominant Hessian eigenvector, where `h ~ sigma_max * rho^2 / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};
use crate::objective::{Batch, ObjectiveSpec};
use crate::sharpness::{power_iteration, PowerIterationConfig};
use crate::vector::ParamVector;

/// Division guard in `g / (|g| + eps)`.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Gradient-norm tolerance below which a point counts as stationary.
pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationConfig {
    pub rho: f64,
    pub epsilon: f64,
}

impl PerturbationConfig {
    pub fn new(rho: f64) -> Result<Self> {
        Self::with_epsilon(rho, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(rho: f64, epsilon: f64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(GsamError::Argument(format!("rho must be non-negative, got {rho}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(GsamError::Argument(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(PerturbationConfig { rho, epsilon })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    AscentDirection,
    EigvecBall,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub h: f64,
    pub f_at_w: f64,
    pub f_at_adv: f64,
    pub rho_used: f64,
    pub mode: GapMode,
}

/// `w + rho * g / (|g| + eps)`. Returns `w` unchanged when `g == 0`.
pub fn adversarial_point(w: &ParamVector, g: &ParamVector, cfg: &PerturbationConfig) -> Result<ParamVector> {
    w.same_dim(g, "adversarial point")?;
    let scale = cfg.rho / (g.norm() + cfg.epsilon);
    Ok(w.add_scaled(scale, g))
}

/// One-ascent-step approximation of `f_p(w)` on `batch`.
pub fn perturbed_loss(spec: &ObjectiveSpec, w: &ParamVector, batch: &Batch, cfg: &PerturbationConfig) -> Result<f64> {
    let g = spec.gradient(w, batch)?;
    let adv = adversarial_point(w, &g, cfg)?;
    spec.value(&adv, batch)
}

/// `f(w_adv) - f(w)` with both losses on the same batch.
pub fn surrogate_gap(
    spec: &ObjectiveSpec,
    w: &ParamVector,
    batch: &Batch,
    cfg: &PerturbationConfig,
) -> Result<GapEstimate> {
    let (f, g) = spec.value_and_gradient(w, batch)?;
    let adv = adversarial_point(w, &g, cfg)?;
    let f_adv = spec.value(&adv, batch)?;
    Ok(GapEstimate {
        h: f_adv - f,
        f_at_w: f,
        f_at_adv: f_adv,
        rho_used: cfg.rho,
        mode: GapMode::AscentDirection,
    })
}

/// Ball gap along `±rho * v/|v|`: the larger of the two loss increases.
pub fn gap_along_direction(
    spec: &ObjectiveSpec,
    w: &ParamVector,
    batch: &Batch,
    direction: &ParamVector,
    rho: f64,
) -> Result<GapEstimate> {
    w.same_dim(direction, "gap direction")?;
    let n = direction.norm();
    if n == 0.0 {
        return Err(GsamError::Argument("gap direction must be non-zero".into()));
    }
    let unit = direction.scaled(1.0 / n);
    let f = spec.value(w, batch)?;
    let f_plus = spec.value(&w.add_scaled(rho, &unit), batch)?;
    let f_minus = spec.value(&w.add_scaled(-rho, &unit), batch)?;
    let f_adv = f_plus.max(f_minus);
    Ok(GapEstimate {
        h: f_adv - f,
        f_at_w: f,
        f_at_adv: f_adv,
        rho_used: rho,
        mode: GapMode::EigvecBall,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimumGapOptions {
    pub power: PowerIterationConfig,
    pub stationarity_tol: f64,
}

impl Default for MinimumGapOptions {
    fn default() -> Self {
        MinimumGapOptions {
            power: PowerIterationConfig::default(),
            stationarity_tol: DEFAULT_STATIONARITY_TOL,
        }
    }
}

/// Surrogate gap at a (near-)stationary point, probing the ball along the
/// dominant Hessian eigenvector.
pub fn gap_at_minimum(
    spec: &ObjectiveSpec,
    w: &ParamVector,
    batch: &Batch,
    cfg: &PerturbationConfig,
    opts: &MinimumGapOptions,
) -> Result<GapEstimate> {
    if opts.power.max_iters == 0 {
        return Err(GsamError::Argument("power_iters must be at least 1".into()));
    }
    let grad_norm = spec.gradient(w, batch)?.norm();
    if grad_norm > opts.stationarity_tol {
        return Err(GsamError::Stationarity {
            grad_norm,
            tolerance: opts.stationarity_tol,
        });
    }
    let eig = power_iteration(spec, w, batch, &opts.power)?;
    gap_along_direction(spec, w, batch, &eig.eigenvector, cfg.rho)
}

/// Sharpness implied by a gap measured at a minimum: `2 h / rho^2`.
pub fn sigma_from_gap(h: f64, rho: f64) -> Result<f64> {
    if rho == 0.0 || !rho.is_finite() {
        return Err(GsamError::Argument(format!("rho must be non-zero and finite, got {rho}")));
    }
    Ok(2.0 * h / (rho * rho))
}
