//! Surrogate-gap guided sharpness-aware minimization.
//!
//! One step, for any variant:
//!
//! 0. `rho_t` from the rho schedule and the current learning rate;
//! 1. gradient `g` at `w`, adversarial point `w_adv = w + rho_t g / (|g| + eps)`;
//! 2. gradient `g_p` at `w_adv` on the same minibatch;
//! 3. split `g` into components parallel and orthogonal to `g_p`;
//! 4. feed the variant's update direction to the base optimizer.
//!
//! GSAM descends along `g_p - alpha g_perp`: the `-alpha g_perp` term is an
//! ascent step orthogonal to `g_p`, which lowers the surrogate gap while
//! leaving the perturbed loss unchanged to first order.

mod base;
mod schedule;

pub use base::{apply_base, BaseOptimizerKind, BaseOptimizerState};
pub use schedule::{rho_at, LrSchedule, LrShape, RhoSchedule};

use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};
use crate::objective::{Batch, ObjectiveSpec};
use crate::perturbation::{adversarial_point, PerturbationConfig, DEFAULT_EPSILON};
use crate::sharpness::{cos_angle, predicted_gap_decrease, StepTrace};
use crate::vector::ParamVector;

/// Guard added to `<g_p, g_p>` in the projection.
pub const DEFAULT_DECOMP_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Plain descent along `g`; the perturbation is still evaluated for the trace.
    Vanilla,
    Sam,
    Gsam,
    /// Descent along `g + alpha (g_p)_perp`, the part of `g_p` orthogonal to `g`.
    MinFH,
    /// Gradient of `f_p + lambda h`.
    WeightedSum,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Vanilla => "vanilla",
            Variant::Sam => "sam",
            Variant::Gsam => "gsam",
            Variant::MinFH => "min_f_h",
            Variant::WeightedSum => "weighted_sum",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsamConfig {
    pub variant: Variant,
    #[serde(default)]
    pub alpha: f64,
    pub rho_max: f64,
    #[serde(default)]
    pub rho_min: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_guard")]
    pub decomp_guard: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_guard() -> f64 {
    DEFAULT_DECOMP_GUARD
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl GsamConfig {
    pub fn new(variant: Variant, alpha: f64, rho_max: f64) -> Self {
        GsamConfig {
            variant,
            alpha,
            rho_max,
            rho_min: 0.0,
            lambda: 0.0,
            decomp_guard: DEFAULT_DECOMP_GUARD,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, x: f64| {
            if x >= 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(GsamError::Config(format!("{name} must be non-negative and finite, got {x}")))
            }
        };
        nonneg("alpha", self.alpha)?;
        nonneg("rho_max", self.rho_max)?;
        nonneg("rho_min", self.rho_min)?;
        nonneg("lambda", self.lambda)?;
        if self.rho_min > self.rho_max {
            return Err(GsamError::Config(format!(
                "rho_min ({}) must not exceed rho_max ({})",
                self.rho_min, self.rho_max
            )));
        }
        if !(self.decomp_guard > 0.0) || !(self.epsilon > 0.0) {
            return Err(GsamError::Config("decomp_guard and epsilon must be positive".into()));
        }
        Ok(())
    }

    /// The `alpha` that actually scales an orthogonal ascent along `g_perp`.
    pub fn effective_alpha(&self) -> f64 {
        match self.variant {
            Variant::Gsam => self.alpha,
            _ => 0.0,
        }
    }
}

/// Splits `g` into `(g_parallel, g_perp)` relative to `g_p`.
///
/// `g_parallel = <g, g_p> / <g_p, g_p> * g_p` and `g_perp = g - g_parallel`.
/// When `|g_p| <= guard` the coefficient is 0, giving `(0, g)`.
///
/// The guard is a cutoff rather than a denominator offset: an offset of
/// 1e-12 would swamp `<g_p, g_p>` for `|g_p|` near 1e-6 and leave a large
/// component of `g_perp` along `g_p`.
pub fn decompose(g: &ParamVector, g_p: &ParamVector, guard: f64) -> Result<(ParamVector, ParamVector)> {
    g.same_dim(g_p, "gradient decomposition")?;
    let gp2 = g_p.dot(g_p);
    let coef = if gp2 > 0.0 && g_p.norm() > guard { g.dot(g_p) / gp2 } else { 0.0 };
    let parallel = g_p.scaled(coef);
    let perp = g.sub(&parallel);
    Ok((parallel, perp))
}

/// `g_p - alpha g_perp`.
pub fn gsam_gradient(g: &ParamVector, g_p: &ParamVector, alpha: f64, guard: f64) -> Result<ParamVector> {
    let (_, perp) = decompose(g, g_p, guard)?;
    if alpha == 0.0 {
        // Exactly SAM, including the sign of zero entries.
        return Ok(g_p.clone());
    }
    Ok(g_p.add_scaled(-alpha, &perp))
}

/// Update direction of each variant from the two gradients.
pub fn variant_gradient(
    variant: Variant,
    g: &ParamVector,
    g_p: &ParamVector,
    alpha: f64,
    lambda: f64,
    guard: f64,
) -> Result<ParamVector> {
    g.same_dim(g_p, "variant gradient")?;
    match variant {
        Variant::Vanilla => Ok(g.clone()),
        Variant::Sam => Ok(g_p.clone()),
        Variant::Gsam => gsam_gradient(g, g_p, alpha, guard),
        Variant::WeightedSum => Ok(g_p.scaled(1.0 + lambda).add_scaled(-lambda, g)),
        Variant::MinFH => {
            let (_, gp_perp_g) = decompose(g_p, g, guard)?;
            Ok(g.add_scaled(alpha, &gp_perp_g))
        }
    }
}

/// Everything a step needs besides the parameters and optimizer buffers.
#[derive(Clone, Debug)]
pub struct StepContext<'a> {
    pub spec: &'a ObjectiveSpec,
    pub cfg: &'a GsamConfig,
    pub lr_schedule: &'a LrSchedule,
    pub rho_schedule: &'a RhoSchedule,
}

impl StepContext<'_> {
    /// Learning rate and perturbation radius at step `t`.
    pub fn rates(&self, t: u64) -> Result<(f64, f64)> {
        let lr = self.lr_schedule.lr_at(t);
        let rho = rho_at(self.rho_schedule, self.cfg.rho_min, self.cfg.rho_max, lr, self.lr_schedule, t)?;
        Ok((lr, rho))
    }

    /// One optimizer step at `t >= 1`. Both gradients use `batch`.
    pub fn step(
        &self,
        w: &ParamVector,
        state: &mut BaseOptimizerState,
        t: u64,
        batch: &Batch,
    ) -> Result<(ParamVector, StepTrace)> {
        if t == 0 {
            return Err(GsamError::Argument("steps are numbered from 1".into()));
        }
        let (lr, rho) = self.rates(t)?;
        let pert = PerturbationConfig::with_epsilon(rho, self.cfg.epsilon)?;
        let (f, g) = self.spec.value_and_gradient(w, batch).map_err(|e| e.at_step(t))?;
        let w_adv = adversarial_point(w, &g, &pert)?;
        let (f_p, g_p) = self.spec.value_and_gradient(&w_adv, batch).map_err(|e| e.at_step(t))?;
        let (_, g_perp) = decompose(&g, &g_p, self.cfg.decomp_guard)?;
        let direction = variant_gradient(
            self.cfg.variant,
            &g,
            &g_p,
            self.cfg.alpha,
            self.cfg.lambda,
            self.cfg.decomp_guard,
        )?;
        let w_next = state.apply(w, &direction, lr)?;
        if !w_next.is_finite() {
            return Err(GsamError::Numeric {
                step: Some(t),
                quantity: "parameters",
            });
        }
        let (grad_norm, gp_norm, gperp_norm) = (g.norm(), g_p.norm(), g_perp.norm());
        let trace = StepTrace {
            t,
            f,
            f_p,
            h: f_p - f,
            cos_theta: cos_angle(&g, &g_p),
            grad_norm,
            gp_norm,
            gperp_norm,
            lr,
            rho,
            predicted_gap_decrease: predicted_gap_decrease(self.cfg.effective_alpha(), lr, gperp_norm),
            degenerate_angle: grad_norm == 0.0 || gp_norm == 0.0,
        };
        Ok((w_next, trace))
    }
}

/// Free-function form of [`StepContext::step`].
#[allow(clippy::too_many_arguments)]
pub fn step(
    spec: &ObjectiveSpec,
    w: &ParamVector,
    state: &mut BaseOptimizerState,
    cfg: &GsamConfig,
    lr_schedule: &LrSchedule,
    rho_schedule: &RhoSchedule,
    t: u64,
    batch: &Batch,
) -> Result<(ParamVector, StepTrace)> {
    StepContext {
        spec,
        cfg,
        lr_schedule,
        rho_schedule,
    }
    .step(w, state, t, batch)
}
