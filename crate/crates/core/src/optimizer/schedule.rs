use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrShape {
    LinearDecay,
    InverseSqrt,
    Constant,
}

/// Learning rate over steps `t = 1..=total_steps`.
///
/// Warmup ramps linearly from 0 (exclusive) to `lr_max` at `t = warmup_steps`;
/// afterwards the shape runs from `lr_max` towards `lr_min`. During warmup the
/// rate can sit below `lr_min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSchedule {
    pub lr_max: f64,
    #[serde(default)]
    pub lr_min: f64,
    #[serde(default)]
    pub warmup_steps: u64,
    pub total_steps: u64,
    pub shape: LrShape,
}

impl LrSchedule {
    pub fn constant(lr: f64, total_steps: u64) -> Self {
        LrSchedule {
            lr_max: lr,
            lr_min: lr,
            warmup_steps: 0,
            total_steps,
            shape: LrShape::Constant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr_max > 0.0 && self.lr_max.is_finite()) {
            return Err(GsamError::Config(format!("lr_max must be positive, got {}", self.lr_max)));
        }
        if !(self.lr_min >= 0.0) || self.lr_min > self.lr_max {
            return Err(GsamError::Config(format!(
                "lr_min must lie in [0, lr_max], got lr_min={} lr_max={}",
                self.lr_min, self.lr_max
            )));
        }
        if self.total_steps == 0 {
            return Err(GsamError::Config("total_steps must be positive".into()));
        }
        if self.warmup_steps > self.total_steps {
            return Err(GsamError::Config("warmup_steps exceeds total_steps".into()));
        }
        Ok(())
    }

    pub fn lr_at(&self, t: u64) -> f64 {
        let t = t.max(1);
        if t <= self.warmup_steps {
            return self.lr_max * t as f64 / self.warmup_steps as f64;
        }
        let since = t - self.warmup_steps;
        match self.shape {
            LrShape::Constant => self.lr_max,
            LrShape::LinearDecay => {
                let span = self.total_steps.saturating_sub(self.warmup_steps);
                if span <= 1 {
                    return self.lr_max;
                }
                if since >= span {
                    return self.lr_min;
                }
                let p = (since - 1) as f64 / (span - 1) as f64;
                self.lr_max - (self.lr_max - self.lr_min) * p
            }
            LrShape::InverseSqrt => (self.lr_max / (since as f64).sqrt()).max(self.lr_min),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoSchedule {
    /// Interpolates between `rho_min` and `rho_max` with the learning rate.
    LinearWithLr,
    /// Always `rho_max`.
    Constant,
    /// `rho0 / sqrt(t)`.
    InverseSqrt { rho0: f64 },
}

/// Perturbation radius at step `t`.
///
/// For [`RhoSchedule::LinearWithLr`] the learning rate is first clamped into
/// `[lr_min, lr_max]`, so warmup never pushes `rho` below `rho_min`. A flat
/// schedule (`lr_max == lr_min`) yields `rho_max`.
pub fn rho_at(schedule: &RhoSchedule, rho_min: f64, rho_max: f64, lr_now: f64, lr_sched: &LrSchedule, t: u64) -> Result<f64> {
    match *schedule {
        RhoSchedule::Constant => Ok(rho_max),
        RhoSchedule::LinearWithLr => {
            let span = lr_sched.lr_max - lr_sched.lr_min;
            if span <= 0.0 {
                return Ok(rho_max);
            }
            let lr = lr_now.clamp(lr_sched.lr_min, lr_sched.lr_max);
            Ok(rho_min + (rho_max - rho_min) * (lr - lr_sched.lr_min) / span)
        }
        RhoSchedule::InverseSqrt { rho0 } => {
            if t == 0 {
                return Err(GsamError::Argument("inverse-sqrt rho schedule starts at t = 1".into()));
            }
            Ok(rho0 / (t as f64).sqrt())
        }
    }
}
