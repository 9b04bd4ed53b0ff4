//! Base update rules that consume the (surrogate) gradient.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, GsamError, Result};
use crate::vector::ParamVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseOptimizerKind {
    /// `buf <- mu buf + g; w <- w - lr buf - lr wd w`.
    SgdMomentum {
        #[serde(default = "default_momentum")]
        momentum: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    /// Bias-corrected Adam moments with decoupled weight decay.
    AdamwStyle {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_adam_eps")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
}

fn default_momentum() -> f64 {
    0.9
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_adam_eps() -> f64 {
    1e-8
}

impl BaseOptimizerKind {
    pub fn sgd(momentum: f64, weight_decay: f64) -> Self {
        BaseOptimizerKind::SgdMomentum { momentum, weight_decay }
    }

    pub fn adamw(weight_decay: f64) -> Self {
        BaseOptimizerKind::AdamwStyle {
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_adam_eps(),
            weight_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            BaseOptimizerKind::SgdMomentum { momentum, weight_decay } => {
                (0.0..1.0).contains(&momentum) && weight_decay >= 0.0
            }
            BaseOptimizerKind::AdamwStyle {
                beta1,
                beta2,
                eps,
                weight_decay,
            } => (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0 && weight_decay >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(GsamError::Config(format!("invalid base optimizer hyperparameters {self:?}")))
        }
    }
}

/// Buffers of a base optimizer. Owned by exactly one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseOptimizerState {
    pub kind: BaseOptimizerKind,
    /// Momentum buffer, or Adam's first moment.
    pub first: Vec<f64>,
    /// Adam's second moment; empty for SGD.
    pub second: Vec<f64>,
    pub step: u64,
}

impl BaseOptimizerState {
    pub fn new(kind: BaseOptimizerKind, dim: usize) -> Self {
        let second = match kind {
            BaseOptimizerKind::SgdMomentum { .. } => Vec::new(),
            BaseOptimizerKind::AdamwStyle { .. } => vec![0.0; dim],
        };
        BaseOptimizerState {
            kind,
            first: vec![0.0; dim],
            second,
            step: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Applies one update and returns the new parameters.
    pub fn apply(&mut self, w: &ParamVector, grad: &ParamVector, lr: f64) -> Result<ParamVector> {
        check_dim("base optimizer parameters", self.dim(), w.dim())?;
        check_dim("base optimizer gradient", self.dim(), grad.dim())?;
        self.step += 1;
        let mut out = w.clone();
        match self.kind {
            BaseOptimizerKind::SgdMomentum { momentum, weight_decay } => {
                for (((wi, gi), bi), w0) in out
                    .as_mut_slice()
                    .iter_mut()
                    .zip(grad.as_slice())
                    .zip(self.first.iter_mut())
                    .zip(w.as_slice())
                {
                    *bi = momentum * *bi + gi;
                    *wi = w0 - lr * *bi - lr * weight_decay * w0;
                }
            }
            BaseOptimizerKind::AdamwStyle {
                beta1,
                beta2,
                eps,
                weight_decay,
            } => {
                let c1 = 1.0 - beta1.powf(self.step as f64);
                let c2 = 1.0 - beta2.powf(self.step as f64);
                for (i, wi) in out.as_mut_slice().iter_mut().enumerate() {
                    let g = grad[i];
                    let m = &mut self.first[i];
                    let v = &mut self.second[i];
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    let w0 = w[i];
                    *wi = w0 - lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * w0);
                }
            }
        }
        Ok(out)
    }
}

/// Functional form of [`BaseOptimizerState::apply`].
pub fn apply_base(state: &mut BaseOptimizerState, w: &ParamVector, grad: &ParamVector, lr: f64) -> Result<ParamVector> {
    state.apply(w, grad, lr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn plain_sgd() {
        let mut s = BaseOptimizerState::new(BaseOptimizerKind::sgd(0.0, 0.0), 2);
        let w = s.apply(&pv(&[1.0, 1.0]), &pv(&[2.0, 0.5]), 0.1).unwrap();
        assert_eq!(w.as_slice(), &[0.8, 0.95]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn momentum_and_decoupled_decay() {
        let mut s = BaseOptimizerState::new(BaseOptimizerKind::sgd(0.5, 0.1), 1);
        let w1 = s.apply(&pv(&[1.0]), &pv(&[1.0]), 0.1).unwrap();
        // buf = 1, w = 1 - 0.1 - 0.01
        assert!((w1[0] - 0.89).abs() < 1e-15);
        let w2 = s.apply(&w1, &pv(&[1.0]), 0.1).unwrap();
        // buf = 1.5
        assert!((w2[0] - (0.89 - 0.15 - 0.1 * 0.1 * 0.89)).abs() < 1e-15);
    }

    #[test]
    fn identical_states_give_identical_updates() {
        let kind = BaseOptimizerKind::adamw(0.01);
        let mut a = BaseOptimizerState::new(kind, 3);
        let mut b = a.clone();
        let w = pv(&[0.1, -0.2, 0.3]);
        let g = pv(&[1.0, 2.0, -3.0]);
        assert_eq!(a.apply(&w, &g, 0.01).unwrap(), b.apply(&w, &g, 0.01).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn adam_step_tends_to_lr_under_constant_gradient() {
        let mut s = BaseOptimizerState::new(BaseOptimizerKind::adamw(0.0), 2);
        let lr = 1e-3;
        let g = pv(&[0.7, -3.0]);
        let mut w = pv(&[0.0, 0.0]);
        for _ in 0..5000 {
            let next = s.apply(&w, &g, lr).unwrap();
            let disp = next.sub(&w);
            for d in disp.as_slice() {
                assert!((d.abs() - lr).abs() < 1e-6 * lr);
            }
            w = next;
        }
    }

    #[test]
    fn dimension_mismatch() {
        let mut s = BaseOptimizerState::new(BaseOptimizerKind::sgd(0.9, 0.0), 2);
        assert!(s.apply(&pv(&[1.0]), &pv(&[1.0]), 0.1).is_err());
    }
}
