//! Sharpness instrumentation: dominant Hessian eigenvalue by power iteration,
//! dataset-level surrogate gap, gradient angles and the predicted gap
//! decrease of the ascent step.

use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};
use crate::objective::{Batch, ObjectiveSpec};
use crate::perturbation::{
    adversarial_point, gap_along_direction, sigma_from_gap, surrogate_gap, PerturbationConfig,
};
use crate::rng::{normal_vec, substream, Purpose};
use crate::vector::ParamVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerIterationConfig {
    pub max_iters: usize,
    /// Relative eigen-residual `|Hv - lambda v| / |lambda|` at which the
    /// iteration stops.
    pub tol: f64,
    /// Seeds the start vector.
    pub seed: u64,
}

impl Default for PowerIterationConfig {
    fn default() -> Self {
        PowerIterationConfig {
            max_iters: 500,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerIterationResult {
    /// Signed Rayleigh quotient of the returned eigenvector.
    pub sigma: f64,
    pub eigenvector: ParamVector,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

const START_RETRIES: u64 = 3;

/// Dominant (largest-magnitude) Hessian eigenpair at `w` using only
/// Hessian-vector products. When `max_iters` runs out the estimate with the
/// smallest residual is returned with `converged = false`.
pub fn power_iteration(
    spec: &ObjectiveSpec,
    w: &ParamVector,
    batch: &Batch,
    cfg: &PowerIterationConfig,
) -> Result<PowerIterationResult> {
    if cfg.max_iters == 0 {
        return Err(GsamError::Argument("power iteration needs max_iters >= 1".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(GsamError::Argument(format!("power iteration tolerance must be positive, got {}", cfg.tol)));
    }
    let mut v = start_vector(spec.dim(), cfg.seed)?;
    let mut best: Option<PowerIterationResult> = None;
    for k in 1..=cfg.max_iters {
        let hv = spec.hessian_vector_product(w, &v, batch, None)?;
        let sigma = v.dot(&hv);
        let resid_abs = hv.add_scaled(-sigma, &v).norm();
        let residual = if resid_abs == 0.0 { 0.0 } else { resid_abs / sigma.abs() };
        let converged = residual <= cfg.tol;
        if best.as_ref().is_none_or(|b| residual < b.residual) || converged {
            best = Some(PowerIterationResult {
                sigma,
                eigenvector: v.clone(),
                iterations: k,
                converged,
                residual,
            });
        }
        if converged {
            break;
        }
        let n = hv.norm();
        if n == 0.0 {
            break;
        }
        v = hv.scaled(1.0 / n);
    }
    let mut out = best.expect("at least one iteration ran");
    if !out.converged {
        out.iterations = cfg.max_iters;
    }
    Ok(out)
}

fn start_vector(dim: usize, seed: u64) -> Result<ParamVector> {
    for retry in 0..=START_RETRIES {
        let mut rng = substream(seed.wrapping_add(retry), Purpose::PowerStart, 0);
        let v = ParamVector::from_raw(normal_vec(&mut rng, dim));
        let n = v.norm();
        if n > 0.0 && n.is_finite() {
            return Ok(v.scaled(1.0 / n));
        }
    }
    Err(GsamError::Argument("could not draw a non-zero power-iteration start vector".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapDirectionMode {
    /// Each chunk is perturbed along its own gradient.
    PerSample,
    /// One direction, from the full-dataset gradient, for every sample.
    SharedDirection,
}

/// Mean surrogate gap over a whole training set. Chunks of `batch_size`
/// consecutive samples are visited in index order and combined with weights
/// proportional to their size. Analytic objectives are treated as a single
/// sample.
pub fn dataset_surrogate_gap(
    spec: &ObjectiveSpec,
    w: &ParamVector,
    rho: f64,
    mode: GapDirectionMode,
    batch_size: usize,
) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(GsamError::Argument(format!("rho must be non-negative, got {rho}")));
    }
    if batch_size == 0 {
        return Err(GsamError::Argument("batch_size must be positive".into()));
    }
    let cfg = PerturbationConfig::new(rho)?;
    let n = match spec {
        ObjectiveSpec::Mlp(m) => m.dataset().len(),
        _ => return Ok(surrogate_gap(spec, w, &Batch::full(), &cfg)?.h),
    };
    let chunks: Vec<Batch> = (0..n)
        .step_by(batch_size)
        .map(|s| Batch::new((s..(s + batch_size).min(n)).collect()))
        .collect();
    let mut total = 0.0;
    match mode {
        GapDirectionMode::PerSample => {
            for b in &chunks {
                total += surrogate_gap(spec, w, b, &cfg)?.h * b.indices().len() as f64;
            }
        }
        GapDirectionMode::SharedDirection => {
            let g = spec.gradient(w, &Batch::full())?;
            let adv = adversarial_point(w, &g, &cfg)?;
            for b in &chunks {
                let diff = spec.value(&adv, b)? - spec.value(w, b)?;
                total += diff * b.indices().len() as f64;
            }
        }
    }
    Ok(total / n as f64)
}

/// Cosine of the angle between `g` and `g_p`, clamped to `[-1, 1]`.
/// Returns 1.0 when either vector is zero.
pub fn cos_angle(g: &ParamVector, g_p: &ParamVector) -> f64 {
    let (a, b) = (g.norm(), g_p.norm());
    if a == 0.0 || b == 0.0 {
        return 1.0;
    }
    let denom = (g.dot(g) * g_p.dot(g_p)).sqrt();
    let c = if denom.is_finite() && denom > 0.0 { g.dot(g_p) / denom } else { g.dot(g_p) / (a * b) };
    c.clamp(-1.0, 1.0)
}

/// First-order decrease of the surrogate gap from the orthogonal ascent step:
/// `alpha * eta * |g_perp|^2`.
pub fn predicted_gap_decrease(alpha: f64, eta: f64, gperp_norm: f64) -> f64 {
    alpha * eta * gperp_norm * gperp_norm
}

/// One optimizer step's worth of instrumentation. Field names double as the
/// `trace.csv` column names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub t: u64,
    pub f: f64,
    pub f_p: f64,
    pub h: f64,
    pub cos_theta: f64,
    pub grad_norm: f64,
    pub gp_norm: f64,
    pub gperp_norm: f64,
    pub lr: f64,
    pub rho: f64,
    #[serde(rename = "pred_gap_dec")]
    pub predicted_gap_decrease: f64,
    /// Set when `cos_theta` fell back to 1.0 because a gradient was zero.
    #[serde(skip)]
    pub degenerate_angle: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessConfig {
    /// Ball radius for the `2h/rho^2` proxy.
    pub rho: f64,
    #[serde(flatten)]
    pub power: PowerIterationConfig,
    pub stationarity_tol: f64,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        SharpnessConfig {
            rho: 1e-2,
            power: PowerIterationConfig::default(),
            stationarity_tol: crate::perturbation::DEFAULT_STATIONARITY_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub sigma_power: f64,
    /// `2h/rho^2` along the power-iteration eigenvector; absent when the point
    /// is not stationary within `stationarity_tol`.
    pub sigma_gap_proxy: Option<f64>,
    pub rho_used: f64,
    pub power_iters_used: usize,
    pub converged: bool,
    pub residual: f64,
    pub grad_norm: f64,
}

/// Power-iteration eigenvalue and gap proxy at `w`, sharing one eigenvector.
pub fn sharpness_report(
    spec: &ObjectiveSpec,
    w: &ParamVector,
    batch: &Batch,
    cfg: &SharpnessConfig,
) -> Result<SharpnessReport> {
    let eig = power_iteration(spec, w, batch, &cfg.power)?;
    let grad_norm = spec.gradient(w, batch)?.norm();
    let sigma_gap_proxy = if grad_norm <= cfg.stationarity_tol {
        let gap = gap_along_direction(spec, w, batch, &eig.eigenvector, cfg.rho)?;
        Some(sigma_from_gap(gap.h, cfg.rho)?)
    } else {
        None
    };
    Ok(SharpnessReport {
        sigma_power: eig.sigma,
        sigma_gap_proxy,
        rho_used: cfg.rho,
        power_iters_used: eig.iterations,
        converged: eig.converged,
        residual: eig.residual,
        grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Quadratic;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    fn quad(d: &[f64]) -> ObjectiveSpec {
        ObjectiveSpec::Quadratic(Quadratic::diagonal(d.to_vec()).unwrap())
    }

    #[test]
    fn power_iteration_examples() {
        let w = pv(&[0.0, 0.0]);
        let cfg = PowerIterationConfig::default();
        let r = power_iteration(&quad(&[3.0, 1.0]), &w, &Batch::full(), &cfg).unwrap();
        assert!(r.converged && r.iterations <= 500);
        assert!((r.sigma - 3.0).abs() <= 3e-8);

        let r = power_iteration(&quad(&[-4.0, 1.0]), &w, &Batch::full(), &cfg).unwrap();
        assert!((r.sigma + 4.0).abs() <= 4e-8);

        let r = power_iteration(&quad(&[2.0, 2.0]), &w, &Batch::full(), &cfg).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert!((r.sigma - 2.0).abs() < 1e-15);
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        // +3 and -3 have equal magnitude: the iteration oscillates.
        let r = power_iteration(
            &quad(&[3.0, -3.0]),
            &pv(&[0.0, 0.0]),
            &Batch::full(),
            &PowerIterationConfig {
                max_iters: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 20);
    }

    #[test]
    fn zero_hessian_converges_to_zero() {
        let r = power_iteration(&quad(&[0.0, 0.0]), &pv(&[1.0, 1.0]), &Batch::full(), &PowerIterationConfig::default())
            .unwrap();
        assert_eq!(r.sigma, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn cos_angle_examples() {
        assert_eq!(cos_angle(&pv(&[1.0, 2.0]), &pv(&[1.0, 2.0])), 1.0);
        assert_eq!(cos_angle(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])), 0.0);
        assert_eq!(cos_angle(&pv(&[1.0, -2.0]), &pv(&[-1.0, 2.0])), -1.0);
        assert_eq!(cos_angle(&pv(&[0.0, 0.0]), &pv(&[0.0, 1.0])), 1.0);
    }

    #[test]
    fn predicted_gap_decrease_examples() {
        assert_eq!(predicted_gap_decrease(0.0, 0.1, 3.0), 0.0);
        assert_eq!(predicted_gap_decrease(0.5, 0.1, 0.0), 0.0);
        assert!((predicted_gap_decrease(0.5, 0.1, 2.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn analytic_dataset_gap_matches_surrogate_gap() {
        let s = quad(&[2.0, 0.5]);
        let w = pv(&[1.0, 0.3]);
        let direct = surrogate_gap(&s, &w, &Batch::full(), &PerturbationConfig::new(0.1).unwrap()).unwrap().h;
        for mode in [GapDirectionMode::PerSample, GapDirectionMode::SharedDirection] {
            assert_eq!(dataset_surrogate_gap(&s, &w, 0.1, mode, 4).unwrap(), direct);
            assert_eq!(dataset_surrogate_gap(&s, &w, 0.0, mode, 4).unwrap(), 0.0);
        }
    }

    #[test]
    fn report_omits_proxy_away_from_minimum() {
        let s = quad(&[2.0, 0.5]);
        let cfg = SharpnessConfig::default();
        let at_min = sharpness_report(&s, &pv(&[0.0, 0.0]), &Batch::full(), &cfg).unwrap();
        assert!((at_min.sigma_gap_proxy.unwrap() - 2.0).abs() < 1e-8);
        let away = sharpness_report(&s, &pv(&[1.0, 0.0]), &Batch::full(), &cfg).unwrap();
        assert!(away.sigma_gap_proxy.is_none());
        assert!((away.sigma_power - 2.0).abs() < 1e-7);
    }
}
