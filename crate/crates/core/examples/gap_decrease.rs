//! First-order anatomy of the orthogonal ascent step.
//!
//! At a probe point `w`, moving to `w + c g_perp` (the extra displacement a
//! GSAM step adds, with `c = alpha * eta`) should change the surrogate gap by
//! `-c |g_perp|^2` to first order, while the perturbed loss `f_p` only moves at
//! second order, because `g_perp` is orthogonal to its gradient `g_p`. This
//! example measures both on stiff quadratics and a stiff 2D surface for
//! `c = s * 1e-4`, `s = 1, 1/2, 1/4, 1/8`.
//!
//! `cargo run --release --example gap_decrease`

use gsam::objective::{Landscape2D, Quadratic, Well};
use gsam::optimizer::decompose;
use gsam::perturbation::{surrogate_gap, PerturbationConfig};
use gsam::rng::{normal_vec, substream, Purpose};
use gsam::{Batch, ObjectiveSpec, ParamVector};
use rand::Rng;

pub const ALPHA_ETA: f64 = 1e-4;
pub const SCALES: [f64; 4] = [1.0, 0.5, 0.25, 0.125];
/// Perturbation radius relative to `|g|`: small enough that the ascent
/// direction barely rotates across the displacement.
pub const RHO_PER_GRAD: f64 = 3e-7;

pub struct Probe {
    pub objective: &'static str,
    /// `(observed change in h, predicted change -c |g_perp|^2)` per scale.
    pub gap_change: Vec<(f64, f64)>,
    /// `|change in f_p|` per scale.
    pub fp_change: Vec<f64>,
}

impl Probe {
    pub fn worst_relative_error(&self) -> f64 {
        self.gap_change
            .iter()
            .map(|(obs, pred)| ((obs - pred) / pred).abs())
            .fold(0.0, f64::max)
    }

    /// `|df_p(s)| / |df_p(s/2)|` for consecutive scales.
    pub fn halving_ratios(&self) -> Vec<f64> {
        self.fp_change.windows(2).map(|p| p[0] / p[1]).collect()
    }
}

pub fn probe(spec: &ObjectiveSpec, w: &ParamVector, objective: &'static str) -> gsam::Result<Probe> {
    let full = Batch::full();
    let g = spec.gradient(w, &full)?;
    let rho = RHO_PER_GRAD * g.norm();
    let cfg = PerturbationConfig::new(rho)?;
    let base = surrogate_gap(spec, w, &full, &cfg)?;
    let adv = w.add_scaled(rho / (g.norm() + cfg.epsilon), &g);
    let g_p = spec.gradient(&adv, &full)?;
    let (_, g_perp) = decompose(&g, &g_p, 1e-12)?;
    let mut gap_change = Vec::new();
    let mut fp_change = Vec::new();
    for s in SCALES {
        let c = s * ALPHA_ETA;
        let moved = surrogate_gap(spec, &w.add_scaled(c, &g_perp), &full, &cfg)?;
        gap_change.push((moved.h - base.h, -c * g_perp.dot(&g_perp)));
        fp_change.push((moved.f_at_adv - base.f_at_adv).abs());
    }
    Ok(Probe {
        objective,
        gap_change,
        fp_change,
    })
}

/// Narrow wells with curvature in the thousands.
pub fn stiff_landscape() -> Landscape2D {
    Landscape2D::new(
        vec![
            Well::new([0.0, 0.0], 0.5, 0.01),
            Well::new([0.03, 0.01], 0.3, 0.015),
            Well::new([-0.5, 0.0], 1.0, 0.2),
        ],
        0.05,
    )
    .expect("valid surface")
}

/// `n` probes on random stiff quadratics followed by `n` on the stiff surface.
pub fn run_example(n: usize, seed: u64) -> gsam::Result<Vec<Probe>> {
    let mut out = Vec::new();
    for k in 0..n {
        let mut rng = substream(seed, Purpose::Probe, k as u32);
        let dim = rng.random_range(2..=10);
        let eigs: Vec<f64> = (0..dim).map(|_| rng.random_range(1e3..1e4)).collect();
        let spec = ObjectiveSpec::Quadratic(Quadratic::from_spectrum(&eigs, rng.random())?);
        let w = ParamVector::new(normal_vec(&mut rng, dim))?;
        out.push(probe(&spec, &w, "quadratic")?);
    }
    let land = ObjectiveSpec::Landscape2D(stiff_landscape());
    for k in 0..n {
        let mut rng = substream(seed, Purpose::Probe, (n + k) as u32);
        let w = ParamVector::new(vec![rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02)])?;
        out.push(probe(&land, &w, "landscape")?);
    }
    Ok(out)
}

fn main() -> gsam::Result<()> {
    let probes = run_example(10, 0)?;
    println!("objective   worst rel. err of dh   |df_p| ratios per halving");
    for p in &probes {
        println!("{:<11} {:>20.2e}   {:.3?}", p.objective, p.worst_relative_error(), p.halving_ratios());
    }
    Ok(())
}
