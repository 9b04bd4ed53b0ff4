//! Anatomy of a single step on a 2D quadratic: the gradient, the perturbed
//! gradient, the split of `g` against `g_p`, and the update direction each
//! variant would take.
//!
//! `cargo run --release --example gsam_step`

use gsam::optimizer::{decompose, variant_gradient};
use gsam::perturbation::{adversarial_point, surrogate_gap, PerturbationConfig};
use gsam::sharpness::cos_angle;
use gsam::objective::Quadratic;
use gsam::{Batch, ObjectiveSpec, ParamVector, Variant};

pub struct Anatomy {
    pub g: ParamVector,
    pub g_p: ParamVector,
    pub g_parallel: ParamVector,
    pub g_perp: ParamVector,
    pub h: f64,
    pub cos_theta: f64,
    pub directions: Vec<(Variant, ParamVector)>,
}

pub fn run_example(w: [f64; 2], rho: f64, alpha: f64, lambda: f64) -> gsam::Result<Anatomy> {
    let spec = ObjectiveSpec::Quadratic(Quadratic::dense(vec![vec![5.0, 1.5], vec![1.5, 1.0]])?);
    let w = ParamVector::new(w.to_vec())?;
    let full = Batch::full();
    let cfg = PerturbationConfig::new(rho)?;
    let g = spec.gradient(&w, &full)?;
    let g_p = spec.gradient(&adversarial_point(&w, &g, &cfg)?, &full)?;
    let (g_parallel, g_perp) = decompose(&g, &g_p, 1e-12)?;
    let directions = [Variant::Vanilla, Variant::Sam, Variant::Gsam, Variant::WeightedSum, Variant::MinFH]
        .into_iter()
        .map(|v| Ok((v, variant_gradient(v, &g, &g_p, alpha, lambda, 1e-12)?)))
        .collect::<gsam::Result<_>>()?;
    Ok(Anatomy {
        h: surrogate_gap(&spec, &w, &full, &cfg)?.h,
        cos_theta: cos_angle(&g, &g_p),
        g,
        g_p,
        g_parallel,
        g_perp,
        directions,
    })
}

fn main() -> gsam::Result<()> {
    let a = run_example([1.0, -0.5], 0.3, 0.5, 0.5)?;
    let show = |v: &ParamVector| format!("[{:>8.4}, {:>8.4}]", v[0], v[1]);
    println!("g          {}", show(&a.g));
    println!("g_p        {}", show(&a.g_p));
    println!("g_parallel {}", show(&a.g_parallel));
    println!("g_perp     {}   <g_perp, g_p> = {:.1e}", show(&a.g_perp), a.g_perp.dot(&a.g_p));
    println!("h = {:.5}, cos theta = {:.5}", a.h, a.cos_theta);
    println!();
    for (v, d) in &a.directions {
        println!("{:<13} {}", v.label(), show(d));
    }
    Ok(())
}
