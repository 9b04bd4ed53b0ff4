use gsam::optimizer::{
    decompose, gsam_gradient, rho_at, step, variant_gradient, BaseOptimizerKind, BaseOptimizerState, LrSchedule,
    LrShape, RhoSchedule,
};
use gsam::perturbation::{adversarial_point, gap_at_minimum, surrogate_gap, MinimumGapOptions, PerturbationConfig};
use gsam::objective::Quadratic;
use gsam::{Batch, GsamConfig, GsamError, ObjectiveSpec, ParamVector, Variant};
use proptest::prelude::*;

fn pv(v: &[f64]) -> ParamVector {
    ParamVector::new(v.to_vec()).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
        )
    })
}

proptest! {
    #[test]
    fn decomposition_matches_projection_formula((g, gp) in vec_pair()) {
        let (par, perp) = decompose(&pv(&g), &pv(&gp), 1e-12).unwrap();
        let c = dot(&g, &gp) / dot(&gp, &gp);
        for i in 0..g.len() {
            let want = if dot(&gp, &gp) > 0.0 { c * gp[i] } else { 0.0 };
            prop_assert!((par[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            prop_assert!((par[i] + perp[i] - g[i]).abs() <= 1e-14 * (1.0 + g[i].abs()));
        }
        let gp_norm = dot(&gp, &gp).sqrt();
        if gp_norm > 1e-8 {
            // Near-parallel pairs leave a rounding-sized g_perp with no
            // meaningful direction; allow for that.
            let g_norm = dot(&g, &g).sqrt();
            let tol = 1e-10 * perp.norm() * gp_norm + 8.0 * f64::EPSILON * g_norm * gp_norm;
            prop_assert!(perp.dot(&pv(&gp)).abs() <= tol);
        }
    }

    #[test]
    fn gsam_direction_keeps_sam_component((g, gp) in vec_pair(), alpha in 0.0f64..2.0) {
        let d = gsam_gradient(&pv(&g), &pv(&gp), alpha, 1e-12).unwrap();
        // The extra term is orthogonal to g_p, so the projection on g_p is unchanged.
        let gpn = pv(&gp);
        prop_assume!(gpn.norm() > 1e-3);
        let lhs = d.dot(&gpn);
        let rhs = gpn.dot(&gpn);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
    }
}

#[test]
fn decomposition_with_vanishing_perturbed_gradient() {
    let g = pv(&[1.0, -2.0]);
    let (par, perp) = decompose(&g, &pv(&[0.0, 0.0]), 1e-12).unwrap();
    assert_eq!(par.as_slice(), &[0.0, 0.0]);
    assert_eq!(perp, g);
    let (_, perp) = decompose(&g, &pv(&[1e-7, 0.0]), 1e-12).unwrap();
    assert!(perp[0].abs() < 1e-15);
    assert!(decompose(&g, &pv(&[1.0]), 1e-12).is_err());
}

#[test]
fn variants_reduce_to_each_other_at_zero_weight() {
    let g = pv(&[0.3, -1.2, 2.0]);
    let gp = pv(&[0.5, -1.0, 2.5]);
    let dir = |v, a, l| variant_gradient(v, &g, &gp, a, l, 1e-12).unwrap();
    assert_eq!(dir(Variant::Gsam, 0.0, 0.0), gp);
    assert_eq!(dir(Variant::Sam, 0.7, 0.3), gp);
    assert_eq!(dir(Variant::Vanilla, 0.7, 0.3), g);
    assert_eq!(dir(Variant::WeightedSum, 0.0, 0.0), gp);
    assert_eq!(dir(Variant::MinFH, 0.0, 0.0), g);
    let ws = dir(Variant::WeightedSum, 0.0, 0.5);
    for i in 0..3 {
        assert!((ws[i] - (1.5 * gp[i] - 0.5 * g[i])).abs() < 1e-15);
    }
    // min f + h: g plus the part of g_p orthogonal to g.
    let m = dir(Variant::MinFH, 1.0, 0.0);
    let c = dot(gp.as_slice(), g.as_slice()) / dot(g.as_slice(), g.as_slice());
    for i in 0..3 {
        assert!((m[i] - (g[i] + gp[i] - c * g[i])).abs() < 1e-14);
    }
}

#[test]
fn gsam_step_by_hand_on_diagonal_quadratic() {
    // f = (2 w0^2 + w1^2) / 2 at w = (1, 1): g = (2, 1).
    let spec = ObjectiveSpec::Quadratic(Quadratic::diagonal(vec![2.0, 1.0]).unwrap());
    let mut cfg = GsamConfig::new(Variant::Gsam, 0.5, 0.1);
    cfg.epsilon = 1e-300;
    let lr = LrSchedule::constant(0.1, 10);
    let mut state = BaseOptimizerState::new(BaseOptimizerKind::sgd(0.0, 0.0), 2);
    let (w1, tr) = step(&spec, &pv(&[1.0, 1.0]), &mut state, &cfg, &lr, &RhoSchedule::Constant, 1, &Batch::full()).unwrap();

    let gn = 5f64.sqrt();
    let adv = [1.0 + 0.1 * 2.0 / gn, 1.0 + 0.1 / gn];
    let gp = [2.0 * adv[0], adv[1]];
    let c = (2.0 * gp[0] + gp[1]) / (gp[0] * gp[0] + gp[1] * gp[1]);
    let perp = [2.0 - c * gp[0], 1.0 - c * gp[1]];
    let want = [1.0 - 0.1 * (gp[0] - 0.5 * perp[0]), 1.0 - 0.1 * (gp[1] - 0.5 * perp[1])];
    assert!((w1[0] - want[0]).abs() < 1e-14 && (w1[1] - want[1]).abs() < 1e-14, "{w1:?} vs {want:?}");

    let f = 1.5;
    let fp = (2.0 * adv[0] * adv[0] + adv[1] * adv[1]) / 2.0;
    assert!((tr.f - f).abs() < 1e-15);
    assert!((tr.h - (fp - f)).abs() < 1e-14);
    assert!((tr.gperp_norm - (perp[0].hypot(perp[1]))).abs() < 1e-14);
    assert!((tr.predicted_gap_decrease - 0.5 * 0.1 * tr.gperp_norm.powi(2)).abs() < 1e-16);
    assert!(tr.cos_theta > 0.99 && tr.cos_theta <= 1.0);
}

#[test]
fn step_zero_is_rejected() {
    let spec = ObjectiveSpec::Quadratic(Quadratic::diagonal(vec![1.0]).unwrap());
    let cfg = GsamConfig::new(Variant::Sam, 0.0, 0.1);
    let mut st = BaseOptimizerState::new(BaseOptimizerKind::sgd(0.9, 0.0), 1);
    let r = step(&spec, &pv(&[1.0]), &mut st, &cfg, &LrSchedule::constant(0.1, 1), &RhoSchedule::Constant, 0, &Batch::full());
    assert!(matches!(r, Err(GsamError::Argument(_))));
}

#[test]
fn divergence_is_a_numeric_error() {
    let spec = ObjectiveSpec::Quadratic(Quadratic::diagonal(vec![1e200]).unwrap());
    let cfg = GsamConfig::new(Variant::Vanilla, 0.0, 0.0);
    let mut st = BaseOptimizerState::new(BaseOptimizerKind::sgd(0.0, 0.0), 1);
    let mut w = pv(&[1.0]);
    let lr = LrSchedule::constant(10.0, 100);
    let mut err = None;
    for t in 1..=100 {
        match step(&spec, &w, &mut st, &cfg, &lr, &RhoSchedule::Constant, t, &Batch::full()) {
            Ok((next, _)) => w = next,
            Err(e) => {
                err = Some(e);
                break;
            }
        }
    }
    assert!(matches!(err, Some(GsamError::Numeric { .. })), "{err:?}");
}

#[test]
fn sgd_momentum_and_adamw_by_hand() {
    let mut sgd = BaseOptimizerState::new(BaseOptimizerKind::sgd(0.9, 0.1), 2);
    let w = pv(&[1.0, -1.0]);
    let g = pv(&[0.5, 0.25]);
    let w1 = sgd.apply(&w, &g, 0.1).unwrap();
    let w2 = sgd.apply(&w1, &g, 0.1).unwrap();
    // buf1 = g; w1 = w - lr g - lr wd w; buf2 = 0.9 g + g.
    let w1_want = [1.0 - 0.05 - 0.01, -1.0 - 0.025 + 0.01];
    let w2_want = [w1_want[0] - 0.1 * 1.9 * 0.5 - 0.01 * w1_want[0], w1_want[1] - 0.1 * 1.9 * 0.25 - 0.01 * w1_want[1]];
    for i in 0..2 {
        assert!((w1[i] - w1_want[i]).abs() < 1e-15);
        assert!((w2[i] - w2_want[i]).abs() < 1e-15);
    }

    // First bias-corrected Adam step moves each coordinate by ~lr.
    let mut adam = BaseOptimizerState::new(BaseOptimizerKind::adamw(0.0), 2);
    let a1 = adam.apply(&w, &pv(&[3.0, -1e-3]), 0.01).unwrap();
    assert!((a1[0] - (1.0 - 0.01)).abs() < 1e-9);
    assert!((a1[1] - (-1.0 + 0.01)).abs() < 1e-7);
}

#[test]
fn schedules() {
    let s = LrSchedule {
        lr_max: 1.0,
        lr_min: 0.1,
        warmup_steps: 4,
        total_steps: 14,
        shape: LrShape::LinearDecay,
    };
    assert_eq!(s.lr_at(1), 0.25);
    assert_eq!(s.lr_at(4), 1.0);
    assert_eq!(s.lr_at(5), 1.0);
    assert!((s.lr_at(14) - 0.1).abs() < 1e-15);
    assert!(s.lr_at(10) < s.lr_at(9));

    let inv = LrSchedule {
        shape: LrShape::InverseSqrt,
        lr_min: 0.0,
        warmup_steps: 0,
        ..s
    };
    assert!((inv.lr_at(16) - 0.25).abs() < 1e-15);

    // Radius follows the learning rate but never drops under rho_min in warmup.
    let r = |t| rho_at(&RhoSchedule::LinearWithLr, 0.02, 0.2, s.lr_at(t), &s, t).unwrap();
    // t = 1: lr 0.25 lies inside [lr_min, lr_max].
    assert!((r(1) - 0.05).abs() < 1e-15);
    assert!((r(4) - 0.2).abs() < 1e-15);
    assert!((r(14) - 0.02).abs() < 1e-15);
    let q = rho_at(&RhoSchedule::InverseSqrt { rho0: 0.4 }, 0.0, 1.0, 0.0, &s, 4).unwrap();
    assert!((q - 0.2).abs() < 1e-15);
}

#[test]
fn adversarial_point_lies_on_the_ball() {
    let cfg = PerturbationConfig::new(0.3).unwrap();
    let w = pv(&[1.0, 2.0, 3.0]);
    let adv = adversarial_point(&w, &pv(&[3.0, 0.0, 4.0]), &cfg).unwrap();
    assert!((adv.sub(&w).norm() - 0.3).abs() < 1e-12);
    assert!((adv[0] - 1.18).abs() < 1e-12 && (adv[2] - 3.24).abs() < 1e-12);
    assert_eq!(adversarial_point(&w, &ParamVector::zeros(3), &cfg).unwrap(), w);
    assert!(PerturbationConfig::new(-1.0).is_err());
}

#[test]
fn gap_on_quadratics_has_closed_form() {
    // h = rho |g| + rho^2/2 ghat' H ghat for a quadratic.
    let spec = ObjectiveSpec::Quadratic(Quadratic::diagonal(vec![4.0, 1.0]).unwrap());
    let w = pv(&[0.5, -1.0]);
    let rho = 0.01;
    let h = surrogate_gap(&spec, &w, &Batch::full(), &PerturbationConfig::new(rho).unwrap()).unwrap().h;
    let g = [2.0, -1.0];
    let gn = 5f64.sqrt();
    let want = rho * gn + rho * rho / 2.0 * (4.0 * g[0] * g[0] + g[1] * g[1]) / 5.0;
    assert!((h - want).abs() < 1e-13, "{h} vs {want}");

    let at_min = gap_at_minimum(
        &spec,
        &ParamVector::zeros(2),
        &Batch::full(),
        &PerturbationConfig::new(rho).unwrap(),
        &MinimumGapOptions::default(),
    )
    .unwrap();
    assert!((2.0 * at_min.h / (rho * rho) - 4.0).abs() < 1e-8);
    let not_min = gap_at_minimum(&spec, &w, &Batch::full(), &PerturbationConfig::new(rho).unwrap(), &MinimumGapOptions::default());
    assert!(matches!(not_min, Err(GsamError::Stationarity { .. })));
}

#[test]
fn config_validation() {
    let mut c = GsamConfig::new(Variant::Gsam, -0.1, 0.1);
    assert!(c.validate().is_err());
    c.alpha = 0.1;
    c.rho_min = 0.2;
    assert!(c.validate().is_err());
    c.rho_min = 0.05;
    assert!(c.validate().is_ok());
    assert_eq!(GsamConfig::new(Variant::Sam, 0.4, 0.1).effective_alpha(), 0.0);
}
