use std::sync::Arc;

use gsam::objective::{
    default_landscape, generate_blobs, Activation, BlobsConfig, Dataset, Landscape2D, MlpClassifier, Quadratic, Well,
};
use gsam::{Batch, ObjectiveSpec, ParamVector};
use proptest::prelude::*;

fn pv(v: Vec<f64>) -> ParamVector {
    ParamVector::new(v).unwrap()
}

/// Central-difference gradient, written independently of the library.
fn fd_gradient(spec: &ObjectiveSpec, w: &[f64], batch: &Batch, h: f64) -> Vec<f64> {
    (0..w.len())
        .map(|i| {
            let mut a = w.to_vec();
            let mut b = w.to_vec();
            a[i] += h;
            b[i] -= h;
            (spec.value(&pv(a), batch).unwrap() - spec.value(&pv(b), batch).unwrap()) / (2.0 * h)
        })
        .collect()
}

fn assert_close(got: &[f64], want: &[f64], rel: f64, abs: f64) {
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= abs + rel * w.abs(), "got {got:?}\nwant {want:?}");
    }
}

fn mlp(activation: Activation, hidden: usize) -> ObjectiveSpec {
    let data = Arc::new(generate_blobs(5, 6, 3, 3, 1.0).unwrap());
    ObjectiveSpec::Mlp(MlpClassifier::new(vec![3, hidden, 3], activation, data).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadratic_gradient_matches_differences(
        diag in prop::collection::vec(-3.0f64..5.0, 1..6),
        seed in 0u64..1000,
    ) {
        let q = ObjectiveSpec::Quadratic(Quadratic::from_spectrum(&diag, seed).unwrap());
        let w: Vec<f64> = (0..diag.len()).map(|i| (i as f64 * 0.7 + seed as f64).sin()).collect();
        let g = q.gradient(&pv(w.clone()), &Batch::full()).unwrap();
        assert_close(g.as_slice(), &fd_gradient(&q, &w, &Batch::full(), 1e-5), 1e-6, 1e-7);
    }

    #[test]
    fn landscape_gradient_matches_differences(x in -4.0f64..2.0, y in -1.0f64..1.0) {
        let l = ObjectiveSpec::Landscape2D(default_landscape());
        let g = l.gradient(&pv(vec![x, y]), &Batch::full()).unwrap();
        assert_close(g.as_slice(), &fd_gradient(&l, &[x, y], &Batch::full(), 1e-6), 1e-5, 1e-7);
    }

    #[test]
    fn mlp_gradient_matches_differences(seed in 0u64..200, lo in 0usize..10) {
        let spec = mlp(Activation::Tanh, 5);
        let ObjectiveSpec::Mlp(m) = &spec else { unreachable!() };
        let mut rng = gsam::rng::substream(seed, gsam::rng::Purpose::Probe, 0);
        let w = m.init_params(&mut rng, 1.0);
        let batch = Batch::new((lo..lo + 5).collect());
        let g = spec.gradient(&pv(w.clone()), &batch).unwrap();
        assert_close(g.as_slice(), &fd_gradient(&spec, &w, &batch, 1e-6), 1e-5, 1e-8);
    }

    #[test]
    fn landscape_hvp_matches_closed_form(x in -4.0f64..2.0, y in -1.0f64..1.0, a in -1.0f64..1.0) {
        let land = default_landscape();
        let spec = ObjectiveSpec::Landscape2D(land.clone());
        let v = [a, 1.0 - a.abs()];
        let hv = spec.hessian_vector_product(&pv(vec![x, y]), &pv(v.to_vec()), &Batch::full(), None).unwrap();
        let h = land.hessian(&[x, y]);
        let want = [h[0][0] * v[0] + h[0][1] * v[1], h[1][0] * v[0] + h[1][1] * v[1]];
        let scale = h.iter().flatten().fold(1.0f64, |m, e| m.max(e.abs()));
        assert_close(hv.as_slice(), &want, 0.0, 1e-5 * scale);
    }
}

#[test]
fn relu_gradient_matches_away_from_kinks() {
    let spec = mlp(Activation::Relu, 6);
    let ObjectiveSpec::Mlp(m) = &spec else { unreachable!() };
    let mut rng = gsam::rng::substream(3, gsam::rng::Purpose::Probe, 1);
    let w = m.init_params(&mut rng, 1.0);
    let g = spec.gradient(&pv(w.clone()), &Batch::full()).unwrap();
    assert_close(g.as_slice(), &fd_gradient(&spec, &w, &Batch::full(), 1e-7), 1e-4, 1e-7);
}

#[test]
fn mlp_hvp_is_symmetric_and_converges_with_step() {
    let spec = mlp(Activation::Tanh, 4);
    let ObjectiveSpec::Mlp(m) = &spec else { unreachable!() };
    let mut rng = gsam::rng::substream(9, gsam::rng::Purpose::Probe, 0);
    let w = pv(m.init_params(&mut rng, 1.0));
    let n = w.dim();
    let u = pv((0..n).map(|i| ((i * 7) as f64).cos()).collect());
    let v = pv((0..n).map(|i| ((i * 3) as f64).sin() + 0.1).collect());
    let b = Batch::full();
    let hu = spec.hessian_vector_product(&w, &u, &b, None).unwrap();
    let hv = spec.hessian_vector_product(&w, &v, &b, None).unwrap();
    let (uhv, vhu) = (u.dot(&hv), v.dot(&hu));
    assert!((uhv - vhu).abs() <= 1e-6 * uhv.abs().max(1.0), "{uhv} vs {vhu}");

    // Richardson: the error of the O(h^2) difference shrinks ~4x per halving.
    let exact_ish = {
        let a = spec.hessian_vector_product(&w, &v, &b, Some(1e-3)).unwrap();
        let c = spec.hessian_vector_product(&w, &v, &b, Some(5e-4)).unwrap();
        c.scaled(4.0 / 3.0).add_scaled(-1.0 / 3.0, &a)
    };
    let e1 = spec.hessian_vector_product(&w, &v, &b, Some(4e-2)).unwrap().sub(&exact_ish).norm();
    let e2 = spec.hessian_vector_product(&w, &v, &b, Some(2e-2)).unwrap().sub(&exact_ish).norm();
    assert!((3.0..5.0).contains(&(e1 / e2)), "ratio {}", e1 / e2);
}

#[test]
fn quadratic_spectrum_is_preserved() {
    let eigs = [5.0, 2.0, -1.0, 0.5];
    let q = Quadratic::from_spectrum(&eigs, 42).unwrap();
    let n = eigs.len();
    let trace: f64 = (0..n).map(|i| q.entry(i, i)).sum();
    let frob2: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| q.entry(i, j).powi(2)).sum();
    assert!((trace - eigs.iter().sum::<f64>()).abs() < 1e-12);
    assert!((frob2 - eigs.iter().map(|e| e * e).sum::<f64>()).abs() < 1e-11);
    for i in 0..n {
        for j in 0..n {
            assert_eq!(q.entry(i, j), q.entry(j, i));
        }
    }
}

#[test]
fn blobs_are_reproducible_and_round_trip_through_csv() {
    let cfg = BlobsConfig {
        seed: 17,
        n_per_class: 5,
        dim: 2,
        classes: 3,
        spread: 0.5,
    };
    let a = cfg.generate(0).unwrap();
    assert_eq!(a, cfg.generate(0).unwrap());
    assert_ne!(a, cfg.generate(1).unwrap());
    let mut buf = Vec::new();
    a.write_csv(&mut buf).unwrap();
    let b = Dataset::read_csv(buf.as_slice(), Some(3), 17).unwrap();
    assert_eq!(a, b);
}

#[test]
fn landscape_rejects_degenerate_surfaces() {
    let flat_only = vec![Well::new([0.0, 0.0], 1.0, 1.0), Well::new([5.0, 0.0], 1.0, 1.0)];
    assert!(Landscape2D::new(flat_only, 0.0).is_err());
    let minima = default_landscape().local_minima().unwrap();
    let sharpest = minima.iter().map(|m| m.sigma_max).fold(0.0, f64::max);
    let flattest = minima.iter().map(|m| m.sigma_max).fold(f64::INFINITY, f64::min);
    assert!(sharpest > 10.0 * flattest);
}

#[test]
fn mlp_ln_k_loss_at_zero_weights() {
    let spec = mlp(Activation::Tanh, 4);
    let w = ParamVector::zeros(spec.dim());
    let f = spec.value(&w, &Batch::full()).unwrap();
    assert!((f - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn hvp_rejects_zero_direction_and_bad_dims() {
    let spec = ObjectiveSpec::Quadratic(Quadratic::diagonal(vec![1.0, 2.0]).unwrap());
    let w = pv(vec![1.0, 1.0]);
    assert!(spec.hessian_vector_product(&w, &ParamVector::zeros(2), &Batch::full(), None).is_err());
    assert!(spec.hessian_vector_product(&w, &pv(vec![1.0]), &Batch::full(), None).is_err());
    assert!(spec.gradient(&pv(vec![1.0, 2.0, 3.0]), &Batch::full()).is_err());
}
