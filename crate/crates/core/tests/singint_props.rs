mod common;

use circlesum::polysys::GradedSystem;
use circlesum::singint::{decay_exponent, eval_i, IntegralOptions, TauVector};
use common::{poly, random_system, rng};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

fn opts() -> IntegralOptions {
    IntegralOptions::default()
}

fn linear_factor(t: f64) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    (Complex64::from_polar(1.0, 2.0 * PI * t) - 1.0) / Complex64::new(0.0, 2.0 * PI * t)
}

/// Composite Simpson rule for `∫_0^1 e(t x²) dx`, independent of the library.
fn fresnel(t: f64) -> Complex64 {
    let m = 200_000;
    let h = 1.0 / m as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=m {
        let x = k as f64 * h;
        let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += Complex64::from_polar(w, 2.0 * PI * t * x * x);
    }
    acc * h / 3.0
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn linear_closed_forms() {
    let s = GradedSystem::new(1, vec![vec![poly("x1", 1)]]);
    let mut g = rng(91);
    for _ in 0..50 {
        let t = g.gen_range(-40.0..40.0);
        let v = eval_i(&s, &TauVector::new(vec![vec![t]]), 1e-10, &opts()).unwrap();
        assert!((v.value - linear_factor(t)).norm() < 1e-8, "t = {t}");
    }
}

#[test]
fn modulus_bound_and_conjugation() {
    let mut g = rng(92);
    for _ in 0..40 {
        let n = g.gen_range(1..=2);
        let d = g.gen_range(1..=3);
        let s = random_system(&mut g, n, d, 2);
        let tau = TauVector::new(s.block_sizes().iter().map(|&k| (0..k).map(|_| g.gen_range(-3.0..3.0)).collect()).collect());
        let tol = 1e-8;
        let a = eval_i(&s, &tau, tol, &opts()).unwrap();
        let b = eval_i(&s, &tau.neg(), tol, &opts()).unwrap();
        assert!(a.value.norm() <= 1.0 + tol);
        assert!((a.value - b.value.conj()).norm() <= 2.0 * tol);
    }
}

#[test]
fn product_structure() {
    let s = GradedSystem::new(3, vec![vec![poly("x1 + 2*x2 - x3", 3)]]);
    let joint = IntegralOptions { factorize: false, ..opts() };
    for t in [0.3, 1.25, 2.5] {
        let tau = TauVector::new(vec![vec![t]]);
        let split = eval_i(&s, &tau, 1e-9, &opts()).unwrap();
        let whole = eval_i(&s, &tau, 1e-9, &joint).unwrap();
        let closed = linear_factor(t) * linear_factor(2.0 * t) * linear_factor(-t);
        assert!((split.value - closed).norm() < 1e-9);
        assert!((whole.value - closed).norm() < 1e-9);
    }
    let s = GradedSystem::new(2, vec![vec![poly("x1", 2)], vec![poly("x2^2", 2)]]);
    let tau = TauVector::new(vec![vec![1.7], vec![2.3]]);
    let v = eval_i(&s, &tau, 1e-9, &joint).unwrap();
    let expect = linear_factor(1.7) * fresnel(2.3);
    assert!((v.value - expect).norm() < 1e-8);
}

#[test]
fn halving_the_tolerance_is_consistent() {
    let s = GradedSystem::new(2, vec![vec![], vec![poly("x1^2 + 3*x1*x2 - x2^2", 2)]]);
    let mut tol = 1e-4;
    let tau = TauVector::new(vec![vec![], vec![2.7]]);
    let mut prev = eval_i(&s, &tau, tol, &opts()).unwrap();
    for _ in 0..5 {
        tol /= 2.0;
        let next = eval_i(&s, &tau, tol, &opts()).unwrap();
        assert!((next.value - prev.value).norm() <= next.err_estimate + prev.err_estimate + 1e-15);
        prev = next;
    }
    let low = IntegralOptions { order: 3, ..opts() };
    let mut tol = 1e-4;
    let mut prev = eval_i(&s, &tau, tol, &low).unwrap();
    for _ in 0..5 {
        tol /= 2.0;
        let next = eval_i(&s, &tau, tol, &low).unwrap();
        assert!(next.converged);
        assert!((next.value - prev.value).norm() <= next.err_estimate + prev.err_estimate);
        prev = next;
    }
}

#[test]
fn four_fresnel_factors_decay_like_t_to_minus_two() {
    let s = GradedSystem::new(4, vec![vec![], vec![poly("x1^2 + x2^2 + x3^2 + x4^2", 4)]]);
    let ts = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
    let fit = decay_exponent(&s, &TauVector::new(vec![vec![], vec![1.0]]), &ts, 1e-9, &opts()).unwrap();
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| 4.0 * fresnel(t).norm().ln()).collect();
    let oracle = slope(&xs, &ys);
    for (row, &t) in fit.rows.iter().zip(&ts) {
        assert!((row.abs - fresnel(t).norm().powi(4)).abs() < 1e-8);
    }
    assert!((fit.exponent - oracle).abs() < 1e-6, "{} vs {oracle}", fit.exponent);
    assert!((fit.exponent + 2.0).abs() < 0.25, "{}", fit.exponent);
}

#[test]
fn three_linear_factors_decay_like_t_to_minus_three() {
    let s = GradedSystem::new(3, vec![vec![poly("x1 + x2 + x3", 3)]]);
    let ts = [1.0, 1.5, 2.5, 4.5, 10.5, 20.5, 50.5, 99.5, 100.0];
    let fit = decay_exponent(&s, &TauVector::new(vec![vec![1.0]]), &ts, 1e-10, &opts()).unwrap();
    assert!(fit.rows[0].zero_flagged && fit.rows[8].zero_flagged);
    assert!((fit.exponent + 3.0).abs() < 1e-6);
    assert!((fit.c - PI.powi(-3)).abs() < 1e-8);
    assert!(fit.envelope_holds());
    for r in &fit.rows {
        let sinc = if r.t.fract() == 0.0 { 0.0 } else { ((PI * r.t).sin() / (PI * r.t)).abs().powi(3) };
        assert!((r.abs - sinc).abs() < 1e-9);
    }
}
