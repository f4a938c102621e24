mod common;

use circlesum::expsum::AlphaVector;
use circlesum::extended::XRat;
use circlesum::linforms::{b1, LinearBlock, B1};
use circlesum::polysys::GradedSystem;
use circlesum::thresholds::{
    b1_required, gamma_sum, m_zero, omega_sup, threshold_report, verify_dichotomy, Classification,
    DichotomyOptions,
};
use common::{poly, rng};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

fn square() -> GradedSystem {
    GradedSystem::new(1, vec![vec![], vec![poly("x1^2", 1)]])
}

fn grid(res: i64) -> Vec<AlphaVector> {
    (0..res)
        .map(|k| AlphaVector::new(vec![vec![], vec![BigRational::new(k.into(), res.into())]]))
        .collect()
}

fn xr(g: &mut impl Rng) -> XRat {
    XRat::frac(g.gen_range(0..=400), g.gen_range(1..=40))
}

#[test]
fn verdicts_are_exhaustive_and_consistent() {
    let run = verify_dichotomy(&square(), 32.0, 0.5, 0.05, &grid(512), &DichotomyOptions::default()).unwrap();
    let c = &run.counts;
    assert_eq!(c.alt_i + c.alt_ii + c.both + c.violation + c.errors, 512);
    for v in run.entries.iter().map(|e| e.as_ref().unwrap()) {
        let within = v.sum_magnitude <= v.bound_i;
        let expected = Classification::from_parts(within, v.witness.is_some());
        assert_eq!(v.classification, expected);
        let classes = [Classification::AltI, Classification::AltII, Classification::Both, Classification::Violation];
        assert_eq!(classes.iter().filter(|&&k| k == v.classification).count(), 1);
    }
}

#[test]
fn witness_classes_shrink_with_delta() {
    let g = grid(1024);
    let opts = DichotomyOptions::default();
    let deltas = [1.0, 0.8, 0.6, 0.45, 0.3, 0.15];
    let mut prev: Option<Vec<bool>> = None;
    for &d in &deltas {
        let run = verify_dichotomy(&square(), 64.0, d, 0.05, &g, &opts).unwrap();
        let has: Vec<bool> = run
            .entries
            .iter()
            .map(|e| matches!(e.as_ref().unwrap().classification, Classification::AltII | Classification::Both))
            .collect();
        if let Some(p) = &prev {
            assert!(has.iter().zip(p).all(|(&now, &before)| !now || before));
        }
        prev = Some(has);
    }
}

#[test]
fn half_has_witness_two() {
    let a = AlphaVector::new(vec![vec![], vec![BigRational::new(1.into(), 2.into())]]);
    let run = verify_dichotomy(&square(), 64.0, 0.5, 0.05, &[a], &DichotomyOptions::default()).unwrap();
    let v = run.entries[0].as_ref().unwrap();
    assert_eq!(v.witness.as_ref().unwrap().q, 2);
    assert!(matches!(v.classification, Classification::AltII | Classification::Both));
}

#[test]
fn exact_low_height_rationals_never_violate() {
    let s = GradedSystem::new(2, vec![vec![poly("x1 + 2*x2", 2)], vec![poly("x1*x2 + x2^2", 2)]]);
    let p: f64 = 40.0;
    let qmax = p.sqrt().floor() as i64;
    let mut pts = Vec::new();
    for q in 1..=qmax {
        for a in 0..q {
            for b in 0..q {
                pts.push(AlphaVector::new(vec![
                    vec![BigRational::new(a.into(), q.into())],
                    vec![BigRational::new(b.into(), q.into())],
                ]));
            }
        }
    }
    let run = verify_dichotomy(&s, p, 0.5, 0.01, &pts, &DichotomyOptions::default()).unwrap();
    assert_eq!(run.counts.violation, 0);
    assert_eq!(run.counts.alt_i, 0);
}

#[test]
fn omega_sup_is_monotone_and_bounded_by_its_terms() {
    let mut g = rng(81);
    for _ in 0..2000 {
        let (a, b) = (xr(&mut g), xr(&mut g));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let r1 = g.gen_range(0..5);
        let big_r = r1 + g.gen_range(0..5);
        assert!(omega_sup(&hi, r1, big_r) <= omega_sup(&lo, r1, big_r));
        let k = BigRational::new(BigInt::from(1), BigInt::from(8 * r1 as i64 + 9));
        assert!(omega_sup(&lo, r1, big_r) <= lo.recip().scale(&k));
    }
}

#[test]
fn b1_requirement_and_m_zero_are_monotone_per_branch() {
    let mut g = rng(82);
    for _ in 0..2000 {
        let (a, b) = (xr(&mut g), xr(&mut g));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let r1 = g.gen_range(1..5);
        let big_r = r1 + g.gen_range(0..5);
        // first branch of the max is increasing in Σ, so the requirement falls and M₀ rises
        assert!(b1_required(&hi, r1, big_r) <= b1_required(&lo, r1, big_r));
        assert!(m_zero(&hi, r1, big_r) >= m_zero(&lo, r1, big_r));
        let floor = XRat::frac(1, 2 * (big_r as i64 + 1));
        assert!(m_zero(&lo, r1, big_r) >= floor);
        assert!(b1_required(&lo, r1, big_r) <= XRat::int(8 * r1 as i64 * (big_r as i64 + 1)));
    }
}

#[test]
fn systems_without_linear_forms_pass_the_b1_check() {
    let mut g = rng(83);
    let s = square();
    let observed = b1(&LinearBlock::from_system(&s)).unwrap();
    assert_eq!(observed, B1::Infinite);
    for _ in 0..200 {
        let gammas: Vec<XRat> = (0..g.gen_range(1..4)).map(|_| xr(&mut g)).collect();
        let report = threshold_report(&gammas, 0, g.gen_range(1..6), observed);
        assert!(report.b1_required.is_zero());
        assert!(report.feasible || report.omega_sup.is_zero());
        assert_eq!(report.gamma_sum, gamma_sum(&gammas));
    }
}
