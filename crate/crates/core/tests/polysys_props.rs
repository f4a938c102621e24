mod common;

use circlesum::polysys::{validate_system, GradedSystem, Polynomial, ViolationKind};
use common::{poly, random_point, random_poly, rng};
use num_bigint::BigInt;
use proptest::prelude::*;

#[test]
fn evaluate_is_a_ring_homomorphism() {
    let mut r = rng(11);
    for _ in 0..1500 {
        let n = 1 + (rand::Rng::gen_range(&mut r, 0..3));
        let p = random_poly(&mut r, n, 4, 5, 20);
        let q = random_poly(&mut r, n, 4, 5, 20);
        let x = random_point(&mut r, n, 1000);
        let (pv, qv) = (p.evaluate(&x).unwrap(), q.evaluate(&x).unwrap());
        assert_eq!((&p + &q).evaluate(&x).unwrap(), &pv + &qv);
        assert_eq!((&p * &q).evaluate(&x).unwrap(), &pv * &qv);
        assert_eq!((&p - &q).evaluate(&x).unwrap(), &pv - &qv);
    }
}

#[test]
fn degree_parts_reassemble_and_are_idempotent() {
    let mut r = rng(12);
    for _ in 0..1000 {
        let p = random_poly(&mut r, 3, 6, 8, 9);
        let top = p.total_degree().unwrap_or(0);
        let mut sum = Polynomial::zero(3);
        for ell in 0..=top + 1 {
            let part = p.degree_part(ell);
            assert_eq!(part.degree_part(ell), part);
            assert!(part.terms().all(|(e, _)| e.iter().sum::<u32>() == ell));
            sum = &sum + &part;
        }
        assert_eq!(sum, p);
    }
}

#[test]
fn evaluate_examples() {
    assert_eq!(poly("x1^2", 1).evaluate_i64(&[3]).unwrap(), BigInt::from(9));
    assert_eq!(poly("x1*x2 + x1", 2).evaluate_i64(&[2, 5]).unwrap(), BigInt::from(12));
    assert_eq!(poly("x1^3 - x1", 1).evaluate_i64(&[-2]).unwrap(), BigInt::from(-6));
    assert!(poly("x1", 2).evaluate_i64(&[1]).is_err());
}

#[test]
fn evaluation_does_not_overflow() {
    let p = poly("x1^9*x2^7 - 3*x2^2", 2);
    let x = [BigInt::from(10).pow(30), BigInt::from(-(10i64.pow(18)))];
    let expect = x[0].pow(9) * x[1].pow(7) - BigInt::from(3) * x[1].pow(2);
    assert_eq!(p.evaluate(&x).unwrap(), expect);
    assert_eq!(
        p.evaluate_i64(&[i64::MAX, i64::MIN]).unwrap(),
        BigInt::from(i64::MAX).pow(9) * BigInt::from(i64::MIN).pow(7) - BigInt::from(3) * BigInt::from(i64::MIN).pow(2)
    );
}

#[test]
fn validation_names_offending_forms() {
    let s = GradedSystem::new(2, vec![vec![poly("x1 + x2", 2)], vec![poly("x1^2", 2), poly("x1^2", 3)]]);
    let v = validate_system(&s);
    assert_eq!(v.len(), 1);
    assert_eq!((v[0].ell, v[0].r), (2, 2));
    assert!(matches!(v[0].kind, ViolationKind::VariableCount { expected: 2, found: 3 }));
    let s = GradedSystem::new(1, vec![vec![Polynomial::zero(1)]]);
    assert!(matches!(validate_system(&s)[0].kind, ViolationKind::ZeroPolynomial));
}

fn arb_poly(n: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..4, n), -50i64..=50), 0..6).prop_map(move |terms| {
        Polynomial::from_terms(n, terms.into_iter().map(|(e, c)| (e, BigInt::from(c)))).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn text_form_round_trips(p in (1usize..=4).prop_flat_map(arb_poly)) {
        let text = p.to_string();
        let back = Polynomial::parse(&text, p.n()).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn canonical_order_is_graded(p in arb_poly(3)) {
        let degrees: Vec<u32> = p.terms().map(|(e, _)| e.iter().sum()).collect();
        prop_assert!(degrees.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(p.terms().all(|(_, c)| *c != BigInt::from(0)));
    }

    #[test]
    fn derivative_matches_finite_difference_identity(p in arb_poly(2), x in -20i64..20, y in -20i64..20) {
        // p(x+1) - p(x) = Σ_{k≥1} ∂^k p(x) / k!, truncated at degree 6
        let shifted = p.compose(&[&Polynomial::var(2, 0) + &Polynomial::constant(2, 1), Polynomial::var(2, 1)]).unwrap();
        let diff = &shifted - &p;
        let mut taylor = Polynomial::zero(2);
        let mut d = p.clone();
        let mut fact = BigInt::from(1);
        for k in 1..=6u32 {
            d = d.derivative(0);
            fact *= k;
            let scaled = Polynomial::from_terms(2, d.terms().map(|(e, c)| (e.to_vec(), c / &fact))).unwrap();
            taylor = &taylor + &scaled;
        }
        prop_assert_eq!(diff.evaluate_i64(&[x, y]).unwrap(), taylor.evaluate_i64(&[x, y]).unwrap());
    }
}
