//! Simultaneous rational approximation and major/minor arc membership.

use crate::error::{Error, Result};
use crate::expsum::AlphaVector;
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

pub const DEFAULT_Q_BUDGET: u64 = 10_000_000;

/// `⌊P^e⌋`, tolerant of `powf` landing just below an exact integer.
pub(crate) fn floor_power(p: f64, e: f64) -> f64 {
    let v = p.powf(e);
    (v * (1.0 + 1e-12)).floor()
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite bound")
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("P must be a finite number above 1, got {p}")));
    }
    Ok(())
}

fn q_limit(p: f64, e: f64, budget: u64, what: &'static str) -> Result<u64> {
    let qmax = floor_power(p, e);
    if !(qmax <= budget as f64) {
        return Err(Error::Budget { what, required: qmax as u128, budget: u128::from(budget) });
    }
    Ok(qmax as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimultaneousWitness {
    pub q: u64,
    /// `max_r ‖q α_{ℓ,r}‖` for `ℓ = 1..=d` (0 for empty blocks).
    pub errors: Vec<f64>,
    /// Whether block `ℓ` meets `‖q α_ℓ‖ ≤ P^{-ℓ+Δ}`.
    pub checks: Vec<bool>,
}

/// One coordinate `A/D` with `0 ≤ A < D`, tested via `min(qA mod D, D − qA mod D) ≤ T`.
struct Residue {
    num: BigInt,
    den: BigInt,
    limit: BigInt,
}

impl Residue {
    fn new(x: &BigRational, bound: &BigRational) -> Self {
        let den = x.denom().clone();
        let num = x.numer().mod_floor(&den);
        let limit = (bound * BigRational::from_integer(den.clone())).floor().to_integer();
        Residue { num, den, limit }
    }

    fn distance_num(&self, q: u64) -> BigInt {
        let r = (&self.num * q).mod_floor(&self.den);
        let s = &self.den - &r;
        r.min(s)
    }
}

/// Smallest `q ≤ ⌊P^Δ⌋` with `‖q α_ℓ‖ ≤ P^{-ℓ+Δ}` for every non-empty block.
pub fn find_simultaneous(
    a: &AlphaVector,
    p: f64,
    delta: f64,
    budget: u64,
) -> Result<Option<SimultaneousWitness>> {
    check_p(p)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("Δ must lie in (0, 1], got {delta}")));
    }
    let qmax = q_limit(p, delta, budget, "simultaneous approximation q-scan")?;
    let blocks: Vec<Vec<Residue>> = a
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let bound = exact(p.powf(-((i + 1) as f64) + delta));
            b.iter().map(|x| Residue::new(x, &bound)).collect()
        })
        .collect();
    'scan: for q in 1..=qmax {
        for block in &blocks {
            for c in block {
                if c.distance_num(q) > c.limit {
                    continue 'scan;
                }
            }
        }
        let errors: Vec<f64> = blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|c| BigRational::new(c.distance_num(q), c.den.clone()).to_f64().unwrap_or(0.0))
                    .fold(0.0, f64::max)
            })
            .collect();
        return Ok(Some(SimultaneousWitness { q, checks: vec![true; errors.len()], errors }));
    }
    Ok(None)
}

/// `‖q α_ℓ‖` per block and the corresponding checks for a given `q`.
pub fn simultaneous_errors(a: &AlphaVector, p: f64, delta: f64, q: u64) -> SimultaneousWitness {
    let mut errors = Vec::new();
    let mut checks = Vec::new();
    for (i, b) in a.blocks().iter().enumerate() {
        let bound = exact(p.powf(-((i + 1) as f64) + delta));
        let mut worst = BigRational::zero();
        for x in b {
            let d = crate::expsum::dist_to_int(&(x * BigRational::from_integer(BigInt::from(q))));
            worst = worst.max(d);
        }
        checks.push(worst <= bound);
        errors.push(worst.to_f64().unwrap_or(0.0));
    }
    SimultaneousWitness { q, errors, checks }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcVerdict {
    pub major: bool,
    /// `(a, q, max_r |α_r − a_r/q|)` with `gcd(a, q) = 1`.
    pub witness: Option<(Vec<BigInt>, u64, f64)>,
}

/// Nearest integer to `x`; exact halves go to the smaller neighbour.
fn nearest_floor_tie(x: &BigRational) -> BigInt {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    (x + half).ceil().to_integer() - BigInt::one()
}

/// Membership of `α₁` in `𝔐(C)`: some `q ≤ P^C` and `a` with
/// `max_r |α_r − a_r/q| ≤ P^{C−1}`.
pub fn arc_membership_linear(alpha1: &[BigRational], c: f64, p: f64, budget: u64) -> Result<ArcVerdict> {
    check_p(p)?;
    if alpha1.is_empty() {
        return Err(Error::invalid("arc membership needs at least one linear frequency"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("C must be positive, got {c}")));
    }
    let qmax = q_limit(p, c, budget, "major arc q-scan")?;
    let radius = exact(p.powf(c - 1.0));
    for q in 1..=qmax {
        let qb = BigRational::from_integer(BigInt::from(q));
        let mut worst = BigRational::zero();
        let mut a = Vec::with_capacity(alpha1.len());
        for x in alpha1 {
            let ar = nearest_floor_tie(&(x * &qb));
            let d = (x - BigRational::new(ar.clone(), BigInt::from(q))).abs();
            worst = worst.max(d);
            a.push(ar);
        }
        if worst <= radius {
            let g = a.iter().fold(BigInt::from(q), |g, v| g.gcd(v));
            let a: Vec<BigInt> = a.into_iter().map(|v| v / &g).collect();
            let q = (BigInt::from(q) / &g).to_u64().expect("reduced q fits");
            return Ok(ArcVerdict { major: true, witness: Some((a, q, worst.to_f64().unwrap_or(0.0))) });
        }
    }
    Ok(ArcVerdict { major: false, witness: None })
}

/// Closest fraction `a/q` to `x` with `q ≤ qmax`, from continued-fraction
/// convergents and their intermediate fractions. Ties go to the smaller `q`.
pub fn best_rational(x: &BigRational, qmax: u64) -> Result<(BigInt, u64, f64)> {
    if qmax == 0 {
        return Err(Error::invalid("Qmax must be at least 1"));
    }
    let limit = BigInt::from(qmax);
    let err = |a: &BigInt, q: &BigInt| (x - BigRational::new(a.clone(), q.clone())).abs();
    if x.denom() <= &limit {
        let q = x.denom().to_u64().expect("bounded by qmax");
        return Ok((x.numer().clone(), q, 0.0));
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    loop {
        let a = n.div_floor(&d);
        let q2 = &q0 + &a * &q1;
        if q2 > limit {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let r = &n - &a * &d;
        n = std::mem::replace(&mut d, r);
    }
    let k = (&limit - &q0).div_floor(&q1);
    let semi = (&p0 + &k * &p1, &q0 + &k * &q1);
    let conv = (p1, q1);
    let (es, ec) = (err(&semi.0, &semi.1), err(&conv.0, &conv.1));
    let pick = match ec.cmp(&es) {
        std::cmp::Ordering::Less => conv,
        std::cmp::Ordering::Greater => semi,
        std::cmp::Ordering::Equal => {
            if conv.1 <= semi.1 { conv } else { semi }
        }
    };
    let e = err(&pick.0, &pick.1).to_f64().unwrap_or(0.0);
    debug_assert_eq!(pick.1.sign(), Sign::Plus);
    Ok((pick.0, pick.1.to_u64().expect("bounded by qmax"), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn av(blocks: Vec<Vec<BigRational>>) -> AlphaVector {
        AlphaVector::new(blocks)
    }

    #[test]
    fn simultaneous_examples() {
        let w = find_simultaneous(&av(vec![vec![r(0, 1)], vec![r(0, 1), r(0, 1)]]), 10.0, 0.5, DEFAULT_Q_BUDGET)
            .unwrap()
            .unwrap();
        assert_eq!(w.q, 1);
        assert_eq!(w.errors, vec![0.0, 0.0]);

        let w = find_simultaneous(&av(vec![vec![r(1, 2)]]), 100.0, 0.2, DEFAULT_Q_BUDGET).unwrap().unwrap();
        assert_eq!(w.q, 2);

        let phi = BigRational::from_float(0.618034).unwrap();
        assert!(find_simultaneous(&av(vec![vec![phi]]), 100.0, 0.1, DEFAULT_Q_BUDGET).unwrap().is_none());
    }

    #[test]
    fn simultaneous_errors_and_budget() {
        let a = av(vec![vec![r(1, 2)]]);
        assert!(find_simultaneous(&a, 1e9, 1.0, 1000).unwrap_err().is_budget());
        assert!(find_simultaneous(&a, 1.0, 0.5, 1000).is_err());
        assert!(find_simultaneous(&a, 10.0, 0.0, 1000).is_err());
        let w = simultaneous_errors(&a, 100.0, 0.2, 1);
        assert_eq!(w.errors, vec![0.5]);
        assert_eq!(w.checks, vec![false]);
    }

    #[test]
    fn arc_examples() {
        let v = arc_membership_linear(&[r(1, 2)], 0.2, 100.0, DEFAULT_Q_BUDGET).unwrap();
        assert!(v.major);
        let (a, q, d) = v.witness.unwrap();
        assert_eq!((a, q, d), (vec![BigInt::from(1)], 2, 0.0));

        let off = r(1, 2) + BigRational::from_float(3.0 * 100f64.powf(-0.8)).unwrap();
        let v = arc_membership_linear(&[off], 0.2, 100.0, DEFAULT_Q_BUDGET).unwrap();
        assert!(!v.major);
        assert!(v.witness.is_none());

        let v = arc_membership_linear(&[r(1, 3), r(2, 3)], 0.25, 100.0, DEFAULT_Q_BUDGET).unwrap();
        let (a, q, _) = v.witness.unwrap();
        assert_eq!((a, q), (vec![BigInt::from(1), BigInt::from(2)], 3));

        assert!(arc_membership_linear(&[], 0.5, 9.0, 10).is_err());
    }

    #[test]
    fn best_rational_examples() {
        assert_eq!(best_rational(&r(1, 2), 10).unwrap(), (BigInt::from(1), 2, 0.0));
        assert_eq!(best_rational(&r(0, 1), 5).unwrap(), (BigInt::from(0), 1, 0.0));
        let (a, q, e) = best_rational(&r(14159265, 100000000), 10).unwrap();
        assert_eq!((a, q), (BigInt::from(1), 7));
        assert!((e - (1.0 / 7.0 - 0.14159265)).abs() < 1e-15);
        let (a, q, _) = best_rational(&r(-14159265, 100000000), 10).unwrap();
        assert_eq!((a, q), (BigInt::from(-1), 7));
        let (a, q, _) = best_rational(&r(314159265, 100000000), 1000).unwrap();
        assert_eq!((a, q), (BigInt::from(355), 113));
        assert!(best_rational(&r(1, 3), 0).is_err());
    }
}
