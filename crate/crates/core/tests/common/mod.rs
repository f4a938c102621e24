#![allow(dead_code)]

use circlesum::polysys::{GradedSystem, Polynomial};
use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn poly(s: &str, n: usize) -> Polynomial {
    Polynomial::parse(s, n).unwrap()
}

/// Random polynomial with up to `terms` monomials of total degree `≤ max_deg`.
pub fn random_poly(r: &mut ChaCha8Rng, n: usize, max_deg: u32, terms: usize, coef: i64) -> Polynomial {
    let mut t = Vec::new();
    for _ in 0..r.gen_range(0..=terms) {
        let mut e = vec![0u32; n];
        let deg = r.gen_range(0..=max_deg);
        for _ in 0..deg {
            e[r.gen_range(0..n)] += 1;
        }
        t.push((e, BigInt::from(r.gen_range(-coef..=coef))));
    }
    Polynomial::from_terms(n, t).unwrap()
}

/// Random homogeneous polynomial of exact degree `deg` (non-zero).
pub fn random_form(r: &mut ChaCha8Rng, n: usize, deg: u32, terms: usize, coef: i64) -> Polynomial {
    loop {
        let mut t = Vec::new();
        for _ in 0..r.gen_range(1..=terms) {
            let mut e = vec![0u32; n];
            for _ in 0..deg {
                e[r.gen_range(0..n)] += 1;
            }
            t.push((e, BigInt::from(r.gen_range(-coef..=coef))));
        }
        let p = Polynomial::from_terms(n, t).unwrap();
        if !p.is_zero() {
            return p;
        }
    }
}

/// Random graded system with degree-ℓ polynomials (plus lower-order noise) in each block.
pub fn random_system(r: &mut ChaCha8Rng, n: usize, d: usize, max_r: usize) -> GradedSystem {
    let blocks = (1..=d)
        .map(|ell| {
            let count = if ell == d { r.gen_range(1..=max_r) } else { r.gen_range(0..=max_r) };
            (0..count)
                .map(|_| {
                    let top = random_form(r, n, ell as u32, 3, 5);
                    let low = random_poly(r, n, ell as u32 - 1, 2, 5);
                    &top + &low
                })
                .collect()
        })
        .collect();
    GradedSystem::checked(n, blocks).unwrap()
}

pub fn random_point(r: &mut ChaCha8Rng, n: usize, bound: i64) -> Vec<BigInt> {
    (0..n).map(|_| BigInt::from(r.gen_range(-bound..=bound))).collect()
}
