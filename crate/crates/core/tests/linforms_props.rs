mod common;

use circlesum::linforms::{b1, restrict, restriction_gap, restriction_gaps, LinearBlock, B1};
use circlesum::polysys::GradedSystem;
use circlesum::weyl::rank_exact;
use common::{poly, rng};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_block(r: &mut ChaCha8Rng, n: usize, rows: usize, c: i64) -> Vec<Vec<i64>> {
    (0..rows).map(|_| (0..n).map(|_| r.gen_range(-c..=c)).collect()).collect()
}

/// Minimum support of a non-zero `λᵀM` over integer `λ ∈ [-L, L]^r`;
/// `None` when every such combination vanishes (only for `r = 0`).
fn oracle(m: &[Vec<i64>], n: usize, l: i64) -> Option<usize> {
    let r = m.len();
    if r == 0 {
        return None;
    }
    let mut best = usize::MAX;
    let mut lam = vec![-l; r];
    loop {
        if lam.iter().any(|&v| v != 0) {
            let support = (0..n).filter(|&j| (0..r).map(|i| lam[i] * m[i][j]).sum::<i64>() != 0).count();
            best = best.min(support);
        }
        let mut k = 0;
        loop {
            if k == r {
                return Some(best);
            }
            lam[k] += 1;
            if lam[k] <= l {
                break;
            }
            lam[k] = -l;
            k += 1;
        }
    }
}

#[test]
fn from_system_reads_linear_coefficients() {
    let s = GradedSystem::new(3, vec![vec![poly("2*x1 - x3 + 5", 3), poly("x2", 3)], vec![poly("x1^2", 3)]]);
    let blk = LinearBlock::from_system(&s);
    assert_eq!(blk, LinearBlock::from_i64(3, &[vec![2, 0, -1], vec![0, 1, 0]]).unwrap());
    assert_eq!(b1(&blk).unwrap(), B1::Finite(1));
    let quad = GradedSystem::new(2, vec![vec![], vec![poly("x1*x2", 2)]]);
    assert_eq!(b1(&LinearBlock::from_system(&quad)).unwrap(), B1::Infinite);
}

#[test]
fn positive_exactly_for_independent_rows() {
    let mut r = rng(61);
    for _ in 0..2000 {
        let n = r.gen_range(1..=6);
        let rows = r.gen_range(1..=4);
        let m = random_block(&mut r, n, rows, 2);
        let blk = LinearBlock::from_i64(n, &m).unwrap();
        let independent = rank_exact(blk.rows()) == rows;
        assert_eq!(b1(&blk).unwrap() > B1::Finite(0), independent);
    }
}

#[test]
fn agrees_with_small_lambda_oracle() {
    // Kernel vectors are built from minors of order ≤ r₁ − 1, so entries in
    // [-3, 3] need |λ| ≤ 2!·3² = 18 when r₁ = 3 and 3 when r₁ ≤ 2.
    let mut r = rng(62);
    for _ in 0..400 {
        let n = r.gen_range(1..=6);
        let rows = r.gen_range(1..=3);
        let m = random_block(&mut r, n, rows, 3);
        let got = b1(&LinearBlock::from_i64(n, &m).unwrap()).unwrap();
        assert_eq!(got.finite(), oracle(&m, n, 18), "{m:?}");
        if rows <= 2 {
            assert_eq!(got.finite(), oracle(&m, n, 10), "{m:?}");
        }
    }
}

#[test]
fn box_oracle_is_only_an_upper_bound() {
    let m = vec![vec![-3, 1], vec![2, 3], vec![1, 1]];
    assert_eq!(b1(&LinearBlock::from_i64(2, &m).unwrap()).unwrap(), B1::Finite(0));
    assert_eq!(oracle(&m, 2, 10), Some(1));
    assert_eq!(oracle(&m, 2, 11), Some(0));
}

fn scale_row(row: &[BigInt], k: &BigRational) -> Vec<BigRational> {
    row.iter().map(|v| BigRational::from_integer(v.clone()) * k).collect()
}

/// Clears denominators row by row so the block stays integral.
fn integral(rows: Vec<Vec<BigRational>>, n: usize) -> LinearBlock {
    let rows = rows
        .into_iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |l, v| l.lcm(v.denom()));
            row.into_iter().map(|v| (v * BigRational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();
    LinearBlock::from_rows(n, rows).unwrap()
}

#[test]
fn invariant_under_row_operations() {
    let mut r = rng(63);
    for _ in 0..300 {
        let n = r.gen_range(1..=6);
        let rows = r.gen_range(2..=3);
        let blk = LinearBlock::from_i64(n, &random_block(&mut r, n, rows, 3)).unwrap();
        let base = b1(&blk).unwrap();

        let mut permuted = blk.rows().to_vec();
        permuted.swap(0, rows - 1);
        assert_eq!(b1(&LinearBlock::from_rows(n, permuted).unwrap()).unwrap(), base);

        let mut k = BigRational::new(BigInt::from(r.gen_range(1..=7)), BigInt::from(r.gen_range(1..=7)));
        if r.gen_bool(0.5) {
            k = -k;
        }
        let mut scaled: Vec<Vec<BigRational>> =
            blk.rows().iter().map(|row| scale_row(row, &BigRational::one())).collect();
        scaled[1] = scale_row(&blk.rows()[1], &k);
        assert_eq!(b1(&integral(scaled, n)).unwrap(), base);

        let c = BigRational::new(BigInt::from(r.gen_range(-5..=5)), BigInt::from(r.gen_range(1..=4)));
        let mut added: Vec<Vec<BigRational>> =
            blk.rows().iter().map(|row| scale_row(row, &BigRational::one())).collect();
        let extra = scale_row(&blk.rows()[1], &c);
        for (a, e) in added[0].iter_mut().zip(extra) {
            *a += e;
        }
        assert_eq!(b1(&integral(added, n)).unwrap(), base);
    }
}

#[test]
fn restriction_costs_at_most_one() {
    // exhaustive over r₁ ≤ 2, n ≤ 3 with entries in [-3, 3]
    for n in 1..=3usize {
        for rows in 1..=2usize {
            let cells = n * rows;
            let total = 7u64.pow(cells as u32);
            for code in 0..total {
                let mut c = code;
                let m: Vec<Vec<i64>> = (0..rows)
                    .map(|_| {
                        (0..n)
                            .map(|_| {
                                let v = (c % 7) as i64 - 3;
                                c /= 7;
                                v
                            })
                            .collect()
                    })
                    .collect();
                let blk = LinearBlock::from_i64(n, &m).unwrap();
                for j in 1..=n {
                    assert!(restriction_gap(&blk, j).unwrap() >= -1);
                }
            }
        }
    }
    // sampled over n ≤ 6, r₁ ≤ 3
    let mut r = rng(64);
    for _ in 0..3000 {
        let n = r.gen_range(1..=6);
        let rows = r.gen_range(1..=3);
        let blk = LinearBlock::from_i64(n, &random_block(&mut r, n, rows, 3)).unwrap();
        for j in 1..=n {
            let gap = restriction_gap(&blk, j).unwrap();
            assert!(gap >= -1);
            let after = b1(&restrict(&blk, j).unwrap()).unwrap();
            assert!(after.finite().unwrap() as i64 - b1(&blk).unwrap().finite().unwrap() as i64 == gap);
        }
        let each: Vec<i64> = (1..=n).map(|j| restriction_gap(&blk, j).unwrap()).collect();
        assert_eq!(restriction_gaps(&blk).unwrap(), each);
    }
}

#[test]
fn singleton_bound_holds() {
    let mut r = rng(65);
    for _ in 0..500 {
        let n = r.gen_range(1..=8);
        let rows = r.gen_range(1..=n);
        let blk = LinearBlock::from_i64(n, &random_block(&mut r, n, rows, 5)).unwrap();
        let k = b1(&blk).unwrap().finite().unwrap();
        assert!(k <= n - rows + 1);
        if k > 0 {
            assert!(!blk.rows().iter().flatten().all(Zero::is_zero));
        }
    }
}
