//! The linear-block invariant `B₁(u₁)`: the least number of non-zero
//! coefficients in a non-trivial rational combination of the linear forms.

use crate::error::{Error, Result};
use crate::polysys::GradedSystem;
use crate::weyl::{rank_exact, rank_i128};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use std::fmt;

/// Largest `n` for which the support search is attempted.
pub const MAX_VARIABLES: usize = 20;

/// `r₁ × n` coefficient matrix of the linear forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearBlock {
    n: usize,
    rows: Vec<Vec<BigInt>>,
}

impl LinearBlock {
    pub fn from_rows(n: usize, rows: Vec<Vec<BigInt>>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        Ok(LinearBlock { n, rows })
    }

    pub fn from_i64(n: usize, rows: &[Vec<i64>]) -> Result<Self> {
        let rows = rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
        LinearBlock::from_rows(n, rows)
    }

    /// The homogeneous linear parts of the degree-1 block.
    pub fn from_system(s: &GradedSystem) -> Self {
        let n = s.n();
        let rows = s
            .block(1)
            .iter()
            .map(|u| {
                (0..n)
                    .map(|i| {
                        let mut e = vec![0u32; n];
                        e[i] = 1;
                        u.coefficient(&e)
                    })
                    .collect()
            })
            .collect();
        LinearBlock { n, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum B1 {
    Finite(usize),
    Infinite,
}

impl B1 {
    pub fn finite(self) -> Option<usize> {
        match self {
            B1::Finite(k) => Some(k),
            B1::Infinite => None,
        }
    }
}

impl fmt::Display for B1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            B1::Finite(k) => write!(f, "{k}"),
            B1::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for B1 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            B1::Finite(k) => s.serialize_u64(*k as u64),
            B1::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Rank test on the columns outside `mask`, with a reusable scratch buffer.
struct ColumnRank<'a> {
    block: &'a LinearBlock,
    small: Option<Vec<i128>>,
    scratch: Vec<i128>,
}

impl<'a> ColumnRank<'a> {
    fn new(block: &'a LinearBlock) -> Self {
        let small = block
            .rows
            .iter()
            .flatten()
            .map(|v| v.to_i64().map(i128::from))
            .collect::<Option<Vec<_>>>();
        ColumnRank { block, small, scratch: Vec::with_capacity(block.r() * block.n) }
    }

    fn rank_outside(&mut self, mask: u32) -> usize {
        let (r, n) = (self.block.r(), self.block.n);
        let kept = n - mask.count_ones() as usize;
        if let Some(m) = &self.small {
            self.scratch.clear();
            for row in 0..r {
                self.scratch.extend((0..n).filter(|&i| mask >> i & 1 == 0).map(|i| m[row * n + i]));
            }
            if let Some(rank) = rank_i128(&mut self.scratch, r, kept) {
                return rank;
            }
        }
        let sub: Vec<Vec<BigInt>> = self
            .block
            .rows
            .iter()
            .map(|row| (0..n).filter(|&i| mask >> i & 1 == 0).map(|i| row[i].clone()).collect())
            .collect();
        rank_exact(&sub)
    }
}

/// Next integer with the same number of set bits.
fn next_combination(v: u32) -> u32 {
    let c = v & v.wrapping_neg();
    let r = v + c;
    (((r ^ v) >> 2) / c) | r
}

/// `B₁`: `+∞` when there are no linear forms, `0` iff they are dependent.
pub fn b1(block: &LinearBlock) -> Result<B1> {
    let (r, n) = (block.r(), block.n);
    if r == 0 {
        return Ok(B1::Infinite);
    }
    if n > MAX_VARIABLES {
        return Err(Error::Budget {
            what: "linear-form support search variables",
            required: n as u128,
            budget: MAX_VARIABLES as u128,
        });
    }
    let mut ranks = ColumnRank::new(block);
    if ranks.rank_outside(0) < r {
        return Ok(B1::Finite(0));
    }
    for k in 1..=n {
        let mut mask: u32 = (1u32 << k) - 1;
        while mask < (1u32 << n) {
            if ranks.rank_outside(mask) < r {
                return Ok(B1::Finite(k));
            }
            if k == n {
                break;
            }
            mask = next_combination(mask);
        }
    }
    unreachable!("independent rows with n columns always admit a support of size n")
}

/// `G|_{x_j = 0}` with `j` 1-based.
pub fn restrict(block: &LinearBlock, j: usize) -> Result<LinearBlock> {
    if j == 0 || j > block.n {
        return Err(Error::invalid(format!("variable index {j} outside 1..={}", block.n)));
    }
    let mut out = block.clone();
    for row in &mut out.rows {
        row[j - 1].set_zero();
    }
    Ok(out)
}

/// `B₁(G|_{x_j=0}) − B₁(G)`.
pub fn restriction_gap(block: &LinearBlock, j: usize) -> Result<i64> {
    if block.r() == 0 {
        return Err(Error::invalid("restriction gap needs at least one linear form"));
    }
    let before = b1(block)?.finite().expect("non-empty block") as i64;
    let after = b1(&restrict(block, j)?)?.finite().expect("non-empty block") as i64;
    Ok(after - before)
}

/// `B₁(G|_{x_j=0}) − B₁(G)` for every `j = 1..=n`.
///
/// Zeroing column `j` and dropping the columns in `m` leaves the columns
/// outside `m ∪ {j}`, so one rank per column subset answers every `j`.
pub fn restriction_gaps(block: &LinearBlock) -> Result<Vec<i64>> {
    let (r, n) = (block.r(), block.n);
    if r == 0 {
        return Err(Error::invalid("restriction gap needs at least one linear form"));
    }
    if n > MAX_VARIABLES {
        return Err(Error::Budget {
            what: "linear-form support search variables",
            required: n as u128,
            budget: MAX_VARIABLES as u128,
        });
    }
    let mut ranks = ColumnRank::new(block);
    let mut full = n;
    let mut restricted = vec![n; n];
    for mask in 0..(1u32 << n) {
        let k = mask.count_ones() as usize;
        if k >= full && (0..n).all(|j| mask >> j & 1 == 0 || k > restricted[j]) {
            continue;
        }
        if ranks.rank_outside(mask) < r {
            full = full.min(k);
            for (j, best) in restricted.iter_mut().enumerate() {
                if mask >> j & 1 == 1 {
                    *best = (*best).min(k - 1);
                }
            }
        }
    }
    Ok(restricted.into_iter().map(|b| b as i64 - full as i64).collect())
}
