//! Integer points on `M_ℓ` in boxes `[-R0, R0]^{n(ℓ-1)}`, the power-law
//! estimate of `g_ℓ`, and the derived exponents `γ_ℓ`, `γ'_ℓ`.

use crate::error::{Error, Result};
use crate::extended::XRat;
use crate::numeric::linear_fit;
use crate::polysys::GradedSystem;
use crate::weyl::{rank_exact, rank_i128, MatrixTemplate};
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io;

pub const DEFAULT_COUNT_BUDGET: u128 = 100_000_000;

const CHUNK: u64 = 1 << 12;

/// Counts of `z_{R0}(M_ℓ)` for increasing `R0`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountSeries {
    pub ell: usize,
    pub samples: Vec<(u64, u64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    ell: usize,
    #[serde(rename = "R0")]
    r0: u64,
    z: u64,
}

impl CountSeries {
    pub fn new(ell: usize, samples: Vec<(u64, u64)>) -> Result<Self> {
        if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid("R0 values must be strictly increasing"));
        }
        Ok(CountSeries { ell, samples })
    }

    /// Runs [`count_points`] for every `R0` in `radii`.
    pub fn collect(s: &GradedSystem, ell: usize, radii: &[u64], budget: u128) -> Result<Self> {
        let samples = radii
            .iter()
            .map(|&r0| count_points(s, ell, r0, budget).map(|z| (r0, z)))
            .collect::<Result<Vec<_>>>()?;
        CountSeries::new(ell, samples)
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for &(r0, z) in &self.samples {
            wr.serialize(CountRow { ell: self.ell, r0, z })?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut ell = None;
        let mut samples = Vec::new();
        for row in rd.deserialize::<CountRow>() {
            let row = row.map_err(|e| Error::invalid(format!("count series: {e}")))?;
            if *ell.get_or_insert(row.ell) != row.ell {
                return Err(Error::invalid("count series mixes several degrees"));
            }
            samples.push((row.r0, row.z));
        }
        CountSeries::new(ell.unwrap_or(0), samples)
    }
}

fn enumeration_size(n: usize, ell: usize, r0: u64) -> Option<u128> {
    let side = u128::from(r0).checked_mul(2)?.checked_add(1)?;
    let mut total: u128 = 1;
    for _ in 0..n * (ell - 1) {
        total = total.checked_mul(side)?;
    }
    Some(total)
}

/// `z_{R0}(M_ℓ)`: tuples in `[-R0, R0]^{n(ℓ-1)}` whose differencing matrix
/// has rank below `r_ℓ`.
pub fn count_points(s: &GradedSystem, ell: usize, r0: u64, budget: u128) -> Result<u64> {
    let template = MatrixTemplate::new(s, ell)?;
    if r0 == 0 {
        return Err(Error::invalid("R0 must be positive"));
    }
    let n = s.n();
    let dims = n * (ell - 1);
    let required = enumeration_size(n, ell, r0).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::Budget { what: "variety enumeration", required, budget });
    }
    let total = required as u64;
    let side = 2 * r0 + 1;
    let rows = template.rows();
    let chunks = total.div_ceil(CHUNK);
    let count = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            let mut point = vec![0i64; dims];
            let mut rem = lo;
            for k in (0..dims).rev() {
                point[k] = (rem % side) as i64 - r0 as i64;
                rem /= side;
            }
            let mut buf = vec![0i128; rows * n];
            let mut hits = 0u64;
            for _ in lo..hi {
                let deficient = match template
                    .fill_i128(&point, &mut buf)
                    .and_then(|_| rank_i128(&mut buf, rows, n))
                {
                    Some(rank) => rank < rows,
                    None => rank_exact(&template.eval_big(&point)) < rows,
                };
                hits += u64::from(deficient);
                for k in (0..dims).rev() {
                    if point[k] < r0 as i64 {
                        point[k] += 1;
                        break;
                    }
                    point[k] = -(r0 as i64);
                }
            }
            hits
        })
        .sum();
    Ok(count)
}

/// Empirical estimate of `g_ℓ` from a count series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GEstimate {
    pub g_hat: f64,
    pub stderr: f64,
    pub exponent_fit: f64,
    /// `R0` values whose count was zero and was replaced by 1.
    pub zero_flagged: Vec<u64>,
}

pub fn estimate_g(series: &CountSeries, n: usize, ell: usize) -> Result<GEstimate> {
    if series.samples.len() < 3 {
        return Err(Error::invalid(format!(
            "at least 3 samples are needed, got {}",
            series.samples.len()
        )));
    }
    if ell < 2 {
        return Err(Error::invalid("degree must be at least 2"));
    }
    let mut zero_flagged = Vec::new();
    let mut xs = Vec::with_capacity(series.samples.len());
    let mut ys = Vec::with_capacity(series.samples.len());
    for &(r0, z) in &series.samples {
        if z == 0 {
            zero_flagged.push(r0);
        }
        xs.push((r0 as f64).ln());
        ys.push((z.max(1) as f64).ln());
    }
    let (_, slope, stderr) = linear_fit(&xs, &ys);
    let top = (n * (ell - 1)) as f64;
    Ok(GEstimate { g_hat: (top - slope).clamp(0.0, top), stderr, exponent_fit: slope, zero_flagged })
}

/// `γ_ℓ = 2^{ℓ-1}(ℓ-1) r_ℓ / g`.
pub fn gamma_ell(g_hat: f64, ell: usize, r_ell: usize) -> Result<XRat> {
    if r_ell == 0 {
        return Ok(XRat::zero());
    }
    let g = XRat::from_f64(g_hat).ok_or_else(|| Error::invalid("g must be a non-negative number"))?;
    if ell < 2 || ell > 64 {
        return Err(Error::invalid(format!("degree {ell} out of range")));
    }
    let k = (BigInt::from(1) << (ell - 1)) * BigInt::from(ell - 1) * BigInt::from(r_ell);
    Ok(g.recip().scale(&BigRational::from_integer(k)))
}

/// `γ'_ℓ = γ_ℓ / ((ℓ-1) r_ℓ)`.
pub fn gamma_prime(gamma: &XRat, ell: usize, r_ell: usize) -> Result<XRat> {
    if r_ell == 0 {
        return Err(Error::invalid("γ' is undefined when r_ℓ = 0"));
    }
    if ell < 2 {
        return Err(Error::invalid("degree must be at least 2"));
    }
    let k = BigRational::new(BigInt::from(1), BigInt::from((ell - 1) * r_ell));
    Ok(gamma.scale(&k))
}
