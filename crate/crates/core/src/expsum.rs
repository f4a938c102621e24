//! The exponential sum
//!
//! ```text
//! S(α) = Σ_{x ∈ [0,P]^n ∩ Z^n} e( Σ_ℓ Σ_r α_{ℓ,r} u_{ℓ,r}(x) )
//! ```
//!
//! Frequencies are exact rationals. For every lattice point the phase is
//! reduced modulo 1 from the exact integer values `u_{ℓ,r}(x)` before it is
//! rounded to a float, so there is no phase drift at large `P` or high degree.
//! Partial sums run over fixed-size chunks of the lattice and are combined
//! in chunk order with compensated addition, so results do not depend on the
//! number of worker threads.

mod partial;

pub use partial::{
    partial_summation_residual, ExpLinearField, FnField, PartialSummation, PartialSummationOptions,
    PolynomialField, SmoothField,
};

use crate::error::{Error, Result};
use crate::numeric::{unit_phase, ComplexNeumaier};
use crate::polysys::{CompiledPoly, GradedSystem, Polynomial};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

/// Lattice points per work chunk. Fixed so that the reduction tree is the
/// same for every thread count.
const CHUNK: u64 = 1 << 12;

/// Cap on cached `u(x)` values (entries) kept by [`SumEvaluator`].
const VALUE_CACHE_LIMIT: u128 = 1 << 24;

/// Frequency point `α ∈ R^R` grouped by degree: `blocks[ℓ-1] = α_ℓ`.
/// Entries are exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlphaVector {
    blocks: Vec<Vec<BigRational>>,
}

impl AlphaVector {
    pub fn new(blocks: Vec<Vec<BigRational>>) -> Self {
        AlphaVector { blocks }
    }

    /// Exact conversion from floats; non-finite entries are rejected.
    pub fn from_f64(blocks: &[Vec<f64>]) -> Result<Self> {
        let blocks = blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&x| {
                        BigRational::from_float(x)
                            .ok_or_else(|| Error::invalid(format!("non-finite frequency {x}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AlphaVector { blocks })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        AlphaVector {
            blocks: shape.iter().map(|&r| vec![BigRational::zero(); r]).collect(),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn block(&self, ell: usize) -> &[BigRational] {
        if ell == 0 {
            &[]
        } else {
            self.blocks.get(ell - 1).map_or(&[], Vec::as_slice)
        }
    }

    pub fn blocks(&self) -> &[Vec<BigRational>] {
        &self.blocks
    }

    /// Entries in block order `ℓ = 1..d`, `r = 1..r_ℓ`.
    pub fn entries(&self) -> impl Iterator<Item = &BigRational> + '_ {
        self.blocks.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn map(&self, f: impl Fn(&BigRational) -> BigRational) -> AlphaVector {
        AlphaVector {
            blocks: self.blocks.iter().map(|b| b.iter().map(&f).collect()).collect(),
        }
    }

    pub fn neg(&self) -> AlphaVector {
        self.map(|x| -x)
    }

    /// Checks that block sizes agree with the system (trailing empty blocks
    /// on either side are ignored).
    pub fn check_shape(&self, s: &GradedSystem) -> Result<()> {
        let d = self.blocks.len().max(s.d());
        for ell in 1..=d {
            if self.block(ell).len() != s.r(ell) {
                return Err(Error::ShapeMismatch(format!(
                    "alpha block {ell} has {} entries, system has r_{ell} = {}",
                    self.block(ell).len(),
                    s.r(ell)
                )));
            }
        }
        Ok(())
    }
}

/// Distance from a rational to the nearest integer.
pub fn dist_to_int(x: &BigRational) -> BigRational {
    let f = x - x.floor();
    let g = BigRational::one() - &f;
    if f <= g { f } else { g }
}

/// `(‖α‖, |α|)`: largest distance to an integer and largest magnitude.
pub fn alpha_norms(a: &AlphaVector) -> (f64, f64) {
    let mut frac = BigRational::zero();
    let mut abs = BigRational::zero();
    for x in a.entries() {
        let d = dist_to_int(x);
        if d > frac {
            frac = d;
        }
        let m = x.abs();
        if m > abs {
            abs = m;
        }
    }
    (frac.to_f64().unwrap_or(f64::NAN), abs.to_f64().unwrap_or(f64::INFINITY))
}

/// The box `P·[0,1]^n`; the lattice is `0 ≤ x_i ≤ ⌊P⌋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSpec {
    pub p: f64,
    pub n: usize,
}

impl BoxSpec {
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::invalid(format!("box scale P must be positive, got {p}")));
        }
        Ok(BoxSpec { p, n })
    }

    /// Points per axis, `⌊P⌋ + 1`.
    pub fn side(&self) -> u64 {
        self.p.floor() as u64 + 1
    }

    pub fn lattice_size(&self) -> u128 {
        (self.side() as u128).saturating_pow(self.n as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumOptions {
    /// Maximal number of lattice points.
    pub lattice_budget: u128,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions { lattice_budget: 100_000_000 }
    }
}

/// All frequencies over a common denominator `D`: `α_j = A_j / D` with
/// `0 ≤ A_j < D` (an integer shift of `α` does not change the phases).
#[derive(Debug, Clone)]
pub(crate) struct PhasePlan {
    denom: BigInt,
    nums: Vec<BigInt>,
    small: Option<(u64, Vec<u64>)>,
}

impl PhasePlan {
    pub(crate) fn new<'a>(entries: impl IntoIterator<Item = &'a BigRational>) -> Self {
        let entries: Vec<&BigRational> = entries.into_iter().collect();
        let denom = entries
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let nums: Vec<BigInt> = entries
            .iter()
            .map(|x| (x.numer() * (&denom / x.denom())).mod_floor(&denom))
            .collect();
        let small = denom
            .to_u64()
            .filter(|&d| d < (1 << 62))
            .map(|d| (d, nums.iter().map(|a| a.to_u64().unwrap()).collect()));
        PhasePlan { denom, nums, small }
    }

    /// Centered fractional part in `(-1/2, 1/2]` of `Σ_j α_j v_j`.
    #[inline]
    pub(crate) fn phase_i128(&self, values: &[i128]) -> f64 {
        if let Some((d, nums)) = &self.small {
            let d128 = *d as u128;
            let mut acc: u128 = 0;
            for (a, &v) in nums.iter().zip(values) {
                let vm = v.rem_euclid(*d as i128) as u128;
                acc = (acc + (*a as u128) * vm) % d128;
            }
            let mut s = acc as i128;
            if 2 * s > *d as i128 {
                s -= *d as i128;
            }
            s as f64 / *d as f64
        } else {
            let big: Vec<BigInt> = values.iter().map(|&v| BigInt::from(v)).collect();
            self.phase_big(&big)
        }
    }

    pub(crate) fn phase_big(&self, values: &[BigInt]) -> f64 {
        let mut acc = BigInt::zero();
        for (a, v) in self.nums.iter().zip(values) {
            acc += a * v;
        }
        let mut s = acc.mod_floor(&self.denom);
        if (&s << 1u32) > self.denom {
            s -= &self.denom;
        }
        centered_ratio(&s, &self.denom)
    }
}

/// `s / d` as a float, for `|s| ≤ d/2`.
fn centered_ratio(s: &BigInt, d: &BigInt) -> f64 {
    if let (Some(a), Some(b)) = (s.to_i64(), d.to_i64()) {
        if b < (1 << 53) {
            return a as f64 / b as f64;
        }
    }
    let scaled: BigInt = (s << 64u32).div_floor(d);
    scaled.to_f64().unwrap_or(0.0) / 18_446_744_073_709_551_616.0
}

enum ValueSource {
    /// Row-major table of `u_{ℓ,r}(x)` for every lattice point.
    Cached(Vec<i128>),
    Compiled(Vec<Option<CompiledPoly>>),
}

/// Reusable evaluator of `S(α)` for one system and box; caches `u(x)` when
/// the table is small enough, so repeated frequencies are cheap.
pub struct SumEvaluator<'a> {
    system: &'a GradedSystem,
    polys: Vec<&'a Polynomial>,
    side: u64,
    n: usize,
    total: u64,
    source: ValueSource,
}

impl<'a> SumEvaluator<'a> {
    pub fn new(system: &'a GradedSystem, bx: BoxSpec, opts: &SumOptions) -> Result<Self> {
        if bx.n != system.n() {
            return Err(Error::DimensionMismatch { expected: system.n(), got: bx.n });
        }
        let size = bx.lattice_size();
        if size > opts.lattice_budget {
            return Err(Error::Budget {
                what: "exponential sum lattice",
                required: size,
                budget: opts.lattice_budget,
            });
        }
        let polys: Vec<&Polynomial> = system.iter().map(|(_, _, p)| p).collect();
        let compiled: Vec<Option<CompiledPoly>> = polys.iter().map(|p| p.compile()).collect();
        let mut ev = SumEvaluator {
            system,
            polys,
            side: bx.side(),
            n: bx.n,
            total: size as u64,
            source: ValueSource::Compiled(compiled),
        };
        let entries = size * ev.polys.len() as u128;
        if entries <= VALUE_CACHE_LIMIT {
            if let Some(table) = ev.value_table() {
                ev.source = ValueSource::Cached(table);
            }
        }
        Ok(ev)
    }

    fn value_table(&self) -> Option<Vec<i128>> {
        let ValueSource::Compiled(compiled) = &self.source else { return None };
        let compiled: Vec<&CompiledPoly> = compiled.iter().map(Option::as_ref).collect::<Option<_>>()?;
        let mut table = Vec::with_capacity(self.total as usize * compiled.len());
        let mut x = vec![0i64; self.n];
        for idx in 0..self.total {
            if idx > 0 {
                advance(&mut x, self.side);
            }
            for c in &compiled {
                table.push(c.eval_i128(&x)?);
            }
        }
        Some(table)
    }

    pub fn lattice_size(&self) -> u64 {
        self.total
    }

    pub fn eval(&self, a: &AlphaVector) -> Result<Complex64> {
        a.check_shape(self.system)?;
        let plan = PhasePlan::new(a.entries());
        let chunks = self.total.div_ceil(CHUNK);
        let partials: Vec<ComplexNeumaier> = (0..chunks)
            .into_par_iter()
            .map(|c| self.chunk_sum(&plan, c * CHUNK, ((c + 1) * CHUNK).min(self.total)))
            .collect();
        let mut acc = ComplexNeumaier::new();
        for p in &partials {
            acc.merge(p);
        }
        Ok(acc.value())
    }

    fn chunk_sum(&self, plan: &PhasePlan, start: u64, end: u64) -> ComplexNeumaier {
        let mut acc = ComplexNeumaier::new();
        let r = self.polys.len();
        match &self.source {
            ValueSource::Cached(table) => {
                for idx in start..end {
                    let row = &table[idx as usize * r..(idx as usize + 1) * r];
                    acc.add(unit_phase(plan.phase_i128(row)));
                }
            }
            ValueSource::Compiled(compiled) => {
                let mut x = point_of(start, self.side, self.n);
                let mut vals = vec![0i128; r];
                for idx in start..end {
                    if idx > start {
                        advance(&mut x, self.side);
                    }
                    let fast = compiled.iter().zip(vals.iter_mut()).all(|(c, v)| {
                        match c.as_ref().and_then(|c| c.eval_i128(&x)) {
                            Some(val) => {
                                *v = val;
                                true
                            }
                            None => false,
                        }
                    });
                    let phase = if fast {
                        plan.phase_i128(&vals)
                    } else {
                        let big: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
                        let values: Vec<BigInt> = self
                            .polys
                            .iter()
                            .map(|p| p.evaluate(&big).expect("dimension checked"))
                            .collect();
                        plan.phase_big(&values)
                    };
                    acc.add(unit_phase(phase));
                }
            }
        }
        acc
    }
}

/// Mixed-radix digits of a linear lattice index; `x_1` varies slowest.
fn point_of(mut idx: u64, side: u64, n: usize) -> Vec<i64> {
    let mut x = vec![0i64; n];
    for i in (0..n).rev() {
        x[i] = (idx % side) as i64;
        idx /= side;
    }
    x
}

#[inline]
fn advance(x: &mut [i64], side: u64) {
    for i in (0..x.len()).rev() {
        x[i] += 1;
        if (x[i] as u64) < side {
            return;
        }
        x[i] = 0;
    }
}

/// `S(α)` for the system `s` over the box `P·[0,1]^n`.
pub fn eval_s(s: &GradedSystem, bx: BoxSpec, a: &AlphaVector, opts: &SumOptions) -> Result<Complex64> {
    SumEvaluator::new(s, bx, opts)?.eval(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(n: usize, blocks: &[&[&str]]) -> GradedSystem {
        GradedSystem::new(
            n,
            blocks
                .iter()
                .map(|b| b.iter().map(|t| Polynomial::parse(t, n).unwrap()).collect())
                .collect(),
        )
    }

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn norms_examples() {
        let a = AlphaVector::from_f64(&[vec![0.5]]).unwrap();
        assert_eq!(alpha_norms(&a), (0.5, 0.5));
        let a = AlphaVector::from_f64(&[vec![1.25]]).unwrap();
        assert_eq!(alpha_norms(&a), (0.25, 1.25));
        let a = AlphaVector::new(vec![vec![rat(-1, 10), rat(2, 1)]]);
        assert_eq!(alpha_norms(&a), (0.1, 2.0));
    }

    #[test]
    fn zero_frequency_counts_points() {
        let s = sys(2, &[&["x1 + x2"], &["x1^2 - x2^2"]]);
        let v = eval_s(&s, BoxSpec::new(3.0, 2).unwrap(), &AlphaVector::zeros(&[1, 1]), &SumOptions::default())
            .unwrap();
        assert_eq!(v, Complex64::new(16.0, 0.0));
    }

    #[test]
    fn alternating_linear_sum() {
        let s = sys(1, &[&["x1"]]);
        let v = eval_s(&s, BoxSpec::new(4.0, 1).unwrap(), &AlphaVector::new(vec![vec![rat(1, 2)]]), &SumOptions::default())
            .unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quarter_quadratic_sum() {
        let s = sys(1, &[&[], &["x1^2"]]);
        let a = AlphaVector::new(vec![vec![], vec![rat(1, 4)]]);
        let v = eval_s(&s, BoxSpec::new(2.0, 1).unwrap(), &a, &SumOptions::default()).unwrap();
        assert!((v - Complex64::new(2.0, 1.0)).norm() < 1e-12, "{v}");
    }

    #[test]
    fn shape_and_budget_errors() {
        let s = sys(1, &[&["x1"]]);
        let bad = AlphaVector::zeros(&[2]);
        assert!(matches!(
            eval_s(&s, BoxSpec::new(4.0, 1).unwrap(), &bad, &SumOptions::default()),
            Err(Error::ShapeMismatch(_))
        ));
        let tiny = SumOptions { lattice_budget: 3 };
        assert!(eval_s(&s, BoxSpec::new(4.0, 1).unwrap(), &AlphaVector::zeros(&[1]), &tiny)
            .unwrap_err()
            .is_budget());
        assert!(BoxSpec::new(0.0, 1).is_err());
    }

    #[test]
    fn huge_denominators_use_the_big_path() {
        let s = sys(1, &[&["x1"]]);
        let den = BigInt::one() << 100u32;
        let a = AlphaVector::new(vec![vec![BigRational::new(den.clone() / 2u32, den)]]);
        let v = eval_s(&s, BoxSpec::new(4.0, 1).unwrap(), &a, &SumOptions::default()).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn large_values_reduce_exactly() {
        // x^5 at x ~ 10^4 overflows f64 phase precision but not the exact path.
        let s = sys(1, &[&[], &[], &[], &[], &["x1^5"]]);
        let a = AlphaVector::new(vec![vec![], vec![], vec![], vec![], vec![rat(1, 3)]]);
        let bx = BoxSpec::new(20000.0, 1).unwrap();
        let v = eval_s(&s, bx, &a, &SumOptions::default()).unwrap();
        // x^5 ≡ x (mod 3): residues 0,1,2 repeat, so the sum over 0..=20000 is e(0)+ (cycle sums vanish)
        let cycles = 20001 / 3;
        let rest: Complex64 = (0..(20001 % 3)).map(|k| crate::numeric::e(k as f64 / 3.0)).sum();
        let expected = rest + Complex64::new(0.0, 0.0) * cycles as f64;
        assert!((v - expected).norm() < 1e-9, "{v} vs {expected}");
    }
}
