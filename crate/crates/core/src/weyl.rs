//! Weyl differencing.
//!
//! ```text
//! Γ_{ℓ,G}(x_1, …, x_ℓ) = Σ_{t ∈ {0,1}^ℓ} (-1)^{t_1+…+t_ℓ} G(t_1 x_1 + … + t_ℓ x_ℓ)
//! ```
//!
//! together with the matrix `[Γ_{ℓ,U_{ℓ,r}}(x_1, …, x_{ℓ-1}, e_i)]` whose rank
//! deficiency defines `M_ℓ`, and a fraction-free exact rank.

use crate::error::{Error, Result};
use crate::polysys::{CompiledPoly, GradedSystem, Polynomial};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

/// Maximal `ℓ·n` accepted by [`gamma_symbolic`].
pub const SYMBOLIC_VARIABLE_BUDGET: usize = 16;

fn sign(t: u64) -> i32 {
    if t.count_ones() % 2 == 0 { 1 } else { -1 }
}

/// `Γ_{ℓ,G}` at integer points, exactly.
pub fn gamma_eval(g: &Polynomial, ell: usize, pts: &[Vec<BigInt>]) -> Result<BigInt> {
    if pts.len() != ell {
        return Err(Error::DimensionMismatch { expected: ell, got: pts.len() });
    }
    if ell >= 64 {
        return Err(Error::invalid("differencing order too large"));
    }
    let n = g.n();
    if let Some(p) = pts.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    let mut total = BigInt::zero();
    let mut point = vec![BigInt::zero(); n];
    for t in 0..(1u64 << ell) {
        for v in point.iter_mut() {
            v.set_zero();
        }
        for (j, x) in pts.iter().enumerate() {
            if t >> j & 1 == 1 {
                for (acc, xi) in point.iter_mut().zip(x) {
                    *acc += xi;
                }
            }
        }
        let v = g.evaluate(&point)?;
        if sign(t) > 0 {
            total += v;
        } else {
            total -= v;
        }
    }
    Ok(total)
}

/// Convenience wrapper over [`gamma_eval`] for machine integers.
pub fn gamma_eval_i64(g: &Polynomial, ell: usize, pts: &[Vec<i64>]) -> Result<BigInt> {
    let big: Vec<Vec<BigInt>> = pts
        .iter()
        .map(|p| p.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    gamma_eval(g, ell, &big)
}

/// `Σ_t (-1)^{|t|} G(Σ_j t_j X_j + t_last · tail)` in the variables of the
/// blocks `X_1..X_k` (each of width `n`); `tail` is an optional constant
/// vector for a final, non-symbolic argument.
fn gamma_substituted(g: &Polynomial, blocks: usize, tail: Option<&[i64]>) -> Result<Polynomial> {
    let n = g.n();
    let m = blocks * n;
    let args = blocks + usize::from(tail.is_some());
    let mut out = Polynomial::zero(m);
    for t in 0..(1u64 << args) {
        let images: Vec<Polynomial> = (0..n)
            .map(|k| {
                let mut img = Polynomial::zero(m);
                for j in 0..blocks {
                    if t >> j & 1 == 1 {
                        img = &img + &Polynomial::var(m, j * n + k);
                    }
                }
                if let Some(c) = tail {
                    if t >> blocks & 1 == 1 && c[k] != 0 {
                        img = &img + &Polynomial::constant(m, c[k]);
                    }
                }
                img
            })
            .collect();
        let term = g.compose(&images)?;
        out = if sign(t) > 0 { &out + &term } else { &out - &term };
    }
    Ok(out)
}

/// The expansion of `Γ_{ℓ,G}` as a polynomial in `ℓ·n` variables; variable
/// `j·n + k` (0-based) is coordinate `k` of argument `j`.
pub fn gamma_symbolic(g: &Polynomial, ell: usize) -> Result<Polynomial> {
    let vars = ell.saturating_mul(g.n());
    if vars > SYMBOLIC_VARIABLE_BUDGET {
        return Err(Error::Budget {
            what: "symbolic differencing variables",
            required: vars as u128,
            budget: SYMBOLIC_VARIABLE_BUDGET as u128,
        });
    }
    gamma_substituted(g, ell, None)
}

/// `[Γ_{ℓ,U_{ℓ,r}}(x_1, …, x_{ℓ-1}, e_i)]`: rows `r`, columns `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffMatrix {
    pub ell: usize,
    pub points: Vec<Vec<BigInt>>,
    pub entries: Vec<Vec<BigInt>>,
}

impl DiffMatrix {
    pub fn rank(&self) -> usize {
        rank_exact(&self.entries)
    }

    /// Whether the tuple of points lies on `M_ℓ` (rank below `r_ℓ`).
    pub fn is_deficient(&self) -> bool {
        self.rank() < self.entries.len()
    }
}

fn unit(n: usize, i: usize) -> Vec<BigInt> {
    let mut e = vec![BigInt::zero(); n];
    e[i] = BigInt::from(1);
    e
}

fn check_ell(s: &GradedSystem, ell: usize) -> Result<()> {
    if ell < 2 || ell > s.d() {
        return Err(Error::invalid(format!("degree {ell} outside 2..={}", s.d())));
    }
    if s.r(ell) == 0 {
        return Err(Error::invalid(format!("block {ell} is empty (r_{ell} = 0)")));
    }
    Ok(())
}

/// The defining matrix of `M_ℓ` at the given `ℓ-1` integer points.
pub fn m_matrix(s: &GradedSystem, ell: usize, pts: &[Vec<BigInt>]) -> Result<DiffMatrix> {
    check_ell(s, ell)?;
    if pts.len() != ell - 1 {
        return Err(Error::DimensionMismatch { expected: ell - 1, got: pts.len() });
    }
    let n = s.n();
    let forms = s.forms(ell);
    let mut entries = Vec::with_capacity(forms.len());
    let mut args: Vec<Vec<BigInt>> = pts.to_vec();
    args.push(Vec::new());
    for u in &forms {
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            args[ell - 1] = unit(n, i);
            row.push(gamma_eval(u, ell, &args)?);
        }
        entries.push(row);
    }
    Ok(DiffMatrix { ell, points: pts.to_vec(), entries })
}

/// Precomputed entry polynomials `Γ_{ℓ,U_{ℓ,r}}(x_1, …, x_{ℓ-1}, e_i)` in
/// `(ℓ-1)·n` variables, for enumerating many points cheaply.
#[derive(Debug, Clone)]
pub struct MatrixTemplate {
    pub ell: usize,
    pub n: usize,
    entries: Vec<Vec<Polynomial>>,
    compiled: Option<Vec<Vec<CompiledPoly>>>,
}

impl MatrixTemplate {
    pub fn new(s: &GradedSystem, ell: usize) -> Result<Self> {
        check_ell(s, ell)?;
        let n = s.n();
        let mut entries = Vec::new();
        for u in s.forms(ell) {
            let mut row = Vec::with_capacity(n);
            for i in 0..n {
                let mut e = vec![0i64; n];
                e[i] = 1;
                row.push(gamma_substituted(&u, ell - 1, Some(&e))?);
            }
            entries.push(row);
        }
        let compiled = entries
            .iter()
            .map(|row| row.iter().map(Polynomial::compile).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>();
        Ok(MatrixTemplate { ell, n, entries, compiled })
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, r: usize, i: usize) -> &Polynomial {
        &self.entries[r][i]
    }

    /// Fills `out` (row-major `r_ℓ × n`) from the flattened point tuple; `None` on overflow.
    pub fn fill_i128(&self, flat: &[i64], out: &mut [i128]) -> Option<()> {
        let compiled = self.compiled.as_ref()?;
        let mut k = 0;
        for row in compiled {
            for c in row {
                out[k] = c.eval_i128(flat)?;
                k += 1;
            }
        }
        Some(())
    }

    pub fn eval_big(&self, flat: &[i64]) -> Vec<Vec<BigInt>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|p| p.evaluate_i64(flat).expect("template arity")).collect())
            .collect()
    }
}

/// Rank over Q by fraction-free (Bareiss) elimination. Tries machine
/// integers first and restarts with big integers on overflow.
pub fn rank_exact(m: &[Vec<BigInt>]) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let small: Option<Vec<i128>> = m
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| v.to_i64().map(i128::from))
        .collect();
    if let Some(mut flat) = small {
        if let Some(r) = rank_i128(&mut flat, rows, cols) {
            return r;
        }
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    rank_big(&mut a)
}

/// Bareiss rank on a row-major `rows × cols` buffer (destroyed). `None` on overflow.
pub fn rank_i128(a: &mut [i128], rows: usize, cols: usize) -> Option<usize> {
    let mut rank = 0;
    let mut prev: i128 = 1;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| a[r * cols + c] != 0) else { continue };
        if p != rank {
            for j in 0..cols {
                a.swap(p * cols + j, rank * cols + j);
            }
        }
        let pivot = a[rank * cols + c];
        for r in rank + 1..rows {
            let f = a[r * cols + c];
            for j in c + 1..cols {
                let v = pivot
                    .checked_mul(a[r * cols + j])?
                    .checked_sub(f.checked_mul(a[rank * cols + j])?)?;
                a[r * cols + j] = if prev == 1 { v } else { v / prev };
            }
            a[r * cols + c] = 0;
        }
        prev = pivot;
        rank += 1;
    }
    Some(rank)
}

fn rank_big(a: &mut [Vec<BigInt>]) -> usize {
    let rows = a.len();
    let cols = a[0].len();
    let mut rank = 0;
    let mut prev = BigInt::from(1);
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(p, rank);
        let pivot = a[rank][c].clone();
        for r in rank + 1..rows {
            let f = a[r][c].clone();
            for j in c + 1..cols {
                let v = &pivot * &a[r][j] - &f * &a[rank][j];
                let (q, rem) = v.div_rem(&prev);
                debug_assert!(rem.is_zero(), "Bareiss division must be exact");
                a[r][j] = q;
            }
            a[r][c].set_zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}
