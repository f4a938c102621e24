//! Multidimensional partial summation (Abel summation in `n ≤ 3` variables).
//!
//! For `T_ρ(t) = Σ_{0 ≤ x ≤ t} ρ(x)` the identity reads
//!
//! ```text
//! Σ_{0≤x≤N} f(x) ρ(x) = Σ_{ε∈{0,1}^n} (-1)^{|ε|} ∫_{[0,N_i], ε_i=1} ∂^ε f(N_ε̄ + t_ε) T_ρ(N_ε̄ + t_ε) dt_ε
//! ```
//!
//! where coordinates with `ε_i = 0` are pinned at `N_i` (the `N_i^{ε_i - 1}`
//! factor exactly cancels the integral of a function constant in `t_i`).
//! `T_ρ` is constant on unit cells, so each integral is split at the integer
//! breakpoints and every cell is integrated with a fixed Gauss rule.

use crate::error::{Error, Result};
use crate::numeric::{ComplexNeumaier, GaussLegendre};
use crate::polysys::Polynomial;
use num_complex::Complex64;
use num_traits::Zero;

/// A function on `R^n` that can report its mixed partials `∂^ε f`.
pub trait SmoothField: Sync {
    fn dim(&self) -> usize;

    /// `∂^ε f(x)`, where bit `i` of `mask` set means one derivative in `x_{i+1}`.
    fn mixed_partial(&self, mask: u32, x: &[f64]) -> Complex64;

    fn value(&self, x: &[f64]) -> Complex64 {
        self.mixed_partial(0, x)
    }
}

/// `f(x) = exp(Σ c_i x_i)`; all mixed partials are `Π_{i∈ε} c_i · f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpLinearField {
    pub coeffs: Vec<Complex64>,
}

impl ExpLinearField {
    /// `f(x) = e(θ·x) = exp(2πi θ·x)`.
    pub fn phase(freqs: &[f64]) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        ExpLinearField {
            coeffs: freqs.iter().map(|&t| Complex64::new(0.0, tau * t)).collect(),
        }
    }
}

impl SmoothField for ExpLinearField {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn mixed_partial(&self, mask: u32, x: &[f64]) -> Complex64 {
        let mut expo = Complex64::zero();
        let mut factor = Complex64::new(1.0, 0.0);
        for (i, (c, xi)) in self.coeffs.iter().zip(x).enumerate() {
            expo += c * xi;
            if mask >> i & 1 == 1 {
                factor *= c;
            }
        }
        factor * expo.exp()
    }
}

/// A real polynomial field with symbolically differentiated partials.
#[derive(Debug, Clone)]
pub struct PolynomialField {
    partials: Vec<Polynomial>,
}

impl PolynomialField {
    pub fn new(p: &Polynomial) -> Self {
        let n = p.n();
        let partials = (0..1u32 << n)
            .map(|mask| {
                (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .fold(p.clone(), |q, i| q.derivative(i))
            })
            .collect();
        PolynomialField { partials }
    }
}

impl SmoothField for PolynomialField {
    fn dim(&self) -> usize {
        self.partials[0].n()
    }

    fn mixed_partial(&self, mask: u32, x: &[f64]) -> Complex64 {
        Complex64::new(self.partials[mask as usize].eval_f64(x), 0.0)
    }
}

/// A field given by a closure `(mask, x) ↦ ∂^ε f(x)`.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(u32, &[f64]) -> Complex64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F> SmoothField for FnField<F>
where
    F: Fn(u32, &[f64]) -> Complex64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn mixed_partial(&self, mask: u32, x: &[f64]) -> Complex64 {
        (self.f)(mask, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialSummationOptions {
    /// Gauss points per axis and cell.
    pub order: usize,
    /// Per-cell agreement demanded between the base rule and a rule four
    /// orders higher, relative to `max(1, |cell integral|)`.
    pub cell_tolerance: f64,
}

impl Default for PartialSummationOptions {
    fn default() -> Self {
        PartialSummationOptions { order: 10, cell_tolerance: 1e-11 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialSummation {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// `|lhs - rhs| / max(1, |lhs|)`.
    pub residual: f64,
}

/// Evaluates both sides of the partial summation identity over `0 ≤ x ≤ N`.
pub fn partial_summation_residual(
    f: &dyn SmoothField,
    rho: &(dyn Fn(&[i64]) -> Complex64 + Sync),
    bounds: &[u64],
    opts: &PartialSummationOptions,
) -> Result<PartialSummation> {
    let n = f.dim();
    if bounds.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: bounds.len() });
    }
    if n == 0 || n > 3 {
        return Err(Error::invalid(format!("partial summation supports 1..=3 variables, got {n}")));
    }
    let side: Vec<usize> = bounds.iter().map(|&b| b as usize + 1).collect();
    let total: usize = side.iter().product();

    // Row-major tables of ρ and of T_ρ (cumulative along every axis).
    let mut weights = Vec::with_capacity(total);
    let mut x = vec![0i64; n];
    for idx in 0..total {
        unravel(idx, &side, &mut x);
        weights.push(rho(&x));
    }
    let mut cumulative = weights.clone();
    let mut stride = 1;
    for axis in (0..n).rev() {
        for idx in 0..total {
            if (idx / stride) % side[axis] != 0 {
                let prev = cumulative[idx - stride];
                cumulative[idx] += prev;
            }
        }
        stride *= side[axis];
    }

    let mut lhs = ComplexNeumaier::new();
    let mut xf = vec![0f64; n];
    for (idx, w) in weights.iter().enumerate() {
        unravel(idx, &side, &mut x);
        for (a, &b) in xf.iter_mut().zip(&x) {
            *a = b as f64;
        }
        lhs.add(f.value(&xf) * w);
    }

    let base = GaussLegendre::new(opts.order);
    let fine = GaussLegendre::new(opts.order + 4);
    let mut rhs = ComplexNeumaier::new();
    for mask in 0..(1u32 << n) {
        let axes: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if axes.iter().any(|&i| bounds[i] == 0) {
            continue;
        }
        let sign = if axes.len() % 2 == 0 { 1.0 } else { -1.0 };
        let cells: Vec<usize> = axes.iter().map(|&i| bounds[i] as usize).collect();
        let ncells: usize = cells.iter().product();
        let mut cell = vec![0usize; axes.len()];
        let mut t_index = vec![0usize; n];
        for c in 0..ncells {
            unravel(c, &cells, &mut cell);
            for i in 0..n {
                t_index[i] = bounds[i] as usize;
            }
            for (&ax, &k) in axes.iter().zip(&cell) {
                t_index[ax] = k;
            }
            let t_val = cumulative[ravel(&t_index, &side)];
            if t_val == Complex64::zero() {
                continue;
            }
            let coarse = cell_integral(f, mask, bounds, &axes, &cell, &base);
            let refined = cell_integral(f, mask, bounds, &axes, &cell, &fine);
            let gap = (coarse - refined).norm();
            if gap > opts.cell_tolerance * refined.norm().max(1.0) {
                let mut id = vec![mask as u64];
                id.extend(cell.iter().map(|&k| k as u64));
                return Err(Error::Quadrature { cell: id, discrepancy: gap });
            }
            rhs.add(refined * t_val * sign);
        }
    }

    let lhs = lhs.value();
    let rhs = rhs.value();
    Ok(PartialSummation { lhs, rhs, residual: (lhs - rhs).norm() / lhs.norm().max(1.0) })
}

/// Tensor Gauss rule for `∂^ε f` over one unit cell of the integrated axes.
fn cell_integral(
    f: &dyn SmoothField,
    mask: u32,
    bounds: &[u64],
    axes: &[usize],
    cell: &[usize],
    rule: &GaussLegendre,
) -> Complex64 {
    let n = bounds.len();
    let q = rule.nodes.len();
    let npts = q.pow(axes.len() as u32);
    let mut point: Vec<f64> = bounds.iter().map(|&b| b as f64).collect();
    let mut acc = ComplexNeumaier::new();
    let mut digits = vec![0usize; axes.len()];
    let qs = vec![q; axes.len()];
    for p in 0..npts {
        unravel(p, &qs, &mut digits);
        let mut w = 1.0;
        for (j, &ax) in axes.iter().enumerate() {
            let k = cell[j] as f64;
            point[ax] = k + 0.5 * (1.0 + rule.nodes[digits[j]]);
            w *= 0.5 * rule.weights[digits[j]];
        }
        debug_assert_eq!(point.len(), n);
        acc.add(f.mixed_partial(mask, &point) * w);
    }
    acc.value()
}

fn unravel<T: TryFrom<usize> + Copy>(mut idx: usize, side: &[usize], out: &mut [T])
where
    <T as TryFrom<usize>>::Error: std::fmt::Debug,
{
    for i in (0..side.len()).rev() {
        out[i] = T::try_from(idx % side[i]).unwrap();
        idx /= side[i];
    }
}

fn ravel(x: &[usize], side: &[usize]) -> usize {
    x.iter().zip(side).fold(0, |acc, (&xi, &s)| acc * s + xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(_: &[i64]) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn abel_summation_of_identity() {
        let f = PolynomialField::new(&Polynomial::parse("x1", 1).unwrap());
        let r = partial_summation_residual(&f, &ones, &[10], &Default::default()).unwrap();
        assert!((r.lhs.re - 55.0).abs() < 1e-12);
        assert!(r.residual <= 1e-10, "{r:?}");
    }

    #[test]
    fn alternating_weights_with_oscillating_field() {
        let f = ExpLinearField::phase(&[0.3, 0.1]);
        let rho = |x: &[i64]| Complex64::new(if (x[0] + x[1]) % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
        let r = partial_summation_residual(&f, &rho, &[6, 5], &Default::default()).unwrap();
        assert!(r.residual <= 1e-9, "{r:?}");
    }

    #[test]
    fn degenerate_box_collapses_to_boundary_terms() {
        let f = ExpLinearField::phase(&[0.2, 0.7, 0.05]);
        let rho = |x: &[i64]| Complex64::new(1.0 + x[0] as f64, x[2] as f64);
        for bounds in [[0u64, 3, 2], [0, 0, 0], [4, 0, 1]] {
            let r = partial_summation_residual(&f, &rho, &bounds, &Default::default()).unwrap();
            assert!(r.residual <= 1e-10, "{bounds:?}: {r:?}");
        }
    }

    #[test]
    fn rejects_wrong_dimension_and_unresolved_cells() {
        let f = ExpLinearField::phase(&[0.3]);
        assert!(partial_summation_residual(&f, &ones, &[3, 3], &Default::default()).is_err());
        let wild = ExpLinearField::phase(&[40.0]);
        let coarse = PartialSummationOptions { order: 2, cell_tolerance: 1e-11 };
        assert!(matches!(
            partial_summation_residual(&wild, &ones, &[3], &coarse),
            Err(Error::Quadrature { .. })
        ));
    }
}
