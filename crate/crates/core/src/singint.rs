//! The singular integral
//!
//! ```text
//! I(τ) = ∫_{[0,1]^n} e(Σ_{ℓ,r} τ_{ℓ,r} U_{ℓ,r}(v)) dv
//! ```
//!
//! by adaptive tensor Gauss–Legendre cubature, and the fit of its decay
//! along a ray `t ↦ t·τ`.

use crate::error::{Error, Result};
use crate::numeric::{fmt_real, linear_fit, unit_phase, ComplexNeumaier, GaussLegendre};
use crate::polysys::GradedSystem;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io;

pub const MAX_DIMENSION: usize = 4;
pub const MIN_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_EVALUATION_BUDGET: u64 = 200_000_000;

pub const DEFAULT_ORDER: usize = 6;

/// Real frequencies shaped like an [`crate::expsum::AlphaVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct TauVector {
    pub blocks: Vec<Vec<f64>>,
}

impl TauVector {
    pub fn new(blocks: Vec<Vec<f64>>) -> Self {
        TauVector { blocks }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        TauVector { blocks: shape.iter().map(|&r| vec![0.0; r]).collect() }
    }

    pub fn scale(&self, t: f64) -> TauVector {
        TauVector { blocks: self.blocks.iter().map(|b| b.iter().map(|x| x * t).collect()).collect() }
    }

    pub fn neg(&self) -> TauVector {
        self.scale(-1.0)
    }

    /// `|τ| = max |τ_{ℓ,r}|`.
    pub fn sup_norm(&self) -> f64 {
        self.blocks.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn check_shape(&self, s: &GradedSystem) -> Result<()> {
        let d = self.blocks.len().max(s.d());
        for ell in 1..=d {
            let got = self.blocks.get(ell - 1).map_or(0, Vec::len);
            if got != s.r(ell) {
                return Err(Error::ShapeMismatch(format!(
                    "tau block {ell} has {got} entries, system has r_{ell} = {}",
                    s.r(ell)
                )));
            }
        }
        if let Some(x) = self.blocks.iter().flatten().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite frequency {x}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IntegralOptions {
    /// Integrand evaluations allowed per factor.
    pub evaluation_budget: u64,
    /// Integrate independent groups of variables separately and multiply.
    pub factorize: bool,
    /// Points per axis of the cell rule; the error estimate compares it
    /// with the rule of one order less.
    pub order: usize,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        IntegralOptions { evaluation_budget: DEFAULT_EVALUATION_BUDGET, factorize: true, order: DEFAULT_ORDER }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralValue {
    pub value: Complex64,
    pub err_estimate: f64,
    pub converged: bool,
    pub evaluations: u64,
}

/// A real polynomial phase in a subset of the variables.
#[derive(Debug, Clone)]
struct Factor {
    dim: usize,
    terms: Vec<(f64, Vec<i32>)>,
}

impl Factor {
    fn phase(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(y).map(|(&k, &v)| v.powi(k)).product::<f64>())
            .sum()
    }

    fn lipschitz(&self, axis: usize) -> f64 {
        self.terms.iter().map(|(c, e)| c.abs() * f64::from(e[axis])).sum()
    }
}

/// Combined phase `Σ τ U` grouped into variable-connected factors.
fn phase_factors(s: &GradedSystem, tau: &TauVector, factorize: bool) -> Vec<Factor> {
    let n = s.n();
    let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for (ell, r, u) in s.iter() {
        let t = tau.blocks[ell - 1][r - 1];
        if t == 0.0 {
            continue;
        }
        for (e, c) in u.degree_part(ell as u32).terms() {
            *merged.entry(e.to_vec()).or_insert(0.0) += t * c.to_f64().unwrap_or(f64::NAN);
        }
    }
    merged.retain(|_, c| *c != 0.0);

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    if factorize {
        for e in merged.keys() {
            let vars: Vec<usize> = (0..n).filter(|&i| e[i] > 0).collect();
            for w in vars.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a.max(b)] = a.min(b);
            }
        }
    } else {
        parent.iter_mut().for_each(|p| *p = 0);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups
        .into_values()
        .filter_map(|vars| {
            let terms: Vec<(f64, Vec<i32>)> = merged
                .iter()
                .filter(|(e, _)| vars.iter().any(|&i| e[i] > 0))
                .map(|(e, &c)| (c, vars.iter().map(|&i| e[i] as i32).collect()))
                .collect();
            (!terms.is_empty()).then_some(Factor { dim: vars.len(), terms })
        })
        .collect()
}

struct Rules {
    hi: GaussLegendre,
    lo: GaussLegendre,
}

#[derive(Debug, Clone)]
struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: Complex64,
    err: f64,
    id: u64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then_with(|| other.id.cmp(&self.id))
    }
}

fn tensor_rule(f: &Factor, rule: &GaussLegendre, lo: &[f64], hi: &[f64]) -> Complex64 {
    let k = f.dim;
    let axes: Vec<Vec<(f64, f64)>> = (0..k).map(|a| rule.on_interval(lo[a], hi[a]).collect()).collect();
    let m = rule.nodes.len();
    let mut idx = vec![0usize; k];
    let mut y = vec![0.0; k];
    let mut acc = ComplexNeumaier::new();
    loop {
        let mut w = 1.0;
        for a in 0..k {
            let (x, wa) = axes[a][idx[a]];
            y[a] = x;
            w *= wa;
        }
        let phi = f.phase(&y);
        acc.add(unit_phase(phi - phi.round()) * w);
        let mut a = k;
        loop {
            if a == 0 {
                return acc.value();
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
        }
    }
}

fn evaluate_cell(f: &Factor, rules: &Rules, lo: Vec<f64>, hi: Vec<f64>, id: u64) -> Cell {
    let h = tensor_rule(f, &rules.hi, &lo, &hi);
    let l = tensor_rule(f, &rules.lo, &lo, &hi);
    Cell { lo, hi, value: h, err: (h - l).norm(), id }
}

fn integrate_factor(f: &Factor, tau_norm: f64, tol: f64, budget: u64, order: usize) -> Result<IntegralValue> {
    let k = f.dim;
    let rules = Rules { hi: GaussLegendre::new(order), lo: GaussLegendre::new(order - 1) };
    let per_cell = (order.pow(k as u32) + (order - 1).pow(k as u32)) as u64;
    let splits: Vec<u64> = (0..k)
        .map(|a| (4.0 * (1.0 + tau_norm.max(f.lipschitz(a)))).ceil() as u64)
        .collect();
    let initial = splits.iter().try_fold(1u64, |acc, &m| acc.checked_mul(m));
    let initial_evals = initial.and_then(|c| c.checked_mul(per_cell));
    match initial_evals {
        Some(e) if e <= budget => {}
        _ => {
            return Err(Error::Budget {
                what: "quadrature evaluations",
                required: initial_evals.map_or(u128::MAX, u128::from),
                budget: u128::from(budget),
            })
        }
    }
    let initial = initial.expect("checked above");
    let mut cells: Vec<Cell> = (0..initial)
        .into_par_iter()
        .map(|id| {
            let mut rem = id;
            let mut lo = vec![0.0; k];
            let mut hi = vec![0.0; k];
            for a in (0..k).rev() {
                let m = splits[a];
                let j = rem % m;
                rem /= m;
                lo[a] = j as f64 / m as f64;
                hi[a] = (j + 1) as f64 / m as f64;
            }
            evaluate_cell(f, &rules, lo, hi, id)
        })
        .collect();
    let mut evaluations = initial * per_cell;
    let mut next_id = initial;
    let mut total_err: f64 = cells.iter().map(|c| c.err).sum();
    let mut heap: BinaryHeap<Cell> = cells.drain(..).collect();
    let children = 1u64 << k;
    let mut since_resum = 0u32;
    while total_err > tol && evaluations + children * per_cell <= budget {
        let worst = heap.pop().expect("non-empty");
        total_err -= worst.err;
        let base = next_id;
        let kids: Vec<Cell> = (0..children)
            .into_par_iter()
            .map(|mask| {
                let mut lo = worst.lo.clone();
                let mut hi = worst.hi.clone();
                for a in 0..k {
                    let mid = 0.5 * (worst.lo[a] + worst.hi[a]);
                    if mask >> a & 1 == 1 {
                        lo[a] = mid;
                    } else {
                        hi[a] = mid;
                    }
                }
                evaluate_cell(f, &rules, lo, hi, base + mask)
            })
            .collect();
        next_id += children;
        evaluations += children * per_cell;
        for c in kids {
            total_err += c.err;
            heap.push(c);
        }
        since_resum += 1;
        if since_resum == 4096 {
            total_err = heap.iter().map(|c| c.err).sum();
            since_resum = 0;
        }
    }
    let mut leaves = heap.into_vec();
    leaves.sort_by_key(|c| c.id);
    let mut acc = ComplexNeumaier::new();
    let mut err = 0.0;
    for c in &leaves {
        acc.add(c.value);
        err += c.err;
    }
    Ok(IntegralValue { value: acc.value(), err_estimate: err, converged: err <= tol, evaluations })
}

/// `I(τ)`; when the budget runs out the best value is returned with
/// `converged = false`.
pub fn eval_i(s: &GradedSystem, tau: &TauVector, tol: f64, opts: &IntegralOptions) -> Result<IntegralValue> {
    if s.n() > MAX_DIMENSION {
        return Err(Error::invalid(format!("dimension {} exceeds {MAX_DIMENSION}", s.n())));
    }
    if !(tol >= MIN_TOLERANCE && tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be at least {MIN_TOLERANCE:e}, got {tol}")));
    }
    if opts.order < 2 {
        return Err(Error::invalid("cell rule order must be at least 2"));
    }
    tau.check_shape(s)?;
    let factors = phase_factors(s, tau, opts.factorize);
    if factors.is_empty() {
        return Ok(IntegralValue { value: Complex64::new(1.0, 0.0), err_estimate: 0.0, converged: true, evaluations: 0 });
    }
    let share = tol / factors.len() as f64;
    let norm = tau.sup_norm();
    let mut value = Complex64::new(1.0, 0.0);
    let mut upper = 1.0;
    let mut evaluations = 0;
    let mut converged = true;
    for f in &factors {
        let r = integrate_factor(f, norm, share, opts.evaluation_budget, opts.order)?;
        value *= r.value;
        upper *= r.value.norm() + r.err_estimate;
        evaluations += r.evaluations;
        converged &= r.converged;
    }
    let err_estimate = (upper - value.norm()).max(0.0);
    Ok(IntegralValue { value, err_estimate, converged: converged && err_estimate <= tol, evaluations })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub value: Complex64,
    pub abs: f64,
    pub err_estimate: f64,
    /// `C · min(1, t^{-R-1})`.
    pub bound: f64,
    /// `|I|` was indistinguishable from zero and left out of the fit.
    pub zero_flagged: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub stderr: f64,
    pub c: f64,
    pub big_r: usize,
    pub rows: Vec<DecayRow>,
}

impl DecayFit {
    /// Whether `|I| ≤ C·min(1, t^{-R-1})` at every sampled `t`, up to the
    /// quadrature error.
    pub fn envelope_holds(&self) -> bool {
        self.rows.iter().all(|r| r.abs <= r.bound + r.err_estimate)
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "re", "im", "abs", "bound"])?;
        for r in &self.rows {
            wr.write_record([
                fmt_real(r.t),
                fmt_real(r.value.re),
                fmt_real(r.value.im),
                fmt_real(r.abs),
                fmt_real(r.bound),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `log|I(t·dir)|` against `log t`.
pub fn decay_exponent(
    s: &GradedSystem,
    direction: &TauVector,
    t_values: &[f64],
    tol: f64,
    opts: &IntegralOptions,
) -> Result<DecayFit> {
    direction.check_shape(s)?;
    if (direction.sup_norm() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("direction must have unit sup-norm"));
    }
    if t_values.len() < 4 {
        return Err(Error::invalid(format!("at least 4 t values are needed, got {}", t_values.len())));
    }
    if t_values[0] <= 0.0 || t_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("t values must be positive and strictly increasing"));
    }
    if t_values[t_values.len() - 1] / t_values[0] < 100.0 * (1.0 - 1e-12) {
        return Err(Error::invalid("t values must span at least two decades"));
    }
    let big_r = s.total_r();
    let mut rows = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let r = eval_i(s, &direction.scale(t), tol, opts)?;
        let abs = r.value.norm();
        rows.push(DecayRow {
            t,
            value: r.value,
            abs,
            err_estimate: r.err_estimate,
            bound: 0.0,
            zero_flagged: abs <= r.err_estimate.max(tol),
            converged: r.converged,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| !r.zero_flagged).map(|r| (r.t.ln(), r.abs.ln())).unzip();
    if xs.len() < 3 {
        return Err(Error::invalid(format!("only {} non-zero samples; at least 3 are needed", xs.len())));
    }
    let (intercept, exponent, stderr) = linear_fit(&xs, &ys);
    let c = intercept.exp();
    for r in &mut rows {
        r.bound = c * r.t.powf(-(big_r as f64) - 1.0).min(1.0);
    }
    Ok(DecayFit { exponent, stderr, c, big_r, rows })
}
