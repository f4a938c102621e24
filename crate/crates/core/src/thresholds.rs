//! Explicit thresholds of the main dichotomy and its empirical verification
//! over grids of frequencies.

use crate::dioph::{find_simultaneous, SimultaneousWitness, DEFAULT_Q_BUDGET};
use crate::error::{Error, Result};
use crate::expsum::{AlphaVector, BoxSpec, SumEvaluator, SumOptions};
use crate::extended::XRat;
use crate::linforms::B1;
use crate::numeric::fmt_real;
use crate::polysys::GradedSystem;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::io;

fn rat(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `Σ_{j=2}^d 4^{j-2} γ_j` with `gammas[0] = γ_2`.
pub fn gamma_sum(gammas: &[XRat]) -> XRat {
    gammas.iter().enumerate().fold(XRat::zero(), |acc, (k, g)| {
        acc.add(&g.scale(&BigRational::from_integer(BigInt::from(4u32).pow(k as u32))))
    })
}

/// Upper end of the admissible `Ω` range.
pub fn omega_sup(gamma_sum: &XRat, r1: usize, big_r: usize) -> XRat {
    let first = gamma_sum.recip().scale(&rat(1, 8 * r1 as u64 + 9));
    let second = XRat::from(rat(1, 2 * (big_r as u64 + 1))).add(gamma_sum).recip();
    first.min(second)
}

/// The lower bound `B₁(u₁)` must exceed; `0` when there are no linear forms.
pub fn b1_required(gamma_sum: &XRat, r1: usize, big_r: usize) -> XRat {
    if r1 == 0 {
        return XRat::zero();
    }
    let m = gamma_sum
        .scale(&rat(4 * (r1 as u64 + 1), 1))
        .max(XRat::from(rat(1, 4 * (big_r as u64 + 1))));
    m.recip().scale(&rat(2 * r1 as u64, 1))
}

/// `M₀ = max{8(r₁+1) Σ, 1/(2(R+1))}`.
pub fn m_zero(gamma_sum: &XRat, r1: usize, big_r: usize) -> XRat {
    gamma_sum
        .scale(&rat(8 * (r1 as u64 + 1), 1))
        .max(XRat::from(rat(1, 2 * (big_r as u64 + 1))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub gamma_sum: XRat,
    pub m0: XRat,
    pub b1_required: XRat,
    pub omega_sup: XRat,
    pub b1_observed: B1,
    pub feasible: bool,
}

/// All thresholds for measured `γ_2..γ_d`, `r₁`, `R` and the observed `B₁`.
pub fn threshold_report(gammas: &[XRat], r1: usize, big_r: usize, b1_observed: B1) -> ThresholdReport {
    let sum = gamma_sum(gammas);
    let m0 = m_zero(&sum, r1, big_r);
    let req = b1_required(&sum, r1, big_r);
    let osup = omega_sup(&sum, r1, big_r);
    let b1_ok = match b1_observed {
        B1::Infinite => true,
        B1::Finite(k) => XRat::int(k as i64) > req,
    };
    let feasible = sum.is_finite() && m0.is_finite() && req.is_finite() && b1_ok && !osup.is_zero();
    ThresholdReport { gamma_sum: sum, m0, b1_required: req, omega_sup: osup, b1_observed, feasible }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Classification {
    #[serde(rename = "ALT_I")]
    AltI,
    #[serde(rename = "ALT_II")]
    AltII,
    #[serde(rename = "BOTH")]
    Both,
    #[serde(rename = "VIOLATION")]
    Violation,
}

impl Classification {
    pub fn from_parts(within_bound: bool, has_witness: bool) -> Self {
        match (within_bound, has_witness) {
            (true, false) => Classification::AltI,
            (true, true) => Classification::Both,
            (false, true) => Classification::AltII,
            (false, false) => Classification::Violation,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::AltI => "ALT_I",
            Classification::AltII => "ALT_II",
            Classification::Both => "BOTH",
            Classification::Violation => "VIOLATION",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyVerdict {
    pub alpha: AlphaVector,
    pub sum_magnitude: f64,
    /// `slack · P^{n − ΔΩ}`.
    pub bound_i: f64,
    pub witness: Option<SimultaneousWitness>,
    pub classification: Classification,
}

#[derive(Debug, Clone)]
pub struct DichotomyOptions {
    pub slack: f64,
    pub lattice_budget: u128,
    pub q_budget: u64,
    /// When given, `Ω` at or above this value produces a warning.
    pub omega_sup: Option<XRat>,
}

impl Default for DichotomyOptions {
    fn default() -> Self {
        DichotomyOptions {
            slack: 1.0,
            lattice_budget: SumOptions::default().lattice_budget,
            q_budget: DEFAULT_Q_BUDGET,
            omega_sup: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub alt_i: usize,
    pub alt_ii: usize,
    pub both: usize,
    pub violation: usize,
    pub errors: usize,
}

#[derive(Debug, Clone)]
pub struct DichotomyRun {
    /// One entry per grid point, in grid order.
    pub entries: Vec<std::result::Result<DichotomyVerdict, String>>,
    pub counts: ClassCounts,
    /// Grid indices classified as violations.
    pub violations: Vec<usize>,
    pub warnings: Vec<String>,
    pub slack: f64,
}

/// Classifies every grid point by the two alternatives.
pub fn verify_dichotomy(
    s: &GradedSystem,
    p: f64,
    delta: f64,
    omega: f64,
    grid: &[AlphaVector],
    opts: &DichotomyOptions,
) -> Result<DichotomyRun> {
    if grid.is_empty() {
        return Err(Error::invalid("the α grid is empty"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("Δ must lie in (0, 1], got {delta}")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("Ω must be positive, got {omega}")));
    }
    if !(opts.slack > 0.0 && opts.slack.is_finite()) {
        return Err(Error::invalid("slack must be positive"));
    }
    let bx = BoxSpec::new(p, s.n())?;
    let mut warnings = Vec::new();
    if let Some(sup) = &opts.omega_sup {
        let om = XRat::from_f64(omega).expect("checked positive");
        if &om >= sup {
            warnings.push(format!("Ω = {omega} is not below the admissible supremum {sup}"));
        }
    }
    let bound_i = opts.slack * p.powf(s.n() as f64 - delta * omega);
    let evaluator = SumEvaluator::new(s, bx, &SumOptions { lattice_budget: opts.lattice_budget });
    let entries: Vec<_> = grid
        .par_iter()
        .map(|a| {
            let ev = evaluator.as_ref().map_err(|e| e.to_string())?;
            a.check_shape(s).map_err(|e| e.to_string())?;
            let sum_magnitude = ev.eval(a).map_err(|e| e.to_string())?.norm();
            let witness = find_simultaneous(a, p, delta, opts.q_budget).map_err(|e| e.to_string())?;
            let classification = Classification::from_parts(sum_magnitude <= bound_i, witness.is_some());
            Ok(DichotomyVerdict { alpha: a.clone(), sum_magnitude, bound_i, witness, classification })
        })
        .collect();
    let mut counts = ClassCounts::default();
    let mut violations = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        match e {
            Ok(v) => match v.classification {
                Classification::AltI => counts.alt_i += 1,
                Classification::AltII => counts.alt_ii += 1,
                Classification::Both => counts.both += 1,
                Classification::Violation => {
                    counts.violation += 1;
                    violations.push(i);
                }
            },
            Err(_) => counts.errors += 1,
        }
    }
    if counts.errors > 0 {
        warnings.push(format!("{} grid points failed", counts.errors));
    }
    Ok(DichotomyRun { entries, counts, violations, warnings, slack: opts.slack })
}

impl DichotomyRun {
    /// Columns `alpha_<ℓ>_<r>…, abs_S, bound_I, q, classification`; failed
    /// points carry `ERROR` and empty numeric fields.
    pub fn write_csv<W: io::Write>(&self, shape: &[usize], w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = Vec::new();
        for (i, &r) in shape.iter().enumerate() {
            for k in 1..=r {
                header.push(format!("alpha_{}_{}", i + 1, k));
            }
        }
        header.extend(["abs_S", "bound_I", "q", "classification"].map(String::from));
        wr.write_record(&header)?;
        let width = header.len();
        for e in &self.entries {
            let mut row: Vec<String> = Vec::with_capacity(width);
            match e {
                Ok(v) => {
                    row.extend(v.alpha.entries().map(|x| fmt_real(x.to_f64().unwrap_or(f64::NAN))));
                    row.push(fmt_real(v.sum_magnitude));
                    row.push(fmt_real(v.bound_i));
                    row.push(v.witness.as_ref().map(|w| w.q.to_string()).unwrap_or_default());
                    row.push(v.classification.to_string());
                }
                Err(_) => {
                    row.resize(width - 1, String::new());
                    row.push("ERROR".into());
                }
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::Polynomial;

    #[test]
    fn formula_examples() {
        let one = XRat::one();
        assert_eq!(omega_sup(&one, 1, 2), XRat::frac(1, 17));
        assert_eq!(b1_required(&one, 1, 2), XRat::frac(1, 4));
        assert_eq!(m_zero(&one, 1, 2), XRat::int(16));
        assert_eq!(omega_sup(&XRat::int(2), 0, 1), XRat::frac(1, 18));
        assert_eq!(omega_sup(&XRat::zero(), 0, 1), XRat::int(4));
        assert_eq!(b1_required(&XRat::int(5), 0, 1), XRat::zero());
        assert_eq!(b1_required(&XRat::zero(), 2, 3), XRat::int(64));
        assert_eq!(m_zero(&XRat::zero(), 0, 1), XRat::frac(1, 4));
        assert_eq!(m_zero(&XRat::Infinite, 0, 1), XRat::Infinite);
        assert_eq!(omega_sup(&XRat::Infinite, 1, 1), XRat::zero());
        assert_eq!(b1_required(&XRat::Infinite, 1, 1), XRat::zero());
    }

    #[test]
    fn gamma_sum_weights() {
        assert_eq!(gamma_sum(&[XRat::int(1), XRat::int(1), XRat::frac(1, 2)]), XRat::int(13));
        assert_eq!(gamma_sum(&[]), XRat::zero());
        assert_eq!(gamma_sum(&[XRat::zero(), XRat::Infinite]), XRat::Infinite);
    }

    #[test]
    fn report_feasibility() {
        let r = threshold_report(&[XRat::int(2)], 0, 1, B1::Infinite);
        assert!(r.feasible);
        assert_eq!(r.omega_sup, XRat::frac(1, 18));
        let r = threshold_report(&[XRat::one()], 1, 2, B1::Finite(0));
        assert!(!r.feasible);
        let r = threshold_report(&[XRat::Infinite], 1, 2, B1::Finite(3));
        assert!(!r.feasible);
    }

    fn square() -> GradedSystem {
        GradedSystem::new(1, vec![vec![], vec![Polynomial::parse("x1^2", 1).unwrap()]])
    }

    fn av(k: i64, den: i64) -> AlphaVector {
        AlphaVector::new(vec![vec![], vec![BigRational::new(k.into(), den.into())]])
    }

    #[test]
    fn rational_points_have_witnesses() {
        let grid = vec![av(1, 2), av(0, 1), av(1, 3)];
        let run = verify_dichotomy(&square(), 64.0, 0.5, 0.05, &grid, &DichotomyOptions::default()).unwrap();
        for e in &run.entries {
            let v = e.as_ref().unwrap();
            assert!(matches!(v.classification, Classification::AltII | Classification::Both));
        }
        let first = run.entries[0].as_ref().unwrap();
        assert_eq!(first.witness.as_ref().unwrap().q, 2);
        assert_eq!(run.counts.violation, 0);
    }

    #[test]
    fn bad_inputs() {
        let opts = DichotomyOptions::default();
        assert!(verify_dichotomy(&square(), 64.0, 0.5, 0.05, &[], &opts).is_err());
        assert!(verify_dichotomy(&square(), 64.0, 1.5, 0.05, &[av(0, 1)], &opts).is_err());
        let wrong = AlphaVector::new(vec![vec![BigRational::from_integer(1.into())]]);
        let run = verify_dichotomy(&square(), 64.0, 0.5, 0.05, &[wrong], &opts).unwrap();
        assert_eq!(run.counts.errors, 1);
        let tight = DichotomyOptions { lattice_budget: 10, ..Default::default() };
        let run = verify_dichotomy(&square(), 64.0, 0.5, 0.05, &[av(0, 1)], &tight).unwrap();
        assert_eq!(run.counts.errors, 1);
        let warn = DichotomyOptions { omega_sup: Some(XRat::frac(1, 18)), ..Default::default() };
        let run = verify_dichotomy(&square(), 64.0, 0.5, 0.1, &[av(0, 1)], &warn).unwrap();
        assert_eq!(run.warnings.len(), 1);
    }

    #[test]
    fn csv_layout() {
        let run = verify_dichotomy(&square(), 16.0, 0.5, 0.05, &[av(1, 2), av(1, 7)], &DichotomyOptions::default())
            .unwrap();
        let mut buf = Vec::new();
        run.write_csv(&[0, 1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "alpha_2_1,abs_S,bound_I,q,classification");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.5,"));
    }
}
