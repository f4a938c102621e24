use crate::config::{Budgets, Command, ExperimentConfig, Params, Rho};
use crate::grid::alpha_grid;
use circlesum::dioph::arc_membership_linear;
use circlesum::expsum::{
    partial_summation_residual, ExpLinearField, PartialSummationOptions, PolynomialField, SmoothField,
};
use circlesum::linforms::{b1, restrict, restriction_gap, LinearBlock};
use circlesum::numeric::{fmt_complex, fmt_real};
use circlesum::singint::{decay_exponent, eval_i, IntegralOptions};
use circlesum::thresholds::{omega_sup, threshold_report, verify_dichotomy, DichotomyOptions};
use circlesum::variety::{estimate_g, gamma_ell, gamma_prime, CountSeries};
use circlesum::{BoxSpec, Error, GradedSystem, SumEvaluator, SumOptions, XRat};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

/// What a command produced: CSV bytes, a JSON summary, and whether some
/// budget ran out before the requested accuracy or coverage was reached.
pub struct Report {
    pub csv: Vec<u8>,
    pub summary: Value,
    pub warnings: Vec<String>,
    pub budget_exhausted: bool,
}

impl Report {
    fn new(csv: Vec<u8>, summary: Value) -> Self {
        Report { csv, summary, warnings: Vec::new(), budget_exhausted: false }
    }
}

type Out = Result<Report, Error>;

pub fn dispatch(cfg: &ExperimentConfig) -> Out {
    let (s, p, b) = (&cfg.system, &cfg.params, &cfg.budgets);
    match cfg.command {
        Command::EvalSum => eval_sum(s, p, b),
        Command::ScanAlpha => scan_alpha(s, p, b),
        Command::CountVariety => count_variety(s, p, b),
        Command::EstimateG => estimate(s, p, b),
        Command::ComputeB1 => compute_b1(s),
        Command::Thresholds => thresholds(s, p, b),
        Command::VerifyDichotomy => dichotomy(s, p, b),
        Command::SingularIntegral => singular(s, p, b),
        Command::PartialSummationCheck => partial_summation(p),
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
}

fn alpha_header(s: &GradedSystem) -> Vec<String> {
    let mut h = Vec::new();
    for (i, r) in s.block_sizes().into_iter().enumerate() {
        for k in 1..=r {
            h.push(format!("alpha_{}_{}", i + 1, k));
        }
    }
    h
}

fn lattice_guard(s: &GradedSystem, p: f64, b: &Budgets) -> Result<BoxSpec, Error> {
    let bx = BoxSpec::new(p, s.n())?;
    if bx.lattice_size() > b.lattice {
        return Err(Error::Budget { what: "exponential sum lattice points", required: bx.lattice_size(), budget: b.lattice });
    }
    Ok(bx)
}

fn eval_sum(s: &GradedSystem, p: &Params, b: &Budgets) -> Out {
    let pv = p.p.expect("validated");
    let alpha = p.alpha.as_ref().expect("validated");
    let bx = lattice_guard(s, pv, b)?;
    let v = circlesum::eval_s(s, bx, alpha, &SumOptions { lattice_budget: b.lattice })?;
    let csv = csv_bytes(
        &["P", "re", "im", "abs"],
        [vec![fmt_real(pv), fmt_real(v.re), fmt_real(v.im), fmt_real(v.norm())]],
    )?;
    let alpha_text: Vec<String> = alpha.entries().map(ToString::to_string).collect();
    Ok(Report::new(
        csv,
        json!({
            "value": fmt_complex(v),
            "abs": v.norm(),
            "lattice_points": bx.lattice_size().to_string(),
            "alpha": alpha_text,
        }),
    ))
}

fn scan_alpha(s: &GradedSystem, p: &Params, b: &Budgets) -> Out {
    let pv = p.p.expect("validated");
    let bx = lattice_guard(s, pv, b)?;
    let grid = alpha_grid(p.resolution.expect("validated"), &s.block_sizes(), b.grid)?;
    let ev = SumEvaluator::new(s, bx, &SumOptions { lattice_budget: b.lattice })?;
    let values: Vec<Complex64> = grid.par_iter().map(|a| ev.eval(a)).collect::<Result<_, _>>()?;
    let arcs = match p.c {
        Some(c) if s.r(1) > 0 => Some(
            grid.par_iter()
                .map(|a| arc_membership_linear(a.block(1), c, pv, b.q))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        _ => None,
    };
    let mut header = alpha_header(s);
    header.extend(["re", "im", "abs"].map(String::from));
    if arcs.is_some() {
        header.extend(["major", "q"].map(String::from));
    }
    let mut best = (0usize, -1.0f64);
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(i, (a, v))| {
            if v.norm() > best.1 {
                best = (i, v.norm());
            }
            let mut row: Vec<String> = a.entries().map(|x| fmt_real(x.to_f64().unwrap_or(f64::NAN))).collect();
            row.extend([fmt_real(v.re), fmt_real(v.im), fmt_real(v.norm())]);
            if let Some(arcs) = &arcs {
                row.push(arcs[i].major.to_string());
                row.push(arcs[i].witness.as_ref().map(|w| w.1.to_string()).unwrap_or_default());
            }
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv = csv_bytes(&header, rows)?;
    let argmax: Vec<String> = grid[best.0].entries().map(ToString::to_string).collect();
    let mut summary = json!({
        "points": grid.len(),
        "max_abs": best.1,
        "argmax_alpha": argmax,
        "trivial_bound": bx.lattice_size().to_string(),
    });
    if let Some(arcs) = &arcs {
        summary["major_count"] = json!(arcs.iter().filter(|a| a.major).count());
    }
    Ok(Report::new(csv, summary))
}

fn series_csv(series: &CountSeries) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    series.write_csv(&mut buf).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(buf)
}

fn count_variety(s: &GradedSystem, p: &Params, b: &Budgets) -> Out {
    let ell = p.ell.expect("validated");
    let series = CountSeries::collect(s, ell, &p.r0, b.count)?;
    let counts: Vec<Value> = series.samples.iter().map(|&(r, z)| json!({ "R0": r, "z": z })).collect();
    Ok(Report::new(series_csv(&series)?, json!({ "ell": ell, "counts": counts })))
}

struct Measured {
    series: CountSeries,
    g_hat: f64,
    stderr: f64,
    exponent_fit: f64,
    zero_flagged: Vec<u64>,
    gamma: XRat,
}

fn measure(s: &GradedSystem, ell: usize, radii: &[u64], b: &Budgets) -> Result<Measured, Error> {
    let series = CountSeries::collect(s, ell, radii, b.count)?;
    let est = estimate_g(&series, s.n(), ell)?;
    let gamma = gamma_ell(est.g_hat, ell, s.r(ell))?;
    Ok(Measured {
        series,
        g_hat: est.g_hat,
        stderr: est.stderr,
        exponent_fit: est.exponent_fit,
        zero_flagged: est.zero_flagged,
        gamma,
    })
}

fn estimate(s: &GradedSystem, p: &Params, b: &Budgets) -> Out {
    let ell = p.ell.expect("validated");
    let m = measure(s, ell, &p.r0, b)?;
    let gp = gamma_prime(&m.gamma, ell, s.r(ell))?;
    let mut rep = Report::new(
        series_csv(&m.series)?,
        json!({
            "ell": ell,
            "g_hat": m.g_hat,
            "stderr": m.stderr,
            "exponent_fit": m.exponent_fit,
            "zero_flagged": m.zero_flagged,
            "gamma": m.gamma,
            "gamma_prime": gp,
        }),
    );
    if !m.zero_flagged.is_empty() {
        rep.warnings.push(format!("zero counts at R0 = {:?} were replaced by 1 in the fit", m.zero_flagged));
    }
    Ok(rep)
}

fn compute_b1(s: &GradedSystem) -> Out {
    let block = LinearBlock::from_system(s);
    let value = b1(&block)?;
    let mut rows = Vec::new();
    if block.r() > 0 {
        for j in 1..=block.n() {
            let restricted = b1(&restrict(&block, j)?)?;
            rows.push(vec![j.to_string(), restricted.to_string(), restriction_gap(&block, j)?.to_string()]);
        }
    }
    let csv = csv_bytes(&["j", "b1_restricted", "gap"], rows)?;
    Ok(Report::new(csv, json!({ "b1": value, "r1": block.r(), "n": block.n() })))
}

/// `γ_ℓ` for `ℓ = 2..=d`: overrides first, zero for empty blocks, otherwise
/// measured from variety counts at `r0`.
fn gammas(
    s: &GradedSystem,
    p: &Params,
    b: &Budgets,
) -> Result<Vec<(usize, XRat, Option<Measured>)>, Error> {
    let mut out = Vec::new();
    for ell in 2..=s.d() {
        if let Some(g) = p.gamma.get(&ell) {
            out.push((ell, g.clone(), None));
        } else if s.r(ell) == 0 {
            out.push((ell, XRat::zero(), None));
        } else {
            let m = measure(s, ell, &p.r0, b)?;
            out.push((ell, m.gamma.clone(), Some(m)));
        }
    }
    Ok(out)
}

fn thresholds(s: &GradedSystem, p: &Params, b: &Budgets) -> Out {
    let gs = gammas(s, p, b)?;
    let values: Vec<XRat> = gs.iter().map(|g| g.1.clone()).collect();
    let observed = b1(&LinearBlock::from_system(s))?;
    let report = threshold_report(&values, s.r(1), s.total_r(), observed);
    let mut rows = Vec::new();
    for (ell, g, m) in &gs {
        let gp = if s.r(*ell) > 0 { gamma_prime(g, *ell, s.r(*ell))?.to_string() } else { String::new() };
        rows.push(vec![
            ell.to_string(),
            s.r(*ell).to_string(),
            m.as_ref().map(|m| fmt_real(m.g_hat)).unwrap_or_default(),
            g.to_string(),
            gp,
        ]);
    }
    let csv = csv_bytes(&["ell", "r_ell", "g_hat", "gamma", "gamma_prime"], rows)?;
    let mut rep = Report::new(csv, serde_json::to_value(&report).map_err(|e| Error::InvalidInput(e.to_string()))?);
    if !report.feasible {
        rep.warnings.push("the measured invariants do not meet the thresholds".into());
    }
    Ok(rep)
}

fn dichotomy(s: &GradedSystem, p: &Params, b: &Budgets) -> Out {
    let pv = p.p.expect("validated");
    lattice_guard(s, pv, b)?;
    let grid = alpha_grid(p.resolution.expect("validated"), &s.block_sizes(), b.grid)?;
    let complete = (2..=s.d()).all(|l| s.r(l) == 0 || p.gamma.contains_key(&l));
    let sup = if complete {
        let gs = gammas(s, p, b)?;
        let values: Vec<XRat> = gs.into_iter().map(|g| g.1).collect();
        Some(omega_sup(&circlesum::thresholds::gamma_sum(&values), s.r(1), s.total_r()))
    } else {
        None
    };
    let opts = DichotomyOptions {
        slack: p.slack.unwrap_or(1.0),
        lattice_budget: b.lattice,
        q_budget: b.q,
        omega_sup: sup.clone(),
    };
    let (delta, omega) = (p.delta.expect("validated"), p.omega.expect("validated"));
    let run = verify_dichotomy(s, pv, delta, omega, &grid, &opts)?;
    let mut csv = Vec::new();
    run.write_csv(&s.block_sizes(), &mut csv).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let violations: Vec<Vec<String>> =
        run.violations.iter().map(|&i| grid[i].entries().map(ToString::to_string).collect()).collect();
    let bound = opts.slack * pv.powf(s.n() as f64 - delta * omega);
    let mut rep = Report::new(
        csv,
        json!({
            "points": grid.len(),
            "counts": run.counts,
            "violations": violations,
            "P": pv,
            "delta": delta,
            "omega": omega,
            "omega_sup": sup,
            "slack": run.slack,
            "bound_I": bound,
        }),
    );
    rep.warnings = run.warnings;
    if sup.is_none() {
        rep.warnings.push("no gamma values given; admissibility of omega was not checked".into());
    }
    rep.budget_exhausted = run.counts.errors > 0;
    Ok(rep)
}

fn singular(s: &GradedSystem, p: &Params, b: &Budgets) -> Out {
    let tol = p.tol.unwrap_or(1e-8);
    let mut opts = IntegralOptions { evaluation_budget: b.evaluations, ..IntegralOptions::default() };
    if let Some(o) = p.order {
        opts.order = o;
    }
    if let Some(f) = p.factorize {
        opts.factorize = f;
    }
    if let Some(tau) = &p.tau {
        let v = eval_i(s, tau, tol, &opts)?;
        let csv = csv_bytes(
            &["re", "im", "abs", "err_estimate", "converged", "evaluations"],
            [vec![
                fmt_real(v.value.re),
                fmt_real(v.value.im),
                fmt_real(v.value.norm()),
                fmt_real(v.err_estimate),
                v.converged.to_string(),
                v.evaluations.to_string(),
            ]],
        )?;
        let mut rep = Report::new(
            csv,
            json!({
                "value": fmt_complex(v.value),
                "abs": v.value.norm(),
                "err_estimate": v.err_estimate,
                "converged": v.converged,
                "evaluations": v.evaluations,
            }),
        );
        if !v.converged {
            rep.budget_exhausted = true;
            rep.warnings.push(format!("tolerance {tol} not reached within the evaluation budget"));
        }
        return Ok(rep);
    }
    let dir = p.direction.as_ref().expect("validated");
    let fit = decay_exponent(s, dir, &p.t_values, tol, &opts)?;
    let mut csv = Vec::new();
    fit.write_csv(&mut csv).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let unconverged: Vec<f64> = fit.rows.iter().filter(|r| !r.converged).map(|r| r.t).collect();
    let flagged: Vec<f64> = fit.rows.iter().filter(|r| r.zero_flagged).map(|r| r.t).collect();
    let mut rep = Report::new(
        csv,
        json!({
            "exponent": fit.exponent,
            "stderr": fit.stderr,
            "C": fit.c,
            "R": fit.big_r,
            "envelope_holds": fit.envelope_holds(),
            "zero_flagged_t": flagged,
            "unconverged_t": unconverged,
        }),
    );
    if !unconverged.is_empty() {
        rep.budget_exhausted = true;
        rep.warnings.push(format!("{} values of t did not reach tolerance {tol}", unconverged.len()));
    }
    Ok(rep)
}

fn partial_summation(p: &Params) -> Out {
    let field: Box<dyn SmoothField> = match &p.field {
        Some(poly) => Box::new(PolynomialField::new(poly)),
        None => Box::new(ExpLinearField::phase(&p.field_freqs)),
    };
    let side: Vec<usize> = p.bounds.iter().map(|&b| b as usize + 1).collect();
    let total: usize = side.iter().product();
    let table: Vec<Complex64> = match p.rho.unwrap_or(Rho::Ones) {
        Rho::Random => {
            let mut g = ChaCha8Rng::seed_from_u64(p.seed);
            (0..total).map(|_| Complex64::new(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0))).collect()
        }
        Rho::Ones => vec![Complex64::new(1.0, 0.0); total],
        Rho::Alternating => (0..total)
            .map(|mut idx| {
                let mut parity = 0;
                for &sd in side.iter().rev() {
                    parity += idx % sd;
                    idx /= sd;
                }
                Complex64::new(if parity % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            })
            .collect(),
    };
    let rho = |x: &[i64]| {
        let idx = x.iter().zip(&side).fold(0usize, |acc, (&xi, &sd)| acc * sd + xi as usize);
        table[idx]
    };
    let r = partial_summation_residual(field.as_ref(), &rho, &p.bounds, &PartialSummationOptions::default())?;
    let csv = csv_bytes(
        &["lhs_re", "lhs_im", "rhs_re", "rhs_im", "residual"],
        [vec![fmt_real(r.lhs.re), fmt_real(r.lhs.im), fmt_real(r.rhs.re), fmt_real(r.rhs.im), fmt_real(r.residual)]],
    )?;
    Ok(Report::new(
        csv,
        json!({ "lhs": fmt_complex(r.lhs), "rhs": fmt_complex(r.rhs), "residual": r.residual }),
    ))
}
