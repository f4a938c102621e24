//! Experiment configuration: a TOML file with `[system]`, `[params]`,
//! `[budgets]` and `[output]` sections.
//!
//! ```toml
//! command = "eval-sum"
//!
//! [system]
//! n = 2
//! [system.blocks]
//! 2 = ["x1^2 + x2^2"]
//!
//! [params]
//! P = 3
//! alpha = { 2 = ["1/3"] }
//! ```

use circlesum::expsum::AlphaVector;
use circlesum::singint::TauVector;
use circlesum::{GradedSystem, Polynomial, XRat};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::str::FromStr;
use toml::{Spanned, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    EvalSum,
    ScanAlpha,
    CountVariety,
    EstimateG,
    ComputeB1,
    Thresholds,
    VerifyDichotomy,
    SingularIntegral,
    PartialSummationCheck,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::EvalSum,
        Command::ScanAlpha,
        Command::CountVariety,
        Command::EstimateG,
        Command::ComputeB1,
        Command::Thresholds,
        Command::VerifyDichotomy,
        Command::SingularIntegral,
        Command::PartialSummationCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::EvalSum => "eval-sum",
            Command::ScanAlpha => "scan-alpha",
            Command::CountVariety => "count-variety",
            Command::EstimateG => "estimate-g",
            Command::ComputeB1 => "compute-b1",
            Command::Thresholds => "thresholds",
            Command::VerifyDichotomy => "verify-dichotomy",
            Command::SingularIntegral => "singular-integral",
            Command::PartialSummationCheck => "partial-summation-check",
        }
    }

    /// Parameter keys the command accepts, and which of them are required.
    fn keys(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Command::EvalSum => (&["p", "alpha"], &["p", "alpha"]),
            Command::ScanAlpha => (&["p", "resolution", "c"], &["p", "resolution"]),
            Command::CountVariety => (&["ell", "r0"], &["ell", "r0"]),
            Command::EstimateG => (&["ell", "r0"], &["ell", "r0"]),
            Command::ComputeB1 => (&[], &[]),
            Command::Thresholds => (&["r0", "gamma"], &[]),
            Command::VerifyDichotomy => {
                (&["p", "delta", "omega", "resolution", "slack", "gamma"], &["p", "delta", "omega", "resolution"])
            }
            Command::SingularIntegral => (&["tau", "direction", "t_values", "tol", "order", "factorize"], &[]),
            Command::PartialSummationCheck => (&["bounds", "field", "field_freqs", "rho", "seed"], &["bounds"]),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
            format!("unknown command `{s}`; expected one of {}", names.join(", "))
        })
    }
}

/// A validation message, with the 1-based config line when one applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: Option<usize>, message: impl Into<String>) -> Self {
        Diagnostic { line, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    /// Lattice points per exponential sum.
    pub lattice: u128,
    /// Largest denominator `q` scanned.
    pub q: u64,
    /// Tuples enumerated per variety count.
    pub count: u128,
    /// Integrand evaluations per singular-integral factor.
    pub evaluations: u64,
    /// Points of an `α` grid.
    pub grid: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            lattice: 100_000_000,
            q: circlesum::dioph::DEFAULT_Q_BUDGET,
            count: circlesum::variety::DEFAULT_COUNT_BUDGET,
            evaluations: circlesum::singint::DEFAULT_EVALUATION_BUDGET,
            grid: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rho {
    Ones,
    Alternating,
    Random,
}

#[derive(Debug, Clone, Default)]
pub struct Params {
    pub p: Option<f64>,
    pub delta: Option<f64>,
    pub omega: Option<f64>,
    pub c: Option<f64>,
    pub r0: Vec<u64>,
    pub ell: Option<usize>,
    pub resolution: Option<u64>,
    pub tol: Option<f64>,
    pub slack: Option<f64>,
    pub order: Option<usize>,
    pub factorize: Option<bool>,
    pub alpha: Option<AlphaVector>,
    pub tau: Option<TauVector>,
    pub direction: Option<TauVector>,
    pub t_values: Vec<f64>,
    /// `γ_ℓ` supplied directly instead of measured.
    pub gamma: BTreeMap<usize, XRat>,
    pub bounds: Vec<u64>,
    pub field: Option<Polynomial>,
    pub field_freqs: Vec<f64>,
    pub rho: Option<Rho>,
    pub seed: u64,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub system: GradedSystem,
    pub params: Params,
    pub budgets: Budgets,
    pub prefix: Option<PathBuf>,
    /// The whole document, echoed into the run manifest.
    pub echo: serde_json::Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<Spanned<String>>,
    system: RawSystem,
    #[serde(default)]
    params: BTreeMap<String, Spanned<Value>>,
    #[serde(default)]
    budgets: BTreeMap<String, Spanned<Value>>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n: Spanned<i64>,
    #[serde(default)]
    blocks: BTreeMap<String, Spanned<Vec<Spanned<String>>>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    prefix: Option<String>,
}

struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].matches('\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, msg: impl Into<String>) -> Result<T, Diagnostic> {
        Err(Diagnostic::new(Some(self.line(span)), msg))
    }
}

impl ExperimentConfig {
    /// Parses and validates a config. `command` (from the command line)
    /// must agree with the file's `command` key when both are present.
    pub fn parse(text: &str, command: Option<&str>) -> Result<Self, Diagnostic> {
        let src = Source { text };
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            Diagnostic::new(e.span().map(|s| src.line(s)), e.message().trim().to_string())
        })?;
        let echo_value: Value = toml::from_str(text).map_err(|e| Diagnostic::new(None, e.message().to_string()))?;
        let echo = serde_json::to_value(&echo_value).map_err(|e| Diagnostic::new(None, e.to_string()))?;

        let command = match (command, &raw.command) {
            (Some(c), Some(f)) if c != f.get_ref() => {
                return src.err(
                    f.span(),
                    format!("config is for `{}` but the command line asks for `{c}`", f.get_ref()),
                )
            }
            (Some(c), _) => c.parse().map_err(|m| Diagnostic::new(None, m))?,
            (None, Some(f)) => f.get_ref().parse().or_else(|m| src.err(f.span(), m))?,
            (None, None) => return Err(Diagnostic::new(None, "no command given")),
        };

        let system = parse_system(&src, &raw.system)?;
        let budgets = parse_budgets(&src, &raw.budgets)?;
        let params = parse_params(&src, command, &system, &raw.params)?;
        Ok(ExperimentConfig { command, system, params, budgets, prefix: raw.output.prefix.map(PathBuf::from), echo })
    }
}

fn parse_system(src: &Source, raw: &RawSystem) -> Result<GradedSystem, Diagnostic> {
    let n = *raw.n.get_ref();
    if !(1..=64).contains(&n) {
        return src.err(raw.n.span(), format!("n must lie in 1..=64, got {n}"));
    }
    let n = n as usize;
    let mut blocks: Vec<Vec<Polynomial>> = Vec::new();
    let mut spans: Vec<Vec<Range<usize>>> = Vec::new();
    for (key, list) in &raw.blocks {
        let ell: usize = match key.parse() {
            Ok(l) if (1..=32).contains(&l) => l,
            _ => return src.err(list.span(), format!("block key `{key}` is not a degree in 1..=32")),
        };
        if blocks.len() < ell {
            blocks.resize(ell, Vec::new());
            spans.resize(ell, Vec::new());
        }
        for text in list.get_ref() {
            let p = Polynomial::parse(text.get_ref(), n).or_else(|e| src.err(text.span(), e.to_string()))?;
            blocks[ell - 1].push(p);
            spans[ell - 1].push(text.span());
        }
    }
    while blocks.last().is_some_and(Vec::is_empty) {
        blocks.pop();
    }
    let system = GradedSystem::new(n, blocks);
    if let Some(v) = system.validate().first() {
        return src.err(spans[v.ell - 1][v.r - 1].clone(), v.to_string());
    }
    Ok(system)
}

fn parse_budgets(src: &Source, raw: &BTreeMap<String, Spanned<Value>>) -> Result<Budgets, Diagnostic> {
    let mut b = Budgets::default();
    for (key, v) in raw {
        let x = as_u64(src, key, v)?;
        if x == 0 {
            return src.err(v.span(), format!("budget `{key}` must be positive"));
        }
        match key.as_str() {
            "lattice" => b.lattice = x.into(),
            "q" => b.q = x,
            "count" => b.count = x.into(),
            "evaluations" => b.evaluations = x,
            "grid" => b.grid = x,
            _ => {
                return src.err(
                    v.span(),
                    format!("unknown budget `{key}`; expected lattice, q, count, evaluations or grid"),
                )
            }
        }
    }
    Ok(b)
}

fn canonical_key(key: &str) -> &str {
    match key {
        "P" => "p",
        "C" => "c",
        "R0" => "r0",
        other => other,
    }
}

fn parse_params(
    src: &Source,
    command: Command,
    system: &GradedSystem,
    raw: &BTreeMap<String, Spanned<Value>>,
) -> Result<Params, Diagnostic> {
    let (allowed, required) = command.keys();
    let mut seen: BTreeMap<&str, Range<usize>> = BTreeMap::new();
    let mut p = Params::default();
    for (key, v) in raw {
        let k = canonical_key(key);
        if let Some(_prev) = seen.insert(k, v.span()) {
            return src.err(v.span(), format!("parameter `{key}` given twice"));
        }
        if k != "workers" && !allowed.contains(&k) {
            return src.err(v.span(), format!("parameter `{key}` is not used by {command}"));
        }
        let sp = v.span();
        match k {
            "p" => p.p = Some(positive(src, key, v)?),
            "delta" => p.delta = Some(positive(src, key, v)?),
            "omega" => p.omega = Some(positive(src, key, v)?),
            "c" => p.c = Some(positive(src, key, v)?),
            "tol" => p.tol = Some(positive(src, key, v)?),
            "slack" => p.slack = Some(positive(src, key, v)?),
            "ell" => p.ell = Some(as_u64(src, key, v)? as usize),
            "resolution" => p.resolution = Some(as_u64(src, key, v)?),
            "order" => p.order = Some(as_u64(src, key, v)? as usize),
            "seed" => p.seed = as_u64(src, key, v)?,
            "workers" => p.workers = Some(as_u64(src, key, v)? as usize),
            "factorize" => match v.get_ref() {
                Value::Boolean(b) => p.factorize = Some(*b),
                _ => return src.err(sp, "`factorize` must be true or false"),
            },
            "r0" => p.r0 = list(src, key, v)?.iter().map(|x| value_u64(x)).collect::<Option<_>>().map_or_else(
                || src.err(sp.clone(), format!("`{key}` must be a list of non-negative integers")),
                Ok,
            )?,
            "bounds" => p.bounds = list(src, key, v)?.iter().map(|x| value_u64(x)).collect::<Option<_>>().map_or_else(
                || src.err(sp.clone(), format!("`{key}` must be a list of non-negative integers")),
                Ok,
            )?,
            "t_values" | "field_freqs" => {
                let xs: Vec<f64> = list(src, key, v)?
                    .iter()
                    .map(value_f64)
                    .collect::<Option<_>>()
                    .map_or_else(|| src.err(sp.clone(), format!("`{key}` must be a list of numbers")), Ok)?;
                if k == "t_values" {
                    p.t_values = xs;
                } else {
                    p.field_freqs = xs;
                }
            }
            "alpha" => {
                let blocks = block_map(src, key, v, system, |x| value_rational(x))?;
                p.alpha = Some(AlphaVector::new(blocks));
            }
            "tau" | "direction" => {
                let blocks = block_map(src, key, v, system, value_f64)?;
                let t = Some(TauVector::new(blocks));
                if k == "tau" {
                    p.tau = t;
                } else {
                    p.direction = t;
                }
            }
            "gamma" => {
                let Value::Table(t) = v.get_ref() else {
                    return src.err(sp, "`gamma` must be a table from degree to value");
                };
                for (deg, g) in t {
                    let ell: usize = match deg.parse() {
                        Ok(l) if l >= 2 && l <= system.d().max(2) => l,
                        _ => return src.err(sp, format!("`gamma` key `{deg}` is not a degree in 2..={}", system.d())),
                    };
                    let x = value_xrat(g)
                        .map_or_else(|| src.err(sp.clone(), format!("`gamma.{deg}` must be a non-negative rational or \"inf\"")), Ok)?;
                    p.gamma.insert(ell, x);
                }
            }
            "field" => match v.get_ref() {
                Value::String(s) => {
                    p.field = Some(Polynomial::parse(s, system.n()).or_else(|e| src.err(sp, e.to_string()))?)
                }
                _ => return src.err(sp, "`field` must be a polynomial string"),
            },
            "rho" => {
                p.rho = Some(match v.get_ref().as_str() {
                    Some("ones") => Rho::Ones,
                    Some("alternating") => Rho::Alternating,
                    Some("random") => Rho::Random,
                    _ => return src.err(sp, "`rho` must be \"ones\", \"alternating\" or \"random\""),
                })
            }
            _ => unreachable!("key filtered above"),
        }
    }
    for key in required {
        if !seen.contains_key(key) {
            return Err(Diagnostic::new(None, format!("{command} requires parameter `{key}`")));
        }
    }
    check_combinations(src, command, system, &p, &seen)?;
    Ok(p)
}

fn check_combinations(
    src: &Source,
    command: Command,
    system: &GradedSystem,
    p: &Params,
    seen: &BTreeMap<&str, Range<usize>>,
) -> Result<(), Diagnostic> {
    let at = |k: &str| seen.get(k).cloned().unwrap_or(0..0);
    if let Some(d) = p.delta {
        if d > 1.0 {
            return src.err(at("delta"), format!("delta must lie in (0, 1], got {d}"));
        }
    }
    if p.resolution == Some(0) {
        return src.err(at("resolution"), "resolution must be at least 1");
    }
    if p.workers == Some(0) {
        return src.err(at("workers"), "workers must be at least 1");
    }
    if let Some(ell) = p.ell {
        if ell < 2 || ell > system.d() || system.r(ell) == 0 {
            return src.err(at("ell"), format!("ell = {ell} does not name a non-empty block of degree at least 2"));
        }
    }
    match command {
        Command::CountVariety | Command::EstimateG => {
            if p.r0.is_empty() || p.r0.windows(2).any(|w| w[0] >= w[1]) || p.r0[0] == 0 {
                return src.err(at("r0"), "r0 must be a non-empty, strictly increasing list of positive radii");
            }
            if command == Command::EstimateG && p.r0.len() < 3 {
                return src.err(at("r0"), "estimate-g needs at least 3 radii");
            }
        }
        Command::Thresholds => {
            let unmeasured = (2..=system.d()).any(|l| system.r(l) > 0 && !p.gamma.contains_key(&l));
            if unmeasured && p.r0.len() < 3 {
                return Err(Diagnostic::new(
                    None,
                    "thresholds needs `gamma` for every non-empty block of degree at least 2, or at least 3 radii in `r0`",
                ));
            }
            if !p.r0.is_empty() && (p.r0.windows(2).any(|w| w[0] >= w[1]) || p.r0[0] == 0) {
                return src.err(at("r0"), "r0 must be strictly increasing positive radii");
            }
        }
        Command::SingularIntegral => match (&p.tau, &p.direction) {
            (Some(_), None) => {
                if !p.t_values.is_empty() {
                    return src.err(at("t_values"), "`t_values` goes with `direction`, not `tau`");
                }
            }
            (None, Some(_)) => {
                if p.t_values.is_empty() {
                    return Err(Diagnostic::new(None, "`direction` needs `t_values`"));
                }
            }
            _ => return Err(Diagnostic::new(None, "singular-integral needs exactly one of `tau` or `direction`")),
        },
        Command::PartialSummationCheck => {
            if p.bounds.len() != system.n() {
                return src.err(
                    at("bounds"),
                    format!("`bounds` has {} entries, system has n = {}", p.bounds.len(), system.n()),
                );
            }
            match (&p.field, p.field_freqs.is_empty()) {
                (Some(_), true) => {}
                (None, false) if p.field_freqs.len() == system.n() => {}
                (None, false) => {
                    return src.err(at("field_freqs"), format!("`field_freqs` needs {} entries", system.n()))
                }
                _ => return Err(Diagnostic::new(None, "give exactly one of `field` or `field_freqs`")),
            }
        }
        Command::ComputeB1 => {
            if system.n() > circlesum::linforms::MAX_VARIABLES {
                return Err(Diagnostic::new(
                    None,
                    format!("compute-b1 supports n ≤ {}", circlesum::linforms::MAX_VARIABLES),
                ));
            }
        }
        _ => {}
    }
    Ok(())
}

fn list<'v>(src: &Source, key: &str, v: &'v Spanned<Value>) -> Result<&'v Vec<Value>, Diagnostic> {
    match v.get_ref() {
        Value::Array(a) => Ok(a),
        _ => src.err(v.span(), format!("`{key}` must be a list")),
    }
}

fn positive(src: &Source, key: &str, v: &Spanned<Value>) -> Result<f64, Diagnostic> {
    match value_f64(v.get_ref()) {
        Some(x) if x > 0.0 => Ok(x),
        _ => src.err(v.span(), format!("`{key}` must be a positive number")),
    }
}

fn as_u64(src: &Source, key: &str, v: &Spanned<Value>) -> Result<u64, Diagnostic> {
    value_u64(v.get_ref()).map_or_else(|| src.err(v.span(), format!("`{key}` must be a non-negative integer")), Ok)
}

/// Per-degree table `{ "ℓ" = [..] }` matching the block shape of the system.
fn block_map<T>(
    src: &Source,
    key: &str,
    v: &Spanned<Value>,
    system: &GradedSystem,
    conv: impl Fn(&Value) -> Option<T>,
) -> Result<Vec<Vec<T>>, Diagnostic> {
    let sp = v.span();
    let Value::Table(t) = v.get_ref() else {
        return src.err(sp, format!("`{key}` must be a table from degree to a list of entries"));
    };
    let mut out: Vec<Vec<T>> = (0..system.d()).map(|_| Vec::new()).collect();
    for (deg, entries) in t {
        let ell = match deg.parse::<usize>() {
            Ok(l) if (1..=system.d()).contains(&l) => l,
            _ => return src.err(sp, format!("`{key}` has key `{deg}`, but the system has degrees 1..={}", system.d())),
        };
        let Value::Array(a) = entries else {
            return src.err(sp, format!("`{key}.{deg}` must be a list"));
        };
        for x in a {
            match conv(x) {
                Some(y) => out[ell - 1].push(y),
                None => return src.err(sp, format!("`{key}.{deg}` has an unreadable entry {x}")),
            }
        }
    }
    for (i, b) in out.iter().enumerate() {
        if b.len() != system.r(i + 1) {
            return src.err(
                sp,
                format!("shape mismatch: `{key}` block {} has {} entries, system has {}", i + 1, b.len(), system.r(i + 1)),
            );
        }
    }
    Ok(out)
}

fn value_u64(v: &Value) -> Option<u64> {
    match v {
        Value::Integer(i) => u64::try_from(*i).ok(),
        Value::Float(x) if x.fract() == 0.0 && *x >= 0.0 && *x < 1.8e19 => Some(*x as u64),
        _ => None,
    }
}

fn value_f64(v: &Value) -> Option<f64> {
    let x = match v {
        Value::Integer(i) => *i as f64,
        Value::Float(x) => *x,
        Value::String(s) => parse_rational(s)?.to_f64()?,
        _ => return None,
    };
    x.is_finite().then_some(x)
}

fn value_rational(v: &Value) -> Option<BigRational> {
    match v {
        Value::Integer(i) => Some(BigRational::from_integer((*i).into())),
        Value::Float(x) if x.is_finite() => parse_rational(&x.to_string()),
        Value::String(s) => parse_rational(s),
        _ => None,
    }
}

fn value_xrat(v: &Value) -> Option<XRat> {
    if v.as_str().is_some_and(|s| s.trim() == "inf") {
        return Some(XRat::Infinite);
    }
    let r = value_rational(v)?;
    (r >= BigRational::zero()).then_some(XRat::Finite(r))
}

/// Reads `a/b` or a decimal literal (`0.125`, `-3`, `2.5e-3`) exactly.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        return (!b.is_zero()).then(|| BigRational::new(a, b));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if (int.is_empty() && frac.is_empty()) || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let scale = exp.checked_sub(i32::try_from(frac.len()).ok()?)?;
    if scale.abs() > 4096 {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let pow = BigRational::from_integer(num_traits::pow(BigInt::from(10), scale.unsigned_abs() as usize));
    let r = BigRational::from_integer(digits);
    let r = if scale >= 0 { r * pow } else { r / pow };
    Some(if neg { -r } else { r })
}
