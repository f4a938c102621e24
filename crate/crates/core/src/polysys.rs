//! Integer-coefficient multivariate polynomials and graded systems
//! `u = (u_d, …, u_1)` together with their homogeneous top parts `U`.

mod text;

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponent vector ordered graded-lexicographically: total degree first,
/// then lexicographically with `x1 > x2 > …`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Exponents(Vec<u32>);

impl Exponents {
    pub fn new(exps: Vec<u32>) -> Self {
        Exponents(exps)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Exponents {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A single term `coefficient · x^exponents` with nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coefficient: BigInt,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Sparse polynomial in `n` variables with integer coefficients.
///
/// Terms are kept in a `BTreeMap` keyed by graded-lex exponents, so equality
/// and iteration order are canonical. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Exponents, BigInt>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: impl Into<BigInt>) -> Self {
        let mut p = Polynomial::zero(n);
        p.add_term(vec![0; n], c.into());
        p
    }

    /// The variable `x_{i+1}` (0-based index `i`).
    pub fn var(n: usize, i: usize) -> Self {
        assert!(i < n, "variable index {i} out of range for {n} variables");
        let mut e = vec![0; n];
        e[i] = 1;
        let mut p = Polynomial::zero(n);
        p.add_term(e, BigInt::one());
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging
    /// repeated exponents and dropping zero coefficients.
    pub fn from_terms<I, C>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, C)>,
        C: Into<BigInt>,
    {
        let mut p = Polynomial::zero(n);
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: e.len() });
            }
            p.add_term(e, c.into());
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(Exponents(e)) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in descending graded-lex order (leading term first).
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&[u32], &BigInt)> + '_ {
        self.terms.iter().rev().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms()
            .map(|(e, c)| Monomial { exponents: e.to_vec(), coefficient: c.clone() })
            .collect()
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Exponents::degree)
    }

    pub fn coefficient(&self, exps: &[u32]) -> BigInt {
        self.terms
            .get(&Exponents(exps.to_vec()))
            .cloned()
            .unwrap_or_default()
    }

    /// The sum of the terms of total degree exactly `ell`.
    pub fn degree_part(&self, ell: u32) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.degree() == ell)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Exponents::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.n {
            Err(Error::DimensionMismatch { expected: self.n, got: len })
        } else {
            Ok(())
        }
    }

    /// Exact value at an integer point.
    pub fn evaluate(&self, x: &[BigInt]) -> Result<BigInt> {
        self.check_point(x.len())?;
        let mut total = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e.as_slice()) {
                if k > 0 {
                    t *= xi.pow(k);
                }
            }
            total += t;
        }
        Ok(total)
    }

    pub fn evaluate_i64(&self, x: &[i64]) -> Result<BigInt> {
        self.check_point(x.len())?;
        if let Some(v) = self.compile().and_then(|c| c.eval_i128(x)) {
            return Ok(BigInt::from(v));
        }
        let big: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        self.evaluate(&big)
    }

    /// Floating-point value at a real point (for quadrature integrands).
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = c.to_f64().unwrap_or(f64::NAN);
                for (xi, &k) in x.iter().zip(e.as_slice()) {
                    if k > 0 {
                        t *= xi.powi(k as i32);
                    }
                }
                t
            })
            .sum()
    }

    /// Partial derivative with respect to `x_{i+1}`.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (e, c) in &self.terms {
            let k = e.0[i];
            if k > 0 {
                let mut ne = e.0.clone();
                ne[i] -= 1;
                out.add_term(ne, c * BigInt::from(k));
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.n, 1);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes `x_{k+1} ↦ images[k]`; all images must share one variable count.
    pub fn compose(&self, images: &[Polynomial]) -> Result<Polynomial> {
        self.check_point(images.len())?;
        let m = images.first().map(Polynomial::n).unwrap_or(0);
        if let Some(bad) = images.iter().find(|p| p.n != m) {
            return Err(Error::DimensionMismatch { expected: m, got: bad.n });
        }
        let mut powers: Vec<Vec<Polynomial>> = images
            .iter()
            .map(|p| vec![Polynomial::constant(m, 1), p.clone()])
            .collect();
        let mut out = Polynomial::zero(m);
        for (e, c) in &self.terms {
            let mut t = Polynomial::constant(m, c.clone());
            for (k, &ek) in e.as_slice().iter().enumerate() {
                if ek == 0 {
                    continue;
                }
                while powers[k].len() <= ek as usize {
                    let next = &powers[k][powers[k].len() - 1] * &images[k];
                    powers[k].push(next);
                }
                t = &t * &powers[k][ek as usize];
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Integer-arithmetic form for fast evaluation, when every coefficient fits in `i128`.
    pub fn compile(&self) -> Option<CompiledPoly> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (e, c) in &self.terms {
            terms.push((c.to_i128()?, e.0.clone()));
        }
        let max_exp = self
            .terms
            .keys()
            .flat_map(|e| e.0.iter().copied())
            .max()
            .unwrap_or(0);
        Some(CompiledPoly { n: self.n, max_exp, terms })
    }
}

/// Checked `i128` evaluator for a polynomial; overflow yields `None`.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    n: usize,
    max_exp: u32,
    terms: Vec<(i128, Vec<u32>)>,
}

impl CompiledPoly {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn eval_i128(&self, x: &[i64]) -> Option<i128> {
        debug_assert_eq!(x.len(), self.n);
        let mut total: i128 = 0;
        for (c, e) in &self.terms {
            let mut t = *c;
            for (&xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t = t.checked_mul((xi as i128).checked_pow(k)?)?;
                }
            }
            total = total.checked_add(t)?;
        }
        Some(total)
    }

    pub fn max_exponent(&self) -> u32 {
        self.max_exp
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "adding polynomials in different variable counts");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.0.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "multiplying polynomials in different variable counts");
        let mut out = Polynomial::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.0.iter().zip(&eb.0).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::render(self))
    }
}

impl Polynomial {
    /// Parses the text form (`3*x1^2*x2 - x3 + 7`) with `n` variables.
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        text::parse(s, n)
    }
}

/// A reason a graded system is malformed, naming the offending `(ℓ, r)` (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub ell: usize,
    pub r: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// The block entry is the zero polynomial.
    ZeroPolynomial,
    /// The degree-ℓ part vanishes or a higher-degree term is present.
    WrongDegree { found: u32 },
    /// The polynomial's variable count disagrees with the system.
    VariableCount { expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, r) = (self.ell, self.r);
        match &self.kind {
            ViolationKind::ZeroPolynomial => write!(f, "u[{l},{r}] is the zero polynomial"),
            ViolationKind::WrongDegree { found } => {
                write!(f, "u[{l},{r}] has degree {found}, expected {l}")
            }
            ViolationKind::VariableCount { expected, found } => {
                write!(f, "u[{l},{r}] uses {found} variables, system has {expected}")
            }
        }
    }
}

/// The system `u = (u_d, …, u_1)`; `blocks[ℓ-1]` holds `(u_{ℓ,1}, …, u_{ℓ,r_ℓ})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedSystem {
    n: usize,
    blocks: Vec<Vec<Polynomial>>,
}

impl GradedSystem {
    /// Stores the blocks as given; use [`GradedSystem::validate`] or
    /// [`GradedSystem::checked`] to enforce the grading.
    pub fn new(n: usize, blocks: Vec<Vec<Polynomial>>) -> Self {
        GradedSystem { n, blocks }
    }

    pub fn checked(n: usize, blocks: Vec<Vec<Polynomial>>) -> Result<Self> {
        let s = GradedSystem::new(n, blocks);
        let v = s.validate();
        if v.is_empty() {
            Ok(s)
        } else {
            let msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
            Err(Error::invalid(msgs.join("; ")))
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Maximal degree `d` (number of blocks).
    pub fn d(&self) -> usize {
        self.blocks.len()
    }

    /// `(r_1, …, r_d)`.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// `r_ℓ`, zero for `ℓ` outside `1..=d`.
    pub fn r(&self, ell: usize) -> usize {
        if ell == 0 {
            0
        } else {
            self.blocks.get(ell - 1).map_or(0, Vec::len)
        }
    }

    /// `R = r_1 + … + r_d`.
    pub fn total_r(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn block(&self, ell: usize) -> &[Polynomial] {
        if ell == 0 {
            &[]
        } else {
            self.blocks.get(ell - 1).map_or(&[], Vec::as_slice)
        }
    }

    /// The forms `U_{ℓ,r}` = degree-ℓ parts of the block `ℓ`.
    pub fn forms(&self, ell: usize) -> Vec<Polynomial> {
        self.block(ell).iter().map(|p| p.degree_part(ell as u32)).collect()
    }

    /// All polynomials in block order `ℓ = 1..d`, `r = 1..r_ℓ`, with their (ℓ, r).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Polynomial)> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.iter().enumerate().map(move |(r, p)| (i + 1, r + 1, p)))
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_system(self)
    }
}

/// Lists every grading violation of the system; empty iff well formed.
pub fn validate_system(s: &GradedSystem) -> Vec<Violation> {
    let mut out = Vec::new();
    for (ell, r, p) in s.iter() {
        if p.n() != s.n {
            out.push(Violation {
                ell,
                r,
                kind: ViolationKind::VariableCount { expected: s.n, found: p.n() },
            });
            continue;
        }
        match p.total_degree() {
            None => out.push(Violation { ell, r, kind: ViolationKind::ZeroPolynomial }),
            Some(deg) if deg as usize != ell => {
                out.push(Violation { ell, r, kind: ViolationKind::WrongDegree { found: deg } })
            }
            Some(_) => {}
        }
    }
    out
}
