//! Sparse multivariate polynomials over named variables.
//!
//! Every certificate, dynamics entry and generator expression in this crate is
//! a [`Polynomial`]. Terms are kept in a `BTreeMap` keyed by exponent vector so
//! iteration order (and therefore serialization) is deterministic.

mod boxes;
mod nonneg;
mod univariate;

pub use boxes::{Interval, IntervalBox};
pub use nonneg::{nonneg_on_box, NonnegReport, Verdict};
pub use univariate::{min_on_interval, sturm_root_count, SturmChain, UniPoly};

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sign decisions and degree decisions treat magnitudes at or below this as zero.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("variable `{0}` is not assigned a value")]
    Unassigned(String),
    #[error("variable `{0}` is not declared")]
    UnknownVariable(String),
    #[error("exponent vector has {got} entries but {expected} variables are declared")]
    ExponentLength { expected: usize, got: usize },
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("expectation needs moment of order {order} for noise `{var}`, only {available} available")]
    MissingMoment {
        var: String,
        order: usize,
        available: usize,
    },
    #[error("invalid noise moments: {0}")]
    InvalidMoments(String),
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("expected a univariate polynomial, found variables {0:?}")]
    NotUnivariate(Vec<String>),
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
}

/// Exponent vector, one entry per declared variable.
pub type Exponents = Vec<u32>;

#[derive(Clone, PartialEq)]
pub struct Polynomial {
    vars: Vec<String>,
    terms: BTreeMap<Exponents, f64>,
}

impl Polynomial {
    /// The zero polynomial over `vars`.
    pub fn zero<S: AsRef<str>>(vars: &[S]) -> Self {
        Polynomial {
            vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
            terms: BTreeMap::new(),
        }
    }

    /// A constant with no declared variables.
    pub fn constant(c: f64) -> Self {
        let mut p = Polynomial::zero::<&str>(&[]);
        p.push_term(Vec::new(), c);
        p
    }

    /// The polynomial consisting of the single variable `name`.
    pub fn var(name: &str) -> Self {
        let mut p = Polynomial::zero(&[name]);
        p.push_term(vec![1], 1.0);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; like terms are
    /// collected and zero coefficients dropped.
    pub fn from_terms<S, I>(vars: &[S], terms: I) -> Result<Self, PolyError>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (Exponents, f64)>,
    {
        let mut p = Polynomial::zero(vars);
        for (i, v) in p.vars.iter().enumerate() {
            if p.vars[..i].contains(v) {
                return Err(PolyError::DuplicateVariable(v.clone()));
            }
        }
        for (exp, c) in terms {
            if exp.len() != p.vars.len() {
                return Err(PolyError::ExponentLength {
                    expected: p.vars.len(),
                    got: exp.len(),
                });
            }
            p.push_term(exp, c);
        }
        Ok(p)
    }

    /// Dense univariate constructor, ascending coefficients.
    pub fn univariate(var: &str, coeffs: &[f64]) -> Self {
        let mut p = Polynomial::zero(&[var]);
        for (k, &c) in coeffs.iter().enumerate() {
            p.push_term(vec![k as u32], c);
        }
        p
    }

    fn push_term(&mut self, exp: Exponents, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exp);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, f64)> + '_ {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn var_index(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    /// Coefficient of the monomial with the given exponents (0 if absent).
    pub fn coefficient(&self, exp: &[u32]) -> f64 {
        self.terms.get(exp).copied().unwrap_or(0.0)
    }

    /// Coefficient of `var^k` in a polynomial whose other variables all have
    /// exponent zero.
    pub fn coefficient_of(&self, var: &str, k: u32) -> f64 {
        match self.var_index(var) {
            Some(i) => {
                let mut exp = vec![0; self.vars.len()];
                exp[i] = k;
                self.coefficient(&exp)
            }
            None if k == 0 => self.coefficient(&vec![0; self.vars.len()]),
            None => 0.0,
        }
    }

    /// The constant term.
    pub fn constant_term(&self) -> f64 {
        self.coefficient(&vec![0; self.vars.len()])
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        match self.var_index(var) {
            Some(i) => self.terms.keys().map(|e| e[i]).max().unwrap_or(0),
            None => 0,
        }
    }

    /// Variables that occur with a positive exponent in some term.
    pub fn active_vars(&self) -> Vec<String> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(i, _)| self.terms.keys().any(|e| e[*i] > 0))
            .map(|(_, v)| v.clone())
            .collect()
    }

    /// Re-expresses the polynomial over `vars`, which must contain every
    /// active variable of `self`.
    pub fn with_vars<S: AsRef<str>>(&self, vars: &[S]) -> Result<Self, PolyError> {
        let target: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let mut map = Vec::with_capacity(self.vars.len());
        for (i, v) in self.vars.iter().enumerate() {
            let pos = target.iter().position(|t| t == v);
            if pos.is_none() && self.terms.keys().any(|e| e[i] > 0) {
                return Err(PolyError::UnknownVariable(v.clone()));
            }
            map.push(pos);
        }
        let mut out = Polynomial::zero(&target);
        for (exp, &c) in &self.terms {
            let mut e = vec![0; target.len()];
            for (i, &k) in exp.iter().enumerate() {
                if let Some(j) = map[i] {
                    e[j] = k;
                }
            }
            out.push_term(e, c);
        }
        Ok(out)
    }

    fn merged_vars(&self, other: &Polynomial) -> Vec<String> {
        let mut vars = self.vars.clone();
        for v in &other.vars {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
        vars
    }

    fn aligned(&self, vars: &[String]) -> Polynomial {
        if self.vars == vars {
            return self.clone();
        }
        self.with_vars(vars)
            .expect("merged variable list covers both operands")
    }

    pub fn scale(&self, k: f64) -> Polynomial {
        let mut out = Polynomial::zero(&self.vars);
        for (e, &c) in &self.terms {
            out.push_term(e.clone(), c * k);
        }
        out
    }

    pub fn add_constant(&self, c: f64) -> Polynomial {
        let mut out = self.clone();
        out.push_term(vec![0; self.vars.len()], c);
        out
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut result = Polynomial::constant(1.0).aligned(&self.vars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Evaluates at a point given as `(name, value)` pairs. Variables that do
    /// not occur in any term need not be assigned.
    pub fn eval(&self, point: &[(&str, f64)]) -> Result<f64, PolyError> {
        let mut values = Vec::with_capacity(self.vars.len());
        for (i, v) in self.vars.iter().enumerate() {
            match point.iter().find(|(n, _)| n == v) {
                Some(&(_, x)) => values.push(x),
                None if self.terms.keys().all(|e| e[i] == 0) => values.push(0.0),
                None => return Err(PolyError::Unassigned(v.clone())),
            }
        }
        Ok(self.eval_ordered(&values))
    }

    /// Evaluates with `values[i]` bound to `self.vars()[i]`.
    pub fn eval_ordered(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.vars.len());
        self.terms
            .iter()
            .map(|(e, &c)| {
                e.iter()
                    .zip(values)
                    .fold(c, |acc, (&k, &x)| if k == 0 { acc } else { acc * x.powi(k as i32) })
            })
            .sum()
    }

    /// Formal partial derivative.
    pub fn derivative(&self, var: &str) -> Polynomial {
        let mut out = Polynomial::zero(&self.vars);
        if let Some(i) = self.var_index(var) {
            for (e, &c) in &self.terms {
                if e[i] > 0 {
                    let mut d = e.clone();
                    d[i] -= 1;
                    out.push_term(d, c * e[i] as f64);
                }
            }
        }
        out
    }

    pub fn second_derivative(&self, var1: &str, var2: &str) -> Polynomial {
        self.derivative(var1).derivative(var2)
    }

    /// Replaces `var` by `q`.
    pub fn substitute(&self, var: &str, q: &Polynomial) -> Polynomial {
        self.substitute_all(&[(var, q)])
    }

    /// Simultaneous substitution: every listed variable is replaced by its
    /// polynomial, with the replacements referring to the original variables.
    pub fn substitute_all(&self, subs: &[(&str, &Polynomial)]) -> Polynomial {
        let mut vars: Vec<String> = self
            .vars
            .iter()
            .filter(|v| !subs.iter().any(|(s, _)| s == v))
            .cloned()
            .collect();
        for (_, q) in subs {
            for v in &q.vars {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        let replaced: Vec<Option<Polynomial>> = self
            .vars
            .iter()
            .map(|v| {
                subs.iter()
                    .find(|(s, _)| s == v)
                    .map(|(_, q)| q.aligned(&vars))
            })
            .collect();
        let keep: Vec<Option<usize>> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v))
            .collect();

        // powers[i][k] = replacement_i^k, built lazily
        let mut powers: Vec<Vec<Polynomial>> = vec![Vec::new(); self.vars.len()];
        let one = Polynomial::constant(1.0).aligned(&vars);
        let mut out = Polynomial::zero(&vars);
        for (e, &c) in &self.terms {
            let mut mono = vec![0u32; vars.len()];
            let mut factor = one.scale(c);
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                match &replaced[i] {
                    Some(q) => {
                        let cache = &mut powers[i];
                        if cache.is_empty() {
                            cache.push(one.clone());
                        }
                        while cache.len() <= k as usize {
                            let next = cache.last().unwrap() * q;
                            cache.push(next);
                        }
                        factor = &factor * &cache[k as usize];
                    }
                    None => mono[keep[i].unwrap()] += k,
                }
            }
            for (fe, fc) in factor.terms {
                let e: Exponents = fe.iter().zip(&mono).map(|(a, b)| a + b).collect();
                out.push_term(e, fc);
            }
        }
        out
    }

    /// Expectation over independent noise variables with known raw moments.
    /// The noise variables are removed from the result's variable list.
    pub fn expect(&self, noise: &[(&str, &NoiseMoments)]) -> Result<Polynomial, PolyError> {
        let idx: Vec<Option<&NoiseMoments>> = self
            .vars
            .iter()
            .map(|v| noise.iter().find(|(n, _)| n == v).map(|(_, m)| *m))
            .collect();
        for (i, m) in idx.iter().enumerate() {
            if let Some(m) = m {
                let needed = self.terms.keys().map(|e| e[i] as usize).max().unwrap_or(0);
                if needed >= m.len() {
                    return Err(PolyError::MissingMoment {
                        var: self.vars[i].clone(),
                        order: needed,
                        available: m.len().saturating_sub(1),
                    });
                }
            }
        }
        let vars: Vec<String> = self
            .vars
            .iter()
            .zip(&idx)
            .filter(|(_, m)| m.is_none())
            .map(|(v, _)| v.clone())
            .collect();
        let mut out = Polynomial::zero(&vars);
        for (e, &c) in &self.terms {
            let mut coef = c;
            let mut rest = Vec::with_capacity(vars.len());
            for (i, &k) in e.iter().enumerate() {
                match idx[i] {
                    Some(m) => coef *= m.moment(k as usize),
                    None => rest.push(k),
                }
            }
            out.push_term(rest, coef);
        }
        Ok(out)
    }

    /// Coefficient-wise comparison with absolute tolerance.
    pub fn approx_eq(&self, other: &Polynomial, tol: f64) -> bool {
        let diff = self - other;
        diff.terms.values().all(|c| c.abs() <= tol)
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Dense ascending coefficients for a polynomial with at most one active
    /// variable, together with that variable's name.
    pub fn to_univariate(&self) -> Result<(Option<String>, UniPoly), PolyError> {
        let active = self.active_vars();
        if active.len() > 1 {
            return Err(PolyError::NotUnivariate(active));
        }
        let var = active.into_iter().next();
        let i = var.as_deref().and_then(|v| self.var_index(v));
        let deg = i.map(|i| self.terms.keys().map(|e| e[i]).max().unwrap_or(0)).unwrap_or(0);
        let mut coeffs = vec![0.0; deg as usize + 1];
        for (e, &c) in &self.terms {
            let k = i.map(|i| e[i]).unwrap_or(0) as usize;
            coeffs[k] += c;
        }
        Ok((var, UniPoly::new(coeffs)))
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, &c) in self.terms.iter().rev() {
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mono: Vec<String> = e
                .iter()
                .zip(&self.vars)
                .filter(|(&k, _)| k > 0)
                .map(|(&k, v)| if k == 1 { v.clone() } else { format!("{v}^{k}") })
                .collect();
            if mono.is_empty() {
                write!(f, "{}", c.abs())?;
            } else if c.abs() == 1.0 {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{}*{}", c.abs(), mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let vars = self.merged_vars(rhs);
        let mut out = self.aligned(&vars);
        for (e, c) in rhs.aligned(&vars).terms {
            out.push_term(e, c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let vars = self.merged_vars(rhs);
        let a = self.aligned(&vars);
        let b = rhs.aligned(&vars);
        let mut out = Polynomial::zero(&vars);
        for (ea, &ca) in &a.terms {
            for (eb, &cb) in &b.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.push_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
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
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: &Polynomial) -> Polynomial {
                (&self).$m(rhs)
            }
        }
        impl $tr<Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                self.$m(&rhs)
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
        self.scale(-1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exp: Exponents,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    vars: Vec<String>,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyRepr {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .rev()
                .map(|(e, &c)| TermRepr { exp: e.clone(), coef: c })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        Polynomial::from_terms(&repr.vars, repr.terms.into_iter().map(|t| (t.exp, t.coef)))
            .map_err(serde::de::Error::custom)
    }
}

/// Raw moments `m_k = E[s^k]` of one scalar noise component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseMoments {
    moments: Vec<f64>,
}

impl NoiseMoments {
    pub fn new(moments: Vec<f64>) -> Result<Self, PolyError> {
        let m = NoiseMoments { moments };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), PolyError> {
        let m = &self.moments;
        if m.is_empty() || (m[0] - 1.0).abs() > ZERO_TOL {
            return Err(PolyError::InvalidMoments("m0 must equal 1".into()));
        }
        if m.len() > 2 && m[2] - m[1] * m[1] < -ZERO_TOL {
            return Err(PolyError::InvalidMoments("variance m2 - m1^2 is negative".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(PolyError::InvalidMoments("non-finite moment".into()));
        }
        Ok(())
    }

    /// Moments of `N(mean, std^2)` up to `order` inclusive.
    pub fn gaussian(mean: f64, std: f64, order: usize) -> Self {
        let var = std * std;
        let mut m = vec![1.0];
        for k in 1..=order {
            let prev = m[k - 1];
            let prev2 = if k >= 2 { m[k - 2] } else { 0.0 };
            m.push(mean * prev + (k as f64 - 1.0) * var * prev2);
        }
        NoiseMoments { moments: m }
    }

    pub fn standard_normal(order: usize) -> Self {
        Self::gaussian(0.0, 1.0, order)
    }

    /// Moments of the uniform distribution on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, order: usize) -> Self {
        let m = (0..=order)
            .map(|k| {
                if hi == lo {
                    lo.powi(k as i32)
                } else {
                    let k1 = k as i32 + 1;
                    (hi.powi(k1) - lo.powi(k1)) / ((k1 as f64) * (hi - lo))
                }
            })
            .collect();
        NoiseMoments { moments: m }
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }

    pub fn moment(&self, k: usize) -> f64 {
        self.moments[k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.moments
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Polynomial {
        Polynomial::var("x")
    }

    /// Case-study certificate for the first parameterization.
    fn bbar1() -> Polynomial {
        Polynomial::univariate("x", &[0.0369, -0.0849, 0.0814, -0.0345, 0.0054])
    }

    fn horner(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    #[test]
    fn eval_examples() {
        let p = &x().pow(2) + &Polynomial::constant(1.0);
        assert_eq!(p.eval(&[("x", 2.0)]).unwrap(), 5.0);
        assert_eq!(Polynomial::zero(&["x"]).eval(&[("x", 3.0)]).unwrap(), 0.0);
        let oracle = horner(&[0.0369, -0.0849, 0.0814, -0.0345, 0.0054], 7.0);
        let v = bbar1().eval(&[("x", 7.0)]).unwrap();
        assert!((v - oracle).abs() < 1e-12);
        assert!((v - 4.5631).abs() < 1e-4);
    }

    #[test]
    fn eval_unassigned_is_error() {
        let p = &x() * &Polynomial::var("y");
        assert_eq!(
            p.eval(&[("x", 1.0)]),
            Err(PolyError::Unassigned("y".into()))
        );
    }

    #[test]
    fn derivative_examples() {
        assert!(x().pow(3).derivative("x").approx_eq(&x().pow(2).scale(3.0), 0.0));
        assert!(Polynomial::constant(4.0).derivative("x").is_zero());
        let d = bbar1().derivative("x").eval(&[("x", 0.0)]).unwrap();
        assert_eq!(d, -0.0849);
        let dd = bbar1().second_derivative("x", "x");
        assert!((dd.constant_term() - 2.0 * 0.0814).abs() < 1e-15);
    }

    #[test]
    fn substitute_examples() {
        let shifted = x().pow(2).substitute("x", &x().add_constant(0.5));
        let expected = Polynomial::univariate("x", &[0.25, 1.0, 1.0]);
        assert!(shifted.approx_eq(&expected, 1e-15));

        let f2 = &(&x().pow(3).scale(0.01) + &Polynomial::var("nu").scale(0.06))
            + &Polynomial::var("varsigma").scale(0.5);
        assert!(x().substitute("x", &f2).approx_eq(&f2, 0.0));

        let sq = x().pow(2).substitute("x", &f2);
        let vars = ["x", "nu", "varsigma"];
        let expected = Polynomial::from_terms(
            &vars,
            vec![
                (vec![6, 0, 0], 1e-4),
                (vec![3, 1, 0], 0.0012),
                (vec![3, 0, 1], 0.01),
                (vec![0, 2, 0], 0.0036),
                (vec![0, 1, 1], 0.06),
                (vec![0, 0, 2], 0.25),
            ],
        )
        .unwrap();
        assert!(sq.approx_eq(&expected, 1e-15), "{sq}");
        assert_eq!(sq.num_terms(), 6);
    }

    #[test]
    fn simultaneous_substitution_uses_original_values() {
        // (x, y) -> (y, x) swaps, rather than collapsing both to one variable
        let p = &x() - &Polynomial::var("y").scale(2.0);
        let swapped = p.substitute_all(&[("x", &Polynomial::var("y")), ("y", &x())]);
        assert_eq!(swapped.eval(&[("x", 1.0), ("y", 10.0)]).unwrap(), 10.0 - 2.0);
    }

    #[test]
    fn expect_examples() {
        let s = Polynomial::var("s");
        let m = NoiseMoments::new(vec![1.0, 0.0, 1.0, 0.0, 3.0]).unwrap();
        let e = s.pow(2).expect(&[("s", &m)]).unwrap();
        assert!(e.approx_eq(&Polynomial::constant(1.0), 0.0));

        let p = (&x() + &s.scale(0.5)).pow(2);
        let e = p.expect(&[("s", &m)]).unwrap();
        assert!(e.approx_eq(&Polynomial::univariate("x", &[0.25, 0.0, 1.0]), 1e-15));
        assert_eq!(e.vars(), &["x".to_string()]);

        assert!(s.pow(3).expect(&[("s", &m)]).unwrap().is_zero());
    }

    #[test]
    fn expect_reports_missing_order() {
        let s = Polynomial::var("s");
        let m = NoiseMoments::standard_normal(2);
        match s.pow(4).expect(&[("s", &m)]) {
            Err(PolyError::MissingMoment { order, .. }) => assert_eq!(order, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gaussian_moments_recurrence() {
        let m = NoiseMoments::standard_normal(6);
        assert_eq!(m.as_slice(), &[1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0]);
        let g = NoiseMoments::gaussian(1.0, 2.0, 3);
        // E[X^3] = mu^3 + 3 mu sigma^2
        assert!((g.moment(3) - 13.0).abs() < 1e-12);
        let u = NoiseMoments::uniform(-1.0, 1.0, 4);
        assert!((u.moment(2) - 1.0 / 3.0).abs() < 1e-15);
        assert!(NoiseMoments::new(vec![0.5]).is_err());
        assert!(NoiseMoments::new(vec![1.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn zero_terms_are_dropped() {
        let p = &x() - &x();
        assert!(p.is_zero());
        let q = Polynomial::from_terms(&["x"], vec![(vec![2], 0.0), (vec![1], 1.0)]).unwrap();
        assert_eq!(q.num_terms(), 1);
    }

    #[test]
    fn from_terms_rejects_bad_exponents() {
        assert!(Polynomial::from_terms(&["x"], vec![(vec![1, 2], 1.0)]).is_err());
        assert!(Polynomial::from_terms(&["x", "x"], Vec::new()).is_err());
    }

    #[test]
    fn json_round_trip_and_format() {
        let p = bbar1();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.starts_with(r#"{"vars":["x"],"terms":[{"exp":[4],"coef":0.0054}"#));
        let back: Polynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"vars":["x"],"terms":[{"exp":[1,1],"coef":1.0}]}"#;
        assert!(serde_json::from_str::<Polynomial>(bad).is_err());
    }

    #[test]
    fn mixed_variable_sets_merge() {
        let p = &x() + &Polynomial::var("y");
        assert_eq!(p.vars(), &["x".to_string(), "y".to_string()]);
        let q = &p * &Polynomial::var("z");
        assert_eq!(q.eval(&[("x", 1.0), ("y", 2.0), ("z", 3.0)]).unwrap(), 9.0);
    }
}
