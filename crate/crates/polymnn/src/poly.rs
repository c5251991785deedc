//! Multivariate polynomial targets: parsing, evaluation, Gaussian sampling,
//! and the out-of-distribution test grid.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use crate::tensor::Tensor;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Expression manifest shipped with the crate, one polynomial per line.
pub const POLYNOMIAL_MANIFEST: &str = include_str!("../data/polynomials.txt");

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    /// Variable letter to positive exponent.
    pub exponents: BTreeMap<char, u32>,
}

/// A polynomial in canonical form: like terms merged, zero terms dropped,
/// terms ordered by descending exponent vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialExpr {
    terms: Vec<Term>,
}

impl PolynomialExpr {
    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).parse()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Distinct variables, sorted.
    pub fn variables(&self) -> Vec<char> {
        let mut vars: Vec<char> = self
            .terms
            .iter()
            .flat_map(|t| t.exponents.keys().copied())
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// Largest total degree over terms; 0 for constants.
    pub fn order(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.exponents.values().map(|e| *e as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// Largest count of distinct variables in one term.
    pub fn interactions(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.exponents.len())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, assignment: &BTreeMap<char, f64>) -> Result<f64> {
        let mut total = 0.0;
        for t in &self.terms {
            let mut prod = t.coeff;
            for (var, exp) in &t.exponents {
                let v = assignment.get(var).ok_or_else(|| {
                    Error::contract(format!("assignment is missing variable {var}"))
                })?;
                prod *= v.powi(*exp as i32);
            }
            total += prod;
        }
        Ok(total)
    }

    /// Evaluation against a value slice aligned with `variables()`.
    pub fn eval_ordered(&self, values: &[f64]) -> Result<f64> {
        let vars = self.variables();
        if values.len() != vars.len() {
            return Err(Error::shape(
                "eval_ordered",
                format!("{} values", vars.len()),
                values.len().to_string(),
            ));
        }
        let assignment: BTreeMap<char, f64> =
            vars.into_iter().zip(values.iter().copied()).collect();
        self.eval(&assignment)
    }

    fn canonicalize(raw: Vec<Term>) -> Self {
        let mut merged: BTreeMap<BTreeMap<char, u32>, f64> = BTreeMap::new();
        for t in raw {
            *merged.entry(t.exponents).or_insert(0.0) += t.coeff;
        }
        let mut terms: Vec<Term> = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(exponents, coeff)| Term { coeff, exponents })
            .collect();
        let mut vars: Vec<char> = terms
            .iter()
            .flat_map(|t| t.exponents.keys().copied())
            .collect();
        vars.sort_unstable();
        vars.dedup();
        let key = |t: &Term| -> Vec<u32> {
            vars.iter()
                .map(|v| t.exponents.get(v).copied().unwrap_or(0))
                .collect()
        };
        terms.sort_by(|a, b| key(b).cmp(&key(a)));
        PolynomialExpr { terms }
    }
}

impl fmt::Display for PolynomialExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let mag = t.coeff.abs();
            if i == 0 {
                if t.coeff < 0.0 {
                    f.write_str("-")?;
                }
            } else if t.coeff < 0.0 {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            let mut wrote_factor = false;
            if mag != 1.0 || t.exponents.is_empty() {
                write!(f, "{mag}")?;
                wrote_factor = true;
            }
            for (var, exp) in &t.exponents {
                if wrote_factor {
                    f.write_str(" ")?;
                }
                if *exp == 1 {
                    write!(f, "{var}")?;
                } else {
                    write!(f, "{var}^{exp}")?;
                }
                wrote_factor = true;
            }
        }
        Ok(())
    }
}

impl FromStr for PolynomialExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    fn parse(mut self) -> Result<PolynomialExpr> {
        let mut terms = Vec::new();
        self.skip_ws();
        if self.peek().is_none() {
            return Err(Error::parse(self.pos, "empty polynomial"));
        }
        let mut sign = 1.0;
        if self.peek() == Some(b'-') {
            sign = -1.0;
            self.pos += 1;
        } else if self.peek() == Some(b'+') {
            self.pos += 1;
        }
        loop {
            terms.push(self.parse_term(sign)?);
            self.skip_ws();
            match self.peek() {
                None => break,
                Some(b'+') => {
                    sign = 1.0;
                    self.pos += 1;
                }
                Some(b'-') => {
                    sign = -1.0;
                    self.pos += 1;
                }
                Some(c) => {
                    return Err(Error::parse(
                        self.pos,
                        format!("expected + or - before {:?}", c as char),
                    ))
                }
            }
        }
        Ok(PolynomialExpr::canonicalize(terms))
    }

    /// One term: adjacent number and variable factors multiply.
    fn parse_term(&mut self, sign: f64) -> Result<Term> {
        let mut coeff = sign;
        let mut exponents: BTreeMap<char, u32> = BTreeMap::new();
        let mut factors = 0;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(c) if c.is_ascii_digit() || c == b'.' => {
                    coeff *= self.parse_number()?;
                    factors += 1;
                }
                Some(c) if c.is_ascii_lowercase() => {
                    let var = c as char;
                    self.pos += 1;
                    let exp = if self.peek() == Some(b'^') {
                        self.pos += 1;
                        self.parse_exponent()?
                    } else {
                        1
                    };
                    *exponents.entry(var).or_insert(0) += exp;
                    factors += 1;
                }
                _ => break,
            }
        }
        if factors == 0 {
            return Err(Error::parse(self.pos, "expected a term"));
        }
        Ok(Term { coeff, exponents })
    }

    fn parse_number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse::<f64>()
            .map_err(|_| Error::parse(start, format!("invalid number {text:?}")))
    }

    fn parse_exponent(&mut self) -> Result<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, "expected an integer exponent after ^"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        let exp: u32 = text
            .parse()
            .map_err(|_| Error::parse(start, format!("invalid exponent {text:?}")))?;
        if exp == 0 {
            return Err(Error::parse(start, "exponents must be at least 1"));
        }
        Ok(exp)
    }
}

/// Normal distribution parameters for one sampling regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianSpec {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::contract(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(GaussianSpec { mu, sigma })
    }

    pub fn label(&self) -> String {
        format!("N({},{})", self.mu, self.sigma)
    }
}

/// The nine test distributions: mu in {-50, 0, 90} crossed with sigma in
/// {1, 5, 25}, mu-major.
pub fn ood_test_grid() -> Vec<GaussianSpec> {
    let mut grid = Vec::with_capacity(9);
    for mu in [-50.0, 0.0, 90.0] {
        for sigma in [1.0, 5.0, 25.0] {
            grid.push(GaussianSpec { mu, sigma });
        }
    }
    grid
}

/// Draws every variable i.i.d. from `spec` and labels with the exact
/// polynomial value. Column layout follows `expr.variables()`.
pub fn sample_gaussian_dataset(
    expr: &PolynomialExpr,
    spec: GaussianSpec,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::contract("sample count must be at least 1"));
    }
    let vars = expr.variables();
    let normal = Normal::new(spec.mu, spec.sigma)
        .map_err(|e| Error::contract(format!("bad sampling spec: {e}")))?;
    let mut rng = seeded_rng(seed);
    let mut x = Tensor::zeros(vars.len(), n);
    let mut y = Tensor::zeros(1, n);
    let mut values = vec![0.0; vars.len()];
    for c in 0..n {
        for (r, slot) in values.iter_mut().enumerate() {
            *slot = normal.sample(&mut rng);
            x.set(r, c, *slot);
        }
        y.set(0, c, expr.eval_ordered(&values)?);
    }
    Dataset::new(x, y)
}

/// CSV with one sample per row: variable columns then the target.
pub fn dataset_csv(expr: &PolynomialExpr, data: &Dataset) -> Result<String> {
    let vars = expr.variables();
    if data.n_features() != vars.len() || data.n_outputs() != 1 {
        return Err(Error::shape(
            "dataset_csv",
            format!("{} features, 1 target", vars.len()),
            format!("{} features, {} targets", data.n_features(), data.n_outputs()),
        ));
    }
    let mut out = String::new();
    for v in &vars {
        out.push(*v);
        out.push(',');
    }
    out.push_str("target\n");
    for c in 0..data.n_samples() {
        for r in 0..vars.len() {
            out.push_str(&format!("{},", data.x.at(r, c)));
        }
        out.push_str(&format!("{}\n", data.y.at(0, c)));
    }
    Ok(out)
}

/// Parses a manifest: one polynomial per line, `#` starts a comment.
pub fn load_manifest(text: &str) -> Result<Vec<PolynomialExpr>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(PolynomialExpr::parse)
        .collect()
}

/// The shipped 14-polynomial suite.
pub fn builtin_polynomials() -> Vec<PolynomialExpr> {
    load_manifest(POLYNOMIAL_MANIFEST).expect("shipped manifest parses")
}
