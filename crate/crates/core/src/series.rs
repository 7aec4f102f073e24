//! Truncated formal Laurent series in one variable.
//!
//! A series knows the exponent below which its coefficients are known
//! (`truncation`). Coefficients at or above it are unknown, never zero.
//! `EXACT` marks a series that is known everywhere (a Laurent polynomial).
//! Multivariate objects are built by nesting: the coefficient ring may itself
//! be a `TruncatedSeries`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{q_to_f64, GaussQ, Ring, C64, Q};

/// Truncation order of a series that is known exactly.
pub const EXACT: i64 = i64::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<C> {
    var: String,
    coeffs: BTreeMap<i64, C>,
    trunc: i64,
}

fn tags_compatible(a: &str, b: &str) -> bool {
    a.is_empty() || b.is_empty() || a == b
}

fn offset(trunc: i64, k: i64) -> i64 {
    if trunc == EXACT { EXACT } else { trunc.saturating_add(k).min(EXACT - 1) }
}

fn merged_tag(a: &str, b: &str) -> String {
    if a.is_empty() { b.to_string() } else { a.to_string() }
}

impl<C: Ring> TruncatedSeries<C> {
    pub fn zero(var: &str, trunc: i64) -> Self {
        Self { var: var.to_string(), coeffs: BTreeMap::new(), trunc }
    }

    pub fn one(var: &str, trunc: i64) -> Self {
        Self::monomial(var, C::one(), 0, trunc)
    }

    pub fn constant(var: &str, c: C, trunc: i64) -> Self {
        Self::monomial(var, c, 0, trunc)
    }

    pub fn monomial(var: &str, c: C, exp: i64, trunc: i64) -> Self {
        let mut s = Self::zero(var, trunc);
        s.set(exp, c);
        s
    }

    pub fn from_coeffs<I: IntoIterator<Item = (i64, C)>>(var: &str, it: I, trunc: i64) -> Self {
        let mut s = Self::zero(var, trunc);
        for (e, c) in it {
            let cur = s.coeff(e);
            s.set(e, cur + c);
        }
        s
    }

    /// Dense constructor: `coeffs[i]` is the coefficient of `var^(start + i)`.
    pub fn from_dense(var: &str, start: i64, coeffs: Vec<C>, trunc: i64) -> Self {
        Self::from_coeffs(var, coeffs.into_iter().enumerate().map(|(i, c)| (start + i as i64, c)), trunc)
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn truncation(&self) -> i64 {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc == EXACT
    }

    /// Lowest stored exponent; for the zero series the truncation (capped at 0).
    pub fn min_exponent(&self) -> i64 {
        self.coeffs.keys().next().copied().unwrap_or(self.trunc.min(0))
    }

    /// Valuation bound used when propagating truncation through products.
    fn valuation(&self) -> i64 {
        self.coeffs.keys().next().copied().unwrap_or(self.trunc)
    }

    pub fn coeff(&self, e: i64) -> C {
        self.coeffs.get(&e).cloned().unwrap_or_else(C::zero)
    }

    /// Coefficient if known, `None` at or beyond the truncation order.
    pub fn known_coeff(&self, e: i64) -> Option<C> {
        (e < self.trunc).then(|| self.coeff(e))
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &C)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn set(&mut self, e: i64, c: C) {
        if e >= self.trunc || c.is_zero() {
            self.coeffs.remove(&e);
        } else {
            self.coeffs.insert(e, c);
        }
    }

    pub fn with_var(mut self, var: &str) -> Self {
        self.var = var.to_string();
        self
    }

    /// Forget everything at or above `order`.
    pub fn truncate(&self, order: i64) -> Self {
        let trunc = self.trunc.min(order);
        Self {
            var: self.var.clone(),
            coeffs: self.coeffs.range(..trunc).map(|(e, c)| (*e, c.clone())).collect(),
            trunc,
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            var: self.var.clone(),
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c.clone())).collect(),
            trunc: self.trunc,
        }
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut out = Self::zero(&self.var, self.trunc);
        for (e, c) in &self.coeffs {
            out.set(*e, s.clone() * c.clone());
        }
        out
    }

    /// Multiply by `var^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            var: self.var.clone(),
            coeffs: self.coeffs.iter().map(|(e, c)| (e + k, c.clone())).collect(),
            trunc: offset(self.trunc, k),
        }
    }

    /// `var * d/dvar`: multiplies the coefficient of `var^e` by `e`.
    pub fn euler_derivative(&self) -> Self {
        let mut out = Self::zero(&self.var, self.trunc);
        for (e, c) in &self.coeffs {
            out.set(*e, C::from_i64(*e) * c.clone());
        }
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if !tags_compatible(&self.var, &other.var) {
            return Err(Error::VariableMismatch(self.var.clone(), other.var.clone()));
        }
        let trunc = self.trunc.min(other.trunc);
        let mut out = Self::zero(&merged_tag(&self.var, &other.var), trunc);
        for (e, c) in self.coeffs.range(..trunc).chain(other.coeffs.range(..trunc)) {
            let cur = out.coeff(*e);
            out.set(*e, cur + c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.negated())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if !tags_compatible(&self.var, &other.var) {
            return Err(Error::VariableMismatch(self.var.clone(), other.var.clone()));
        }
        let trunc = self
            .trunc
            .min(other.trunc)
            .min(offset(self.trunc, other.valuation()))
            .min(offset(other.trunc, self.valuation()));
        let mut acc: BTreeMap<i64, C> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let e = ea + eb;
                if e >= trunc {
                    break;
                }
                let prod = ca.clone() * cb.clone();
                match acc.get_mut(&e) {
                    Some(slot) => *slot = slot.clone() + prod,
                    None => {
                        acc.insert(e, prod);
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(Self { var: merged_tag(&self.var, &other.var), coeffs: acc, trunc })
    }

    /// Two-sided inverse up to truncation. Requires a nonzero leading
    /// coefficient; an exact non-monomial has no finite inverse.
    pub fn invert(&self) -> Result<Self> {
        let (&e0, c0) = self
            .coeffs
            .iter()
            .next()
            .ok_or_else(|| Error::Singular("series has no nonzero coefficient".into()))?;
        let inv0 = c0
            .try_inverse()
            .ok_or_else(|| Error::Singular("leading coefficient is not invertible".into()))?;
        if self.trunc == EXACT {
            if self.coeffs.len() == 1 {
                return Ok(Self::monomial(&self.var, inv0, -e0, EXACT));
            }
            return Err(Error::Truncation(
                "inverse of an exact non-monomial needs a finite truncation".into(),
            ));
        }
        // a = x^e0 * u, u = c0 + ..., u known to relative order n
        let n = self.trunc - e0;
        let u: Vec<C> = (0..n).map(|k| self.coeff(e0 + k)).collect();
        let mut w: Vec<C> = Vec::with_capacity(n as usize);
        for k in 0..n as usize {
            if k == 0 {
                w.push(inv0.clone());
                continue;
            }
            let mut s = C::zero();
            for j in 1..=k {
                if !u[j].is_zero() {
                    s = s + u[j].clone() * w[k - j].clone();
                }
            }
            w.push(-(inv0.clone() * s));
        }
        Ok(Self::from_dense(&self.var, -e0, w, -e0 + n))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(&self.var, EXACT);
        for _ in 0..k {
            acc = acc.try_mul(self).expect("same variable");
        }
        acc
    }

    /// Max-abs deviation over the exponents both series know.
    pub fn compare(&self, other: &Self) -> Result<Comparison> {
        if !tags_compatible(&self.var, &other.var) {
            return Err(Error::VariableMismatch(self.var.clone(), other.var.clone()));
        }
        let hi = self.trunc.min(other.trunc);
        let lo = self.min_exponent().min(other.min_exponent());
        if hi <= lo && !(self.is_zero() && other.is_zero()) {
            return Ok(Comparison::Incomparable);
        }
        let mut max_dev = 0.0f64;
        for e in self.coeffs.range(..hi).map(|(e, _)| *e).chain(other.coeffs.range(..hi).map(|(e, _)| *e)) {
            max_dev = max_dev.max(self.coeff(e).distance(&other.coeff(e)));
        }
        Ok(Comparison::Deviation { max_dev, upto: hi })
    }

    pub fn map<D: Ring>(&self, f: impl Fn(&C) -> D) -> TruncatedSeries<D> {
        TruncatedSeries::from_coeffs(&self.var, self.coeffs.iter().map(|(e, c)| (*e, f(c))), self.trunc)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Comparison {
    Deviation { max_dev: f64, upto: i64 },
    Incomparable,
}

impl Comparison {
    pub fn within(&self, tol: f64) -> bool {
        matches!(self, Comparison::Deviation { max_dev, .. } if *max_dev <= tol)
    }

    pub fn deviation(&self) -> Option<f64> {
        match self {
            Comparison::Deviation { max_dev, .. } => Some(*max_dev),
            Comparison::Incomparable => None,
        }
    }
}

pub fn series_add<C: Ring>(a: &TruncatedSeries<C>, b: &TruncatedSeries<C>) -> Result<TruncatedSeries<C>> {
    a.try_add(b)
}

pub fn series_mul<C: Ring>(a: &TruncatedSeries<C>, b: &TruncatedSeries<C>) -> Result<TruncatedSeries<C>> {
    a.try_mul(b)
}

pub fn series_invert<C: Ring>(a: &TruncatedSeries<C>) -> Result<TruncatedSeries<C>> {
    a.invert()
}

pub fn series_compare<C: Ring>(a: &TruncatedSeries<C>, b: &TruncatedSeries<C>) -> Result<Comparison> {
    a.compare(b)
}

impl<C: Ring> Add for TruncatedSeries<C> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.try_add(&o).expect("series variable mismatch")
    }
}

impl<C: Ring> Sub for TruncatedSeries<C> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.try_sub(&o).expect("series variable mismatch")
    }
}

impl<C: Ring> Mul for TruncatedSeries<C> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.try_mul(&o).expect("series variable mismatch")
    }
}

impl<C: Ring> Neg for TruncatedSeries<C> {
    type Output = Self;
    fn neg(self) -> Self {
        self.negated()
    }
}

/// Series over a ring form a ring; constants carry an empty variable tag
/// that unifies with any variable.
impl<C: Ring> Ring for TruncatedSeries<C> {
    fn zero() -> Self {
        Self::zero("", EXACT)
    }
    fn one() -> Self {
        Self::one("", EXACT)
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn from_i64(n: i64) -> Self {
        Self::constant("", C::from_i64(n), EXACT)
    }
    fn try_inverse(&self) -> Option<Self> {
        self.invert().ok()
    }
    fn distance(&self, other: &Self) -> f64 {
        self.compare(other).ok().and_then(|c| c.deviation()).unwrap_or(f64::INFINITY)
    }
    fn magnitude(&self) -> f64 {
        self.coeffs.values().map(|c| c.magnitude()).fold(0.0, f64::max)
    }
}

/// Coefficient types with a JSON encoding `[re, im]`.
pub trait JsonCoeff: Sized {
    fn to_parts(&self) -> (Value, Value);
    fn from_parts(re: &Value, im: &Value) -> Result<Self>;
}

fn q_to_string(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn parse_q(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => {
            let (n, d) = s.split_once('/').unwrap_or((s.as_str(), "1"));
            let n: num_bigint::BigInt = n.trim().parse().map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
            let d: num_bigint::BigInt = d.trim().parse().map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
            if d == num_bigint::BigInt::from(0) {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            Ok(Q::new(n, d))
        }
        Value::Number(n) if n.is_i64() => Ok(crate::scalar::qi(n.as_i64().unwrap())),
        _ => Err(Error::Parse(format!("expected rational string, got {v}"))),
    }
}

impl JsonCoeff for Q {
    fn to_parts(&self) -> (Value, Value) {
        (json!(q_to_string(self)), json!("0/1"))
    }
    fn from_parts(re: &Value, im: &Value) -> Result<Self> {
        let im = parse_q(im)?;
        if !num_traits::Zero::is_zero(&im) {
            return Err(Error::Parse("nonzero imaginary part for a rational series".into()));
        }
        parse_q(re)
    }
}

impl JsonCoeff for GaussQ {
    fn to_parts(&self) -> (Value, Value) {
        (json!(q_to_string(&self.re)), json!(q_to_string(&self.im)))
    }
    fn from_parts(re: &Value, im: &Value) -> Result<Self> {
        Ok(GaussQ::new(parse_q(re)?, parse_q(im)?))
    }
}

impl JsonCoeff for C64 {
    fn to_parts(&self) -> (Value, Value) {
        (json!(self.re), json!(self.im))
    }
    fn from_parts(re: &Value, im: &Value) -> Result<Self> {
        let f = |v: &Value| match v {
            Value::String(_) => parse_q(v).map(|x| q_to_f64(&x)),
            _ => v.as_f64().ok_or_else(|| Error::Parse(format!("expected number, got {v}"))),
        };
        Ok(C64::new(f(re)?, f(im)?))
    }
}

impl<C: Ring + JsonCoeff> TruncatedSeries<C> {
    pub fn to_json(&self) -> Value {
        let coeffs: Vec<Value> = self
            .coeffs
            .iter()
            .map(|(e, c)| {
                let (re, im) = c.to_parts();
                json!([e, re, im])
            })
            .collect();
        json!({
            "variable": self.var,
            "min_exponent": self.min_exponent(),
            "truncation": if self.is_exact() { Value::Null } else { json!(self.trunc) },
            "coeffs": coeffs,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let var = v["variable"].as_str().ok_or_else(|| Error::Parse("missing variable".into()))?;
        let trunc = match &v["truncation"] {
            Value::Null => EXACT,
            t => t.as_i64().ok_or_else(|| Error::Parse("bad truncation".into()))?,
        };
        let mut s = Self::zero(var, trunc);
        for entry in v["coeffs"].as_array().ok_or_else(|| Error::Parse("missing coeffs".into()))? {
            let e = entry[0].as_i64().ok_or_else(|| Error::Parse("bad exponent".into()))?;
            if e >= trunc {
                return Err(Error::Parse(format!("exponent {e} at or beyond truncation {trunc}")));
            }
            let c = C::from_parts(&entry[1], &entry[2])?;
            let cur = s.coeff(e);
            s.set(e, cur + c);
        }
        Ok(s)
    }
}
