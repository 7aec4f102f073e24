//! Coefficient rings used throughout the crate.
//!
//! Exact rationals ([`Q`]) are the default carrier; [`GaussQ`] adds `i`
//! exactly, and [`C64`] is the floating fallback used when evaluating at
//! numeric points such as `q = e^{2 pi i tau}`.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;
pub type C64 = Complex64;

/// Commutative ring with the few extras the series and Fock code need.
pub trait Ring:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64(n: i64) -> Self;
    /// Multiplicative inverse when one exists.
    fn try_inverse(&self) -> Option<Self>;
    /// Max-abs distance, used only for approximate comparisons.
    fn distance(&self, other: &Self) -> f64;
    /// Magnitude as a float (for tolerance checks and error proxies).
    fn magnitude(&self) -> f64;
}

/// A ring where every nonzero element is invertible and rationals embed.
pub trait Field: Ring {
    fn from_q(q: &Q) -> Self;
    fn to_c64(&self) -> C64;

    fn inv(&self) -> Self {
        self.try_inverse().expect("inverse of zero")
    }

    fn div(&self, other: &Self) -> Self {
        self.clone() * other.inv()
    }

    fn powi(&self, e: i64) -> Self {
        if e < 0 {
            return self.inv().powi(-e);
        }
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_to_f64(x: &Q) -> f64 {
    // numerator/denominator may overflow f64 individually
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = x.numer().bits().max(x.denom().bits()) as i64 - 900;
            let shift = shift.max(0) as usize;
            let n = (x.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (x.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

impl Ring for Q {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_i64(n: i64) -> Self {
        qi(n)
    }
    fn try_inverse(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn distance(&self, other: &Self) -> f64 {
        q_to_f64(&(self - other).abs())
    }
    fn magnitude(&self) -> f64 {
        q_to_f64(&self.abs())
    }
}

impl Field for Q {
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn to_c64(&self) -> C64 {
        C64::new(q_to_f64(self), 0.0)
    }
}

impl Ring for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_i64(n: i64) -> Self {
        C64::new(n as f64, 0.0)
    }
    fn try_inverse(&self) -> Option<Self> {
        if Ring::is_zero(self) {
            None
        } else {
            Some(self.inv())
        }
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Field for C64 {
    fn from_q(q: &Q) -> Self {
        C64::new(q_to_f64(q), 0.0)
    }
    fn to_c64(&self) -> C64 {
        *self
    }
}

/// Gaussian rational `re + i*im`, exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaussQ {
    pub re: Q,
    pub im: Q,
}

impl GaussQ {
    pub fn new(re: Q, im: Q) -> Self {
        Self { re, im }
    }

    pub fn i() -> Self {
        Self::new(Zero::zero(), One::one())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> Q {
        &self.re * &self.re + &self.im * &self.im
    }
}

impl Add for GaussQ {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for GaussQ {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for GaussQ {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for GaussQ {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl Ring for GaussQ {
    fn zero() -> Self {
        Self::new(Zero::zero(), Zero::zero())
    }
    fn one() -> Self {
        Self::new(One::one(), Zero::zero())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn from_i64(n: i64) -> Self {
        Self::new(qi(n), Zero::zero())
    }
    fn try_inverse(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if Zero::is_zero(&n) {
            return None;
        }
        Some(Self::new(&self.re / &n, -(&self.im / &n)))
    }
    fn distance(&self, other: &Self) -> f64 {
        (self.to_c64() - other.to_c64()).norm()
    }
    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }
}

impl Field for GaussQ {
    fn from_q(q: &Q) -> Self {
        Self::new(q.clone(), Zero::zero())
    }
    fn to_c64(&self) -> C64 {
        C64::new(q_to_f64(&self.re), q_to_f64(&self.im))
    }
}

/// Generalized binomial coefficient `binom(n, k)` for integer `n` (possibly
/// negative) and `k >= 0`.
pub fn binom_i(n: i64, k: i64) -> Q {
    if k < 0 {
        return Zero::zero();
    }
    let mut acc = qi(1);
    for j in 0..k {
        acc = acc * qi(n - j) / qi(j + 1);
    }
    acc
}

/// `binom(x, k)` for a rational upper argument.
pub fn binom_q(x: &Q, k: i64) -> Q {
    let mut acc = qi(1);
    for j in 0..k {
        acc = acc * (x - qi(j)) / qi(j + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}
