//! Bernoulli numbers, Eisenstein series, the Weierstrass family `P_k`, the
//! genus-one kernels `P_m` written as `q`-series, and the genus-zero rational
//! kernels `f_{n,m}(z, w)`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::scalar::{binom_i, factorial, q_to_f64, qi, Field, Ring, C64, Q};
use crate::series::TruncatedSeries;
use crate::{Error, Result};

fn bernoulli_table() -> &'static Mutex<Vec<Q>> {
    static TABLE: OnceLock<Mutex<Vec<Q>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(vec![Q::one()]))
}

/// `B_k` from `sum_{j<=k} binom(k+1, j) B_j = 0`, so `B_1 = -1/2`.
pub fn bernoulli(k: usize) -> Q {
    let mut table = bernoulli_table().lock().expect("bernoulli memo poisoned");
    while table.len() <= k {
        let n = table.len() as i64;
        let mut s = Q::zero();
        for (j, b) in table.iter().enumerate() {
            s += binom_i(n + 1, j as i64) * b;
        }
        table.push(-s / qi(n + 1));
    }
    table[k].clone()
}

fn sigma(k: u32, n: i64) -> Q {
    let mut s: num_bigint::BigInt = num_traits::Zero::zero();
    for d in 1..=n {
        if n % d == 0 {
            s += num_bigint::BigInt::from(d).pow(k);
        }
    }
    Q::from_integer(s)
}

fn eisenstein_memo() -> &'static Mutex<HashMap<(i64, i64), TruncatedSeries<Q>>> {
    static MEMO: OnceLock<Mutex<HashMap<(i64, i64), TruncatedSeries<Q>>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `E_k(q) = -B_k/k! + 2/(k-1)! sum sigma_{k-1}(n) q^n` for even `k`, zero
/// for odd `k`, known below `q^{q_order}`.
pub fn eisenstein(k: i64, q_order: i64) -> Result<TruncatedSeries<Q>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("Eisenstein series needs k >= 2, got {k}")));
    }
    if let Some(s) = eisenstein_memo().lock().expect("eisenstein memo poisoned").get(&(k, q_order)) {
        return Ok(s.clone());
    }
    let series = if k % 2 == 1 {
        TruncatedSeries::zero("q", q_order)
    } else {
        let kf = Q::from_integer(factorial(k as u64));
        let km1f = Q::from_integer(factorial(k as u64 - 1));
        let mut terms = vec![(0, -bernoulli(k as usize) / kf)];
        for n in 1..q_order {
            terms.push((n, qi(2) * sigma(k as u32 - 1, n) / &km1f));
        }
        TruncatedSeries::from_coeffs("q", terms, q_order)
    };
    eisenstein_memo()
        .lock()
        .expect("eisenstein memo poisoned")
        .insert((k, q_order), series.clone());
    Ok(series)
}

/// A point `tau` in the upper half plane with its nome and `q`-truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularPoint {
    pub tau: C64,
    pub q: C64,
    pub q_order: i64,
}

impl ModularPoint {
    pub fn new(tau: C64, q_order: i64) -> Result<Self> {
        if tau.im <= 0.0 || !tau.im.is_finite() {
            return Err(Error::InvalidArgument(format!("tau must lie in the upper half plane, got {tau}")));
        }
        if q_order < 1 {
            return Err(Error::InvalidArgument("q_order must be positive".into()));
        }
        let q = (C64::new(0.0, 2.0 * PI) * tau).exp();
        Ok(Self { tau, q, q_order })
    }

    /// The shift `2 pi i tau` under which `P_1` is quasi-periodic.
    pub fn period(&self) -> C64 {
        C64::new(0.0, 2.0 * PI) * self.tau
    }
}

/// Evaluates an exact `q`-series at a numeric nome, with a geometric bound on
/// the omitted tail (coefficients assumed to grow at most like the last one
/// times `n^2`).
pub fn eval_q_series(s: &TruncatedSeries<Q>, q: C64) -> (C64, f64) {
    let mut acc = C64::new(0.0, 0.0);
    for (e, c) in s.terms() {
        acc += c.to_c64() * q.powi(e as i32);
    }
    let r = q.norm();
    let t = s.truncation();
    let last = s.terms().last().map(|(_, c)| q_to_f64(c).abs()).unwrap_or(0.0);
    let tail = if t == crate::series::EXACT || r == 0.0 {
        0.0
    } else {
        let growth = ((t + 1) as f64).powi(2);
        (last.max(1.0) * growth * r.powi(t as i32) / (1.0 - r)).min(f64::MAX)
    };
    (acc, tail)
}

/// A numeric value with an estimate of the truncation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: C64,
    pub error_estimate: f64,
}

fn laurent_radius() -> f64 {
    2.0 * PI
}

/// `P_1(z) = 1/z - sum_{k=2}^{z_terms} E_k z^{k-1}` with the `E_k`
/// evaluated at the nome.
pub fn p1_laurent(mp: &ModularPoint, z_terms: i64) -> Result<TruncatedSeries<C64>> {
    let mut terms = vec![(-1, C64::new(1.0, 0.0))];
    for k in 2..=z_terms.max(2) {
        let (ek, _) = eval_q_series(&eisenstein(k, mp.q_order)?, mp.q);
        terms.push((k - 1, -ek));
    }
    Ok(TruncatedSeries::from_coeffs("z", terms, z_terms.max(2)))
}

fn z_derivative(s: &TruncatedSeries<C64>) -> TruncatedSeries<C64> {
    TruncatedSeries::from_coeffs(
        s.var(),
        s.terms().map(|(e, c)| (e - 1, c * e as f64)),
        s.truncation().saturating_sub(1),
    )
}

/// `P_k = (-1)^{k-1}/(k-1)! d^{k-1} P_1` as a Laurent series in `z`.
pub fn weierstrass_p_series(k: i64, mp: &ModularPoint, z_terms: i64) -> Result<TruncatedSeries<C64>> {
    if k < 1 {
        return Err(Error::InvalidArgument(format!("P_k needs k >= 1, got {k}")));
    }
    let mut s = p1_laurent(mp, z_terms)?;
    for j in 1..k {
        s = z_derivative(&s).scale(&C64::new(-1.0 / j as f64, 0.0));
    }
    Ok(s)
}

fn eval_laurent(s: &TruncatedSeries<C64>, z: C64) -> C64 {
    s.terms().fold(C64::new(0.0, 0.0), |acc, (e, c)| acc + c * z.powi(e as i32))
}

/// `P_k(z)` from its truncated Laurent series. The error estimate bounds the
/// omitted `E_j z^{j-1}` tail by its geometric domination at radius `2 pi`.
pub fn weierstrass_p(k: i64, z: C64, mp: &ModularPoint, z_terms: i64) -> Result<Evaluation> {
    if z.norm() == 0.0 {
        return Err(Error::Pole("P_k has a pole at z = 0".into()));
    }
    let r = z.norm() / laurent_radius();
    if r >= 1.0 {
        return Err(Error::Convergence(format!(
            "|z| = {} lies outside the Laurent disc of radius 2 pi",
            z.norm()
        )));
    }
    let s = weierstrass_p_series(k, mp, z_terms)?;
    let n = (z_terms - k).max(1);
    // |E_j| ~ 2 (2 pi)^{-j}, differentiated k-1 times
    let poly = ((z_terms + 1) as f64).powi(k as i32 - 1);
    let err = 2.0 * poly * r.powi(n as i32) / (1.0 - r) / z.norm().powi(k as i32 - 1).max(1e-300);
    Ok(Evaluation { value: eval_laurent(&s, z), error_estimate: err })
}

fn geometric_sum<F: FnMut(i64) -> C64>(mut term: F, start: i64, tol: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let mut r = start;
    loop {
        let t = term(r);
        acc += t;
        if t.norm() < tol * 1e-3 && r > start + 2 {
            return acc;
        }
        r += 1;
        if r > start + 100_000 {
            return acc;
        }
    }
}

/// `P_1` through its product-form sum, valid for every `z` off the lattice:
/// `-1/2 - sum_{r>=0} x q^r/(1 - x q^r) + sum_{r>=1} (q^r/x)/(1 - q^r/x)`
/// with `x = e^z`. Quasi-periodicity `P_1(z + 2 pi i tau) = P_1(z) - 1` holds
/// exactly in this form.
pub fn p1_global(z: C64, mp: &ModularPoint) -> Result<C64> {
    let x = z.exp();
    let q = mp.q;
    let hit = |t: C64| (C64::new(1.0, 0.0) - t).norm() < 1e-14;
    let mut acc = C64::new(-0.5, 0.0);
    let mut bad = false;
    acc -= geometric_sum(
        |r| {
            let t = x * q.powi(r as i32);
            bad |= hit(t);
            t / (C64::new(1.0, 0.0) - t)
        },
        0,
        1e-17,
    );
    acc += geometric_sum(
        |r| {
            let t = q.powi(r as i32) / x;
            t / (C64::new(1.0, 0.0) - t)
        },
        1,
        1e-17,
    );
    if bad || !acc.is_finite() {
        return Err(Error::Pole(format!("z = {z} is a lattice point")));
    }
    Ok(acc)
}

/// `wp(z)` from its `q`-expansion `1/12 - 2 sum sigma_1(n) q^n + sum_n q^n x/(1 - q^n x)^2`,
/// an oracle independent of the Laurent route.
pub fn weierstrass_wp_qseries(z: C64, mp: &ModularPoint) -> C64 {
    let x = z.exp();
    let q = mp.q;
    let one = C64::new(1.0, 0.0);
    let mut acc = C64::new(1.0 / 12.0, 0.0);
    acc -= geometric_sum(|n| q.powi(n as i32) * 2.0 * n as f64 / (one - q.powi(n as i32)), 1, 1e-17);
    acc += x / ((one - x) * (one - x));
    acc += geometric_sum(
        |n| {
            let a = q.powi(n as i32) * x;
            let b = q.powi(n as i32) / x;
            a / ((one - a) * (one - a)) + b / ((one - b) * (one - b))
        },
        1,
        1e-17,
    );
    acc
}

/// Integer coefficients of the numerator `N_k` in `S_k(x) = sum_{n>=1} n^k x^n
/// = N_k(x) / (1 - x)^{k+1}`.
fn eulerian_numerator(k: usize) -> Vec<f64> {
    let mut num = vec![0.0, 1.0];
    for j in 0..k {
        // N_{j+1} = x (N_j' (1 - x) + (j + 1) N_j)
        let deriv: Vec<f64> = (1..num.len()).map(|i| num[i] * i as f64).collect();
        let mut inner = vec![0.0; num.len() + 1];
        for (i, c) in deriv.iter().enumerate() {
            inner[i] += c;
            inner[i + 1] -= c;
        }
        for (i, c) in num.iter().enumerate() {
            inner[i] += (j + 1) as f64 * c;
        }
        num = std::iter::once(0.0).chain(inner).collect();
    }
    num
}

/// `S_k(x)` continued rationally to all `x != 1`.
pub fn power_sum(k: usize, x: C64) -> Result<C64> {
    let one = C64::new(1.0, 0.0);
    if (one - x).norm() < 1e-300 {
        return Err(Error::Pole("S_k has a pole at x = 1".into()));
    }
    let num = eulerian_numerator(k);
    let mut p = C64::new(0.0, 0.0);
    for c in num.iter().rev() {
        p = p * x + c;
    }
    Ok(p / (one - x).powi(k as i32 + 1))
}

fn pm_prefactor(m: i64) -> f64 {
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    sign / q_to_f64(&Q::from_integer(factorial(m as u64 - 1)))
}

/// The genus-one kernel `P_m(z) = (-1)^m/(m-1)! sum_{n != 0} n^{m-1} x^n/(1 - q^n)`,
/// `x = e^z`, expanded in `q` with coefficients that are rational in `x`:
/// the `q^0` term is `S_{m-1}(x)` and `q^N` collects
/// `sum_{d | N} d^{m-1} x^d - (-d)^{m-1} x^{-d}`.
pub fn pm_qseries(m: i64, z: C64, q_order: i64) -> Result<TruncatedSeries<C64>> {
    if m < 1 {
        return Err(Error::InvalidArgument(format!("P_m needs m >= 1, got {m}")));
    }
    let x = z.exp();
    let pre = pm_prefactor(m);
    let mut terms = vec![(0, power_sum(m as usize - 1, x)? * pre)];
    for big_n in 1..q_order {
        let mut c = C64::new(0.0, 0.0);
        for d in 1..=big_n {
            if big_n % d == 0 {
                let df = d as f64;
                c += x.powi(d as i32) * df.powi(m as i32 - 1) - x.powi(-(d as i32)) * (-df).powi(m as i32 - 1);
            }
        }
        terms.push((big_n, c * pre));
    }
    Ok(TruncatedSeries::from_coeffs("q", terms, q_order))
}

/// `P_m(z, tau)` by direct summation over a symmetric window of `n`, stopping
/// once a geometric bound on both tails is below `tol`. Requires
/// `|q| < |x| < 1`.
pub fn pm_genus1(m: i64, z: C64, mp: &ModularPoint, tol: f64) -> Result<Evaluation> {
    if m < 1 {
        return Err(Error::InvalidArgument(format!("P_m needs m >= 1, got {m}")));
    }
    let x = z.exp();
    let (ax, aq) = (x.norm(), mp.q.norm());
    if !(aq < ax && ax < 1.0) {
        return Err(Error::Convergence(format!(
            "direct sum needs |q| < |e^z| < 1, got |q| = {aq:.3e}, |e^z| = {ax:.6}"
        )));
    }
    let one = C64::new(1.0, 0.0);
    let r_pos = ax;
    let r_neg = aq / ax;
    let ratio = r_pos.max(r_neg);
    let mut acc = C64::new(0.0, 0.0);
    let mut n = 1i64;
    loop {
        let nf = n as f64;
        // x^{-n}/(1 - q^{-n}) = -x^{-n} q^n/(1 - q^n), written to avoid overflow
        let qn = mp.q.powi(n as i32);
        let neg = -(mp.q / x).powi(n as i32) * (-nf).powi(m as i32 - 1) / (one - qn);
        let pos = x.powi(n as i32) * nf.powi(m as i32 - 1) / (one - qn);
        acc += pos + neg;
        // tail after n: sum_{j>n} j^{m-1} r^j / (1 - |q|), dominated geometrically
        let growth = ((nf + 2.0) / (nf + 1.0)).powi(m as i32 - 1) * ratio;
        if growth < 1.0 {
            let head = (nf + 1.0).powi(m as i32 - 1) * ratio.powi(n as i32 + 1) / (1.0 - aq);
            let tail = 2.0 * head / (1.0 - growth);
            if tail < tol {
                return Ok(Evaluation { value: acc * pm_prefactor(m), error_estimate: tail * pm_prefactor(m).abs() });
            }
        }
        n += 1;
        if n > 1_000_000 {
            return Err(Error::Convergence("P_m window exceeded 10^6 terms".into()));
        }
    }
}

/// The exact rational function `f_{n,m}(z, w) = z^{-n} N(z, w) / (z - w)^{m+1}`
/// with `N = sum_{i <= min(m, n)} binom(n, i) w^{n-i} (z - w)^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct F0Kernel {
    pub n: i64,
    pub m: i64,
    /// numerator coefficients keyed by `(z exponent, w exponent)`
    pub numerator: BTreeMap<(i64, i64), Q>,
    pub z_power: i64,
    pub zw_power: i64,
}

pub fn f0_kernel(n: i64, m: i64) -> Result<F0Kernel> {
    if n < 0 || m < 0 {
        return Err(Error::InvalidArgument(format!("f0 kernel needs n, m >= 0, got ({n}, {m})")));
    }
    let mut numerator: BTreeMap<(i64, i64), Q> = BTreeMap::new();
    for i in 0..=m.min(n) {
        let c = binom_i(n, i);
        for j in 0..=i {
            // (z - w)^i = sum_j binom(i, j) z^{i-j} (-w)^j
            let sign = if j % 2 == 0 { qi(1) } else { qi(-1) };
            let key = (i - j, n - i + j);
            *numerator.entry(key).or_insert_with(Q::zero) += &c * binom_i(i, j) * sign;
        }
    }
    numerator.retain(|_, c| !c.is_zero());
    Ok(F0Kernel { n, m, numerator, z_power: n, zw_power: m + 1 })
}

impl F0Kernel {
    pub fn eval<F: Field>(&self, z: &F, w: &F) -> Result<F> {
        let zw = z.clone() - w.clone();
        if z.is_zero() || zw.is_zero() {
            return Err(Error::Pole("f0 kernel evaluated on z = 0 or z = w".into()));
        }
        let mut num = F::zero();
        for ((a, b), c) in &self.numerator {
            num = num + F::from_q(c) * z.powi(*a) * w.powi(*b);
        }
        Ok(num * z.powi(-self.z_power) * zw.powi(-self.zw_power))
    }
}

/// Coefficients of the `|z| > |w|` expansion of `f_{n,m}`, keyed by
/// `(z exponent, w exponent)`, for all `w` exponents below `order`. Obtained
/// by multiplying the numerator into `(z - w)^{-m-1} = sum_k binom(m+k, k) w^k z^{-m-1-k}`.
pub fn f0_iota(n: i64, m: i64, order: i64) -> Result<BTreeMap<(i64, i64), Q>> {
    let kern = f0_kernel(n, m)?;
    let mut out: BTreeMap<(i64, i64), Q> = BTreeMap::new();
    for ((a, b), c) in &kern.numerator {
        for k in 0..(order - b).max(0) {
            let key = (a - kern.z_power - m - 1 - k, b + k);
            *out.entry(key).or_insert_with(Q::zero) += c * binom_i(m + k, k);
        }
    }
    out.retain(|_, c| !c.is_zero());
    Ok(out)
}

/// Resums an `f0_iota` table at numeric `z, w`.
pub fn resum_iota(table: &BTreeMap<(i64, i64), Q>, z: C64, w: C64) -> C64 {
    table.iter().fold(C64::new(0.0, 0.0), |acc, ((a, b), c)| {
        acc + c.to_c64() * z.powi(*a as i32) * w.powi(*b as i32)
    })
}

/// A bound on the part of the `f0_iota` expansion with `w` exponent at or
/// above `order`, for `|w| < |z|`.
pub fn iota_tail_bound(n: i64, m: i64, order: i64, z_abs: f64, w_abs: f64) -> f64 {
    let r = w_abs / z_abs;
    if r >= 1.0 {
        return f64::INFINITY;
    }
    // each coefficient is binom(n + j, m) on z^{-n-j-1} w^{n+j-m}
    let mut total = 0.0;
    let mut j = (order + m - n).max(0);
    loop {
        let c = q_to_f64(&binom_i(n + j, m));
        let t = c * z_abs.powi(-(n + j + 1) as i32) * w_abs.powi((n + j - m) as i32);
        total += t;
        if t < 1e-30 * total.max(1e-300) || j > order + m + 10_000 {
            return total;
        }
        j += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use num_complex::ComplexFloat;

    #[test]
    fn bernoulli_examples() {
        assert_eq!(bernoulli(0), qi(1));
        assert_eq!(bernoulli(1), q(-1, 2));
        assert_eq!(bernoulli(2), q(1, 6));
        assert_eq!(bernoulli(3), qi(0));
        assert_eq!(bernoulli(4), q(-1, 30));
        assert_eq!(bernoulli(12), q(-691, 2730));
        for k in (3..30).step_by(2) {
            assert_eq!(bernoulli(k), qi(0));
        }
    }

    #[test]
    fn eisenstein_examples() {
        assert!(eisenstein(3, 10).unwrap().is_zero());
        let e2 = eisenstein(2, 4).unwrap();
        assert_eq!(
            e2,
            TruncatedSeries::from_coeffs("q", [(0, q(-1, 12)), (1, qi(2)), (2, qi(6)), (3, qi(8))], 4)
        );
        let e4 = eisenstein(4, 3).unwrap();
        assert_eq!(e4, TruncatedSeries::from_coeffs("q", [(0, q(1, 720)), (1, q(1, 3)), (2, qi(3))], 3));
        assert!(eisenstein(1, 3).is_err());
    }

    #[test]
    fn eisenstein_matches_divisor_oracle() {
        for k in [2i64, 4, 6, 8] {
            let e = eisenstein(k, 21).unwrap();
            let kf = Q::from_integer(factorial(k as u64 - 1));
            for n in 1..=20i64 {
                let mut s = Q::zero();
                for d in (1..=n).filter(|d| n % d == 0) {
                    s += qi(d).pow(k as i32 - 1);
                }
                assert_eq!(e.coeff(n), qi(2) * s / &kf, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn memo_is_thread_safe() {
        let handles: Vec<_> = (0..8)
            .map(|i| std::thread::spawn(move || eisenstein(2 + 2 * (i % 3), 15).unwrap()))
            .collect();
        let out: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for (i, s) in out.iter().enumerate() {
            assert_eq!(*s, eisenstein(2 + 2 * (i as i64 % 3), 15).unwrap());
        }
    }

    fn tau2i() -> ModularPoint {
        ModularPoint::new(C64::new(0.0, 2.0), 12).unwrap()
    }

    #[test]
    fn p1_leading_term() {
        let mp = tau2i();
        for r in [1e-2, 1e-3] {
            let z = C64::new(r, r / 2.0);
            let v = weierstrass_p(1, z, &mp, 40).unwrap().value;
            assert!((v - z.inv()).norm() < 10.0 * z.norm());
        }
        assert!(matches!(weierstrass_p(1, C64::new(0.0, 0.0), &mp, 40), Err(Error::Pole(_))));
    }

    #[test]
    fn p1_global_agrees_with_laurent() {
        let mp = tau2i();
        for z in [C64::new(0.5, 0.3), C64::new(-1.2, 0.8), C64::new(0.1, -1.9)] {
            let l = weierstrass_p(1, z, &mp, 40).unwrap();
            let g = p1_global(z, &mp).unwrap();
            assert!((l.value - g).norm() < 1e-12, "z={z}: {} vs {g}", l.value);
        }
    }

    #[test]
    fn p2_is_wp_plus_e2() {
        let mp = tau2i();
        let (e2, _) = eval_q_series(&eisenstein(2, mp.q_order).unwrap(), mp.q);
        for z in [C64::new(0.7, 0.2), C64::new(-0.4, 1.1)] {
            let p2 = weierstrass_p(2, z, &mp, 40).unwrap().value;
            let wp = weierstrass_wp_qseries(z, &mp);
            assert!((p2 - wp - e2).norm() < 1e-11, "z={z}");
        }
    }

    #[test]
    fn derivative_relation() {
        let mp = tau2i();
        let h = 1e-5;
        for k in 1..5i64 {
            let z = C64::new(0.6, 0.45);
            let fp = weierstrass_p(k, z + h, &mp, 40).unwrap().value;
            let fm = weierstrass_p(k, z - h, &mp, 40).unwrap().value;
            let d = (fp - fm) / (2.0 * h);
            let next = weierstrass_p(k + 1, z, &mp, 40).unwrap().value;
            let expect = -d / k as f64;
            assert!((next - expect).norm() / next.norm() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn power_sums_match_direct_sums() {
        let x = C64::new(0.3, 0.2);
        for k in 0..6usize {
            let direct: C64 = (1..400).map(|n| x.powi(n) * (n as f64).powi(k as i32)).sum();
            assert!((power_sum(k, x).unwrap() - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn pm_direct_matches_qseries() {
        let mp = tau2i();
        for m in 1..5 {
            for z in [C64::new(-3.0, 0.4), C64::new(-6.0, -1.0)] {
                let d = pm_genus1(m, z, &mp, 1e-13).unwrap();
                let s = pm_qseries(m, z, 12).unwrap();
                let (v, _) = (eval_series_c(&s, mp.q), 0.0);
                assert!((d.value - v).norm() < 1e-10 * (1.0 + v.norm()), "m={m} z={z}");
            }
        }
    }

    fn eval_series_c(s: &TruncatedSeries<C64>, x: C64) -> C64 {
        s.terms().fold(C64::new(0.0, 0.0), |a, (e, c)| a + c * x.powi(e as i32))
    }

    #[test]
    fn pm_symmetric_point_matches_doubled_window() {
        let mp = ModularPoint::new(C64::new(0.1, 0.8), 30).unwrap();
        // q_z = q^{1/2}
        let z = mp.period() / 2.0;
        let v = pm_genus1(1, z, &mp, 1e-14).unwrap();
        let x = z.exp();
        let one = C64::new(1.0, 0.0);
        let window = |n_max: i32| -> C64 {
            let mut s = C64::new(0.0, 0.0);
            for n in 1..=n_max {
                s += x.powi(n) / (one - mp.q.powi(n));
                s -= (mp.q / x).powi(n) / (one - mp.q.powi(n));
            }
            -s
        };
        assert!((v.value - window(400)).norm() < 1e-12);
        assert!((window(200) - window(400)).norm() < 1e-12);
        assert!(v.error_estimate < 1e-13);
    }

    #[test]
    fn pm_rejects_outside_annulus() {
        let mp = tau2i();
        assert!(matches!(pm_genus1(2, C64::new(0.5, 0.0), &mp, 1e-12), Err(Error::Convergence(_))));
        assert!(pm_genus1(0, C64::new(-1.0, 0.0), &mp, 1e-12).is_err());
    }

    #[test]
    fn pm_q_to_zero_limit() {
        // at q = 0 only the n > 0 terms survive: P_2 -> x/(1-x)^2
        let z = C64::new(-0.8, 0.3);
        let x = z.exp();
        let s = pm_qseries(2, z, 5).unwrap();
        let expect = x / ((1.0 - x) * (1.0 - x));
        assert!((s.coeff(0) - expect).norm() < 1e-13);
        let mp = ModularPoint::new(C64::new(0.0, 30.0), 5).unwrap();
        let d = pm_genus1(2, z, &mp, 1e-14).unwrap();
        assert!((d.value - expect).norm() < 1e-12);
    }

    #[test]
    fn pm2_vs_weierstrass_offset_is_measured() {
        let mp = tau2i();
        let mut offsets = Vec::new();
        for z in [C64::new(-0.3, 0.5), C64::new(-1.1, -0.7), C64::new(-0.6, 2.0)] {
            let a = weierstrass_p(2, z, &mp, 40).unwrap().value;
            let b = pm_genus1(2, z, &mp, 1e-14).unwrap().value;
            offsets.push(b - a);
        }
        for o in &offsets {
            assert!((o - offsets[0]).norm() < 1e-10);
        }
        assert!(offsets[0].norm() < 1e-10);
        // P_1 conventions differ by the constant 1/2
        let z = C64::new(-0.4, 0.9);
        let a = weierstrass_p(1, z, &mp, 40).unwrap().value;
        let b = pm_genus1(1, z, &mp, 1e-14).unwrap().value;
        assert!((b - a - 0.5).norm() < 1e-10);
    }

    #[test]
    fn f0_examples() {
        let k = f0_kernel(1, 0).unwrap();
        let (z, w) = (q(5, 2), q(1, 3));
        assert_eq!(k.eval(&z, &w).unwrap(), &w / (&z * (&z - &w)));
        let k00 = f0_kernel(0, 0).unwrap();
        assert_eq!(k00.eval(&z, &w).unwrap(), Q::one() / (&z - &w));
        let io = f0_iota(1, 0, 6).unwrap();
        let expect: BTreeMap<(i64, i64), Q> = (0..5).map(|i| ((-i - 2, i + 1), qi(1))).collect();
        assert_eq!(io, expect);
        assert!(!io.contains_key(&(-1, 0)));
    }

    #[test]
    fn f0_iota_matches_closed_sum() {
        // sum_j binom(n+j, m) z^{-n-j-1} w^{n+j-m}
        for n in 0..5 {
            for m in 0..5 {
                let io = f0_iota(n, m, 25).unwrap();
                let mut closed = BTreeMap::new();
                for j in 0..40i64 {
                    let c = binom_i(n + j, m);
                    let wexp = n + j - m;
                    if !c.is_zero() && wexp < 25 {
                        closed.insert((-n - j - 1, wexp), c);
                    }
                }
                assert_eq!(io, closed, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn f0_iota_resums() {
        let zs = [C64::new(2.0, 0.0), C64::from_polar(2.0, 1.0), C64::from_polar(2.0, -2.3)];
        let ws = [C64::new(1.0, 0.0), C64::from_polar(1.0, 2.0), C64::from_polar(1.0, -0.7)];
        for n in 0..4 {
            for m in 0..4 {
                let kern = f0_kernel(n, m).unwrap();
                let t30 = f0_iota(n, m, 30).unwrap();
                let t50 = f0_iota(n, m, 50).unwrap();
                for (&z, &w) in zs.iter().zip(&ws) {
                    let exact = kern.eval(&z, &w).unwrap();
                    let bound = iota_tail_bound(n, m, 30, 2.0, 1.0);
                    assert!((resum_iota(&t30, z, w) - exact).abs() <= bound * (1.0 + 1e-9) + 1e-14);
                    assert!((resum_iota(&t50, z, w) - exact).abs() < 1e-10, "n={n} m={m}");
                }
            }
        }
    }
}
