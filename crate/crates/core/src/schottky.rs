//! Handles, sewing and the genus-`g` forms built from Schottky data.
//!
//! A genus-`g` surface is presented as the sphere with `g` pairs of points
//! `w_a, w_{-a}` identified through `z z' = rho_a`. Correlation functions at
//! genus `g` are basis sums of genus-zero functions with a dual pair of states
//! at every handle, each handle weighted by `rho_a^{wt}`.
//!
//! The index set of the matrices below is `I = {±1, ..., ±g}` in the order
//! `1, -1, 2, -2, ...`, crossed with modes `0 <= m < M`. Derivatives
//! `∂^{(m)}` are Taylor-normalized (divided by `m!`).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::complex::genus0::Insertion;
use crate::scalar::C64;
use crate::series::TruncatedSeries;
use crate::voa::{fock_level, FockState, FockVector};
use crate::{exec, Error, Result};

const POINT_TOL: f64 = 1e-12;

/// A genus-zero correlation function `F(u'; x; u)` to be sewn.
pub type SphereFunction<'a> = dyn Fn(&FockVector, &[Insertion<C64>], &FockVector) -> Result<C64> + Sync + 'a;

/// Where a handle is attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum HandleSlots {
    /// The out and in states at `infinity` and `0`: sewing gives the trace.
    Boundary,
    /// Dual state at the first point, basis state at the second.
    Points(C64, C64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SewingData {
    pub rho: C64,
    pub slots: HandleSlots,
    pub disk_radii: (f64, f64),
    /// Largest weight the basis sums may reach.
    pub fock_cutoff: i64,
}

impl SewingData {
    pub fn boundary(rho: C64) -> Self {
        SewingData { rho, slots: HandleSlots::Boundary, disk_radii: (1.0, 1.0), fock_cutoff: 12 }
    }

    pub fn points(rho: C64, zeta1: C64, zeta2: C64, disk_radii: (f64, f64)) -> Result<Self> {
        let sd = SewingData { rho, slots: HandleSlots::Points(zeta1, zeta2), disk_radii, fock_cutoff: 12 };
        sd.validate()?;
        Ok(sd)
    }

    pub fn validate(&self) -> Result<()> {
        let (r1, r2) = self.disk_radii;
        if !(r1 > 0.0 && r2 > 0.0) {
            return Err(Error::InvalidArgument("disk radii must be positive".into()));
        }
        if self.rho.norm() > r1 * r2 {
            return Err(Error::InvalidArgument(format!(
                "|rho| = {} exceeds r1 r2 = {}",
                self.rho.norm(),
                r1 * r2
            )));
        }
        if let HandleSlots::Points(a, b) = self.slots {
            if (a - b).norm() < POINT_TOL {
                return Err(Error::InvalidArgument("sewing points coincide".into()));
            }
        }
        Ok(())
    }
}

/// `(-1)^{len} lambda / z_lambda`, the dual of a partition state under the
/// invariant form.
pub fn dual_state(s: &FockState) -> FockVector {
    let sign = if s.len().is_multiple_of(2) { 1 } else { -1 };
    let c = crate::scalar::qi(sign) / s.z_lambda();
    FockVector::basis(s.clone(), i64::MAX).scale(&c)
}

/// Series in several variables, each truncated at its own order.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSeries {
    vars: Vec<String>,
    orders: Vec<i64>,
    coeffs: BTreeMap<Vec<i64>, C64>,
}

impl MultiSeries {
    pub fn zero(vars: Vec<String>, orders: Vec<i64>) -> Self {
        assert_eq!(vars.len(), orders.len());
        MultiSeries { vars, orders, coeffs: BTreeMap::new() }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn orders(&self) -> &[i64] {
        &self.orders
    }

    pub fn coeff(&self, idx: &[i64]) -> C64 {
        self.coeffs.get(idx).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &C64)> {
        self.coeffs.iter()
    }

    pub fn add_term(&mut self, idx: Vec<i64>, c: C64) {
        if idx.iter().zip(&self.orders).any(|(k, o)| k >= o) || c == C64::default() {
            return;
        }
        *self.coeffs.entry(idx).or_default() += c;
    }

    /// Sums the truncated series at the given values of the variables.
    pub fn eval(&self, at: &[C64]) -> C64 {
        self.coeffs
            .iter()
            .map(|(idx, c)| idx.iter().zip(at).fold(*c, |acc, (k, x)| acc * x.powi(*k as i32)))
            .sum()
    }

    /// Sets variable `i` to zero and drops it.
    pub fn at_zero(&self, i: usize) -> MultiSeries {
        let mut vars = self.vars.clone();
        let mut orders = self.orders.clone();
        vars.remove(i);
        orders.remove(i);
        let mut out = MultiSeries::zero(vars, orders);
        for (idx, c) in &self.coeffs {
            if idx[i] == 0 {
                let mut j = idx.clone();
                j.remove(i);
                out.add_term(j, *c);
            }
        }
        out
    }

    /// The one-variable series, if there is exactly one variable.
    pub fn to_series(&self) -> Result<TruncatedSeries<C64>> {
        if self.vars.len() != 1 {
            return Err(Error::InvalidArgument(format!("{} variables, expected 1", self.vars.len())));
        }
        let terms = self.coeffs.iter().map(|(k, c)| (k[0], *c));
        Ok(TruncatedSeries::from_coeffs(&self.vars[0], terms, self.orders[0]))
    }

    pub fn max_abs_diff(&self, other: &MultiSeries) -> f64 {
        let keys: std::collections::BTreeSet<_> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.into_iter().map(|k| (self.coeff(k) - other.coeff(k)).norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .coeffs
            .iter()
            .map(|(k, c)| json!({"exponents": k, "re": c.re, "im": c.im}))
            .collect();
        json!({"vars": self.vars, "orders": self.orders, "terms": terms})
    }
}

fn is_vacuum(v: &FockVector) -> bool {
    v.len() == 1 && v.coeff(&FockState::vacuum()) == crate::scalar::qi(1)
}

/// States `b` with the dual `b-bar` for one handle at weight `k`.
fn handle_pairs(k: i64) -> Vec<(FockVector, FockVector)> {
    fock_level(k)
        .into_iter()
        .map(|s| (dual_state(&s), FockVector::basis(s, i64::MAX)))
        .collect()
}

/// Sums genus-zero functions over dual pairs at every handle. At most the
/// first handle may be a boundary handle; then `out` and `inp` must be the
/// vacuum. The variable of handle `a` is `rho{a}` (1-based).
pub fn sewn_series(
    eval: &SphereFunction,
    out: &FockVector,
    ins: &[Insertion<C64>],
    inp: &FockVector,
    handles: &[HandleSlots],
    orders: &[i64],
) -> Result<MultiSeries> {
    sewn_series_with(eval, out, ins, inp, handles, orders, None)
}

/// An operator applied to the basis state of one handle before sewing.
pub type HandleOperator<'a> = (usize, &'a (dyn Fn(&FockVector) -> Result<FockVector> + Sync));

/// [`sewn_series`] with the basis state `b` of one handle replaced by
/// `op(b)`; the weight `rho^{wt(b)}` is unchanged.
pub fn sewn_series_with(
    eval: &SphereFunction,
    out: &FockVector,
    ins: &[Insertion<C64>],
    inp: &FockVector,
    handles: &[HandleSlots],
    orders: &[i64],
    modify: Option<HandleOperator>,
) -> Result<MultiSeries> {
    if handles.len() != orders.len() {
        return Err(Error::InvalidArgument("one order per handle is required".into()));
    }
    if handles.iter().skip(1).any(|h| *h == HandleSlots::Boundary) {
        return Err(Error::InvalidArgument("only the first handle may use the boundary slots".into()));
    }
    let boundary = handles.first() == Some(&HandleSlots::Boundary);
    if boundary && !(is_vacuum(out) && is_vacuum(inp)) {
        return Err(Error::InvalidArgument("a boundary handle replaces the end states, which must be the vacuum".into()));
    }
    let mut idxs: Vec<Vec<i64>> = vec![vec![]];
    for o in orders {
        idxs = idxs.into_iter().flat_map(|v| (0..*o).map(move |k| [v.clone(), vec![k]].concat())).collect();
    }
    let levels: Vec<Vec<Vec<(FockVector, FockVector)>>> =
        orders.iter().map(|o| (0..*o).map(handle_pairs).collect()).collect();
    let values = exec::map_collect(&idxs, |idx| -> Result<C64> {
        let mut combos: Vec<Vec<&(FockVector, FockVector)>> = vec![vec![]];
        for (h, k) in idx.iter().enumerate() {
            combos = combos
                .into_iter()
                .flat_map(|c| levels[h][*k as usize].iter().map(move |p| [c.clone(), vec![p]].concat()))
                .collect();
        }
        let mut acc = C64::default();
        for combo in combos {
            let mut all = ins.to_vec();
            let (mut o, mut i) = (out.clone(), inp.clone());
            for (h, (bar, b)) in combo.into_iter().enumerate() {
                let b = match modify {
                    Some((mh, op)) if mh == h => op(b)?,
                    _ => b.clone(),
                };
                match handles[h] {
                    HandleSlots::Boundary => {
                        o = b.clone();
                        i = b.clone();
                    }
                    HandleSlots::Points(z1, z2) => {
                        all.push(Insertion::new(bar.clone(), z1));
                        all.push(Insertion::new(b, z2));
                    }
                }
            }
            acc += eval(&o, &all, &i)?;
        }
        Ok(acc)
    });
    let vars = (1..=handles.len()).map(|a| format!("rho{a}")).collect();
    let mut s = MultiSeries::zero(vars, orders.to_vec());
    for (idx, v) in idxs.into_iter().zip(values) {
        s.add_term(idx, v?);
    }
    Ok(s)
}

/// Attaches one handle: the `rho`-series whose `rho^k` coefficient is the
/// basis sum of the double insertion at weight `k`.
pub fn rho_sew(
    eval: &SphereFunction,
    out: &FockVector,
    ins: &[Insertion<C64>],
    inp: &FockVector,
    sd: &SewingData,
    rho_order: i64,
) -> Result<TruncatedSeries<C64>> {
    sd.validate()?;
    if rho_order > sd.fock_cutoff {
        return Err(Error::InvalidArgument(format!(
            "rho order {rho_order} exceeds the Fock cutoff {}",
            sd.fock_cutoff
        )));
    }
    let s = sewn_series(eval, out, ins, inp, std::slice::from_ref(&sd.slots), &[rho_order])?;
    Ok(s.to_series()?.with_var("rho"))
}

/// Moves torus insertions `(v, z)` to the sphere as `(e^{z L(0)} v, e^z)`,
/// so boundary sewing reproduces the genus-one trace. The weight factors are
/// complex, so the result is a linear combination of insertion lists, one per
/// choice of homogeneous component at every slot.
pub fn exp_chart(ins: &[Insertion<C64>]) -> Vec<(C64, Vec<Insertion<C64>>)> {
    let mut out = vec![(C64::new(1.0, 0.0), Vec::new())];
    for x in ins {
        let p = x.point.exp();
        let parts = x.state.homogeneous_parts();
        out = out
            .into_iter()
            .flat_map(|(c, list)| {
                parts.iter().map(move |(w, part)| {
                    let mut l = list.clone();
                    l.push(Insertion::new(part.with_cutoff(i64::MAX), p));
                    (c * p.powi(*w as i32), l)
                })
            })
            .collect();
    }
    out
}

/// Parameters of a genus-`g` Schottky presentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchottkyData {
    pub genus: usize,
    pub rho: Vec<C64>,
    /// `(w_a, w_{-a})` per handle.
    pub points: Vec<(C64, C64)>,
    pub p: i64,
    /// Laurent coefficients `(exponent, value)` of `f_l`, `l = 0..=2p-2`.
    /// Empty means every `f_l` is zero.
    #[serde(default)]
    pub f_coeffs: Vec<Vec<(i64, C64)>>,
    pub mode_cutoff: usize,
    pub neumann_order: usize,
}

impl SchottkyData {
    pub fn validate(&self) -> Result<()> {
        if self.genus == 0 || self.rho.len() != self.genus || self.points.len() != self.genus {
            return Err(Error::InvalidArgument("need one rho and one point pair per handle, genus >= 1".into()));
        }
        if self.p < 1 {
            return Err(Error::InvalidArgument("weight p must be at least 1".into()));
        }
        if self.mode_cutoff < 1 {
            return Err(Error::InvalidArgument("mode cutoff must be at least 1".into()));
        }
        if !self.f_coeffs.is_empty() && self.f_coeffs.len() != (2 * self.p - 1) as usize {
            return Err(Error::InvalidArgument(format!("f_coeffs needs {} entries", 2 * self.p - 1)));
        }
        if self.rho.iter().any(|r| r.norm() == 0.0) {
            return Err(Error::InvalidArgument("rho_a must be nonzero".into()));
        }
        let pts: Vec<C64> = self.points.iter().flat_map(|(a, b)| [*a, *b]).collect();
        for i in 0..pts.len() {
            for j in 0..i {
                if (pts[i] - pts[j]).norm() < POINT_TOL {
                    return Err(Error::InvalidArgument("Schottky points w_a must be distinct".into()));
                }
            }
        }
        Ok(())
    }

    /// Signed handle indices in matrix order.
    pub fn index_set(&self) -> Vec<i64> {
        (1..=self.genus as i64).flat_map(|a| [a, -a]).collect()
    }

    pub fn point(&self, a: i64) -> C64 {
        let (w, wbar) = self.points[(a.unsigned_abs() - 1) as usize];
        if a > 0 {
            w
        } else {
            wbar
        }
    }

    pub fn rho_of(&self, a: i64) -> C64 {
        self.rho[(a.unsigned_abs() - 1) as usize]
    }

    /// Sewing data for every handle at its finite points, dual state at
    /// `w_{-a}` and basis state at `w_a`.
    pub fn handle_slots(&self) -> Vec<HandleSlots> {
        self.points.iter().map(|(w, wbar)| HandleSlots::Points(*wbar, *w)).collect()
    }
}

/// Generalized binomial coefficient in floating point.
fn binom_f(n: i64, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `sqrt(rho)^k` on the principal branch.
fn half_power(sqrt_rho: C64, k: i64) -> C64 {
    sqrt_rho.powi(k as i32)
}

/// A value carrying its form degrees, e.g. `dx^p dy^{1-p}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Form {
    pub value: C64,
    pub degrees: Vec<(String, i64)>,
}

/// The Neumann partial sum of `(I - R~)^{-1}`.
#[derive(Clone, Debug)]
pub struct NeumannInverse {
    pub matrix: DMatrix<C64>,
    pub order: usize,
    /// Frobenius norm of the first omitted term `R~^{K+1}`.
    pub error_proxy: f64,
    /// Set when the term norms stop decreasing.
    pub diverging: bool,
}

pub fn neumann_inverse(rt: &DMatrix<C64>, order: usize) -> NeumannInverse {
    let n = rt.nrows();
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    let mut prev = term.norm();
    let mut diverging = false;
    for k in 1..=order + 1 {
        term = &term * rt;
        let norm = term.norm();
        if k >= 2 && norm > 0.0 && norm >= prev {
            diverging = true;
        }
        prev = norm;
        if k <= order {
            sum += &term;
        }
    }
    if order == 0 && prev >= 1.0 {
        diverging = true;
    }
    NeumannInverse { matrix: sum, order, error_proxy: prev, diverging }
}

/// Cached matrices and evaluators of the genus-`g` forms.
#[derive(Clone, Debug)]
pub struct GenusGForms {
    pub data: SchottkyData,
    pub r: DMatrix<C64>,
    pub rtilde: DMatrix<C64>,
    pub neumann: NeumannInverse,
    sqrt_rho: Vec<C64>,
}

/// `psi_p^{(0)}(x, y) = 1/(x - y) + sum_l f_l(x) y^l`.
pub fn psi0(sd: &SchottkyData, x: C64, y: C64) -> Result<C64> {
    d_psi0(sd, 0, 0, x, y)
}

/// `∂^{(m)} f_l(x)`.
fn d_f(sd: &SchottkyData, l: usize, m: i64, x: C64) -> Result<C64> {
    let Some(terms) = sd.f_coeffs.get(l) else {
        return Ok(C64::default());
    };
    let mut acc = C64::default();
    for (k, c) in terms {
        let b = binom_f(*k, m);
        if b == 0.0 {
            continue;
        }
        if k - m < 0 && x.norm() < POINT_TOL {
            return Err(Error::Pole(format!("f_{l} is singular at 0")));
        }
        acc += c * b * x.powi((k - m) as i32);
    }
    Ok(acc)
}

/// `E_m^n(y) = sum_l ∂^{(m)} f_l(y) ∂^{(n)} y^l`.
pub fn e_mn(sd: &SchottkyData, m: i64, n: i64, y: C64) -> Result<C64> {
    let mut acc = C64::default();
    for l in 0..sd.f_coeffs.len() {
        let b = binom_f(l as i64, n);
        if b != 0.0 {
            acc += d_f(sd, l, m, y)? * b * y.powi(l as i32 - n as i32);
        }
    }
    Ok(acc)
}

/// `∂_x^{(m)} ∂_y^{(n)} psi_p^{(0)}(x, y)`.
pub fn d_psi0(sd: &SchottkyData, m: i64, n: i64, x: C64, y: C64) -> Result<C64> {
    if (x - y).norm() < POINT_TOL {
        return Err(Error::Pole("psi0 at x = y".into()));
    }
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let pole = (x - y).powi(-(m + n + 1) as i32) * (sign * binom_f(m + n, n));
    let mut acc = pole;
    for l in 0..sd.f_coeffs.len() {
        let b = binom_f(l as i64, n);
        if b != 0.0 {
            acc += d_f(sd, l, m, x)? * b * y.powi(l as i32 - n as i32);
        }
    }
    Ok(acc)
}

fn sign_p(p: i64) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl GenusGForms {
    fn sqrt_rho_of(&self, a: i64) -> C64 {
        self.sqrt_rho[(a.unsigned_abs() - 1) as usize]
    }

    fn dim(&self) -> usize {
        2 * self.data.genus * self.data.mode_cutoff
    }

    fn index(&self) -> Vec<(i64, i64)> {
        let m_cut = self.data.mode_cutoff as i64;
        self.data.index_set().into_iter().flat_map(|a| (0..m_cut).map(move |m| (a, m))).collect()
    }

    /// `R_{ab}(m, n)` for any modes.
    pub fn r_entry(&self, a: i64, m: i64, b: i64, n: i64) -> Result<C64> {
        let sd = &self.data;
        let s = sign_p(sd.p);
        if a == -b {
            let w = sd.point(-a);
            Ok(half_power(self.sqrt_rho_of(a), m + n + 1) * e_mn(sd, m, n, w)? * s)
        } else {
            let d = d_psi0(sd, m, n, sd.point(-a), sd.point(b))?;
            Ok(half_power(self.sqrt_rho_of(a), m + 1) * half_power(self.sqrt_rho_of(b), n) * d * s)
        }
    }

    /// `p_a(x, m) = rho_a^{m/2} ∂^{(0,m)} psi0(x, w_a)`.
    pub fn p_entry(&self, a: i64, m: i64, x: C64) -> Result<C64> {
        Ok(half_power(self.sqrt_rho_of(a), m) * d_psi0(&self.data, 0, m, x, self.data.point(a))?)
    }

    /// `∂_y^{(j)} q_a(y; m)`.
    pub fn q_entry(&self, a: i64, m: i64, j: i64, y: C64) -> Result<C64> {
        let d = d_psi0(&self.data, m, j, self.data.point(-a), y)?;
        Ok(half_power(self.sqrt_rho_of(a), m + 1) * d * sign_p(self.data.p))
    }

    fn check_off_points(&self, z: C64) -> Result<()> {
        for a in self.data.index_set() {
            if (z - self.data.point(a)).norm() < POINT_TOL {
                return Err(Error::Pole(format!("evaluation at w_{a}")));
            }
        }
        Ok(())
    }

    /// The row `p~(x) = p(x) Delta`.
    pub fn p_tilde_row(&self, x: C64) -> Result<DVector<C64>> {
        let shift = 2 * self.data.p - 1;
        let v: Result<Vec<C64>> = self.index().into_iter().map(|(a, n)| self.p_entry(a, n + shift, x)).collect();
        Ok(DVector::from_vec(v?))
    }

    pub fn q_column(&self, j: i64, y: C64) -> Result<DVector<C64>> {
        let v: Result<Vec<C64>> = self.index().into_iter().map(|(a, m)| self.q_entry(a, m, j, y)).collect();
        Ok(DVector::from_vec(v?))
    }

    /// `∂_y^{(j)} psi_p(x, y)`.
    pub fn psi_p_dy(&self, j: i64, x: C64, y: C64) -> Result<C64> {
        self.check_off_points(x)?;
        self.check_off_points(y)?;
        let base = d_psi0(&self.data, 0, j, x, y)?;
        let pt = self.p_tilde_row(x)?;
        let qc = self.q_column(j, y)?;
        Ok(base + (pt.transpose() * &self.neumann.matrix * qc)[(0, 0)])
    }

    pub fn psi_p(&self, x: C64, y: C64) -> Result<C64> {
        self.psi_p_dy(0, x, y)
    }

    pub fn psi_form(&self, x: C64, y: C64) -> Result<Form> {
        Ok(Form {
            value: self.psi_p(x, y)?,
            degrees: vec![("x".into(), self.data.p), ("y".into(), 1 - self.data.p)],
        })
    }

    /// `chi_a(x; l)` for `0 <= l <= 2p - 2`.
    pub fn chi(&self, a: i64, x: C64, l: i64) -> Result<C64> {
        self.check_off_points(x)?;
        let pt = self.p_tilde_row(x)?;
        let col: Result<Vec<C64>> = self.index().into_iter().map(|(b, n)| self.r_entry(b, n, a, l)).collect();
        let col = DVector::from_vec(col?);
        let corr = (pt.transpose() * &self.neumann.matrix * col)[(0, 0)];
        Ok(half_power(self.sqrt_rho_of(a), -l) * (self.p_entry(a, l, x)? + corr))
    }

    /// `theta_a(x; l)` for a handle `a >= 1`, `l = 0..=2p-2`.
    pub fn theta(&self, a: i64, x: C64) -> Result<Vec<C64>> {
        if a < 1 || a as usize > self.data.genus {
            return Err(Error::InvalidArgument(format!("theta needs 1 <= a <= g, got {a}")));
        }
        let p = self.data.p;
        let rho = self.data.rho_of(a);
        (0..=2 * p - 2)
            .map(|l| Ok(self.chi(a, x, l)? + rho.powi((p - 1 - l) as i32) * self.chi(-a, x, 2 * p - 2 - l)? * sign_p(p)))
            .collect()
    }

    pub fn theta_form(&self, a: i64, x: C64) -> Result<Vec<Form>> {
        Ok(self
            .theta(a, x)?
            .into_iter()
            .map(|value| Form { value, degrees: vec![("x".into(), self.data.p)] })
            .collect())
    }
}

/// Assembles `R`, `R~ = R Delta` and the Neumann inverse.
pub fn build_r(sd: &SchottkyData) -> Result<GenusGForms> {
    sd.validate()?;
    let sqrt_rho = sd.rho.iter().map(|r| r.sqrt()).collect();
    let mut forms = GenusGForms {
        data: sd.clone(),
        r: DMatrix::zeros(0, 0),
        rtilde: DMatrix::zeros(0, 0),
        neumann: neumann_inverse(&DMatrix::zeros(0, 0), 0),
        sqrt_rho,
    };
    let dim = forms.dim();
    let index = forms.index();
    let shift = 2 * sd.p - 1;
    let rows = exec::map_collect(&index, |&(a, m)| -> Result<(Vec<C64>, Vec<C64>)> {
        let mut r = Vec::with_capacity(dim);
        let mut rt = Vec::with_capacity(dim);
        for &(b, n) in &index {
            r.push(forms.r_entry(a, m, b, n)?);
            rt.push(forms.r_entry(a, m, b, n + shift)?);
        }
        Ok((r, rt))
    });
    let mut r = DMatrix::zeros(dim, dim);
    let mut rt = DMatrix::zeros(dim, dim);
    for (i, row) in rows.into_iter().enumerate() {
        let (a, b) = row?;
        for j in 0..dim {
            r[(i, j)] = a[j];
            rt[(i, j)] = b[j];
        }
    }
    forms.neumann = neumann_inverse(&rt, sd.neumann_order);
    forms.r = r;
    forms.rtilde = rt;
    Ok(forms)
}

/// The genus-`g` partition function as a series in `rho1, ..., rhog`.
/// Handle 1 uses the boundary slots, the others their finite points.
pub fn genus_g_partition(sd: &SchottkyData, rho_orders: &[i64]) -> Result<MultiSeries> {
    sd.validate()?;
    if !(1..=2).contains(&sd.genus) {
        return Err(Error::Unsupported(format!("genus {} partition (only g = 1, 2)", sd.genus)));
    }
    if rho_orders.len() != sd.genus {
        return Err(Error::InvalidArgument("one rho order per handle is required".into()));
    }
    let mut handles = sd.handle_slots();
    handles[0] = HandleSlots::Boundary;
    let vac = FockVector::vacuum(i64::MAX);
    let eval = |o: &FockVector, x: &[Insertion<C64>], i: &FockVector| crate::complex::genus0::genus0_npoint(o, x, i);
    sewn_series(&eval, &vac, &[], &vac, &handles, rho_orders)
}

/// Genus-`g` `n`-point function with every handle at its finite points, as a
/// series in the `rho_a`.
pub fn genus_g_npoint(sd: &SchottkyData, ins: &[Insertion<C64>], rho_orders: &[i64]) -> Result<MultiSeries> {
    sd.validate()?;
    let vac = FockVector::vacuum(i64::MAX);
    let eval = |o: &FockVector, x: &[Insertion<C64>], i: &FockVector| crate::complex::genus0::genus0_npoint(o, x, i);
    sewn_series(&eval, &vac, ins, &vac, &sd.handle_slots(), rho_orders)
}
