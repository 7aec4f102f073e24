//! The rank-one Heisenberg vertex operator algebra (free boson, c = 1) acting
//! on its own charge-zero Fock module, truncated by weight.
//!
//! A basis state is a partition `n1 >= n2 >= ... >= 1`, standing for
//! `a(-n1)...a(-nk) 1`. The vertex operator of such a state is the normally
//! ordered product of divided derivatives `d^(n_i - 1) a(z)`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::{binom_i, factorial, q, qi, Field, Q};
use crate::series::TruncatedSeries;
use crate::{Error, Result};

/// A Fock basis state, stored as a weakly decreasing list of positive parts.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct FockState {
    parts: Vec<u32>,
}

impl FockState {
    pub fn vacuum() -> Self {
        Self { parts: Vec::new() }
    }

    /// Builds a state from parts in any order; zero parts are rejected.
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidArgument("partition parts must be positive".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn weight(&self) -> i64 {
        self.parts.iter().map(|&p| p as i64).sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn is_vacuum(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn multiplicity(&self, n: u32) -> usize {
        self.parts.iter().filter(|&&p| p == n).count()
    }

    /// `z_lambda = prod n^{m_n} m_n!`, the norm of the state up to sign and
    /// powers of the adjoint parameter.
    pub fn z_lambda(&self) -> Q {
        let mut acc = Q::one();
        let mut i = 0;
        while i < self.parts.len() {
            let n = self.parts[i];
            let m = self.multiplicity(n);
            acc *= Q::from_integer(factorial(m as u64)) * qi(n as i64).pow(m as i32);
            i += m;
        }
        acc
    }

    fn with_part(&self, n: u32) -> Self {
        let pos = self.parts.iter().position(|&p| p < n).unwrap_or(self.parts.len());
        let mut parts = self.parts.clone();
        parts.insert(pos, n);
        Self { parts }
    }

    fn without_part(&self, n: u32) -> Option<Self> {
        let pos = self.parts.iter().position(|&p| p == n)?;
        let mut parts = self.parts.clone();
        parts.remove(pos);
        Some(Self { parts })
    }
}

impl TryFrom<Vec<u32>> for FockState {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FockState> for Vec<u32> {
    fn from(s: FockState) -> Self {
        s.parts
    }
}

impl Ord for FockState {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.weight().cmp(&other.weight()).then_with(|| self.parts.cmp(&other.parts))
    }
}

impl PartialOrd for FockState {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.parts)
    }
}

/// Partitions of `n` with parts at most `max`, largest part first.
fn partitions_of(n: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<FockState>) {
    if n == 0 {
        out.push(FockState { parts: prefix.clone() });
        return;
    }
    for p in (1..=max.min(n)).rev() {
        prefix.push(p);
        partitions_of(n - p, p, prefix, out);
        prefix.pop();
    }
}

/// All basis states of weight below `weight_cutoff`, weight-major then
/// lexicographic in the parts.
pub fn fock_basis(weight_cutoff: i64) -> Vec<FockState> {
    let mut out = Vec::new();
    for w in 0..weight_cutoff.max(0) as u32 {
        let mut level = Vec::new();
        partitions_of(w, w, &mut Vec::new(), &mut level);
        level.sort();
        out.extend(level);
    }
    out
}

/// Basis states of exactly weight `w`.
pub fn fock_level(w: i64) -> Vec<FockState> {
    if w < 0 {
        return Vec::new();
    }
    let mut level = Vec::new();
    partitions_of(w as u32, w as u32, &mut Vec::new(), &mut level);
    level.sort();
    level
}

/// A finite linear combination of basis states. Components of weight at or
/// above `cutoff` are unknown rather than zero.
#[derive(Clone, PartialEq, Debug)]
pub struct FockVector {
    terms: BTreeMap<FockState, Q>,
    cutoff: i64,
}

impl FockVector {
    pub fn zero(cutoff: i64) -> Self {
        Self { terms: BTreeMap::new(), cutoff }
    }

    pub fn basis(state: FockState, cutoff: i64) -> Self {
        let mut v = Self::zero(cutoff);
        v.add_term(state, Q::one());
        v
    }

    pub fn vacuum(cutoff: i64) -> Self {
        Self::basis(FockState::vacuum(), cutoff)
    }

    /// The Heisenberg generator `a = a(-1) 1`.
    pub fn a(cutoff: i64) -> Self {
        Self::basis(FockState { parts: vec![1] }, cutoff)
    }

    /// The conformal vector `omega = 1/2 a(-1)^2 1`.
    pub fn omega(cutoff: i64) -> Self {
        let mut v = Self::zero(cutoff);
        v.add_term(FockState { parts: vec![1, 1] }, q(1, 2));
        v
    }

    pub fn from_terms<I: IntoIterator<Item = (FockState, Q)>>(terms: I, cutoff: i64) -> Self {
        let mut v = Self::zero(cutoff);
        for (s, c) in terms {
            v.add_term(s, c);
        }
        v
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockState, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, s: &FockState) -> Q {
        self.terms.get(s).cloned().unwrap_or_else(Q::zero)
    }

    /// Adds `c * s`, dropping it if the state lies at or beyond the cutoff.
    pub fn add_term(&mut self, s: FockState, c: Q) {
        if c.is_zero() || s.weight() >= self.cutoff {
            return;
        }
        let slot = self.terms.entry(s).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn with_cutoff(&self, cutoff: i64) -> Self {
        Self::from_terms(self.terms.iter().map(|(s, c)| (s.clone(), c.clone())), cutoff)
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::from_terms(self.terms.iter().map(|(s, x)| (s.clone(), x * c)), self.cutoff)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.with_cutoff(self.cutoff.min(other.cutoff));
        for (s, c) in &other.terms {
            out.add_term(s.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Q::one()))
    }

    /// Homogeneous pieces, keyed by weight.
    pub fn homogeneous_parts(&self) -> BTreeMap<i64, FockVector> {
        let mut out: BTreeMap<i64, FockVector> = BTreeMap::new();
        for (s, c) in &self.terms {
            out.entry(s.weight())
                .or_insert_with(|| FockVector::zero(self.cutoff))
                .add_term(s.clone(), c.clone());
        }
        out
    }

    /// The weight if the vector is homogeneous and nonzero.
    pub fn weight(&self) -> Option<i64> {
        let mut ws = self.terms.keys().map(|s| s.weight());
        let w = ws.next()?;
        ws.all(|x| x == w).then_some(w)
    }

    /// Dual-basis pairing: the coefficient of `s`.
    pub fn dual(&self, s: &FockState) -> Q {
        self.coeff(s)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| crate::scalar::q_to_f64(&c.abs())).fold(0.0, f64::max)
    }
}

/// `a(n)` on a single basis state, returning `(coefficient, state)`.
fn heisenberg_on_state(n: i64, s: &FockState) -> Option<(Q, FockState)> {
    match n.cmp(&0) {
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Less => Some((Q::one(), s.with_part((-n) as u32))),
        std::cmp::Ordering::Greater => {
            let m = s.multiplicity(n as u32);
            (m > 0).then(|| (qi(n * m as i64), s.without_part(n as u32).expect("part present")))
        }
    }
}

/// Output cutoff for an operator that shifts weight by `shift`.
fn shifted_cutoff(cutoff: i64, shift: i64) -> i64 {
    cutoff.min(cutoff.saturating_add(shift))
}

pub fn heisenberg_mode(n: i64, v: &FockVector) -> FockVector {
    let mut out = FockVector::zero(shifted_cutoff(v.cutoff, -n));
    for (s, c) in &v.terms {
        if let Some((k, t)) = heisenberg_on_state(n, s) {
            out.add_term(t, c * k);
        }
    }
    out
}

/// Applies the mode `v(n)` for a basis state `v` to a basis state `u`,
/// accumulating `scale * v(n) u` into `out`.
fn vertex_mode_on_state(v: &FockState, n: i64, u: &FockState, scale: &Q, out: &mut FockVector) {
    let w = u.weight();
    let target = n + 1 - v.weight();
    // sum of positive mode indices is at most w; creators absorb the rest
    if target > w {
        return;
    }
    let derivs: Vec<i64> = v.parts.iter().map(|&p| p as i64 - 1).collect();
    let create_budget = w - target;
    let mut modes = Vec::with_capacity(derivs.len());
    enumerate_modes(&derivs, 0, 0, 0, w, create_budget, target, &mut modes, &mut |ms: &[i64]| {
        let mut coeff = scale.clone();
        for (&m, &p) in ms.iter().zip(&derivs) {
            coeff *= binom_i(-m - 1, p);
        }
        if coeff.is_zero() {
            return;
        }
        let mut state = u.clone();
        for &m in ms.iter().filter(|&&m| m > 0) {
            match heisenberg_on_state(m, &state) {
                Some((k, t)) => {
                    coeff *= k;
                    state = t;
                }
                None => return,
            }
        }
        for &m in ms.iter().filter(|&&m| m < 0) {
            state = state.with_part((-m) as u32);
        }
        out.add_term(state, coeff);
    });
}

#[allow(clippy::too_many_arguments)]
fn enumerate_modes(
    derivs: &[i64],
    i: usize,
    pos: i64,
    neg: i64,
    pos_max: i64,
    neg_max: i64,
    target: i64,
    modes: &mut Vec<i64>,
    f: &mut dyn FnMut(&[i64]),
) {
    if i == derivs.len() {
        if pos - neg == target {
            f(modes);
        }
        return;
    }
    // a creator a(m) with |m| <= p is killed by the p-th divided derivative
    for m in (-(neg_max - neg))..=(pos_max - pos) {
        if m == 0 || (m < 0 && -m <= derivs[i]) {
            continue;
        }
        let (p2, n2) = if m > 0 { (pos + m, neg) } else { (pos, neg - m) };
        modes.push(m);
        enumerate_modes(derivs, i + 1, p2, n2, pos_max, neg_max, target, modes, f);
        modes.pop();
    }
}

/// `v(n) u` for arbitrary vectors, extended bilinearly.
pub fn vertex_mode(v: &FockVector, n: i64, u: &FockVector) -> FockVector {
    let mut cutoff = u.cutoff;
    for s in v.terms.keys() {
        cutoff = cutoff.min(shifted_cutoff(u.cutoff, s.weight() - n - 1));
    }
    let mut out = FockVector::zero(cutoff);
    for (vs, vc) in &v.terms {
        for (us, uc) in &u.terms {
            vertex_mode_on_state(vs, n, us, &(vc * uc), &mut out);
        }
    }
    out
}

/// `L(m) v`, the Sugawara form `1/2 sum_j :a(j) a(m-j):`.
pub fn virasoro_mode(m: i64, v: &FockVector) -> FockVector {
    vertex_mode(&FockVector::omega(i64::MAX), m + 1, v)
}

/// Coefficients `c(wt, i, m)` for `m = 0..=i`, read off from the polynomial
/// `binom(wt - 1 + x, i)` in `x`.
pub fn square_bracket_coefficients(wt: i64, i: i64) -> Vec<Q> {
    let mut poly = vec![Q::one()];
    for j in 0..i {
        // multiply by (x + wt - 1 - j)
        let c0 = qi(wt - 1 - j);
        let mut next = vec![Q::zero(); poly.len() + 1];
        for (k, a) in poly.iter().enumerate() {
            next[k] += a * &c0;
            next[k + 1] += a.clone();
        }
        poly = next;
    }
    let fact = Q::from_integer(factorial(i.max(0) as u64));
    poly.into_iter().map(|c| c / &fact).collect()
}

/// Which family a mode belongs to.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    A,
    L,
    State(FockVector),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bracket {
    Round,
    Square,
}

/// A single mode `g(n)` or `g[n]`; the bracket is part of its identity.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeIndex {
    pub generator: Generator,
    pub index: i64,
    pub bracket: Bracket,
}

impl ModeIndex {
    pub fn round(generator: Generator, index: i64) -> Self {
        Self { generator, index, bracket: Bracket::Round }
    }

    pub fn square(generator: Generator, index: i64) -> Self {
        Self { generator, index, bracket: Bracket::Square }
    }

    fn state(&self) -> FockVector {
        match &self.generator {
            Generator::A => FockVector::a(i64::MAX),
            Generator::L => FockVector::omega(i64::MAX),
            Generator::State(v) => v.clone(),
        }
    }

    pub fn apply(&self, u: &FockVector) -> Result<FockVector> {
        match (self.bracket, &self.generator) {
            (Bracket::Round, Generator::A) => Ok(heisenberg_mode(self.index, u)),
            (Bracket::Round, Generator::L) => Ok(virasoro_mode(self.index, u)),
            (Bracket::Round, Generator::State(v)) => Ok(vertex_mode(v, self.index, u)),
            (Bracket::Square, _) => square_bracket_apply(&self.state(), self.index, u),
        }
    }

    /// Parses descriptors such as `{"mode": "a", "n": -1}` or
    /// `{"mode": "L", "n": 0, "bracket": "square"}`.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let n = v["n"].as_i64().ok_or_else(|| Error::Parse("mode descriptor needs integer `n`".into()))?;
        let generator = match v["mode"].as_str() {
            Some("a") => Generator::A,
            Some("L") => Generator::L,
            Some(other) => return Err(Error::Parse(format!("unknown mode generator `{other}`"))),
            None => {
                let parts: Vec<u32> = serde_json::from_value(v["state"].clone())
                    .map_err(|e| Error::Parse(format!("mode descriptor: {e}")))?;
                Generator::State(FockVector::basis(FockState::new(parts)?, i64::MAX))
            }
        };
        let bracket = match v.get("bracket").and_then(|b| b.as_str()) {
            None | Some("round") => Bracket::Round,
            Some("square") => Bracket::Square,
            Some(other) => return Err(Error::Parse(format!("unknown bracket `{other}`"))),
        };
        Ok(Self { generator, index: n, bracket })
    }
}

/// A finite linear combination of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    pub terms: Vec<(Q, ModeIndex)>,
}

impl Operator {
    pub fn single(c: Q, m: ModeIndex) -> Self {
        Self { terms: vec![(c, m)] }
    }

    pub fn apply(&self, u: &FockVector) -> Result<FockVector> {
        let mut out: Option<FockVector> = None;
        for (c, m) in &self.terms {
            let t = m.apply(u)?.scale(c);
            out = Some(match out {
                None => t,
                Some(acc) => acc.add(&t),
            });
        }
        Ok(out.unwrap_or_else(|| FockVector::zero(u.cutoff)))
    }
}

fn square_bracket_apply(v: &FockVector, m: i64, u: &FockVector) -> Result<FockVector> {
    if m < 0 {
        return Err(Error::InvalidArgument(format!("square-bracket conversion needs m >= 0, got {m}")));
    }
    let mfact = Q::from_integer(factorial(m as u64));
    let max_u = u.terms.keys().map(|s| s.weight()).max().unwrap_or(0);
    let mut out: Option<FockVector> = None;
    for (wt, piece) in v.homogeneous_parts() {
        // v(i) u vanishes once i exceeds wt(u) + wt - 1
        for i in m..=(max_u + wt - 1).max(m) {
            let c = square_bracket_coefficients(wt, i).get(m as usize).cloned().unwrap_or_else(Q::zero);
            if c.is_zero() {
                continue;
            }
            let t = vertex_mode(&piece, i, u).scale(&(c * &mfact));
            out = Some(match out {
                None => t,
                Some(acc) => acc.add(&t),
            });
        }
    }
    Ok(out.unwrap_or_else(|| FockVector::zero(u.cutoff)))
}

/// `v[m]` as an operator.
pub fn square_bracket_mode(v: &FockVector, m: i64) -> Operator {
    Operator::single(Q::one(), ModeIndex::square(Generator::State(v.clone()), m))
}

/// `o(v) = v(wt v - 1)`, extended additively over homogeneous pieces.
pub fn zero_mode(v: &FockVector) -> Operator {
    let terms = v
        .homogeneous_parts()
        .into_iter()
        .map(|(wt, piece)| (Q::one(), ModeIndex::round(Generator::State(piece), wt - 1)))
        .collect();
    Operator { terms }
}

/// `<u_out', Y(v, z) u_in>` as a Laurent series in `z`, truncated at
/// `z_order`.
pub fn vertex_matrix_element(
    v: &FockVector,
    u_out: &FockState,
    u_in: &FockState,
    z_order: i64,
) -> TruncatedSeries<Q> {
    let mut coeffs = Vec::new();
    let input = FockVector::basis(u_in.clone(), i64::MAX);
    for (wt, piece) in v.homogeneous_parts() {
        // v(n): weight m -> m + wt - n - 1
        let n = u_in.weight() + wt - 1 - u_out.weight();
        let c = vertex_mode(&piece, n, &input).coeff(u_out);
        coeffs.push((-n - 1, c));
    }
    TruncatedSeries::from_coeffs("z", coeffs, z_order)
}

/// `<u, w>` for the invariant form with adjoint parameter `alpha`:
/// `<lambda, lambda> = (-1)^{len} alpha^{-wt} z_lambda`, orthogonal otherwise.
pub fn bilinear_form(u: &FockVector, w: &FockVector, alpha: &Q) -> Q {
    let mut acc = Q::zero();
    for (s, c) in &u.terms {
        let d = w.coeff(s);
        if d.is_zero() {
            continue;
        }
        acc += c * d * basis_norm(s, alpha);
    }
    acc
}

pub fn basis_norm(s: &FockState, alpha: &Q) -> Q {
    let sign = if s.len().is_multiple_of(2) { Q::one() } else { -Q::one() };
    sign * s.z_lambda() * Field::powi(alpha, -s.weight())
}

/// `u^dagger(n) = (-1)^{wt} alpha^{n + 1 - wt} u(2 wt - n - 2)` for a
/// homogeneous quasiprimary `u`.
pub fn adjoint_mode(u: &FockVector, n: i64, alpha: &Q) -> Result<Operator> {
    let wt = u.weight().ok_or_else(|| Error::InvalidArgument("adjoint needs a homogeneous state".into()))?;
    if alpha.is_zero() {
        return Err(Error::InvalidArgument("adjoint parameter must be nonzero".into()));
    }
    if !virasoro_mode(1, &u.with_cutoff(i64::MAX)).is_zero() {
        return Err(Error::InvalidArgument("adjoint formula needs a quasiprimary state (L(1)u = 0)".into()));
    }
    let sign = if wt % 2 == 0 { Q::one() } else { -Q::one() };
    let scale = sign * Field::powi(alpha, n + 1 - wt);
    Ok(Operator::single(scale, ModeIndex::round(Generator::State(u.clone()), 2 * wt - n - 2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(p: &[u32]) -> FockState {
        FockState::new(p.to_vec()).unwrap()
    }

    fn bv(p: &[u32], cutoff: i64) -> FockVector {
        FockVector::basis(st(p), cutoff)
    }

    fn partition_count(n: usize) -> usize {
        let mut p = vec![0usize; n + 1];
        p[0] = 1;
        for k in 1..=n {
            for m in k..=n {
                p[m] += p[m - k];
            }
        }
        p[n]
    }

    #[test]
    fn basis_examples() {
        assert_eq!(fock_basis(1), vec![FockState::vacuum()]);
        assert_eq!(fock_basis(5).len(), 12);
        assert!(fock_basis(0).is_empty());
        let total: usize = (0..9).map(partition_count).sum();
        assert_eq!(fock_basis(9).len(), total);
        let b = fock_basis(6);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn heisenberg_examples() {
        let v = heisenberg_mode(1, &bv(&[1], 10));
        assert_eq!(v.coeff(&FockState::vacuum()), qi(1));
        assert!(heisenberg_mode(2, &FockVector::vacuum(10)).is_zero());
        assert_eq!(heisenberg_mode(-1, &FockVector::vacuum(10)), bv(&[1], 10));
        assert!(heisenberg_mode(0, &bv(&[2, 1], 10)).is_zero());
        // creation past the cutoff is dropped, annihilation lowers the cutoff
        assert!(heisenberg_mode(-3, &bv(&[2], 5)).is_zero());
        assert_eq!(heisenberg_mode(2, &bv(&[2], 5)).cutoff(), 3);
    }

    #[test]
    fn heisenberg_commutator() {
        let cutoff = 12;
        for s in fock_basis(7) {
            let u = FockVector::basis(s, cutoff);
            for m in -4i64..=4 {
                for n in -4i64..=4 {
                    let lhs = heisenberg_mode(m, &heisenberg_mode(n, &u))
                        .sub(&heisenberg_mode(n, &heisenberg_mode(m, &u)));
                    let rhs = if m + n == 0 { u.scale(&qi(m)) } else { FockVector::zero(cutoff) };
                    let c = lhs.cutoff();
                    assert_eq!(lhs, rhs.with_cutoff(c));
                }
            }
        }
    }

    #[test]
    fn vertex_matrix_examples() {
        let vac = FockState::vacuum();
        let one = vertex_matrix_element(&FockVector::vacuum(10), &vac, &vac, 5);
        assert_eq!(one.coeff(0), qi(1));
        assert_eq!(one.terms().count(), 1);
        let a = FockVector::a(10);
        assert_eq!(vertex_matrix_element(&a, &st(&[1]), &vac, 5).coeff(0), qi(1));
        // a(1) sits at z^{-2} in Y(a, z) = sum a(n) z^{-n-1}
        let down = vertex_matrix_element(&a, &vac, &st(&[1]), 5);
        assert_eq!(down.coeff(-2), qi(1));
        assert_eq!(down.terms().count(), 1);
        // exponents at or beyond z_order are not reported
        assert!(vertex_matrix_element(&a, &st(&[1]), &vac, 0).is_zero());
    }

    #[test]
    fn vacuum_vertex_operator_is_identity() {
        for s in fock_basis(6) {
            let u = FockVector::basis(s, 10);
            assert_eq!(vertex_mode(&FockVector::vacuum(10), -1, &u), u);
            assert!(vertex_mode(&FockVector::vacuum(10), 0, &u).is_zero());
        }
    }

    #[test]
    fn creation_property() {
        // v(-1) 1 = v
        for s in fock_basis(6) {
            let v = FockVector::basis(s, 10);
            assert_eq!(vertex_mode(&v, -1, &FockVector::vacuum(10)), v);
        }
    }

    #[test]
    fn zero_mode_examples() {
        let u = bv(&[2, 1], 10);
        assert!(zero_mode(&FockVector::a(10)).apply(&u).unwrap().is_zero());
        let l0 = zero_mode(&FockVector::omega(10)).apply(&u).unwrap();
        assert_eq!(l0, u.scale(&qi(3)));
        assert_eq!(zero_mode(&FockVector::vacuum(10)).apply(&u).unwrap(), u);
    }

    #[test]
    fn square_bracket_examples() {
        let c = square_bracket_coefficients(1, 0);
        assert_eq!(c, vec![qi(1)]);
        for i in 1..5 {
            assert_eq!(square_bracket_coefficients(1, i)[0], qi(0));
        }
        let a = FockVector::a(10);
        let u = bv(&[2, 1], 10);
        assert!(square_bracket_mode(&a, 0).apply(&u).unwrap().is_zero());
        assert!(square_bracket_mode(&FockVector::vacuum(10), 0).apply(&u).unwrap().is_zero());
        assert!(vertex_mode(&FockVector::vacuum(10), 0, &u).is_zero());
        assert!(square_bracket_mode(&a, -1).apply(&u).is_err());
    }

    fn exp_series(order: i64) -> TruncatedSeries<Q> {
        let terms = (0..order).map(|k| (k, Q::one() / Q::from_integer(factorial(k as u64))));
        TruncatedSeries::from_coeffs("z", terms, order)
    }

    #[test]
    fn square_bracket_matches_coordinate_change() {
        // Y[a, z] = e^z Y(a, e^z - 1), so a[m] = sum_k a(k) [z^{-m-1}] e^z (e^z - 1)^{-k-1}
        let order = 12;
        let e = exp_series(order);
        let em1 = e.clone() - TruncatedSeries::one("z", order);
        let inv = em1.invert().unwrap();
        let a = FockVector::a(30);
        for s in fock_basis(7) {
            let u = FockVector::basis(s, 30);
            for m in 0..4i64 {
                let mut expect = FockVector::zero(30);
                for k in 0..8i64 {
                    let kernel = e.clone() * inv.pow(k as u32 + 1);
                    let c = kernel.known_coeff(-m - 1).expect("within truncation");
                    expect = expect.add(&heisenberg_mode(k, &u).with_cutoff(30).scale(&c));
                }
                let got = square_bracket_mode(&a, m).apply(&u).unwrap();
                assert_eq!(got.with_cutoff(30), expect, "m={m} u={u:?}");
            }
        }
    }

    #[test]
    fn virasoro_examples() {
        let u = bv(&[2, 1], 10);
        assert_eq!(virasoro_mode(0, &u), u.scale(&qi(3)));
        let vac = FockVector::vacuum(20);
        let c11 = virasoro_mode(1, &virasoro_mode(-1, &vac)).sub(&virasoro_mode(-1, &virasoro_mode(1, &vac)));
        assert!(c11.is_zero());
        let c22 = virasoro_mode(2, &virasoro_mode(-2, &vac)).sub(&virasoro_mode(-2, &virasoro_mode(2, &vac)));
        assert_eq!(c22, vac.scale(&q(1, 2)).with_cutoff(c22.cutoff()));
    }

    #[test]
    fn virasoro_relations() {
        let cutoff = 14;
        for s in fock_basis(cutoff - 4 - 4) {
            let u = FockVector::basis(s, cutoff);
            for m in -4i64..=4 {
                for n in -4i64..=4 {
                    let lhs = virasoro_mode(m, &virasoro_mode(n, &u)).sub(&virasoro_mode(n, &virasoro_mode(m, &u)));
                    let mut rhs = virasoro_mode(m + n, &u).scale(&qi(m - n));
                    if m + n == 0 {
                        rhs = rhs.add(&u.scale(&q(m * m * m - m, 12)));
                    }
                    let c = lhs.cutoff().min(rhs.cutoff());
                    assert_eq!(lhs.with_cutoff(c), rhs.with_cutoff(c), "m={m} n={n} u={u:?}");
                }
            }
        }
    }

    #[test]
    fn grading_of_modes() {
        for v in fock_basis(5) {
            let vv = FockVector::basis(v.clone(), 30);
            for s in fock_basis(5) {
                let u = FockVector::basis(s.clone(), 30);
                for n in -3..6 {
                    let w = vertex_mode(&vv, n, &u);
                    let expect = s.weight() + v.weight() - n - 1;
                    assert!(w.terms().all(|(t, _)| t.weight() == expect));
                }
            }
        }
    }

    fn matrix_series(v: &FockVector, out: &FockState, inp: &FockState) -> TruncatedSeries<Q> {
        vertex_matrix_element(v, out, inp, 50)
    }

    #[test]
    fn translation_property() {
        for v in fock_basis(5) {
            let vv = FockVector::basis(v, 30);
            let lv = virasoro_mode(-1, &vv);
            for out in fock_basis(5) {
                for inp in fock_basis(5) {
                    let lhs = matrix_series(&vv, &out, &inp);
                    let deriv = TruncatedSeries::from_coeffs(
                        "z",
                        lhs.terms().map(|(e, c)| (e - 1, c * qi(e))),
                        50,
                    );
                    let rhs = matrix_series(&lv, &out, &inp);
                    assert_eq!(deriv, rhs, "v={vv:?} out={out:?} in={inp:?}");
                }
            }
        }
    }

    #[test]
    fn commutator_formula() {
        // u(k) v(n) - v(n) u(k) = sum_j binom(k, j) (u(j) v)(n + k - j)
        let cutoff = 40;
        let states = fock_basis(4);
        let probes = fock_basis(5);
        for us in &states {
            let u = FockVector::basis(us.clone(), cutoff);
            for vs in &states {
                let v = FockVector::basis(vs.clone(), cutoff);
                for k in -2i64..=3 {
                    for n in -2i64..=3 {
                        for w in &probes {
                            let wv = FockVector::basis(w.clone(), cutoff);
                            let lhs = vertex_mode(&u, k, &vertex_mode(&v, n, &wv))
                                .sub(&vertex_mode(&v, n, &vertex_mode(&u, k, &wv)));
                            let mut rhs = FockVector::zero(cutoff);
                            for j in 0..(us.weight() + vs.weight() + 1) {
                                let ujv = vertex_mode(&u, j, &v);
                                if ujv.is_zero() {
                                    continue;
                                }
                                let t = vertex_mode(&ujv, n + k - j, &wv).scale(&binom_i(k, j));
                                rhs = rhs.add(&t);
                            }
                            let c = lhs.cutoff().min(rhs.cutoff());
                            assert_eq!(lhs.with_cutoff(c), rhs.with_cutoff(c), "u={us:?} v={vs:?} k={k} n={n} w={w:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bilinear_form_examples() {
        let one = Q::one();
        assert_eq!(bilinear_form(&FockVector::vacuum(5), &FockVector::vacuum(5), &one), qi(1));
        assert_eq!(bilinear_form(&bv(&[1], 5), &bv(&[2], 5), &one), qi(0));
        assert_eq!(bilinear_form(&bv(&[1], 5), &bv(&[1], 5), &one), qi(-1));
    }

    #[test]
    fn adjoint_examples() {
        let one = Q::one();
        let a = FockVector::a(20);
        let u = bv(&[2, 1], 20);
        let op = adjoint_mode(&a, 0, &one).unwrap();
        assert_eq!(op.terms[0].0, qi(-1));
        assert_eq!(op.terms[0].1.index, 0);
        for n in -3..4 {
            let op = adjoint_mode(&a, n, &one).unwrap();
            assert_eq!(op.apply(&u).unwrap(), heisenberg_mode(-n, &u).scale(&qi(-1)));
        }
        let om = adjoint_mode(&FockVector::omega(20), 1, &one).unwrap();
        assert_eq!(om.terms[0].0, qi(1));
        assert_eq!(om.terms[0].1.index, 1);
        assert!(adjoint_mode(&bv(&[2], 20), 0, &one).is_err());
    }

    #[test]
    fn adjoint_identity_holds() {
        // <u(n) x, y> = <x, u^dagger(n) y> for u = a over all basis pairs
        for alpha in [qi(1), q(2, 3), qi(-3)] {
            let a = FockVector::a(30);
            let basis = fock_basis(7);
            for n in -5i64..=5 {
                let adj = adjoint_mode(&a, n, &alpha).unwrap();
                for x in &basis {
                    let xv = FockVector::basis(x.clone(), 30);
                    let lhs_vec = heisenberg_mode(n, &xv);
                    for y in &basis {
                        let yv = FockVector::basis(y.clone(), 30);
                        let lhs = bilinear_form(&lhs_vec, &yv, &alpha);
                        let rhs = bilinear_form(&xv, &adj.apply(&yv).unwrap(), &alpha);
                        assert_eq!(lhs, rhs, "alpha={alpha} n={n} x={x:?} y={y:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn descriptors_parse() {
        let m = ModeIndex::from_json(&serde_json::json!({"mode": "a", "n": -1})).unwrap();
        assert_eq!(m.apply(&FockVector::vacuum(5)).unwrap(), bv(&[1], 5));
        let s = ModeIndex::from_json(&serde_json::json!({"state": [1, 1], "n": 1, "bracket": "square"})).unwrap();
        assert_eq!(s.bracket, Bracket::Square);
        assert!(ModeIndex::from_json(&serde_json::json!({"mode": "b", "n": 0})).is_err());
        let js = serde_json::to_value(st(&[1, 3, 2])).unwrap();
        assert_eq!(js, serde_json::json!([3, 2, 1]));
    }
}
