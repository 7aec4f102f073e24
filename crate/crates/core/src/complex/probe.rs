//! Finite probes of the spaces `C^{g,n}` and the differentials acting on them.
//!
//! A probe fixes a pool of homogeneous states, one point per slot and a
//! weight cutoff `W`. Slot `j` of an `n`-tuple (counted from the front) sits
//! at `points[n - 1 - j]`, so a new insertion is always prepended at
//! `points[n]`. Points are given in the torus chart; the sphere sees `e^z`.
//!
//! * `C^{0,n}`: functions of `(u', t, u)` with `u', u` Fock basis states of
//!   weight below `W` and `t` a tuple of pool states. A correlation function
//!   is `F(u'; t; u) = <u', Y(t_1, x_1) ... u>`.
//! * `C^{1,n}`: functions of `t` valued in `q`-series truncated at `q^W`.
//!
//! `D^n` acts by the reduction formulas, reading `F` at modified arguments
//! through its linear extension; states that leave the pool span or the end
//! space are dropped. `D^g` sews a handle at the boundary slots.

use nalgebra::{DMatrix, DVector};

use crate::complex::genus0::{genus0_d1, genus0_d2, genus0_npoint, Insertion};
use crate::complex::genus1::{genus1_d1, genus1_d2, reduce_genus1};
use crate::scalar::{Field, C64, Q};
use crate::series::TruncatedSeries;
use crate::voa::{fock_basis, fock_level, FockState, FockVector};
use crate::{exec, Error, Result};

/// Expands vectors in the span of a linearly independent pool.
#[derive(Clone, Debug)]
pub struct PoolExpander {
    rows: Vec<(FockVector, Vec<Q>, FockState)>,
    size: usize,
}

impl PoolExpander {
    pub fn new(pool: &[FockVector]) -> Result<Self> {
        let size = pool.len();
        let mut rows: Vec<(FockVector, Vec<Q>, FockState)> = Vec::new();
        for (k, v) in pool.iter().enumerate() {
            let mut r = v.with_cutoff(i64::MAX);
            let mut t = vec![Q::from_integer(0.into()); size];
            t[k] = Q::from_integer(1.into());
            for (rj, tj, pj) in &rows {
                let c = r.coeff(pj);
                if !num_traits::Zero::is_zero(&c) {
                    r = r.sub(&rj.scale(&c));
                    t.iter_mut().zip(tj).for_each(|(a, b)| *a -= &c * b);
                }
            }
            let Some((p, c)) = r.terms().next().map(|(s, c)| (s.clone(), c.clone())) else {
                return Err(Error::InvalidArgument(format!("pool element {k} is linearly dependent on earlier ones")));
            };
            let inv = Q::from_integer(1.into()) / c;
            r = r.scale(&inv);
            t.iter_mut().for_each(|a| *a *= &inv);
            for (rj, tj, _) in rows.iter_mut() {
                let c = rj.coeff(&p);
                if !num_traits::Zero::is_zero(&c) {
                    *rj = rj.sub(&r.scale(&c));
                    tj.iter_mut().zip(&t).for_each(|(a, b)| *a -= &c * b);
                }
            }
            rows.push((r, t, p));
        }
        Ok(PoolExpander { rows, size })
    }

    /// Pool coefficients of `v` and the part of `v` outside the span.
    pub fn expand(&self, v: &FockVector) -> (Vec<Q>, FockVector) {
        let mut coeffs = vec![Q::from_integer(0.into()); self.size];
        let mut rem = v.with_cutoff(i64::MAX);
        for (r, t, p) in &self.rows {
            let c = v.coeff(p);
            if num_traits::Zero::is_zero(&c) {
                continue;
            }
            rem = rem.sub(&r.scale(&c));
            coeffs.iter_mut().zip(t).for_each(|(a, b)| *a += &c * b);
        }
        (coeffs, rem)
    }
}

/// Mixed-radix code of a pool tuple.
fn tuple_code(t: &[usize], p: usize) -> usize {
    t.iter().fold(0, |acc, &x| acc * p + x)
}

fn tuple_decode(mut code: usize, n: usize, p: usize) -> Vec<usize> {
    let mut t = vec![0; n];
    for j in (0..n).rev() {
        t[j] = code % p;
        code /= p;
    }
    t
}

/// Sparse pool coefficients of each state in an insertion list.
fn expand_states<F: Field>(exp: &PoolExpander, ins: &[Insertion<F>]) -> Vec<Vec<(usize, F)>> {
    ins.iter()
        .map(|x| {
            exp.expand(&x.state)
                .0
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !num_traits::Zero::is_zero(c))
                .map(|(i, c)| (i, F::from_q(&c)))
                .collect()
        })
        .collect()
}

/// Every choice of one entry per slot, with the product of coefficients.
fn tuple_combinations<F: Field>(choices: &[Vec<(usize, F)>]) -> Vec<(Vec<usize>, F)> {
    let mut out = vec![(Vec::new(), F::one())];
    for slot in choices {
        out = out
            .into_iter()
            .flat_map(|(t, c)| slot.iter().map(move |(i, d)| ([t.clone(), vec![*i]].concat(), c.clone() * d.clone())))
            .collect();
    }
    out
}

/// The genus-zero layout and its reduction operator, generic over the field
/// so the same code serves exact and floating matrices.
#[derive(Clone, Debug)]
pub struct Genus0Space {
    pub pool: Vec<FockVector>,
    pub ends: Vec<FockState>,
    expander: PoolExpander,
}

impl Genus0Space {
    pub fn new(pool: Vec<FockVector>, weight_cutoff: i64) -> Result<Self> {
        let expander = PoolExpander::new(&pool)?;
        Ok(Genus0Space { pool, ends: fock_basis(weight_cutoff), expander })
    }

    pub fn dim(&self, n: usize) -> usize {
        self.ends.len() * self.ends.len() * self.pool.len().pow(n as u32)
    }

    fn end_index(&self, s: &FockState) -> Option<usize> {
        self.ends.binary_search(s).ok()
    }

    pub fn index(&self, out: usize, t: &[usize], inp: usize) -> usize {
        let e = self.ends.len();
        (out * self.pool.len().pow(t.len() as u32) + tuple_code(t, self.pool.len())) * e + inp
    }

    pub fn decode(&self, n: usize, idx: usize) -> (usize, Vec<usize>, usize) {
        let e = self.ends.len();
        let inp = idx % e;
        let rest = idx / e;
        let pn = self.pool.len().pow(n as u32);
        (rest / pn, tuple_decode(rest % pn, n, self.pool.len()), inp)
    }

    pub fn insertions<F: Field>(&self, t: &[usize], sphere_points: &[F]) -> Vec<Insertion<F>> {
        let n = t.len();
        t.iter()
            .enumerate()
            .map(|(j, &s)| Insertion::new(self.pool[s].clone(), sphere_points[n - 1 - j].clone()))
            .collect()
    }

    /// `F(u'; x; u)` for the linear extension of the coordinate vector `phi`.
    pub fn extend<F: Field>(&self, phi: &[F], out: &FockVector, ins: &[Insertion<F>], inp: &FockVector) -> F {
        let ends = |v: &FockVector| -> Vec<(usize, F)> {
            v.terms().filter_map(|(s, c)| self.end_index(s).map(|i| (i, F::from_q(c)))).collect()
        };
        let (os, is) = (ends(out), ends(inp));
        let tuples = tuple_combinations(&expand_states(&self.expander, ins));
        let mut acc = F::zero();
        for (o, co) in &os {
            for (t, ct) in &tuples {
                for (i, ci) in &is {
                    let c = phi[self.index(*o, t, *i)].clone();
                    if !c.is_zero() {
                        acc = acc + co.clone() * ct.clone() * ci.clone() * c;
                    }
                }
            }
        }
        acc
    }

    /// `D_1`, `D_2` or both, applied to `phi` on `n`-tuples with pool state
    /// `u` prepended.
    pub fn apply<F: Field + Send + Sync>(
        &self,
        n: usize,
        u: usize,
        sphere_points: &[F],
        phi: &[F],
        parts: (bool, bool),
    ) -> Result<Vec<F>> {
        if sphere_points.len() <= n {
            return Err(Error::InvalidArgument(format!("probe has {} points, slot {} needs more", sphere_points.len(), n + 1)));
        }
        let e = self.ends.len();
        let pn = self.pool.len().pow(n as u32);
        let eval = |o: &FockVector, x: &[Insertion<F>], i: &FockVector| Ok(self.extend(phi, o, x, i));
        let new = Insertion::new(self.pool[u].clone(), sphere_points[n].clone());
        let rows = exec::map_range(e * pn * e, |r| -> Result<(usize, F)> {
            let inp = r % e;
            let t = tuple_decode((r / e) % pn, n, self.pool.len());
            let out = r / e / pn;
            let ins = self.insertions(&t, sphere_points);
            let (o, i) = (FockVector::basis(self.ends[out].clone(), i64::MAX), FockVector::basis(self.ends[inp].clone(), i64::MAX));
            let mut v = F::zero();
            if parts.0 {
                v = v + genus0_d1(&new, &o, &ins, &i, &eval)?;
            }
            if parts.1 {
                v = v + genus0_d2(&new, &o, &ins, &i, &eval)?;
            }
            let full: Vec<usize> = [vec![u], t].concat();
            Ok((self.index(out, &full, inp), v))
        });
        let mut res = vec![F::zero(); self.dim(n + 1)];
        for row in rows {
            let (idx, v) = row?;
            res[idx] = v;
        }
        Ok(res)
    }

    /// The matrix of [`Genus0Space::apply`] in the coordinate bases.
    pub fn matrix<F: Field + Send + Sync>(&self, n: usize, u: usize, sphere_points: &[F], parts: (bool, bool)) -> Result<Vec<Vec<F>>> {
        let cols = exec::map_range(self.dim(n), |c| {
            let mut e = vec![F::zero(); self.dim(n)];
            e[c] = F::one();
            self.apply(n, u, sphere_points, &e, parts)
        });
        let cols: Result<Vec<Vec<F>>> = cols.into_iter().collect();
        let cols = cols?;
        let rows = self.dim(n + 1);
        Ok((0..rows).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect())
    }

    /// The genus-zero correlation function on every coordinate.
    pub fn correlation<F: Field + Send + Sync>(&self, n: usize, sphere_points: &[F]) -> Result<Vec<F>> {
        let vals = exec::map_range(self.dim(n), |idx| {
            let (o, t, i) = self.decode(n, idx);
            let ins = self.insertions(&t, sphere_points);
            genus0_npoint(
                &FockVector::basis(self.ends[o].clone(), i64::MAX),
                &ins,
                &FockVector::basis(self.ends[i].clone(), i64::MAX),
            )
        });
        vals.into_iter().collect()
    }
}

/// Which parts of a differential to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    D1,
    D2,
    Both,
}

impl Part {
    fn flags(self) -> (bool, bool) {
        match self {
            Part::D1 => (true, false),
            Part::D2 => (false, true),
            Part::Both => (true, true),
        }
    }
}

/// An element of a probed `C^{g,n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainElement {
    pub genus: usize,
    pub n: usize,
    pub values: DVector<C64>,
}

impl ChainElement {
    pub fn zero(probe: &Probe, genus: usize, n: usize) -> Self {
        ChainElement { genus, n, values: DVector::zeros(probe.dim(genus, n)) }
    }

    pub fn scale(&self, c: C64) -> Self {
        ChainElement { values: &self.values * c, ..self.clone() }
    }

    pub fn add(&self, other: &ChainElement) -> Result<Self> {
        if (self.genus, self.n) != (other.genus, other.n) {
            return Err(Error::InvalidArgument("chain elements live in different spaces".into()));
        }
        Ok(ChainElement { values: &self.values + &other.values, ..self.clone() })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// The probe: pool, points, cutoff and the derived genus-zero space.
#[derive(Clone, Debug)]
pub struct Probe {
    pub points: Vec<C64>,
    pub weight_cutoff: i64,
    pub g0: Genus0Space,
}

impl Probe {
    pub fn new(pool: Vec<FockVector>, points: Vec<C64>, weight_cutoff: i64) -> Result<Self> {
        if pool.is_empty() || weight_cutoff < 1 {
            return Err(Error::InvalidArgument("probe needs a nonempty pool and weight cutoff >= 1".into()));
        }
        if pool.iter().any(|v| v.weight().is_none()) {
            return Err(Error::InvalidArgument("pool states must be homogeneous".into()));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if (points[i] - points[j]).norm() < 1e-12 {
                    return Err(Error::InvalidArgument("probe points must be distinct".into()));
                }
            }
        }
        let pool = pool.into_iter().map(|v| v.with_cutoff(i64::MAX)).collect();
        Ok(Probe { points, weight_cutoff, g0: Genus0Space::new(pool, weight_cutoff)? })
    }

    pub fn pool(&self) -> &[FockVector] {
        &self.g0.pool
    }

    pub fn q_order(&self) -> i64 {
        self.weight_cutoff
    }

    pub fn sphere_points(&self) -> Vec<C64> {
        self.points.iter().map(|z| z.exp()).collect()
    }

    pub fn dim(&self, genus: usize, n: usize) -> usize {
        match genus {
            0 => self.g0.dim(n),
            1 => self.pool().len().pow(n as u32) * self.q_order() as usize,
            _ => 0,
        }
    }

    pub fn torus_insertions(&self, t: &[usize]) -> Vec<Insertion<C64>> {
        let n = t.len();
        t.iter()
            .enumerate()
            .map(|(j, &s)| Insertion::new(self.pool()[s].clone(), self.points[n - 1 - j]))
            .collect()
    }

    fn series_of(&self, phi: &DVector<C64>, code: usize) -> TruncatedSeries<C64> {
        let q = self.q_order() as usize;
        TruncatedSeries::from_dense("q", 0, (0..q).map(|k| phi[code * q + k]).collect(), q as i64)
    }

    fn genus1_extend(&self, phi: &DVector<C64>, ins: &[Insertion<C64>]) -> TruncatedSeries<C64> {
        let p = self.pool().len();
        let mut acc = TruncatedSeries::zero("q", self.q_order());
        for (t, c) in tuple_combinations(&expand_states(&self.g0.expander, ins)) {
            acc = acc + self.series_of(phi, tuple_code(&t, p)).scale(&c);
        }
        acc
    }

    fn check(&self, el: &ChainElement, genus: usize) -> Result<()> {
        if el.genus != genus || el.values.len() != self.dim(genus, el.n) {
            return Err(Error::InvalidArgument(format!(
                "element of C^({},{}) does not fit the probe at genus {genus}",
                el.genus, el.n
            )));
        }
        if el.n >= self.points.len() {
            return Err(Error::InvalidArgument(format!("probe has {} points, slot {} needs more", self.points.len(), el.n + 1)));
        }
        Ok(())
    }

    fn apply_genus1(&self, u: usize, el: &ChainElement, part: Part) -> Result<ChainElement> {
        let n = el.n;
        let p = self.pool().len();
        let q = self.q_order();
        let new = Insertion::new(self.pool()[u].clone(), self.points[n]);
        let (d1, d2) = part.flags();
        let blocks = exec::map_range(p.pow(n as u32), |code| -> Result<TruncatedSeries<C64>> {
            let t = tuple_decode(code, n, p);
            let ins = self.torus_insertions(&t);
            let mut s = TruncatedSeries::zero("q", q);
            if d1 {
                s = s + genus1_d1(&new.state, &self.series_of(&el.values, code), q)?;
            }
            if d2 {
                s = s + genus1_d2(&new, &ins, q, &|x| Ok(self.genus1_extend(&el.values, x)))?;
            }
            Ok(s)
        });
        let mut out = ChainElement::zero(self, 1, n + 1);
        for (code, s) in blocks.into_iter().enumerate() {
            let s = s?;
            let full = u * p.pow(n as u32) + code;
            for k in 0..q {
                out.values[full * q as usize + k as usize] = s.coeff(k);
            }
        }
        Ok(out)
    }

    fn apply_part(&self, u: usize, el: &ChainElement, part: Part) -> Result<ChainElement> {
        if u >= self.pool().len() {
            return Err(Error::InvalidArgument(format!("pool index {u} out of range")));
        }
        match el.genus {
            0 => {
                self.check(el, 0)?;
                let phi: Vec<C64> = el.values.iter().copied().collect();
                let v = self.g0.apply(el.n, u, &self.sphere_points(), &phi, part.flags())?;
                Ok(ChainElement { genus: 0, n: el.n + 1, values: DVector::from_vec(v) })
            }
            1 => {
                self.check(el, 1)?;
                self.apply_genus1(u, el, part)
            }
            g => Err(Error::Unsupported(format!("probe differentials at genus {g}"))),
        }
    }

    /// The zero-mode part of `D^n` with pool state `u` inserted.
    pub fn apply_d1(&self, u: usize, el: &ChainElement) -> Result<ChainElement> {
        self.apply_part(u, el, Part::D1)
    }

    /// The kernel part of `D^n`.
    pub fn apply_d2(&self, u: usize, el: &ChainElement) -> Result<ChainElement> {
        self.apply_part(u, el, Part::D2)
    }

    pub fn apply_dn(&self, u: usize, el: &ChainElement) -> Result<ChainElement> {
        self.apply_part(u, el, Part::Both)
    }

    /// `sum_u D^n(u)` over the pool: the reduction with every pool state in
    /// the new slot, filling all of `C^{g,n+1}`.
    pub fn apply_dn_all(&self, el: &ChainElement) -> Result<ChainElement> {
        let mut acc = ChainElement::zero(self, el.genus, el.n + 1);
        for u in 0..self.pool().len() {
            acc = acc.add(&self.apply_dn(u, el)?)?;
        }
        Ok(acc)
    }

    /// `D^g` from genus 0 to genus 1: the `q^k` coefficient at `t` is
    /// `sum_{w in W_(k)} prod_j x_j^{wt(t_j)} F(w; t; w)`.
    pub fn apply_dg(&self, el: &ChainElement) -> Result<ChainElement> {
        if el.genus != 0 {
            return Err(Error::Unsupported(format!("probe sewing from genus {}", el.genus)));
        }
        if el.values.len() != self.dim(0, el.n) {
            return Err(Error::InvalidArgument("element does not fit the probe".into()));
        }
        let n = el.n;
        let p = self.pool().len();
        let q = self.q_order();
        let mut out = ChainElement::zero(self, 1, n);
        for code in 0..p.pow(n as u32) {
            let t = tuple_decode(code, n, p);
            let mut factor = C64::new(1.0, 0.0);
            for (j, &s) in t.iter().enumerate() {
                let w = self.pool()[s].weight().unwrap_or(0);
                factor *= (self.points[n - 1 - j] * w as f64).exp();
            }
            for k in 0..q {
                let mut acc = C64::default();
                for w in fock_level(k) {
                    let e = self.g0.end_index(&w).expect("level below cutoff");
                    acc += el.values[self.g0.index(e, &t, e)];
                }
                out.values[code * q as usize + k as usize] = factor * acc;
            }
        }
        Ok(out)
    }

    /// The correlation function itself as an element of `C^{g,n}`.
    pub fn correlation(&self, genus: usize, n: usize) -> Result<ChainElement> {
        if n > self.points.len() {
            return Err(Error::InvalidArgument(format!("probe has only {} points", self.points.len())));
        }
        match genus {
            0 => {
                let v = self.g0.correlation(n, &self.sphere_points())?;
                Ok(ChainElement { genus: 0, n, values: DVector::from_vec(v) })
            }
            1 => {
                let p = self.pool().len();
                let q = self.q_order();
                let blocks = exec::map_range(p.pow(n as u32), |code| reduce_genus1(&self.torus_insertions(&tuple_decode(code, n, p)), q));
                let mut out = ChainElement::zero(self, 1, n);
                for (code, s) in blocks.into_iter().enumerate() {
                    let s = s?;
                    for k in 0..q {
                        out.values[code * q as usize + k as usize] = s.coeff(k);
                    }
                }
                Ok(out)
            }
            g => Err(Error::Unsupported(format!("probe correlation functions at genus {g}"))),
        }
    }

    /// Coordinates of `C^{g,n+1}` whose first slot holds pool state `u`.
    pub fn slot_rows(&self, genus: usize, n: usize, u: usize) -> Vec<usize> {
        let p = self.pool().len();
        let pn = p.pow(n as u32);
        (0..self.dim(genus, n + 1))
            .filter(|&r| match genus {
                0 => self.g0.decode(n + 1, r).1[0] == u,
                _ => r / self.q_order() as usize / pn == u,
            })
            .collect()
    }

    /// The matrix of a differential, built column by column.
    pub fn matrix(&self, genus: usize, n: usize, apply: &(dyn Fn(&ChainElement) -> Result<ChainElement> + Sync)) -> Result<DMatrix<C64>> {
        let dim = self.dim(genus, n);
        let cols = exec::map_range(dim, |c| {
            let mut e = ChainElement::zero(self, genus, n);
            e.values[c] = C64::new(1.0, 0.0);
            apply(&e)
        });
        let cols: Result<Vec<ChainElement>> = cols.into_iter().collect();
        let cols = cols?;
        let rows = cols.first().map(|c| c.values.len()).unwrap_or(0);
        Ok(DMatrix::from_fn(rows, dim, |r, c| cols[c].values[r]))
    }
}
