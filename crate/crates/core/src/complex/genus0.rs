//! Correlation functions on the sphere.
//!
//! [`genus0_npoint`] evaluates `<u', Y(v1, z1) ... Y(vn, zn) u>` by Wick
//! contraction of the free-boson legs, independent of the mode algebra in
//! [`crate::voa`]. [`reduce_genus0`] evaluates the same quantity by repeatedly
//! peeling off the leftmost insertion with the genus-zero reduction formula.

use std::collections::HashMap;

use crate::elliptic::f0_kernel;
use crate::scalar::{binom_i, Field, Q};
use crate::voa::{fock_level, FockState, FockVector};
use crate::{Error, Result};

/// A state inserted at a point of the sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct Insertion<F> {
    pub state: FockVector,
    pub point: F,
}

impl<F> Insertion<F> {
    pub fn new(state: FockVector, point: F) -> Self {
        Self { state, point }
    }
}

#[derive(Clone, Copy, Debug)]
enum Leg {
    /// annihilator `a(m)` from the out-state functional
    Out(i64),
    /// `d^(p) a(z)` from insertion `vertex`
    Field { vertex: usize, p: i64 },
    /// creator `a(-n)` of the in-state
    In(i64),
}

fn contraction<F: Field>(left: Leg, right: Leg, points: &[F]) -> Result<Option<F>> {
    let pole = || Error::Pole("coincident or zero insertion point".into());
    Ok(match (left, right) {
        (Leg::Out(m), Leg::Field { vertex, p }) => {
            let c = binom_i(m - 1, p) * crate::scalar::qi(m);
            if num_traits::Zero::is_zero(&c) {
                None
            } else {
                let z = &points[vertex];
                let e = m - 1 - p;
                if e < 0 && z.is_zero() {
                    return Err(pole());
                }
                Some(F::from_q(&c) * z.powi(e))
            }
        }
        (Leg::Out(m), Leg::In(n)) => (m == n).then(|| F::from_i64(m)),
        (Leg::Field { vertex: i, p }, Leg::Field { vertex: j, p: q }) => {
            if i == j {
                None
            } else {
                let d = points[i].clone() - points[j].clone();
                if d.is_zero() {
                    return Err(pole());
                }
                Some(field_pair::<F>(p, q) * d.powi(-(p + q + 2)))
            }
        }
        (Leg::Field { vertex, p }, Leg::In(n)) => {
            let z = &points[vertex];
            if z.is_zero() {
                return Err(pole());
            }
            Some(field_pair::<F>(p, n - 1) * z.powi(-(p + n + 1)))
        }
        _ => None,
    })
}

/// `(-1)^p (p + 1) binom(p + q + 1, q)`, the coefficient of
/// `(z - w)^{-p-q-2}` in `<d^(p) a(z) d^(q) a(w)>`.
fn field_pair<F: Field>(p: i64, q: i64) -> F {
    let sign = if p % 2 == 0 { 1 } else { -1 };
    F::from_q(&(binom_i(p + q + 1, q) * crate::scalar::qi(sign * (p + 1))))
}

/// Sum over perfect matchings of the legs, memoized on the set of unmatched
/// legs.
fn hafnian<F: Field>(pairs: &[Vec<Option<F>>]) -> F {
    let n = pairs.len();
    if n == 0 {
        return F::one();
    }
    if n % 2 == 1 || n > 64 {
        return F::zero();
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut memo: HashMap<u64, F> = HashMap::new();
    haf_rec(full, pairs, &mut memo)
}

fn haf_rec<F: Field>(mask: u64, pairs: &[Vec<Option<F>>], memo: &mut HashMap<u64, F>) -> F {
    if mask == 0 {
        return F::one();
    }
    if let Some(v) = memo.get(&mask) {
        return v.clone();
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & !(1u64 << i);
    let mut acc = F::zero();
    let mut m = rest;
    while m != 0 {
        let j = m.trailing_zeros() as usize;
        m &= m - 1;
        if let Some(c) = &pairs[i][j] {
            let sub = haf_rec(rest & !(1u64 << j), pairs, memo);
            if !sub.is_zero() {
                acc = acc + c.clone() * sub;
            }
        }
    }
    memo.insert(mask, acc.clone());
    acc
}

fn wick_basis<F: Field>(out: &FockState, fields: &[(usize, &FockState)], inp: &FockState, points: &[F]) -> Result<F> {
    let mut legs = Vec::new();
    legs.extend(out.parts().iter().map(|&m| Leg::Out(m as i64)));
    for (vertex, s) in fields {
        legs.extend(s.parts().iter().map(|&n| Leg::Field { vertex: *vertex, p: n as i64 - 1 }));
    }
    legs.extend(inp.parts().iter().map(|&n| Leg::In(n as i64)));
    let n = legs.len();
    if n % 2 == 1 {
        return Ok(F::zero());
    }
    let mut pairs = vec![vec![None; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = contraction(legs[i], legs[j], points)?;
            pairs[i][j] = c.clone();
            pairs[j][i] = c;
        }
    }
    Ok(hafnian(&pairs))
}

fn check_points<F: Field>(ins: &[Insertion<F>]) -> Result<()> {
    for i in 0..ins.len() {
        for j in (i + 1)..ins.len() {
            if (ins[i].point.clone() - ins[j].point.clone()).is_zero() {
                return Err(Error::Pole(format!("insertions {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

/// `<u', Y(v1, z1) ... Y(vn, zn) u>` with `u'` read as a dual-basis functional
/// (coefficient extraction), by Wick contraction. Exact for exact fields.
pub fn genus0_npoint<F: Field>(out: &FockVector, ins: &[Insertion<F>], inp: &FockVector) -> Result<F> {
    check_points(ins)?;
    let points: Vec<F> = ins.iter().map(|x| x.point.clone()).collect();
    let expanded: Vec<Vec<(FockState, Q)>> = ins
        .iter()
        .map(|x| x.state.terms().map(|(s, c)| (s.clone(), c.clone())).collect())
        .collect();
    let mut acc = F::zero();
    for (os, oc) in out.terms() {
        let norm = os.z_lambda();
        for (is, ic) in inp.terms() {
            let mut idx = vec![0usize; ins.len()];
            if expanded.iter().any(|e| e.is_empty()) {
                return Ok(F::zero());
            }
            loop {
                let mut coeff = oc * ic / &norm;
                let mut fields = Vec::with_capacity(ins.len());
                for (v, &k) in idx.iter().enumerate() {
                    coeff *= &expanded[v][k].1;
                    fields.push((v, &expanded[v][k].0));
                }
                let w = wick_basis(os, &fields, is, &points)?;
                acc = acc + F::from_q(&coeff) * w;
                // odometer over the insertion components
                let mut pos = 0;
                loop {
                    if pos == idx.len() {
                        break;
                    }
                    idx[pos] += 1;
                    if idx[pos] < expanded[pos].len() {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos == idx.len() {
                    break;
                }
            }
        }
    }
    Ok(acc)
}

/// The transpose of `v(n)` acting on a dual-basis functional:
/// `(v(n)^T u')(w) = u'(v(n) w)`.
pub fn transpose_mode(v: &FockVector, n: i64, out: &FockVector) -> FockVector {
    let mut res = FockVector::zero(i64::MAX);
    let Some(wt) = v.weight() else {
        for piece in v.homogeneous_parts().values() {
            res = res.add(&transpose_mode(piece, n, out));
        }
        return res;
    };
    let mut by_level: HashMap<i64, Vec<FockState>> = HashMap::new();
    for (s, _) in out.terms() {
        let src = s.weight() - wt + n + 1;
        by_level.entry(src).or_insert_with(|| fock_level(src));
    }
    for basis in by_level.values() {
        for t in basis {
            let image = crate::voa::vertex_mode(v, n, &FockVector::basis(t.clone(), i64::MAX));
            let mut c = crate::scalar::qi(0);
            for (s, sc) in image.terms() {
                c += sc * out.coeff(s);
            }
            res.add_term(t.clone(), c);
        }
    }
    res
}

fn max_weight(v: &FockVector) -> i64 {
    v.terms().map(|(s, _)| s.weight()).max().unwrap_or(0)
}

fn unbounded(v: &FockVector) -> FockVector {
    v.with_cutoff(i64::MAX)
}

/// The part of the genus-zero reduction that moves the new state onto the
/// boundary states: `sum_{n >= wt} z^{-n-1} F(u'; x; v(n) u)` plus
/// `sum_{n < wt} z^{-n-1} F(v(n)^T u'; x; u)`. With vacuum ends this is
/// `F` itself for `v = 1` and zero for the Heisenberg states.
pub fn genus0_d1<F: Field>(
    new: &Insertion<F>,
    out: &FockVector,
    rest: &[Insertion<F>],
    inp: &FockVector,
    eval: &dyn Fn(&FockVector, &[Insertion<F>], &FockVector) -> Result<F>,
) -> Result<F> {
    let z = &new.point;
    let mut acc = F::zero();
    for (wt, piece) in new.state.homogeneous_parts() {
        let piece = unbounded(&piece);
        for n in wt..(max_weight(inp) + wt) {
            let moved = crate::voa::vertex_mode(&piece, n, &unbounded(inp));
            if moved.is_zero() {
                continue;
            }
            if z.is_zero() {
                return Err(Error::Pole("insertion at the in-state point".into()));
            }
            acc = acc + z.powi(-n - 1) * eval(out, rest, &moved)?;
        }
        for n in (wt - 1 - max_weight(out))..wt {
            let moved = transpose_mode(&piece, n, out);
            if moved.is_zero() {
                continue;
            }
            let zp = if n == -1 {
                F::one()
            } else if z.is_zero() {
                return Err(Error::Pole("insertion at the in-state point".into()));
            } else {
                z.powi(-n - 1)
            };
            acc = acc + zp * eval(&moved, rest, inp)?;
        }
    }
    Ok(acc)
}

/// The kernel part: `sum_k sum_{m >= 0} f_{wt, m}(z, z_k) F(..., v(m) v_k, ...)`.
pub fn genus0_d2<F: Field>(
    new: &Insertion<F>,
    out: &FockVector,
    rest: &[Insertion<F>],
    inp: &FockVector,
    eval: &dyn Fn(&FockVector, &[Insertion<F>], &FockVector) -> Result<F>,
) -> Result<F> {
    let mut acc = F::zero();
    for (wt, piece) in new.state.homogeneous_parts() {
        let piece = unbounded(&piece);
        for k in 0..rest.len() {
            let vk = unbounded(&rest[k].state);
            for m in 0..(wt + max_weight(&vk)).max(0) {
                let moved = crate::voa::vertex_mode(&piece, m, &vk);
                if moved.is_zero() {
                    continue;
                }
                let kern = f0_kernel(wt, m)?.eval(&new.point, &rest[k].point)?;
                let mut ins = rest.to_vec();
                ins[k] = Insertion::new(moved, rest[k].point.clone());
                acc = acc + kern * eval(out, &ins, inp)?;
            }
        }
    }
    Ok(acc)
}

/// Genus-zero `n`-point function assembled purely by reduction down to the
/// pairing `<u', u>`.
pub fn reduce_genus0<F: Field>(out: &FockVector, ins: &[Insertion<F>], inp: &FockVector) -> Result<F> {
    check_points(ins)?;
    if ins.is_empty() {
        let mut acc = crate::scalar::qi(0);
        for (s, c) in out.terms() {
            acc += c * inp.coeff(s);
        }
        return Ok(F::from_q(&acc));
    }
    let eval = |o: &FockVector, x: &[Insertion<F>], i: &FockVector| reduce_genus0(o, x, i);
    let d1 = genus0_d1(&ins[0], out, &ins[1..], inp, &eval)?;
    let d2 = genus0_d2(&ins[0], out, &ins[1..], inp, &eval)?;
    Ok(d1 + d2)
}
