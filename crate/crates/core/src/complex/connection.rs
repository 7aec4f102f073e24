//! Factorization through the zero-point function, and the connection
//! functional `G(psi, phi) = F(psi).G(phi) + F(phi).G(psi) + G(F(psi).phi)`
//! with `G` the correlation-function evaluator.
//!
//! With the standard identifications the first term is minus the sewing sum
//! applied to `F(phi)`, and the third is `-(-1)^g (D_1 + D_2)(psi).F(phi)`.
//! The middle term has no identification and is reported as zero.

use serde::Serialize;
use serde_json::{json, Value};

use crate::complex::genus0::{genus0_d1, genus0_d2, genus0_npoint, reduce_genus0, Insertion};
use crate::complex::genus1::{genus1_d1, genus1_d2, partition_series, reduce_genus1};
use crate::scalar::C64;
use crate::schottky::{exp_chart, genus_g_npoint, sewn_series, HandleSlots, MultiSeries, SchottkyData};
use crate::series::TruncatedSeries;
use crate::voa::FockVector;
use crate::{Error, Result};

/// A number or a `q`-series.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Scalar(C64),
    Series(TruncatedSeries<C64>),
}

impl Factor {
    pub fn to_json(&self) -> Value {
        match self {
            Factor::Scalar(c) => json!({"re": c.re, "im": c.im}),
            Factor::Series(s) => s.to_json(),
        }
    }

    fn max_abs(&self) -> f64 {
        match self {
            Factor::Scalar(c) => c.norm(),
            Factor::Series(s) => s.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max),
        }
    }
}

/// Zero-point functions below this magnitude count as vanishing.
pub const VANISHING: f64 = 1e-300;

/// `P = F / F_0`, with the relative reconstruction residual of `P F_0`.
pub fn factor_through(f: &Factor, zero_point: &Factor) -> Result<(Factor, f64)> {
    let undefined = || Error::Singular("the zero-point function vanishes, so the factorization is undefined".into());
    match (f, zero_point) {
        (Factor::Scalar(f), Factor::Scalar(z)) => {
            if z.norm() <= VANISHING {
                return Err(undefined());
            }
            let p = f / z;
            Ok((Factor::Scalar(p), (p * z - f).norm() / f.norm().max(1.0)))
        }
        (Factor::Series(f), Factor::Series(z)) => {
            if z.terms().all(|(_, c)| c.norm() <= VANISHING) {
                return Err(undefined());
            }
            let p = f.try_mul(&z.invert()?)?;
            let back = p.try_mul(z)?;
            let scale = Factor::Series(f.clone()).max_abs().max(1.0);
            let res = back.try_sub(f)?.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max) / scale;
            Ok((Factor::Series(p), res))
        }
        _ => Err(Error::InvalidArgument("function and zero-point function must both be numbers or both series".into())),
    }
}

#[derive(Clone, Debug)]
pub enum ZeroPointInput {
    /// Vacuum end states; the zero-point function is 1.
    Genus0 { ins: Vec<Insertion<C64>> },
    Genus1 { ins: Vec<Insertion<C64>>, q_order: i64 },
    /// Evaluated numerically at the data's `rho`.
    GenusG { data: SchottkyData, ins: Vec<Insertion<C64>>, orders: Vec<i64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroPointFactorization {
    pub p: Factor,
    pub zero_point: Factor,
    pub function: Factor,
    /// `max |P F_0 - F|` relative to `max(1, max |F|)`.
    pub residual: f64,
}

impl ZeroPointFactorization {
    pub fn to_json(&self) -> Value {
        json!({
            "P": self.p.to_json(),
            "zero_point": self.zero_point.to_json(),
            "function": self.function.to_json(),
            "residual": self.residual,
        })
    }
}

pub fn reduce_to_zero_point(input: &ZeroPointInput) -> Result<ZeroPointFactorization> {
    let vac = FockVector::vacuum(i64::MAX);
    let (function, zero_point) = match input {
        ZeroPointInput::Genus0 { ins } => {
            (Factor::Scalar(reduce_genus0(&vac, ins, &vac)?), Factor::Scalar(C64::new(1.0, 0.0)))
        }
        ZeroPointInput::Genus1 { ins, q_order } => {
            (Factor::Series(reduce_genus1(ins, *q_order)?), Factor::Series(partition_series(*q_order)))
        }
        ZeroPointInput::GenusG { data, ins, orders } => {
            let f = genus_g_npoint(data, ins, orders)?.eval(&data.rho);
            let z = genus_g_npoint(data, &[], orders)?.eval(&data.rho);
            (Factor::Scalar(f), Factor::Scalar(z))
        }
    };
    let (p, residual) = factor_through(&function, &zero_point)?;
    Ok(ZeroPointFactorization { p, zero_point, function, residual })
}

/// Insertions tagged with the genus of the surface they live on.
#[derive(Clone, Debug)]
pub struct InsertionTuple {
    pub genus: usize,
    pub insertions: Vec<Insertion<C64>>,
}

/// The operator `F` entering the functional.
#[derive(Clone, Debug)]
pub enum FOp {
    Zero,
    /// The standard identifications, with the handle at `zeta`. The sewing
    /// sum starts at `k = 1` unless `include_k0` is set.
    Identified { zeta: (C64, C64), include_k0: bool },
    Combination(Vec<(C64, FOp)>),
}

/// Truncation orders: `rho_order` for the sewing variable and `q_order` for
/// genus-one functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConnectionTruncation {
    pub rho_order: i64,
    pub q_order: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionReport {
    pub genus: usize,
    /// The three summands, in the order of the definition.
    pub components: [MultiSeries; 3],
    pub g_value: MultiSeries,
    pub max_abs: f64,
    pub vanishes: bool,
    /// `"Con"` when `G` vanishes at the truncation, `"G"` otherwise.
    pub membership: &'static str,
}

impl ConnectionReport {
    pub fn to_json(&self) -> Value {
        json!({
            "genus": self.genus,
            "components": self.components.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
            "unidentified_components": [1],
            "G": self.g_value.to_json(),
            "max_abs": self.max_abs,
            "vanishes": self.vanishes,
            "membership": self.membership,
        })
    }
}

fn empty(genus: usize, t: &ConnectionTruncation) -> MultiSeries {
    if genus == 0 {
        MultiSeries::zero(vec!["rho".into()], vec![t.rho_order])
    } else {
        MultiSeries::zero(vec!["q".into(), "rho".into()], vec![t.q_order, t.rho_order])
    }
}

fn axpy(acc: &mut MultiSeries, c: C64, s: &MultiSeries) {
    for (idx, v) in s.terms() {
        acc.add_term(idx.clone(), c * v);
    }
}

fn sphere(o: &FockVector, x: &[Insertion<C64>], i: &FockVector) -> Result<C64> {
    genus0_npoint(o, x, i)
}

fn identified(
    psi: &Insertion<C64>,
    phi: &[Insertion<C64>],
    genus: usize,
    zeta: (C64, C64),
    include_k0: bool,
    t: &ConnectionTruncation,
) -> Result<[MultiSeries; 3]> {
    let vac = FockVector::vacuum(i64::MAX);
    let handle = HandleSlots::Points(zeta.0, zeta.1);
    let mut c1 = empty(genus, t);
    let mut c3 = empty(genus, t);
    let rho_axis = genus;
    let keep = |idx: &[i64]| include_k0 || idx[rho_axis] > 0;
    if genus == 0 {
        let s = sewn_series(&sphere, &vac, phi, &vac, &[handle], &[t.rho_order])?;
        for (idx, v) in s.terms().filter(|(i, _)| keep(i)) {
            c1.add_term(idx.clone(), -v);
        }
        let eval = |o: &FockVector, x: &[Insertion<C64>], i: &FockVector| genus0_npoint(o, x, i);
        let d = genus0_d1(psi, &vac, phi, &vac, &eval)? + genus0_d2(psi, &vac, phi, &vac, &eval)?;
        c3.add_term(vec![0], -d);
    } else {
        for (c, list) in exp_chart(phi) {
            let s = sewn_series(&sphere, &vac, &list, &vac, &[HandleSlots::Boundary, handle.clone()], &[t.q_order, t.rho_order])?;
            for (idx, v) in s.terms().filter(|(i, _)| keep(i)) {
                c1.add_term(idx.clone(), -c * v);
            }
        }
        let rest = reduce_genus1(phi, t.q_order)?;
        let d = genus1_d1(&psi.state, &rest, t.q_order)?.try_add(&genus1_d2(psi, phi, t.q_order, &|x| reduce_genus1(x, t.q_order))?)?;
        for (k, v) in d.terms() {
            c3.add_term(vec![k, 0], *v);
        }
    }
    Ok([c1, empty(genus, t), c3])
}

fn components(op: &FOp, psi: &Insertion<C64>, phi: &[Insertion<C64>], genus: usize, t: &ConnectionTruncation) -> Result<[MultiSeries; 3]> {
    match op {
        FOp::Zero => Ok([empty(genus, t), empty(genus, t), empty(genus, t)]),
        FOp::Identified { zeta, include_k0 } => identified(psi, phi, genus, *zeta, *include_k0, t),
        FOp::Combination(parts) => {
            let mut acc = [empty(genus, t), empty(genus, t), empty(genus, t)];
            for (c, sub) in parts {
                let comp = components(sub, psi, phi, genus, t)?;
                for (a, s) in acc.iter_mut().zip(&comp) {
                    axpy(a, *c, s);
                }
            }
            Ok(acc)
        }
    }
}

/// `G(psi, phi)` with `psi` the single new insertion and `phi` the
/// insertions of the function it acts on, both at the same genus (0 or 1).
pub fn connection_functional(
    op: &FOp,
    psi: &InsertionTuple,
    phi: &InsertionTuple,
    t: &ConnectionTruncation,
    tol: f64,
) -> Result<ConnectionReport> {
    if psi.genus != phi.genus {
        return Err(Error::InvalidArgument(format!("psi is tagged genus {} but phi genus {}", psi.genus, phi.genus)));
    }
    if psi.genus > 1 {
        return Err(Error::Unsupported(format!("connection functional at genus {} (only 0 and 1)", psi.genus)));
    }
    let [x] = psi.insertions.as_slice() else {
        return Err(Error::InvalidArgument(format!("psi must hold one insertion, found {}", psi.insertions.len())));
    };
    let comps = components(op, x, &phi.insertions, phi.genus, t)?;
    let mut g = empty(phi.genus, t);
    for c in &comps {
        axpy(&mut g, C64::new(1.0, 0.0), c);
    }
    let max_abs = g.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let vanishes = max_abs <= tol;
    Ok(ConnectionReport {
        genus: phi.genus,
        components: comps,
        g_value: g,
        max_abs,
        vanishes,
        membership: if vanishes { "Con" } else { "G" },
    })
}
