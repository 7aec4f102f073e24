//! Residuals of the chain conditions.
//!
//! Each condition is reported twice. The literal residual measures the
//! composed operators themselves. The antisymmetrized residual compares the
//! composition with the one obtained by exchanging the two inserted states
//! (or handles, or descriptors), which is exactly zero for vacuum insertions.
//! Nothing here fails on a nonzero residual; errors are recorded per case.

use serde::Serialize;

use crate::complex::genus0::{genus0_npoint, reduce_genus0, Insertion};
use crate::complex::genus1::{genus1_d1, genus1_d2, reduce_genus1};
use crate::complex::probe::Probe;
use crate::complex::total::{total_differential, TotalDescriptor};
use crate::scalar::{Field, GaussQ, Ring, Q, C64};
use crate::schottky::{dual_state, exp_chart, sewn_series, HandleSlots};
use crate::series::TruncatedSeries;
use crate::voa::{fock_level, FockVector};
use crate::{exec, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    /// `D^{n+1}(x') D^n(x) F = 0`
    N,
    /// `D^{g+1} D^g F = 0`
    G,
    /// `D^g D^n(x) F = D^n(x) D^g F`
    GN,
    /// `d^{m+1} d^m = 0`
    Total,
}

/// One case of the suite.
#[derive(Clone, Debug)]
pub enum ChainCase {
    /// Two reduction steps at genus 0 or 1 on the function of `base`.
    N { genus: usize, base: Vec<Insertion<C64>>, x: Insertion<C64>, x_prime: Insertion<C64>, q_order: i64 },
    /// Two handles at finite points attached to the sphere function of
    /// `base`, evaluated exactly over the Gaussian rationals.
    G { base: Vec<Insertion<C64>>, first: (C64, C64), second: (C64, C64), orders: [i64; 2] },
    /// Boundary sewing of the sphere function against the genus-one
    /// reduction by `x`, both as `q`-series of order `q_order`.
    GN { base: Vec<Insertion<C64>>, x: Insertion<C64>, q_order: i64 },
    /// `d^{m+1} d^m` on a probe for two descriptor choices.
    Total { probe: Box<Probe>, m: usize, a: TotalDescriptor, b: TotalDescriptor },
}

impl ChainCase {
    pub fn condition(&self) -> Condition {
        match self {
            ChainCase::N { .. } => Condition::N,
            ChainCase::G { .. } => Condition::G,
            ChainCase::GN { .. } => Condition::GN,
            ChainCase::Total { .. } => Condition::Total,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResidual {
    pub condition: Condition,
    pub label: String,
    /// Largest coefficient of the composed operators applied to the input.
    pub literal: Option<f64>,
    /// Largest coefficient of the difference under exchange. For the
    /// commutation condition this is the commutator itself.
    pub antisymmetrized: Option<f64>,
    pub exact_zero: bool,
    /// Whether the antisymmetrized residual is within tolerance, relative to
    /// `max(1, literal)`.
    pub satisfied: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub tolerance: f64,
    pub residuals: Vec<ConditionResidual>,
}

impl ChainReport {
    /// Conditions whose every case is satisfied: evidence for membership of
    /// the probed insertions in the corresponding set.
    pub fn satisfied(&self, c: Condition) -> bool {
        self.residuals.iter().filter(|r| r.condition == c).all(|r| r.satisfied)
    }
}

fn series_max(s: &TruncatedSeries<C64>) -> f64 {
    s.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max)
}

fn series_diff(a: &TruncatedSeries<C64>, b: &TruncatedSeries<C64>) -> Result<f64> {
    Ok(series_max(&a.try_sub(b)?))
}

fn vac() -> FockVector {
    FockVector::vacuum(i64::MAX)
}

fn n_condition(genus: usize, base: &[Insertion<C64>], x: &Insertion<C64>, xp: &Insertion<C64>, q_order: i64) -> Result<(f64, f64)> {
    let ordered = |first: &Insertion<C64>, second: &Insertion<C64>| {
        let mut all = vec![first.clone(), second.clone()];
        all.extend_from_slice(base);
        all
    };
    match genus {
        0 => {
            let lit = reduce_genus0(&vac(), &ordered(xp, x), &vac())?;
            let swp = reduce_genus0(&vac(), &ordered(x, xp), &vac())?;
            Ok((lit.norm(), (lit - swp).norm()))
        }
        1 => {
            let lit = reduce_genus1(&ordered(xp, x), q_order)?;
            let swp = reduce_genus1(&ordered(x, xp), q_order)?;
            Ok((series_max(&lit), series_diff(&lit, &swp)?))
        }
        g => Err(Error::Unsupported(format!("N condition at genus {g} (only 0 and 1)"))),
    }
}

fn exact(z: C64) -> Result<GaussQ> {
    let conv = |x: f64| Q::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("non-finite point coordinate {x}")));
    Ok(GaussQ::new(conv(z.re)?, conv(z.im)?))
}

/// Coefficients `[i][j]` of `rho_1^i rho_2^j` for handles sewn at `h1`
/// then `h2`, each pair inserted right after the current insertions.
fn two_handles<F: Field>(base: &[Insertion<F>], h1: &(F, F), h2: &(F, F), orders: [i64; 2]) -> Result<Vec<Vec<F>>> {
    let v = vac();
    let mut out = vec![vec![F::zero(); orders[1] as usize]; orders[0] as usize];
    for i in 0..orders[0] {
        for j in 0..orders[1] {
            let mut acc = F::zero();
            for s1 in fock_level(i) {
                for s2 in fock_level(j) {
                    let mut all = base.to_vec();
                    all.push(Insertion::new(dual_state(&s1), h1.0.clone()));
                    all.push(Insertion::new(FockVector::basis(s1.clone(), i64::MAX), h1.1.clone()));
                    all.push(Insertion::new(dual_state(&s2), h2.0.clone()));
                    all.push(Insertion::new(FockVector::basis(s2, i64::MAX), h2.1.clone()));
                    acc = acc + genus0_npoint(&v, &all, &v)?;
                }
            }
            out[i as usize][j as usize] = acc;
        }
    }
    Ok(out)
}

fn g_condition(base: &[Insertion<C64>], first: (C64, C64), second: (C64, C64), orders: [i64; 2]) -> Result<(f64, f64)> {
    let base: Vec<Insertion<GaussQ>> =
        base.iter().map(|x| Ok(Insertion::new(x.state.clone(), exact(x.point)?))).collect::<Result<_>>()?;
    let h1 = (exact(first.0)?, exact(first.1)?);
    let h2 = (exact(second.0)?, exact(second.1)?);
    let lit = two_handles(&base, &h1, &h2, orders)?;
    let swp = two_handles(&base, &h2, &h1, [orders[1], orders[0]])?;
    let mut lmax: f64 = 0.0;
    let mut dmax: f64 = 0.0;
    for i in 0..orders[0] as usize {
        for j in 0..orders[1] as usize {
            lmax = lmax.max(lit[i][j].magnitude());
            dmax = dmax.max((lit[i][j].clone() - swp[j][i].clone()).magnitude());
        }
    }
    Ok((lmax, dmax))
}

/// The boundary-sewn sphere function of torus insertions, as a `q`-series.
pub fn sewn_torus(ins: &[Insertion<C64>], q_order: i64) -> Result<TruncatedSeries<C64>> {
    let v = vac();
    let eval = |o: &FockVector, x: &[Insertion<C64>], i: &FockVector| genus0_npoint(o, x, i);
    let mut acc = TruncatedSeries::zero("q", q_order);
    for (c, list) in exp_chart(ins) {
        let s = sewn_series(&eval, &v, &list, &v, &[HandleSlots::Boundary], &[q_order])?.to_series()?.with_var("q");
        acc = acc.try_add(&s.scale(&c))?;
    }
    Ok(acc)
}

fn gn_condition(base: &[Insertion<C64>], x: &Insertion<C64>, q_order: i64) -> Result<(f64, f64)> {
    let mut all = vec![x.clone()];
    all.extend_from_slice(base);
    let sew_then = sewn_torus(&all, q_order)?;
    let rest = sewn_torus(base, q_order)?;
    let d1 = genus1_d1(&x.state, &rest, q_order)?;
    let d2 = genus1_d2(x, base, q_order, &|ins| sewn_torus(ins, q_order))?;
    let reduce_then = d1.try_add(&d2)?;
    let comm = series_diff(&sew_then, &reduce_then)?;
    Ok((comm, comm))
}

fn total_condition(probe: &Probe, m: usize, a: &TotalDescriptor, b: &TotalDescriptor) -> Result<(f64, f64)> {
    let (da, da1) = (total_differential(probe, m, a)?, total_differential(probe, m + 1, a)?);
    let (db, db1) = (total_differential(probe, m, b)?, total_differential(probe, m + 1, b)?);
    let lit = &da1 * &da;
    let anti = &db1 * &da - &da1 * &db;
    let max = |x: &nalgebra::DMatrix<C64>| x.iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok((max(&lit), max(&anti)))
}

fn label(case: &ChainCase) -> String {
    let states = |xs: &[&Insertion<C64>]| {
        xs.iter()
            .map(|x| format!("{}@{}", x.state.weight().map_or("mixed".into(), |w| format!("wt{w}")), x.point))
            .collect::<Vec<_>>()
            .join(",")
    };
    match case {
        ChainCase::N { genus, base, x, x_prime, .. } => {
            format!("N genus {genus}: x'={} x={} base=[{}]", states(&[x_prime]), states(&[x]), states(&base.iter().collect::<Vec<_>>()))
        }
        ChainCase::G { base, orders, .. } => format!("G: base=[{}] orders={orders:?}", states(&base.iter().collect::<Vec<_>>())),
        ChainCase::GN { base, x, q_order } => {
            format!("GN: x={} base=[{}] q_order={q_order}", states(&[x]), states(&base.iter().collect::<Vec<_>>()))
        }
        ChainCase::Total { m, .. } => format!("Total: m={m}"),
    }
}

pub fn run_case(case: &ChainCase, tol: f64) -> ConditionResidual {
    let res = match case {
        ChainCase::N { genus, base, x, x_prime, q_order } => n_condition(*genus, base, x, x_prime, *q_order),
        ChainCase::G { base, first, second, orders } => g_condition(base, *first, *second, *orders),
        ChainCase::GN { base, x, q_order } => gn_condition(base, x, *q_order),
        ChainCase::Total { probe, m, a, b } => total_condition(probe, *m, a, b),
    };
    let (literal, antisymmetrized, error) = match res {
        Ok((l, a)) => (Some(l), Some(a), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    ConditionResidual {
        condition: case.condition(),
        label: label(case),
        literal,
        antisymmetrized,
        exact_zero: antisymmetrized == Some(0.0),
        satisfied: matches!((literal, antisymmetrized), (Some(l), Some(a)) if a <= tol * l.max(1.0)),
        error,
    }
}

/// Runs every case, independent cases concurrently.
pub fn check_chain_conditions(suite: &[ChainCase], tol: f64) -> ChainReport {
    ChainReport { tolerance: tol, residuals: exec::map_collect(suite, |c| run_case(c, tol)) }
}
