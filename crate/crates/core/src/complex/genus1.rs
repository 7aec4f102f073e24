//! Correlation functions on the torus.
//!
//! Values are `q`-series `G(q)` with the overall `q^{-1/24}` kept aside, so a
//! genus-one `n`-point function is `q^{-1/24} G(q)`. [`genus1_npoint_trace`]
//! computes `G` by brute force over the truncated Fock basis;
//! [`reduce_genus1`] builds it from the partition function with the torus
//! reduction formula and the kernels `P_{m+1}`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::complex::genus0::Insertion;
use crate::elliptic::pm_qseries;
use crate::scalar::{q, q_to_f64, Field, C64, Q};
use crate::series::{Comparison, TruncatedSeries};
use crate::voa::{fock_basis, fock_level, square_bracket_mode, vertex_mode, zero_mode, FockState, FockVector};
use crate::{exec, Error, Result};

/// The exponent of the symbolic prefactor `q^{-c/24}`, `c = 1`.
pub fn vacuum_prefactor_exponent() -> Q {
    q(-1, 24)
}

/// Extra weight levels the trace needs above `q_order` once two or more
/// states are inserted.
pub const TRACE_MARGIN: i64 = 4;

/// `sum_N p(N) q^N`, the graded dimension of the Fock module.
pub fn partition_series(q_order: i64) -> TruncatedSeries<C64> {
    let n = q_order.max(0) as usize;
    let mut p = vec![0u64; n.max(1)];
    p[0] = 1;
    for k in 1..n {
        for m in k..n {
            p[m] += p[m - k];
        }
    }
    TruncatedSeries::from_dense("q", 0, p.into_iter().map(|c| C64::new(c as f64, 0.0)).collect(), q_order)
}

fn level_offsets(cutoff: i64) -> (Vec<FockState>, HashMap<FockState, usize>) {
    let basis = fock_basis(cutoff);
    let index = basis.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    (basis, index)
}

/// The operator `Y(x^{L(0)} v, x)` with `x = e^z` on the basis below `cutoff`,
/// dropping components that leave the truncated space.
fn insertion_matrix(v: &FockVector, z: C64, basis: &[FockState], index: &HashMap<FockState, usize>, cutoff: i64) -> DMatrix<C64> {
    let dim = basis.len();
    let x = z.exp();
    let columns: Vec<Vec<(usize, C64)>> = exec::map_collect(basis, |s| {
        let w = s.weight();
        let input = FockVector::basis(s.clone(), i64::MAX);
        let mut col = Vec::new();
        for (wt, piece) in v.homogeneous_parts() {
            let piece = piece.with_cutoff(i64::MAX);
            for target in 0..cutoff {
                let n = w + wt - target - 1;
                let image = vertex_mode(&piece, n, &input);
                let factor = x.powi((target - w) as i32);
                for (t, c) in image.terms() {
                    col.push((index[t], factor * c.to_c64()));
                }
            }
        }
        col
    });
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, c) in col {
            m[(i, j)] += c;
        }
    }
    m
}

/// `G(q)` for `Tr Y(q_1^{L(0)} v_1, q_1) ... Y(q_n^{L(0)} v_n, q_n) q^{L(0) - 1/24}`
/// with `q_i = e^{z_i}`, summing intermediate states of weight below
/// `weight_cutoff`. Convergence of the intermediate sums needs
/// `Re z_1 > Re z_2 > ... > Re z_n`.
pub fn genus1_npoint_trace(ins: &[Insertion<C64>], q_order: i64, weight_cutoff: i64) -> Result<TruncatedSeries<C64>> {
    let margin = if ins.len() >= 2 { TRACE_MARGIN } else { 0 };
    if weight_cutoff < q_order + margin {
        return Err(Error::InvalidArgument(format!(
            "weight cutoff {weight_cutoff} too small: q-order {q_order} with {} insertions needs at least {}",
            ins.len(),
            q_order + margin
        )));
    }
    let (basis, index) = level_offsets(weight_cutoff);
    let dim = basis.len();
    let mut prod = DMatrix::<C64>::identity(dim, dim);
    for x in ins {
        prod *= insertion_matrix(&x.state, x.point, &basis, &index, weight_cutoff);
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); q_order.max(0) as usize];
    for (i, s) in basis.iter().enumerate() {
        let w = s.weight();
        if w < q_order {
            coeffs[w as usize] += prod[(i, i)];
        }
    }
    Ok(TruncatedSeries::from_dense("q", 0, coeffs, q_order))
}

/// How a zero mode acts on the truncated module.
#[derive(Clone, Debug, PartialEq)]
pub enum ZeroModeAction {
    /// `o(v) = mu`
    Scalar(Q),
    /// `o(v) = lambda L(0) + mu`
    Affine { lambda: Q, mu: Q },
}

/// Classifies `o(v)` on states of weight below `cutoff`, or reports that it
/// is not of the form `lambda L(0) + mu`.
pub fn classify_zero_mode(v: &FockVector, cutoff: i64) -> Result<ZeroModeAction> {
    let op = zero_mode(&v.with_cutoff(i64::MAX));
    let mut eig: Vec<(i64, Q)> = Vec::new();
    for s in fock_basis(cutoff.max(1)) {
        let u = FockVector::basis(s.clone(), i64::MAX);
        let image = op.apply(&u)?;
        let c = image.coeff(&s);
        if image.len() > usize::from(!c.is_zero()) {
            return Err(Error::Unsupported(format!("o(v) is not diagonal on {s:?}")));
        }
        eig.push((s.weight(), c));
    }
    let mu = eig[0].1.clone();
    let lambda = eig.iter().find(|(w, _)| *w == 1).map(|(_, c)| c - &mu).unwrap_or_else(Q::zero);
    for (w, c) in &eig {
        if *c != &mu + &lambda * Q::from_integer((*w).into()) {
            return Err(Error::Unsupported("o(v) is not of the form lambda L(0) + mu".into()));
        }
    }
    Ok(if lambda.is_zero() { ZeroModeAction::Scalar(mu) } else { ZeroModeAction::Affine { lambda, mu } })
}

fn scale_series(s: &TruncatedSeries<C64>, c: &Q) -> TruncatedSeries<C64> {
    s.scale(&c.to_c64())
}

/// The zero-mode part of the torus reduction: `Tr o(v) Y(x) q^{L(0) - 1/24}`
/// given `G` for the remaining insertions.
pub fn genus1_d1(v: &FockVector, rest_value: &TruncatedSeries<C64>, q_order: i64) -> Result<TruncatedSeries<C64>> {
    Ok(match classify_zero_mode(v, q_order)? {
        ZeroModeAction::Scalar(mu) => scale_series(rest_value, &mu),
        ZeroModeAction::Affine { lambda, mu } => {
            scale_series(&rest_value.euler_derivative(), &lambda) + scale_series(rest_value, &mu)
        }
    })
}

/// The kernel part: `sum_k sum_{m >= 0} P_{m+1}(z - z_k) F(..., v[m] v_k, ...)`.
pub fn genus1_d2(
    new: &Insertion<C64>,
    rest: &[Insertion<C64>],
    q_order: i64,
    eval: &dyn Fn(&[Insertion<C64>]) -> Result<TruncatedSeries<C64>>,
) -> Result<TruncatedSeries<C64>> {
    let mut acc = TruncatedSeries::zero("q", q_order);
    let v = new.state.with_cutoff(i64::MAX);
    let wt_v = v.terms().map(|(s, _)| s.weight()).max().unwrap_or(0);
    for k in 0..rest.len() {
        let vk = rest[k].state.with_cutoff(i64::MAX);
        let wt_k = vk.terms().map(|(s, _)| s.weight()).max().unwrap_or(0);
        for m in 0..(wt_v + wt_k) {
            let moved = square_bracket_mode(&v, m).apply(&vk)?;
            if moved.is_zero() {
                continue;
            }
            let kern = pm_qseries(m + 1, new.point - rest[k].point, q_order)?;
            let mut ins = rest.to_vec();
            ins[k] = Insertion::new(moved, rest[k].point);
            acc = acc + kern * eval(&ins)?;
        }
    }
    Ok(acc)
}

/// `G(q)` built by reduction down to the partition function.
pub fn reduce_genus1(ins: &[Insertion<C64>], q_order: i64) -> Result<TruncatedSeries<C64>> {
    if ins.is_empty() {
        return Ok(partition_series(q_order));
    }
    let rest = &ins[1..];
    let rest_value = reduce_genus1(rest, q_order)?;
    let d1 = genus1_d1(&ins[0].state, &rest_value, q_order)?;
    let d2 = genus1_d2(&ins[0], rest, q_order, &|x| reduce_genus1(x, q_order))?;
    Ok(d1 + d2)
}

/// Largest coefficient deviation, each measured relative to
/// `max(1, |reference coefficient|)`.
pub fn relative_deviation(a: &TruncatedSeries<C64>, reference: &TruncatedSeries<C64>) -> Result<f64> {
    match a.compare(reference)? {
        Comparison::Incomparable => Err(Error::Truncation("series share no known coefficients".into())),
        Comparison::Deviation { upto, .. } => {
            let lo = a.min_exponent().min(reference.min_exponent());
            let mut worst = 0.0f64;
            for e in lo..upto {
                let r = reference.coeff(e);
                let d = (a.coeff(e) - r).norm() / r.norm().max(1.0);
                worst = worst.max(d);
            }
            Ok(worst)
        }
    }
}

/// `Tr L(0)^k q^{L(0)}` as a check on zero-mode insertions.
pub fn weighted_partition_series(power: u32, q_order: i64) -> TruncatedSeries<C64> {
    let mut coeffs = vec![C64::new(0.0, 0.0); q_order.max(0) as usize];
    for w in 0..q_order {
        let dim = fock_level(w).len() as f64;
        coeffs[w as usize] = C64::new(dim * (w as f64).powi(power as i32), 0.0);
    }
    TruncatedSeries::from_dense("q", 0, coeffs, q_order)
}

/// Formats the symbolic prefactor for reports.
pub fn prefactor_label() -> String {
    let e = vacuum_prefactor_exponent();
    format!("q^({}/{})", e.numer(), e.denom())
}

pub fn prefactor_value(q: C64) -> C64 {
    let e = q_to_f64(&vacuum_prefactor_exponent());
    (q.ln() * e).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::qi;

    fn a() -> FockVector {
        FockVector::a(i64::MAX)
    }

    fn vac() -> FockVector {
        FockVector::vacuum(i64::MAX)
    }

    fn p(z: (f64, f64)) -> C64 {
        C64::new(z.0, z.1)
    }

    #[test]
    fn zero_point_is_partition_counts() {
        let t = genus1_npoint_trace(&[], 8, 8).unwrap();
        let expect = [1.0, 1.0, 2.0, 3.0, 5.0, 7.0, 11.0, 15.0];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(t.coeff(n as i64), C64::new(*e, 0.0));
        }
        assert_eq!(t, partition_series(8));
    }

    #[test]
    fn one_point_examples() {
        let z = p((0.3, 0.2));
        let ta = genus1_npoint_trace(&[Insertion::new(a(), z)], 8, 8).unwrap();
        assert!(ta.is_zero());
        let tv = genus1_npoint_trace(&[Insertion::new(vac(), z)], 8, 8).unwrap();
        assert!(relative_deviation(&tv, &partition_series(8)).unwrap() < 1e-14);
    }

    #[test]
    fn cutoff_too_small_is_rejected() {
        let ins = [Insertion::new(a(), p((1.0, 0.0))), Insertion::new(a(), p((-1.0, 0.0)))];
        let err = genus1_npoint_trace(&ins, 8, 10).unwrap_err();
        assert!(format!("{err}").contains("at least 12"));
    }

    #[test]
    fn zero_mode_classification() {
        assert_eq!(classify_zero_mode(&vac(), 6).unwrap(), ZeroModeAction::Scalar(qi(1)));
        assert_eq!(classify_zero_mode(&a(), 6).unwrap(), ZeroModeAction::Scalar(qi(0)));
        let om = FockVector::omega(i64::MAX);
        assert_eq!(
            classify_zero_mode(&om, 6).unwrap(),
            ZeroModeAction::Affine { lambda: qi(1), mu: qi(0) }
        );
        let aa = FockVector::basis(FockState::new(vec![1, 1, 1]).unwrap(), i64::MAX);
        assert!(matches!(classify_zero_mode(&aa, 6), Err(Error::Unsupported(_))));
    }

    #[test]
    fn two_point_reduction_matches_trace() {
        let (z1, z2) = (p((1.5, 0.4)), p((-1.5, -0.3)));
        for (u, v) in [(a(), a()), (a(), vac()), (vac(), a()), (vac(), vac())] {
            let ins = [Insertion::new(u.clone(), z1), Insertion::new(v.clone(), z2)];
            let t = genus1_npoint_trace(&ins, 8, 12).unwrap();
            let r = reduce_genus1(&ins, 8).unwrap();
            let d = relative_deviation(&r, &t).unwrap();
            assert!(d < 1e-9, "u={u:?} v={v:?} dev={d}");
        }
    }

    #[test]
    fn shifted_virasoro_zero_mode_gives_weighted_trace() {
        // omega~ = omega - 1/24: o(omega~) = L(0) - 1/24
        let wt = FockVector::omega(i64::MAX).sub(&vac().scale(&q(1, 24)));
        let f = reduce_genus1(&[Insertion::new(wt, p((0.2, 0.1)))], 8).unwrap();
        let expect = weighted_partition_series(1, 8) - partition_series(8).scale(&C64::new(1.0 / 24.0, 0.0));
        assert!(relative_deviation(&f, &expect).unwrap() < 1e-14);
        // and against the trace with L(0) inserted as the brute-force oracle
        let t = genus1_npoint_trace(&[Insertion::new(FockVector::omega(i64::MAX), p((0.2, 0.1)))], 8, 8).unwrap();
        assert!(relative_deviation(&t, &weighted_partition_series(1, 8)).unwrap() < 1e-12);
    }
}
