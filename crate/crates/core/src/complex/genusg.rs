//! Reduction at genus `g` for a quasiprimary state of weight `p`, in the
//! Schottky presentation where every handle sits at its finite points.
//!
//! `F(u, y; x) = sum_a sum_l theta_a(y; l) o_a(l) + sum_k sum_j ∂_y^{(j)} psi_p(y, y_k) F(u(j)_k x)`
//! with `o_a(l)` the basis sum in which `u(l)` acts on the state of handle `a`.
//! Sewn values are `rho`-series; the reduction is compared after evaluating
//! them at the data's `rho_a`.

use crate::complex::genus0::{genus0_npoint, Insertion};
use crate::schottky::{build_r, genus_g_npoint, sewn_series_with, GenusGForms, MultiSeries, SchottkyData};
use crate::scalar::C64;
use crate::voa::{vertex_mode, virasoro_mode, FockVector};
use crate::{Error, Result};

/// Checks that `u` is homogeneous and quasiprimary and returns its weight.
pub fn quasiprimary_weight(u: &FockVector) -> Result<i64> {
    let w = u
        .weight()
        .ok_or_else(|| Error::Unsupported("genus-g reduction needs a homogeneous state".into()))?;
    if !virasoro_mode(1, &u.with_cutoff(i64::MAX)).is_zero() {
        return Err(Error::Unsupported("genus-g reduction needs a quasiprimary state (L(1)u = 0)".into()));
    }
    Ok(w)
}

/// The Schottky data with its weight set to that of `u`.
fn forms_for(sd: &SchottkyData, u: &FockVector) -> Result<GenusGForms> {
    let p = quasiprimary_weight(u)?;
    let mut d = sd.clone();
    d.p = p.max(1);
    if !d.f_coeffs.is_empty() && d.f_coeffs.len() != (2 * d.p - 1) as usize {
        return Err(Error::InvalidArgument(format!("f_coeffs has {} entries, weight {p} needs {}", d.f_coeffs.len(), 2 * d.p - 1)));
    }
    build_r(&d)
}

fn sphere(o: &FockVector, x: &[Insertion<C64>], i: &FockVector) -> Result<C64> {
    genus0_npoint(o, x, i)
}

/// `o_a(l)` for handles `a = 1..=g` and `l = 0..=2p-2`, as `rho`-series.
pub fn o_vectors(sd: &SchottkyData, u: &FockVector, ins: &[Insertion<C64>], orders: &[i64]) -> Result<Vec<Vec<MultiSeries>>> {
    let p = quasiprimary_weight(u)?.max(1);
    let vac = FockVector::vacuum(i64::MAX);
    let u = u.with_cutoff(i64::MAX);
    let handles = sd.handle_slots();
    (0..sd.genus)
        .map(|h| {
            (0..=2 * p - 2)
                .map(|l| {
                    let op = |b: &FockVector| Ok(vertex_mode(&u, l, b));
                    sewn_series_with(&sphere, &vac, ins, &vac, &handles, orders, Some((h, &op)))
                })
                .collect()
        })
        .collect()
}

/// The zero-mode part `sum_a theta_a(y) . o_a`, evaluated at the data's `rho`.
pub fn genus_g_d1(sd: &SchottkyData, u: &FockVector, y: C64, ins: &[Insertion<C64>], orders: &[i64]) -> Result<C64> {
    let forms = forms_for(sd, u)?;
    let sd = &forms.data;
    let o = o_vectors(sd, u, ins, orders)?;
    let mut acc = C64::default();
    for (h, oa) in o.iter().enumerate() {
        let theta = forms.theta(h as i64 + 1, y)?;
        for (t, s) in theta.iter().zip(oa) {
            acc += t * s.eval(&sd.rho);
        }
    }
    Ok(acc)
}

/// The kernel part `sum_k sum_j ∂_y^{(j)} psi_p(y, y_k) F(u(j)_k x)`.
pub fn genus_g_d2(sd: &SchottkyData, u: &FockVector, y: C64, ins: &[Insertion<C64>], orders: &[i64]) -> Result<C64> {
    let forms = forms_for(sd, u)?;
    let sd = &forms.data;
    let p = quasiprimary_weight(u)?;
    let u = u.with_cutoff(i64::MAX);
    let mut acc = C64::default();
    for k in 0..ins.len() {
        let vk = ins[k].state.with_cutoff(i64::MAX);
        let top = vk.terms().map(|(s, _)| s.weight()).max().unwrap_or(0);
        for j in 0..(p + top) {
            let moved = vertex_mode(&u, j, &vk);
            if moved.is_zero() {
                continue;
            }
            let mut rest = ins.to_vec();
            rest[k] = Insertion::new(moved, ins[k].point);
            let f = genus_g_npoint(sd, &rest, orders)?.eval(&sd.rho);
            acc += forms.psi_p_dy(j, y, ins[k].point)? * f;
        }
    }
    Ok(acc)
}

/// Both parts of the genus-`g` reduction, and the directly sewn value they
/// should reproduce.
#[derive(Clone, Debug)]
pub struct GenusGCheck {
    pub d1: C64,
    pub d2: C64,
    pub direct: C64,
    /// Neumann truncation proxy of the forms used.
    pub neumann_error: f64,
}

impl GenusGCheck {
    pub fn residual(&self) -> f64 {
        (self.d1 + self.d2 - self.direct).norm()
    }
}

pub fn genus_g_reduction_check(
    sd: &SchottkyData,
    u: &FockVector,
    y: C64,
    ins: &[Insertion<C64>],
    orders: &[i64],
) -> Result<GenusGCheck> {
    let forms = forms_for(sd, u)?;
    let mut all = vec![Insertion::new(u.clone(), y)];
    all.extend_from_slice(ins);
    Ok(GenusGCheck {
        d1: genus_g_d1(sd, u, y, ins, orders)?,
        d2: genus_g_d2(sd, u, y, ins, orders)?,
        direct: genus_g_npoint(&forms.data, &all, orders)?.eval(&sd.rho),
        neumann_error: forms.neumann.error_proxy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voa::FockState;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn data(genus: usize, rho: f64) -> SchottkyData {
        let pts = [(c(1.0, 0.2), c(-1.0, 0.1)), (c(0.3, 2.0), c(-0.2, -1.8))];
        SchottkyData {
            genus,
            rho: vec![c(rho, 0.0); genus],
            points: pts[..genus].to_vec(),
            p: 1,
            f_coeffs: vec![],
            mode_cutoff: 12,
            neumann_order: 12,
        }
    }

    #[test]
    fn heisenberg_two_point_at_genus_one() {
        let a = FockVector::a(i64::MAX);
        for f in [vec![], vec![vec![(0, c(0.3, -0.2)), (-1, c(0.5, 0.0))]]] {
            let mut sd = data(1, 0.01);
            sd.f_coeffs = f;
            let r = genus_g_reduction_check(&sd, &a, c(0.2, 0.3), &[Insertion::new(a.clone(), c(-0.3, -0.4))], &[7]).unwrap();
            assert_eq!(r.d1, C64::default());
            assert!(r.residual() < 1e-10 * r.direct.norm().max(1.0), "{r:?}");
        }
    }

    #[test]
    fn virasoro_one_point_at_genus_one() {
        let om = FockVector::omega(i64::MAX);
        for f in [vec![], vec![vec![(0, c(0.2, 0.0))], vec![(-1, c(0.1, 0.1))], vec![(1, c(-0.4, 0.0))]]] {
            let mut sd = data(1, 0.01);
            sd.f_coeffs = f;
            let r = genus_g_reduction_check(&sd, &om, c(0.2, 0.3), &[], &[7]).unwrap();
            assert_eq!(r.d2, C64::default());
            assert!(r.residual() < 1e-9 * r.direct.norm().max(1.0), "{r:?}");
        }
    }

    #[test]
    fn heisenberg_two_point_at_genus_two() {
        let a = FockVector::a(i64::MAX);
        let sd = data(2, 0.005);
        let r = genus_g_reduction_check(&sd, &a, c(0.2, 0.3), &[Insertion::new(a.clone(), c(-0.3, -0.4))], &[5, 5]).unwrap();
        assert!(r.residual() < 1e-8 * r.direct.norm().max(1.0), "{r:?}");
    }

    #[test]
    fn non_quasiprimary_is_rejected() {
        let s = FockVector::basis(FockState::new(vec![2]).unwrap(), i64::MAX);
        assert!(matches!(genus_g_d1(&data(1, 0.01), &s, c(0.2, 0.3), &[], &[3]), Err(Error::Unsupported(_))));
    }
}
