//! The total differential `d^m = sum_{g+n=m} (D^g + (-1)^g D^n)` on a probe,
//! and numerical cohomology ranks.
//!
//! `C^m` is `C^{0,m} + C^{1,m-1}` (genus above one lies outside the probe,
//! so `D^g` out of genus one is dropped). Blocks are ordered by genus.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::complex::probe::Probe;
use crate::scalar::{C64, Q};
use crate::{Error, Result};

/// Choices of the inserted state `x_{n+1,g}` for every `(g, n)` block, with
/// switches for the two kinds of differential.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TotalDescriptor {
    /// Pool index of the inserted state for each `(g, n)`.
    pub insert: BTreeMap<(usize, usize), usize>,
    pub sewing: bool,
    pub reduction: bool,
    /// Highest genus kept in the probe (0 or 1).
    pub max_genus: usize,
}

impl TotalDescriptor {
    /// The same pool state at every block.
    pub fn uniform(u: usize, m_max: usize, max_genus: usize) -> Self {
        let mut insert = BTreeMap::new();
        for m in 0..=m_max + 1 {
            for g in 0..=max_genus.min(m) {
                insert.insert((g, m - g), u);
            }
        }
        TotalDescriptor { insert, sewing: true, reduction: true, max_genus }
    }
}

/// Block `(g, n)` entries of `C^m` in order with their offsets.
pub fn blocks(probe: &Probe, m: usize, max_genus: usize) -> Vec<((usize, usize), usize, usize)> {
    let mut out = Vec::new();
    let mut off = 0;
    for g in 0..=max_genus.min(m) {
        let dim = probe.dim(g, m - g);
        out.push(((g, m - g), off, dim));
        off += dim;
    }
    out
}

pub fn total_dim(probe: &Probe, m: usize, max_genus: usize) -> usize {
    blocks(probe, m, max_genus).iter().map(|b| b.2).sum()
}

/// The matrix of `d^m : C^m -> C^{m+1}`.
pub fn total_differential(probe: &Probe, m: usize, desc: &TotalDescriptor) -> Result<DMatrix<C64>> {
    if desc.max_genus > 1 {
        return Err(Error::Unsupported("probes reach genus 1 at most".into()));
    }
    let src = blocks(probe, m, desc.max_genus);
    let dst = blocks(probe, m + 1, desc.max_genus);
    let mut d = DMatrix::zeros(total_dim(probe, m + 1, desc.max_genus), total_dim(probe, m, desc.max_genus));
    let place = |d: &mut DMatrix<C64>, target: (usize, usize), col_off: usize, block: &DMatrix<C64>| {
        let (_, row_off, _) = dst.iter().find(|b| b.0 == target).expect("target block");
        d.view_mut((*row_off, col_off), block.shape()).copy_from(block);
    };
    for &((g, n), col_off, _) in &src {
        if desc.reduction {
            let u = *desc
                .insert
                .get(&(g, n))
                .ok_or_else(|| Error::InvalidArgument(format!("missing descriptor for block (g, n) = ({g}, {n})")))?;
            let sign = if g % 2 == 0 { 1.0 } else { -1.0 };
            let block = probe.matrix(g, n, &|e| probe.apply_dn(u, e))? * C64::new(sign, 0.0);
            place(&mut d, (g, n + 1), col_off, &block);
        }
        if desc.sewing && g < desc.max_genus {
            let block = probe.matrix(g, n, &|e| probe.apply_dg(e))?;
            place(&mut d, (g + 1, n), col_off, &block);
        }
    }
    Ok(d)
}

/// Rank from singular values, with the gap that separates kept from dropped
/// values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub rank: usize,
    pub rows: usize,
    pub cols: usize,
    pub cutoff: f64,
    /// Ratio of the smallest kept to the largest dropped singular value
    /// (infinite when nothing is dropped or the dropped values are zero).
    pub gap: f64,
    pub indeterminate: bool,
}

/// Minimum singular-value gap for a rank to count as determined.
pub const RANK_GAP: f64 = 1e3;

/// Numerical rank after row and column equilibration.
pub fn numeric_rank(m: &DMatrix<C64>, rel_tol: f64) -> RankReport {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return RankReport { rank: 0, rows, cols, cutoff: 0.0, gap: f64::INFINITY, indeterminate: false };
    }
    let mut a = m.clone();
    for mut r in a.row_iter_mut() {
        let s = r.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            r /= C64::new(s, 0.0);
        }
    }
    for mut c in a.column_iter_mut() {
        let s = c.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            c /= C64::new(s, 0.0);
        }
    }
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
    let top = sv.first().copied().unwrap_or(0.0);
    let cutoff = rel_tol * top.max(f64::MIN_POSITIVE);
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    let gap = match (rank.checked_sub(1).map(|i| sv[i]), sv.get(rank)) {
        (Some(kept), Some(&dropped)) if dropped > 0.0 => kept / dropped,
        _ => f64::INFINITY,
    };
    RankReport { rank, rows, cols, cutoff, gap, indeterminate: gap < RANK_GAP }
}

/// Rank by exact row reduction over the rationals.
pub fn exact_rank(rows: &[Vec<Q>]) -> usize {
    let mut a: Vec<Vec<Q>> = rows.to_vec();
    let ncols = a.first().map(|r| r.len()).unwrap_or(0);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..a.len()).find(|&r| !num_traits::Zero::is_zero(&a[r][col])) else {
            continue;
        };
        a.swap(rank, p);
        let piv = a[rank][col].clone();
        let prow = a[rank].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != rank && !num_traits::Zero::is_zero(&row[col]) {
                let f = &row[col] / &piv;
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Ranks and the cohomology dimension at degree `m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CohomologyReport {
    pub m: usize,
    pub dim: usize,
    pub rank_d: RankReport,
    pub kernel: usize,
    pub rank_prev: RankReport,
    /// `max |d^m d^{m-1}|` relative to the largest entry of either factor.
    pub composition_residual: f64,
    /// False when the composition does not vanish at the tolerance, in which
    /// case `h` is `dim ker - rank` of a sequence that is not a complex.
    pub is_complex: bool,
    pub h: i64,
    pub indeterminate: bool,
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn cohomology_ranks(probe: &Probe, m: usize, desc: &TotalDescriptor, rel_tol: f64) -> Result<CohomologyReport> {
    let d = total_differential(probe, m, desc)?;
    let rank_d = numeric_rank(&d, rel_tol);
    let dim = d.ncols();
    let (rank_prev, residual) = if m == 0 {
        (numeric_rank(&DMatrix::zeros(dim, 0), rel_tol), 0.0)
    } else {
        let prev = total_differential(probe, m - 1, desc)?;
        let comp = &d * &prev;
        let scale = (max_abs(&d) * max_abs(&prev)).max(f64::MIN_POSITIVE);
        (numeric_rank(&prev, rel_tol), max_abs(&comp) / scale)
    };
    let kernel = dim - rank_d.rank;
    Ok(CohomologyReport {
        m,
        dim,
        kernel,
        h: kernel as i64 - rank_prev.rank as i64,
        is_complex: residual <= rel_tol,
        indeterminate: rank_d.indeterminate || rank_prev.indeterminate,
        composition_residual: residual,
        rank_d,
        rank_prev,
    })
}
