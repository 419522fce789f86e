//! Nets, distance-to-net embeddings, doubling estimates and the pigeonhole freeness
//! bound on finite samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{globq_bound, globq_exponent};
use crate::metric::{FiniteMetricSpace, MetricError};
use crate::sra::{check_alpha, max_sra_subset, SraError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Sra(#[from] SraError),
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("need 0 < r < R, got r = {r}, R = {big_r}")]
    InvalidRadii { r: f64, big_r: f64 },
    #[error("net is empty")]
    EmptyNet,
    #[error("index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },
}

fn check_radius(r: f64) -> Result<(), NetError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(NetError::InvalidRadius(r))
    }
}

fn check_indices(m: &FiniteMetricSpace, idx: &[usize]) -> Result<(), NetError> {
    match idx.iter().find(|&&i| i >= m.len()) {
        Some(&index) => Err(NetError::IndexOutOfRange { index, n: m.len() }),
        None => Ok(()),
    }
}

/// Farthest-point greedy `r`-net of the points `on`, starting from `on[0]`.
///
/// Every point of `on` ends within `r` of a net point, and net points are pairwise more
/// than `r` apart. Ties go to the earlier entry of `on`.
pub fn greedy_net(m: &FiniteMetricSpace, r: f64, on: &[usize]) -> Result<Vec<usize>, NetError> {
    check_radius(r)?;
    check_indices(m, on)?;
    let Some(&first) = on.first() else {
        return Ok(Vec::new());
    };
    let mut net = vec![first];
    let mut gap: Vec<f64> = on.iter().map(|&p| m.d(p, first)).collect();
    loop {
        let (pos, far) = gap.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc });
        if far <= r {
            return Ok(net);
        }
        let z = on[pos];
        net.push(z);
        for (g, &p) in gap.iter_mut().zip(on) {
            *g = g.min(m.d(p, z));
        }
    }
}

/// The map `p ↦ (d(p, z_1), …, d(p, z_N))` into sup-norm coordinates and its measured
/// bi-Lipschitz factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetEmbedding {
    pub net: Vec<usize>,
    pub coords: Vec<Vec<f64>>,
    /// Minimum over pairs of `‖Φ(p) − Φ(y)‖∞ / d(p, y)`.
    pub gamma: f64,
    /// Maximum of the same ratio; at most 1 by the triangle inequality.
    pub upper: f64,
}

impl NetEmbedding {
    pub fn net_size(&self) -> usize {
        self.net.len()
    }
}

/// Coordinates and ratio extremes over all pairs at positive distance; with no such
/// pair both factors are 1.
pub fn net_embed(m: &FiniteMetricSpace, net: &[usize]) -> Result<NetEmbedding, NetError> {
    if net.is_empty() {
        return Err(NetError::EmptyNet);
    }
    check_indices(m, net)?;
    let n = m.len();
    let coords: Vec<Vec<f64>> = (0..n).map(|p| net.iter().map(|&z| m.d(p, z)).collect()).collect();
    let (gamma, upper) = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for y in p + 1..n {
                let d = m.d(p, y);
                if d <= 0.0 {
                    continue;
                }
                let sup = coords[p].iter().zip(&coords[y]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                lo = lo.min(sup / d);
                hi = hi.max(sup / d);
            }
            (lo, hi)
        })
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let (gamma, upper) = if gamma.is_finite() { (gamma, upper) } else { (1.0, 1.0) };
    Ok(NetEmbedding { net: net.to_vec(), coords, gamma, upper })
}

/// Points whose distance to `center` lies in `[R − δ, R + δ]`: a finite stand-in for
/// the sphere `S_R(center)`.
pub fn sphere_annulus(m: &FiniteMetricSpace, center: usize, big_r: f64, delta: f64) -> Vec<usize> {
    (0..m.len()).filter(|&p| (m.d(center, p) - big_r).abs() <= delta).collect()
}

/// Closed ball `B_r(center)`, center first, then the other points in index order.
pub fn ball(m: &FiniteMetricSpace, center: usize, r: f64) -> Vec<usize> {
    std::iter::once(center)
        .chain((0..m.len()).filter(|&p| p != center && m.d(center, p) <= r))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingRow {
    pub scale: f64,
    /// Largest greedy `scale`-cover of a `2·scale`-ball.
    pub lambda: usize,
    /// Center attaining it (lowest index).
    pub center: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingEstimate {
    pub rows: Vec<DoublingRow>,
    /// Maximum over scales.
    pub lambda: usize,
}

/// For each scale `s`, covers every ball `B_{2s}(x)` greedily by `s`-balls (starting at
/// `x`) and reports the largest cover.
pub fn doubling_estimate(m: &FiniteMetricSpace, scales: &[f64]) -> Result<DoublingEstimate, NetError> {
    let rows = scales
        .iter()
        .map(|&s| {
            check_radius(s)?;
            let sizes: Vec<usize> = (0..m.len())
                .into_par_iter()
                .map(|x| greedy_net(m, s, &ball(m, x, 2.0 * s)).map(|net| net.len()))
                .collect::<Result<_, _>>()?;
            let (center, lambda) = sizes.iter().enumerate().fold((0, 0), |acc, (x, &c)| if c > acc.1 { (x, c) } else { acc });
            Ok(DoublingRow { scale: s, lambda, center })
        })
        .collect::<Result<Vec<_>, NetError>>()?;
    let lambda = rows.iter().map(|r| r.lambda).max().unwrap_or(0);
    Ok(DoublingEstimate { rows, lambda })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverRow {
    pub basepoint: usize,
    /// Size of `B_R(basepoint)`.
    pub ball_size: usize,
    /// Greedy `r`-cover of `B_R(basepoint)`.
    pub centers: Vec<usize>,
    /// Largest SRA(α) subset of each `B_r(center)`.
    pub per_ball: Vec<usize>,
    pub per_ball_max: usize,
    /// Largest SRA(α) subset of `B_R(basepoint)`.
    pub global_max: usize,
    /// Every search behind this row completed.
    pub exact: bool,
    /// `global_max ≤ |centers| · per_ball_max`.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub alpha: f64,
    pub r: f64,
    pub big_r: f64,
    pub k: u64,
    pub rows: Vec<CoverRow>,
    /// `Some(true)` if every exact row satisfies the inequality, `None` if some row
    /// hit the search budget and no exact row failed.
    pub holds: Option<bool>,
    /// Doubling estimate over the scales `r, 2r, …` below `R`.
    pub lambda: usize,
    /// `k·λ^⌈log₂(R/r)⌉` with the measured `λ`.
    pub globq_bound: String,
    /// Whether every `r`-ball was found free of `k`-point SRA(α) subspaces.
    pub balls_free_of_k: bool,
}

/// Pigeonhole check: every `R`-ball, covered by `c` balls `B_r(y)`, has no SRA(α)
/// subset larger than `c` times the largest one inside a single `B_r(y)`.
pub fn freeness_via_cover(
    m: &FiniteMetricSpace,
    alpha: f64,
    r: f64,
    big_r: f64,
    k: u64,
    budget: u64,
) -> Result<CoverReport, NetError> {
    check_alpha(alpha)?;
    if !(r > 0.0 && r < big_r && big_r.is_finite()) {
        return Err(NetError::InvalidRadii { r, big_r });
    }
    let rows: Vec<CoverRow> = (0..m.len())
        .into_par_iter()
        .map(|x| {
            let region = ball(m, x, big_r);
            let centers = greedy_net(m, r, &region)?;
            let mut exact = true;
            let mut per_ball = Vec::with_capacity(centers.len());
            for &y in &centers {
                let c = max_sra_subset(&m.subspace(&ball(m, y, r))?, alpha, budget)?;
                exact &= c.optimal;
                per_ball.push(if c.optimal { c.size } else { c.bound });
            }
            let g = max_sra_subset(&m.subspace(&region)?, alpha, budget)?;
            exact &= g.optimal;
            let per_ball_max = per_ball.iter().copied().max().unwrap_or(0);
            Ok(CoverRow {
                basepoint: x,
                ball_size: region.len(),
                holds: g.size <= centers.len() * per_ball_max,
                centers,
                per_ball,
                per_ball_max,
                global_max: g.size,
                exact,
            })
        })
        .collect::<Result<_, NetError>>()?;
    let failed = rows.iter().any(|row| row.exact && !row.holds);
    let holds = if failed {
        Some(false)
    } else if rows.iter().all(|row| row.exact) {
        Some(true)
    } else {
        None
    };
    let e = globq_exponent(big_r, r);
    let scales: Vec<f64> = (0..e).map(|i| r * 2f64.powi(i as i32)).collect();
    let lambda = doubling_estimate(m, &scales)?.lambda.max(1);
    let bound = globq_bound(k.max(1), lambda as u64, big_r, r).map(|b| b.to_string()).unwrap_or_default();
    let balls_free_of_k = rows.iter().all(|row| (row.per_ball_max as u64) < k);
    Ok(CoverReport { alpha, r, big_r, k, rows, holds, lambda, globq_bound: bound, balls_free_of_k })
}
