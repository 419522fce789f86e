//! The SRA(α) condition: `d(x,y) ≤ max{d(x,z) + α·d(z,y), α·d(x,z) + d(z,y)}` for every
//! middle point `z`.
//!
//! Besides the predicate this module computes the critical α of a space (the least α
//! making every triple pass), and the largest SRA(α) subspace. A subset is SRA(α) iff it
//! spans no violating triple, so the largest one is a maximum independent set in the
//! 3-uniform hypergraph of violating triples, found here by branch and bound.

use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::{words_for, Bits};
use crate::metric::{FiniteMetricSpace, ModelKind, PointCloud};

/// Default node budget for the exact subset search.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Above this size the violating-triple hypergraph is evaluated on demand instead of
/// being stored as `n²` bitsets.
pub const DENSE_HYPERGRAPH_LIMIT: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SraError {
    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("angle audit needs a euclidean-l2 cloud, got {0}")]
    NotEuclidean(String),
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), SraError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(SraError::AlphaOutOfRange(alpha))
    }
}

/// `d(x,y) − max{d(x,z) + α d(z,y), α d(x,z) + d(z,y)}`; positive means violation.
#[inline]
pub fn slack(dxy: f64, dxz: f64, dzy: f64, alpha: f64) -> f64 {
    dxy - (dxz + alpha * dzy).max(alpha * dxz + dzy)
}

/// Slack of the ordered triple `(x, z, y)` with `z` in the middle.
pub fn triple_slack(m: &FiniteMetricSpace, x: usize, z: usize, y: usize, alpha: f64) -> f64 {
    slack(m.d(x, y), m.d(x, z), m.d(z, y), alpha)
}

/// Whether the unordered triple `{a, b, c}` violates SRA(α) for some choice of middle.
pub fn triple_violates(m: &FiniteMetricSpace, a: usize, b: usize, c: usize, alpha: f64, tol: f64) -> bool {
    triple_slack(m, a, b, c, alpha) > tol
        || triple_slack(m, b, a, c, alpha) > tol
        || triple_slack(m, a, c, b, alpha) > tol
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: usize,
    pub z: usize,
    pub y: usize,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SraVerdict {
    pub alpha: f64,
    pub tol: f64,
    pub is_sra: bool,
    /// Violating triples `(x, z, y)` with `x < y`; the condition is symmetric in `x, y`.
    pub violations: Vec<Violation>,
}

/// Checks every triple of distinct points; a violation is `slack > tol`.
pub fn is_sra(m: &FiniteMetricSpace, alpha: f64, tol: f64) -> Result<SraVerdict, SraError> {
    check_alpha(alpha)?;
    let n = m.len();
    let violations: Vec<Violation> = (0..n)
        .into_par_iter()
        .flat_map_iter(|x| {
            let mut local = Vec::new();
            for y in x + 1..n {
                for z in 0..n {
                    if z == x || z == y {
                        continue;
                    }
                    let s = triple_slack(m, x, z, y, alpha);
                    if s > tol {
                        local.push(Violation { x, z, y, slack: s });
                    }
                }
            }
            local
        })
        .collect();
    Ok(SraVerdict { alpha, tol, is_sra: violations.is_empty(), violations })
}

/// [`is_sra`] with the default tolerance `1e-9·(1 + diameter)`.
pub fn is_sra_default(m: &FiniteMetricSpace, alpha: f64) -> Result<SraVerdict, SraError> {
    is_sra(m, alpha, m.default_tol())
}

/// Least α for which every triple passes: the maximum over triples of
/// `min{(d(x,y) − d(x,z))/d(z,y), (d(x,y) − d(z,y))/d(x,z)}`, clamped at 0.
///
/// A triple violates SRA(α) exactly when α is below its own minimum, so the space is
/// SRA(α) iff `α ≥ critical_alpha`. Returns 0 for spaces with at most two points.
pub fn critical_alpha(m: &FiniteMetricSpace) -> f64 {
    let n = m.len();
    (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best = 0.0f64;
            for y in x + 1..n {
                let dxy = m.d(x, y);
                for z in 0..n {
                    if z == x || z == y {
                        continue;
                    }
                    let (dxz, dzy) = (m.d(x, z), m.d(z, y));
                    let t = ((dxy - dxz) / dzy).min((dxy - dzy) / dxz);
                    best = best.max(t);
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// The violating-triple hypergraph: for a pair `(x, y)`, the set of `z` with `{x,y,z}`
/// violating.
pub(crate) struct ViolationHypergraph<'a> {
    n: usize,
    words: usize,
    repr: Repr<'a>,
}

enum Repr<'a> {
    Dense(Vec<u64>),
    Lazy { m: &'a FiniteMetricSpace, alpha: f64, tol: f64 },
}

impl<'a> ViolationHypergraph<'a> {
    pub fn new(m: &'a FiniteMetricSpace, alpha: f64, tol: f64) -> Self {
        let n = m.len();
        let words = words_for(n);
        if n > DENSE_HYPERGRAPH_LIMIT {
            return Self { n, words, repr: Repr::Lazy { m, alpha, tol } };
        }
        let rows: Vec<Vec<u64>> = (0..n)
            .into_par_iter()
            .map(|x| {
                let mut row = vec![0u64; n * words];
                for y in 0..n {
                    if y == x {
                        continue;
                    }
                    let block = &mut row[y * words..(y + 1) * words];
                    for z in 0..n {
                        if z != x && z != y && triple_violates(m, x, y, z, alpha, tol) {
                            block[z / 64] |= 1 << (z % 64);
                        }
                    }
                }
                row
            })
            .collect();
        Self { n, words, repr: Repr::Dense(rows.concat()) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn conflicts(&self, x: usize, y: usize) -> Cow<'_, [u64]> {
        match &self.repr {
            Repr::Dense(bits) => {
                let start = (x * self.n + y) * self.words;
                Cow::Borrowed(&bits[start..start + self.words])
            }
            Repr::Lazy { m, alpha, tol } => {
                let mut b = Bits::empty(self.n);
                if x != y {
                    for z in 0..self.n {
                        if z != x && z != y && triple_violates(m, x, y, z, *alpha, *tol) {
                            b.insert(z);
                        }
                    }
                }
                Cow::Owned(b.words().to_vec())
            }
        }
    }

    /// Upper bound on the size of an independent set extending `chosen` inside `cand`:
    /// `|chosen| + |cand|` minus a greedy packing of vertex-disjoint constraints, each of
    /// which forces at least one deletion.
    fn bound(&self, chosen: &[usize], cand: &Bits) -> usize {
        let mut used = Bits::empty(self.n);
        let mut forced = 0;
        if !chosen.is_empty() {
            for u in cand.iter() {
                if used.contains(u) {
                    continue;
                }
                let partner = chosen.iter().find_map(|&s| {
                    let c = self.conflicts(s, u);
                    cand.first_and_not(&c, &used).filter(|&w| w != u)
                });
                if let Some(w) = partner {
                    used.insert(u);
                    used.insert(w);
                    forced += 1;
                }
            }
        }
        let members: Vec<usize> = cand.iter().collect();
        for (i, &u) in members.iter().enumerate() {
            if used.contains(u) {
                continue;
            }
            for &v in &members[i + 1..] {
                if used.contains(v) {
                    continue;
                }
                let c = self.conflicts(u, v);
                let mut skip = used.clone();
                skip.insert(u);
                skip.insert(v);
                if let Some(w) = cand.first_and_not(&c, &skip) {
                    used.insert(u);
                    used.insert(v);
                    used.insert(w);
                    forced += 1;
                    break;
                }
            }
        }
        chosen.len() + cand.count() - forced
    }

    /// Residual violating-triple count through `v`, with triples inside `cand` counted
    /// twice and triples through a chosen point counted twice, so both weigh the same.
    fn residual_degree(&self, v: usize, chosen: &[usize], cand: &Bits) -> usize {
        let through_chosen: usize = chosen.iter().map(|&s| cand.count_and(&self.conflicts(s, v))).sum();
        let inside: usize = cand
            .iter()
            .filter(|&u| u != v)
            .map(|u| cand.count_and(&self.conflicts(v, u)))
            .sum();
        2 * through_chosen + inside
    }
}

/// Result of a maximum SRA(α) subset search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetCertificate {
    pub alpha: f64,
    /// Sorted point indices.
    pub subset: Vec<usize>,
    pub size: usize,
    /// The search completed, so no larger SRA(α) subset exists.
    pub optimal: bool,
    /// Best known upper bound on the maximum size (equals `size` when optimal).
    pub bound: usize,
    pub nodes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    /// Violation tolerance; `None` means `1e-9·(1 + diameter)`.
    pub tol: Option<f64>,
    pub budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { tol: None, budget: DEFAULT_NODE_BUDGET }
    }
}

struct Search<'h, 'a> {
    h: &'h ViolationHypergraph<'a>,
    nodes: u64,
    budget: u64,
    aborted: bool,
    best: Vec<usize>,
    open_bound: usize,
}

impl Search<'_, '_> {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
        }
        !self.aborted
    }

    fn include(&self, chosen: &[usize], cand: &Bits, v: usize) -> Bits {
        let mut next = cand.clone();
        next.remove(v);
        for &s in chosen {
            next.and_not(&self.h.conflicts(s, v));
        }
        next
    }

    /// Branch on the vertex in the most residual violating triples (lowest index on ties),
    /// include branch first; only strictly larger solutions replace the incumbent.
    fn branch(&mut self, chosen: &mut Vec<usize>, cand: Bits) {
        if self.aborted {
            return;
        }
        let ub = self.h.bound(chosen, &cand);
        if !self.tick() {
            self.open_bound = self.open_bound.max(ub);
            return;
        }
        if ub <= self.best.len() {
            return;
        }
        let mut pick: Option<(usize, usize)> = None;
        for v in cand.iter() {
            let deg = self.h.residual_degree(v, chosen, &cand);
            if pick.is_none_or(|(_, d)| deg > d) {
                pick = Some((v, deg));
            }
        }
        let (v, deg) = match pick {
            Some(p) => p,
            None => {
                self.record(chosen, &cand);
                return;
            }
        };
        if deg == 0 {
            self.record(chosen, &cand);
            return;
        }
        let with_v = self.include(chosen, &cand, v);
        chosen.push(v);
        self.branch(chosen, with_v);
        chosen.pop();
        let mut without_v = cand;
        without_v.remove(v);
        if self.aborted {
            self.open_bound = self.open_bound.max(self.h.bound(chosen, &without_v));
            return;
        }
        self.branch(chosen, without_v);
    }

    fn record(&mut self, chosen: &[usize], cand: &Bits) {
        if chosen.len() + cand.count() > self.best.len() {
            let mut s: Vec<usize> = chosen.iter().copied().chain(cand.iter()).collect();
            s.sort_unstable();
            self.best = s;
        }
    }

    /// Lexicographically smallest independent set of size `k`: decide vertices in index
    /// order, include first, stop at the first hit.
    fn lex_first(&mut self, chosen: &mut Vec<usize>, cand: Bits, k: usize) -> Option<Vec<usize>> {
        if chosen.len() == k {
            return Some(chosen.clone());
        }
        if !self.tick() || self.h.bound(chosen, &cand) < k {
            return None;
        }
        let v = cand.first()?;
        let with_v = self.include(chosen, &cand, v);
        chosen.push(v);
        let hit = self.lex_first(chosen, with_v, k);
        chosen.pop();
        if hit.is_some() || self.aborted {
            return hit;
        }
        let mut without_v = cand;
        without_v.remove(v);
        self.lex_first(chosen, without_v, k)
    }
}

/// Largest SRA(α) subset with the default tolerance and node budget.
pub fn max_sra_subset(m: &FiniteMetricSpace, alpha: f64, budget: u64) -> Result<SubsetCertificate, SraError> {
    max_sra_subset_with(m, alpha, SearchOptions { tol: None, budget })
}

/// Exact maximum independent set of the violating-triple hypergraph.
///
/// Among optimal subsets the lexicographically smallest one is returned, so the
/// certificate does not depend on the branching order. When the budget runs out the
/// better of the incumbent and the greedy deletion heuristic is returned with
/// `optimal = false` and the largest bound over unexplored subproblems.
pub fn max_sra_subset_with(
    m: &FiniteMetricSpace,
    alpha: f64,
    opts: SearchOptions,
) -> Result<SubsetCertificate, SraError> {
    check_alpha(alpha)?;
    let tol = opts.tol.unwrap_or_else(|| m.default_tol());
    let n = m.len();
    let h = ViolationHypergraph::new(m, alpha, tol);
    let mut search = Search { h: &h, nodes: 0, budget: opts.budget, aborted: false, best: Vec::new(), open_bound: 0 };
    search.branch(&mut Vec::new(), Bits::full(n));

    if search.aborted {
        let greedy = greedy_from(&h);
        let best = if greedy.len() > search.best.len() { greedy } else { search.best.clone() };
        let bound = search.open_bound.max(best.len());
        let optimal = bound == best.len();
        return Ok(SubsetCertificate { alpha, size: best.len(), subset: best, optimal, bound, nodes: search.nodes });
    }

    let k = search.best.len();
    search.budget = search.nodes.saturating_add(opts.budget);
    let canonical = search.lex_first(&mut Vec::new(), Bits::full(n), k);
    let subset = canonical.unwrap_or_else(|| search.best.clone());
    Ok(SubsetCertificate { alpha, size: k, subset, optimal: true, bound: k, nodes: search.nodes })
}

/// Greedy lower bound: repeatedly delete the vertex lying in the most violating triples
/// until none remain. Returns a sorted SRA(α) subset.
pub fn greedy_sra_subset(m: &FiniteMetricSpace, alpha: f64, tol: f64) -> Result<Vec<usize>, SraError> {
    check_alpha(alpha)?;
    Ok(greedy_from(&ViolationHypergraph::new(m, alpha, tol)))
}

fn greedy_from(h: &ViolationHypergraph<'_>) -> Vec<usize> {
    let mut alive = Bits::full(h.len());
    loop {
        let mut worst: Option<(usize, usize)> = None;
        for v in alive.iter() {
            let deg: usize = alive
                .iter()
                .filter(|&u| u != v)
                .map(|u| alive.count_and(&h.conflicts(v, u)))
                .sum();
            if deg > 0 && worst.is_none_or(|(_, d)| deg > d) {
                worst = Some((v, deg));
            }
        }
        match worst {
            Some((v, _)) => alive.remove(v),
            None => return alive.iter().collect(),
        }
    }
}

/// Least `k` for which a space is free of `k`-point SRA(α) subspaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FreeOrder {
    Exact { order: usize },
    /// The search ran out of budget; the order lies in `[at_least, at_most]`.
    Unknown { at_least: usize, at_most: usize },
}

/// `max_sra_subset` size plus one, or [`FreeOrder::Unknown`] if the exact search did not
/// finish within `budget` nodes.
pub fn sra_free_order(m: &FiniteMetricSpace, alpha: f64, budget: u64) -> Result<FreeOrder, SraError> {
    let cert = max_sra_subset(m, alpha, budget)?;
    Ok(if cert.optimal {
        FreeOrder::Exact { order: cert.size + 1 }
    } else {
        FreeOrder::Unknown { at_least: cert.size + 1, at_most: cert.bound + 1 }
    })
}

/// JSON report for the SRA analyzers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SraReport {
    pub alpha: f64,
    pub tol: f64,
    pub is_sra: bool,
    pub critical_alpha: f64,
    pub max_subset: MaxSubset,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxSubset {
    pub indices: Vec<usize>,
    pub size: usize,
    pub optimal: bool,
    pub upper_bound: usize,
}

impl SraReport {
    pub fn build(m: &FiniteMetricSpace, alpha: f64, tol: f64, budget: u64) -> Result<Self, SraError> {
        let verdict = is_sra(m, alpha, tol)?;
        let cert = max_sra_subset_with(m, alpha, SearchOptions { tol: Some(tol), budget })?;
        Ok(Self {
            alpha,
            tol,
            is_sra: verdict.is_sra,
            critical_alpha: critical_alpha(m),
            max_subset: MaxSubset {
                indices: cert.subset,
                size: cert.size,
                optimal: cert.optimal,
                upper_bound: cert.bound,
            },
            violations: verdict.violations,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleTriple {
    pub x: usize,
    pub z: usize,
    pub y: usize,
    /// Angle at `z` in radians.
    pub angle: f64,
    /// SRA(α) slack of the triple with `z` in the middle.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleAudit {
    pub alpha: f64,
    /// `arccos(−α)`.
    pub threshold: f64,
    /// Triples whose vertex angle exceeds the threshold.
    pub wide: Vec<AngleTriple>,
    /// Triples skipped because two of their points coincide.
    pub degenerate: Vec<(usize, usize, usize)>,
    /// Wide triples (angle above threshold by more than [`ANGLE_TOL`]) that are not
    /// SRA(α) violations. Obtuse-enough angles force a violation, so this stays empty.
    pub inconsistent: Vec<AngleTriple>,
    /// Violations (slack above [`ANGLE_TOL`]) whose vertex angle is not wide. Thin
    /// isosceles triangles land here: a violation does not need a wide angle.
    pub narrow_violations: Vec<AngleTriple>,
}

impl AngleAudit {
    /// Wide triples and violating triples coincide.
    pub fn sets_agree(&self) -> bool {
        self.inconsistent.is_empty() && self.narrow_violations.is_empty()
    }
}

/// Margin used by the angle audit on both angles and slacks.
pub const ANGLE_TOL: f64 = 1e-9;

/// Vertex angle at `z` of the triangle `x z y`, or `None` if `z` coincides with an end.
pub fn vertex_angle(x: &[f64], z: &[f64], y: &[f64]) -> Option<f64> {
    let a: Vec<f64> = x.iter().zip(z).map(|(p, q)| p - q).collect();
    let b: Vec<f64> = y.iter().zip(z).map(|(p, q)| p - q).collect();
    let na = a.iter().map(|c| c * c).sum::<f64>().sqrt();
    let nb = b.iter().map(|c| c * c).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let dot: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
    Some((dot / (na * nb)).clamp(-1.0, 1.0).acos())
}

/// Enumerates all triples `(x, z, y)`, `x < y`, of a Euclidean cloud and reports those
/// with `∠xzy > arccos(−α)`.
pub fn euclidean_angle_audit(pc: &PointCloud, alpha: f64) -> Result<AngleAudit, SraError> {
    check_alpha(alpha)?;
    if pc.model().kind() != ModelKind::EuclideanL2 {
        return Err(SraError::NotEuclidean(pc.model().kind().name().into()));
    }
    let threshold = (-alpha).acos();
    let n = pc.len();
    let c = pc.coords();
    let mut audit = AngleAudit {
        alpha,
        threshold,
        wide: Vec::new(),
        degenerate: Vec::new(),
        inconsistent: Vec::new(),
        narrow_violations: Vec::new(),
    };
    for x in 0..n {
        for y in x + 1..n {
            for z in 0..n {
                if z == x || z == y {
                    continue;
                }
                let angle = match vertex_angle(&c[x], &c[z], &c[y]) {
                    Some(a) if pc.distance(x, y) > 0.0 => a,
                    _ => {
                        audit.degenerate.push((x, z, y));
                        continue;
                    }
                };
                let s = slack(pc.distance(x, y), pc.distance(x, z), pc.distance(z, y), alpha);
                let t = AngleTriple { x, z, y, angle, slack: s };
                if angle > threshold {
                    if angle > threshold + ANGLE_TOL && s <= 0.0 {
                        audit.inconsistent.push(t.clone());
                    }
                    audit.wide.push(t);
                } else if s > ANGLE_TOL {
                    audit.narrow_violations.push(t);
                }
            }
        }
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{from_point_cloud, sample_model, ModelSpace};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn equilateral() -> FiniteMetricSpace {
        FiniteMetricSpace::from_fn(3, |_, _| 1.0).unwrap()
    }

    fn collinear(n: usize) -> FiniteMetricSpace {
        FiniteMetricSpace::collinear(n, 1.0).unwrap()
    }

    /// Largest SRA(α) subset by enumerating every subset.
    fn brute_force_max(m: &FiniteMetricSpace, alpha: f64, tol: f64) -> usize {
        let n = m.len();
        (0u32..1 << n)
            .filter(|mask| {
                let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                idx.is_empty() || is_sra(&m.subspace(&idx).unwrap(), alpha, tol).unwrap().is_sra
            })
            .map(|mask| mask.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn is_sra_examples() {
        assert!(is_sra(&equilateral(), 0.3, 0.0).unwrap().is_sra);

        let v = is_sra(&collinear(3), 0.9, 0.0).unwrap();
        assert!(!v.is_sra);
        assert_eq!(v.violations.len(), 1);
        let w = &v.violations[0];
        assert_eq!((w.x, w.z, w.y), (0, 1, 2));
        assert!((w.slack - 0.1).abs() < 1e-12);

        let s = collinear(3).snowflake(0.5).unwrap();
        assert!(is_sra(&s, 0.5, 0.0).unwrap().is_sra);
    }

    #[test]
    fn alpha_range_is_checked() {
        for a in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(is_sra(&equilateral(), a, 0.0), Err(SraError::AlphaOutOfRange(_))));
            assert!(max_sra_subset(&equilateral(), a, 10).is_err());
        }
    }

    #[test]
    fn critical_alpha_examples() {
        assert_eq!(critical_alpha(&collinear(3)), 1.0);
        assert_eq!(critical_alpha(&equilateral()), 0.0);
        let s = collinear(3).snowflake(0.5).unwrap();
        assert!((critical_alpha(&s) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(critical_alpha(&collinear(2)), 0.0);
    }

    #[test]
    fn max_subset_examples() {
        let c = max_sra_subset(&collinear(6), 0.9, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!((c.size, c.optimal), (2, true));
        assert_eq!(c.subset, vec![0, 1]);
        assert_eq!(brute_force_max(&collinear(6), 0.9, 1e-9), 2);

        let s = collinear(6).snowflake(0.5).unwrap();
        let c = max_sra_subset(&s, 0.5, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!((c.size, c.optimal), (6, true));

        let pair = collinear(2);
        assert_eq!(max_sra_subset(&pair, 0.4, 10).unwrap().size, 2);
    }

    #[test]
    fn free_order_examples() {
        assert_eq!(sra_free_order(&collinear(6), 0.9, DEFAULT_NODE_BUDGET).unwrap(), FreeOrder::Exact { order: 3 });
        assert_eq!(sra_free_order(&equilateral(), 0.3, DEFAULT_NODE_BUDGET).unwrap(), FreeOrder::Exact { order: 4 });
        assert_eq!(sra_free_order(&collinear(1), 0.3, DEFAULT_NODE_BUDGET).unwrap(), FreeOrder::Exact { order: 2 });
    }

    #[test]
    fn exhausted_budget_is_reported_not_guessed() {
        let m = collinear(14);
        let c = max_sra_subset(&m, 0.9, 3).unwrap();
        assert!(!c.optimal);
        assert!(c.bound > c.size);
        assert!(is_sra_default(&m.subspace(&c.subset).unwrap(), 0.9).unwrap().is_sra);
        assert!(matches!(sra_free_order(&m, 0.9, 3).unwrap(), FreeOrder::Unknown { .. }));
    }

    #[test]
    fn greedy_returns_an_sra_subset() {
        let cloud = sample_model(ModelSpace::euclidean(2), 12, 1.0, 5).unwrap();
        let m = from_point_cloud(&cloud).unwrap();
        let g = greedy_sra_subset(&m, 0.6, 1e-9).unwrap();
        assert!(is_sra(&m.subspace(&g).unwrap(), 0.6, 1e-9).unwrap().is_sra);
    }

    #[test]
    fn lazy_hypergraph_matches_dense() {
        let cloud = sample_model(ModelSpace::euclidean(2), 9, 1.0, 21).unwrap();
        let m = from_point_cloud(&cloud).unwrap();
        let dense = ViolationHypergraph::new(&m, 0.7, 1e-9);
        let lazy = ViolationHypergraph { n: 9, words: 1, repr: Repr::Lazy { m: &m, alpha: 0.7, tol: 1e-9 } };
        for x in 0..9 {
            for y in 0..9 {
                assert_eq!(dense.conflicts(x, y), lazy.conflicts(x, y));
            }
        }
    }

    #[test]
    fn angle_audit_examples() {
        let e = ModelSpace::euclidean(2);
        let line = PointCloud::new(e, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let a = euclidean_angle_audit(&line, 0.9).unwrap();
        assert_eq!(a.wide.len(), 1);
        assert_eq!((a.wide[0].x, a.wide[0].z, a.wide[0].y), (0, 1, 2));
        assert!((a.wide[0].angle - PI).abs() < 1e-12);
        assert!(a.sets_agree());

        let h = 3f64.sqrt() / 2.0;
        let tri = PointCloud::new(e, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]).unwrap();
        assert!(euclidean_angle_audit(&tri, 0.5).unwrap().wide.is_empty());

        let sq = PointCloud::new(e, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(euclidean_angle_audit(&sq, 0.9).unwrap().wide.is_empty());

        let dup = PointCloud::new(e, vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(!euclidean_angle_audit(&dup, 0.5).unwrap().degenerate.is_empty());

        let s = sample_model(ModelSpace::sphere(), 3, 1.0, 0).unwrap();
        assert!(matches!(euclidean_angle_audit(&s, 0.5), Err(SraError::NotEuclidean(_))));
    }

    #[test]
    fn violation_without_wide_angle_exists() {
        // Isosceles triangle with legs 1 and base 1.6 at α = 0.5: 1.6 > 1 + 0.5 violates,
        // but the apex angle is arccos(-0.28) < arccos(-0.5). Only wide ⇒ violation holds.
        let e = ModelSpace::euclidean(2);
        let h = (1.0f64 - 0.8 * 0.8).sqrt();
        let pc = PointCloud::new(e, vec![vec![-0.8, 0.0], vec![0.0, h], vec![0.8, 0.0]]).unwrap();
        let m = from_point_cloud(&pc).unwrap();
        assert!(!is_sra(&m, 0.5, 1e-12).unwrap().is_sra);
        let audit = euclidean_angle_audit(&pc, 0.5).unwrap();
        assert!(audit.wide.is_empty());
        assert_eq!(audit.narrow_violations.len(), 1);
        assert_eq!((audit.narrow_violations[0].x, audit.narrow_violations[0].z), (0, 1));
        assert!(!audit.sets_agree());
    }

    fn random_space() -> impl Strategy<Value = FiniteMetricSpace> {
        (3usize..9, any::<u64>(), 1usize..4).prop_map(|(n, seed, dim)| {
            from_point_cloud(&sample_model(ModelSpace::euclidean(dim), n, 1.0, seed).unwrap()).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn monotone_in_alpha(m in random_space(), a in 0.01f64..0.98, da in 0.0f64..0.5) {
            let b = (a + da).min(0.99);
            if is_sra(&m, a, 0.0).unwrap().is_sra {
                prop_assert!(is_sra(&m, b, 0.0).unwrap().is_sra);
            }
        }

        #[test]
        fn critical_alpha_is_the_threshold(m in random_space(), a in 0.01f64..0.99) {
            let crit = critical_alpha(&m);
            let holds = is_sra(&m, a, 0.0).unwrap().is_sra;
            if a >= crit + 1e-12 { prop_assert!(holds); }
            if a < crit - 1e-12 { prop_assert!(!holds); }
        }

        #[test]
        fn certificates_reverify_and_match_brute_force(m in random_space(), a in 0.05f64..0.95) {
            let tol = m.default_tol();
            let c = max_sra_subset(&m, a, DEFAULT_NODE_BUDGET).unwrap();
            prop_assert!(c.optimal);
            prop_assert!(is_sra(&m.subspace(&c.subset).unwrap(), a, tol).unwrap().is_sra);
            prop_assert_eq!(c.size, brute_force_max(&m, a, tol));
            // Heredity.
            if c.size >= 2 {
                let sub = &c.subset[..c.size - 1];
                prop_assert!(is_sra(&m.subspace(sub).unwrap(), a, tol).unwrap().is_sra);
            }
        }

        #[test]
        fn scale_invariance(m in random_space(), a in 0.05f64..0.95, e in -20i32..20) {
            // Power-of-two factors scale every slack exactly, so tol = 0 is comparable.
            let s = m.scaled(2f64.powi(e));
            prop_assert_eq!(critical_alpha(&s), critical_alpha(&m));
            let opts = SearchOptions { tol: Some(0.0), budget: DEFAULT_NODE_BUDGET };
            let c1 = max_sra_subset_with(&m, a, opts).unwrap();
            let c2 = max_sra_subset_with(&s, a, opts).unwrap();
            prop_assert_eq!(c1.size, c2.size);
            prop_assert_eq!(c1.subset, c2.subset);
        }

        #[test]
        fn snowflake_law(m in random_space(), a in 0.05f64..0.95) {
            let s = m.snowflake(a).unwrap();
            prop_assert!(is_sra(&s, a, 1e-12).unwrap().is_sra);
        }
    }
}
