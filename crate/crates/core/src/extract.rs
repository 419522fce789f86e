//! Finite searches of the extraction argument: θ-straight subsets, the search for
//! counterexamples to the two-condition lemma, and the red/blue triple-coloring pipeline
//! that extracts SRA(α) subspaces from DSE spaces.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{default_theta, n_of_theta_alpha, ConstantsError};
use crate::dse::DseSpace;
use crate::metric::FiniteMetricSpace;
use crate::sra::{is_sra, Violation};
use crate::stream_rng;

pub const DEFAULT_SEARCH_BUDGET: u64 = 10_000_000;

/// Tolerance used when re-verifying extracted subsets.
pub const CERTIFICATE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error("alpha must lie in (1/2, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("theta = {theta} must lie in (0, {theta_max}) for alpha = {alpha}")]
    ThetaOutOfRange { theta: f64, alpha: f64, theta_max: f64 },
    #[error("{0}")]
    InvalidArgument(String),
}

/// Result of a budgeted subset search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "subset", rename_all = "snake_case")]
pub enum Search {
    Found(Vec<usize>),
    Absent,
    /// The budget ran out before the search completed.
    Unknown,
}

impl Search {
    pub fn found(&self) -> Option<&[usize]> {
        match self {
            Search::Found(s) => Some(s),
            _ => None,
        }
    }
}

/// DFS over increasing index tuples whose in-order triples all satisfy `good(i, j, k)`.
struct Homogeneous<'p, P> {
    good: &'p P,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl<P: Fn(usize, usize, usize) -> bool> Homogeneous<'_, P> {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
        }
        !self.aborted
    }

    fn extend(&self, chosen: &[usize], cand: &[usize], v: usize) -> Vec<usize> {
        cand.iter()
            .copied()
            .filter(|&c| c > v)
            .filter(|&c| chosen.iter().all(|&a| (self.good)(a, v, c)))
            .collect()
    }

    fn first(&mut self, chosen: &mut Vec<usize>, cand: &[usize], size: usize) -> Option<Vec<usize>> {
        if chosen.len() == size {
            return Some(chosen.clone());
        }
        if chosen.len() + cand.len() < size || !self.tick() {
            return None;
        }
        for (pos, &v) in cand.iter().enumerate() {
            if chosen.len() + cand.len() - pos < size {
                break;
            }
            let next = self.extend(chosen, &cand[pos + 1..], v);
            chosen.push(v);
            let hit = self.first(chosen, &next, size);
            chosen.pop();
            if hit.is_some() || self.aborted {
                return hit;
            }
        }
        None
    }

    fn largest(&mut self, chosen: &mut Vec<usize>, cand: &[usize], best: &mut Vec<usize>) {
        if chosen.len() > best.len() {
            *best = chosen.clone();
        }
        if chosen.len() + cand.len() <= best.len() || !self.tick() {
            return;
        }
        for (pos, &v) in cand.iter().enumerate() {
            if chosen.len() + cand.len() - pos <= best.len() {
                break;
            }
            let next = self.extend(chosen, &cand[pos + 1..], v);
            chosen.push(v);
            self.largest(chosen, &next, best);
            chosen.pop();
            if self.aborted {
                return;
            }
        }
    }
}

/// Lexicographically first increasing `size`-tuple of `0..n` whose triples all satisfy
/// `good`. Tuples of size at most 2 have no triples.
pub fn homogeneous_subset<P>(n: usize, size: usize, budget: u64, good: P) -> Search
where
    P: Fn(usize, usize, usize) -> bool,
{
    if size > n {
        return Search::Absent;
    }
    let mut h = Homogeneous { good: &good, nodes: 0, budget, aborted: false };
    let all: Vec<usize> = (0..n).collect();
    match h.first(&mut Vec::new(), &all, size) {
        Some(s) => Search::Found(s),
        None if h.aborted => Search::Unknown,
        None => Search::Absent,
    }
}

/// Largest homogeneous tuple; the flag is false when the budget ran out first.
pub fn largest_homogeneous<P>(n: usize, budget: u64, good: P) -> (Vec<usize>, bool)
where
    P: Fn(usize, usize, usize) -> bool,
{
    let mut h = Homogeneous { good: &good, nodes: 0, budget, aborted: false };
    let all: Vec<usize> = (0..n).collect();
    let mut best = Vec::new();
    h.largest(&mut Vec::new(), &all, &mut best);
    (best, !h.aborted)
}

/// `d(x_i, x_k) ≤ d(x_i, x_j) + θ d(x_j, x_k) + tol` for `i < j < k`.
pub fn theta_straight_triple(m: &FiniteMetricSpace, theta: f64, tol: f64, i: usize, j: usize, k: usize) -> bool {
    m.d(i, k) <= m.d(i, j) + theta * m.d(j, k) + tol
}

/// An increasing `m`-tuple all of whose in-order triples are θ-straight, at tolerance
/// `1e-9·(1 + diameter)`.
pub fn find_theta_straight_subset(d: &DseSpace, m: usize, theta: f64, budget: u64) -> Search {
    let base = d.base();
    let tol = base.default_tol();
    homogeneous_subset(base.len(), m, budget, |i, j, k| theta_straight_triple(base, theta, tol, i, j, k))
}

/// Largest θ-straight tuple and whether the search completed.
pub fn max_theta_straight_subset(d: &DseSpace, theta: f64, budget: u64) -> (Vec<usize>, bool) {
    let base = d.base();
    let tol = base.default_tol();
    largest_homogeneous(base.len(), budget, |i, j, k| theta_straight_triple(base, theta, tol, i, j, k))
}

/// Red iff `d(y_j, y_k) ≤ d(y_i, y_k) + α d(y_i, y_j)` for `i < j < k`.
pub fn is_red(m: &FiniteMetricSpace, alpha: f64, i: usize, j: usize, k: usize) -> bool {
    m.d(j, k) <= m.d(i, k) + alpha * m.d(i, j)
}

/// Which search in the pipeline ran dry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// No θ-straight subset with a triple exists.
    ThetaStraight,
    /// The coloring has neither an all-red `k`-set nor an all-blue contradiction set.
    Coloring,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Extraction {
    /// A `k`-point subset (original indices) that passed `is_sra` at
    /// [`CERTIFICATE_TOL`].
    Certificate { subset: Vec<usize> },
    /// An all-blue set large enough to contradict the two-condition lemma.
    Contradiction { subset: Vec<usize> },
    /// Neither branch fired at these sizes.
    BelowThreshold { stage: Stage },
    /// The all-red subset failed re-verification; returned instead of a certificate.
    VerificationFailed { subset: Vec<usize>, violations: Vec<Violation> },
    /// A search ran out of budget.
    Unknown { stage: Stage },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub alpha: f64,
    pub theta: f64,
    pub k: usize,
    /// Indices of the θ-straight subset the coloring ran on.
    pub straight_subset: Vec<usize>,
    pub straight_optimal: bool,
    /// Least `N` from the geometric threshold.
    pub n_theta_alpha: u64,
    /// Size of the all-blue set searched for (`N + 1`).
    pub blue_target: usize,
    /// Largest all-red and all-blue subsets of the straight subset, reported when
    /// neither target was met.
    pub largest_red: Option<usize>,
    pub largest_blue: Option<usize>,
    pub result: Extraction,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractOptions {
    /// Defaults to half of `(2α − 1)/(2α + 1)`.
    pub theta: Option<f64>,
    /// Size of the θ-straight subset to search for; the largest one when `None`.
    pub m: Option<usize>,
    pub budget: u64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { theta: None, m: None, budget: DEFAULT_SEARCH_BUDGET }
    }
}

/// Extracts a `k`-point SRA(α) subspace from a DSE space by the coloring argument.
///
/// 1. Find a θ-straight subset `Y` (of size `m`, or the largest).
/// 2. Color each in-order triple of `Y` red or blue by [`is_red`].
/// 3. An all-red `k`-subset is SRA(α) given the DSE order and θ < α; it is re-checked
///    with `is_sra` before being returned.
/// 4. Otherwise an all-blue `(N+1)`-subset would satisfy both lemma conditions, which is
///    impossible; finding one is reported as a contradiction.
///
/// Never returns a certificate that fails re-verification.
pub fn extract_sra_subspace(d: &DseSpace, alpha: f64, k: usize, opts: ExtractOptions) -> Result<ExtractionReport, ExtractError> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(ExtractError::AlphaOutOfRange(alpha));
    }
    let tmax = crate::constants::theta_max(alpha);
    let theta = opts.theta.unwrap_or_else(|| default_theta(alpha));
    if !(theta > 0.0 && theta < tmax) {
        return Err(ExtractError::ThetaOutOfRange { theta, alpha, theta_max: tmax });
    }
    let n_theta_alpha = n_of_theta_alpha(theta, alpha)?;
    let blue_target = n_theta_alpha as usize + 1;
    let base = d.base();
    let mut report = ExtractionReport {
        alpha,
        theta,
        k,
        straight_subset: Vec::new(),
        straight_optimal: true,
        n_theta_alpha,
        blue_target,
        largest_red: None,
        largest_blue: None,
        result: Extraction::BelowThreshold { stage: Stage::ThetaStraight },
    };
    if k <= 2 {
        let subset: Vec<usize> = (0..k.min(d.len())).collect();
        report.result = if subset.len() == k {
            Extraction::Certificate { subset }
        } else {
            Extraction::BelowThreshold { stage: Stage::ThetaStraight }
        };
        return Ok(report);
    }

    let straight = match opts.m {
        Some(m) => match find_theta_straight_subset(d, m, theta, opts.budget) {
            Search::Found(s) => s,
            Search::Absent => {
                report.straight_subset = max_theta_straight_subset(d, theta, opts.budget).0;
                return Ok(report);
            }
            Search::Unknown => {
                report.straight_optimal = false;
                report.result = Extraction::Unknown { stage: Stage::ThetaStraight };
                return Ok(report);
            }
        },
        None => {
            let (s, complete) = max_theta_straight_subset(d, theta, opts.budget);
            report.straight_optimal = complete;
            s
        }
    };
    report.straight_subset = straight.clone();
    if straight.len() < 3 {
        return Ok(report);
    }

    let y = base.subspace(&straight).expect("indices from the search");
    let ny = y.len();
    let red = |i: usize, j: usize, k: usize| is_red(&y, alpha, i, j, k);
    let blue = |i: usize, j: usize, k: usize| !is_red(&y, alpha, i, j, k);

    match homogeneous_subset(ny, k, opts.budget, red) {
        Search::Found(local) => {
            let subset: Vec<usize> = local.iter().map(|&i| straight[i]).collect();
            let v = is_sra(&base.subspace(&subset).expect("valid"), alpha, CERTIFICATE_TOL)
                .expect("alpha checked");
            report.result = if v.is_sra {
                Extraction::Certificate { subset }
            } else {
                Extraction::VerificationFailed { subset, violations: v.violations }
            };
            return Ok(report);
        }
        Search::Unknown => {
            report.result = Extraction::Unknown { stage: Stage::Coloring };
            return Ok(report);
        }
        Search::Absent => {}
    }
    match homogeneous_subset(ny, blue_target, opts.budget, blue) {
        Search::Found(local) => {
            report.result = Extraction::Contradiction { subset: local.iter().map(|&i| straight[i]).collect() };
        }
        Search::Unknown => report.result = Extraction::Unknown { stage: Stage::Coloring },
        Search::Absent => {
            report.largest_red = Some(largest_homogeneous(ny, opts.budget, red).0.len());
            report.largest_blue = Some(largest_homogeneous(ny, opts.budget, blue).0.len());
            report.result = Extraction::BelowThreshold { stage: Stage::Coloring };
        }
    }
    Ok(report)
}

/// Which of the two lemma conditions and the DSE/metric requirements a candidate meets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeirdCheck {
    pub metric: bool,
    pub dse: bool,
    /// `d(z_i, z_k) ≤ d(z_i, z_j) + θ d(z_j, z_k)` for all `i < j < k`.
    pub straight: bool,
    /// `d(z_n, z_{i+1}) ≥ d(z_n, z_i) + α d(z_i, z_{i+1})` for `i + 1 < n` (1-based
    /// `i ≤ n − 2`).
    pub expanding: bool,
}

impl WeirdCheck {
    pub fn feasible(&self) -> bool {
        self.metric && self.dse && self.straight && self.expanding
    }
}

/// Exact checks (no tolerance) of a candidate distance matrix against the lemma's
/// hypotheses. Distinct points are required.
pub fn check_weird(m: &FiniteMetricSpace, theta: f64, alpha: f64) -> WeirdCheck {
    let n = m.len();
    let mut metric = true;
    for i in 0..n {
        for j in i + 1..n {
            if m.d(i, j) <= 0.0 {
                metric = false;
            }
            for k in 0..n {
                if k != i && k != j && m.d(i, j) > m.d(i, k) + m.d(k, j) {
                    metric = false;
                }
            }
        }
    }
    let mut dse = true;
    let mut straight = true;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                dse &= m.d(i, j) <= m.d(i, k);
                straight &= m.d(i, k) <= m.d(i, j) + theta * m.d(j, k);
            }
        }
    }
    let last = n.saturating_sub(1);
    let expanding = (0..n.saturating_sub(2)).all(|i| m.d(last, i + 1) >= m.d(last, i) + alpha * m.d(i, i + 1));
    WeirdCheck { metric, dse, straight, expanding }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    Random,
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibleInstance {
    pub source: CandidateSource,
    /// Trial index for random candidates, grid cell for grid candidates.
    pub index: u64,
    pub dist: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefutationStatus {
    /// Fewer than three points: both conditions are vacuous.
    OutOfRange,
    NoneFound,
    /// At least one candidate satisfies every hypothesis.
    Feasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefutationReport {
    pub theta: f64,
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
    pub trials: u64,
    pub grid_cells: u64,
    pub n_theta_alpha: u64,
    /// `N + 1`, the smallest size the lemma's argument actually rules out.
    pub n_sound: u64,
    pub status: RefutationStatus,
    pub feasible_count: u64,
    /// Candidates that passed the metric and DSE checks.
    pub admissible_count: u64,
    /// First feasible random trial by index, else first feasible grid cell.
    pub first_feasible: Option<FeasibleInstance>,
}

pub const GRID_SIDE: u64 = 64;

/// Random candidate: log-uniform consecutive gaps in `[e^{-3}, e^3]`, then each
/// `d(i, k)` uniform between its DSE lower bound `d(i, k−1)` and the path sum.
pub fn random_candidate<R: Rng>(n: usize, rng: &mut R) -> FiniteMetricSpace {
    let gaps: Vec<f64> = (0..n.saturating_sub(1)).map(|_| rng.random_range(-3.0f64..3.0).exp()).collect();
    let mut d = vec![vec![0.0; n]; n];
    for span in 1..n {
        for i in 0..n - span {
            let k = i + span;
            let v = if span == 1 {
                gaps[i]
            } else {
                let path: f64 = gaps[i..k].iter().sum();
                let lo = d[i][k - 1];
                lo + (path - lo).max(0.0) * rng.random::<f64>()
            };
            d[i][k] = v;
            d[k][i] = v;
        }
    }
    FiniteMetricSpace::from_rows(d).expect("square, finite")
}

/// Grid candidate: gaps `ρ^i`, and `d(i, k) = s·Σ gaps + (1 − s)·max gap` over
/// `[i, k)`, mixing the line metric with its ultrametric. Both are DSE metrics, so every
/// cell is admissible.
pub fn grid_candidate(n: usize, rho: f64, s: f64) -> FiniteMetricSpace {
    let gaps: Vec<f64> = (0..n.saturating_sub(1)).map(|i| rho.powi(i as i32)).collect();
    FiniteMetricSpace::from_fn(n, |i, k| {
        let g = &gaps[i..k];
        s * g.iter().sum::<f64>() + (1.0 - s) * g.iter().copied().fold(0.0, f64::max)
    })
    .expect("finite")
}

/// `(ρ, s)` of grid cell `cell`: `ρ` log-spaced over `[1/4, 4]`, `s` over `[0, 1]`.
pub fn grid_parameters(cell: u64) -> (f64, f64) {
    let (a, b) = (cell / GRID_SIDE, cell % GRID_SIDE);
    let t = a as f64 / (GRID_SIDE - 1) as f64;
    (4f64.powf(2.0 * t - 1.0), b as f64 / (GRID_SIDE - 1) as f64)
}

/// Searches for an `n`-point DSE metric satisfying both conditions of the lemma:
/// `trials` random candidates (trial `t` uses stream `t` of `seed`) and a
/// `64 × 64` grid. Hits are merged deterministically.
pub fn refute_weird_angles(theta: f64, alpha: f64, n: usize, trials: u64, seed: u64) -> Result<RefutationReport, ExtractError> {
    let n_theta_alpha = n_of_theta_alpha(theta, alpha)?;
    let run = |source: CandidateSource, index: u64| {
        let m = match source {
            CandidateSource::Random => random_candidate(n, &mut stream_rng(seed, index)),
            CandidateSource::Grid => {
                let (rho, s) = grid_parameters(index);
                grid_candidate(n, rho, s)
            }
        };
        let c = check_weird(&m, theta, alpha);
        (c.metric && c.dse, c.feasible().then(|| FeasibleInstance { source, index, dist: m.to_rows() }))
    };
    let grid_cells = GRID_SIDE * GRID_SIDE;
    let (admissible, feasible, first) = (0..trials)
        .into_par_iter()
        .map(|t| run(CandidateSource::Random, t))
        .chain((0..grid_cells).into_par_iter().map(|c| run(CandidateSource::Grid, c)))
        .map(|(ok, hit)| (ok as u64, hit.is_some() as u64, hit))
        .reduce(
            || (0, 0, None),
            |(a1, f1, h1), (a2, f2, h2)| (a1 + a2, f1 + f2, earliest(h1, h2)),
        );
    let status = if n < 3 {
        RefutationStatus::OutOfRange
    } else if feasible > 0 {
        RefutationStatus::Feasible
    } else {
        RefutationStatus::NoneFound
    };
    Ok(RefutationReport {
        theta,
        alpha,
        n,
        seed,
        trials,
        grid_cells,
        n_theta_alpha,
        n_sound: n_theta_alpha + 1,
        status,
        feasible_count: feasible,
        admissible_count: admissible,
        first_feasible: first,
    })
}

fn earliest(a: Option<FeasibleInstance>, b: Option<FeasibleInstance>) -> Option<FeasibleInstance> {
    let key = |f: &FeasibleInstance| (f.source == CandidateSource::Grid, f.index);
    match (a, b) {
        (Some(x), Some(y)) => Some(if key(&y) < key(&x) { y } else { x }),
        (x, y) => x.or(y),
    }
}
