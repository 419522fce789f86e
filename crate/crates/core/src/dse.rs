//! Discrete self-expanding (DSE) spaces: ordered finite metric spaces `x_0, …, x_{n−1}`
//! with `d(x_i, x_j) ≤ d(x_i, x_k)` whenever `i ≤ j ≤ k`.
//!
//! Reversing the samples of a self-contracted curve gives a DSE space, and the ratio of
//! the path length `L` to the end-to-end gap `D` is the quantity the extraction argument
//! feeds on.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{
    from_point_cloud, sample_in_ball, FiniteMetricSpace, MetricError, ModelKind, ModelSpace, PointCloud,
    DEFAULT_VIOLATION_CAP, MAX_HYPERBOLIC_RADIUS,
};
use crate::seeded_rng;

/// Default cap on candidate draws in [`gen_random_dse`].
pub const DEFAULT_DSE_ATTEMPTS: u64 = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DseError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("need at least {min} points, got {n}")]
    TooFewPoints { n: usize, min: usize },
    #[error("beta must lie in (0, 1), got {0}")]
    BetaOutOfRange(f64),
    #[error("not a DSE space: {count} violating triples, first {first}")]
    NotDse { count: usize, first: String },
    #[error("gave up after {attempts} candidate draws with {placed} of {n} points placed")]
    Rejected { attempts: u64, placed: usize, n: usize },
}

/// A finite metric space whose index order satisfies the DSE monotonicity.
#[derive(Clone, Debug, PartialEq)]
pub struct DseSpace {
    base: FiniteMetricSpace,
}

impl DseSpace {
    /// Verifies the order with `is_dse(m, tol)`.
    pub fn new(m: FiniteMetricSpace, tol: f64) -> Result<Self, DseError> {
        let v = is_dse(&m, tol);
        match v.violations.first() {
            None => Ok(Self { base: m }),
            Some(first) => Err(DseError::NotDse { count: v.total_violations, first: first.to_string() }),
        }
    }

    /// [`DseSpace::new`] with the default tolerance `1e-9·(1 + diameter)`.
    pub fn verified(m: FiniteMetricSpace) -> Result<Self, DseError> {
        let tol = m.default_tol();
        Self::new(m, tol)
    }

    pub(crate) fn new_unchecked(base: FiniteMetricSpace) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &FiniteMetricSpace {
        &self.base
    }

    pub fn into_base(self) -> FiniteMetricSpace {
        self.base
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.base.d(i, j)
    }

    /// The points in reverse order. Not DSE in general.
    pub fn reversed_base(&self) -> FiniteMetricSpace {
        let idx: Vec<usize> = (0..self.len()).rev().collect();
        self.base.subspace(&idx).expect("indices in range")
    }
}

/// `d(x_i, x_j) > d(x_i, x_k) + tol` with `i < j < k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DseViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub excess: f64,
}

impl std::fmt::Display for DseViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "d({},{}) exceeds d({},{}) by {:e}", self.i, self.j, self.i, self.k, self.excess)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DseVerdict {
    pub is_dse: bool,
    pub tol: f64,
    pub total_violations: usize,
    /// At most [`DEFAULT_VIOLATION_CAP`] violations, in `(i, j, k)` order.
    pub violations: Vec<DseViolation>,
}

/// Checks all index triples `i < j < k`; the cases `i = j` and `j = k` hold trivially.
pub fn is_dse(m: &FiniteMetricSpace, tol: f64) -> DseVerdict {
    let n = m.len();
    let per_i: Vec<(usize, Vec<DseViolation>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut count = 0;
            let mut local = Vec::new();
            for j in i + 1..n {
                let dij = m.d(i, j);
                for k in j + 1..n {
                    let excess = dij - m.d(i, k);
                    if excess > tol {
                        count += 1;
                        if local.len() < DEFAULT_VIOLATION_CAP {
                            local.push(DseViolation { i, j, k, excess });
                        }
                    }
                }
            }
            (count, local)
        })
        .collect();
    let total_violations = per_i.iter().map(|(c, _)| c).sum();
    let violations = per_i.into_iter().flat_map(|(_, v)| v).take(DEFAULT_VIOLATION_CAP).collect();
    DseVerdict { is_dse: total_violations == 0, tol, total_violations, violations }
}

/// Sum of consecutive distances `Σ d(x_i, x_{i+1})`.
pub fn length_l(d: &DseSpace) -> f64 {
    (1..d.len()).map(|i| d.d(i - 1, i)).sum()
}

/// Distance between the first and last point; 0 for the empty and 1-point spaces.
pub fn gap_d(d: &DseSpace) -> f64 {
    match d.len() {
        0 => 0.0,
        n => d.d(0, n - 1),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLemmaFailure {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    /// `d(x_j, x_k) − 2 d(x_i, x_l)`.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLemmaReport {
    pub passed: bool,
    pub tol: f64,
    /// Largest `d(x_j, x_k) / d(x_i, x_l)` over `i ≤ j < k ≤ l`.
    pub worst_ratio: f64,
    pub failures: Vec<TwoLemmaFailure>,
    pub diameter: f64,
    pub gap_d: f64,
    /// `D ≤ diam ≤ 2D` within `tol`.
    pub diameter_chain_holds: bool,
}

/// Checks `d(x_j, x_k) ≤ 2 d(x_i, x_l)` for all `i ≤ j ≤ k ≤ l` and the chain
/// `D ≤ diam ≤ 2D`.
///
/// Runs in `O(n²)`: for each inner pair it compares against the smallest outer distance
/// `M[j][k] = min{d(j,k), M[j−1][k], M[j][k+1]}`.
pub fn check_two_lemma(d: &DseSpace) -> TwoLemmaReport {
    let m = d.base();
    let n = m.len();
    let tol = m.default_tol();
    // best[j*n + k] = (value, i, l) minimizing d(i, l) over i ≤ j, l ≥ k.
    let mut best = vec![(f64::INFINITY, 0usize, 0usize); n * n];
    let mut worst_ratio: f64 = if n >= 2 { 1.0 } else { 0.0 };
    let mut failures = Vec::new();
    for j in 0..n {
        for k in (j + 1..n).rev() {
            let mut b = (m.d(j, k), j, k);
            if j > 0 && best[(j - 1) * n + k].0 < b.0 {
                b = best[(j - 1) * n + k];
            }
            if k + 1 < n && best[j * n + k + 1].0 < b.0 {
                b = best[j * n + k + 1];
            }
            best[j * n + k] = b;
            let inner = m.d(j, k);
            if b.0 > 0.0 {
                worst_ratio = worst_ratio.max(inner / b.0);
            } else if inner > 0.0 {
                worst_ratio = f64::INFINITY;
            }
            let excess = inner - 2.0 * b.0;
            if excess > tol && failures.len() < DEFAULT_VIOLATION_CAP {
                failures.push(TwoLemmaFailure { i: b.1, j, k, l: b.2, excess });
            }
        }
    }
    let diameter = m.diameter();
    let gap = gap_d(d);
    let diameter_chain_holds = gap <= diameter + tol && diameter <= 2.0 * gap + tol;
    TwoLemmaReport {
        passed: failures.is_empty() && diameter_chain_holds,
        tol,
        worst_ratio,
        failures,
        diameter,
        gap_d: gap,
        diameter_chain_holds,
    }
}

/// The `beta`-snowflake of `n` unit-spaced collinear points, with `L/D = (n−1)^{1−beta}`.
pub fn gen_snowflaked_path(n: usize, beta: f64) -> Result<DseSpace, DseError> {
    if n < 2 {
        return Err(DseError::TooFewPoints { n, min: 2 });
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(DseError::BetaOutOfRange(beta));
    }
    let m = FiniteMetricSpace::from_fn(n, |i, j| ((j - i) as f64).powf(beta))?;
    Ok(DseSpace::new_unchecked(m))
}

/// [`random_dse_cloud`] with [`DEFAULT_DSE_ATTEMPTS`], as a metric space.
pub fn gen_random_dse(n: usize, seed: u64, model: ModelSpace) -> Result<DseSpace, DseError> {
    let cloud = random_dse_cloud(n, seed, model, DEFAULT_DSE_ATTEMPTS)?;
    DseSpace::verified(from_point_cloud(&cloud)?)
}

/// Builds a DSE point sequence in `model` one point at a time.
///
/// The first point is the model's base point. A candidate for `x_{k+1}` is drawn from a
/// ball around the base point and kept iff `d(x_i, candidate) ≥ d(x_i, x_k) > 0` for
/// every `i ≤ k`, which is exactly the DSE condition for the new triples. The ball
/// radius grows by 25% after every 100 consecutive rejections, capped at `π` on the
/// sphere and at the hyperbolic sampling limit. At most `max_attempts` candidates are
/// drawn in total.
pub fn random_dse_cloud(n: usize, seed: u64, model: ModelSpace, max_attempts: u64) -> Result<PointCloud, DseError> {
    if n < 2 {
        return Err(DseError::TooFewPoints { n, min: 2 });
    }
    let cap = match model.kind() {
        ModelKind::SphereUnit => std::f64::consts::PI,
        ModelKind::HyperbolicPlane => MAX_HYPERBOLIC_RADIUS,
        _ => f64::INFINITY,
    };
    let mut rng = seeded_rng(seed);
    let mut radius = 1.0f64.min(cap);
    let mut pts = vec![model.base_point()];
    let mut attempts = 0u64;
    let mut streak = 0u32;
    while pts.len() < n {
        if attempts >= max_attempts {
            return Err(DseError::Rejected { attempts, placed: pts.len(), n });
        }
        attempts += 1;
        let c = sample_in_ball(&model, radius, &mut rng);
        let last = pts.last().expect("nonempty");
        let accept = pts.iter().all(|p| {
            let reach = model.distance(p, last);
            let dc = model.distance(p, &c);
            dc >= reach && dc > 0.0
        });
        if accept {
            pts.push(c);
            streak = 0;
        } else {
            streak += 1;
            if streak == 100 {
                radius = (radius * 1.25).min(cap);
                streak = 0;
            }
        }
    }
    Ok(PointCloud::new(model, pts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn is_dse_examples() {
        let line = FiniteMetricSpace::collinear(5, 1.0).unwrap();
        assert!(is_dse(&line, 0.0).is_dse);

        let shuffled = FiniteMetricSpace::on_line(&[0.0, 2.0, 1.0]).unwrap();
        let v = is_dse(&shuffled, 0.0);
        assert!(!v.is_dse);
        assert_eq!(v.total_violations, 1);
        assert_eq!((v.violations[0].i, v.violations[0].j, v.violations[0].k), (0, 1, 2));
        assert_eq!(v.violations[0].excess, 1.0);

        assert!(is_dse(&line.snowflake(0.5).unwrap(), 0.0).is_dse);
        assert!(DseSpace::verified(shuffled).is_err());
    }

    #[test]
    fn length_and_gap_examples() {
        let line = DseSpace::verified(FiniteMetricSpace::collinear(7, 1.0).unwrap()).unwrap();
        assert_eq!((length_l(&line), gap_d(&line)), (6.0, 6.0));
        let s = gen_snowflaked_path(5, 0.5).unwrap();
        assert_eq!((length_l(&s), gap_d(&s)), (4.0, 2.0));
        let pair = DseSpace::verified(FiniteMetricSpace::from_fn(2, |_, _| 3.0).unwrap()).unwrap();
        assert_eq!((length_l(&pair), gap_d(&pair)), (3.0, 3.0));
    }

    #[test]
    fn two_lemma_examples() {
        let line = DseSpace::verified(FiniteMetricSpace::collinear(6, 1.0).unwrap()).unwrap();
        let r = check_two_lemma(&line);
        assert!(r.passed && r.diameter_chain_holds);
        assert_eq!(r.diameter, r.gap_d);

        let s = check_two_lemma(&gen_snowflaked_path(5, 0.5).unwrap());
        assert!(s.passed);
        assert_eq!((s.diameter, s.gap_d), (2.0, 2.0));
    }

    #[test]
    fn two_lemma_detects_non_dse_input() {
        // Inner pair (1,2) at distance 10 inside an outer pair (0,3) at distance 1.
        let rows = vec![
            vec![0.0, 6.0, 6.0, 1.0],
            vec![6.0, 0.0, 10.0, 6.0],
            vec![6.0, 10.0, 0.0, 6.0],
            vec![1.0, 6.0, 6.0, 0.0],
        ];
        let r = check_two_lemma(&DseSpace::new_unchecked(FiniteMetricSpace::from_rows(rows).unwrap()));
        assert!(!r.passed);
        let f = r.failures.iter().find(|f| (f.j, f.k) == (1, 2)).unwrap();
        assert_eq!((f.i, f.l, f.excess), (0, 3, 8.0));
    }

    #[test]
    fn snowflaked_path_ratio() {
        for (n, beta, ratio) in [(5, 0.5, 2.0), (17, 0.5, 4.0), (2, 0.3, 1.0)] {
            let p = gen_snowflaked_path(n, beta).unwrap();
            assert!(is_dse(p.base(), 0.0).is_dse);
            assert_eq!(length_l(&p) / gap_d(&p), ratio);
        }
        assert!(gen_snowflaked_path(1, 0.5).is_err());
        assert!(gen_snowflaked_path(4, 1.0).is_err());
    }

    #[test]
    fn random_dse_examples() {
        let pair = gen_random_dse(2, 9, ModelSpace::euclidean(2)).unwrap();
        assert_eq!(pair.len(), 2);
        let a = random_dse_cloud(8, 3, ModelSpace::euclidean(3), DEFAULT_DSE_ATTEMPTS).unwrap();
        let b = random_dse_cloud(8, 3, ModelSpace::euclidean(3), DEFAULT_DSE_ATTEMPTS).unwrap();
        assert_eq!(a, b);
        let three = gen_random_dse(3, 1, ModelSpace::euclidean(2)).unwrap();
        assert!(three.d(0, 1) <= three.d(0, 2));
        assert!(matches!(
            random_dse_cloud(50, 0, ModelSpace::sphere(), 10),
            Err(DseError::Rejected { attempts: 10, .. })
        ));
    }

    #[test]
    fn reversal_is_not_dse_in_general() {
        let p = gen_snowflaked_path(6, 0.5).unwrap();
        let rev = p.reversed_base();
        // A symmetric family stays DSE under reversal; random ones usually do not.
        assert!(is_dse(&rev, 0.0).is_dse);
        let found = (0..50u64).any(|seed| {
            let d = gen_random_dse(6, seed, ModelSpace::euclidean(2)).unwrap();
            !is_dse(&d.reversed_base(), d.base().default_tol()).is_dse
        });
        assert!(found);
    }

    fn model() -> impl Strategy<Value = ModelSpace> {
        prop_oneof![
            (1usize..4).prop_map(ModelSpace::euclidean),
            (1usize..4).prop_map(|d| ModelSpace::new(ModelKind::NormedL1, d).unwrap()),
            (1usize..4).prop_map(|d| ModelSpace::new(ModelKind::NormedLinf, d).unwrap()),
            Just(ModelSpace::sphere()),
            Just(ModelSpace::hyperbolic()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn generated_spaces_satisfy_the_chains(n in 2usize..9, seed in any::<u64>(), model in model()) {
            let d = match gen_random_dse(n, seed, model) {
                Ok(d) => d,
                Err(DseError::Rejected { .. }) => return Ok(()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            let tol = d.base().default_tol();
            prop_assert!(is_dse(d.base(), tol).is_dse);
            let r = check_two_lemma(&d);
            prop_assert!(r.passed, "{:?}", r.failures);
            prop_assert!(length_l(&d) >= gap_d(&d) - tol);
            prop_assert!(gap_d(&d) <= r.diameter + tol && r.diameter <= 2.0 * gap_d(&d) + tol);
        }

        #[test]
        fn two_lemma_matches_quartic_oracle(n in 2usize..8, seed in any::<u64>()) {
            let d = gen_random_dse(n, seed, ModelSpace::euclidean(2)).unwrap();
            let mut worst: f64 = 1.0;
            for i in 0..n {
                for j in i..n {
                    for k in j + 1..n {
                        for l in k..n {
                            worst = worst.max(d.d(j, k) / d.d(i, l));
                        }
                    }
                }
            }
            prop_assert_eq!(check_two_lemma(&d).worst_ratio, worst);
        }
    }
}
