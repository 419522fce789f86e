//! Sampled curves in model spaces and the self-contracted property
//! `d(γ(t₂), γ(t₃)) ≤ d(γ(t₁), γ(t₃))` for `t₁ ≤ t₂ ≤ t₃`.
//!
//! Generators produce explicit-Euler polylines of gradient flows: convex quadratics in any
//! normed model, and quasiconvex reparametrizations and max-of-affine subgradient descent
//! in Euclidean space only.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dse::DseSpace;
use crate::metric::{FiniteMetricSpace, MetricError, ModelKind, ModelSpace, DEFAULT_VIOLATION_CAP};
use crate::seeded_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("curve has no samples")]
    Empty,
    #[error("{times} times but {points} points")]
    LengthMismatch { times: usize, points: usize },
    #[error("times must be finite and strictly increasing (index {0})")]
    TimesNotIncreasing(usize),
    #[error("point {index}: {reason}")]
    InvalidPoint { index: usize, reason: String },
    #[error("{0}")]
    InvalidQuadratic(String),
    #[error("model {0} is not supported here")]
    UnsupportedModel(String),
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("objective increased at step {index}: {before} -> {after}")]
    Divergence { index: usize, before: f64, after: f64 },
    #[error("curve is not self-contracted: {count} violating triples, first {first}")]
    NotSelfContracted { count: usize, first: String },
}

/// Time-stamped samples of a curve in a model space.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledCurve {
    model: ModelSpace,
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
}

impl SampledCurve {
    /// Requires at least one sample, strictly increasing finite times, and valid points.
    pub fn new(model: ModelSpace, times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self, CurveError> {
        if times.is_empty() {
            return Err(CurveError::Empty);
        }
        if times.len() != points.len() {
            return Err(CurveError::LengthMismatch { times: times.len(), points: points.len() });
        }
        for (i, t) in times.iter().enumerate() {
            if !t.is_finite() || (i > 0 && *t <= times[i - 1]) {
                return Err(CurveError::TimesNotIncreasing(i));
            }
        }
        for (index, p) in points.iter().enumerate() {
            model.check_point(p).map_err(|reason| CurveError::InvalidPoint { index, reason })?;
        }
        Ok(Self { model, times, points })
    }

    pub fn model(&self) -> ModelSpace {
        self.model
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.model.distance(&self.points[i], &self.points[j])
    }

    /// Samples `range` of this curve (contiguous in time).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self, CurveError> {
        Self::new(self.model, self.times[range.clone()].to_vec(), self.points[range].to_vec())
    }

    /// Distance matrix of the samples in time order. Repeated samples give zero entries.
    pub fn distance_matrix(&self) -> FiniteMetricSpace {
        FiniteMetricSpace::from_fn(self.len(), |i, j| self.distance(i, j)).expect("nonempty, finite")
    }

    /// `1e-9·(1 + diameter)`.
    pub fn default_tol(&self) -> f64 {
        1e-9 * (1.0 + curve_diameter(self))
    }
}

/// `d(γ(t_j), γ(t_k)) > d(γ(t_i), γ(t_k)) + tol` for sample indices `i < j < k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub times: [f64; 3],
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveVerdict {
    pub is_self_contracted: bool,
    pub tol: f64,
    pub total_violations: usize,
    pub violations: Vec<ContractionViolation>,
}

/// Checks every triple of sample times with the model distance.
pub fn is_self_contracted(c: &SampledCurve, tol: f64) -> CurveVerdict {
    let n = c.len();
    let m = c.distance_matrix();
    let per_k: Vec<(usize, Vec<ContractionViolation>)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut count = 0;
            let mut local = Vec::new();
            for i in 0..k {
                let reach = m.d(i, k);
                for j in i + 1..k {
                    let excess = m.d(j, k) - reach;
                    if excess > tol {
                        count += 1;
                        if local.len() < DEFAULT_VIOLATION_CAP {
                            let times = [c.times[i], c.times[j], c.times[k]];
                            local.push(ContractionViolation { i, j, k, times, excess });
                        }
                    }
                }
            }
            (count, local)
        })
        .collect();
    let total_violations = per_k.iter().map(|(c, _)| c).sum();
    let violations = per_k.into_iter().flat_map(|(_, v)| v).take(DEFAULT_VIOLATION_CAP).collect();
    CurveVerdict { is_self_contracted: total_violations == 0, tol, total_violations, violations }
}

/// Length of the inscribed polyline through the samples.
pub fn curve_length(c: &SampledCurve) -> f64 {
    (1..c.len()).map(|i| c.distance(i - 1, i)).sum()
}

/// Largest distance between two samples.
pub fn curve_diameter(c: &SampledCurve) -> f64 {
    let n = c.len();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| c.distance(i, j))
        .fold(0.0, f64::max)
}

/// [`curve_to_dse_with_tol`] at the curve's default tolerance.
pub fn curve_to_dse(c: &SampledCurve) -> Result<DseSpace, CurveError> {
    curve_to_dse_with_tol(c, c.default_tol())
}

/// The samples in reversed time order as a DSE space.
///
/// Self-contractedness at times `t_i ≤ t_j ≤ t_k` is the DSE inequality for the
/// reversed indices, so a curve passing [`is_self_contracted`] at `tol` yields a space
/// passing `is_dse` at the same `tol`.
pub fn curve_to_dse_with_tol(c: &SampledCurve, tol: f64) -> Result<DseSpace, CurveError> {
    let v = is_self_contracted(c, tol);
    if let Some(first) = v.violations.first() {
        let first = format!("({}, {}, {}) by {:e}", first.i, first.j, first.k, first.excess);
        return Err(CurveError::NotSelfContracted { count: v.total_violations, first });
    }
    let n = c.len();
    let m = FiniteMetricSpace::from_fn(n, |a, b| c.distance(n - 1 - a, n - 1 - b))?;
    Ok(DseSpace::new_unchecked(m))
}

/// `f(x) = ½ xᵀQx` with a starting point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSpec {
    pub q: Vec<Vec<f64>>,
    pub start: Vec<f64>,
}

impl QuadraticSpec {
    pub fn diagonal(diag: &[f64], start: Vec<f64>) -> Self {
        let n = diag.len();
        let q = (0..n).map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0.0 }).collect()).collect();
        Self { q, start }
    }

    fn matrix(&self) -> Result<DMatrix<f64>, CurveError> {
        let n = self.q.len();
        if n == 0 || self.q.iter().any(|r| r.len() != n) {
            return Err(CurveError::InvalidQuadratic("Q must be a nonempty square matrix".into()));
        }
        if self.start.len() != n {
            return Err(CurveError::InvalidQuadratic(format!("start has {} coordinates, Q is {n}×{n}", self.start.len())));
        }
        if self.q.iter().flatten().chain(&self.start).any(|v| !v.is_finite()) {
            return Err(CurveError::InvalidQuadratic("entries must be finite".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| self.q[i][j]);
        let scale = m.amax().max(1.0);
        for i in 0..n {
            for j in i + 1..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(CurveError::InvalidQuadratic(format!("Q is not symmetric at ({i}, {j})")));
                }
            }
        }
        if m.clone().cholesky().is_none() {
            return Err(CurveError::InvalidQuadratic("Q is not positive definite".into()));
        }
        Ok(m)
    }

    /// Eigenvalues of Q in increasing order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, CurveError> {
        let mut ev: Vec<f64> = self.matrix()?.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    pub fn max_eigenvalue(&self) -> Result<f64, CurveError> {
        Ok(*self.eigenvalues()?.last().expect("nonempty"))
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let n = x.len();
        0.5 * (0..n).map(|i| x[i] * (0..n).map(|j| self.q[i][j] * x[j]).sum::<f64>()).sum::<f64>()
    }
}

/// Random positive-definite quadratic `Q = AᵀA/dim + 0.05·I` with a start point whose
/// entries are standard normal.
pub fn random_quadratic(dim: usize, seed: u64) -> QuadraticSpec {
    let mut rng = seeded_rng(seed);
    let a = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let q = a.transpose() * &a / dim as f64 + DMatrix::identity(dim, dim) * 0.05;
    let start = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    QuadraticSpec { q: (0..dim).map(|i| (0..dim).map(|j| 0.5 * (q[(i, j)] + q[(j, i)])).collect()).collect(), start }
}

fn require_step(step: f64) -> Result<(), CurveError> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(CurveError::InvalidStep(step))
    }
}

/// Explicit Euler `x_{k+1} = x_k − step·Q x_k` at times `k·step`, measured in a normed
/// model of matching dimension.
///
/// Fails at the first step where `f` increases, which happens for starts with a
/// component along an eigenvalue `λ` of Q with `step·λ > 2`.
pub fn gen_gradient_trajectory(
    spec: &QuadraticSpec,
    step: f64,
    steps: usize,
    model: ModelSpace,
) -> Result<SampledCurve, CurveError> {
    gen_quasiconvex_trajectory(spec, Profile::Identity, step, steps, model)
}

/// Increasing profile `φ` of a quasiconvex objective `φ(½ xᵀQx)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Identity,
    /// `ln(1 + s)`.
    Log1p,
    /// `s / (1 + s)`.
    Saturating,
}

impl Profile {
    fn derivative(self, s: f64) -> f64 {
        match self {
            Profile::Identity => 1.0,
            Profile::Log1p => 1.0 / (1.0 + s),
            Profile::Saturating => 1.0 / ((1.0 + s) * (1.0 + s)),
        }
    }
}

/// Gradient descent on `φ(½ xᵀQx)`: `x_{k+1} = x_k − step·φ'(s_k)·Q x_k`.
///
/// Non-identity profiles are quasiconvex but not convex and are only offered in
/// Euclidean space.
pub fn gen_quasiconvex_trajectory(
    spec: &QuadraticSpec,
    profile: Profile,
    step: f64,
    steps: usize,
    model: ModelSpace,
) -> Result<SampledCurve, CurveError> {
    if !model.kind().is_normed() || (profile != Profile::Identity && model.kind() != ModelKind::EuclideanL2) {
        return Err(CurveError::UnsupportedModel(model.to_string()));
    }
    require_step(step)?;
    let q = spec.matrix()?;
    if model.dim() != q.nrows() {
        return Err(CurveError::InvalidQuadratic(format!("model has dimension {}, Q is {}×{}", model.dim(), q.nrows(), q.nrows())));
    }
    let mut x = DVector::from_column_slice(&spec.start);
    let mut f = spec.value(x.as_slice());
    let mut points = vec![spec.start.clone()];
    for k in 1..=steps {
        let h = step * profile.derivative(f);
        let next = &x - (&q * &x) * h;
        let g = spec.value(next.as_slice());
        if g > f {
            return Err(CurveError::Divergence { index: k, before: f, after: g });
        }
        x = next;
        f = g;
        points.push(x.as_slice().to_vec());
    }
    let times = (0..=steps).map(|k| k as f64 * step).collect();
    SampledCurve::new(model, times, points)
}

/// `x ↦ slope·x + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Vec<f64>,
    pub offset: f64,
}

/// Subgradient descent on the Euclidean max-of-affine function `max_i (a_i·x + b_i)`,
/// with the lowest-index active piece as subgradient and step sizes `step/√(k+1)`.
///
/// Subgradient steps need not decrease the objective, so no monotonicity is enforced;
/// run [`is_self_contracted`] on the result.
pub fn gen_subgradient_trajectory(
    pieces: &[AffinePiece],
    start: Vec<f64>,
    step: f64,
    steps: usize,
) -> Result<SampledCurve, CurveError> {
    require_step(step)?;
    let dim = start.len();
    if pieces.is_empty() || dim == 0 || pieces.iter().any(|p| p.slope.len() != dim) {
        return Err(CurveError::InvalidQuadratic("pieces must be nonempty with slopes matching the start point".into()));
    }
    let mut x = start;
    let mut points = vec![x.clone()];
    let mut times = vec![0.0];
    let mut t = 0.0;
    for k in 0..steps {
        let value = |p: &AffinePiece| p.slope.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + p.offset;
        let active = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, p)| if value(p) > bv { (i, value(p)) } else { (bi, bv) })
            .0;
        let h = step / ((k + 1) as f64).sqrt();
        for (xi, g) in x.iter_mut().zip(&pieces[active].slope) {
            *xi -= h * g;
        }
        t += h;
        times.push(t);
        points.push(x.clone());
    }
    SampledCurve::new(ModelSpace::euclidean(dim), times, points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub step: f64,
    pub steps: usize,
    pub length: f64,
    pub diameter: f64,
    pub ratio: f64,
    pub self_contracted: bool,
}

/// Euclidean gradient trajectories of one quadratic over the fixed horizon `horizon`,
/// halving the step `levels` times from `initial_step`.
pub fn refinement_study(
    spec: &QuadraticSpec,
    horizon: f64,
    initial_step: f64,
    levels: usize,
) -> Result<Vec<RefinementRow>, CurveError> {
    require_step(initial_step)?;
    let model = ModelSpace::euclidean(spec.start.len());
    (0..levels)
        .map(|level| {
            let step = initial_step / 2f64.powi(level as i32);
            let steps = (horizon / step).round().max(1.0) as usize;
            let c = gen_gradient_trajectory(spec, step, steps, model)?;
            let length = curve_length(&c);
            let diameter = curve_diameter(&c);
            let ratio = if diameter > 0.0 { length / diameter } else { 1.0 };
            let self_contracted = is_self_contracted(&c, c.default_tol()).is_self_contracted;
            Ok(RefinementRow { step, steps, length, diameter, ratio, self_contracted })
        })
        .collect()
}
