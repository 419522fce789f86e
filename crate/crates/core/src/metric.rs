//! Finite metric spaces, model-space point clouds and seeded samplers.
//!
//! A [`FiniteMetricSpace`] is a dense `n × n` matrix of `f64` distances. Construction
//! only checks structure (square, finite, within the point cap); the metric axioms are
//! checked by [`validate_metric`], which reports every violated instance up to a cap.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeded_rng;

/// Largest space accepted by default; every consumer is O(n³) or worse.
pub const DEFAULT_MAX_POINTS: usize = 4096;

/// Default number of axiom violations kept in a [`ValidationReport`].
pub const DEFAULT_VIOLATION_CAP: usize = 64;

/// Largest hyperbolic sampling radius. Beyond it the Poincaré-disk coordinates sit so
/// close to the boundary that distances lose the precision the triangle check needs.
pub const MAX_HYPERBOLIC_RADIUS: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distance matrix is empty")]
    Empty,
    #[error("distance matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("space has {n} points, above the configured cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("non-finite distance at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("index {index} out of range for a {n}-point space")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("duplicate index {index} in subspace selection")]
    DuplicateIndex { index: usize },
    #[error("snowflake exponent must lie in (0, 1), got {0}")]
    BetaOutOfRange(f64),
    #[error("matrix violates the metric axioms ({count} violations, first: {first})")]
    NotMetric { count: usize, first: String },
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid coordinates for {model}: point {index}: {reason}")]
    InvalidCoordinates { model: String, index: usize, reason: String },
    #[error("points {i} and {j} coincide")]
    CoincidentPoints { i: usize, j: usize },
    #[error("invalid sampling request: {0}")]
    InvalidSampling(String),
}

/// `n` points with a full distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl FiniteMetricSpace {
    /// Builds a space from matrix rows, checking structure only.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        Self::from_rows_with_cap(rows, DEFAULT_MAX_POINTS)
    }

    pub fn from_rows_with_cap(rows: Vec<Vec<f64>>, cap: usize) -> Result<Self, MetricError> {
        let n = rows.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        if n > cap {
            return Err(MetricError::TooLarge { n, cap });
        }
        let mut dist = Vec::with_capacity(n * n);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(MetricError::NotSquare { row, len: r.len(), expected: n });
            }
            for (j, v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MetricError::NonFinite { i: row, j });
                }
            }
            dist.extend(r);
        }
        Ok(Self { n, dist, labels: None })
    }

    /// Builds a symmetric space from `f(i, j)` evaluated once per unordered pair `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(MetricError::Empty);
        }
        if n > DEFAULT_MAX_POINTS {
            return Err(MetricError::TooLarge { n, cap: DEFAULT_MAX_POINTS });
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(MetricError::NonFinite { i, j });
                }
                dist[i * n + j] = v;
                dist[j * n + i] = v;
            }
        }
        Ok(Self { n, dist, labels: None })
    }

    /// Equally spaced points `0, spacing, 2·spacing, …` on a line.
    pub fn collinear(n: usize, spacing: f64) -> Result<Self, MetricError> {
        Self::from_fn(n, |i, j| (j - i) as f64 * spacing)
    }

    /// Points of the real line at the given positions, in the given order.
    pub fn on_line(positions: &[f64]) -> Result<Self, MetricError> {
        Self::from_fn(positions.len(), |i, j| (positions[i] - positions[j]).abs())
    }

    /// Checks the metric axioms with [`validate_metric`] and rejects on failure.
    pub fn validated(self, tri_tol: f64) -> Result<Self, MetricError> {
        let report = validate_metric(&self, tri_tol);
        if report.passed {
            Ok(self)
        } else {
            Err(MetricError::NotMetric {
                count: report.total_violations,
                first: report.violations.first().map(|v| v.to_string()).unwrap_or_default(),
            })
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, MetricError> {
        if labels.len() != self.n {
            return Err(MetricError::LabelCount { expected: self.n, got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false; a space holds at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Largest off-diagonal entry; 0 for a single point.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Additive tolerance `1e-9·(1 + diameter)` used by the default checks.
    pub fn default_tol(&self) -> f64 {
        1e-9 * (1.0 + self.diameter())
    }

    /// Restriction to `idx`, keeping the order of `idx`.
    pub fn subspace(&self, idx: &[usize]) -> Result<Self, MetricError> {
        if idx.is_empty() {
            return Err(MetricError::Empty);
        }
        let mut seen = vec![false; self.n];
        for &i in idx {
            if i >= self.n {
                return Err(MetricError::IndexOutOfRange { index: i, n: self.n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(MetricError::DuplicateIndex { index: i });
            }
        }
        let k = idx.len();
        let mut dist = Vec::with_capacity(k * k);
        for &i in idx {
            dist.extend(idx.iter().map(|&j| self.d(i, j)));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| idx.iter().map(|&i| l[i].clone()).collect());
        Ok(Self { n: k, dist, labels })
    }

    /// The `beta`-snowflake: every distance raised to the power `beta ∈ (0, 1)`.
    pub fn snowflake(&self, beta: f64) -> Result<Self, MetricError> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(MetricError::BetaOutOfRange(beta));
        }
        Ok(self.map_distances(|d| d.powf(beta)))
    }

    /// All distances multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        self.map_distances(|d| d * c)
    }

    fn map_distances(&self, f: impl Fn(f64) -> f64) -> Self {
        let n = self.n;
        let dist = self
            .dist
            .iter()
            .enumerate()
            .map(|(ix, &d)| if ix / n == ix % n { 0.0 } else { f(d) })
            .collect();
        Self { n, dist, labels: self.labels.clone() }
    }
}

/// Diameter of a space (free-function form).
pub fn diameter(m: &FiniteMetricSpace) -> f64 {
    m.diameter()
}

/// One violated axiom instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum AxiomViolation {
    Diagonal { i: usize, value: f64 },
    Symmetry { i: usize, j: usize, forward: f64, backward: f64 },
    Positivity { i: usize, j: usize, value: f64 },
    /// `d(i,k) > d(i,j) + d(j,k) + tol`, with the excess over the right-hand side.
    Triangle { i: usize, j: usize, k: usize, excess: f64 },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Diagonal { i, value } => write!(f, "d({i},{i}) = {value} ≠ 0"),
            Self::Symmetry { i, j, forward, backward } => {
                write!(f, "d({i},{j}) = {forward} ≠ d({j},{i}) = {backward}")
            }
            Self::Positivity { i, j, value } => write!(f, "d({i},{j}) = {value} is not positive"),
            Self::Triangle { i, j, k, excess } => {
                write!(f, "d({i},{k}) exceeds d({i},{j}) + d({j},{k}) by {excess}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub tri_tol: f64,
    /// Total number of violated instances; `violations` keeps at most the cap.
    pub total_violations: usize,
    pub violations: Vec<AxiomViolation>,
}

/// Checks zero diagonal, symmetry, positivity and the triangle inequality.
pub fn validate_metric(m: &FiniteMetricSpace, tri_tol: f64) -> ValidationReport {
    validate_metric_capped(m, tri_tol, DEFAULT_VIOLATION_CAP)
}

pub fn validate_metric_capped(m: &FiniteMetricSpace, tri_tol: f64, cap: usize) -> ValidationReport {
    let n = m.len();
    let mut found = Vec::new();
    let mut total = 0usize;
    let mut push = |v: AxiomViolation, found: &mut Vec<AxiomViolation>| {
        total += 1;
        if found.len() < cap {
            found.push(v);
        }
    };
    for i in 0..n {
        if m.d(i, i) != 0.0 {
            push(AxiomViolation::Diagonal { i, value: m.d(i, i) }, &mut found);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (m.d(i, j), m.d(j, i));
            if (a - b).abs() > tri_tol {
                push(AxiomViolation::Symmetry { i, j, forward: a, backward: b }, &mut found);
            }
            if a <= 0.0 || b <= 0.0 {
                push(AxiomViolation::Positivity { i, j, value: a.min(b) }, &mut found);
            }
        }
    }
    // Triangle instances per outer index, merged in index order.
    let per_i: Vec<(usize, Vec<AxiomViolation>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut count = 0;
            let mut local = Vec::new();
            for k in i + 1..n {
                let dik = m.d(i, k);
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    let excess = dik - (m.d(i, j) + m.d(j, k));
                    if excess > tri_tol {
                        count += 1;
                        if local.len() < cap {
                            local.push(AxiomViolation::Triangle { i, j, k, excess });
                        }
                    }
                }
            }
            (count, local)
        })
        .collect();
    for (count, local) in per_i {
        let room = cap.saturating_sub(found.len());
        found.extend(local.into_iter().take(room));
        total += count;
    }
    ValidationReport { passed: total == 0, tri_tol, total_violations: total, violations: found }
}

/// Ambient spaces that finite samples are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "euclidean-l2")]
    EuclideanL2,
    #[serde(rename = "normed-l1")]
    NormedL1,
    #[serde(rename = "normed-linf")]
    NormedLinf,
    #[serde(rename = "sphere-unit")]
    SphereUnit,
    #[serde(rename = "hyperbolic-plane")]
    HyperbolicPlane,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::EuclideanL2 => "euclidean-l2",
            Self::NormedL1 => "normed-l1",
            Self::NormedLinf => "normed-linf",
            Self::SphereUnit => "sphere-unit",
            Self::HyperbolicPlane => "hyperbolic-plane",
        }
    }

    pub fn parse(s: &str) -> Result<Self, MetricError> {
        match s {
            "euclidean-l2" | "euclidean" | "l2" => Ok(Self::EuclideanL2),
            "normed-l1" | "l1" => Ok(Self::NormedL1),
            "normed-linf" | "linf" => Ok(Self::NormedLinf),
            "sphere-unit" | "sphere" => Ok(Self::SphereUnit),
            "hyperbolic-plane" | "hyperbolic" => Ok(Self::HyperbolicPlane),
            other => Err(MetricError::InvalidModel(format!("unknown model kind {other:?}"))),
        }
    }

    pub fn is_normed(self) -> bool {
        matches!(self, Self::EuclideanL2 | Self::NormedL1 | Self::NormedLinf)
    }
}

/// A model space: kind plus intrinsic dimension. Sphere and hyperbolic plane are
/// 2-dimensional; the sphere is stored in 3-dimensional unit-vector coordinates and the
/// hyperbolic plane in Poincaré-disk coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelSpace {
    kind: ModelKind,
    dim: usize,
}

impl ModelSpace {
    pub fn new(kind: ModelKind, dim: usize) -> Result<Self, MetricError> {
        if dim == 0 {
            return Err(MetricError::InvalidModel("dimension must be at least 1".into()));
        }
        if !kind.is_normed() && dim != 2 {
            return Err(MetricError::InvalidModel(format!(
                "{} has fixed dimension 2, got {dim}",
                kind.name()
            )));
        }
        Ok(Self { kind, dim })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(ModelKind::EuclideanL2, dim.max(1)).expect("normed kinds accept any dim")
    }

    pub fn sphere() -> Self {
        Self { kind: ModelKind::SphereUnit, dim: 2 }
    }

    pub fn hyperbolic() -> Self {
        Self { kind: ModelKind::HyperbolicPlane, dim: 2 }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of coordinates per point.
    pub fn arity(&self) -> usize {
        match self.kind {
            ModelKind::SphereUnit => 3,
            _ => self.dim,
        }
    }

    /// The fixed center used by [`sample_model`].
    pub fn base_point(&self) -> Vec<f64> {
        match self.kind {
            ModelKind::SphereUnit => vec![0.0, 0.0, 1.0],
            _ => vec![0.0; self.arity()],
        }
    }

    pub fn check_point(&self, p: &[f64]) -> Result<(), String> {
        if p.len() != self.arity() {
            return Err(format!("expected {} coordinates, got {}", self.arity(), p.len()));
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err("non-finite coordinate".into());
        }
        match self.kind {
            ModelKind::SphereUnit => {
                let norm = norm2(p);
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(format!("sphere point has norm {norm}"));
                }
            }
            ModelKind::HyperbolicPlane if norm2(p) >= 1.0 => {
                return Err("point lies outside the open Poincaré disk".into());
            }
            _ => {}
        }
        Ok(())
    }

    /// Closed-form distance of the model.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            ModelKind::EuclideanL2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            ModelKind::NormedL1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            ModelKind::NormedLinf => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
            ModelKind::SphereUnit => {
                let cross = [
                    a[1] * b[2] - a[2] * b[1],
                    a[2] * b[0] - a[0] * b[2],
                    a[0] * b[1] - a[1] * b[0],
                ];
                let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                norm2(&cross).atan2(dot)
            }
            ModelKind::HyperbolicPlane => {
                let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                let (na, nb) = (norm2(a), norm2(b));
                let denom = ((1.0 - na) * (1.0 + na) * (1.0 - nb) * (1.0 + nb)).sqrt();
                2.0 * (diff / denom).asinh()
            }
        }
    }
}

impl fmt::Display for ModelSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(dim {})", self.kind.name(), self.dim)
    }
}

fn norm2(p: &[f64]) -> f64 {
    p.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Coordinates in a model space.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    model: ModelSpace,
    coords: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(model: ModelSpace, coords: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        if coords.is_empty() {
            return Err(MetricError::Empty);
        }
        for (index, p) in coords.iter().enumerate() {
            model.check_point(p).map_err(|reason| MetricError::InvalidCoordinates {
                model: model.kind.name().into(),
                index,
                reason,
            })?;
        }
        Ok(Self { model, coords })
    }

    pub fn model(&self) -> ModelSpace {
        self.model
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.model.distance(&self.coords[i], &self.coords[j])
    }
}

/// Pairwise model distances of a cloud. Coincident points are rejected since the
/// result must be a metric on distinct points.
pub fn from_point_cloud(pc: &PointCloud) -> Result<FiniteMetricSpace, MetricError> {
    let n = pc.len();
    for i in 0..n {
        for j in i + 1..n {
            if pc.distance(i, j) <= 0.0 {
                return Err(MetricError::CoincidentPoints { i, j });
            }
        }
    }
    FiniteMetricSpace::from_fn(n, |i, j| pc.distance(i, j))
}

/// `count` seeded points in the radius-`radius` ball of `model` around its base point.
/// The first point is the base point itself; the rest are uniform in the ball (volume
/// measure of the model).
pub fn sample_model(model: ModelSpace, count: usize, radius: f64, seed: u64) -> Result<PointCloud, MetricError> {
    if count == 0 {
        return Err(MetricError::InvalidSampling("count must be at least 1".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(MetricError::InvalidSampling(format!("radius must be positive, got {radius}")));
    }
    match model.kind {
        ModelKind::SphereUnit if radius > PI => {
            return Err(MetricError::InvalidSampling(format!("sphere cap radius {radius} exceeds π")));
        }
        ModelKind::HyperbolicPlane if radius > MAX_HYPERBOLIC_RADIUS => {
            return Err(MetricError::InvalidSampling(format!(
                "hyperbolic radius {radius} exceeds {MAX_HYPERBOLIC_RADIUS}"
            )));
        }
        _ => {}
    }
    let mut rng = seeded_rng(seed);
    let mut coords = Vec::with_capacity(count);
    coords.push(model.base_point());
    for _ in 1..count {
        coords.push(sample_in_ball(&model, radius, &mut rng));
    }
    PointCloud::new(model, coords)
}

/// One point uniform in the model ball of `radius` around the base point.
pub(crate) fn sample_in_ball<R: Rng>(model: &ModelSpace, radius: f64, rng: &mut R) -> Vec<f64> {
    let d = model.dim;
    match model.kind {
        ModelKind::EuclideanL2 => {
            let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let len = norm2(&dir).max(f64::MIN_POSITIVE);
            let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
            dir.iter().map(|x| x / len * r).collect()
        }
        ModelKind::NormedL1 => {
            // Normalised exponentials (one slack term) are uniform on the simplex.
            let e: Vec<f64> = (0..=d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = e.iter().sum();
            e[..d]
                .iter()
                .map(|x| {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * radius * x / total
                })
                .collect()
        }
        ModelKind::NormedLinf => (0..d).map(|_| rng.random_range(-radius..radius)).collect(),
        ModelKind::SphereUnit => {
            let z = 1.0 - rng.random::<f64>() * (1.0 - radius.cos());
            let phi = rng.random::<f64>() * 2.0 * PI;
            let s = (1.0 - z * z).max(0.0).sqrt();
            vec![s * phi.cos(), s * phi.sin(), z]
        }
        ModelKind::HyperbolicPlane => {
            // Area within hyperbolic radius ρ is proportional to cosh ρ − 1.
            let rho = (1.0 + rng.random::<f64>() * (radius.cosh() - 1.0)).acosh();
            let r = (rho / 2.0).tanh();
            let phi = rng.random::<f64>() * 2.0 * PI;
            vec![r * phi.cos(), r * phi.sin()]
        }
    }
}
