//! File formats: distance matrices (CSV or JSON), DSE spaces, point clouds, curves and
//! embedding dumps.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{CurveError, SampledCurve};
use crate::dse::{DseError, DseSpace};
use crate::metric::{FiniteMetricSpace, MetricError, ModelKind, ModelSpace, PointCloud};
use crate::net::NetEmbedding;

/// The `order` tag carried by serialized DSE spaces.
pub const DSE_ORDER: &str = "identity";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Dse(#[from] DseError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("matrix is not symmetric: d[{i}][{j}] = {a} but d[{j}][{i}] = {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
}

fn field(field: &'static str, reason: impl Into<String>) -> IoError {
    IoError::Field { field, reason: reason.into() }
}

fn check_symmetric(m: &FiniteMetricSpace) -> Result<(), IoError> {
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            let (a, b) = (m.d(i, j), m.d(j, i));
            if a != b {
                return Err(IoError::Asymmetric { i, j, a, b });
            }
        }
    }
    Ok(())
}

/// Reads a CSV matrix, one row per point. A first row that does not parse as numbers is
/// taken as a header of point labels.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<FiniteMetricSpace, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut labels = None;
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if line == 0 => labels = Some(record.iter().map(str::to_owned).collect()),
            Err(e) => return Err(field("dist", format!("row {}: {e}", rows.len()))),
        }
    }
    let m = FiniteMetricSpace::from_rows(rows)?;
    check_symmetric(&m)?;
    Ok(match labels {
        Some(l) => m.with_labels(l)?,
        None => m,
    })
}

/// Writes the matrix as CSV, with a label header when the space has labels.
pub fn write_matrix_csv<W: Write>(m: &FiniteMetricSpace, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(labels) = m.labels() {
        w.write_record(labels)?;
    }
    for i in 0..m.len() {
        w.write_record(m.row(i).iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON form of a distance matrix; DSE spaces add `"order": "identity"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub dist: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
}

impl MatrixFile {
    pub fn of_metric(m: &FiniteMetricSpace) -> Self {
        Self { n: m.len(), dist: m.to_rows(), labels: m.labels().map(<[String]>::to_vec), order: None }
    }

    pub fn of_dse(d: &DseSpace) -> Self {
        Self { order: Some(DSE_ORDER.into()), ..Self::of_metric(d.base()) }
    }

    pub fn into_metric(self) -> Result<FiniteMetricSpace, IoError> {
        if self.dist.len() != self.n {
            return Err(field("n", format!("declared {} points but `dist` has {} rows", self.n, self.dist.len())));
        }
        let m = FiniteMetricSpace::from_rows(self.dist)?;
        check_symmetric(&m)?;
        Ok(match self.labels {
            Some(l) => m.with_labels(l)?,
            None => m,
        })
    }

    /// Requires the identity order tag and re-verifies the DSE condition.
    pub fn into_dse(self) -> Result<DseSpace, IoError> {
        match self.order.as_deref() {
            Some(DSE_ORDER) => Ok(DseSpace::verified(self.into_metric()?)?),
            Some(other) => Err(field("order", format!("expected {DSE_ORDER:?}, got {other:?}"))),
            None => Err(field("order", "missing")),
        }
    }
}

/// Parses a distance matrix given either as JSON (leading `{`) or CSV.
pub fn parse_metric(text: &str) -> Result<FiniteMetricSpace, IoError> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str::<MatrixFile>(text)?.into_metric()
    } else {
        read_matrix_csv(text.as_bytes())
    }
}

/// Parses a DSE file. A bare matrix (JSON without `order`, or CSV) is accepted when it
/// passes the DSE check in index order.
pub fn parse_dse(text: &str) -> Result<DseSpace, IoError> {
    if text.trim_start().starts_with('{') {
        let file: MatrixFile = serde_json::from_str(text)?;
        if file.order.is_none() {
            return Ok(DseSpace::verified(file.into_metric()?)?);
        }
        file.into_dse()
    } else {
        Ok(DseSpace::verified(read_matrix_csv(text.as_bytes())?)?)
    }
}

fn parse_model(name: &str, dim: usize) -> Result<ModelSpace, IoError> {
    let kind = ModelKind::parse(name).map_err(|e| field("model", e.to_string()))?;
    ModelSpace::new(kind, dim).map_err(|e| field("dim", e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloudFile {
    pub model: String,
    pub dim: usize,
    pub coords: Vec<Vec<f64>>,
}

impl PointCloudFile {
    pub fn of_cloud(pc: &PointCloud) -> Self {
        let model = pc.model();
        Self { model: model.kind().name().into(), dim: model.dim(), coords: pc.coords().to_vec() }
    }

    pub fn into_cloud(self) -> Result<PointCloud, IoError> {
        let model = parse_model(&self.model, self.dim)?;
        PointCloud::new(model, self.coords).map_err(|e| field("coords", e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub model: String,
    pub dim: usize,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl CurveFile {
    pub fn of_curve(c: &SampledCurve) -> Self {
        let model = c.model();
        Self { model: model.kind().name().into(), dim: model.dim(), times: c.times().to_vec(), points: c.points().to_vec() }
    }

    pub fn into_curve(self) -> Result<SampledCurve, IoError> {
        let model = parse_model(&self.model, self.dim)?;
        Ok(SampledCurve::new(model, self.times, self.points)?)
    }
}

pub fn parse_point_cloud(text: &str) -> Result<PointCloud, IoError> {
    serde_json::from_str::<PointCloudFile>(text)?.into_cloud()
}

pub fn parse_curve(text: &str) -> Result<SampledCurve, IoError> {
    serde_json::from_str::<CurveFile>(text)?.into_curve()
}

/// One row per point: its index followed by the distances to each net point.
pub fn write_embedding_csv<W: Write>(e: &NetEmbedding, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(std::iter::once("point".to_string()).chain(e.net.iter().map(|z| format!("z{z}"))))?;
    for (p, row) in e.coords.iter().enumerate() {
        w.write_record(std::iter::once(p.to_string()).chain(row.iter().map(f64::to_string)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dse::gen_snowflaked_path;
    use crate::metric::sample_model;
    use crate::net::net_embed;
    use proptest::prelude::*;

    #[test]
    fn csv_with_and_without_header() {
        let m = parse_metric("0,1,2\n1,0,1\n2,1,0\n").unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.d(0, 2), 2.0);
        assert!(m.labels().is_none());

        let m = parse_metric("a, b\n0, 3.5\n3.5, 0\n").unwrap();
        assert_eq!(m.labels().unwrap(), ["a", "b"]);
        assert_eq!(m.d(1, 0), 3.5);
    }

    #[test]
    fn loading_rejects_bad_matrices() {
        assert!(matches!(parse_metric("0,1\n1.5,0\n"), Err(IoError::Asymmetric { i: 0, j: 1, .. })));
        assert!(matches!(parse_metric("0,1\n1\n"), Err(IoError::Csv(_) | IoError::Metric(_))));
        assert!(matches!(parse_metric("0,1\nx,0\n"), Err(IoError::Field { field: "dist", .. })));
        assert!(matches!(parse_metric(r#"{"n": 3, "dist": [[0]]}"#), Err(IoError::Field { field: "n", .. })));
        assert!(matches!(parse_metric(r#"{"n": 1}"#), Err(IoError::Json(_))));
        assert!(matches!(parse_metric(""), Err(IoError::Metric(MetricError::Empty))));
    }

    #[test]
    fn dse_files_are_tagged_and_reverified() {
        let d = gen_snowflaked_path(6, 0.5).unwrap();
        let json = serde_json::to_string(&MatrixFile::of_dse(&d)).unwrap();
        assert!(json.contains(r#""order":"identity""#));
        assert_eq!(parse_dse(&json).unwrap(), d);

        let bad = r#"{"n":3,"dist":[[0,2,1],[2,0,1],[1,1,0]],"order":"identity"}"#;
        assert!(matches!(parse_dse(bad), Err(IoError::Dse(DseError::NotDse { .. }))));
        let wrong = r#"{"n":1,"dist":[[0]],"order":"reversed"}"#;
        assert!(matches!(parse_dse(wrong), Err(IoError::Field { field: "order", .. })));
    }

    #[test]
    fn point_cloud_and_curve_round_trip() {
        let pc = sample_model(ModelSpace::sphere(), 5, 0.5, 1).unwrap();
        let text = serde_json::to_string(&PointCloudFile::of_cloud(&pc)).unwrap();
        assert_eq!(parse_point_cloud(&text).unwrap(), pc);

        let c = SampledCurve::new(ModelSpace::euclidean(2), vec![0.0, 1.0], vec![vec![1.0, 1.0], vec![0.5, 0.0]]).unwrap();
        let text = serde_json::to_string(&CurveFile::of_curve(&c)).unwrap();
        assert_eq!(parse_curve(&text).unwrap(), c);

        let bad = r#"{"model":"torus","dim":2,"coords":[[0,0]]}"#;
        assert!(matches!(parse_point_cloud(bad), Err(IoError::Field { field: "model", .. })));
        let bad = r#"{"model":"hyperbolic","dim":2,"coords":[[2,0]]}"#;
        assert!(matches!(parse_point_cloud(bad), Err(IoError::Field { field: "coords", .. })));
    }

    #[test]
    fn embedding_csv_layout() {
        let m = FiniteMetricSpace::collinear(3, 1.0).unwrap();
        let e = net_embed(&m, &[0, 2]).unwrap();
        let mut out = Vec::new();
        write_embedding_csv(&e, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "point,z0,z2\n0,0,2\n1,1,1\n2,2,0\n");
    }

    proptest! {
        #[test]
        fn matrices_round_trip_exactly(seed in any::<u64>(), n in 1usize..12, labelled in any::<bool>()) {
            let mut m = crate::metric::from_point_cloud(&sample_model(ModelSpace::hyperbolic(), n, 2.0, seed).unwrap()).unwrap();
            if labelled {
                m = m.with_labels((0..n).map(|i| format!("p{i}")).collect()).unwrap();
            }
            let mut csv_bytes = Vec::new();
            write_matrix_csv(&m, &mut csv_bytes).unwrap();
            prop_assert_eq!(&parse_metric(std::str::from_utf8(&csv_bytes).unwrap()).unwrap(), &m);
            let json = serde_json::to_string(&MatrixFile::of_metric(&m)).unwrap();
            prop_assert_eq!(&parse_metric(&json).unwrap(), &m);
        }
    }
}
