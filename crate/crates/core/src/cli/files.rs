use std::io;
use std::path::Path;

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::analysis::{CanonicalForm, DaReport, Verdict};
use crate::error::{Error, Result};
use crate::hadamard::PositiveVector;
use crate::subspace::{Subspace, DEFAULT_TOL};

/// On-disk description of a model `W = span(basis)`.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpecFile {
    pub ambient_dim: usize,
    pub basis: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl ModelSpecFile {
    /// Parses and validates; errors name the offending line or field.
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("malformed model spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let field = |msg: String| Err(Error::InvalidInput(msg));
        if self.ambient_dim < 2 {
            return field(format!("field `ambient_dim`: must be at least 2, got {}", self.ambient_dim));
        }
        if self.basis.is_empty() {
            return field("field `basis`: at least one row is required".into());
        }
        for (i, row) in self.basis.iter().enumerate() {
            if row.len() != self.ambient_dim {
                return field(format!(
                    "field `basis[{i}]`: expected {} entries, got {}",
                    self.ambient_dim,
                    row.len()
                ));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.ambient_dim {
                return field(format!(
                    "field `labels`: expected {} labels, got {}",
                    self.ambient_dim,
                    labels.len()
                ));
            }
        }
        if let Some(b) = &self.base_point {
            if b.len() != self.ambient_dim {
                return field(format!(
                    "field `base_point`: expected {} entries, got {}",
                    self.ambient_dim,
                    b.len()
                ));
            }
            PositiveVector::new(b.clone())
                .map_err(|e| Error::InvalidInput(format!("field `base_point`: {e}")))?;
        }
        Ok(())
    }

    pub fn subspace(&self) -> Result<Subspace> {
        Subspace::from_basis(&self.basis, DEFAULT_TOL)
            .map_err(|e| Error::InvalidInput(format!("field `basis`: {e}")))
    }

    /// The declared base point, checked to lie in `span(basis)`.
    pub fn base_point(&self, w: &Subspace) -> Result<Option<PositiveVector>> {
        let Some(b) = &self.base_point else { return Ok(None) };
        let m = w.contains(b, DEFAULT_TOL)?;
        if !m.contains {
            return Err(Error::InvalidInput(format!(
                "field `base_point`: not in span(basis), residual {:e}",
                m.residual
            )));
        }
        Ok(Some(PositiveVector::new(b.clone())?))
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Tolerances {
    pub closure: f64,
    pub base_point_independence: f64,
    pub autoparallel_alphas: Vec<f64>,
    pub log_affine_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct AlphaResidual {
    pub alpha: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Residuals {
    pub closure: Option<f64>,
    pub closure_witness: Option<(usize, usize)>,
    pub coordinate_classes: Option<usize>,
    pub base_point_independence: Option<f64>,
    pub log_affine: Option<f64>,
    /// Evaluated at the normalised base point `a / Σ a`.
    pub autoparallel: Vec<AlphaResidual>,
}

/// Output of `analyze`.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct ReportFile {
    pub tool: String,
    pub version: String,
    pub tolerances: Tolerances,
    pub verdict: Verdict,
    pub ambient_dim: usize,
    pub dim: usize,
    pub labels: Option<Vec<String>>,
    pub base_point: Option<Vec<f64>>,
    pub canonical: Option<CanonicalForm>,
    pub cross_check_agreed: bool,
    pub residuals: Residuals,
    pub warnings: Vec<String>,
}

impl ReportFile {
    pub fn from_report(report: DaReport, tolerances: Tolerances, labels: Option<Vec<String>>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            tolerances,
            verdict: report.verdict,
            ambient_dim: report.ambient_dim,
            dim: report.dim,
            labels,
            base_point: report.base_point.map(PositiveVector::into_inner),
            canonical: report.canonical,
            cross_check_agreed: report.cross_check_agreed,
            residuals: Residuals {
                closure: report.closure_residual_max,
                closure_witness: report.closure_witness,
                coordinate_classes: report.coordinate_classes,
                base_point_independence: report.base_point_residual,
                log_affine: None,
                autoparallel: Vec::new(),
            },
            warnings: report.warnings,
        }
    }
}

/// Output of `classify`.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct ClassifyFile {
    pub tool: String,
    pub version: String,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub coordinate_classes: Option<usize>,
    pub canonical: Option<CanonicalForm>,
}

/// Output of `project`.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct ProjectionFile {
    pub alpha: f64,
    pub point: Vec<f64>,
    pub divergence: f64,
    pub agreement_diameter: f64,
    pub starts: usize,
    pub seed: u64,
}

/// Pretty JSON with every float written to 17 significant digits.
struct ExactFloats(PrettyFormatter<'static>);

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// `{:.16e}` rendering used in trace files.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}
