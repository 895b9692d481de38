//! Deciding and classifying doubly autoparallel submanifolds `M = W ∩ Sⁿ`.
//!
//! Two independent criteria are evaluated on every input:
//!
//! * **closure**: `W` is closed under the mutated product `u ∘ a⁻¹ ∘ w` for a
//!   positive `a ∈ W` (checked on all pairs of frame vectors, which suffices
//!   by bilinearity);
//! * **blocks**: the coordinates of `V = a⁻¹ ∘ W` fall into exactly `dim W`
//!   classes of tied coordinates.
//!
//! [`analyze`] runs both and refuses to emit a verdict when they disagree.

mod canonical;
mod chart;

pub use canonical::{
    classify_blocks, coordinate_classes, generate_canonical, generate_vertex_span,
    validate_permutation, CanonicalForm, CanonicalModel, Classification,
};
pub use chart::{simplex_chart, tangent_frame, SimplexChart};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hadamard::{mutation_product, PositiveVector, CONDITIONING_WARNING_RATIO};
use crate::subspace::{AffineSubspace, Subspace};
use canonical::check_base_point;

/// Outcome of [`closure_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureOutcome {
    pub closed: bool,
    /// Largest of `‖x − Proj_W x‖ / max(1, ‖x‖)` over all frame pairs.
    pub max_residual: f64,
    /// Frame-vector indices of the worst pair when the test fails.
    pub witness: Option<(usize, usize)>,
}

/// Tests `b_i ∘ a⁻¹ ∘ b_j ∈ W` for every unordered pair of frame vectors.
pub fn closure_check(w: &Subspace, a: &PositiveVector, tol: f64) -> Result<ClosureOutcome> {
    check_base_point(w, a)?;
    let frame = w.basis_vectors();
    let mut max_residual: f64 = 0.0;
    let mut worst = None;
    for i in 0..frame.len() {
        for j in i..frame.len() {
            let x = mutation_product(&frame[i], &frame[j], a.as_slice())?;
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = w.contains(&x, tol)?.scaled_residual(norm);
            if r > max_residual || worst.is_none() {
                max_residual = max_residual.max(r);
                worst = Some((i, j));
            }
        }
    }
    let closed = max_residual <= tol;
    Ok(ClosureOutcome { closed, max_residual, witness: if closed { None } else { worst } })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    DoublyAutoparallel,
    NotDA,
    NoPositivePoint,
    TrivialFullSpace,
}

/// Evidence bundle produced by [`analyze`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaReport {
    pub verdict: Verdict,
    pub ambient_dim: usize,
    pub dim: usize,
    pub base_point: Option<PositiveVector>,
    pub closure_residual_max: Option<f64>,
    pub closure_witness: Option<(usize, usize)>,
    pub coordinate_classes: Option<usize>,
    pub canonical: Option<CanonicalForm>,
    pub cross_check_agreed: bool,
    /// Distance between `log a + V` and `log a' + V'` for a second base point.
    pub base_point_residual: Option<f64>,
    pub tolerance: f64,
    pub warnings: Vec<String>,
}

/// Tolerance for the base-point independence comparison.
pub const BASE_POINT_TOL: f64 = 1e-8;

/// Full decision procedure with a base point found by linear programming.
pub fn analyze(w: &Subspace, tol: f64) -> Result<DaReport> {
    match w.find_positive_point()? {
        None => Ok(DaReport {
            verdict: Verdict::NoPositivePoint,
            ambient_dim: w.ambient_dim(),
            dim: w.dim(),
            base_point: None,
            closure_residual_max: None,
            closure_witness: None,
            coordinate_classes: None,
            canonical: None,
            cross_check_agreed: true,
            base_point_residual: None,
            tolerance: tol,
            warnings: vec!["W meets the positive orthant only on its boundary or not at all".into()],
        }),
        Some(a) => analyze_at(w, &a, tol),
    }
}

/// Decision procedure at a caller-supplied positive point `a ∈ W`.
pub fn analyze_at(w: &Subspace, a: &PositiveVector, tol: f64) -> Result<DaReport> {
    check_base_point(w, a)?;
    let mut warnings = Vec::new();
    let cond = a.conditioning();
    if cond < CONDITIONING_WARNING_RATIO {
        warnings.push(format!("base point is poorly conditioned (min/max ratio {cond:e})"));
    }
    let mut report = DaReport {
        verdict: Verdict::TrivialFullSpace,
        ambient_dim: w.ambient_dim(),
        dim: w.dim(),
        base_point: Some(a.clone()),
        closure_residual_max: None,
        closure_witness: None,
        coordinate_classes: None,
        canonical: None,
        cross_check_agreed: true,
        base_point_residual: None,
        tolerance: tol,
        warnings,
    };
    if w.dim() == w.ambient_dim() {
        report
            .warnings
            .push("W is the whole space: M is the full simplex and vacuously doubly autoparallel".into());
        return Ok(report);
    }

    let closure = closure_check(w, a, tol)?;
    let classification = classify_blocks(w, a, tol)?;
    let agreed = closure.closed == classification.is_canonical();
    if !agreed {
        return Err(Error::CriteriaDisagree {
            closure_residual: closure.max_residual,
            classes: classification.class_count(),
            dim: w.dim(),
        });
    }
    report.closure_residual_max = Some(closure.max_residual);
    report.closure_witness = closure.witness;
    report.coordinate_classes = Some(classification.class_count());
    report.cross_check_agreed = agreed;
    match classification {
        Classification::Canonical(form) => {
            report.verdict = Verdict::DoublyAutoparallel;
            report.canonical = Some(form);
            let residual = base_point_independence(w, a)?;
            if residual > BASE_POINT_TOL {
                report.warnings.push(format!(
                    "log a + V moved by {residual:e} under a change of base point"
                ));
            }
            report.base_point_residual = Some(residual);
        }
        Classification::NotDoublyAutoparallel { .. } => report.verdict = Verdict::NotDA,
    }
    Ok(report)
}

/// `log a + V` with `V = a⁻¹ ∘ W`.
pub fn log_affine_subspace(w: &Subspace, a: &PositiveVector) -> Result<AffineSubspace> {
    AffineSubspace::new(a.ln(), w.scale_by_point(a, true)?)
}

/// Second base point `a' = a + εw`, where `w` is the frame vector farthest
/// from the line through `a` and `ε = 0.1 · min a / max |w|`.
pub fn second_base_point(w: &Subspace, a: &PositiveVector) -> Result<PositiveVector> {
    let a_norm2: f64 = a.as_slice().iter().map(|v| v * v).sum();
    let frame = w.basis_vectors();
    let off_line = |v: &Vec<f64>| {
        let dot: f64 = v.iter().zip(a.as_slice()).map(|(x, y)| x * y).sum();
        1.0 - dot * dot / a_norm2
    };
    let dir = frame
        .iter()
        .max_by(|x, y| off_line(x).total_cmp(&off_line(y)))
        .ok_or_else(|| Error::InvalidInput("empty subspace".into()))?;
    let amin = a.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let wmax = dir.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let eps = 0.1 * amin / wmax;
    PositiveVector::new(a.as_slice().iter().zip(dir).map(|(x, y)| x + eps * y).collect())
}

/// Distance between `log a + a⁻¹∘W` and the same construction at
/// [`second_base_point`].
pub fn base_point_independence(w: &Subspace, a: &PositiveVector) -> Result<f64> {
    let a2 = second_base_point(w, a)?;
    log_affine_subspace(w, a)?.distance(&log_affine_subspace(w, &a2)?)
}

/// Outcome of [`log_affine_verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct LogAffineOutcome {
    pub max_residual: f64,
    /// Sample `a + w` attaining the largest residual.
    pub worst_point: Vec<f64>,
}

const MAX_SHRINKS: usize = 64;
/// Samples keep every coordinate above this fraction of the base point's.
const SAMPLE_MARGIN: f64 = 1e-3;

/// Samples points of `(a + W) ∩ R^{n+1}_+` and measures how far their
/// logarithms stray from `log a + V`.
pub fn log_affine_verify<R: Rng + ?Sized>(
    w: &Subspace,
    a: &PositiveVector,
    samples: usize,
    rng: &mut R,
) -> Result<LogAffineOutcome> {
    check_base_point(w, a)?;
    let target = log_affine_subspace(w, a)?;
    let basis = w.basis();
    let amax = a.as_slice().iter().copied().fold(0.0f64, f64::max);
    let mut out = LogAffineOutcome { max_residual: 0.0, worst_point: a.as_slice().to_vec() };
    for _ in 0..samples {
        let coeffs: Vec<f64> = (0..w.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let dir: Vec<f64> = (0..w.ambient_dim())
            .map(|i| (0..w.dim()).map(|k| basis[(i, k)] * coeffs[k]).sum())
            .collect();
        let dmax = dir.iter().map(|v: &f64| v.abs()).fold(0.0f64, f64::max);
        if dmax == 0.0 {
            continue;
        }
        let mut scale = amax / dmax;
        let mut point = None;
        for _ in 0..MAX_SHRINKS {
            let cand: Vec<f64> =
                a.as_slice().iter().zip(&dir).map(|(x, d)| x + scale * d).collect();
            if cand.iter().zip(a.as_slice()).all(|(v, x)| *v > SAMPLE_MARGIN * x) {
                point = Some(cand);
                break;
            }
            scale *= 0.5;
        }
        let point = point.ok_or(Error::SamplingFailed { attempts: MAX_SHRINKS })?;
        let logp: Vec<f64> = point.iter().map(|v| v.ln()).collect();
        let r = target.contains(&logp, 0.0)?.residual;
        if r > out.max_residual {
            out.max_residual = r;
            out.worst_point = point;
        }
    }
    Ok(out)
}
