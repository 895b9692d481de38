use nalgebra::{DMatrix, DVector};

use crate::analysis::tangent_frame;
use crate::error::{check_dims, Error, Result};
use crate::infogeo::SimplexPoint;
use crate::subspace::Subspace;

/// Membership tolerance for the base point of [`autoparallel_residual`].
pub const ON_MANIFOLD_TOL: f64 = 1e-9;

/// `Σ_ij Γ^(α)_{ij,l} u^i w^j` in the `η` chart.
fn lower_contraction(p: &[f64], u: &[f64], w: &[f64], alpha: f64) -> Vec<f64> {
    let n = p.len() - 1;
    let last = p[n];
    let su: f64 = u.iter().sum();
    let sw: f64 = w.iter().sum();
    let tail = su * sw / (last * last);
    let scale = 0.5 * (1.0 + alpha);
    (0..n).map(|l| scale * (-(u[l] * w[l]) / (p[l] * p[l]) + tail)).collect()
}

/// Fisher metric in `η`: `diag(1/p_i) + 1/p_{n+1}`.
fn eta_metric(p: &[f64]) -> DMatrix<f64> {
    let n = p.len() - 1;
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / p[i] } else { 0.0 } + 1.0 / p[n])
}

/// Largest Fisher norm of the normal part of `∇^(α)_{T_a} T_b` over pairs of
/// tangent frame fields of `M = W ∩ Sⁿ` at `p`.
///
/// `M` is affine in `η`, so its frame fields are constant there and the
/// covariant derivative reduces to `Γ^k_{ij} T_a^i T_b^j`.
pub fn autoparallel_residual(w: &Subspace, p: &SimplexPoint, alpha: f64) -> Result<f64> {
    check_dims(w.ambient_dim(), p.len())?;
    let m = w.contains(p.probs(), ON_MANIFOLD_TOL)?;
    if !m.contains {
        return Err(Error::Precondition(format!(
            "point is {:e} away from W, not on W ∩ Sⁿ",
            m.residual
        )));
    }
    let frame = tangent_frame(w)?;
    let k = frame.ncols();
    if k == 0 {
        return Ok(0.0);
    }
    let pr = p.probs();
    let n = pr.len() - 1;
    let t = frame.rows(0, n).into_owned();
    let g = eta_metric(pr);
    let gt = &g * &t;
    let gram = t.transpose() * &gt;
    let gram = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("tangent Gram matrix is singular".into()))?;
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in a..k {
            let ta: Vec<f64> = t.column(a).iter().copied().collect();
            let tb: Vec<f64> = t.column(b).iter().copied().collect();
            let lower = DVector::from_vec(lower_contraction(pr, &ta, &tb, alpha));
            // raise with g⁻¹ = diag(p) − ppᵀ
            let pc: f64 = (0..n).map(|i| pr[i] * lower[i]).sum();
            let raised = DVector::from_fn(n, |i, _| pr[i] * lower[i] - pr[i] * pc);
            let coef = gram.solve(&(t.transpose() * &lower));
            let normal = raised - &t * coef;
            let norm2 = normal.dot(&(&g * &normal));
            worst = worst.max(norm2.max(0.0).sqrt());
        }
    }
    Ok(worst)
}
