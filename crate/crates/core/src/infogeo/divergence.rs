use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{simplex_chart, SimplexChart};
use crate::error::{check_dims, Error, Result};
use crate::infogeo::SimplexPoint;
use crate::subspace::Subspace;

/// Within this distance of `±1` the Kullback–Leibler limits are used.
pub const KL_BRANCH_TOL: f64 = 1e-9;
/// Multi-start minimisers further apart than this contradict uniqueness.
pub const UNIQUENESS_TOL: f64 = 1e-4;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
/// Newton decrements below this multiple of `|f|` are taken as full steps.
const ROUNDING_DECREMENT: f64 = 1e-12;

/// `D^(α)(p‖q) = 4/(1−α²) (1 − Σ p_i^{(1−α)/2} q_i^{(1+α)/2})`, with
/// `D^(−1)(p‖q) = Σ p log(p/q)` and `D^(+1)(p‖q) = Σ q log(q/p)`.
pub fn alpha_divergence(p: &SimplexPoint, q: &SimplexPoint, alpha: f64) -> Result<f64> {
    check_dims(p.len(), q.len())?;
    Ok(divergence_raw(p.probs(), q.probs(), alpha).max(0.0))
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * (a / b).ln()).sum()
}

fn divergence_raw(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    if (alpha + 1.0).abs() < KL_BRANCH_TOL {
        kl(p, q)
    } else if (alpha - 1.0).abs() < KL_BRANCH_TOL {
        kl(q, p)
    } else {
        let (a, b) = ((1.0 - alpha) / 2.0, (1.0 + alpha) / 2.0);
        let s: f64 = p.iter().zip(q).map(|(x, y)| x.powf(a) * y.powf(b)).sum();
        4.0 / (1.0 - alpha * alpha) * (1.0 - s)
    }
}

/// Gradient and diagonal Hessian of `q ↦ D^(α)(p‖q)`.
fn q_derivatives(p: &[f64], q: &[f64], alpha: f64) -> (Vec<f64>, Vec<f64>) {
    if (alpha + 1.0).abs() < KL_BRANCH_TOL {
        let g = p.iter().zip(q).map(|(a, b)| -a / b).collect();
        let h = p.iter().zip(q).map(|(a, b)| a / (b * b)).collect();
        (g, h)
    } else if (alpha - 1.0).abs() < KL_BRANCH_TOL {
        let g = p.iter().zip(q).map(|(a, b)| (b / a).ln() + 1.0).collect();
        let h = q.iter().map(|b| 1.0 / b).collect();
        (g, h)
    } else {
        let (a, b) = ((1.0 - alpha) / 2.0, (1.0 + alpha) / 2.0);
        let c = -2.0 / (1.0 - alpha);
        let g = p.iter().zip(q).map(|(x, y)| c * x.powf(a) * y.powf(b - 1.0)).collect();
        let h = p.iter().zip(q).map(|(x, y)| x.powf(a) * y.powf(b - 2.0)).collect();
        (g, h)
    }
}

/// Settings for [`alpha_projection`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOptions {
    pub starts: usize,
    pub seed: u64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { starts: 8, seed: 0, grad_tol: 1e-10, max_iter: 200 }
    }
}

/// Result of [`alpha_projection`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: SimplexPoint,
    pub divergence: f64,
    /// Largest Euclidean distance between minimisers of different starts.
    pub agreement_diameter: f64,
    pub starts: usize,
}

fn newton(
    chart: &SimplexChart,
    p: &[f64],
    alpha: f64,
    start: Vec<f64>,
    opts: &ProjectionOptions,
) -> Result<Vec<f64>> {
    let d = chart.jacobian();
    let mut xi = start;
    let mut q = chart.raw_point(&xi);
    let mut f = divergence_raw(p, &q, alpha);
    for _ in 0..opts.max_iter {
        let (gq, hq) = q_derivatives(p, &q, alpha);
        let grad = d.transpose() * DVector::from_vec(gq);
        if grad.amax() < opts.grad_tol {
            return Ok(xi);
        }
        let hess = d.transpose() * DMatrix::from_diagonal(&DVector::from_vec(hq)) * d;
        let step = hess
            .cholesky()
            .map(|c| -c.solve(&grad))
            .unwrap_or_else(|| -grad.clone());
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut moved = false;
        if -slope < ROUNDING_DECREMENT * f.abs().max(1.0) {
            let cand: Vec<f64> = xi.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            let cq = chart.raw_point(&cand);
            if cq.iter().all(|v| *v > 0.0) {
                f = divergence_raw(p, &cq, alpha);
                xi = cand;
                q = cq;
                continue;
            }
        }
        for _ in 0..MAX_BACKTRACK {
            let cand: Vec<f64> = xi.iter().zip(step.iter()).map(|(x, s)| x + t * s).collect();
            let cq = chart.raw_point(&cand);
            if cq.iter().all(|v| *v > 0.0) {
                let cf = divergence_raw(p, &cq, alpha);
                if cf <= f + ARMIJO * t * slope {
                    xi = cand;
                    q = cq;
                    f = cf;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            let (gq, _) = q_derivatives(p, &q, alpha);
            let grad = d.transpose() * DVector::from_vec(gq);
            if grad.amax() < opts.grad_tol.max(1e3 * f64::EPSILON) {
                return Ok(xi);
            }
            return Err(Error::OptimizerFailed(format!(
                "line search stalled with gradient {:e}",
                grad.amax()
            )));
        }
    }
    Err(Error::OptimizerFailed(format!("no convergence in {} Newton steps", opts.max_iter)))
}

/// Minimises `q ↦ D^(α)(p‖q)` over `M = W ∩ Sⁿ` by damped Newton in the
/// chart parameters, started from `opts.starts` uniform draws in the chart's
/// parameter box.
pub fn alpha_projection(
    p: &SimplexPoint,
    w: &Subspace,
    alpha: f64,
    opts: &ProjectionOptions,
) -> Result<Projection> {
    check_dims(w.ambient_dim(), p.len())?;
    if opts.starts == 0 {
        return Err(Error::InvalidInput("at least one start is required".into()));
    }
    let chart = simplex_chart(w)?;
    if chart.dim() == 0 {
        let point = chart.point(&[])?;
        let divergence = divergence_raw(p.probs(), point.probs(), alpha);
        return Ok(Projection { point, divergence, agreement_diameter: 0.0, starts: 1 });
    }
    let bx = chart.parameter_box()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut minimisers: Vec<Vec<f64>> = Vec::with_capacity(opts.starts);
    for _ in 0..opts.starts {
        let start = chart.sample(&bx, 1.0, &mut rng);
        minimisers.push(newton(&chart, p.probs(), alpha, start, opts)?);
    }
    let points: Vec<Vec<f64>> = minimisers.iter().map(|xi| chart.raw_point(xi)).collect();
    let mut diameter: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            diameter = diameter.max(d);
        }
    }
    if diameter > UNIQUENESS_TOL {
        return Err(Error::ProjectionNotUnique { diameter });
    }
    let best = points
        .into_iter()
        .map(|q| (divergence_raw(p.probs(), &q, alpha), q))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one start");
    Ok(Projection {
        point: SimplexPoint::new(best.1)?,
        divergence: best.0,
        agreement_diameter: diameter,
        starts: opts.starts,
    })
}
