//! α-geodesics on `Sⁿ`, integrated in the expectation chart `η`.
//!
//! In `η` the mixture coefficients vanish, so `Γ^(α) = (1+α)/2 Γ^(e)` with
//! `Γ^(e)_{ij,k} = −δ_{ijk}/p_i² + 1/p_{n+1}²`, and the inverse metric is the
//! covariance `diag(p) − ppᵀ`. The geodesic equation
//! `η̈^k + Γ^k_{ij} η̇^i η̇^j = 0` therefore costs `O(n)` per evaluation.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dims, Error, Result};
use crate::infogeo::{SimplexPoint, INTERIOR_MARGIN};
use crate::subspace::Subspace;

/// Default number of fixed steps on `[0, 1]`.
pub const DEFAULT_STEPS: usize = 256;
pub const MIN_STEPS: usize = 16;
/// Endpoint accuracy required of the shooting method, max-norm in `η`.
pub const SHOOTING_TOL: f64 = 1e-8;
pub const SHOOTING_MAX_ITER: usize = 50;
const FD_STEP: f64 = 1e-6;
const CONTINUATION_STAGES: [usize; 2] = [8, 32];
const MAX_HALVINGS: usize = 40;

/// A sampled geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicTrace {
    pub alpha: f64,
    pub times: Vec<f64>,
    pub points: Vec<SimplexPoint>,
    /// Initial velocity in `η`.
    pub velocity: Vec<f64>,
    /// Largest distance of a sample from the reference subspace, once attached.
    pub max_constraint_residual: Option<f64>,
}

impl GeodesicTrace {
    /// Membership residual of each sample in `w`.
    pub fn constraint_residuals(&self, w: &Subspace) -> Result<Vec<f64>> {
        self.points.iter().map(|p| Ok(w.contains(p.probs(), 0.0)?.residual)).collect()
    }

    /// Records the largest residual against `w` and returns it.
    pub fn attach_reference(&mut self, w: &Subspace) -> Result<f64> {
        let worst = self.constraint_residuals(w)?.into_iter().fold(0.0, f64::max);
        self.max_constraint_residual = Some(worst);
        Ok(worst)
    }

    pub fn end(&self) -> &SimplexPoint {
        self.points.last().expect("a trace has at least one point")
    }
}

/// `(1 − t) p + t q`, the (−1)-geodesic.
pub fn m_geodesic(p: &SimplexPoint, q: &SimplexPoint, t: f64) -> Result<SimplexPoint> {
    check_dims(p.len(), q.len())?;
    SimplexPoint::new(p.probs().iter().zip(q.probs()).map(|(a, b)| (1.0 - t) * a + t * b).collect())
}

/// `p^{1−t} q^t / Z`, the (+1)-geodesic.
pub fn e_geodesic(p: &SimplexPoint, q: &SimplexPoint, t: f64) -> Result<SimplexPoint> {
    check_dims(p.len(), q.len())?;
    let logs: Vec<f64> =
        p.probs().iter().zip(q.probs()).map(|(a, b)| (1.0 - t) * a.ln() + t * b.ln()).collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    SimplexPoint::new(w.into_iter().map(|v| v / z).collect())
}

fn full_probs(eta: &[f64]) -> Vec<f64> {
    let mut p = eta.to_vec();
    p.push(1.0 - eta.iter().sum::<f64>());
    p
}

/// `−Γ^k_{ij} v^i v^j` in the `η` chart.
pub fn geodesic_acceleration(eta: &[f64], v: &[f64], alpha: f64) -> Vec<f64> {
    let n = eta.len();
    let last = 1.0 - eta.iter().sum::<f64>();
    let s: f64 = v.iter().sum();
    let tail = s * s / (last * last);
    // lower-index contraction Γ_{ij,l} v^i v^j
    let c: Vec<f64> = (0..n).map(|l| -(v[l] * v[l]) / (eta[l] * eta[l]) + tail).collect();
    // raise with diag(p) − ppᵀ
    let pc: f64 = eta.iter().zip(&c).map(|(p, x)| p * x).sum();
    let w = 0.5 * (1.0 + alpha);
    (0..n).map(|k| -w * (eta[k] * c[k] - eta[k] * pc)).collect()
}

fn check_interior(eta: &[f64]) -> std::result::Result<(), f64> {
    let p = full_probs(eta);
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= INTERIOR_MARGIN && min.is_finite() {
        Ok(())
    } else {
        Err(min)
    }
}

struct Integration {
    times: Vec<f64>,
    etas: Vec<Vec<f64>>,
}

fn integrate(
    eta0: &[f64],
    v0: &[f64],
    alpha: f64,
    t_end: f64,
    steps: usize,
    record: bool,
) -> Result<Integration> {
    let n = eta0.len();
    let h = t_end / steps as f64;
    let mut x = eta0.to_vec();
    let mut v = v0.to_vec();
    let mut out = Integration { times: vec![0.0], etas: vec![x.clone()] };
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + s * q).collect()
    };
    for step in 0..steps {
        let t = step as f64 * h;
        let exit = |min_prob: f64, x: &[f64], v: &[f64]| Error::LeftSimplex {
            t,
            min_prob,
            last_eta: x.to_vec(),
            last_velocity: v.to_vec(),
        };
        let k1x = v.clone();
        let k1v = geodesic_acceleration(&x, &v, alpha);
        let x2 = axpy(&x, 0.5 * h, &k1x);
        check_interior(&x2).map_err(|m| exit(m, &x, &v))?;
        let k2x = axpy(&v, 0.5 * h, &k1v);
        let k2v = geodesic_acceleration(&x2, &k2x, alpha);
        let x3 = axpy(&x, 0.5 * h, &k2x);
        check_interior(&x3).map_err(|m| exit(m, &x, &v))?;
        let k3x = axpy(&v, 0.5 * h, &k2v);
        let k3v = geodesic_acceleration(&x3, &k3x, alpha);
        let x4 = axpy(&x, h, &k3x);
        check_interior(&x4).map_err(|m| exit(m, &x, &v))?;
        let k4x = axpy(&v, h, &k3v);
        let k4v = geodesic_acceleration(&x4, &k4x, alpha);
        let nx: Vec<f64> = (0..n)
            .map(|i| x[i] + h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]))
            .collect();
        let nv: Vec<f64> = (0..n)
            .map(|i| v[i] + h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]))
            .collect();
        check_interior(&nx).map_err(|m| exit(m, &x, &v))?;
        x = nx;
        v = nv;
        if record || step + 1 == steps {
            if !record {
                out.times.clear();
                out.etas.clear();
            }
            out.times.push((step + 1) as f64 * h);
            out.etas.push(x.clone());
        }
    }
    Ok(out)
}

/// Integrates the α-geodesic from `p` with initial `η`-velocity `v` over
/// `[0, t_end]` using `steps` classical Runge–Kutta steps.
pub fn alpha_geodesic_ivp(
    p: &SimplexPoint,
    v: &[f64],
    alpha: f64,
    t_end: f64,
    steps: usize,
) -> Result<GeodesicTrace> {
    check_dims(p.manifold_dim(), v.len())?;
    if steps < MIN_STEPS {
        return Err(Error::InvalidInput(format!("need at least {MIN_STEPS} steps, got {steps}")));
    }
    let run = integrate(&p.eta(), v, alpha, t_end, steps, true)?;
    let points = run
        .etas
        .iter()
        .map(|e| SimplexPoint::new(full_probs(e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GeodesicTrace {
        alpha,
        times: run.times,
        points,
        velocity: v.to_vec(),
        max_constraint_residual: None,
    })
}

fn endpoint_miss(eta0: &[f64], v: &[f64], alpha: f64, steps: usize, target: &[f64]) -> Option<Vec<f64>> {
    let run = integrate(eta0, v, alpha, 1.0, steps, false).ok()?;
    let end = run.etas.last()?;
    Some(end.iter().zip(target).map(|(a, b)| a - b).collect())
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Connects `p` to `q` by shooting on the initial velocity: Newton steps with
/// a forward-difference Jacobian, halving the step while the miss grows.
pub fn alpha_geodesic_bvp(
    p: &SimplexPoint,
    q: &SimplexPoint,
    alpha: f64,
    steps: usize,
) -> Result<GeodesicTrace> {
    check_dims(p.len(), q.len())?;
    if steps < MIN_STEPS {
        return Err(Error::InvalidInput(format!("need at least {MIN_STEPS} steps, got {steps}")));
    }
    let eta0 = p.eta();
    let target = q.eta();
    let guess: Vec<f64> = target.iter().zip(&eta0).map(|(a, b)| a - b).collect();
    let direct = shoot(&eta0, &target, alpha, steps, guess.clone());
    let v = match direct {
        Ok(v) => v,
        Err(first) => continuation(&eta0, &target, alpha, steps, guess).map_err(|_| first)?,
    };
    alpha_geodesic_ivp(p, &v, alpha, 1.0, steps)
}

/// Walks `alpha` from the exact m-geodesic guess at `-1` to the target.
fn continuation(
    eta0: &[f64],
    target: &[f64],
    alpha: f64,
    steps: usize,
    guess: Vec<f64>,
) -> Result<Vec<f64>> {
    let mut last = Err(Error::ShootingFailed { iterations: 0, miss: f64::INFINITY });
    for stages in CONTINUATION_STAGES {
        let mut v = guess.clone();
        let mut ok = true;
        for k in 1..=stages {
            let a = -1.0 + (alpha + 1.0) * k as f64 / stages as f64;
            match shoot(eta0, target, a, steps, v.clone()) {
                Ok(next) => v = next,
                Err(e) => {
                    last = Err(e);
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(v);
        }
    }
    last
}

/// Damped Newton on the initial velocity; returns the velocity that hits `target`.
fn shoot(eta0: &[f64], target: &[f64], alpha: f64, steps: usize, mut v: Vec<f64>) -> Result<Vec<f64>> {
    let n = eta0.len();
    let mut miss = endpoint_miss(eta0, &v, alpha, steps, target).ok_or(Error::ShootingFailed {
        iterations: 0,
        miss: f64::INFINITY,
    })?;
    for iter in 0..SHOOTING_MAX_ITER {
        let dist = max_norm(&miss);
        if dist < SHOOTING_TOL {
            return Ok(v);
        }
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut vj = v.clone();
            vj[j] += FD_STEP;
            let mj = endpoint_miss(eta0, &vj, alpha, steps, target)
                .ok_or(Error::ShootingFailed { iterations: iter, miss: dist })?;
            for i in 0..n {
                jac[(i, j)] = (mj[i] - miss[i]) / FD_STEP;
            }
        }
        let delta = jac
            .lu()
            .solve(&(-DVector::from_column_slice(&miss)))
            .ok_or(Error::ShootingFailed { iterations: iter, miss: dist })?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = v.iter().zip(delta.iter()).map(|(a, d)| a + lambda * d).collect();
            if let Some(m) = endpoint_miss(eta0, &cand, alpha, steps, target) {
                if max_norm(&m) < dist {
                    v = cand;
                    miss = m;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::ShootingFailed { iterations: iter + 1, miss: dist });
        }
    }
    let dist = max_norm(&miss);
    if dist < SHOOTING_TOL {
        return Ok(v);
    }
    Err(Error::ShootingFailed { iterations: SHOOTING_MAX_ITER, miss: dist })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infogeo::{raised_contraction, CoordinateChart};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    fn dist(a: &SimplexPoint, b: &SimplexPoint) -> f64 {
        a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn closed_form_examples() {
        let p = pt(&[0.8, 0.2]);
        let q = pt(&[0.2, 0.8]);
        for g in [m_geodesic, e_geodesic] {
            assert!(dist(&g(&p, &q, 0.0).unwrap(), &p) < 1e-15);
            assert!(dist(&g(&p, &q, 1.0).unwrap(), &q) < 1e-15);
            assert!(dist(&g(&p, &q, 0.5).unwrap(), &pt(&[0.5, 0.5])) < 1e-15);
        }
        let p = pt(&[0.1, 0.3, 0.6]);
        let q = pt(&[0.5, 0.25, 0.25]);
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let s: f64 = m_geodesic(&p, &q, t).unwrap().probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
            let th = e_geodesic(&p, &q, t).unwrap().theta();
            for ((a, b), c) in p.theta().iter().zip(q.theta()).zip(th) {
                assert!(((1.0 - t) * a + t * b - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fast_acceleration_matches_defining_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let n1 = rng.random_range(2..7);
            let raw: Vec<f64> = (0..n1).map(|_| rng.random_range(0.1..1.0)).collect();
            let p = SimplexPoint::from_positive(&raw).unwrap();
            let v: Vec<f64> = (0..n1 - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
            let alpha = rng.random_range(-1.5..1.5);
            let fast = geodesic_acceleration(&p.eta(), &v, alpha);
            let slow = raised_contraction(&p, alpha, &CoordinateChart::Eta, &v, &v).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a + b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn ivp_examples() {
        let p = pt(&[0.2, 0.3, 0.5]);
        let v = [0.1, -0.05];
        let tr = alpha_geodesic_ivp(&p, &v, -1.0, 1.0, 64).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.points) {
            let e = x.eta();
            assert!((e[0] - (0.2 + t * 0.1)).abs() < 1e-10);
            assert!((e[1] - (0.3 - t * 0.05)).abs() < 1e-10);
        }
        let still = alpha_geodesic_ivp(&p, &[0.0, 0.0], 0.3, 1.0, 32).unwrap();
        assert!(still.points.iter().all(|x| dist(x, &p) == 0.0));
        assert!(alpha_geodesic_ivp(&p, &v, 0.0, 1.0, 8).is_err());
    }

    #[test]
    fn ivp_exponential_matches_theta_line() {
        let p = pt(&[0.2, 0.3, 0.5]);
        let v = [0.15, -0.1];
        let tr = alpha_geodesic_ivp(&p, &v, 1.0, 1.0, 256).unwrap();
        // θ velocity = (∂θ/∂η) v, with ∂θ^i/∂η_j = δ_ij / p_i + 1 / p_{n+1}
        let pr = p.probs();
        let s: f64 = v.iter().sum();
        let w: Vec<f64> = (0..2).map(|i| v[i] / pr[i] + s / pr[2]).collect();
        let th0 = p.theta();
        for (t, x) in tr.times.iter().zip(&tr.points) {
            let th: Vec<f64> = th0.iter().zip(&w).map(|(a, b)| a + t * b).collect();
            assert!(dist(x, &SimplexPoint::from_theta(&th).unwrap()) < 1e-6);
        }
    }

    #[test]
    fn ivp_exit_is_reported() {
        let p = pt(&[0.2, 0.3, 0.5]);
        match alpha_geodesic_ivp(&p, &[-1.0, 0.0], -1.0, 1.0, 64) {
            Err(Error::LeftSimplex { t, last_eta, .. }) => {
                assert!(t > 0.1 && t < 0.25, "exit time {t}");
                assert!(last_eta[0] > 0.0);
            }
            other => panic!("expected an exit error, got {other:?}"),
        }
    }

    #[test]
    fn bvp_matches_closed_forms() {
        let p = pt(&[0.2, 0.3, 0.5]);
        let q = pt(&[0.5, 0.3, 0.2]);
        for (alpha, closed) in [(-1.0, m_geodesic as fn(_, _, _) -> _), (1.0, e_geodesic)] {
            let tr = alpha_geodesic_bvp(&p, &q, alpha, 256).unwrap();
            for (t, x) in tr.times.iter().zip(&tr.points) {
                assert!(dist(x, &closed(&p, &q, *t).unwrap()) < 1e-6);
            }
        }
        let same = alpha_geodesic_bvp(&p, &p, 0.0, 64).unwrap();
        assert!(same.points.iter().all(|x| dist(x, &p) < 1e-15));
    }

    #[test]
    fn bvp_continues_in_alpha_when_the_direct_guess_exits() {
        let p = pt(&[0.004683591257854094, 0.3328536447968589, 0.3184280493801593, 0.34403471456512763]);
        let q = pt(&[0.2611366209868834, 0.32249083861668965, 0.21453972728099882, 0.20183281311542822]);
        let guess: Vec<f64> = q.eta().iter().zip(p.eta()).map(|(a, b)| a - b).collect();
        assert!(shoot(&p.eta(), &q.eta(), 1.0, 256, guess).is_err());
        let tr = alpha_geodesic_bvp(&p, &q, 1.0, 256).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.points) {
            assert!(dist(x, &e_geodesic(&p, &q, *t).unwrap()) < 1e-6);
        }
    }
}
