//! Fisher metric and α-connection coefficients in a coordinate chart.
//!
//! Everything is evaluated from the defining sums over the sample space
//! `Ω = {1, …, n+1}`, using the chart's first and second derivatives
//! `J_{x,i} = ∂_i p(x)` and `H_{x,ij} = ∂_i ∂_j p(x)`:
//!
//! ```text
//! g_ij        = Σ_x p ∂_i log p ∂_j log p           = Σ_x J_xi J_xj / p_x
//! Γ^(e)_ij,k  = Σ_x p ∂_i∂_j log p ∂_k log p        = Σ_x (H_xij − J_xi J_xj / p_x) J_xk / p_x
//! Γ^(m)_ij,k  = Σ_x ∂_i∂_j p ∂_k log p              = Σ_x H_xij J_xk / p_x
//! Γ^(α)       = (1+α)/2 Γ^(e) + (1−α)/2 Γ^(m)
//! ```

use nalgebra::{DMatrix, DVector};

use crate::analysis::SimplexChart;
use crate::error::{check_dims, Error, Result};
use crate::infogeo::SimplexPoint;

/// Coordinate systems on `Sⁿ` or on a submanifold of it.
#[derive(Debug, Clone)]
pub enum CoordinateChart {
    /// `η_i = p_i`, `i = 1..n`.
    Eta,
    /// `θ^i = log(p_i / p_{n+1})`.
    Theta,
    /// Affine-in-η chart of `W ∩ Sⁿ`.
    Submanifold(SimplexChart),
}

/// First and second derivatives of `p` with respect to chart coordinates.
pub(crate) struct ChartDerivatives {
    /// `(n+1) × d`.
    pub jac: DMatrix<f64>,
    /// One `d × d` matrix per outcome; `None` for charts affine in `p`.
    pub hess: Option<Vec<DMatrix<f64>>>,
}

impl CoordinateChart {
    /// Chart dimension at a point with `len` outcomes.
    pub fn dimension(&self, len: usize) -> usize {
        match self {
            CoordinateChart::Eta | CoordinateChart::Theta => len - 1,
            CoordinateChart::Submanifold(c) => c.dim(),
        }
    }

    pub fn coords(&self, p: &SimplexPoint) -> Vec<f64> {
        match self {
            CoordinateChart::Eta => p.eta(),
            CoordinateChart::Theta => p.theta(),
            CoordinateChart::Submanifold(c) => c.coords(p.probs()),
        }
    }

    pub fn point(&self, xi: &[f64]) -> Result<SimplexPoint> {
        match self {
            CoordinateChart::Eta => SimplexPoint::from_eta(xi),
            CoordinateChart::Theta => SimplexPoint::from_theta(xi),
            CoordinateChart::Submanifold(c) => c.point(xi),
        }
    }

    pub(crate) fn derivatives(&self, p: &SimplexPoint) -> Result<ChartDerivatives> {
        let pr = p.probs();
        let n1 = pr.len();
        let n = n1 - 1;
        match self {
            CoordinateChart::Eta => {
                let jac = DMatrix::from_fn(n1, n, |x, i| {
                    if x == n {
                        -1.0
                    } else if x == i {
                        1.0
                    } else {
                        0.0
                    }
                });
                Ok(ChartDerivatives { jac, hess: None })
            }
            CoordinateChart::Theta => {
                let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                let jac = DMatrix::from_fn(n1, n, |x, i| pr[x] * (delta(x, i) - pr[i]));
                let hess = (0..n1)
                    .map(|x| {
                        DMatrix::from_fn(n, n, |i, j| {
                            pr[x] * (delta(x, j) - pr[j]) * (delta(x, i) - pr[i])
                                - pr[x] * pr[i] * (delta(i, j) - pr[j])
                        })
                    })
                    .collect();
                Ok(ChartDerivatives { jac, hess: Some(hess) })
            }
            CoordinateChart::Submanifold(c) => {
                check_dims(c.ambient_dim(), n1)?;
                Ok(ChartDerivatives { jac: c.jacobian().clone(), hess: None })
            }
        }
    }
}

/// Lower-index connection coefficients `Γ_{ij,k}`, symmetric in `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `Σ_ij Γ_{ij,k} u^i w^j` as a covector.
    pub fn contract(&self, u: &[f64], w: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += self.get(i, j, k) * u[i] * w[j];
                    }
                }
                s
            })
            .collect()
    }
}

/// `g_ij(p)` in the given chart.
pub fn fisher_metric(p: &SimplexPoint, chart: &CoordinateChart) -> Result<DMatrix<f64>> {
    let der = chart.derivatives(p)?;
    Ok(metric_from(p, &der))
}

fn metric_from(p: &SimplexPoint, der: &ChartDerivatives) -> DMatrix<f64> {
    let pr = p.probs();
    let d = der.jac.ncols();
    DMatrix::from_fn(d, d, |i, j| {
        (0..pr.len()).map(|x| der.jac[(x, i)] * der.jac[(x, j)] / pr[x]).sum()
    })
}

/// `Γ^(e)` and `Γ^(m)` from their defining sums.
pub fn exponential_mixture_christoffel(
    p: &SimplexPoint,
    chart: &CoordinateChart,
) -> Result<(Christoffel, Christoffel)> {
    let der = chart.derivatives(p)?;
    let pr = p.probs();
    let d = der.jac.ncols();
    let mut e = Christoffel::zeros(d);
    let mut m = Christoffel::zeros(d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let (mut ge, mut gm) = (0.0, 0.0);
                for (x, &px) in pr.iter().enumerate() {
                    let h = der.hess.as_ref().map_or(0.0, |h| h[x][(i, j)]);
                    let jk = der.jac[(x, k)] / px;
                    ge += (h - der.jac[(x, i)] * der.jac[(x, j)] / px) * jk;
                    gm += h * jk;
                }
                e.set(i, j, k, ge);
                m.set(i, j, k, gm);
            }
        }
    }
    Ok((e, m))
}

/// `Γ^(α)_{ij,k} = (1+α)/2 Γ^(e) + (1−α)/2 Γ^(m)`.
pub fn christoffel(p: &SimplexPoint, alpha: f64, chart: &CoordinateChart) -> Result<Christoffel> {
    let (e, m) = exponential_mixture_christoffel(p, chart)?;
    Ok(blend(&e, &m, alpha))
}

fn blend(e: &Christoffel, m: &Christoffel, alpha: f64) -> Christoffel {
    let (we, wm) = ((1.0 + alpha) / 2.0, (1.0 - alpha) / 2.0);
    Christoffel {
        dim: e.dim,
        data: e.data.iter().zip(&m.data).map(|(a, b)| we * a + wm * b).collect(),
    }
}

/// `Γ^k_{ij} u^i w^j = g^{kl} Γ_{ij,l} u^i w^j`.
pub fn raised_contraction(
    p: &SimplexPoint,
    alpha: f64,
    chart: &CoordinateChart,
    u: &[f64],
    w: &[f64],
) -> Result<Vec<f64>> {
    let g = fisher_metric(p, chart)?;
    let lower = christoffel(p, alpha, chart)?.contract(u, w);
    let sol = g
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("Fisher metric is not positive definite".into()))?
        .solve(&DVector::from_vec(lower));
    Ok(sol.iter().copied().collect())
}

/// Largest violation of `∂_k g_ij = Γ^(α)_{ki,j} + Γ^(−α)_{kj,i}` with the
/// left side taken by central differences of step `h` in chart coordinates.
pub fn duality_residual(
    p: &SimplexPoint,
    chart: &CoordinateChart,
    alpha: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step must be > 0, got {h}")));
    }
    let xi = chart.coords(p);
    let d = xi.len();
    let (e, m) = exponential_mixture_christoffel(p, chart)?;
    let fwd = blend(&e, &m, alpha);
    let dual = blend(&e, &m, -alpha);
    let mut worst: f64 = 0.0;
    for k in 0..d {
        let mut plus = xi.clone();
        let mut minus = xi.clone();
        plus[k] += h;
        minus[k] -= h;
        let gp = fisher_metric(&chart.point(&plus)?, chart)?;
        let gm = fisher_metric(&chart.point(&minus)?, chart)?;
        for i in 0..d {
            for j in 0..d {
                let lhs = (gp[(i, j)] - gm[(i, j)]) / (2.0 * h);
                let rhs = fwd.get(k, i, j) + dual.get(k, j, i);
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::simplex_chart;
    use crate::subspace::{Subspace, DEFAULT_TOL};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, n1: usize) -> SimplexPoint {
        let raw: Vec<f64> = (0..n1).map(|_| rng.random_range(0.1..1.0)).collect();
        SimplexPoint::from_positive(&raw).unwrap()
    }

    /// `1/ξ + 1/(1−ξ)` summed directly over the two outcomes.
    fn binary_fisher(xi: f64) -> f64 {
        let probs = [xi, 1.0 - xi];
        let dlog = [1.0 / xi, -1.0 / (1.0 - xi)];
        probs.iter().zip(dlog).map(|(p, d)| p * d * d).sum()
    }

    #[test]
    fn metric_examples() {
        let g = fisher_metric(&pt(&[0.5, 0.5]), &CoordinateChart::Eta).unwrap();
        assert!((g[(0, 0)] - binary_fisher(0.5)).abs() < 1e-12);
        assert!((g[(0, 0)] - 4.0).abs() < 1e-12);
        let g = fisher_metric(&pt(&[0.25, 0.75]), &CoordinateChart::Eta).unwrap();
        assert!((g[(0, 0)] - binary_fisher(0.25)).abs() < 1e-12);
        assert!((g[(0, 0)] - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn metric_closed_form_and_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let n1 = rng.random_range(2..8);
            let p = random_point(&mut rng, n1);
            let g = fisher_metric(&p, &CoordinateChart::Eta).unwrap();
            let pr = p.probs();
            let last = pr[n1 - 1];
            for i in 0..n1 - 1 {
                for j in 0..n1 - 1 {
                    let want = if i == j { 1.0 / pr[i] } else { 0.0 } + 1.0 / last;
                    assert!((g[(i, j)] - want).abs() < 1e-10 * want);
                }
            }
            let eig = g.clone().symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|v| *v > 0.0));
            let gt = fisher_metric(&p, &CoordinateChart::Theta).unwrap();
            assert!(gt.symmetric_eigen().eigenvalues.iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn affine_charts_have_vanishing_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let p = random_point(&mut rng, 5);
            assert_eq!(christoffel(&p, -1.0, &CoordinateChart::Eta).unwrap().max_abs(), 0.0);
            let g = christoffel(&p, 1.0, &CoordinateChart::Theta).unwrap();
            assert!(g.max_abs() < 1e-14, "{}", g.max_abs());
        }
    }

    #[test]
    fn binary_exponential_coefficient() {
        // Γ^(e)_{11,1} = −1/ξ² + 1/(1−ξ)², which vanishes at ξ = 1/2
        let gamma = christoffel(&pt(&[0.5, 0.5]), 1.0, &CoordinateChart::Eta).unwrap();
        assert!(gamma.get(0, 0, 0).abs() < 1e-12);
        assert!(duality_residual(&pt(&[0.5, 0.5]), &CoordinateChart::Eta, 1.0, 1e-4).unwrap() < 1e-6);
        let xi: f64 = 0.3;
        let gamma = christoffel(&pt(&[xi, 1.0 - xi]), 1.0, &CoordinateChart::Eta).unwrap();
        let want = -1.0 / xi.powi(2) + 1.0 / (1.0 - xi).powi(2);
        assert!((gamma.get(0, 0, 0) - want).abs() < 1e-12);
    }

    #[test]
    fn torsion_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for chart in [CoordinateChart::Eta, CoordinateChart::Theta] {
            for alpha in [-1.0, -0.3, 0.0, 0.7, 1.0] {
                let p = random_point(&mut rng, 5);
                let g = christoffel(&p, alpha, &chart).unwrap();
                for i in 0..4 {
                    for j in 0..4 {
                        for k in 0..4 {
                            assert!((g.get(i, j, k) - g.get(j, i, k)).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn duality_in_all_charts() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = Subspace::from_basis(
            &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.3, 0.7]],
            DEFAULT_TOL,
        )
        .unwrap();
        let sub = CoordinateChart::Submanifold(simplex_chart(&w).unwrap());
        for alpha in [-1.0, 0.0, 0.5, 1.0] {
            let p = random_point(&mut rng, 4);
            let uniform = SimplexPoint::uniform(2);
            for chart in [CoordinateChart::Eta, CoordinateChart::Theta] {
                let r = duality_residual(&uniform, &chart, alpha, 1e-4).unwrap();
                assert!(r < 1e-6, "alpha {alpha} uniform residual {r}");
                let r = duality_residual(&p, &chart, alpha, 1e-6).unwrap();
                assert!(r < 1e-6, "alpha {alpha} residual {r}");
            }
            let q = sub.point(&[0.05, -0.02]).unwrap();
            assert!(duality_residual(&q, &sub, alpha, 1e-6).unwrap() < 1e-6);
        }
    }

    #[test]
    fn duality_is_second_order() {
        let p = pt(&[0.2, 0.3, 0.5]);
        for alpha in [-1.0, 0.0, 1.0] {
            let r1 = duality_residual(&p, &CoordinateChart::Eta, alpha, 1e-3).unwrap();
            let r2 = duality_residual(&p, &CoordinateChart::Eta, alpha, 5e-4).unwrap();
            let ratio = r1 / r2;
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn raised_index_matches_inverse_metric() {
        let p = pt(&[0.1, 0.2, 0.3, 0.4]);
        let u = [0.3, -0.1, 0.2];
        let r = raised_contraction(&p, 0.5, &CoordinateChart::Eta, &u, &u).unwrap();
        let g = fisher_metric(&p, &CoordinateChart::Eta).unwrap();
        let lower = christoffel(&p, 0.5, &CoordinateChart::Eta).unwrap().contract(&u, &u);
        let back = g * DVector::from_vec(r);
        for (a, b) in back.iter().zip(&lower) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
