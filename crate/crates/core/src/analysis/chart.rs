use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{check_dims, Error, Result};
use crate::infogeo::{SimplexPoint, INTERIOR_MARGIN};
use crate::lp::LinearProgram;
use crate::subspace::{orthonormal_frame, Rank, Subspace};

const SAMPLE_RETRIES: usize = 100;

/// Affine parametrisation `ξ ↦ p₀ + Dξ` of `M = W ∩ Sⁿ`.
///
/// `p₀` is the normalised maximin point of `W` and the columns of `D` are an
/// orthonormal frame of `{w ∈ W : Σ w_i = 0}`, so the chart is affine in the
/// expectation coordinates and its Jacobian is the constant matrix `D`.
#[derive(Debug, Clone)]
pub struct SimplexChart {
    origin: Vec<f64>,
    directions: DMatrix<f64>,
}

/// Builds the chart of `W ∩ Sⁿ`; fails when the intersection is empty.
pub fn simplex_chart(w: &Subspace) -> Result<SimplexChart> {
    let a = w.find_positive_point()?.ok_or_else(|| {
        Error::Precondition("W does not meet the open simplex".into())
    })?;
    let total: f64 = a.as_slice().iter().sum();
    let origin: Vec<f64> = a.as_slice().iter().map(|v| v / total).collect();
    Ok(SimplexChart { origin, directions: tangent_frame(w)? })
}

/// Orthonormal frame of `{w ∈ W : Σ w_i = 0}`, the tangent space of
/// `W ∩ Sⁿ` when the intersection is nonempty.
pub fn tangent_frame(w: &Subspace) -> Result<DMatrix<f64>> {
    let b = w.basis();
    let d = w.dim();
    // coefficients c with Σ_i (Bc)_i = 0
    let s = b.transpose() * DVector::from_element(w.ambient_dim(), 1.0);
    let s_norm = s.norm();
    if s_norm == 0.0 {
        return Err(Error::Precondition("W lies in the hyperplane Σ x_i = 0".into()));
    }
    if d == 1 {
        return Ok(DMatrix::zeros(w.ambient_dim(), 0));
    }
    let s = &s / s_norm;
    let proj = DMatrix::identity(d, d) - &s * s.transpose();
    orthonormal_frame(b * proj, Rank::Exact(d - 1))
}

impl SimplexChart {
    /// Number of chart parameters, `dim W − 1`.
    pub fn dim(&self) -> usize {
        self.directions.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.origin.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// `∂p/∂ξ`, an `(n+1) × dim` matrix.
    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.directions
    }

    /// `p₀ + Dξ` without the interior check.
    pub fn raw_point(&self, xi: &[f64]) -> Vec<f64> {
        assert_eq!(xi.len(), self.dim(), "chart parameter has the wrong length");
        let step = &self.directions * DVector::from_column_slice(xi);
        self.origin.iter().zip(step.iter()).map(|(o, s)| o + s).collect()
    }

    pub fn point(&self, xi: &[f64]) -> Result<SimplexPoint> {
        check_dims(self.dim(), xi.len())?;
        SimplexPoint::new(self.raw_point(xi))
    }

    /// Whether `ξ` maps strictly inside the simplex.
    pub fn in_domain(&self, xi: &[f64]) -> bool {
        xi.len() == self.dim() && self.raw_point(xi).iter().all(|v| *v >= INTERIOR_MARGIN)
    }

    /// `Dᵀ(p − p₀)`; exact inverse of [`Self::raw_point`] on `M`.
    pub fn coords(&self, p: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = p.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        (self.directions.transpose() * DVector::from_vec(diff)).iter().copied().collect()
    }

    /// Draws a domain point from `bx` scaled by `shrink`. Draws outside the
    /// domain are retried a few times and then pulled radially toward the
    /// origin, so thin domains never exhaust the sampler.
    pub fn sample<R: Rng + ?Sized>(&self, bx: &[(f64, f64)], shrink: f64, rng: &mut R) -> Vec<f64> {
        let mut xi = Vec::new();
        for _ in 0..SAMPLE_RETRIES {
            xi = bx.iter().map(|(lo, hi)| shrink * rng.random_range(*lo..=*hi)).collect();
            if self.in_domain(&xi) {
                return xi;
            }
        }
        let step = &self.directions * DVector::from_column_slice(&xi);
        let reach = self
            .origin
            .iter()
            .zip(step.iter())
            .filter(|(_, s)| **s < 0.0)
            .map(|(o, s)| (o - INTERIOR_MARGIN) / -s)
            .fold(f64::INFINITY, f64::min);
        let scale = rng.random_range(0.0..1.0) * reach.min(1.0);
        xi.iter().map(|v| v * scale).collect()
    }

    /// Bounding box of the parameter domain, one LP per side.
    pub fn parameter_box(&self) -> Result<Vec<(f64, f64)>> {
        let m = self.dim();
        let n1 = self.ambient_dim();
        let solve = |k: usize, sign: f64| -> Result<f64> {
            // ξ = u − v, constraint −Dξ ≤ p₀
            let mut objective = vec![0.0; 2 * m];
            objective[k] = sign;
            objective[m + k] = -sign;
            let mut lp = LinearProgram::new(objective);
            for i in 0..n1 {
                let mut row = vec![0.0; 2 * m];
                for j in 0..m {
                    row[j] = -self.directions[(i, j)];
                    row[m + j] = self.directions[(i, j)];
                }
                lp.add_le(row, self.origin[i]);
            }
            Ok(sign * lp.maximize()?.value)
        };
        (0..m).map(|k| Ok((solve(k, -1.0)?, solve(k, 1.0)?))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::DEFAULT_TOL;
    use rand::SeedableRng;

    fn sub(v: &[&[f64]]) -> Subspace {
        Subspace::from_basis(&v.iter().map(|x| x.to_vec()).collect::<Vec<_>>(), DEFAULT_TOL)
            .unwrap()
    }

    #[test]
    fn single_point_chart() {
        let c = simplex_chart(&sub(&[&[1.0, 1.0, 1.0]])).unwrap();
        assert_eq!(c.dim(), 0);
        let p = c.point(&[]).unwrap();
        for v in p.probs() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn segment_chart() {
        // M = {(s, s, 1 − 2s) : 0 < s < 1/2}
        let c = simplex_chart(&sub(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]])).unwrap();
        assert_eq!(c.dim(), 1);
        let bx = c.parameter_box().unwrap();
        let (lo, hi) = bx[0];
        let ends = [c.raw_point(&[lo]), c.raw_point(&[hi])];
        let mut s_ends: Vec<f64> = ends.iter().map(|p| p[0]).collect();
        s_ends.sort_by(f64::total_cmp);
        assert!(s_ends[0].abs() < 1e-12 && (s_ends[1] - 0.5).abs() < 1e-12);
        for k in 1..20 {
            let xi = lo + (hi - lo) * k as f64 / 20.0;
            let p = c.point(&[xi]).unwrap();
            let s = p.probs()[0];
            assert!((p.probs()[1] - s).abs() < 1e-14);
            assert!((p.probs()[2] - (1.0 - 2.0 * s)).abs() < 1e-14);
            assert!((c.coords(p.probs())[0] - xi).abs() < 1e-14);
        }
        assert!(!c.in_domain(&[hi + 1e-3]));
    }

    #[test]
    fn running_example_chart() {
        let w = sub(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.3, 0.7]]);
        let c = simplex_chart(&w).unwrap();
        assert_eq!(c.dim(), 2);
        let bx = c.parameter_box().unwrap();
        for i in 0..=10 {
            for j in 0..=10 {
                let xi = [
                    bx[0].0 + (bx[0].1 - bx[0].0) * i as f64 / 10.0,
                    bx[1].0 + (bx[1].1 - bx[1].0) * j as f64 / 10.0,
                ];
                if !c.in_domain(&xi) {
                    continue;
                }
                // p = ξ₁ v1 + ξ₂ v2 + (1 − ξ₁ − ξ₂) v0 with ξ₁, ξ₂ > 0, ξ₁ + ξ₂ < 1
                let p = c.raw_point(&xi);
                let (x1, x2) = (p[0], p[1]);
                let rest = 1.0 - x1 - x2;
                assert!(x1 > 0.0 && x2 > 0.0 && rest > 0.0);
                assert!((p[2] - 0.3 * rest).abs() < 1e-14);
                assert!((p[3] - 0.7 * rest).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn empty_intersection_errors() {
        assert!(simplex_chart(&sub(&[&[1.0, -1.0, 0.0], &[0.0, 0.0, 0.0001]])).is_err());
    }

    #[test]
    fn sampling_thin_domain_stays_inside() {
        let rows: Vec<Vec<f64>> =
            (0..12).map(|i| (0..12).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let chart = simplex_chart(&Subspace::from_basis(&rows, DEFAULT_TOL).unwrap()).unwrap();
        let bx = chart.parameter_box().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert!(chart.in_domain(&chart.sample(&bx, 1.0, &mut rng)));
        }
    }
}
