//! Linear and affine subspaces of `R^{n+1}` held through orthonormal frames.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dims, Error, Result};
use crate::hadamard::PositiveVector;
use crate::lp::LinearProgram;

/// Default relative tolerance for numerical rank and membership.
pub const DEFAULT_TOL: f64 = 1e-9;

/// LP optima below this are reported as "no strictly positive point".
pub const POSITIVITY_MARGIN: f64 = 1e-10;

/// Outcome of a membership test. `residual` is the Euclidean distance
/// `‖x − Proj(x)‖`, reported whether or not the test passed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub contains: bool,
    pub residual: f64,
}

impl Membership {
    /// Residual divided by `max(1, ‖x‖)`, the quantity compared against `tol`.
    pub fn scaled_residual(&self, norm: f64) -> f64 {
        self.residual / norm.max(1.0)
    }
}

/// A linear subspace `W ⊂ R^{n+1}`.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: DMatrix<f64>,
    original: Vec<Vec<f64>>,
}

impl Subspace {
    /// Builds the span of `vectors`, keeping singular directions above
    /// `tol · σ_max`.
    pub fn from_basis(vectors: &[Vec<f64>], tol: f64) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::InvalidInput("a subspace needs at least one generator".into()))?;
        let n1 = first.len();
        if n1 == 0 {
            return Err(Error::InvalidInput("generators must be non-empty".into()));
        }
        for v in vectors {
            check_dims(n1, v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("generator has a non-finite entry".into()));
            }
        }
        let gen = DMatrix::from_fn(n1, vectors.len(), |i, j| vectors[j][i]);
        let basis = orthonormal_frame(gen, Rank::Relative(tol))?;
        Ok(Self { basis, original: vectors.to_vec() })
    }

    /// `R^{n+1}` itself.
    pub fn full(ambient_dim: usize) -> Self {
        let basis = DMatrix::identity(ambient_dim, ambient_dim);
        let original = (0..ambient_dim)
            .map(|k| (0..ambient_dim).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { basis, original }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal frame as an `(n+1) × d` matrix.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vec<f64>> {
        self.basis.column_iter().map(|c| c.iter().copied().collect()).collect()
    }

    /// The generators this subspace was built from.
    pub fn original_basis(&self) -> &[Vec<f64>] {
        &self.original
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.ambient_dim(), x.len())?;
        let x = DVector::from_column_slice(x);
        let p = &self.basis * (self.basis.transpose() * x);
        Ok(p.iter().copied().collect())
    }

    /// `‖x − Proj(x)‖ ≤ tol · max(1, ‖x‖)`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<Membership> {
        let p = self.project(x)?;
        let residual = x
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Membership { contains: residual <= tol * norm.max(1.0), residual })
    }

    /// Largest membership residual of `other`'s orthonormal frame in `self`.
    pub fn containment_residual(&self, other: &Subspace) -> Result<f64> {
        check_dims(self.ambient_dim(), other.ambient_dim())?;
        let mut worst: f64 = 0.0;
        for v in other.basis_vectors() {
            worst = worst.max(self.contains(&v, 0.0)?.residual);
        }
        Ok(worst)
    }

    /// Residual of mutual containment; zero iff the spans coincide.
    pub fn span_distance(&self, other: &Subspace) -> Result<f64> {
        Ok(self.containment_residual(other)?.max(other.containment_residual(self)?))
    }

    /// `a⁻¹ ∘ W` when `invert`, otherwise `a ∘ W`.
    pub fn scale_by_point(&self, a: &PositiveVector, invert: bool) -> Result<Subspace> {
        check_dims(self.ambient_dim(), a.len())?;
        let factor: Vec<f64> = if invert { a.inverse() } else { a.as_slice().to_vec() };
        let scaled = DMatrix::from_fn(self.ambient_dim(), self.dim(), |i, j| {
            factor[i] * self.basis[(i, j)]
        });
        // a diagonal positive scaling preserves the rank exactly
        let basis = orthonormal_frame(scaled, Rank::Exact(self.dim()))?;
        let original = self
            .original
            .iter()
            .map(|v| v.iter().zip(&factor).map(|(x, f)| x * f).collect())
            .collect();
        Ok(Subspace { basis, original })
    }

    /// A point `x ∈ W` maximising `min_i x_i` subject to `‖x‖∞ ≤ 1`, or
    /// `None` when the optimum is not strictly positive.
    pub fn find_positive_point(&self) -> Result<Option<PositiveVector>> {
        let n1 = self.ambient_dim();
        let d = self.dim();
        // variables: c⁺ (d), c⁻ (d), t
        let nvars = 2 * d + 1;
        let mut objective = vec![0.0; nvars];
        objective[2 * d] = 1.0;
        let mut lp = LinearProgram::new(objective);
        for i in 0..n1 {
            let row: Vec<f64> = (0..d).map(|j| self.basis[(i, j)]).collect();
            let mut lower = vec![0.0; nvars];
            let mut upper = vec![0.0; nvars];
            let mut neg = vec![0.0; nvars];
            for j in 0..d {
                lower[j] = -row[j];
                lower[d + j] = row[j];
                upper[j] = row[j];
                upper[d + j] = -row[j];
                neg[j] = -row[j];
                neg[d + j] = row[j];
            }
            lower[2 * d] = 1.0;
            lp.add_le(lower, 0.0).add_le(upper, 1.0).add_le(neg, 1.0);
        }
        let sol = lp.maximize()?;
        if sol.value < POSITIVITY_MARGIN {
            return Ok(None);
        }
        let c = DVector::from_fn(d, |j, _| sol.x[j] - sol.x[d + j]);
        let x: Vec<f64> = (&self.basis * c).iter().copied().collect();
        if x.iter().any(|v| *v <= 0.0) {
            return Ok(None);
        }
        PositiveVector::new(x).map(Some)
    }
}

/// An affine subspace `base + V`.
#[derive(Debug, Clone)]
pub struct AffineSubspace {
    pub base: Vec<f64>,
    pub direction: Subspace,
}

impl AffineSubspace {
    pub fn new(base: Vec<f64>, direction: Subspace) -> Result<Self> {
        check_dims(direction.ambient_dim(), base.len())?;
        Ok(Self { base, direction })
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<Membership> {
        check_dims(self.base.len(), x.len())?;
        let offset: Vec<f64> = x.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        self.direction.contains(&offset, tol)
    }

    /// Largest residual of the mutual containment of offsets and direction
    /// frames; zero iff the two affine subspaces coincide.
    pub fn distance(&self, other: &AffineSubspace) -> Result<f64> {
        let dir = self.direction.span_distance(&other.direction)?;
        let a = self.contains(&other.base, 0.0)?.residual;
        let b = other.contains(&self.base, 0.0)?.residual;
        Ok(dir.max(a).max(b))
    }
}

pub(crate) enum Rank {
    Relative(f64),
    Exact(usize),
}

pub(crate) fn orthonormal_frame(gen: DMatrix<f64>, rank: Rank) -> Result<DMatrix<f64>> {
    let n1 = gen.nrows();
    let svd = gen.svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::InvalidInput("singular value decomposition failed".into()))?;
    let sigma = svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return Err(Error::InvalidInput("generators span only the zero vector".into()));
    }
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let keep: Vec<usize> = match rank {
        Rank::Relative(tol) => order.into_iter().filter(|&k| sigma[k] > tol * smax).collect(),
        Rank::Exact(r) => order.into_iter().take(r).collect(),
    };
    Ok(DMatrix::from_fn(n1, keep.len(), |i, j| u[(i, keep[j])]))
}
