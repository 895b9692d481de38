//! Block classification of subalgebras and construction of canonical models.
//!
//! A doubly autoparallel `W` is, up to a coordinate permutation `Π`,
//! `R^q × R a_1 × … × R a_r`: `q` free coordinates plus `r` rigid blocks, each
//! spanned by a positive sub-vector `a_l` of length `n_l ≥ 2`. Equivalently
//! `V = a⁻¹ ∘ W` is the space of vectors constant on each block.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::hadamard::PositiveVector;
use crate::subspace::{AffineSubspace, Subspace, DEFAULT_TOL};

/// Canonical decomposition of a doubly autoparallel subspace.
///
/// `permutation[k]` is the original coordinate placed at position `k`, so
/// `(Πx)_k = x[permutation[k]]`; `Πa` lists the free coordinates first (in
/// ascending order) followed by the blocks. All indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub q: usize,
    pub r: usize,
    pub block_sizes: Vec<usize>,
    pub permutation: Vec<usize>,
    pub block_vectors: Vec<Vec<f64>>,
    pub free_coordinates: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
}

impl CanonicalForm {
    pub fn ambient_dim(&self) -> usize {
        self.permutation.len()
    }

    pub fn dim(&self) -> usize {
        self.q + self.r
    }

    /// `(q, r, block sizes)`, the data fixed by the classification.
    pub fn shape(&self) -> (usize, usize, Vec<usize>) {
        (self.q, self.r, self.block_sizes.clone())
    }
}

/// Result of [`classify_blocks`].
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Canonical(CanonicalForm),
    /// More coordinate classes than `dim W`: no block structure exists.
    NotDoublyAutoparallel { classes: Vec<Vec<usize>> },
}

impl Classification {
    pub fn is_canonical(&self) -> bool {
        matches!(self, Classification::Canonical(_))
    }

    pub fn class_count(&self) -> usize {
        match self {
            Classification::Canonical(c) => c.q + c.r,
            Classification::NotDoublyAutoparallel { classes } => classes.len(),
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = i;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index becomes the root
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Groups coordinates whose rows in the orthonormal frame of `v` agree
/// within `tol` after scaling by the largest row norm.
pub fn coordinate_classes(v: &Subspace, tol: f64) -> Vec<Vec<usize>> {
    let q = v.basis();
    let n1 = q.nrows();
    let scale = (0..n1)
        .map(|i| q.row(i).norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let rows: DMatrix<f64> = q / scale;
    let mut uf = UnionFind::new(n1);
    for i in 0..n1 {
        for j in i + 1..n1 {
            let diff = (0..rows.ncols())
                .map(|k| (rows[(i, k)] - rows[(j, k)]).abs())
                .fold(0.0f64, f64::max);
            if diff <= tol {
                uf.union(i, j);
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n1];
    for i in 0..n1 {
        let root = uf.find(i);
        if slot[root] == usize::MAX {
            slot[root] = classes.len();
            classes.push(Vec::new());
        }
        classes[slot[root]].push(i);
    }
    classes
}

pub(crate) fn check_base_point(w: &Subspace, a: &PositiveVector) -> Result<()> {
    check_dims(w.ambient_dim(), a.len())?;
    let m = w.contains(a.as_slice(), DEFAULT_TOL)?;
    if !m.contains {
        return Err(Error::Precondition(format!(
            "base point is not in W (membership residual {:e})",
            m.residual
        )));
    }
    Ok(())
}

/// Classifies `W` through the coordinate ties of `V = a⁻¹ ∘ W`.
pub fn classify_blocks(w: &Subspace, a: &PositiveVector, tol: f64) -> Result<Classification> {
    check_base_point(w, a)?;
    let n1 = w.ambient_dim();
    if w.dim() == n1 {
        return Err(Error::Precondition(
            "W is the whole space; the block classification needs dim W < n+1".into(),
        ));
    }
    let v = w.scale_by_point(a, true)?;
    let classes = coordinate_classes(&v, tol);
    if classes.len() != w.dim() {
        return Ok(Classification::NotDoublyAutoparallel { classes });
    }
    let free_coordinates: Vec<usize> =
        classes.iter().filter(|c| c.len() == 1).map(|c| c[0]).collect();
    let mut blocks: Vec<Vec<usize>> = classes.into_iter().filter(|c| c.len() >= 2).collect();
    // members are ascending, so c[0] is the smallest participating index
    blocks.sort_by(|x, y| x.len().cmp(&y.len()).then(x[0].cmp(&y[0])));
    let permutation: Vec<usize> = free_coordinates
        .iter()
        .copied()
        .chain(blocks.iter().flatten().copied())
        .collect();
    let block_vectors = blocks
        .iter()
        .map(|b| b.iter().map(|&i| a.as_slice()[i]).collect())
        .collect();
    Ok(Classification::Canonical(CanonicalForm {
        q: free_coordinates.len(),
        r: blocks.len(),
        block_sizes: blocks.iter().map(Vec::len).collect(),
        permutation,
        block_vectors,
        free_coordinates,
        blocks,
    }))
}

/// Checks that `perm` is a bijection on `0..n`.
pub fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidInput(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidInput(format!("permutation is not a bijection on 0..{n}")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Parameters of the canonical model `W = Π⁻¹ (R^q × R a_1 × … × R a_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalModel {
    pub q: usize,
    pub block_vectors: Vec<PositiveVector>,
    pub permutation: Vec<usize>,
}

impl CanonicalModel {
    pub fn new(
        q: usize,
        block_sizes: &[usize],
        block_vectors: Vec<PositiveVector>,
        permutation: Vec<usize>,
    ) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::InvalidInput("at least one block is required".into()));
        }
        if block_sizes.len() != block_vectors.len() {
            return Err(Error::InvalidInput(format!(
                "{} block sizes but {} block vectors",
                block_sizes.len(),
                block_vectors.len()
            )));
        }
        for (l, (&size, vec)) in block_sizes.iter().zip(&block_vectors).enumerate() {
            if size < 2 {
                return Err(Error::InvalidInput(format!("block {l} has size {size} < 2")));
            }
            if vec.len() != size {
                return Err(Error::InvalidInput(format!(
                    "block {l} has size {size} but its vector has length {}",
                    vec.len()
                )));
            }
        }
        let n1 = q + block_sizes.iter().sum::<usize>();
        validate_permutation(&permutation, n1)?;
        Ok(Self { q, block_vectors, permutation })
    }

    /// Identity permutation.
    pub fn unpermuted(q: usize, block_vectors: Vec<PositiveVector>) -> Result<Self> {
        let sizes: Vec<usize> = block_vectors.iter().map(PositiveVector::len).collect();
        let n1 = q + sizes.iter().sum::<usize>();
        Self::new(q, &sizes, block_vectors, (0..n1).collect())
    }

    /// A random model on `n1` coordinates: random `q`, random block sizes,
    /// block entries uniform in `[0.05, 1]` normalised to sum 1, random `Π`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n1: usize) -> Self {
        assert!(n1 >= 2, "need at least two coordinates for a block");
        let q = rng.random_range(0..=n1 - 2);
        let mut rest = n1 - q;
        let mut sizes = Vec::new();
        while rest > 0 {
            // never leave a remainder of 1
            let size = if rest <= 3 { rest } else { rng.random_range(2..=rest - 2) };
            sizes.push(size);
            rest -= size;
        }
        let block_vectors = sizes
            .iter()
            .map(|&s| {
                let raw: Vec<f64> = (0..s).map(|_| rng.random_range(0.05..1.0)).collect();
                let total: f64 = raw.iter().sum();
                PositiveVector::new(raw.into_iter().map(|v| v / total).collect())
                    .expect("entries are positive")
            })
            .collect();
        let mut permutation: Vec<usize> = (0..n1).collect();
        permutation.shuffle(rng);
        Self::new(q, &sizes, block_vectors, permutation).expect("sizes are consistent")
    }

    pub fn ambient_dim(&self) -> usize {
        self.permutation.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.block_vectors.iter().map(PositiveVector::len).collect()
    }

    pub fn sorted_block_sizes(&self) -> Vec<usize> {
        let mut s = self.block_sizes();
        s.sort_unstable();
        s
    }

    /// Maps a vector of `W₀` (canonical coordinates) back to `W = Π⁻¹ W₀`.
    fn unpermute(&self, w0: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; w0.len()];
        for (k, &orig) in self.permutation.iter().enumerate() {
            w[orig] = w0[k];
        }
        w
    }

    /// Generators of `W₀` in canonical coordinates: `q` unit vectors then one
    /// embedded `a_l` per block; the second element marks the block indicator.
    fn canonical_generators(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let n1 = self.ambient_dim();
        let mut gens = Vec::new();
        for k in 0..self.q {
            let mut e = vec![0.0; n1];
            e[k] = 1.0;
            gens.push((e.clone(), e));
        }
        let mut offset = self.q;
        for a_l in &self.block_vectors {
            let mut g = vec![0.0; n1];
            let mut ind = vec![0.0; n1];
            for (i, v) in a_l.as_slice().iter().enumerate() {
                g[offset + i] = *v;
                ind[offset + i] = 1.0;
            }
            gens.push((g, ind));
            offset += a_l.len();
        }
        gens
    }

    pub fn generators(&self) -> Vec<Vec<f64>> {
        self.canonical_generators().iter().map(|(g, _)| self.unpermute(g)).collect()
    }

    pub fn subspace(&self) -> Result<Subspace> {
        Subspace::from_basis(&self.generators(), DEFAULT_TOL)
    }

    /// `Π⁻¹ (1_q, a_1, …, a_r)`, a positive point of `W`.
    pub fn base_point(&self) -> PositiveVector {
        let mut w0 = vec![1.0; self.q];
        for a_l in &self.block_vectors {
            w0.extend_from_slice(a_l.as_slice());
        }
        PositiveVector::new(self.unpermute(&w0)).expect("entries are positive")
    }

    /// `log a + V` for `a = base_point()`, with `V = Π⁻¹ V₀` assembled from
    /// coordinate and block-indicator vectors rather than from `a⁻¹ ∘ W`.
    pub fn log_affine(&self) -> Result<AffineSubspace> {
        let dirs: Vec<Vec<f64>> =
            self.canonical_generators().iter().map(|(_, ind)| self.unpermute(ind)).collect();
        let v = Subspace::from_basis(&dirs, DEFAULT_TOL)?;
        AffineSubspace::new(self.base_point().ln(), v)
    }
}

/// `W = Π⁻¹ W₀` for the given canonical data.
pub fn generate_canonical(
    q: usize,
    block_sizes: &[usize],
    block_vectors: Vec<PositiveVector>,
    permutation: Vec<usize>,
) -> Result<Subspace> {
    CanonicalModel::new(q, block_sizes, block_vectors, permutation)?.subspace()
}

/// `span{v⁽⁰⁾, e_1, …, e_d}` where `v⁽⁰⁾` vanishes on the first `d`
/// coordinates and is a probability vector on the remaining ones.
pub fn generate_vertex_span(n: usize, d: usize, v0: &[f64]) -> Result<Subspace> {
    vertex_span_generators(n, d, v0).and_then(|g| Subspace::from_basis(&g, DEFAULT_TOL))
}

pub(crate) fn vertex_span_generators(n: usize, d: usize, v0: &[f64]) -> Result<Vec<Vec<f64>>> {
    if d >= n {
        return Err(Error::InvalidInput(format!("vertex span needs d < n, got d = {d}, n = {n}")));
    }
    check_dims(n + 1, v0.len())?;
    if let Some(i) = v0[..d].iter().position(|v| *v != 0.0) {
        return Err(Error::InvalidInput(format!(
            "v0 must vanish on the first {d} coordinates, entry {i} is {}",
            v0[i]
        )));
    }
    if let Some(i) = v0[d..].iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "v0 must be positive beyond coordinate {d}, entry {} is {}",
            d + i,
            v0[d + i]
        )));
    }
    let total: f64 = v0[d..].iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("v0 entries must sum to 1, got {total}")));
    }
    let mut gens = vec![v0.to_vec()];
    for k in 0..d {
        let mut e = vec![0.0; n + 1];
        e[k] = 1.0;
        gens.push(e);
    }
    Ok(gens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::closure_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pv(v: &[f64]) -> PositiveVector {
        PositiveVector::new(v.to_vec()).unwrap()
    }

    fn sub(v: &[&[f64]]) -> Subspace {
        Subspace::from_basis(&v.iter().map(|x| x.to_vec()).collect::<Vec<_>>(), DEFAULT_TOL)
            .unwrap()
    }

    #[test]
    fn running_example() {
        let w = sub(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.3, 0.7]]);
        let a = pv(&[1.0, 2.0, 0.3, 0.7]);
        let Classification::Canonical(c) = classify_blocks(&w, &a, 1e-9).unwrap() else {
            panic!("expected a canonical form");
        };
        assert_eq!((c.q, c.r, c.block_sizes.clone()), (2, 1, vec![2]));
        assert_eq!(c.permutation, vec![0, 1, 2, 3]);
        assert_eq!(c.block_vectors, vec![vec![0.3, 0.7]]);
        assert_eq!(c.free_coordinates, vec![0, 1]);
    }

    #[test]
    fn single_point_model() {
        let a = pv(&[0.1, 0.2, 0.3, 0.4]);
        let w = sub(&[a.as_slice()]);
        let Classification::Canonical(c) = classify_blocks(&w, &a, 1e-9).unwrap() else {
            panic!("expected a canonical form");
        };
        assert_eq!((c.q, c.r, c.block_sizes.clone()), (0, 1, vec![4]));
    }

    #[test]
    fn vandermonde_counterexample() {
        let w = sub(&[&[1.0, 1.0, 1.0], &[1.0, 2.0, 4.0]]);
        let a = pv(&[1.0, 1.0, 1.0]);
        let cls = classify_blocks(&w, &a, 1e-9).unwrap();
        assert_eq!(cls.class_count(), 3);
        assert!(!cls.is_canonical());
        assert!(!closure_check(&w, &a, 1e-9).unwrap().closed);
    }

    #[test]
    fn preconditions() {
        let w = sub(&[&[1.0, 1.0, 1.0]]);
        assert!(matches!(
            classify_blocks(&w, &pv(&[1.0, 2.0, 1.0]), 1e-9),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            classify_blocks(&Subspace::full(3), &pv(&[1.0, 2.0, 1.0]), 1e-9),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn block_ordering_is_size_then_index() {
        // blocks {0,4} (size 2), {1,2,5} (size 3), {3,6} (size 2); no free part
        let gens = vec![
            vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0, 0.0, 0.0, 3.0, 0.0],
            vec![0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 1.0],
        ];
        let w = Subspace::from_basis(&gens, DEFAULT_TOL).unwrap();
        let a = pv(&[1.0, 1.0, 1.0, 5.0, 2.0, 3.0, 1.0]);
        let Classification::Canonical(c) = classify_blocks(&w, &a, 1e-9).unwrap() else {
            panic!("expected a canonical form");
        };
        assert_eq!(c.blocks, vec![vec![0, 4], vec![3, 6], vec![1, 2, 5]]);
        assert_eq!(c.permutation, vec![0, 4, 3, 6, 1, 2, 5]);
        assert_eq!(c.block_sizes, vec![2, 2, 3]);
    }

    #[test]
    fn generate_examples() {
        let w = generate_canonical(2, &[2], vec![pv(&[0.3, 0.7])], vec![0, 1, 2, 3]).unwrap();
        let expected = sub(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.3, 0.7]]);
        assert!(w.span_distance(&expected).unwrap() < 1e-12);

        let a1 = pv(&[0.2, 0.5, 0.3]);
        let w = generate_canonical(0, &[3], vec![a1.clone()], vec![0, 1, 2]).unwrap();
        assert!(w.span_distance(&sub(&[a1.as_slice()])).unwrap() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut perm: Vec<usize> = (0..5).collect();
        perm.shuffle(&mut rng);
        let blocks = vec![pv(&[0.4, 0.6]), pv(&[0.9, 0.1])];
        let model = CanonicalModel::new(1, &[2, 2], blocks, perm).unwrap();
        let w = model.subspace().unwrap();
        let a = w.find_positive_point().unwrap().unwrap();
        let Classification::Canonical(c) = classify_blocks(&w, &a, 1e-9).unwrap() else {
            panic!("expected a canonical form");
        };
        assert_eq!(c.shape(), (1, 2, vec![2, 2]));
    }

    #[test]
    fn generate_errors() {
        let ok = || vec![pv(&[0.3, 0.7])];
        assert!(generate_canonical(2, &[2, 2], ok(), vec![0, 1, 2, 3]).is_err());
        assert!(generate_canonical(2, &[3], ok(), vec![0, 1, 2, 3, 4]).is_err());
        assert!(generate_canonical(2, &[2], ok(), vec![0, 1, 2]).is_err());
        assert!(generate_canonical(2, &[2], ok(), vec![0, 1, 1, 3]).is_err());
        assert!(generate_canonical(3, &[1], vec![pv(&[1.0])], vec![0, 1, 2, 3]).is_err());
        assert!(generate_canonical(3, &[], vec![], vec![0, 1, 2]).is_err());
    }

    #[test]
    fn vertex_span_examples() {
        let w = generate_vertex_span(3, 2, &[0.0, 0.0, 0.3, 0.7]).unwrap();
        let expected = sub(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.3, 0.7]]);
        assert!(w.span_distance(&expected).unwrap() < 1e-12);

        let w = generate_vertex_span(2, 1, &[0.0, 0.5, 0.5]).unwrap();
        let a = w.find_positive_point().unwrap().unwrap();
        let Classification::Canonical(c) = classify_blocks(&w, &a, 1e-9).unwrap() else {
            panic!("expected a canonical form");
        };
        assert_eq!(c.shape(), (1, 1, vec![2]));

        assert!(generate_vertex_span(2, 2, &[0.0, 0.0, 1.0]).is_err());
        assert!(generate_vertex_span(3, 1, &[0.1, 0.3, 0.3, 0.3]).is_err());
        assert!(generate_vertex_span(3, 1, &[0.0, 0.5, 0.5, 0.0]).is_err());
        assert!(generate_vertex_span(3, 1, &[0.0, 0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn random_models_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n1 in 2..10 {
            for _ in 0..50 {
                let m = CanonicalModel::random(&mut rng, n1);
                assert_eq!(m.ambient_dim(), n1);
                assert!(m.block_sizes().iter().all(|&s| s >= 2));
                let w = m.subspace().unwrap();
                assert_eq!(w.dim(), m.q + m.block_vectors.len());
                let a = m.base_point();
                assert!(w.contains(a.as_slice(), 1e-12).unwrap().contains);
            }
        }
    }
}
