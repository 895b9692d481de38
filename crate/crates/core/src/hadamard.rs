//! Componentwise (Hadamard) algebra on `R^{n+1}` and its mutations.
//!
//! The Hadamard product `x ∘ y = (x_i y_i)` makes `R^{n+1}` a commutative,
//! associative algebra with identity `e = (1, …, 1)`. Fixing an invertible
//! `a` yields the mutated product `x ∘_{a⁻¹} y = x ∘ a⁻¹ ∘ y`, whose identity
//! element is `a`. A subspace closed under a mutated product is a subalgebra
//! of that mutation, which is the algebraic test used by [`crate::analysis`].

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};

/// Entries below this magnitude are treated as exact zeros when inverting.
pub const ZERO_THRESHOLD: f64 = 1e-300;

/// Ratio `min |a_i| / max |a_i|` below which a base point is flagged as
/// poorly conditioned.
pub const CONDITIONING_WARNING_RATIO: f64 = 1e-8;

/// An element of the open positive orthant `R^{n+1}_+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PositiveVector(Vec<f64>);

impl PositiveVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("positive vector must be non-empty".into()));
        }
        if let Some((i, v)) = entries
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v <= 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "entry {i} of a positive vector is {v}, expected a finite value > 0"
            )));
        }
        Ok(Self(entries))
    }

    /// The all-ones identity `e` of the Hadamard algebra.
    pub fn ones(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Componentwise reciprocal; never fails because every entry is positive.
    pub fn inverse(&self) -> Vec<f64> {
        self.0.iter().map(|v| 1.0 / v).collect()
    }

    /// Componentwise natural logarithm.
    pub fn ln(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.ln()).collect()
    }

    /// `min_i a_i / max_i a_i`.
    pub fn conditioning(&self) -> f64 {
        conditioning_ratio(&self.0)
    }
}

impl TryFrom<Vec<f64>> for PositiveVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PositiveVector> for Vec<f64> {
    fn from(v: PositiveVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for PositiveVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `min_i |x_i| / max_i |x_i|`, or 0 for the zero vector.
pub fn conditioning_ratio(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

/// `x ∘ y`.
pub fn hadamard_product(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_dims(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(a, b)| a * b).collect())
}

/// `x⁻¹ = (1 / x_i)`; fails on the first entry with `|x_i| < 1e-300`.
pub fn hadamard_inverse(x: &[f64]) -> Result<Vec<f64>> {
    x.iter()
        .enumerate()
        .map(|(index, v)| {
            if v.abs() < ZERO_THRESHOLD {
                Err(Error::NotInvertible { index })
            } else {
                Ok(1.0 / v)
            }
        })
        .collect()
}

/// The mutated product `x ∘ a⁻¹ ∘ y`, evaluated as `(x ∘ a⁻¹) ∘ y`.
pub fn mutation_product(x: &[f64], y: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    check_dims(x.len(), a.len())?;
    let a_inv = hadamard_inverse(a)?;
    hadamard_product(&hadamard_product(x, &a_inv)?, y)
}

/// The `k`-th power of `x` under `∘_{a⁻¹}`; `k = 1` returns `x`.
pub fn mutation_power(x: &[f64], k: u32, a: &[f64]) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidInput("mutation power requires k >= 1".into()));
    }
    check_dims(x.len(), a.len())?;
    // validate invertibility even when k == 1
    hadamard_inverse(a)?;
    let mut acc = x.to_vec();
    for _ in 1..k {
        acc = mutation_product(&acc, x, a)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn product_examples() {
        assert_eq!(
            hadamard_product(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap(),
            vec![4.0, 10.0, 18.0]
        );
        let x = [0.3, -2.0, 7.5];
        assert_eq!(hadamard_product(&[1.0; 3], &x).unwrap(), x.to_vec());
        let idem = [1.0, 1.0, 0.0];
        assert_eq!(hadamard_product(&idem, &idem).unwrap(), idem.to_vec());
        assert!(matches!(
            hadamard_product(&[1.0, 2.0], &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(hadamard_inverse(&[1.0, 2.0, 4.0]).unwrap(), vec![1.0, 0.5, 0.25]);
        assert_eq!(hadamard_inverse(&[1.0; 4]).unwrap(), vec![1.0; 4]);
        assert_eq!(
            hadamard_inverse(&[1.0, 0.0, 2.0]),
            Err(Error::NotInvertible { index: 1 })
        );
        assert_eq!(
            hadamard_inverse(&[1.0, 2.0, 1e-301]),
            Err(Error::NotInvertible { index: 2 })
        );
        // tiny but nonzero is the caller's problem, not an error
        assert!(hadamard_inverse(&[1e-200, 1.0]).is_ok());
    }

    #[test]
    fn mutation_examples() {
        let x = [2.0, 4.0];
        let a = [1.0, 2.0];
        assert_eq!(mutation_product(&x, &[3.0, 6.0], &a).unwrap(), vec![6.0, 12.0]);
        assert_eq!(mutation_product(&x, &a, &a).unwrap(), x.to_vec());
        let y = [0.5, -1.5];
        assert_eq!(
            mutation_product(&x, &y, &[1.0, 1.0]).unwrap(),
            hadamard_product(&x, &y).unwrap()
        );
        assert_eq!(
            mutation_product(&x, &y, &[0.0, 1.0]),
            Err(Error::NotInvertible { index: 0 })
        );
    }

    #[test]
    fn power_examples() {
        let x = [2.0, 4.0];
        let a = [1.0, 2.0];
        assert_eq!(mutation_power(&x, 2, &a).unwrap(), vec![4.0, 8.0]);
        assert_eq!(mutation_power(&x, 1, &a).unwrap(), x.to_vec());
        for k in 1..8 {
            assert_eq!(mutation_power(&a, k, &a).unwrap(), a.to_vec());
        }
        assert!(mutation_power(&x, 0, &a).is_err());
        assert_eq!(mutation_power(&x, 1, &[1.0, 0.0]), Err(Error::NotInvertible { index: 1 }));
    }

    #[test]
    fn positive_vector_validation() {
        assert!(PositiveVector::new(vec![1.0, 2.0]).is_ok());
        assert!(PositiveVector::new(vec![1.0, 0.0]).is_err());
        assert!(PositiveVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(PositiveVector::new(vec![]).is_err());
        let a = PositiveVector::new(vec![1e-9, 1.0]).unwrap();
        assert!(a.conditioning() < CONDITIONING_WARNING_RATIO * 1.01);
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 5)
    }

    fn invertible5() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            prop_oneof![0.01f64..10.0, -10.0f64..-0.01],
            5,
        )
    }

    proptest! {
        #[test]
        fn commutative_and_associative(x in vec3(), y in vec3(), z in vec3()) {
            let xy = hadamard_product(&x, &y).unwrap();
            let yx = hadamard_product(&y, &x).unwrap();
            prop_assert_eq!(&xy, &yx);
            let l = hadamard_product(&xy, &z).unwrap();
            let r = hadamard_product(&x, &hadamard_product(&y, &z).unwrap()).unwrap();
            for (a, b) in l.iter().zip(&r) {
                prop_assert!(rel_close(*a, *b, 1e-12));
            }
        }

        #[test]
        fn mutation_matches_definition_bitwise(x in vec3(), y in vec3(), a in invertible5()) {
            let m = mutation_product(&x, &y, &a).unwrap();
            let a_inv = hadamard_inverse(&a).unwrap();
            let direct = hadamard_product(&hadamard_product(&x, &a_inv).unwrap(), &y).unwrap();
            prop_assert_eq!(m, direct);
        }

        #[test]
        fn power_recursion(x in invertible5(), a in invertible5(), k in 1u32..=10) {
            let next = mutation_power(&x, k + 1, &a).unwrap();
            let rec = mutation_product(&mutation_power(&x, k, &a).unwrap(), &x, &a).unwrap();
            prop_assert_eq!(next, rec);
        }

        #[test]
        fn inverse_is_two_sided(x in invertible5()) {
            let e = hadamard_product(&x, &hadamard_inverse(&x).unwrap()).unwrap();
            for v in e {
                prop_assert!((v - 1.0).abs() <= 1e-14);
            }
        }
    }
}
