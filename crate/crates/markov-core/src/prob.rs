use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for stochasticity checks throughout the workspace.
pub const PROB_TOL: f64 = 1e-10;

/// Probability row vector.
///
/// Constructed either fully stochastic (entries sum to 1 within [`PROB_TOL`])
/// or explicitly sub-stochastic where an operation's contract allows mass to
/// be missing (absorbed, or deferred to an absorbing state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// A stochastic vector: nonnegative entries summing to one.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let v = Self::sub_stochastic(entries)?;
        let s = v.sum();
        if (s - 1.0).abs() > PROB_TOL {
            return Err(Error::Invalid(format!(
                "probability vector sums to {s}, expected 1"
            )));
        }
        Ok(v)
    }

    /// A sub-stochastic vector: nonnegative entries summing to at most one.
    pub fn sub_stochastic(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "probability vector has non-finite entries".into(),
            ));
        }
        if let Some(v) = entries.iter().find(|v| **v < -PROB_TOL) {
            return Err(Error::Invalid(format!("negative probability {v}")));
        }
        let s: f64 = entries.iter().sum();
        if s > 1.0 + PROB_TOL {
            return Err(Error::Invalid(format!(
                "probability vector sums to {s} > 1"
            )));
        }
        Ok(ProbVector(entries))
    }

    /// Point mass on `index` in a vector of length `len`.
    pub fn point_mass(index: usize, len: usize) -> Self {
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        ProbVector(v)
    }

    pub fn uniform(len: usize) -> Self {
        ProbVector(vec![1.0 / len as f64; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Renormalises to total mass one. Errors when the total mass is zero.
    pub fn normalized(&self) -> Result<ProbVector> {
        let s = self.sum();
        if s <= 0.0 {
            return Err(Error::Invalid("cannot normalise zero-mass vector".into()));
        }
        Ok(ProbVector(self.0.iter().map(|v| v / s).collect()))
    }

    /// Kronecker (outer) product of two probability vectors, left factor major.
    pub fn kron(&self, other: &ProbVector) -> ProbVector {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for &a in &self.0 {
            for &b in &other.0 {
                out.push(a * b);
            }
        }
        ProbVector(out)
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_oversized() {
        assert!(ProbVector::new(vec![0.5, -0.1, 0.6]).is_err());
        assert!(ProbVector::new(vec![0.9, 0.2]).is_err());
        assert!(ProbVector::sub_stochastic(vec![0.3, 0.3]).is_ok());
    }

    #[test]
    fn kron_is_stochastic() {
        let a = ProbVector::new(vec![0.25, 0.75]).unwrap();
        let b = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let k = a.kron(&b);
        assert_eq!(k.len(), 4);
        assert!((k.sum() - 1.0).abs() < 1e-12);
        assert!((k.get(1) - 0.125).abs() < 1e-15);
    }
}
