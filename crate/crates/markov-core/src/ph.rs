use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::{transient_occupancy, transient_vec};
use crate::matrix::Matrix;
use crate::prob::{ProbVector, PROB_TOL};

/// Phase-type distribution: time to absorption of a finite Markov chain with
/// transient sub-generator `t_mat` and initial law `alpha` over the transient
/// phases. Mass missing from `alpha` is placed on the absorbing state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhDistribution {
    alpha: ProbVector,
    t_mat: Matrix,
}

impl PhDistribution {
    pub fn new(alpha: ProbVector, t_mat: Matrix) -> Result<Self> {
        if !t_mat.is_square() {
            return Err(Error::Dimension("sub-generator must be square".into()));
        }
        if alpha.len() != t_mat.rows() {
            return Err(Error::Dimension(format!(
                "initial vector length {} does not match order {}",
                alpha.len(),
                t_mat.rows()
            )));
        }
        let n = t_mat.rows();
        for i in 0..n {
            if t_mat.get(i, i) >= 0.0 {
                return Err(Error::Invalid(format!(
                    "sub-generator diagonal entry ({i},{i}) must be negative"
                )));
            }
            let mut sum = 0.0;
            for j in 0..n {
                let v = t_mat.get(i, j);
                if i != j && v < 0.0 {
                    return Err(Error::Invalid(format!(
                        "sub-generator off-diagonal entry ({i},{j}) is negative"
                    )));
                }
                sum += v;
            }
            if sum > PROB_TOL {
                return Err(Error::Invalid(format!(
                    "sub-generator row {i} sums to {sum} > 0"
                )));
            }
        }
        // Absorption from every phase requires a nonsingular sub-generator.
        t_mat
            .solve_ones()
            .map_err(|_| Error::Singular(" sub-generator".into()))?;
        Ok(PhDistribution { alpha, t_mat })
    }

    /// Exponential(rate) as the one-phase special case.
    pub fn exponential(rate: f64) -> Result<Self> {
        if rate <= 0.0 || !rate.is_finite() {
            return Err(Error::Invalid(format!(
                "exponential rate {rate} must be positive"
            )));
        }
        PhDistribution::new(
            ProbVector::new(vec![1.0])?,
            Matrix::from_rows(&[vec![-rate]])?,
        )
    }

    /// Erlang(k, rate): k phases traversed in sequence, each at `rate`.
    pub fn erlang(k: usize, rate: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("erlang needs at least one phase".into()));
        }
        if rate <= 0.0 || !rate.is_finite() {
            return Err(Error::Invalid(format!(
                "erlang rate {rate} must be positive"
            )));
        }
        let mut t = Matrix::zeros(k, k);
        for i in 0..k {
            t.set(i, i, -rate);
            if i + 1 < k {
                t.set(i, i + 1, rate);
            }
        }
        PhDistribution::new(ProbVector::point_mass(0, k), t)
    }

    pub fn order(&self) -> usize {
        self.t_mat.rows()
    }

    pub fn alpha(&self) -> &ProbVector {
        &self.alpha
    }

    pub fn sub_generator(&self) -> &Matrix {
        &self.t_mat
    }

    /// Exit rate vector `T0 = -T e`.
    pub fn exit_rates(&self) -> Vec<f64> {
        self.t_mat.row_sums().iter().map(|s| -s).collect()
    }

    /// Survival function `R(t) = alpha e^{Tt} e`.
    pub fn reliability(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let law = transient_vec(self.alpha.entries(), &self.t_mat, t)?;
        Ok(law.iter().sum::<f64>().clamp(0.0, 1.0))
    }

    /// Lifetime density `f(t) = alpha e^{Tt} T0`.
    pub fn density(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let law = transient_vec(self.alpha.entries(), &self.t_mat, t)?;
        let exits = self.exit_rates();
        Ok(law
            .iter()
            .zip(&exits)
            .map(|(p, r)| p * r)
            .sum::<f64>()
            .max(0.0))
    }

    /// First moment `-alpha T^{-1} e`.
    pub fn mean(&self) -> Result<f64> {
        let sol = self
            .t_mat
            .solve_ones()
            .map_err(|_| Error::Singular(" sub-generator".into()))?;
        Ok(-self.alpha.dot(&sol))
    }

    /// `∫_0^t R(s) ds`, used by downtime-cost identities.
    pub fn integrated_reliability(&self, t: f64) -> Result<f64> {
        let occ = transient_occupancy(self.alpha.entries(), &self.t_mat, t)?;
        Ok(occ.iter().sum())
    }
}

/// Markovian arrival process `(D0, D1)`: `d0` governs phase changes with no
/// arrival, `d1` the transitions that carry an arrival; `d0 + d1` is the
/// generator of the modulating chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapProcess {
    d0: Matrix,
    d1: Matrix,
    initial: ProbVector,
}

impl MapProcess {
    pub fn new(d0: Matrix, d1: Matrix, initial: ProbVector) -> Result<Self> {
        if !d0.is_square() || !d1.is_square() || d0.rows() != d1.rows() {
            return Err(Error::Dimension(
                "MAP matrices must be square and of equal order".into(),
            ));
        }
        if initial.len() != d0.rows() {
            return Err(Error::Dimension(
                "MAP initial vector length must match order".into(),
            ));
        }
        let b = d0.rows();
        for i in 0..b {
            if d0.get(i, i) >= 0.0 {
                return Err(Error::Invalid(format!(
                    "D0 diagonal entry ({i},{i}) must be negative"
                )));
            }
            for j in 0..b {
                if i != j && d0.get(i, j) < 0.0 {
                    return Err(Error::Invalid(
                        "D0 off-diagonal entries must be >= 0".into(),
                    ));
                }
                if d1.get(i, j) < 0.0 {
                    return Err(Error::Invalid("D1 entries must be >= 0".into()));
                }
            }
            let rs: f64 = (0..b).map(|j| d0.get(i, j) + d1.get(i, j)).sum();
            if rs.abs() > PROB_TOL {
                return Err(Error::Invalid(format!(
                    "row {i} of D0+D1 sums to {rs}, expected 0"
                )));
            }
        }
        d0.solve_ones().map_err(|_| Error::Singular(" D0".into()))?;
        Ok(MapProcess { d0, d1, initial })
    }

    /// Poisson arrivals at `rate` as the order-1 special case.
    pub fn poisson(rate: f64) -> Result<Self> {
        if rate <= 0.0 || !rate.is_finite() {
            return Err(Error::Invalid(format!(
                "poisson rate {rate} must be positive"
            )));
        }
        MapProcess::new(
            Matrix::from_rows(&[vec![-rate]])?,
            Matrix::from_rows(&[vec![rate]])?,
            ProbVector::new(vec![1.0])?,
        )
    }

    pub fn order(&self) -> usize {
        self.d0.rows()
    }

    pub fn d0(&self) -> &Matrix {
        &self.d0
    }

    pub fn d1(&self) -> &Matrix {
        &self.d1
    }

    pub fn initial(&self) -> &ProbVector {
        &self.initial
    }
}
