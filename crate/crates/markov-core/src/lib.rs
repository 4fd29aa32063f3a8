//! Foundational numerics for absorbing continuous-time Markov chain models:
//! dense matrices, Kronecker algebra, matrix exponentials by uniformization,
//! and phase-type / Markovian-arrival-process primitives.

mod error;
mod expm;
mod kron;
mod matrix;
mod ph;
mod prob;

pub use error::{Error, Result};
pub use expm::{mat_exp, mat_exp_pade, transient_law, transient_occupancy, transient_vec};
pub use kron::{kron_product, kron_sum};
pub use matrix::Matrix;
pub use ph::{MapProcess, PhDistribution};
pub use prob::{ProbVector, PROB_TOL};
