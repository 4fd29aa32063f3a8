use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Kronecker product `A ⊗ B`: block (i,j) equals `a_ij * B`.
pub fn kron_product(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    let mut out = Matrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a.get(i, j);
            if aij == 0.0 {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out.set(i * br + p, j * bc + q, aij * b.get(p, q));
                }
            }
        }
    }
    out
}

/// Kronecker sum `A ⊕ B = A ⊗ I + I ⊗ B` for square `A`, `B`.
///
/// Composes the generators of two independent Markov chains into the
/// generator of their joint chain.
pub fn kron_sum(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::Dimension(format!(
            "kron_sum requires square inputs, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let left = kron_product(a, &Matrix::identity(b.rows()));
    let right = kron_product(&Matrix::identity(a.rows()), b);
    left.add(&right)
}
