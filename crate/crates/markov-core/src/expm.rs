use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::prob::ProbVector;

/// Relative tolerance for the truncated uniformization series.
const SERIES_TOL: f64 = 1e-14;
/// Largest Poisson rate handled in a single uniformization pass; larger
/// horizons are split so the leading weight `exp(-lambda*t)` cannot underflow.
const MAX_RATE_STEP: f64 = 64.0;

/// True when `q` can be uniformized directly: nonnegative off-diagonal rates
/// and row sums at most zero (generator or sub-generator).
fn is_rate_matrix(q: &Matrix) -> bool {
    let n = q.rows();
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let v = q.get(i, j);
            if i != j && v < -1e-12 {
                return false;
            }
            sum += v;
        }
        if sum > 1e-9 {
            return false;
        }
    }
    true
}

fn uniformization_rate(q: &Matrix) -> f64 {
    (0..q.rows()).fold(0.0, |acc, i| acc.max(-q.get(i, i)))
}

/// Matrix exponential `e^{Qt}`.
///
/// Generators and sub-generators go through uniformization, which keeps the
/// result entrywise nonnegative; anything else falls back to scaling and
/// squaring with a degree-13 Padé approximant.
pub fn mat_exp(q: &Matrix, t: f64) -> Result<Matrix> {
    if !q.is_square() {
        return Err(Error::Dimension("mat_exp requires a square matrix".into()));
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(Matrix::identity(q.rows()));
    }
    if is_rate_matrix(q) {
        mat_exp_uniformized(q, t)
    } else {
        mat_exp_pade(q, t)
    }
}

fn mat_exp_uniformized(q: &Matrix, t: f64) -> Result<Matrix> {
    let n = q.rows();
    let lambda = uniformization_rate(q);
    if lambda == 0.0 {
        return Ok(Matrix::identity(n));
    }
    // Split long horizons into steps and chain by the semigroup property.
    let steps = (lambda * t / MAX_RATE_STEP).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let p = Matrix::identity(n).add(&q.scale(1.0 / lambda))?;
    let step = uniformized_series(&p, lambda * dt)?;
    let mut out = step.clone();
    for _ in 1..steps {
        out = out.matmul(&step)?;
    }
    Ok(out)
}

/// Poisson-weighted power series `sum_k pois(k; rate) * P^k`.
fn uniformized_series(p: &Matrix, rate: f64) -> Result<Matrix> {
    let mut weight = (-rate).exp();
    let mut cumulative = weight;
    let mut power = Matrix::identity(p.rows());
    let mut acc = power.scale(weight);
    let mut k = 0usize;
    while 1.0 - cumulative > SERIES_TOL {
        k += 1;
        if k > 200_000 {
            return Err(Error::Invalid(
                "uniformization series failed to converge".into(),
            ));
        }
        power = power.matmul(p)?;
        weight *= rate / k as f64;
        cumulative += weight;
        acc = acc.add(&power.scale(weight))?;
    }
    Ok(acc)
}

/// Scaling-and-squaring Padé (order 13) matrix exponential; cross-check for
/// the uniformization path and fallback for general square matrices.
pub fn mat_exp_pade(q: &Matrix, t: f64) -> Result<Matrix> {
    if !q.is_square() {
        return Err(Error::Dimension("mat_exp requires a square matrix".into()));
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let n = q.rows();
    let a = q.scale(t);
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }
    const THETA_13: f64 = 5.371920351148152;
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(s));

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let ident = Matrix::identity(n);
    let a2 = a.matmul(&a)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a4.matmul(&a2)?;

    let u_inner = a6
        .matmul(
            &a6.scale(B[13])
                .add(&a4.scale(B[11]))?
                .add(&a2.scale(B[9]))?,
        )?
        .add(&a6.scale(B[7]))?
        .add(&a4.scale(B[5]))?
        .add(&a2.scale(B[3]))?
        .add(&ident.scale(B[1]))?;
    let u = a.matmul(&u_inner)?;
    let v = a6
        .matmul(
            &a6.scale(B[12])
                .add(&a4.scale(B[10]))?
                .add(&a2.scale(B[8]))?,
        )?
        .add(&a6.scale(B[6]))?
        .add(&a4.scale(B[4]))?
        .add(&a2.scale(B[2]))?
        .add(&ident.scale(B[0]))?;

    let mut r = v.sub(&u)?.solve(&v.add(&u)?)?;
    for _ in 0..s {
        r = r.matmul(&r)?;
    }
    Ok(r)
}

/// Evolves a (sub-)stochastic row vector under generator `q`:
/// `alpha * e^{Qt}`, computed by vector uniformization.
pub fn transient_law(alpha: &ProbVector, q: &Matrix, t: f64) -> Result<ProbVector> {
    let v = transient_vec(alpha.entries(), q, t)?;
    ProbVector::sub_stochastic(v)
}

/// Same as [`transient_law`] but on a raw slice, without the stochasticity
/// wrapper. Used internally where intermediate vectors are arbitrary.
pub fn transient_vec(alpha: &[f64], q: &Matrix, t: f64) -> Result<Vec<f64>> {
    if !q.is_square() {
        return Err(Error::Dimension(
            "transient_vec requires a square matrix".into(),
        ));
    }
    if alpha.len() != q.rows() {
        return Err(Error::Dimension(format!(
            "vector length {} does not match generator order {}",
            alpha.len(),
            q.rows()
        )));
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(alpha.to_vec());
    }
    if !is_rate_matrix(q) {
        // Rare path: fall back to the dense exponential.
        return mat_exp_pade(q, t)?.vecmat(alpha);
    }
    let lambda = uniformization_rate(q);
    if lambda == 0.0 {
        return Ok(alpha.to_vec());
    }
    let steps = (lambda * t / MAX_RATE_STEP).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let p = Matrix::identity(q.rows()).add(&q.scale(1.0 / lambda))?;
    let rate = lambda * dt;
    let mut current = alpha.to_vec();
    for _ in 0..steps {
        let mut weight = (-rate).exp();
        let mut cumulative = weight;
        let mut term = current.clone();
        let mut acc: Vec<f64> = term.iter().map(|v| v * weight).collect();
        let mut k = 0usize;
        while 1.0 - cumulative > SERIES_TOL {
            k += 1;
            if k > 200_000 {
                return Err(Error::Invalid(
                    "uniformization series failed to converge".into(),
                ));
            }
            term = p.vecmat(&term)?;
            weight *= rate / k as f64;
            cumulative += weight;
            for (a, b) in acc.iter_mut().zip(&term) {
                *a += weight * b;
            }
        }
        current = acc;
    }
    Ok(current)
}

/// Time-integrated transient vector `∫_0^t alpha e^{Qs} ds`.
///
/// The k-th uniformization term integrates to the Poisson tail probability
/// divided by the uniformization rate, so the same power iteration serves.
pub fn transient_occupancy(alpha: &[f64], q: &Matrix, t: f64) -> Result<Vec<f64>> {
    if !q.is_square() || alpha.len() != q.rows() {
        return Err(Error::Dimension(
            "transient_occupancy: dimensions do not agree".into(),
        ));
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(vec![0.0; alpha.len()]);
    }
    if !is_rate_matrix(q) {
        return Err(Error::Invalid(
            "transient_occupancy requires a generator or sub-generator".into(),
        ));
    }
    let lambda = uniformization_rate(q);
    if lambda == 0.0 {
        return Ok(alpha.iter().map(|v| v * t).collect());
    }
    let steps = (lambda * t / MAX_RATE_STEP).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let p = Matrix::identity(q.rows()).add(&q.scale(1.0 / lambda))?;
    let rate = lambda * dt;

    let mut occupancy = vec![0.0; alpha.len()];
    let mut current = alpha.to_vec();
    for _ in 0..steps {
        let mut weight = (-rate).exp();
        let mut cumulative = weight;
        let mut term = current.clone();
        // Coefficient of P^k is the Poisson upper-tail mass / lambda.
        let mut coeff = (1.0 - cumulative) / lambda;
        for (o, v) in occupancy.iter_mut().zip(&term) {
            *o += coeff * v;
        }
        let mut next: Vec<f64> = term.iter().map(|v| v * weight).collect();
        let mut k = 0usize;
        while (1.0 - cumulative) / lambda > SERIES_TOL * dt.max(1.0) {
            k += 1;
            if k > 200_000 {
                return Err(Error::Invalid("occupancy series failed to converge".into()));
            }
            term = p.vecmat(&term)?;
            weight *= rate / k as f64;
            cumulative += weight;
            coeff = (1.0 - cumulative) / lambda;
            for (o, v) in occupancy.iter_mut().zip(&term) {
                *o += coeff * v;
            }
            for (a, b) in next.iter_mut().zip(&term) {
                *a += weight * b;
            }
        }
        current = next;
    }
    Ok(occupancy)
}
