//! Dense complex eigensolver built on nalgebra's complex Schur form.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

pub type CVector = DVector<Complex64>;

const SCHUR_MAX_ITER: usize = 10_000;

/// Bilinear (non-conjugating) product `Σ_k u_k v_k`.
pub fn c_dot(u: &CVector, v: &CVector) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

/// Frobenius norm.
pub fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a general complex matrix, in Schur order.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Option<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Some(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)?;
    let (_, t) = schur.unpack();
    Some(t.diagonal().iter().copied().collect())
}

/// Eigenvalues and unit-norm (Hermitian) right eigenvectors.
///
/// Eigenvectors of the triangular factor are obtained by back substitution;
/// vanishing pivots are replaced by `ε‖T‖`, as LAPACK's `trevc` does, so that
/// defective and nearly defective matrices still return finite vectors.
pub fn eigen(m: &DMatrix<Complex64>) -> Option<(Vec<Complex64>, Vec<CVector>)> {
    let n = m.nrows();
    if n == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)?;
    let (q, t) = schur.unpack();
    let scale = frobenius(&t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;

    let values: Vec<Complex64> = t.diagonal().iter().copied().collect();
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = values[k];
        let mut y = CVector::zeros(n);
        y[k] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in j + 1..=k {
                acc += t[(j, l)] * y[l];
            }
            let mut pivot = t[(j, j)] - lambda;
            if pivot.norm() < small {
                pivot = Complex64::new(small, 0.0);
            }
            y[j] = -acc / pivot;
            // rescale to avoid overflow for nearly defective blocks
            let big = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if big > 1e100 {
                y /= Complex64::new(big, 0.0);
            }
        }
        let mut x = &q * y;
        let norm = x.norm();
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        x /= Complex64::new(norm, 0.0);
        vectors.push(x);
    }
    Some((values, vectors))
}
