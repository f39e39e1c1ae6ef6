//! Dense complex polynomials in ascending coefficient order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::linalg;

pub fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

pub fn nth_derivative(coeffs: &[Complex64], order: usize) -> Vec<Complex64> {
    (0..order).fold(coeffs.to_vec(), |c, _| derivative(&c))
}

/// `Σ |c_k| |z|^k`, the natural scale for judging a residual `|p(z)|`.
pub fn magnitude_scale(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    coeffs
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * r + c.norm())
}

/// Drop trailing coefficients below `rel` times the largest one.
pub fn trim(coeffs: &[Complex64], rel: f64) -> Vec<Complex64> {
    let big = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut out = coeffs.to_vec();
    while out.len() > 1 && out.last().is_some_and(|c| c.norm() <= rel * big) {
        out.pop();
    }
    out
}

/// All roots as eigenvalues of the companion matrix.
pub fn roots(coeffs: &[Complex64]) -> Option<Vec<Complex64>> {
    let deg = coeffs.len().checked_sub(1)?;
    if deg == 0 {
        return Some(Vec::new());
    }
    let lead = coeffs[deg];
    if lead.norm() == 0.0 {
        return None;
    }
    let mut companion = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
    }
    linalg::eigenvalues(&companion)
}

/// Taylor coefficients of `f(center + radius z)` from `n` equispaced samples
/// on `|z| = 1`, by discrete Fourier inversion. Exact for polynomials of
/// degree below `n`.
pub fn circle_coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|c| c / n as f64).collect()
}

/// Sample points `center + radius e^{2πi j/n}`.
pub fn circle_points(center: Complex64, radius: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| center + Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
        .collect()
}

/// Coefficients of `p(center + radius z)` rescaled back to powers of `g − center`.
pub fn unscale(coeffs: &[Complex64], radius: f64) -> Vec<Complex64> {
    let mut r = 1.0;
    coeffs
        .iter()
        .map(|c| {
            let out = c / r;
            r *= radius;
            out
        })
        .collect()
}
