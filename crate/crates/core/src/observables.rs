//! Operators in the biorthogonal eigenbasis: the pairing-operator matrix,
//! pairing energies along cuts, power-law fits and leading coefficients near
//! a degeneracy.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c_dot, CVector};
use crate::model::{CMatrix, PairingModel};
use crate::spectra::{spectrum_along, spectrum_at, Spectrum};

/// Below this `|b(u,u)|` the raw c-normalization is refused.
pub const RAW_NORM_FLOOR: f64 = 1e-12;

/// `O_ij = û_iᵀ A û_j` over c-normalized eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenbasisOperator {
    pub g: Complex64,
    pub entries: CMatrix,
}

impl EigenbasisOperator {
    pub fn from_vectors(g: Complex64, op: &CMatrix, vectors: &[CVector]) -> Self {
        let n = vectors.len();
        let images: Vec<CVector> = vectors.iter().map(|v| op * v).collect();
        let entries = CMatrix::from_fn(n, n, |i, j| c_dot(&vectors[i], &images[j]));
        Self { g, entries }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.entries.diagonal().iter().copied().collect()
    }

    /// `max |O_ij − O_ji| / max |O_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        (&self.entries - self.entries.transpose())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            / scale
    }
}

/// c-normalized eigenvectors without the coalescence guard, so that
/// divergences near a degeneracy show up in the components.
pub fn raw_vectors(spectrum: &Spectrum) -> Result<Vec<CVector>> {
    (0..spectrum.dim())
        .map(|m| {
            let v = &spectrum.hermitian[m];
            let b = c_dot(v, v) / Complex64::from(v.norm_squared());
            if b.norm() < RAW_NORM_FLOOR {
                return Err(Error::SelfOrthogonal {
                    g: spectrum.g,
                    norm: b.norm(),
                });
            }
            Ok(spectrum.raw_c_normalized(m))
        })
        .collect()
}

/// `‖Σ_m û_m û_mᵀ − I‖_max`.
pub fn completeness_defect(vectors: &[CVector]) -> f64 {
    let n = vectors.first().map_or(0, |v| v.len());
    let mut sum = CMatrix::zeros(n, n);
    for v in vectors {
        sum += v * v.transpose();
    }
    sum -= CMatrix::identity(n, n);
    sum.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Pairing operator `g·P` in the eigenbasis of an already labelled spectrum.
pub fn pairing_in_spectrum(model: &PairingModel, spectrum: &Spectrum) -> Result<EigenbasisOperator> {
    let vectors = raw_vectors(spectrum)?;
    Ok(EigenbasisOperator::from_vectors(
        spectrum.g,
        &model.pairing_operator(spectrum.g),
        &vectors,
    ))
}

/// Pairing operator `g·P` in the canonically labelled eigenbasis at `g`.
pub fn operator_in_eigenbasis(model: &PairingModel, g: Complex64) -> Result<EigenbasisOperator> {
    pairing_in_spectrum(model, &spectrum_at(model, g)?)
}

/// Diagonal pairing energies `O_mm` along a straight cut.
#[derive(Debug, Clone)]
pub struct PairingEnergyCut {
    /// Pair of labels whose energies are also reported summed.
    pub pair: (usize, usize),
    pub samples: Vec<(Complex64, Vec<Complex64>)>,
}

impl PairingEnergyCut {
    pub fn pair_sum(&self) -> Vec<f64> {
        let (a, b) = self.pair;
        self.samples.iter().map(|(_, d)| d[a].re + d[b].re).collect()
    }

    pub fn to_csv(&self) -> String {
        let dim = self.samples.first().map_or(0, |s| s.1.len());
        let mut out = String::from("g_re,g_im");
        for m in 1..=dim {
            let _ = write!(out, ",ReO_{m}{m}");
        }
        let (a, b) = (self.pair.0 + 1, self.pair.1 + 1);
        let _ = writeln!(out, ",ReO_{a}{a}+ReO_{b}{b}");
        for ((g, d), sum) in self.samples.iter().zip(self.pair_sum()) {
            let _ = write!(out, "{:.12e},{:.12e}", g.re, g.im);
            for z in d {
                let _ = write!(out, ",{:.12e}", z.re);
            }
            let _ = writeln!(out, ",{sum:.12e}");
        }
        out
    }
}

pub fn pairing_energy_cut(
    model: &PairingModel,
    start: Complex64,
    end: Complex64,
    n: usize,
    pair: (usize, usize),
) -> Result<PairingEnergyCut> {
    let table = spectrum_along(model, start, end, n, false)?;
    let samples = table
        .samples
        .par_iter()
        .map(|s| pairing_in_spectrum(model, &s.spectrum).map(|o| (s.g, o.diagonal())))
        .collect::<Result<_>>()?;
    Ok(PairingEnergyCut { pair, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: Complex64,
    /// RMS deviation of `log|value|` from the fitted line.
    pub residual: f64,
}

pub const FIT_MIN_SAMPLES: usize = 6;
pub const FIT_MIN_DECADES: f64 = 1.5;
pub const FIT_MAX_RESIDUAL: f64 = 0.02;

/// Least-squares fit of `log|value| = log|A| + p log δ`.
///
/// The complex amplitude is the mean of `value·δ^(−p)`.
pub fn fit_power_law(samples: &[(f64, Complex64)]) -> Result<PowerLawFit> {
    if samples.len() < FIT_MIN_SAMPLES {
        return Err(Error::FitRejected(format!("{} samples, need {FIT_MIN_SAMPLES}", samples.len())));
    }
    if samples.iter().any(|(d, v)| d.is_nan() || *d <= 0.0 || v.norm() == 0.0) {
        return Err(Error::FitRejected("δ must be positive and values nonzero".into()));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (d, _)| (lo.min(*d), hi.max(*d)));
    if (hi / lo).log10() < FIT_MIN_DECADES {
        return Err(Error::FitRejected(format!("span of {:.2} decades", (hi / lo).log10())));
    }
    let a = DMatrix::from_fn(samples.len(), 2, |i, j| if j == 0 { 1.0 } else { samples[i].0.ln() });
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|(_, v)| v.norm().ln()));
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::FitRejected(e.to_string()))?;
    let exponent = sol[1];
    let residual = ((&a * &sol - &y).norm_squared() / samples.len() as f64).sqrt();
    let amplitude = samples.iter().map(|(d, v)| v * d.powf(-exponent)).sum::<Complex64>() / samples.len() as f64;
    if residual > FIT_MAX_RESIDUAL {
        return Err(Error::FitRejected(format!("residual {residual:.3e}")));
    }
    Ok(PowerLawFit {
        exponent,
        amplitude,
        residual,
    })
}

/// `n` log-spaced values from `lo` to `hi`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi / lo).ln() * k as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

/// Value at `s = 0` of the polynomial through `(s_k, f_k)` (Neville).
pub fn extrapolate_to_zero(s: &[f64], f: &[Complex64]) -> Complex64 {
    let mut p = f.to_vec();
    let n = s.len();
    for level in 1..n {
        for i in 0..n - level {
            let j = i + level;
            p[i] = (p[i + 1] * s[i] - p[i] * s[j]) / (s[i] - s[j]);
        }
    }
    p[0]
}

/// One leading coefficient `a = lim δ^p O_ij / factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientSpec {
    pub name: &'static str,
    pub entry: (usize, usize),
    pub factor: Complex64,
}

/// The eight entries reported near the three-level pseudo-DP: the diverging
/// diagonal of state 2, the finite entries among states 1 and 4, and the
/// square-root divergent couplings of the merging pair to states 1 and 4.
pub fn standard_coefficients() -> Vec<CoefficientSpec> {
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    [
        ("a1", (1, 1), one),
        ("a2", (0, 0), i),
        ("a3", (3, 3), i),
        ("a4", (0, 3), i),
        ("a5", (0, 1), one),
        ("a6", (0, 2), one),
        ("a7", (1, 3), one),
        ("a8", (2, 3), one),
    ]
    .into_iter()
    .map(|(name, entry, factor)| CoefficientSpec { name, entry, factor })
    .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub entry: [usize; 2],
    /// Fitted divergence exponent, rounded to a multiple of 1/2 (`O ∝ δ^-power`).
    pub power: f64,
    pub fitted_exponent: f64,
    pub value: Complex64,
    /// Difference between the four-node and three-node extrapolations.
    pub spread: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub g0: Complex64,
    pub deltas: Vec<f64>,
    pub coefficients: Vec<Coefficient>,
    /// `min_± |a5 ∓ conj(a6)|` and `min_± |a7 ∓ conj(a8)|`.
    pub conjugacy: [f64; 2],
}

impl CoefficientTable {
    pub fn get(&self, name: &str) -> Option<Complex64> {
        self.coefficients.iter().find(|c| c.name == name).map(|c| c.value)
    }
}

pub const EXTRAPOLATION_DELTAS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

/// Pairing-operator entries along `g0 + δ`, `δ` real and positive.
pub fn operator_series(model: &PairingModel, g0: Complex64, deltas: &[f64]) -> Result<Vec<EigenbasisOperator>> {
    deltas
        .par_iter()
        .map(|&d| operator_in_eigenbasis(model, g0 + d))
        .collect()
}

fn conjugate_gap(a: Complex64, b: Complex64) -> f64 {
    (a - b.conj()).norm().min((a + b.conj()).norm())
}

/// Leading coefficients of the pairing-operator entries at `g0 + δ`.
///
/// The divergence power of each entry is fitted on a log grid over
/// `[1e-4, 1e-2]`; the entry times `δ^power` is then extrapolated to `δ = 0`
/// as a polynomial in `δ` through the four [`EXTRAPOLATION_DELTAS`]. The
/// spread is the change against the three-node extrapolation without `1e-5`.
pub fn coefficient_extract(model: &PairingModel, g0: Complex64, specs: &[CoefficientSpec]) -> Result<CoefficientTable> {
    let grid = log_spaced(1e-4, 1e-2, 9);
    let fit_ops = operator_series(model, g0, &grid)?;
    let ext_ops = operator_series(model, g0, &EXTRAPOLATION_DELTAS)?;
    let s = EXTRAPOLATION_DELTAS;

    let mut coefficients = Vec::with_capacity(specs.len());
    for spec in specs {
        let (i, j) = spec.entry;
        let samples: Vec<(f64, Complex64)> = grid.iter().zip(&fit_ops).map(|(&d, o)| (d, o.entries[(i, j)])).collect();
        let fit = fit_power_law(&samples)?;
        let power = (-fit.exponent * 2.0).round() / 2.0;
        // O_ij is defined up to the sign of each eigenvector; align every
        // sample with the one at the smallest δ before extrapolating.
        let mut f: Vec<Complex64> = EXTRAPOLATION_DELTAS
            .iter()
            .zip(&ext_ops)
            .map(|(&d, o)| o.entries[(i, j)] * d.powf(power) / spec.factor)
            .collect();
        let anchor = f[f.len() - 1];
        for z in f.iter_mut() {
            if (*z + anchor).norm() < (*z - anchor).norm() {
                *z = -*z;
            }
        }
        let value = extrapolate_to_zero(&s, &f);
        let three_point = extrapolate_to_zero(&s[..3], &f[..3]);
        let spread = (value - three_point).norm();
        coefficients.push(Coefficient {
            name: spec.name.to_string(),
            entry: [i, j],
            power,
            fitted_exponent: fit.exponent,
            value,
            spread,
            converged: spread <= 1e-3 * value.norm().max(1e-12),
        });
    }
    let find = |n: &str| coefficients.iter().find(|c| c.name == n).map(|c| c.value);
    let conjugacy = match (find("a5"), find("a6"), find("a7"), find("a8")) {
        (Some(a5), Some(a6), Some(a7), Some(a8)) => [conjugate_gap(a5, a6), conjugate_gap(a7, a8)],
        _ => [f64::NAN, f64::NAN],
    };
    Ok(CoefficientTable {
        g0,
        deltas: EXTRAPOLATION_DELTAS.to_vec(),
        coefficients,
        conjugacy,
    })
}
