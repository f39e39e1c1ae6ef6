//! Characteristic polynomial, the discriminant `D(g)` of the spectrum and the
//! complete set of its roots in the complex coupling plane.
//!
//! Every entry of `H(g)` is affine in `g`, so `D(g) = Π_{m<m'} (E_m − E_m')²`
//! is a polynomial of degree at most `n(n−1)`. It is reconstructed exactly by
//! Fourier inversion of samples on a circle, its roots are located from the
//! companion matrix, and each root is then refined on a small local circle
//! where the samples are far better conditioned than on the global one.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{CMatrix, PairingModel};
use crate::poly;
use crate::spectra::spectrum_at;

/// Monic characteristic polynomial `det(E·I − H)`, ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    pub coefficients: Vec<Complex64>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, e: Complex64) -> Complex64 {
        poly::eval(&self.coefficients, e)
    }

    /// Expand `Π (E − r_m)`.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Self { coefficients: c }
    }
}

/// Faddeev–LeVerrier recurrence.
pub fn char_poly(h: &CMatrix) -> CharPoly {
    let n = h.nrows();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let identity = CMatrix::identity(n, n);
    let mut m = CMatrix::zeros(n, n);
    for k in 1..=n {
        m = h * &m + &identity * coeffs[n - k + 1];
        let am = h * &m;
        coeffs[n - k] = -am.trace() / k as f64;
    }
    CharPoly { coefficients: coeffs }
}

/// `Π_{m<m'} (E_m − E_m')²`.
pub fn discriminant_from_eigenvalues(values: &[Complex64]) -> Complex64 {
    let mut d = Complex64::new(1.0, 0.0);
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            let diff = a - b;
            d *= diff * diff;
        }
    }
    d
}

/// Sylvester determinant `Res(p, q)` of two polynomials.
pub fn resultant(p: &[Complex64], q: &[Complex64]) -> Complex64 {
    let m = p.len() - 1;
    let n = q.len() - 1;
    let size = m + n;
    if size == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut s = DMatrix::<Complex64>::zeros(size, size);
    for row in 0..n {
        for (k, c) in p.iter().rev().enumerate() {
            s[(row, row + k)] = *c;
        }
    }
    for row in 0..m {
        for (k, c) in q.iter().rev().enumerate() {
            s[(n + row, row + k)] = *c;
        }
    }
    s.determinant()
}

/// Discriminant of a monic polynomial through `Res(p, p′)`.
pub fn discriminant_from_resultant(cp: &CharPoly) -> Complex64 {
    let n = cp.degree();
    if n < 2 {
        return Complex64::new(1.0, 0.0);
    }
    let res = resultant(&cp.coefficients, &poly::derivative(&cp.coefficients));
    let sign = if (n * (n - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    res * sign / cp.coefficients[n]
}

/// `D(g)` by the eigenvalue product.
pub fn discriminant_at(model: &PairingModel, g: Complex64) -> Result<Complex64> {
    let values = linalg::eigenvalues(&model.hamiltonian_at(g)).ok_or(Error::NoConvergence { g })?;
    Ok(discriminant_from_eigenvalues(&values))
}

/// `D(g)` by the resultant of the characteristic polynomial and its derivative.
pub fn discriminant_at_resultant(model: &PairingModel, g: Complex64) -> Complex64 {
    discriminant_from_resultant(&char_poly(&model.hamiltonian_at(g)))
}

/// Maximal degree `n(n−1)` of the discriminant for an `n`-state model.
pub fn max_degree(dim: usize) -> usize {
    dim * dim.saturating_sub(1)
}

/// `D(g)` as an explicit polynomial in `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminantPoly {
    pub coefficients: Vec<Complex64>,
    /// Radius of the interpolation circle.
    pub radius: f64,
    /// Largest relative deviation at held-out samples.
    pub holdout_residual: f64,
}

impl DiscriminantPoly {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, g: Complex64) -> Complex64 {
        poly::eval(&self.coefficients, g)
    }

    pub fn derivative(&self) -> Vec<Complex64> {
        poly::derivative(&self.coefficients)
    }

    pub fn scale_at(&self, g: Complex64) -> f64 {
        poly::magnitude_scale(&self.coefficients, g)
    }

    pub fn leading(&self) -> Complex64 {
        *self.coefficients.last().expect("non-empty")
    }
}

/// Tuning of the root finder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinderOptions {
    /// Interpolation circle radius `r₀`.
    pub radius: f64,
    /// Roots closer than `cluster_factor · r₀` are merged.
    pub cluster_factor: f64,
    /// Held-out relative residual above which interpolation is rejected.
    pub holdout_tolerance: f64,
}

impl Default for FinderOptions {
    fn default() -> Self {
        Self {
            radius: 0.5,
            cluster_factor: 1e-6,
            holdout_tolerance: 1e-6,
        }
    }
}

fn sample_discriminant(model: &PairingModel, points: &[Complex64]) -> Result<Vec<Complex64>> {
    points
        .par_iter()
        .map(|&g| discriminant_at(model, g))
        .collect()
}

fn interpolate(model: &PairingModel, radius: f64) -> Result<DiscriminantPoly> {
    let degree = max_degree(model.dim());
    let n = (2 * (degree + 1)).next_power_of_two().max(16);
    let origin = Complex64::new(0.0, 0.0);
    let samples = sample_discriminant(model, &poly::circle_points(origin, radius, n))?;
    let scaled = poly::circle_coefficients(&samples);
    let big = scaled.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut coefficients = poly::unscale(&scaled[..=degree], radius);
    // coefficients beyond the possible degree are aliasing noise
    while coefficients.len() > 1 {
        let k = coefficients.len() - 1;
        if scaled[k].norm() > 1e-11 * big {
            break;
        }
        coefficients.pop();
    }
    // held-out check on the half-step rotated circle
    let rotation = Complex64::from_polar(1.0, std::f64::consts::PI / n as f64);
    let holdout: Vec<Complex64> = poly::circle_points(origin, radius, 8)
        .into_iter()
        .map(|g| g * rotation)
        .collect();
    let direct = sample_discriminant(model, &holdout)?;
    let holdout_residual = holdout
        .iter()
        .zip(&direct)
        .map(|(&g, d)| (poly::eval(&coefficients, g) - d).norm() / big.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(DiscriminantPoly {
        coefficients,
        radius,
        holdout_residual,
    })
}

/// Reconstruct `D(g)`, retrying with a larger and then a smaller circle.
pub fn discriminant_poly(model: &PairingModel, options: &FinderOptions) -> Result<DiscriminantPoly> {
    let mut worst = 0.0_f64;
    for radius in [options.radius, 2.0 * options.radius, 0.5 * options.radius] {
        let p = interpolate(model, radius)?;
        if p.holdout_residual <= options.holdout_tolerance {
            return Ok(p);
        }
        worst = worst.max(p.holdout_residual);
    }
    Err(Error::IllConditioned { residual: worst })
}

/// One distinct root of `D(g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyRoot {
    pub g0: Complex64,
    pub multiplicity: u32,
    /// `|D(g0)|`, from the Taylor expansion of `D` about `g0`.
    pub residual: f64,
    /// `Σ_k |t_k|` of that expansion on its probe circle, the size of `D`
    /// near the root against which the residual is judged.
    pub scale: f64,
    /// Canonical indices of the two closest eigenvalues at `g0`.
    pub involved_pair: (usize, usize),
    /// Order of vanishing of the local Taylor expansion of `D` at `g0`.
    pub vanishing_order: u32,
    pub converged: bool,
}

impl DegeneracyRoot {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Serialized form `{g_re, g_im, multiplicity, residual, pair}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyRecord {
    pub g_re: f64,
    pub g_im: f64,
    pub multiplicity: u32,
    pub residual: f64,
    pub pair: [usize; 2],
}

impl From<&DegeneracyRoot> for DegeneracyRecord {
    fn from(r: &DegeneracyRoot) -> Self {
        Self {
            g_re: r.g0.re,
            g_im: r.g0.im,
            multiplicity: r.multiplicity,
            residual: r.residual,
            pair: [r.involved_pair.0, r.involved_pair.1],
        }
    }
}

pub fn roots_to_json(roots: &[DegeneracyRoot]) -> serde_json::Value {
    let records: Vec<DegeneracyRecord> = roots.iter().map(DegeneracyRecord::from).collect();
    serde_json::to_value(records).expect("plain records serialize")
}

/// Group points whose mutual distance chain stays below `radius`.
fn cluster(points: &[Complex64], radius: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() < radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn centroid(points: &[Complex64], idx: &[usize]) -> Complex64 {
    idx.iter().map(|&i| points[i]).sum::<Complex64>() / idx.len() as f64
}

/// Newton iteration on `p` from `z`; returns the root and whether it converged.
fn newton(p: &[Complex64], mut z: Complex64) -> (Complex64, bool) {
    let dp = poly::derivative(p);
    for _ in 0..60 {
        let d = poly::eval(&dp, z);
        if d.norm() == 0.0 {
            return (z, false);
        }
        let step = poly::eval(p, z) / d;
        z -= step;
        if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
            return (z, true);
        }
    }
    let ok = poly::eval(p, z).norm() <= 1e-12 * poly::magnitude_scale(p, z);
    (z, ok)
}

/// Local Taylor expansion of `D(center + radius z)`.
fn local_expansion(model: &PairingModel, center: Complex64, radius: f64) -> Result<Vec<Complex64>> {
    let n = (max_degree(model.dim()) + 1).next_power_of_two().max(32);
    let samples = sample_discriminant(model, &poly::circle_points(center, radius, n))?;
    Ok(poly::circle_coefficients(&samples))
}

fn vanishing_order(local: &[Complex64]) -> u32 {
    let big = local.iter().map(|c| c.norm()).fold(0.0, f64::max);
    local
        .iter()
        .take_while(|c| c.norm() <= 1e-7 * big)
        .count() as u32
}

/// Every root of `D(g)` with its multiplicity.
pub fn find_degeneracies(model: &PairingModel, options: &FinderOptions) -> Result<Vec<DegeneracyRoot>> {
    let dpoly = discriminant_poly(model, options)?;
    if dpoly.degree() == 0 {
        return Ok(Vec::new());
    }
    let r0 = dpoly.radius;
    // roots in the scaled variable g/r0 keep the companion matrix balanced
    let scaled: Vec<Complex64> = {
        let mut r = 1.0;
        dpoly
            .coefficients
            .iter()
            .map(|c| {
                let out = c * r;
                r *= r0;
                out
            })
            .collect()
    };
    let global: Vec<Complex64> = poly::roots(&scaled)
        .ok_or(Error::NoConvergence { g: Complex64::new(0.0, 0.0) })?
        .into_iter()
        .map(|z| z * r0)
        .collect();

    let coarse = cluster(&global, 1e-3 * r0);
    let centers: Vec<Complex64> = coarse.iter().map(|g| centroid(&global, g)).collect();
    let merge = options.cluster_factor * r0;

    let mut refined: Vec<(Complex64, bool)> = Vec::new();
    for (gi, group) in coarse.iter().enumerate() {
        let center = centers[gi];
        let others = global
            .iter()
            .enumerate()
            .filter(|(i, _)| !group.contains(i))
            .map(|(_, g)| (g - center).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.02 * r0).min(0.3 * others);
        let local = poly::trim(&local_expansion(model, center, radius)?, 1e-15);
        let mut candidates = poly::roots(&local).unwrap_or_default();
        candidates.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let inside = candidates.iter().filter(|z| z.norm() < 1.0).count();
        if inside != group.len() || candidates.len() < group.len() {
            // local expansion disagrees; keep the global estimates
            refined.extend(group.iter().map(|&i| (global[i], false)));
            continue;
        }
        let picks = &candidates[..group.len()];
        for sub in cluster(picks, merge / radius) {
            let mean = centroid(picks, &sub);
            let order = sub.len();
            let target = poly::nth_derivative(&local, order - 1);
            let (z, ok) = newton(&target, mean);
            let z = if (z - mean).norm() < 0.1 { z } else { mean };
            for _ in 0..order {
                refined.push((center + z * radius, ok));
            }
        }
    }

    let points: Vec<Complex64> = refined.iter().map(|(g, _)| *g).collect();
    let mut out = Vec::new();
    for group in cluster(&points, merge) {
        let g0 = centroid(&points, &group);
        let converged = group.iter().all(|&i| refined[i].1);
        let spectrum = spectrum_at(model, g0)?;
        let mut pair = (0, 1);
        let mut gap = f64::INFINITY;
        for i in 0..spectrum.dim() {
            for j in i + 1..spectrum.dim() {
                let d = (spectrum.eigenvalues[i] - spectrum.eigenvalues[j]).norm();
                if d < gap {
                    gap = d;
                    pair = (i, j);
                }
            }
        }
        let probe = (0.01 * r0).min(
            points
                .iter()
                .filter(|p| (*p - g0).norm() > merge)
                .map(|p| 0.3 * (p - g0).norm())
                .fold(f64::INFINITY, f64::min),
        );
        let local = local_expansion(model, g0, probe)?;
        out.push(DegeneracyRoot {
            g0,
            multiplicity: group.len() as u32,
            residual: local[0].norm(),
            scale: local.iter().map(|t| t.norm()).sum(),
            vanishing_order: vanishing_order(&local),
            involved_pair: pair,
            converged,
        });
    }
    out.sort_by(|a, b| a.g0.im.total_cmp(&b.g0.im).then(a.g0.re.total_cmp(&b.g0.re)));
    Ok(out)
}

/// `|D(g)|` on a rectangular grid, rows of constant `Im g`.
pub fn heatmap(
    model: &PairingModel,
    re: (f64, f64),
    im: (f64, f64),
    nx: usize,
    ny: usize,
) -> Result<Vec<(Complex64, f64)>> {
    let step = |lo: f64, hi: f64, n: usize, k: usize| {
        if n < 2 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let points: Vec<Complex64> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| Complex64::new(step(re.0, re.1, nx, i), step(im.0, im.1, ny, j))))
        .collect();
    points
        .par_iter()
        .map(|&g| discriminant_at(model, g).map(|d| (g, d.norm())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| c(v, 0.0)),
        ))
    }

    #[test]
    fn char_poly_of_diagonal() {
        let cp = char_poly(&diag(&[6.0, 4.0, 4.0, 2.0]));
        let expected = CharPoly::from_roots(&[c(6.0, 0.0), c(4.0, 0.0), c(4.0, 0.0), c(2.0, 0.0)]);
        for (a, b) in cp.coefficients.iter().zip(&expected.coefficients) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cubic_coefficient_is_minus_trace() {
        let model = PairingModel::new(ModelSpec::three_level(-0.5)).unwrap();
        for g in [c(0.1, -0.2), c(-0.3, 0.05)] {
            let cp = char_poly(&model.hamiltonian_at(g));
            assert!((cp.coefficients[3] + (c(16.0, 0.0) + g * 36.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_discriminant() {
        let d = discriminant_from_eigenvalues(&[c(1.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert!((d - c(36.0, 0.0)).norm() < 1e-12);
        let via_res = discriminant_from_resultant(&char_poly(&diag(&[1.0, 2.0, 4.0])));
        assert!((via_res - c(36.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn trivial_degeneracy_at_zero() {
        let model = PairingModel::new(ModelSpec::three_level(-0.5)).unwrap();
        assert_eq!(discriminant_at(&model, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let p = discriminant_poly(&model, &FinderOptions::default()).unwrap();
        let scale = p.coefficients.iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(p.coefficients[0].norm() < 1e-12 * scale);
    }

    #[test]
    fn degree_twelve() {
        let model = PairingModel::new(ModelSpec::three_level(-0.5)).unwrap();
        let p = discriminant_poly(&model, &FinderOptions::default()).unwrap();
        assert_eq!(p.degree(), 12);
        assert!(p.leading().norm() > 1e6);
    }

    #[test]
    fn pseudo_dp_is_a_double_root() {
        let model = PairingModel::new(ModelSpec::three_level(-0.5)).unwrap();
        let roots = find_degeneracies(&model, &FinderOptions::default()).unwrap();
        let total: u32 = roots.iter().map(|r| r.multiplicity).sum();
        assert_eq!(total, 12);
        let target = c(0.0, -1.0 / (4.0 * 2f64.sqrt()));
        let hit = roots.iter().find(|r| (r.g0 - target).norm() < 1e-6).expect("pseudo-DP");
        assert_eq!(hit.multiplicity, 2);
        assert_eq!(hit.vanishing_order, 2);
        assert!((hit.g0 - target).norm() < 1e-8, "{}", (hit.g0 - target).norm());
        assert_eq!(hit.involved_pair, (1, 2));
        let mirror = roots.iter().find(|r| (r.g0 - target.conj()).norm() < 1e-6).expect("mirror");
        assert_eq!(mirror.multiplicity, 2);
    }

    #[test]
    fn ep_at_minus_49_hundredths() {
        let model = PairingModel::new(ModelSpec::three_level(-0.49)).unwrap();
        let roots = find_degeneracies(&model, &FinderOptions::default()).unwrap();
        let hit = roots
            .iter()
            .find(|r| (r.g0 - c(0.0, -0.207687)).norm() < 1e-5)
            .expect("EP near -0.207687i");
        assert_eq!(hit.multiplicity, 1);
        assert_eq!(hit.vanishing_order, 1);
        for r in &roots {
            assert!(r.relative_residual() < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn json_schema() {
        let root = DegeneracyRoot {
            g0: c(0.0, -0.5),
            multiplicity: 2,
            residual: 1e-14,
            scale: 1.0,
            involved_pair: (1, 2),
            vanishing_order: 2,
            converged: true,
        };
        let v = roots_to_json(&[root]);
        assert_eq!(v[0]["pair"], serde_json::json!([1, 2]));
        assert_eq!(v[0]["g_im"], serde_json::json!(-0.5));
        assert_eq!(v[0]["multiplicity"], serde_json::json!(2));
    }
}
