//! Complex-symmetric eigenproblems, dual-metric normalization and
//! label-stable continuation of eigenpairs along paths in the coupling plane.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c_dot, CVector};
use crate::model::PairingModel;

/// Below this `|b(u,u)|` (with `‖u‖ = 1`) a vector is treated as self-orthogonal.
pub const COALESCENCE_THRESHOLD: f64 = 1e-6;

/// Maximum number of step bisections during continuation.
pub const MAX_BISECTIONS: u32 = 12;

/// Eigenvalues with c-normalized right eigenvectors at one coupling.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub g: Complex64,
    pub eigenvalues: Vec<Complex64>,
    /// c-normalized (`Σ u_k² = 1`) unless flagged self-orthogonal, then unit norm.
    pub eigenvectors: Vec<CVector>,
    /// Unit-norm vectors as returned by the solver, before c-normalization.
    pub hermitian: Vec<CVector>,
    /// `b(u,u)` of the unit-norm vectors.
    pub self_orthogonality: Vec<Complex64>,
    pub self_orthogonal: Vec<bool>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Relabel so that state `m` of the result is state `perm[m]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Spectrum {
        let pick = |v: &Vec<CVector>| perm.iter().map(|&i| v[i].clone()).collect();
        Spectrum {
            g: self.g,
            eigenvalues: perm.iter().map(|&i| self.eigenvalues[i]).collect(),
            eigenvectors: pick(&self.eigenvectors),
            hermitian: pick(&self.hermitian),
            self_orthogonality: perm.iter().map(|&i| self.self_orthogonality[i]).collect(),
            self_orthogonal: perm.iter().map(|&i| self.self_orthogonal[i]).collect(),
        }
    }

    /// c-normalized vector without the self-orthogonality guard.
    pub fn raw_c_normalized(&self, m: usize) -> CVector {
        let v = &self.hermitian[m];
        let b = c_dot(v, v);
        gauge_fix(v / b.sqrt())
    }

    /// Index of the eigenvalue closest to `e` other than `m` itself.
    pub fn nearest_partner(&self, m: usize) -> Option<usize> {
        (0..self.dim())
            .filter(|&k| k != m)
            .min_by(|&a, &b| {
                let da = (self.eigenvalues[a] - self.eigenvalues[m]).norm();
                let db = (self.eigenvalues[b] - self.eigenvalues[m]).norm();
                da.total_cmp(&db)
            })
    }
}

/// Fix the sign so the largest-magnitude component has argument in (−π/2, π/2].
fn gauge_fix(mut v: CVector) -> CVector {
    let Some(big) = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) else {
        return v;
    };
    if big.re < 0.0 || (big.re == 0.0 && big.im < 0.0) {
        v.neg_mut();
    }
    v
}

/// Unit-norm vector with its largest component made real and positive.
fn phase_fix(v: &CVector) -> CVector {
    let Some(big) = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) else {
        return v.clone();
    };
    if big.norm() == 0.0 {
        return v.clone();
    }
    v * (big.conj() / big.norm())
}

/// Canonical state order: ascending `Im E`, ties by descending `Re E`.
fn canonical_order(values: &[Complex64]) -> Vec<usize> {
    let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let ka = (values[a].im / tol).round() as i64;
        let kb = (values[b].im / tol).round() as i64;
        ka.cmp(&kb).then(values[b].re.total_cmp(&values[a].re))
    });
    idx
}

/// Full eigensystem of a complex-symmetric matrix in canonical order.
pub fn eigendecompose(h: &DMatrix<Complex64>, g: Complex64) -> Result<Spectrum> {
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NoConvergence { g });
    }
    let (values, vectors) = linalg::eigen(h).ok_or(Error::NoConvergence { g })?;
    let order = canonical_order(&values);
    let hermitian: Vec<CVector> = order.iter().map(|&i| phase_fix(&vectors[i])).collect();
    let spectrum = Spectrum {
        g,
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenvectors: hermitian.clone(),
        self_orthogonality: Vec::new(),
        self_orthogonal: Vec::new(),
        hermitian,
    };
    Ok(c_normalize(spectrum, COALESCENCE_THRESHOLD))
}

/// Scale every vector to unit c-norm unless it is self-orthogonal.
pub fn c_normalize(mut spectrum: Spectrum, tau: f64) -> Spectrum {
    let mut eigenvectors = Vec::with_capacity(spectrum.dim());
    let mut norms = Vec::with_capacity(spectrum.dim());
    let mut flags = Vec::with_capacity(spectrum.dim());
    for v in &spectrum.hermitian {
        let unit = v / Complex64::from(v.norm());
        let b = c_dot(&unit, &unit);
        norms.push(b);
        if b.norm() > tau {
            eigenvectors.push(gauge_fix(&unit / b.sqrt()));
            flags.push(false);
        } else {
            eigenvectors.push(phase_fix(&unit));
            flags.push(true);
        }
    }
    spectrum.eigenvectors = eigenvectors;
    spectrum.self_orthogonality = norms;
    spectrum.self_orthogonal = flags;
    spectrum
}

pub fn spectrum_at(model: &PairingModel, g: Complex64) -> Result<Spectrum> {
    eigendecompose(&model.hamiltonian_at(g), g)
}

/// Result of assigning the states of one spectrum to the labels of another.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// Label `m` of the previous spectrum continues as state `permutation[m]`.
    pub permutation: Vec<usize>,
    pub cost: f64,
    pub ambiguous: bool,
}

/// Match `next` to reference eigenvalues, minimising the summed distance.
pub fn match_eigenvalues(reference: &[Complex64], next: &[Complex64]) -> Matching {
    let n = reference.len();
    assert_eq!(n, next.len(), "spectra of different dimension");
    let scale = reference
        .iter()
        .chain(next)
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    let tie = 1e-12 * scale;
    let cost = |perm: &[usize]| -> f64 {
        perm.iter()
            .enumerate()
            .map(|(m, &k)| (reference[m] - next[k]).norm())
            .sum()
    };

    if n > 8 {
        return greedy_match(reference, next);
    }

    let mut candidates: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| candidates.push((cost(p), p.to_vec())));
    let best = candidates
        .iter()
        .map(|(c, _)| *c)
        .fold(f64::INFINITY, f64::min);
    // first in enumeration order among the optimal ones; identity comes first
    let (best_cost, best_perm) = candidates
        .iter()
        .find(|(c, _)| *c <= best + tie)
        .cloned()
        .expect("at least one permutation");
    let equal_tol = 1e-10 * scale;
    let ambiguous = candidates.iter().any(|(c, p)| {
        *c <= best + tie
            && p.iter()
                .zip(&best_perm)
                .any(|(&a, &b)| (next[a] - next[b]).norm() > equal_tol)
    });
    Matching {
        permutation: best_perm,
        cost: best_cost,
        ambiguous,
    }
}

fn greedy_match(reference: &[Complex64], next: &[Complex64]) -> Matching {
    let n = reference.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (m, a) in reference.iter().enumerate() {
        for (k, b) in next.iter().enumerate() {
            pairs.push(((a - b).norm(), m, k));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut cost = 0.0;
    for (d, m, k) in pairs {
        if perm[m] == usize::MAX && !used[k] {
            perm[m] = k;
            used[k] = true;
            cost += d;
        }
    }
    Matching {
        permutation: perm,
        cost,
        ambiguous: false,
    }
}

/// Lexicographic enumeration (identity first).
fn permutations(p: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p[start..=i].rotate_right(1);
        permutations(p, start + 1, visit);
        p[start..=i].rotate_left(1);
    }
}

/// Match two spectra by eigenvalue distance.
pub fn match_states(prev: &Spectrum, next: &Spectrum) -> Matching {
    match_eigenvalues(&prev.eigenvalues, &next.eigenvalues)
}

/// Order-dependent continuation of labelled eigenpairs.
///
/// Matching is done against a linear extrapolation of the last two accepted
/// samples, so that branches which cross linearly keep their labels.
#[derive(Debug, Clone)]
pub struct Continuation<'a> {
    model: &'a PairingModel,
    previous: Option<Spectrum>,
    current: Spectrum,
    /// Number of bisections performed so far.
    pub refinements: usize,
}

impl<'a> Continuation<'a> {
    /// Start at `g` with canonical labels.
    pub fn new(model: &'a PairingModel, g: Complex64) -> Result<Self> {
        Ok(Self::from_spectrum(model, spectrum_at(model, g)?))
    }

    pub fn from_spectrum(model: &'a PairingModel, start: Spectrum) -> Self {
        Self {
            model,
            previous: None,
            current: start,
            refinements: 0,
        }
    }

    pub fn current(&self) -> &Spectrum {
        &self.current
    }

    fn predicted(&self, g: Complex64) -> Vec<Complex64> {
        let cur = &self.current;
        match &self.previous {
            Some(prev) if (cur.g - prev.g).norm() > 0.0 => {
                let t = (g - cur.g) / (cur.g - prev.g);
                cur.eigenvalues
                    .iter()
                    .zip(&prev.eigenvalues)
                    .map(|(c, p)| c + (c - p) * t)
                    .collect()
            }
            _ => cur.eigenvalues.clone(),
        }
    }

    /// Continue the labels to `g`, bisecting the step while matching is ambiguous.
    pub fn advance(&mut self, g: Complex64) -> Result<&Spectrum> {
        self.advance_depth(g, 0)?;
        Ok(&self.current)
    }

    fn advance_depth(&mut self, g: Complex64, depth: u32) -> Result<()> {
        let next = spectrum_at(self.model, g)?;
        let matching = match_eigenvalues(&self.predicted(g), &next.eigenvalues);
        if !matching.ambiguous {
            let relabeled = next.permuted(&matching.permutation);
            self.previous = Some(std::mem::replace(&mut self.current, relabeled));
            return Ok(());
        }
        if depth >= MAX_BISECTIONS {
            return Err(Error::AmbiguousMatching {
                from: self.current.g,
                to: g,
            });
        }
        self.refinements += 1;
        let mid = (self.current.g + g) * 0.5;
        self.advance_depth(mid, depth + 1)?;
        self.advance_depth(g, depth + 1)
    }
}

/// One sample of a cut.
#[derive(Debug, Clone)]
pub struct CutSample {
    pub g: Complex64,
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: Option<Vec<CVector>>,
    pub spectrum: Spectrum,
}

/// Label-stable spectra along a straight segment of the coupling plane.
#[derive(Debug, Clone)]
pub struct CutTable {
    pub start: Complex64,
    pub end: Complex64,
    pub samples: Vec<CutSample>,
    /// Sample indices whose step from the previous one needed bisection.
    pub refined_steps: Vec<usize>,
}

impl CutTable {
    pub fn to_csv(&self) -> String {
        let dim = self.samples.first().map_or(0, |s| s.eigenvalues.len());
        let mut out = String::from("g_re,g_im");
        for m in 1..=dim {
            let _ = write!(out, ",E{m}_re,E{m}_im");
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{:.12e},{:.12e}", s.g.re, s.g.im);
            for e in &s.eigenvalues {
                let _ = write!(out, ",{:.12e},{:.12e}", e.re, e.im);
            }
            out.push('\n');
        }
        out
    }
}

/// Equispaced points `start + t (end − start)`, `t ∈ [0, 1]`.
pub fn segment(start: Complex64, end: Complex64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| start + (end - start) * (k as f64 / (n - 1) as f64))
        .collect()
}

pub fn spectrum_along(
    model: &PairingModel,
    start: Complex64,
    end: Complex64,
    n: usize,
    keep_vectors: bool,
) -> Result<CutTable> {
    if n < 2 {
        return Err(Error::InvalidArgument("a cut needs at least 2 samples".into()));
    }
    let points = segment(start, end, n);
    let mut cont = Continuation::new(model, points[0])?;
    let mut samples = Vec::with_capacity(n);
    let mut refined_steps = Vec::new();
    let record = |s: &Spectrum| CutSample {
        g: s.g,
        eigenvalues: s.eigenvalues.clone(),
        eigenvectors: keep_vectors.then(|| s.eigenvectors.clone()),
        spectrum: s.clone(),
    };
    samples.push(record(cont.current()));
    for (k, &g) in points.iter().enumerate().skip(1) {
        let before = cont.refinements;
        cont.advance(g)?;
        if cont.refinements > before {
            refined_steps.push(k);
        }
        samples.push(record(cont.current()));
    }
    Ok(CutTable {
        start,
        end,
        samples,
        refined_steps,
    })
}

/// Central finite-difference slopes `dE_m/dg` at `g0` along `direction`.
///
/// Labels are the canonical ones at `g0 − h·direction`, continued through `g0`.
pub fn central_slopes(
    model: &PairingModel,
    g0: Complex64,
    h: f64,
    direction: Complex64,
) -> Result<Vec<Complex64>> {
    let step = direction / direction.norm() * h;
    let mut cont = Continuation::new(model, g0 - step)?;
    let below = cont.current().eigenvalues.clone();
    cont.advance(g0)?;
    let above = cont.advance(g0 + step)?.eigenvalues.clone();
    Ok(above
        .iter()
        .zip(&below)
        .map(|(a, b)| (a - b) / (step * 2.0))
        .collect())
}
