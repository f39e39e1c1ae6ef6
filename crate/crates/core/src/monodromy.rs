//! Continuation of eigenpairs around closed circular loops in the coupling
//! plane: eigenvalue permutations and accumulated complex phases.
//!
//! The phase of a state is measured against a single-valued gauge: the
//! continued eigenvector divided by its component `j` (the largest one at the
//! start of the loop). The c-normalized vector differs from that gauge by the
//! factor `b^{-1/2}` with `b = Σ_k u_k² / u_j²`, so the accumulated phase is
//! `θ = −(i/2) [log b(φ) − log b(0)]`, with the logarithm continued step by step.
//! Away from degeneracies `b` returns to itself and `Re θ` to zero; around a
//! branch point it winds.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discriminant::DegeneracyRoot;
use crate::error::{Error, Result};
use crate::linalg::{c_dot, CVector};
use crate::model::PairingModel;
use crate::spectra::{match_eigenvalues, Continuation};

/// Default number of samples per loop.
pub const DEFAULT_STEPS: usize = 256;
/// Default loop radius.
pub const DEFAULT_RADIUS: f64 = 0.01;
/// Tolerance on `Re θ ≡ 0 (mod 2π)` for a restored configuration.
pub const PHASE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub center: Complex64,
    pub radius: f64,
    pub steps: usize,
    pub loops: usize,
    #[serde(default)]
    pub clockwise: bool,
}

impl LoopSpec {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Self {
            center,
            radius,
            steps: DEFAULT_STEPS,
            loops: 1,
            clockwise: false,
        }
    }

    pub fn with_loops(mut self, loops: usize) -> Self {
        self.loops = loops;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn reversed(mut self) -> Self {
        self.clockwise = !self.clockwise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius.is_nan() || self.radius <= 0.0 || !self.radius.is_finite() {
            return Err(Error::InvalidArgument("loop radius must be positive".into()));
        }
        if self.steps < 64 {
            return Err(Error::InvalidArgument("a loop needs at least 64 steps".into()));
        }
        if self.loops == 0 {
            return Err(Error::InvalidArgument("at least one loop".into()));
        }
        Ok(())
    }

    pub fn point(&self, phi: f64) -> Complex64 {
        let sign = if self.clockwise { -1.0 } else { 1.0 };
        self.center + Complex64::from_polar(self.radius, sign * phi)
    }

    /// Number of listed degeneracies strictly inside the loop.
    pub fn enclosed(&self, roots: &[DegeneracyRoot]) -> usize {
        roots
            .iter()
            .filter(|r| (r.g0 - self.center).norm() < self.radius)
            .count()
    }
}

/// Refuse loops that enclose more than one degeneracy.
pub fn check_enclosure(spec: &LoopSpec, roots: &[DegeneracyRoot]) -> Result<usize> {
    match spec.enclosed(roots) {
        n @ (0 | 1) => Ok(n),
        found => Err(Error::LoopEnclosure { found }),
    }
}

#[derive(Debug, Clone)]
pub struct LoopSample {
    pub phi: f64,
    pub g: Complex64,
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: Vec<CVector>,
    pub theta: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct LoopTrace {
    pub spec: LoopSpec,
    pub samples: Vec<LoopSample>,
    /// Accumulated permutation after each completed loop: continued state `m`
    /// sits on the starting eigenvalue of state `permutations[k][m]`.
    pub permutations: Vec<Vec<usize>>,
    pub refinements: usize,
}

impl LoopTrace {
    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.eigenvalues.len())
    }

    /// Phases at the end of loop `k` (1-based).
    pub fn theta_after(&self, k: usize) -> &[Complex64] {
        &self.samples[k * self.spec.steps].theta
    }

    pub fn to_csv(&self) -> String {
        let dim = self.dim();
        let mut out = String::from("phi");
        for m in 1..=dim {
            let _ = write!(out, ",theta{m}_re,theta{m}_im,E{m}_re,E{m}_im");
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{:.12e}", s.phi);
            for (t, e) in s.theta.iter().zip(&s.eigenvalues) {
                let _ = write!(out, ",{:.12e},{:.12e},{:.12e},{:.12e}", t.re, t.im, e.re, e.im);
            }
            out.push('\n');
        }
        out
    }
}

/// Gauge-invariant `Σ_k v_k² / v_j²`.
fn component_norm(v: &CVector, j: usize) -> Complex64 {
    c_dot(v, v) / (v[j] * v[j])
}

pub fn trace_loop(model: &PairingModel, spec: &LoopSpec) -> Result<LoopTrace> {
    spec.validate()?;
    let total = spec.steps * spec.loops;
    let mut cont = Continuation::new(model, spec.point(0.0))?;
    let start = cont.current().clone();
    let dim = start.dim();
    let components: Vec<usize> = start
        .hermitian
        .iter()
        .map(|v| {
            (0..v.len())
                .max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm()))
                .unwrap_or(0)
        })
        .collect();
    let norms = |h: &[CVector]| -> Vec<Complex64> {
        h.iter()
            .zip(&components)
            .map(|(v, &j)| component_norm(v, j))
            .collect()
    };

    let mut last_b = norms(&start.hermitian);
    let mut log_b = vec![Complex64::new(0.0, 0.0); dim];
    let mut samples = Vec::with_capacity(total + 1);
    samples.push(LoopSample {
        phi: 0.0,
        g: start.g,
        eigenvalues: start.eigenvalues.clone(),
        eigenvectors: start.eigenvectors.clone(),
        theta: vec![Complex64::new(0.0, 0.0); dim],
    });
    let mut permutations = Vec::with_capacity(spec.loops);

    for k in 1..=total {
        let phi = 2.0 * PI * k as f64 / spec.steps as f64;
        let s = cont.advance(spec.point(phi))?;
        let b = norms(&s.hermitian);
        for m in 0..dim {
            log_b[m] += (b[m] / last_b[m]).ln();
        }
        last_b = b;
        let theta = log_b.iter().map(|l| Complex64::new(0.0, -0.5) * l).collect();
        samples.push(LoopSample {
            phi,
            g: s.g,
            eigenvalues: s.eigenvalues.clone(),
            eigenvectors: s.eigenvectors.clone(),
            theta,
        });
        if k % spec.steps == 0 {
            let matching = match_eigenvalues(&start.eigenvalues, &s.eigenvalues);
            permutations.push(invert(&matching.permutation));
        }
    }
    Ok(LoopTrace {
        spec: *spec,
        samples,
        permutations,
        refinements: cont.refinements,
    })
}

pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// `(a ∘ b)[m] = a[b[m]]`.
pub fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&i| a[i]).collect()
}

pub fn is_identity(perm: &[usize]) -> bool {
    perm.iter().enumerate().all(|(i, &p)| i == p)
}

/// Cycle notation with 1-based labels, fixed points omitted; `()` for identity.
pub fn cycle_notation(perm: &[usize]) -> String {
    let mut seen = vec![false; perm.len()];
    let mut out = String::new();
    for start in 0..perm.len() {
        if seen[start] || perm[start] == start {
            continue;
        }
        let mut cycle = Vec::new();
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            cycle.push((i + 1).to_string());
            i = perm[i];
        }
        let _ = write!(out, "({})", cycle.join(" "));
    }
    if out.is_empty() {
        out.push_str("()");
    }
    out
}

/// Distance of `x` from the nearest multiple of 2π.
pub fn distance_mod_2pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestoreCount {
    /// Loops until the eigenvalue permutation is the identity.
    pub eigenvalue_period: Option<usize>,
    /// Loops until, in addition, every `Re θ` is back to 0 mod 2π.
    pub phase_period: Option<usize>,
}

pub fn restore_count(model: &PairingModel, spec: &LoopSpec, max_loops: usize) -> Result<(RestoreCount, LoopTrace)> {
    let trace = trace_loop(model, &spec.with_loops(max_loops))?;
    let mut count = RestoreCount {
        eigenvalue_period: None,
        phase_period: None,
    };
    for (k, perm) in trace.permutations.iter().enumerate() {
        if !is_identity(perm) {
            continue;
        }
        count.eigenvalue_period.get_or_insert(k + 1);
        let restored = trace
            .theta_after(k + 1)
            .iter()
            .all(|t| distance_mod_2pi(t.re) <= PHASE_TOLERANCE);
        if restored {
            count.phase_period = Some(k + 1);
            break;
        }
    }
    Ok((count, trace))
}

/// JSON summary of a traced loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopSummary {
    pub center: [f64; 2],
    pub radius: f64,
    pub steps: usize,
    pub loops: usize,
    pub clockwise: bool,
    /// Cycle notation of the accumulated permutation after each loop.
    pub permutations: Vec<String>,
    /// `Re θ` of every state after each loop.
    pub phases_re: Vec<Vec<f64>>,
    pub eigenvalue_period: Option<usize>,
    pub phase_period: Option<usize>,
}

impl LoopSummary {
    pub fn new(trace: &LoopTrace, count: Option<RestoreCount>) -> Self {
        let s = &trace.spec;
        Self {
            center: [s.center.re, s.center.im],
            radius: s.radius,
            steps: s.steps,
            loops: s.loops,
            clockwise: s.clockwise,
            permutations: trace.permutations.iter().map(|p| cycle_notation(p)).collect(),
            phases_re: (1..=s.loops)
                .map(|k| trace.theta_after(k).iter().map(|t| t.re).collect())
                .collect(),
            eigenvalue_period: count.and_then(|c| c.eigenvalue_period),
            phase_period: count.and_then(|c| c.phase_period),
        }
    }
}
