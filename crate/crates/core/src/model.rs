//! Seniority-zero pair basis and the operator matrices of the multi-level
//! pairing Hamiltonian `H(g) = T + g (P + gamma Q)`.
//!
//! Conventions: the pair creation operator of a level is `A† = 2 K⁺`, number
//! operators count particles (two per pair) and the anisotropy term is the sum
//! of squared particle numbers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// A single-particle level: energy and particle degeneracy `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub epsilon: f64,
    pub omega: u32,
}

impl LevelSpec {
    pub fn new(epsilon: f64, omega: u32) -> Self {
        Self { epsilon, omega }
    }

    /// Maximum number of pairs the level can hold.
    pub fn capacity(&self) -> u32 {
        self.omega / 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub levels: Vec<LevelSpec>,
    pub n_pairs: u32,
    /// Ratio `g'/g` of the anisotropy coupling to the pairing coupling.
    pub gamma: f64,
}

impl ModelSpec {
    pub fn new(levels: Vec<LevelSpec>, n_pairs: u32, gamma: f64) -> Self {
        Self {
            levels,
            n_pairs,
            gamma,
        }
    }

    /// Three levels `ε = (0, 1, 2)`, `Ω = (2, 6, 2)` with two pairs.
    pub fn three_level(gamma: f64) -> Self {
        Self::new(
            vec![
                LevelSpec::new(0.0, 2),
                LevelSpec::new(1.0, 6),
                LevelSpec::new(2.0, 2),
            ],
            2,
            gamma,
        )
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidModel("no levels".into()));
        }
        for (l, level) in self.levels.iter().enumerate() {
            if level.omega < 2 || level.omega % 2 != 0 {
                return Err(Error::InvalidModel(format!(
                    "level {l}: omega must be a positive even integer, got {}",
                    level.omega
                )));
            }
            if !level.epsilon.is_finite() {
                return Err(Error::InvalidModel(format!("level {l}: epsilon not finite")));
            }
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidModel("gamma not finite".into()));
        }
        let capacity: u32 = self.levels.iter().map(LevelSpec::capacity).sum();
        if self.n_pairs > capacity {
            return Err(Error::InvalidModel(format!(
                "{} pairs exceed the capacity of {capacity} pairs",
                self.n_pairs
            )));
        }
        Ok(())
    }
}

/// Pair occupation `n_l` of every level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    pub occupations: Vec<u32>,
}

/// All seniority-zero states with `Σ n_l = n_pairs`, in lexicographic order.
pub fn enumerate_basis(model: &ModelSpec) -> Result<Vec<BasisState>> {
    model.validate()?;
    let caps: Vec<u32> = model.levels.iter().map(LevelSpec::capacity).collect();
    let mut out = Vec::new();
    let mut current = vec![0u32; caps.len()];
    fill(&caps, 0, model.n_pairs, &mut current, &mut out);
    Ok(out)
}

fn fill(caps: &[u32], level: usize, remaining: u32, current: &mut [u32], out: &mut Vec<BasisState>) {
    if level == caps.len() {
        if remaining == 0 {
            out.push(BasisState {
                occupations: current.to_vec(),
            });
        }
        return;
    }
    let rest: u32 = caps[level + 1..].iter().sum();
    let lo = remaining.saturating_sub(rest);
    let hi = caps[level].min(remaining);
    for n in lo..=hi {
        current[level] = n;
        fill(caps, level + 1, remaining - n, current, out);
    }
    current[level] = 0;
}

/// Real operator matrices in the pair basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrices {
    /// `Σ ε_l N_l`, diagonal.
    pub t: DMatrix<f64>,
    /// `Σ_ij A_i† A_j`, symmetric.
    pub p: DMatrix<f64>,
    /// `Σ_l N_l²`, diagonal.
    pub q: DMatrix<f64>,
}

/// `<n+1| K⁺ |n>` for a level of degeneracy `omega` holding `n` pairs.
fn raise(n: u32, omega: u32) -> f64 {
    let half = f64::from(omega) / 2.0;
    let n = f64::from(n);
    ((n + 1.0) * (half - n)).max(0.0).sqrt()
}

pub fn build_operator_matrices(model: &ModelSpec, basis: &[BasisState]) -> OperatorMatrices {
    let dim = basis.len();
    let mut t = DMatrix::zeros(dim, dim);
    let mut p = DMatrix::zeros(dim, dim);
    let mut q = DMatrix::zeros(dim, dim);
    let index: std::collections::HashMap<&[u32], usize> = basis
        .iter()
        .enumerate()
        .map(|(i, s)| (s.occupations.as_slice(), i))
        .collect();

    for (col, state) in basis.iter().enumerate() {
        let occ = &state.occupations;
        let mut diag_p = 0.0;
        for (l, level) in model.levels.iter().enumerate() {
            let n = f64::from(occ[l]);
            t[(col, col)] += level.epsilon * 2.0 * n;
            q[(col, col)] += (2.0 * n).powi(2);
            diag_p += 4.0 * n * (f64::from(level.omega) / 2.0 - n + 1.0);
        }
        p[(col, col)] = diag_p;

        // A_i† A_j moves one pair from level j to level i.
        for j in 0..occ.len() {
            if occ[j] == 0 {
                continue;
            }
            for i in 0..occ.len() {
                if i == j || occ[i] >= model.levels[i].capacity() {
                    continue;
                }
                let lower = 2.0 * raise(occ[j] - 1, model.levels[j].omega);
                let upper = 2.0 * raise(occ[i], model.levels[i].omega);
                let mut target = occ.clone();
                target[j] -= 1;
                target[i] += 1;
                let row = index[target.as_slice()];
                p[(row, col)] += upper * lower;
            }
        }
    }
    OperatorMatrices { t, p, q }
}

/// A validated model with its basis and operator matrices.
#[derive(Debug, Clone)]
pub struct PairingModel {
    spec: ModelSpec,
    basis: Vec<BasisState>,
    ops: OperatorMatrices,
}

impl PairingModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let basis = enumerate_basis(&spec)?;
        let ops = build_operator_matrices(&spec, &basis);
        Ok(Self { spec, basis, ops })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn gamma(&self) -> f64 {
        self.spec.gamma
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn operators(&self) -> &OperatorMatrices {
        &self.ops
    }

    /// Same basis and operators with a different anisotropy ratio.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            spec: self.spec.with_gamma(gamma),
            basis: self.basis.clone(),
            ops: self.ops.clone(),
        }
    }

    /// Interaction part `P + gamma Q`, the g-derivative of `H`.
    pub fn interaction(&self) -> DMatrix<f64> {
        &self.ops.p + &self.ops.q * self.spec.gamma
    }

    pub fn hamiltonian_at(&self, g: Complex64) -> CMatrix {
        let v = self.interaction();
        CMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            Complex64::from(self.ops.t[(i, j)]) + g * v[(i, j)]
        })
    }

    /// Pairing operator `g Σ A_i† A_j` in the pair basis.
    pub fn pairing_operator(&self, g: Complex64) -> CMatrix {
        self.ops.p.map(|x| g * x)
    }

    /// `Tr H(g) = Tr T + g (Tr P + gamma Tr Q)` from the operator traces.
    pub fn trace_at(&self, g: Complex64) -> Complex64 {
        Complex64::from(self.ops.t.trace()) + g * self.interaction().trace()
    }
}

/// Convenience wrapper building the matrix directly from a spec.
pub fn hamiltonian_at(model: &ModelSpec, g: Complex64) -> Result<CMatrix> {
    Ok(PairingModel::new(model.clone())?.hamiltonian_at(g))
}
