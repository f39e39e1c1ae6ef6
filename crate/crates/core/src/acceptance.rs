//! Reference checks for the three-level model (ε = 0,1,2, Ω = 2,6,2, two
//! pairs). Each criterion runs independently and reports pass/fail with the
//! measured numbers.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::atlas::{atlas, classify, sweep_gamma, AtlasOptions, Kind};
use crate::discriminant::{discriminant_at, discriminant_at_resultant, find_degeneracies};
use crate::error::Result;
use crate::linalg::{self, c_dot};
use crate::model::{LevelSpec, ModelSpec, PairingModel};
use crate::monodromy::{restore_count, trace_loop, LoopSpec};
use crate::observables::{
    coefficient_extract, fit_power_law, log_spaced, operator_in_eigenbasis, pairing_energy_cut, raw_vectors,
    standard_coefficients,
};
use crate::spectra::{central_slopes, spectrum_along, spectrum_at, Continuation};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `g = −i/(4√2)`, the double root at `γ = −1/2`.
pub fn pseudo_dp() -> Complex64 {
    Complex64::new(0.0, -1.0 / (4.0 * SQRT2))
}

pub const EP_49: Complex64 = Complex64::new(0.0, -0.207687);

fn model(gamma: f64) -> PairingModel {
    PairingModel::new(ModelSpec::three_level(gamma)).expect("reference model is valid")
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] criterion {:>2} {}: {}", self.id, self.title, self.detail)
    }
}

fn outcome(id: u32, title: &'static str, body: Result<(bool, String)>) -> CriterionResult {
    let (passed, detail) = body.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        title,
        passed,
        detail,
    }
}

/// Sign-insensitive distance, for quantities defined up to an eigenvector sign.
fn signless(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm().min((a + b).norm())
}

/// Largest distance between two multisets after greedy nearest pairing.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut left: Vec<Complex64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = left
            .iter()
            .enumerate()
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("same length");
        worst = worst.max(d);
        left.swap_remove(k);
    }
    worst
}

pub fn criterion_1() -> CriterionResult {
    outcome(1, "pseudo-DP location", (|| {
        let m = model(-0.5);
        let options = AtlasOptions::default();
        let roots = find_degeneracies(&m, &options.finder)?;
        let Some(root) = roots.iter().min_by(|a, b| (a.g0 - pseudo_dp()).norm().total_cmp(&(b.g0 - pseudo_dp()).norm())) else {
            return Ok((false, "no roots".into()));
        };
        let dist = (root.g0 - pseudo_dp()).norm();
        let point = classify(&m, root, options.loop_radius, &options)?;
        let ok = root.multiplicity == 2 && dist <= 1e-8 && point.kind == Kind::PseudoDp;
        Ok((
            ok,
            format!(
                "multiplicity {} at distance {dist:.2e} (tol 1e-8), kind {}",
                root.multiplicity, point.kind
            ),
        ))
    })())
}

pub fn criterion_2() -> CriterionResult {
    outcome(2, "spectrum at the pseudo-DP", (|| {
        let s = spectrum_at(&model(-0.5), pseudo_dp())?;
        let expected = [
            Complex64::new(4.0, -3.79878),
            Complex64::new(4.0, -SQRT2),
            Complex64::new(4.0, -SQRT2),
            Complex64::new(4.0, 0.263243),
        ];
        let dist = multiset_distance(&s.eigenvalues, &expected);
        let pair = s.eigenvalues[0].im + s.eigenvalues[3].im + 2.5 * SQRT2;
        Ok((
            dist <= 1e-5 && pair.abs() <= 1e-5,
            format!("max eigenvalue deviation {dist:.2e}, x1+x4+2.5√2 = {pair:.2e} (tol 1e-5)"),
        ))
    })())
}

pub fn criterion_3() -> CriterionResult {
    outcome(3, "slopes at the pseudo-DP", (|| {
        let slopes = central_slopes(&model(-0.5), pseudo_dp(), 1e-4, Complex64::new(1.0, 0.0))?;
        let expected = [35.9338, 8.0, 0.0, -7.93378];
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for (s, e) in slopes.iter().zip(expected) {
            if e == 0.0 {
                ok &= s.norm() <= 1e-2;
            } else {
                let rel = (s - e).norm() / e.abs();
                worst = worst.max(rel);
                ok &= rel <= 1e-3;
            }
        }
        let sum: Complex64 = slopes.iter().sum();
        let sum_err = (sum - 36.0).norm();
        ok &= sum_err <= 1e-8;
        let re: Vec<String> = slopes.iter().map(|s| format!("{:.5}", s.re)).collect();
        Ok((
            ok,
            format!(
                "dE/dδ = ({}), max rel deviation {worst:.2e}, |Σ − 36| = {sum_err:.2e}",
                re.join(", ")
            ),
        ))
    })())
}

pub fn criterion_4() -> CriterionResult {
    outcome(4, "EP location", (|| {
        let m = model(-0.49);
        let points = atlas(&m, &AtlasOptions::default())?;
        let Some(p) = points.iter().min_by(|a, b| (a.g0() - EP_49).norm().total_cmp(&(b.g0() - EP_49).norm())) else {
            return Ok((false, "no roots".into()));
        };
        let dist = (p.g0() - EP_49).norm();
        Ok((
            p.root.multiplicity == 1 && dist <= 1e-5 && p.kind == Kind::Ep,
            format!(
                "root {:.7}{:+.7}i, multiplicity {}, distance {dist:.2e} (tol 1e-5), kind {}, |b| = {:.1e}",
                p.g0().re,
                p.g0().im,
                p.root.multiplicity,
                p.kind,
                p.coalescence[0].max(p.coalescence[1])
            ),
        ))
    })())
}

pub fn criterion_5() -> CriterionResult {
    outcome(5, "coalescence sweep", (|| {
        let m = model(-0.5);
        let traj = sweep_gamma(&m, (-0.52, -0.48), 9, &AtlasOptions::default())?;
        let Some(event) = traj
            .events
            .iter()
            .min_by(|a, b| (a.g() - pseudo_dp()).norm().total_cmp(&(b.g() - pseudo_dp()).norm()))
        else {
            return Ok((false, "no coalescence event".into()));
        };
        let dg = (event.g() - pseudo_dp()).norm();
        let dgamma = (event.gamma + 0.5).abs();
        // EPs of the merging pair (states 2, 3) nearest the merge point on each γ > −1/2 sample
        let mut worst_re: f64 = 0.0;
        let mut count = 0;
        for s in traj.samples.iter().filter(|s| s.gamma > -0.5 + 1e-12) {
            let mut eps: Vec<&crate::atlas::PointRecord> = s
                .points
                .iter()
                .filter(|p| p.kind == Kind::Ep && p.pair == [1, 2] && p.g_im < 0.0)
                .collect();
            eps.sort_by(|a, b| {
                let da = (Complex64::new(a.g_re, a.g_im) - pseudo_dp()).norm();
                let db = (Complex64::new(b.g_re, b.g_im) - pseudo_dp()).norm();
                da.total_cmp(&db)
            });
            for p in eps.iter().take(2) {
                worst_re = worst_re.max(p.g_re.abs());
                count += 1;
            }
        }
        let ok = dgamma <= 1e-3 && dg <= 1e-4 && count > 0 && count % 2 == 0 && worst_re <= 1e-6;
        Ok((
            ok,
            format!(
                "γ* = {:.6} (|Δ| {dgamma:.1e}), g* = {:.6}{:+.6}i (|Δ| {dg:.1e}), max |Re g| of {count} EPs for γ > −1/2: {worst_re:.1e}",
                event.gamma, event.g_re, event.g_im
            ),
        ))
    })())
}

pub fn criterion_6() -> CriterionResult {
    outcome(6, "monodromy periods", (|| {
        let (ep, _) = restore_count(&model(-0.49), &LoopSpec::new(EP_49, 0.01), 6)?;
        let (pdp, trace) = restore_count(&model(-0.5), &LoopSpec::new(pseudo_dp(), 0.01), 4)?;
        let theta = trace.theta_after(1);
        let merging = [theta[1].re, theta[2].re];
        let regular = [theta[0].re, theta[3].re];
        let phase_ok = merging.iter().all(|t| (t.abs() - PI).abs() <= 0.05) && regular.iter().all(|t| t.abs() <= 0.1);
        let ok = ep.eigenvalue_period == Some(2)
            && ep.phase_period == Some(4)
            && pdp.eigenvalue_period == Some(1)
            && pdp.phase_period == Some(2)
            && phase_ok;
        Ok((
            ok,
            format!(
                "EP periods {:?}/{:?}, pseudo-DP periods {:?}/{:?}, Re θ after one loop ({:.4}, {:.4}, {:.4}, {:.4})",
                ep.eigenvalue_period,
                ep.phase_period,
                pdp.eigenvalue_period,
                pdp.phase_period,
                theta[0].re,
                theta[1].re,
                theta[2].re,
                theta[3].re
            ),
        ))
    })())
}

pub fn criterion_7() -> CriterionResult {
    outcome(7, "operator coefficients", (|| {
        let table = coefficient_extract(&model(-0.5), pseudo_dp(), &standard_coefficients())?;
        let get = |n: &str| table.get(n).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        let a1 = (get("a1") - 1.0 / 16.0).norm();
        let rel = [
            ("a2", Complex64::new(-7.43796, 0.0)),
            ("a3", Complex64::new(0.455281, 0.0)),
            ("a4", Complex64::new(0.603023, 0.0)),
            ("a5", Complex64::new(0.475579, -0.475579)),
        ]
        .map(|(n, e)| signless(get(n), e) / e.norm());
        let worst = rel.iter().copied().fold(0.0, f64::max);
        let ok = a1 <= 1e-4 && worst <= 1e-3 && table.conjugacy.iter().all(|&c| c <= 1e-6);
        Ok((
            ok,
            format!(
                "|a1 − 1/16| = {a1:.1e}, a2..a5 max rel deviation {worst:.1e}, conjugacy gaps ({:.1e}, {:.1e})",
                table.conjugacy[0], table.conjugacy[1]
            ),
        ))
    })())
}

pub fn criterion_8() -> CriterionResult {
    outcome(8, "divergence exponents", (|| {
        let m = model(-0.5);
        let deltas = log_spaced(1e-4, 1e-2, 9);
        let data = deltas
            .par_iter()
            .map(|&d| {
                let g = pseudo_dp() + d;
                let s = spectrum_at(&m, g)?;
                let u2 = raw_vectors(&s)?[1].clone();
                let o22 = operator_in_eigenbasis(&m, g)?.entries[(1, 1)];
                Ok((d, u2, o22))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut exps = Vec::new();
        let mut zero = Vec::new();
        for k in 0..m.dim() {
            if data.iter().all(|(_, u, _)| u[k].norm() < 1e-8 * u.norm()) {
                zero.push(k + 1);
                continue;
            }
            let samples: Vec<(f64, Complex64)> = data.iter().map(|(d, u, _)| (*d, u[k])).collect();
            exps.push(fit_power_law(&samples)?.exponent);
        }
        let o: Vec<(f64, Complex64)> = data.iter().map(|(d, _, o)| (*d, *o)).collect();
        let o_exp = fit_power_law(&o)?.exponent;
        let ok = !exps.is_empty() && exps.iter().all(|e| (e + 0.5).abs() <= 0.03) && (o_exp + 1.0).abs() <= 0.03;
        let shown: Vec<String> = exps.iter().map(|e| format!("{e:.4}")).collect();
        Ok((
            ok,
            format!(
                "û2 nonzero components ({}), identically zero components {zero:?}, O22 {o_exp:.4}",
                shown.join(", ")
            ),
        ))
    })())
}

pub fn criterion_9() -> CriterionResult {
    outcome(9, "2+3 pairing-energy cancellation", (|| {
        let y = pseudo_dp().im;
        let cut = pairing_energy_cut(
            &model(-0.5),
            Complex64::new(-0.05, y),
            Complex64::new(0.05, y),
            4000,
            (1, 2),
        )?;
        let sum = cut.pair_sum();
        let edge = sum[0].abs().min(sum[sum.len() - 1].abs());
        let largest = sum.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let bounded = largest <= 10.0 * edge;
        let positive = cut
            .samples
            .iter()
            .zip(&sum)
            .filter(|((g, _), _)| g.re > 0.0)
            .all(|(_, &x)| x > 0.0);
        let near: Vec<&(Complex64, Vec<Complex64>)> = cut.samples.iter().filter(|(g, _)| g.re.abs() <= 1e-4).collect();
        let diverging = !near.is_empty()
            && near
                .iter()
                .any(|(_, d)| d[1].re.abs() > 1e3 && d[2].re.abs() > 1e3 && d[1].re * d[2].re < 0.0);
        let peak = near.iter().map(|(_, d)| d[1].re.abs().min(d[2].re.abs())).fold(0.0, f64::max);
        Ok((
            bounded && positive && diverging,
            format!(
                "max |ReO22+ReO33| = {largest:.3} vs edge value {edge:.3} (×10 bound), positive for Re g > 0: {positive}, \
                 opposite-sign entries near Re g = 0 reach {peak:.0}; the sum is odd in Re g"
            ),
        ))
    })())
}

pub fn criterion_10() -> CriterionResult {
    outcome(10, "property suite", (|| {
        let m = model(-0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let gs: Vec<Complex64> = (0..100)
            .map(|_| Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect();
        let mut failures = Vec::new();

        let resultant = gs
            .iter()
            .map(|&g| {
                let a = discriminant_at(&m, g)?;
                let b = discriminant_at_resultant(&m, g);
                Ok((a - b).norm() / a.norm().max(b.norm()))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        if resultant > 1e-8 {
            failures.push(format!("resultant vs product {resultant:.1e}"));
        }

        let reversed = PairingModel::new(ModelSpec::new(
            vec![LevelSpec::new(2.0, 2), LevelSpec::new(1.0, 6), LevelSpec::new(0.0, 2)],
            2,
            -0.5,
        ))?;
        let mut trace_err: f64 = 0.0;
        let mut reflect_err: f64 = 0.0;
        let mut resid: f64 = 0.0;
        let mut biorth: f64 = 0.0;
        for &g in gs.iter().take(20) {
            let h = m.hamiltonian_at(g);
            let s = spectrum_at(&m, g)?;
            let sum: Complex64 = s.eigenvalues.iter().sum();
            trace_err = trace_err.max((sum - h.trace()).norm()).max((h.trace() - (16.0 + 36.0 * g)).norm());
            let mirrored: Vec<Complex64> = s.eigenvalues.iter().map(|e| 8.0 - e).collect();
            let r = spectrum_at(&reversed, -g)?;
            reflect_err = reflect_err.max(multiset_distance(&r.eigenvalues, &mirrored));
            let norm = linalg::frobenius(&h);
            for (i, (e, u)) in s.eigenvalues.iter().zip(&s.hermitian).enumerate() {
                resid = resid.max((&h * u - u * *e).norm() / norm);
                for j in i + 1..s.dim() {
                    if !s.self_orthogonal[i] && !s.self_orthogonal[j] {
                        biorth = biorth.max(c_dot(&s.eigenvectors[i], &s.eigenvectors[j]).norm());
                    }
                }
            }
        }
        if trace_err > 1e-10 {
            failures.push(format!("trace {trace_err:.1e}"));
        }
        if reflect_err > 1e-10 {
            failures.push(format!("reflection {reflect_err:.1e}"));
        }
        if resid > 1e-9 {
            failures.push(format!("residual {resid:.1e}"));
        }
        if biorth > 1e-8 {
            failures.push(format!("biorthogonality {biorth:.1e}"));
        }

        let a = Complex64::new(-0.05, pseudo_dp().im);
        let b = Complex64::new(0.05, pseudo_dp().im);
        let forward = spectrum_along(&m, a, b, 201, false)?;
        let mut back = Continuation::from_spectrum(&m, forward.samples.last().expect("samples").spectrum.clone());
        for s in forward.samples.iter().rev().skip(1) {
            back.advance(s.g)?;
        }
        let start = &forward.samples[0].eigenvalues;
        let returned = &back.current().eigenvalues;
        let round_trip = start.iter().zip(returned).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        if round_trip > 1e-10 {
            failures.push(format!("forward-backward continuation {round_trip:.1e}"));
        }

        let spec = LoopSpec::new(pseudo_dp(), 0.01);
        let ccw = trace_loop(&m, &spec)?;
        let cw = trace_loop(&m, &spec.reversed())?;
        let antisym = ccw
            .theta_after(1)
            .iter()
            .zip(cw.theta_after(1))
            .map(|(x, y)| (x.re + y.re).abs())
            .fold(0.0, f64::max);
        if antisym > 0.02 {
            failures.push(format!("orientation antisymmetry {antisym:.1e}"));
        }

        let d0 = discriminant_at(&m, Complex64::new(0.0, 0.0))?.norm();
        if d0 > 1e-12 {
            failures.push(format!("D(0) = {d0:.1e}"));
        }
        let detail = format!(
            "resultant {resultant:.1e}, trace {trace_err:.1e}, reflection {reflect_err:.1e}, residual {resid:.1e}, \
             biorthogonality {biorth:.1e}, round trip {round_trip:.1e}, orientation {antisym:.1e}, |D(0)| {d0:.1e}"
        );
        if failures.is_empty() {
            Ok((true, detail))
        } else {
            Ok((false, format!("{detail}; failed: {}", failures.join(", "))))
        }
    })())
}

/// All criteria, in order.
pub fn run_all() -> Vec<CriterionResult> {
    let checks: [fn() -> CriterionResult; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    checks.par_iter().map(|f| f()).collect()
}
