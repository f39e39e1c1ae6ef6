//! Classification of degeneracies into exceptional, diabolic and
//! pseudo-diabolic points, and their trajectories under a sweep of `gamma`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discriminant::{find_degeneracies, DegeneracyRoot, FinderOptions};
use crate::error::{Error, Result};
use crate::model::PairingModel;
use crate::monodromy::{cycle_notation, trace_loop, LoopSpec, DEFAULT_RADIUS, DEFAULT_STEPS};
use crate::poly;
use crate::spectra::{spectrum_at, COALESCENCE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Kind {
    Ep,
    Dp,
    PseudoDp,
    Unresolved,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Ep => "EP",
            Kind::Dp => "DP",
            Kind::PseudoDp => "PSEUDO_DP",
            Kind::Unresolved => "UNRESOLVED",
        }
    }
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyRecord {
    pub radius: f64,
    pub permutation: Vec<usize>,
    pub cycles: String,
    pub phases_re: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyPoint {
    pub root: DegeneracyRoot,
    pub kind: Kind,
    /// `|b(u,u)|` of the two unit-norm eigenvectors of the involved pair.
    pub coalescence: [f64; 2],
    pub monodromy: Option<MonodromyRecord>,
    pub diagnostics: Option<String>,
}

impl DegeneracyPoint {
    pub fn g0(&self) -> Complex64 {
        self.root.g0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtlasOptions {
    pub finder: FinderOptions,
    /// Coalescence threshold on `|b(u,u)|`.
    pub tau: f64,
    /// Radius of the verification loop (shrunk if another root is closer).
    pub loop_radius: f64,
    pub loop_steps: usize,
    /// Two points closer than this in `g` count as merged during a sweep.
    pub merge_radius: f64,
}

impl Default for AtlasOptions {
    fn default() -> Self {
        Self {
            finder: FinderOptions::default(),
            tau: COALESCENCE_THRESHOLD,
            loop_radius: DEFAULT_RADIUS,
            loop_steps: DEFAULT_STEPS,
            merge_radius: 1e-4,
        }
    }
}

/// Kind from the root multiplicity, the self-orthogonality of the involved
/// pair and the one-loop eigenvalue permutation.
pub fn decide(multiplicity: u32, coalescence: [f64; 2], perm: &[usize], tau: f64) -> (Kind, Option<String>) {
    let merged = coalescence.iter().all(|&b| b <= tau);
    let distinct = coalescence.iter().all(|&b| b > tau);
    let moved = perm.iter().enumerate().filter(|(a, b)| a != *b).count();
    match multiplicity {
        1 if merged && moved == 2 => (Kind::Ep, None),
        1 => (
            Kind::Unresolved,
            Some(format!(
                "simple root but coalescence {coalescence:?} / monodromy {}",
                cycle_notation(perm)
            )),
        ),
        2 if moved > 0 => (
            Kind::Unresolved,
            Some(format!("double root with exchanging monodromy {}: unresolved EP pair", cycle_notation(perm))),
        ),
        2 if merged => (Kind::PseudoDp, None),
        2 if distinct => (Kind::Dp, None),
        2 => (Kind::Unresolved, Some(format!("double root with mixed coalescence {coalescence:?}"))),
        m => (Kind::Unresolved, Some(format!("multiplicity {m}"))),
    }
}

/// Assign a kind to one root using the eigenvectors at `g0` and a small loop.
pub fn classify(
    model: &PairingModel,
    root: &DegeneracyRoot,
    loop_radius: f64,
    options: &AtlasOptions,
) -> Result<DegeneracyPoint> {
    let spectrum = spectrum_at(model, root.g0)?;
    let (i, j) = root.involved_pair;
    let coalescence = [spectrum.self_orthogonality[i].norm(), spectrum.self_orthogonality[j].norm()];
    let spec = LoopSpec::new(root.g0, loop_radius).with_steps(options.loop_steps);
    let trace = trace_loop(model, &spec)?;
    let perm = trace.permutations[0].clone();
    let monodromy = MonodromyRecord {
        radius: loop_radius,
        cycles: cycle_notation(&perm),
        phases_re: trace.theta_after(1).iter().map(|t| t.re).collect(),
        permutation: perm.clone(),
    };
    let (kind, diagnostics) = decide(root.multiplicity, coalescence, &perm, options.tau);
    Ok(DegeneracyPoint {
        root: root.clone(),
        kind,
        coalescence,
        monodromy: Some(monodromy),
        diagnostics,
    })
}

/// Verification-loop radius for each root: the default, shrunk to stay clear
/// of the other roots.
fn loop_radii(roots: &[DegeneracyRoot], default: f64) -> Vec<f64> {
    roots
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let nearest = roots
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, o)| (o.g0 - r.g0).norm())
                .fold(f64::INFINITY, f64::min);
            default.min(0.45 * nearest)
        })
        .collect()
}

pub fn classify_all(model: &PairingModel, roots: &[DegeneracyRoot], options: &AtlasOptions) -> Result<Vec<DegeneracyPoint>> {
    let radii = loop_radii(roots, options.loop_radius);
    roots
        .par_iter()
        .zip(radii.par_iter())
        .map(|(r, &radius)| classify(model, r, radius, options))
        .collect()
}

/// All degeneracies of the model, classified.
pub fn atlas(model: &PairingModel, options: &AtlasOptions) -> Result<Vec<DegeneracyPoint>> {
    let roots = find_degeneracies(model, &options.finder)?;
    classify_all(model, &roots, options)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointRecord {
    pub g_re: f64,
    pub g_im: f64,
    pub multiplicity: u32,
    pub residual: f64,
    pub pair: [usize; 2],
    pub kind: Kind,
    pub coalescence: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monodromy: Option<MonodromyRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
}

impl From<&DegeneracyPoint> for PointRecord {
    fn from(p: &DegeneracyPoint) -> Self {
        Self {
            g_re: p.root.g0.re,
            g_im: p.root.g0.im,
            multiplicity: p.root.multiplicity,
            residual: p.root.residual,
            pair: [p.root.involved_pair.0, p.root.involved_pair.1],
            kind: p.kind,
            coalescence: p.coalescence,
            monodromy: p.monodromy.clone(),
            diagnostics: p.diagnostics.clone(),
        }
    }
}

/// Roots of the discriminant of the two-state reduction `Ûᵀ H(g) Û`, where `Û`
/// holds the c-normalized eigenvectors of states `pair` at `g_ref`.
///
/// A genuine two-level Jordan block would reproduce the double root at the
/// degeneracy; a degeneracy that needs the remaining states does not.
pub fn two_state_reduction_roots(model: &PairingModel, g_ref: Complex64, pair: (usize, usize)) -> Result<Vec<Complex64>> {
    let s = spectrum_at(model, g_ref)?;
    let u = [&s.eigenvectors[pair.0], &s.eigenvectors[pair.1]];
    let t = model.operators().t.map(Complex64::from);
    let v = model.interaction().map(Complex64::from);
    let project = |m: &crate::model::CMatrix, a: usize, b: usize| (u[a].transpose() * m * u[b])[(0, 0)];
    let diff = [project(&t, 0, 0) - project(&t, 1, 1), project(&v, 0, 0) - project(&v, 1, 1)];
    let off = [project(&t, 0, 1), project(&v, 0, 1)];
    // (d0 + g d1)^2 + 4 (o0 + g o1)^2
    let coeffs = vec![
        diff[0] * diff[0] + off[0] * off[0] * 4.0,
        diff[0] * diff[1] * 2.0 + off[0] * off[1] * 8.0,
        diff[1] * diff[1] + off[1] * off[1] * 4.0,
    ];
    poly::roots(&poly::trim(&coeffs, 1e-14)).ok_or(Error::NoConvergence { g: g_ref })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaSample {
    pub gamma: f64,
    pub points: Vec<PointRecord>,
    /// `links[i]`: index of the matching point in the previous sample.
    pub links: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceEvent {
    pub gamma: f64,
    pub g_re: f64,
    pub g_im: f64,
    /// Residual distance of the two points at the located `gamma`.
    pub distance: f64,
}

impl CoalescenceEvent {
    pub fn g(&self) -> Complex64 {
        Complex64::new(self.g_re, self.g_im)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaTrajectory {
    pub samples: Vec<GammaSample>,
    pub events: Vec<CoalescenceEvent>,
    /// `(sample, point)` pairs whose link had two candidates within 1e-9.
    pub ambiguous_links: Vec<(usize, usize)>,
}

impl GammaTrajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,g_re,g_im,kind,multiplicity,state_a,state_b\n");
        for s in &self.samples {
            for p in &s.points {
                let _ = writeln!(
                    out,
                    "{:.12e},{:.12e},{:.12e},{},{},{},{}",
                    s.gamma,
                    p.g_re,
                    p.g_im,
                    p.kind,
                    p.multiplicity,
                    p.pair[0] + 1,
                    p.pair[1] + 1
                );
            }
        }
        out
    }
}

fn point_g(p: &PointRecord) -> Complex64 {
    Complex64::new(p.g_re, p.g_im)
}

/// Nearest-`g` assignment of `next` points to `prev` points.
fn link(prev: &[PointRecord], next: &[PointRecord]) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, q) in next.iter().enumerate() {
        for (j, p) in prev.iter().enumerate() {
            pairs.push(((point_g(q) - point_g(p)).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut links = vec![None; next.len()];
    let mut used = vec![false; prev.len()];
    for &(_, i, j) in &pairs {
        if links[i].is_none() && !used[j] {
            links[i] = Some(j);
            used[j] = true;
        }
    }
    let ambiguous = (0..next.len())
        .filter(|&i| {
            let mut d: Vec<f64> = pairs.iter().filter(|p| p.1 == i).map(|p| p.0).collect();
            d.sort_by(f64::total_cmp);
            d.len() > 1 && d[1] - d[0] < 1e-9
        })
        .collect();
    (links, ambiguous)
}

/// Expand the roots of one state pair by multiplicity into a flat list of
/// locations. `g = 0`, where `H = T` is diagonal, is left out.
fn locations(roots: &[DegeneracyRoot], pair: [usize; 2]) -> Vec<Complex64> {
    roots
        .iter()
        .filter(|r| [r.involved_pair.0, r.involved_pair.1] == pair && r.g0.norm() > 1e-9)
        .flat_map(|r| std::iter::repeat_n(r.g0, r.multiplicity as usize))
        .collect()
}

/// The two root locations of state pair `pair` closest to `reference`: their
/// distance and midpoint.
fn closest_pair(
    model: &PairingModel,
    gamma: f64,
    reference: Complex64,
    pair: [usize; 2],
    finder: &FinderOptions,
) -> Result<(f64, Complex64)> {
    let roots = find_degeneracies(&model.with_gamma(gamma), finder)?;
    let mut locs = locations(&roots, pair);
    locs.sort_by(|a, b| (a - reference).norm().total_cmp(&(b - reference).norm()));
    if locs.len() < 2 {
        return Ok((f64::INFINITY, reference));
    }
    Ok(((locs[0] - locs[1]).norm(), (locs[0] + locs[1]) * 0.5))
}

/// Golden-section minimisation of the pair distance over `gamma ∈ [lo, hi]`.
fn locate_event(
    model: &PairingModel,
    mut lo: f64,
    mut hi: f64,
    mut reference: Complex64,
    pair: [usize; 2],
    options: &AtlasOptions,
) -> Result<CoalescenceEvent> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let mut fa = closest_pair(model, a, reference, pair, &options.finder)?;
    let mut fb = closest_pair(model, b, reference, pair, &options.finder)?;
    for _ in 0..80 {
        if hi - lo < 1e-10 || fa.0.min(fb.0) == 0.0 {
            break;
        }
        if fa.0 <= fb.0 {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            reference = fb.1;
            fa = closest_pair(model, a, reference, pair, &options.finder)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            reference = fa.1;
            fb = closest_pair(model, b, reference, pair, &options.finder)?;
        }
    }
    let (gamma, (distance, g)) = if fa.0 <= fb.0 { (a, fa) } else { (b, fb) };
    Ok(CoalescenceEvent {
        gamma,
        g_re: g.re,
        g_im: g.im,
        distance,
    })
}

/// Mutually nearest EPs of the same two states in one sample with their
/// distance and midpoint; a multiplicity-2 point counts as a pair at distance zero.
fn candidate_pairs(points: &[PointRecord]) -> Vec<(f64, Complex64, [usize; 2])> {
    let eps: Vec<&PointRecord> = points.iter().filter(|p| p.kind == Kind::Ep).collect();
    let nearest = |i: usize| -> Option<usize> {
        (0..eps.len())
            .filter(|&j| j != i && eps[j].pair == eps[i].pair)
            .min_by(|&a, &b| {
                let da = (point_g(eps[a]) - point_g(eps[i])).norm();
                let db = (point_g(eps[b]) - point_g(eps[i])).norm();
                da.total_cmp(&db).then(a.cmp(&b))
            })
    };
    let mut out: Vec<(f64, Complex64, [usize; 2])> = points
        .iter()
        .filter(|p| p.multiplicity == 2 && p.kind != Kind::Dp && point_g(p).norm() > 1e-9)
        .map(|p| (0.0, point_g(p), p.pair))
        .collect();
    for i in 0..eps.len() {
        if let Some(j) = nearest(i) {
            if j > i && nearest(j) == Some(i) {
                let (p, q) = (point_g(eps[i]), point_g(eps[j]));
                out.push(((p - q).norm(), (p + q) * 0.5, eps[i].pair));
            }
        }
    }
    out
}

/// Find and classify degeneracies on a `gamma` grid, link them into
/// trajectories and locate the values of `gamma` where two EPs merge.
pub fn sweep_gamma(model: &PairingModel, range: (f64, f64), steps: usize, options: &AtlasOptions) -> Result<GammaTrajectory> {
    if steps < 2 {
        return Err(Error::InvalidArgument("a gamma sweep needs at least 2 steps".into()));
    }
    let gammas: Vec<f64> = (0..steps)
        .map(|k| range.0 + (range.1 - range.0) * k as f64 / (steps - 1) as f64)
        .collect();
    let classified: Vec<Vec<PointRecord>> = gammas
        .par_iter()
        .map(|&gamma| {
            atlas(&model.with_gamma(gamma), options).map(|pts| pts.iter().map(PointRecord::from).collect())
        })
        .collect::<Result<_>>()?;

    let mut samples = Vec::with_capacity(steps);
    let mut ambiguous_links = Vec::new();
    for (k, (gamma, points)) in gammas.iter().zip(classified).enumerate() {
        let links = if k == 0 {
            vec![None; points.len()]
        } else {
            let (links, amb) = link(&samples.last().map(|s: &GammaSample| s.points.clone()).unwrap_or_default(), &points);
            ambiguous_links.extend(amb.into_iter().map(|i| (k, i)));
            links
        };
        samples.push(GammaSample {
            gamma: *gamma,
            points,
            links,
        });
    }

    // brackets around local minima of the pair distance
    let pairs: Vec<Vec<(f64, Complex64, [usize; 2])>> = samples.iter().map(|s| candidate_pairs(&s.points)).collect();
    let near = |k: usize, mid: Complex64, pair: [usize; 2]| -> Option<f64> {
        pairs[k]
            .iter()
            .filter(|(_, m, p)| *p == pair && (m - mid).norm() < 0.05)
            .map(|(d, _, _)| *d)
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))))
    };
    let mut brackets: Vec<(f64, f64, Complex64, [usize; 2])> = Vec::new();
    for k in 0..steps {
        for &(d, mid, pair) in &pairs[k] {
            let left = if k > 0 { near(k - 1, mid, pair) } else { None };
            let right = if k + 1 < steps { near(k + 1, mid, pair) } else { None };
            let is_min = left.is_none_or(|l| d <= l) && right.is_none_or(|r| d <= r);
            if is_min && (left.is_some() || right.is_some() || d <= options.merge_radius) {
                let lo = gammas[k.saturating_sub(1)];
                let hi = gammas[(k + 1).min(steps - 1)];
                brackets.push((lo, hi, mid, pair));
            }
        }
    }

    let found: Vec<CoalescenceEvent> = brackets
        .par_iter()
        .map(|&(lo, hi, mid, pair)| locate_event(model, lo, hi, mid, pair, options))
        .collect::<Result<_>>()?;
    let mut events: Vec<CoalescenceEvent> = Vec::new();
    for e in found {
        if e.distance > options.merge_radius {
            continue;
        }
        let duplicate = events
            .iter()
            .any(|o| (o.gamma - e.gamma).abs() < 1e-6 && (o.g() - e.g()).norm() < options.merge_radius);
        if !duplicate {
            events.push(e);
        }
    }
    events.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.g_im.total_cmp(&b.g_im)));
    Ok(GammaTrajectory {
        samples,
        events,
        ambiguous_links,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;

    fn pseudo_dp() -> Complex64 {
        Complex64::new(0.0, -1.0 / (4.0 * 2f64.sqrt()))
    }

    #[test]
    fn pseudo_dp_and_trivial_dp_at_half() {
        let model = PairingModel::new(ModelSpec::three_level(-0.5)).unwrap();
        let points = atlas(&model, &AtlasOptions::default()).unwrap();
        let p = points.iter().find(|p| (p.g0() - pseudo_dp()).norm() < 1e-6).unwrap();
        assert_eq!(p.kind, Kind::PseudoDp, "{p:?}");
        let zero = points.iter().find(|p| p.g0().norm() < 1e-6).unwrap();
        assert_eq!(zero.kind, Kind::Dp, "{zero:?}");
        // conjugate partners share the kind
        for p in &points {
            let partner = points
                .iter()
                .find(|q| (q.g0() - p.g0().conj()).norm() < 1e-6)
                .expect("conjugate partner");
            assert_eq!(partner.kind, p.kind);
        }
    }

    #[test]
    fn ep_at_minus_49_hundredths() {
        let model = PairingModel::new(ModelSpec::three_level(-0.49)).unwrap();
        let points = atlas(&model, &AtlasOptions::default()).unwrap();
        let p = points
            .iter()
            .find(|p| (p.g0() - Complex64::new(0.0, -0.207687)).norm() < 1e-5)
            .unwrap();
        assert_eq!(p.kind, Kind::Ep, "{p:?}");
        assert!(points.iter().all(|p| p.kind != Kind::Unresolved), "{points:?}");
    }

    #[test]
    fn block_diagonal_double_root_is_dp() {
        // diag(A, A) with A = [[0, 1], [1, 0]]: doubly degenerate, eigenvectors
        // stay c-normalizable and the blocks never mix
        let a = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let h = crate::model::CMatrix::from_row_slice(4, 4, &[z, a, z, z, a, z, z, z, z, z, z, a, z, z, a, z]);
        let s = crate::spectra::eigendecompose(&h, z).unwrap();
        let (i, j) = (0..4)
            .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
            .find(|&(i, j)| (s.eigenvalues[i] - s.eigenvalues[j]).norm() < 1e-12)
            .unwrap();
        let b = [s.self_orthogonality[i].norm(), s.self_orthogonality[j].norm()];
        let (kind, _) = decide(2, b, &[0, 1, 2, 3], COALESCENCE_THRESHOLD);
        assert_eq!(kind, Kind::Dp);
        assert_eq!(decide(2, [1e-9, 1e-9], &[0, 1, 2, 3], 1e-6).0, Kind::PseudoDp);
        assert_eq!(decide(1, [1e-9, 1e-9], &[0, 2, 1, 3], 1e-6).0, Kind::Ep);
        assert_eq!(decide(2, [1e-9, 1e-9], &[0, 2, 1, 3], 1e-6).0, Kind::Unresolved);
    }

    #[test]
    fn two_state_reduction_has_no_double_root() {
        let model = PairingModel::new(ModelSpec::three_level(-0.5)).unwrap();
        let roots = two_state_reduction_roots(&model, pseudo_dp() + 0.01, (1, 2)).unwrap();
        let near: Vec<_> = roots.iter().filter(|r| (*r - pseudo_dp()).norm() < 0.05).collect();
        assert_eq!(near.len(), 1, "{roots:?}");
    }

    #[test]
    fn sweep_locates_coalescence() {
        let model = PairingModel::new(ModelSpec::three_level(-0.5)).unwrap();
        let traj = sweep_gamma(&model, (-0.52, -0.48), 5, &AtlasOptions::default()).unwrap();
        let e = traj
            .events
            .iter()
            .find(|e| (e.g() - pseudo_dp()).norm() < 1e-3)
            .expect("event near the pseudo-DP");
        assert!((e.gamma + 0.5).abs() < 1e-3, "{e:?}");
        assert!((e.g() - pseudo_dp()).norm() < 1e-4, "{e:?}");
        assert!(traj.to_csv().starts_with("gamma,g_re,g_im,kind"));
    }
}
