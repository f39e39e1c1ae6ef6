use std::f64::consts::PI;

use num_complex::Complex64;
use pairing_ep::atlas::{atlas, sweep_gamma, two_state_reduction_roots, AtlasOptions, Kind};
use pairing_ep::discriminant::{find_degeneracies, FinderOptions};
use pairing_ep::monodromy::{check_enclosure, compose, is_identity, restore_count, trace_loop, LoopSpec};
use pairing_ep::{LevelSpec, ModelSpec, PairingModel};

fn pseudo_dp() -> Complex64 {
    Complex64::new(0.0, -1.0 / (4.0 * 2f64.sqrt()))
}

fn model(gamma: f64) -> PairingModel {
    PairingModel::new(ModelSpec::three_level(gamma)).unwrap()
}

#[test]
fn reversed_loop_negates_phases_and_inverts_permutation() {
    // around an EP the loop ends on the partner branch, so the two
    // orientations differ by a term that shrinks like √radius
    for (gamma, center, radius) in [
        (-0.5, pseudo_dp(), 0.01),
        (-0.49, Complex64::new(0.0, -0.2076875), 0.001),
    ] {
        let m = model(gamma);
        let spec = LoopSpec::new(center, radius);
        let ccw = trace_loop(&m, &spec).unwrap();
        let cw = trace_loop(&m, &spec.reversed()).unwrap();
        for (a, b) in ccw.theta_after(1).iter().zip(cw.theta_after(1)) {
            assert!((a.re + b.re).abs() <= 0.02, "{a} {b}");
        }
        assert!(is_identity(&compose(&ccw.permutations[0], &cw.permutations[0])));
    }
}

#[test]
fn repeated_loops_compose() {
    let m = model(-0.49);
    let trace = trace_loop(&m, &LoopSpec::new(Complex64::new(0.0, -0.207687), 0.01).with_loops(3)).unwrap();
    let one = &trace.permutations[0];
    let mut power = one.clone();
    for k in 1..3 {
        power = compose(&power, one);
        assert_eq!(&trace.permutations[k], &power);
    }
}

#[test]
fn phases_converge_with_steps() {
    let m = model(-0.5);
    let spec = LoopSpec::new(pseudo_dp(), 0.01);
    let coarse = trace_loop(&m, &spec.with_steps(256)).unwrap();
    let fine = trace_loop(&m, &spec.with_steps(512)).unwrap();
    for (a, b) in coarse.theta_after(1).iter().zip(fine.theta_after(1)) {
        assert!((a - b).norm() <= 1e-3, "{a} {b}");
    }
    let total: f64 = coarse.theta_after(1).iter().map(|t| t.re).sum();
    let turns = total / (2.0 * PI);
    assert!((turns - turns.round()).abs() * 2.0 * PI <= 0.05);
}

#[test]
fn empty_and_far_loops_are_trivial() {
    let m = model(-0.5);
    let far = LoopSpec::new(Complex64::new(0.3, 0.3), 0.01);
    let roots = find_degeneracies(&m, &FinderOptions::default()).unwrap();
    assert_eq!(check_enclosure(&far, &roots).unwrap(), 0);
    let (count, trace) = restore_count(&m, &far, 3).unwrap();
    assert_eq!((count.eigenvalue_period, count.phase_period), (Some(1), Some(1)));
    assert!(trace.theta_after(1).iter().all(|t| t.re.abs() <= 0.01));
    let wide = LoopSpec::new(Complex64::new(0.0, 0.0), 0.3);
    assert!(check_enclosure(&wide, &roots).is_err());
}

#[test]
fn classification_is_scale_invariant() {
    let s = 2.0;
    let scaled = PairingModel::new(ModelSpec::new(
        vec![LevelSpec::new(0.0, 2), LevelSpec::new(s, 6), LevelSpec::new(2.0 * s, 2)],
        2,
        -0.49,
    ))
    .unwrap();
    let options = AtlasOptions::default();
    let base = atlas(&model(-0.49), &options).unwrap();
    let big = atlas(&scaled, &options).unwrap();
    assert_eq!(base.len(), big.len());
    for p in &base {
        let q = big
            .iter()
            .find(|q| (q.g0() - p.g0() * s).norm() < 1e-6)
            .unwrap_or_else(|| panic!("no partner for {}", p.g0()));
        assert_eq!(p.kind, q.kind);
    }
}

#[test]
fn kinds_at_reference_gammas() {
    let options = AtlasOptions::default();
    let half = atlas(&model(-0.5), &options).unwrap();
    let pdp = half.iter().filter(|p| p.kind == Kind::PseudoDp).count();
    assert_eq!(pdp, 2, "pseudo-DP and its mirror");
    for p in half.iter().filter(|p| p.kind == Kind::PseudoDp) {
        let mono = p.monodromy.as_ref().unwrap();
        assert_eq!(mono.cycles, "()");
        assert!(p.coalescence.iter().all(|&b| b <= options.tau));
    }
    for gamma in [-0.49, -0.51] {
        let points = atlas(&model(gamma), &options).unwrap();
        for p in points.iter().filter(|p| p.kind == Kind::Ep) {
            assert_eq!(p.root.multiplicity, 1);
            assert!(p.monodromy.as_ref().unwrap().cycles.matches(' ').count() == 1);
        }
    }
}

#[test]
fn merging_pair_is_not_a_two_level_block() {
    let m = model(-0.5);
    for offset in [1e-3, 1e-2] {
        let roots = two_state_reduction_roots(&m, pseudo_dp() + offset, (1, 2)).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - roots[1]).norm() > 0.1, "{roots:?}");
    }
}

#[test]
fn wide_sweep_is_deterministic_and_finds_the_merge() {
    let m = model(-0.5);
    let options = AtlasOptions::default();
    let a = sweep_gamma(&m, (-0.6, -0.4), 11, &options).unwrap();
    let b = sweep_gamma(&m, (-0.6, -0.4), 11, &options).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let event = a
        .events
        .iter()
        .find(|e| (e.g() - pseudo_dp()).norm() < 1e-4)
        .expect("merge event");
    assert!((event.gamma + 0.5).abs() < 1e-3);
    // on-axis pair above the merge, off-axis pair below it
    let above = a.samples.iter().find(|s| s.gamma > -0.45).unwrap();
    let below = a.samples.iter().find(|s| s.gamma < -0.55).unwrap();
    // EPs of the merging pair (states 2, 3) in the lower half plane
    let merging = |pts: &[pairing_ep::atlas::PointRecord]| -> Vec<pairing_ep::atlas::PointRecord> {
        let mut v: Vec<_> = pts
            .iter()
            .filter(|p| p.kind == Kind::Ep && p.pair == [1, 2] && p.g_im < 0.0)
            .cloned()
            .collect();
        v.sort_by(|x, y| {
            let dx = (Complex64::new(x.g_re, x.g_im) - pseudo_dp()).norm();
            let dy = (Complex64::new(y.g_re, y.g_im) - pseudo_dp()).norm();
            dx.total_cmp(&dy)
        });
        v.truncate(2);
        v
    };
    let (up, down) = (merging(&above.points), merging(&below.points));
    assert_eq!((up.len(), down.len()), (2, 2));
    assert!(up.iter().all(|p| p.g_re.abs() < 1e-6), "{up:?}");
    assert!(down.iter().all(|p| p.g_re.abs() > 1e-3), "{down:?}");
}
