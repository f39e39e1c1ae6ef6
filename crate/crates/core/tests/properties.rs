use num_complex::Complex64;
use pairing_ep::acceptance::multiset_distance;
use pairing_ep::discriminant::{discriminant_at, find_degeneracies, FinderOptions};
use pairing_ep::observables::{completeness_defect, raw_vectors, EigenbasisOperator};
use pairing_ep::spectra::{spectrum_along, spectrum_at, Continuation};
use pairing_ep::{LevelSpec, ModelSpec, PairingModel};
use proptest::prelude::*;

fn model() -> PairingModel {
    PairingModel::new(ModelSpec::three_level(-0.5)).unwrap()
}

fn coupling() -> impl Strategy<Value = Complex64> {
    (-0.6f64..0.6, -0.6f64..0.6).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Stay clear of the exact degeneracies, where eigenvectors are not unique.
fn regular(g: Complex64) -> bool {
    let roots = [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, -1.0 / (4.0 * 2f64.sqrt())),
        Complex64::new(0.0, 1.0 / (4.0 * 2f64.sqrt())),
    ];
    roots.iter().all(|r| (g - r).norm() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonian_is_symmetric_with_affine_trace(g in coupling()) {
        let m = model();
        let h = m.hamiltonian_at(g);
        prop_assert_eq!(&h, &h.transpose());
        prop_assert!((h.trace() - (16.0 + 36.0 * g)).norm() < 1e-12);
        prop_assert!((h.trace() - m.trace_at(g)).norm() < 1e-12);
    }

    #[test]
    fn eigenvalue_sum_equals_trace(g in coupling()) {
        let s = spectrum_at(&model(), g).unwrap();
        let sum: Complex64 = s.eigenvalues.iter().sum();
        prop_assert!((sum - (16.0 + 36.0 * g)).norm() < 1e-10);
    }

    #[test]
    fn reflected_levels_mirror_the_spectrum(g in coupling()) {
        let reversed = PairingModel::new(ModelSpec::new(
            vec![LevelSpec::new(2.0, 2), LevelSpec::new(1.0, 6), LevelSpec::new(0.0, 2)],
            2,
            -0.5,
        ))
        .unwrap();
        let e = spectrum_at(&model(), g).unwrap().eigenvalues;
        let mirrored: Vec<Complex64> = e.iter().map(|x| 8.0 - x).collect();
        let r = spectrum_at(&reversed, -g).unwrap().eigenvalues;
        prop_assert!(multiset_distance(&r, &mirrored) < 1e-10);
    }

    #[test]
    fn discriminant_is_conjugation_symmetric(g in coupling()) {
        let m = model();
        let a = discriminant_at(&m, g).unwrap();
        let b = discriminant_at(&m, g.conj()).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-9 * a.norm().max(1e-12));
    }

    #[test]
    fn completeness_and_trace_of_pairing_matrix(g in coupling()) {
        prop_assume!(regular(g));
        let m = model();
        let s = spectrum_at(&m, g).unwrap();
        let vectors = raw_vectors(&s).unwrap();
        prop_assert!(completeness_defect(&vectors) < 1e-8);
        let o = EigenbasisOperator::from_vectors(g, &m.pairing_operator(g), &vectors);
        let sum: Complex64 = o.diagonal().iter().sum();
        prop_assert!((sum - g * m.operators().p.trace()).norm() < 1e-8);
        prop_assert!(o.asymmetry() < 1e-8);
    }

    #[test]
    fn pairing_diagonal_is_gauge_invariant(g in coupling(), signs in proptest::collection::vec(any::<bool>(), 4)) {
        prop_assume!(regular(g));
        let m = model();
        let vectors = raw_vectors(&spectrum_at(&m, g).unwrap()).unwrap();
        let flipped: Vec<_> = vectors
            .iter()
            .zip(&signs)
            .map(|(v, &s)| if s { -v } else { v.clone() })
            .collect();
        let op = m.pairing_operator(g);
        let a = EigenbasisOperator::from_vectors(g, &op, &vectors);
        let b = EigenbasisOperator::from_vectors(g, &op, &flipped);
        for i in 0..4 {
            prop_assert!((a.entries[(i, i)] - b.entries[(i, i)]).norm() < 1e-12);
            for j in 0..4 {
                let sign = if signs[i] == signs[j] { 1.0 } else { -1.0 };
                prop_assert!((a.entries[(i, j)] * sign - b.entries[(i, j)]).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn every_root_is_an_eigenvalue_coincidence() {
    for gamma in [-0.5, -0.49, -0.51] {
        let m = PairingModel::new(ModelSpec::three_level(gamma)).unwrap();
        let roots = find_degeneracies(&m, &FinderOptions::default()).unwrap();
        let total: u32 = roots.iter().map(|r| r.multiplicity).sum();
        assert_eq!(total, 12);
        for r in &roots {
            let h = m.hamiltonian_at(r.g0);
            let s = spectrum_at(&m, r.g0).unwrap();
            let (i, j) = r.involved_pair;
            let gap = (s.eigenvalues[i] - s.eigenvalues[j]).norm();
            assert!(gap <= 1e-5 * pairing_ep::linalg::frobenius(&h), "{gamma} {}: gap {gap}", r.g0);
            assert!(r.relative_residual() <= 1e-10, "{}", r.relative_residual());
            // conjugate partner present
            assert!(roots.iter().any(|o| (o.g0 - r.g0.conj()).norm() < 1e-6 && o.multiplicity == r.multiplicity));
        }
    }
}

#[test]
fn double_root_splits_when_gamma_moves() {
    let target = Complex64::new(0.0, -1.0 / (4.0 * 2f64.sqrt()));
    let at_half = find_degeneracies(&model(), &FinderOptions::default()).unwrap();
    assert!(at_half.iter().any(|r| r.multiplicity == 2 && (r.g0 - target).norm() < 1e-8));
    let moved = find_degeneracies(&model().with_gamma(-0.49), &FinderOptions::default()).unwrap();
    let near: Vec<_> = moved
        .iter()
        .filter(|r| r.involved_pair == (1, 2) && (r.g0 - target).norm() < 0.05)
        .collect();
    assert_eq!(near.len(), 2, "{near:?}");
    assert!(near.iter().all(|r| r.multiplicity == 1));
}

#[test]
fn continuation_there_and_back_is_identity() {
    let m = model();
    let y = -1.0 / (4.0 * 2f64.sqrt());
    for (a, b) in [
        (Complex64::new(-0.05, y), Complex64::new(0.05, y)),
        (Complex64::new(0.02, -0.3), Complex64::new(-0.1, 0.1)),
    ] {
        let forward = spectrum_along(&m, a, b, 301, false).unwrap();
        let mut back = Continuation::from_spectrum(&m, forward.samples.last().unwrap().spectrum.clone());
        for s in forward.samples.iter().rev().skip(1) {
            back.advance(s.g).unwrap();
        }
        let start = &forward.samples[0].eigenvalues;
        for (x, y) in start.iter().zip(&back.current().eigenvalues) {
            assert!((x - y).norm() < 1e-10);
        }
    }
}

#[test]
fn real_axis_cut_is_hermitian() {
    let cut = spectrum_along(&model(), Complex64::new(-0.1, 0.0), Complex64::new(0.1, 0.0), 41, false).unwrap();
    for s in &cut.samples {
        assert!(s.eigenvalues.iter().all(|e| e.im.abs() < 1e-10));
    }
}
