use nalgebra::DMatrix;
use num_complex::Complex64;
use pairing_ep::discriminant::{
    char_poly, discriminant_at, discriminant_at_resultant, discriminant_from_eigenvalues, discriminant_poly, CharPoly,
    FinderOptions,
};
use pairing_ep::model::{build_operator_matrices, enumerate_basis, CMatrix};
use pairing_ep::spectra::eigendecompose;
use pairing_ep::{LevelSpec, ModelSpec, PairingModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Quasispin ladder `K⁺` for spin `j = omega/4` in the basis `m = −j..j`.
fn k_plus(omega: u32) -> DMatrix<f64> {
    let j = f64::from(omega) / 4.0;
    let size = omega as usize / 2 + 1;
    let mut k = DMatrix::zeros(size, size);
    for col in 0..size - 1 {
        let m = -j + col as f64;
        k[(col + 1, col)] = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
    }
    k
}

fn k_zero(omega: u32) -> DMatrix<f64> {
    let j = f64::from(omega) / 4.0;
    let size = omega as usize / 2 + 1;
    DMatrix::from_fn(size, size, |r, c| if r == c { -j + r as f64 } else { 0.0 })
}

/// Embed a single-level operator at position `l` of the tensor product.
fn embed(op: &DMatrix<f64>, l: usize, omegas: &[u32]) -> DMatrix<f64> {
    omegas.iter().enumerate().fold(DMatrix::identity(1, 1), |acc, (k, &w)| {
        let size = w as usize / 2 + 1;
        let factor = if k == l { op.clone() } else { DMatrix::identity(size, size) };
        kron(&acc, &factor)
    })
}

/// T, P, Q from full tensor-product ladder operators, restricted to `n_pairs`.
fn brute_force(spec: &ModelSpec) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let omegas: Vec<u32> = spec.levels.iter().map(|l| l.omega).collect();
    let total: usize = omegas.iter().map(|&w| w as usize / 2 + 1).product();
    let mut t = DMatrix::zeros(total, total);
    let mut p = DMatrix::zeros(total, total);
    let mut q = DMatrix::zeros(total, total);
    let mut pairs = DMatrix::zeros(total, total);
    for (l, level) in spec.levels.iter().enumerate() {
        let kz = embed(&k_zero(level.omega), l, &omegas);
        let n = (&kz + DMatrix::identity(total, total) * (f64::from(level.omega) / 4.0)) * 2.0;
        t += &n * level.epsilon;
        q += &n * &n;
        pairs += &n / 2.0;
        let raise_i = embed(&k_plus(level.omega), l, &omegas) * 2.0;
        for (m, other) in spec.levels.iter().enumerate() {
            let lower_j = embed(&k_plus(other.omega), m, &omegas).transpose() * 2.0;
            p += &raise_i * lower_j;
        }
    }
    let keep: Vec<usize> = (0..total)
        .filter(|&i| (pairs[(i, i)] - f64::from(spec.n_pairs)).abs() < 1e-9)
        .collect();
    let restrict = |m: &DMatrix<f64>| DMatrix::from_fn(keep.len(), keep.len(), |r, c| m[(keep[r], keep[c])]);
    (restrict(&t), restrict(&p), restrict(&q))
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn operators_match_tensor_ladder_oracle() {
    let specs = [
        ModelSpec::three_level(-0.5),
        ModelSpec::new(vec![LevelSpec::new(0.0, 4), LevelSpec::new(0.7, 2), LevelSpec::new(1.5, 6)], 3, -0.3),
        ModelSpec::new(
            vec![
                LevelSpec::new(0.0, 2),
                LevelSpec::new(1.0, 4),
                LevelSpec::new(2.0, 4),
                LevelSpec::new(3.5, 2),
            ],
            2,
            0.2,
        ),
    ];
    for spec in specs {
        let basis = enumerate_basis(&spec).unwrap();
        let ops = build_operator_matrices(&spec, &basis);
        let (t, p, q) = brute_force(&spec);
        assert_eq!(t.nrows(), basis.len());
        assert!(max_diff(&ops.t, &t) < 1e-12);
        assert!(max_diff(&ops.p, &p) < 1e-12, "{}\n{}", ops.p, p);
        assert!(max_diff(&ops.q, &q) < 1e-12);
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            h[(i, j)] = z;
            h[(j, i)] = z;
        }
    }
    h
}

#[test]
fn char_poly_matches_eigenvalue_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [2, 3, 4, 6] {
        for _ in 0..10 {
            let h = random_symmetric(&mut rng, n);
            let s = eigendecompose(&h, Complex64::new(0.0, 0.0)).unwrap();
            let direct = char_poly(&h);
            let expanded = CharPoly::from_roots(&s.eigenvalues);
            for (a, b) in direct.coefficients.iter().zip(&expanded.coefficients) {
                assert!((a - b).norm() < 1e-9, "{a} vs {b}");
            }
            let sum: Complex64 = s.eigenvalues.iter().sum();
            assert!((sum - h.trace()).norm() < 1e-10);
        }
    }
}

#[test]
fn eigenpairs_have_small_residual_and_are_biorthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let h = random_symmetric(&mut rng, 5);
        let s = eigendecompose(&h, Complex64::new(0.0, 0.0)).unwrap();
        let norm = pairing_ep::linalg::frobenius(&h);
        for (i, (e, u)) in s.eigenvalues.iter().zip(&s.eigenvectors).enumerate() {
            let r = (&h * u - u * *e).norm() / u.norm();
            assert!(r <= 1e-9 * norm, "residual {r}");
            if !s.self_orthogonal[i] {
                assert!((pairing_ep::linalg::c_dot(u, u) - 1.0).norm() < 1e-10);
            }
            for j in i + 1..s.dim() {
                if !s.self_orthogonal[i] && !s.self_orthogonal[j] {
                    assert!(pairing_ep::linalg::c_dot(u, &s.eigenvectors[j]).norm() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn resultant_and_product_discriminants_agree() {
    let model = PairingModel::new(ModelSpec::three_level(-0.5)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let g = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let a = discriminant_at(&model, g).unwrap();
        let b = discriminant_at_resultant(&model, g);
        assert!((a - b).norm() <= 1e-8 * a.norm(), "{g}: {a} vs {b}");
    }
}

#[test]
fn reconstructed_polynomial_reproduces_samples() {
    for gamma in [-0.5, -0.49, -0.51, -0.3] {
        let model = PairingModel::new(ModelSpec::three_level(gamma)).unwrap();
        let poly = discriminant_poly(&model, &FinderOptions::default()).unwrap();
        assert_eq!(poly.degree(), 12);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let g = Complex64::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
            let direct = discriminant_at(&model, g).unwrap();
            let rel = (poly.eval(g) - direct).norm() / poly.scale_at(g);
            assert!(rel < 1e-8, "{gamma} {g}: {rel}");
        }
    }
}

#[test]
fn diagonal_discriminant_is_product_of_gaps() {
    let values = [1.0, 2.0, 4.0].map(|x| Complex64::new(x, 0.0));
    assert!((discriminant_from_eigenvalues(&values) - 36.0).norm() < 1e-12);
}
