use std::sync::Arc;

use maxwell_dd::analysis::{
    absorption_ratios, coercivity_check, elman, fov, hull_distance, projection_consistency, random_probes,
    relative_error_sweep, z_theta,
};
use maxwell_dd::decomp::Decomposition;
use maxwell_dd::fem::{assemble, BoundaryCondition, Coefficients, EdgeSpace};
use maxwell_dd::krylov::{gmres, InitialGuess, KrylovConfig, Side, Weight};
use maxwell_dd::linalg::{CsrMatrix, DenseMatrix, C64};
use maxwell_dd::mesh::Mesh;
use maxwell_dd::precond::{CoarseCorrection, Family, PreconditionerSpec, Schwarz};
use maxwell_dd::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn z_squares_to_shifted_wavenumber(k in 0.1f64..50.0, t in -2.0f64..2.0) {
        let xi = t * k * k;
        let zt = z_theta(k, xi).unwrap();
        let target = C64::new(k * k, xi);
        prop_assert!((zt.z * zt.z - target).norm() <= 1e-12 * target.norm());
        prop_assert!((zt.theta.norm() - 1.0).abs() < 1e-14);
        prop_assert!(zt.z.re > 0.0 || xi < 0.0);
        if xi >= 0.0 {
            prop_assert!(zt.z.im >= 0.0);
        }
        let mirrored = z_theta(k, -xi).unwrap().z;
        if xi != 0.0 {
            prop_assert!((mirrored + zt.z.conj()).norm() <= 1e-12 * zt.z.norm());
        }
    }

    #[test]
    fn absorption_ratios_are_order_one(k in 0.5f64..50.0, t in 1e-6f64..1.0) {
        // |ξ| ≤ k²: |z| ∼ k and Im z / |z| ∼ |ξ| / k²
        let (r1, r2) = absorption_ratios(k, t * k * k).unwrap();
        prop_assert!((1.0..=2f64.sqrt().sqrt() + 1e-12).contains(&r1));
        let lo = (std::f64::consts::PI / 8.0).sin();
        prop_assert!(r2 >= lo - 1e-12 && r2 <= 0.5 + 1e-12, "r2 = {}", r2);
    }
}

#[test]
fn coercivity_identity_on_small_meshes() {
    for n in 1..=3 {
        let space = EdgeSpace::new(Arc::new(Mesh::cube(n).unwrap()), BoundaryCondition::Pec);
        for k in [1.0, 2.0, 5.0] {
            for xi in [k, k * k, -k] {
                let sys = assemble(&space, &Coefficients::homogeneous(space.mesh().num_tets(), k, xi)).unwrap();
                let probes = random_probes(sys.ndofs(), 50, 1);
                let dev = coercivity_check(&sys.a, &sys.s, &sys.m, k, xi, &probes).unwrap();
                assert!(dev <= 1e-12, "n={n} k={k} xi={xi}: {dev:e}");
            }
        }
    }
}

fn dense_from(m: &DMatrix<C64>) -> DenseMatrix<C64> {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(n, n)
}

#[test]
fn hermitian_operator_fov_is_generalized_spectrum() {
    // C = D⁻¹H makes W_D(C) the real interval spanned by the pencil (H, D)
    let n = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = random_spd(n, &mut rng);
    let h = random_spd(n, &mut rng) * 2.0;
    let c = d.clone().try_inverse().unwrap() * &h;
    let cc = dense_from(&c.map(|v| C64::new(v, 0.0)));
    let dd = DenseMatrix::from_fn(n, n, |i, j| d[(i, j)]);
    let r = fov(&cc, &dd, 64, 100).unwrap();
    let l = d.clone().cholesky().unwrap().l();
    let li = l.clone().try_inverse().unwrap();
    let pencil = &li * &h * li.transpose();
    let eig = pencil.symmetric_eigenvalues();
    let lmin = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = eig.iter().cloned().fold(0.0, f64::max);
    assert!((r.dist_to_origin - lmin).abs() < 1e-10 * lmax, "{} vs {lmin}", r.dist_to_origin);
    assert!((r.dist_lower_bound - lmin).abs() < 1e-10 * lmax);
    assert!(r.boundary_points.iter().all(|p| p.im.abs() < 1e-10 * lmax));
    // ‖C‖_D equals the largest pencil eigenvalue for this self-adjoint C
    assert!((r.norm_d - lmax).abs() < 1e-9 * lmax);
    assert!(r.rayleigh_mismatch < 1e-10);
}

#[test]
fn random_rayleigh_quotients_respect_support() {
    let n = 15;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = random_spd(n, &mut rng);
    let c = DMatrix::<C64>::from_fn(n, n, |i, j| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.2 + if i == j { C64::new(3.0, 1.0) } else { C64::new(0.0, 0.0) }
    });
    let dd = DenseMatrix::from_fn(n, n, |i, j| d[(i, j)]);
    let r = fov(&dense_from(&c), &dd, 48, 100).unwrap();
    let dc = d.map(|v| C64::new(v, 0.0)) * &c;
    let dm = d.map(|v| C64::new(v, 0.0));
    let mut worst_norm = 0.0f64;
    for _ in 0..200 {
        let x = nalgebra::DVector::<C64>::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let q = x.dotc(&(&dc * &x)) / x.dotc(&(&dm * &x));
        for (j, s) in r.support.iter().enumerate() {
            let th = 2.0 * std::f64::consts::PI * j as f64 / r.n_angles as f64;
            assert!((C64::from_polar(1.0, th) * q).re <= s + 1e-10);
        }
        let cx = &c * &x;
        let ratio = (cx.dotc(&(&dm * &cx)).re / x.dotc(&(&dm * &x)).re).sqrt();
        worst_norm = worst_norm.max(ratio);
    }
    assert!(worst_norm <= r.norm_d * (1.0 + 1e-12));
    assert!(r.dist_to_origin >= r.dist_lower_bound - 1e-12);
    assert!(r.dist_to_origin > 0.0);
}

#[test]
fn fov_rejects_bad_inputs() {
    let id = DenseMatrix::<C64>::identity(4);
    let d = DenseMatrix::<f64>::identity(4);
    assert!(matches!(fov(&id, &d, 4, 10), Err(Error::InvalidArgument(_))));
    assert!(matches!(fov(&id, &d, 16, 3), Err(Error::SizeCap { .. })));
    let mut neg = DenseMatrix::<f64>::identity(4);
    neg[(2, 2)] = -1.0;
    assert!(matches!(fov(&id, &neg, 16, 10), Err(Error::NotPositiveDefinite(_))));
    let r = fov(&id, &d, 16, 10).unwrap();
    assert!((r.dist_to_origin - 1.0).abs() < 1e-12);
    assert!((r.norm_d - 1.0).abs() < 1e-12);
}

#[test]
fn hull_distance_examples() {
    let sq = [C64::new(1.0, 1.0), C64::new(2.0, 1.0), C64::new(2.0, 2.0), C64::new(1.0, 2.0)];
    assert!((hull_distance(&sq) - 2f64.sqrt()).abs() < 1e-15);
    let around = [C64::new(-1.0, -1.0), C64::new(1.0, -1.0), C64::new(0.0, 1.0)];
    assert_eq!(hull_distance(&around), 0.0);
    assert!((hull_distance(&[C64::new(3.0, 4.0)]) - 5.0).abs() < 1e-15);
    let seg = [C64::new(1.0, -1.0), C64::new(1.0, 1.0)];
    assert!((hull_distance(&seg) - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn elman_bound_dominates_weighted_gmres(seed in any::<u64>()) {
        let n = 20;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_spd(n, &mut rng);
        let c = DMatrix::<C64>::from_fn(n, n, |i, j| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.15
                + if i == j { C64::new(2.0, rng.gen_range(-1.0..1.0)) } else { C64::new(0.0, 0.0) }
        });
        let dd = DenseMatrix::from_fn(n, n, |i, j| d[(i, j)]);
        let cc = dense_from(&c);
        let r = fov(&cc, &dd, 64, 100).unwrap();
        prop_assume!(r.dist_lower_bound > 0.0);
        let eb = elman(r.norm_d, r.dist_lower_bound).unwrap();
        let mut trips = Vec::new();
        for i in 0..n { for j in 0..n { trips.push((i, j, d[(i, j)])); } }
        let dw = CsrMatrix::from_triplets(n, n, trips).unwrap();
        let b: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let cfg = KrylovConfig {
            tol: 1e-12,
            weight: Weight::Matrix(Arc::new(dw)),
            side: Side::Right,
            initial_guess: InitialGuess::Zero,
            ..Default::default()
        };
        let rep = gmres(&cc, &b, None, &cfg).unwrap();
        for (m, &h) in rep.residual_history.iter().enumerate() {
            prop_assert!(h <= eb.bound(m) * (1.0 + 1e-12), "m={} {} > {}", m, h, eb.bound(m));
        }
    }
}

#[test]
fn projection_identity_holds_for_two_level_as() {
    let space = EdgeSpace::new(Arc::new(Mesh::cube(4).unwrap()), BoundaryCondition::Pec);
    let coeffs = Coefficients::homogeneous(space.mesh().num_tets(), 2.0, 4.0);
    let sys = assemble(&space, &coeffs).unwrap();
    let a = Arc::new(sys.a.clone());
    let decomp = Decomposition::boxes(&space, 2, 1).unwrap().with_coarse(&space, 2).unwrap();
    let spec = PreconditionerSpec::new(Family::As, Some(CoarseCorrection::Additive), 4.0);
    let p = Schwarz::setup(&space, &coeffs, a, &decomp, &spec).unwrap();
    let probes = random_probes(sys.ndofs(), 10, 2);
    let gap = projection_consistency(&sys.a, &sys.dk, &decomp, &p, &probes, 1000).unwrap();
    assert!(gap < 1e-10, "{gap:e}");
}

#[test]
fn absorption_error_grows_with_absorption() {
    let rows = relative_error_sweep(2.0, &[0.0, 0.25, 0.5, 1.0], 2, 1000).unwrap();
    assert_eq!(rows[0].1, 0.0);
    for w in rows.windows(2) {
        assert!(w[1].1 > w[0].1);
    }
    assert!(matches!(relative_error_sweep(2.0, &[0.5], 3, 10), Err(Error::SizeCap { .. })));
}
