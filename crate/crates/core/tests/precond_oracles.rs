use std::sync::Arc;

mod common;

use common::precond::{fixture, oracle, Fixture};
use maxwell_dd::decomp::Decomposition;
use maxwell_dd::fem::{assemble, BoundaryCondition, Coefficients, EdgeSpace};
use maxwell_dd::linalg::{LinearOperator, C64};
use maxwell_dd::mesh::Mesh;
use maxwell_dd::precond::{CoarseCorrection, CorrectionMatrix, Family, PreconditionerSpec, Schwarz};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn check(fx: &Fixture, spec: &PreconditionerSpec) {
    let p = Schwarz::setup(&fx.space, &fx.coeffs, fx.a.clone(), &fx.decomp, spec).unwrap();
    let o = oracle(fx, spec);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..4 {
        let v = random_vec(fx.space.ndofs(), &mut rng);
        let got = p.apply(&v).unwrap();
        let want = &o * nalgebra::DVector::from_vec(v);
        let err: f64 = got.iter().zip(want.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * want.norm(), "{}: error {err:e} vs {:e}", spec.id(), want.norm());
    }
}

const FAMILIES: [Family; 3] = [Family::As, Family::Ras, Family::ImpRas];
const LEVELS: [Option<CoarseCorrection>; 4] =
    [None, Some(CoarseCorrection::Additive), Some(CoarseCorrection::Hybrid), Some(CoarseCorrection::Adef1)];

#[test]
fn every_variant_matches_dense_oracle_pec() {
    let fx = fixture(BoundaryCondition::Pec, 4.0);
    for fam in FAMILIES {
        for lev in LEVELS {
            check(&fx, &PreconditionerSpec::new(fam, lev, 4.0));
        }
    }
}

#[test]
fn every_variant_matches_dense_oracle_impedance_with_shifted_absorption() {
    // preconditioner built at a different absorption than the problem
    let fx = fixture(BoundaryCondition::Impedance, 2.0);
    for fam in FAMILIES {
        for lev in LEVELS {
            check(&fx, &PreconditionerSpec::new(fam, lev, 4.0));
        }
    }
    let mut spec = PreconditionerSpec::new(Family::Ras, Some(CoarseCorrection::Hybrid), 4.0);
    spec.correction_matrix = CorrectionMatrix::Preconditioner;
    check(&fx, &spec);
}

#[test]
fn exact_coarse_space_makes_corrections_exact() {
    let space = EdgeSpace::new(Arc::new(Mesh::cube(2).unwrap()), BoundaryCondition::Pec);
    let coeffs = Coefficients::homogeneous(space.mesh().num_tets(), 1.0, 1.0);
    let a = Arc::new(assemble(&space, &coeffs).unwrap().a);
    let decomp = Decomposition::boxes(&space, 2, 1).unwrap().with_coarse(&space, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_vec(space.ndofs(), &mut rng);
    let b = a.apply(&x).unwrap();
    for fam in FAMILIES {
        for lev in [CoarseCorrection::Hybrid, CoarseCorrection::Adef1] {
            let p = Schwarz::setup(&space, &coeffs, a.clone(), &decomp, &PreconditionerSpec::new(fam, Some(lev), 1.0)).unwrap();
            let y = p.apply(&b).unwrap();
            let err: f64 = y.iter().zip(&x).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-9, "{fam:?} {lev:?}: {err:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn preconditioners_are_linear(seed in any::<u64>(), fam in 0usize..3, lev in 0usize..4, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let space = EdgeSpace::new(Arc::new(Mesh::cube(2).unwrap()), BoundaryCondition::Impedance);
        let coeffs = Coefficients::homogeneous(space.mesh().num_tets(), 1.0, 1.0);
        let a = Arc::new(assemble(&space, &coeffs).unwrap().a);
        let decomp = Decomposition::boxes(&space, 2, 1).unwrap().with_coarse(&space, 1).unwrap();
        let p = Schwarz::setup(&space, &coeffs, a, &decomp, &PreconditionerSpec::new(FAMILIES[fam], LEVELS[lev], 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_vec(space.ndofs(), &mut rng);
        let y = random_vec(space.ndofs(), &mut rng);
        let alpha = C64::new(re, im);
        let comb: Vec<C64> = x.iter().zip(&y).map(|(u, v)| alpha * u + v).collect();
        let lhs = p.apply(&comb).unwrap();
        let px = p.apply(&x).unwrap();
        let py = p.apply(&y).unwrap();
        let scale = lhs.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (alpha * px[i] + py[i])).norm() <= 1e-11 * scale);
        }
    }
}
