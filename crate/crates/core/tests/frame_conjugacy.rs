mod common;

use std::f64::consts::PI;

use common::{harmonic, random_matrix, random_problem, rng};
use nalgebra::DMatrix;
use proptest::prelude::*;
use varjacobi_core::conjugacy::{find_conjugate_points, positivity_verdict};
use varjacobi_core::frame::{integrate_frame, integrate_frame_with_vertical};
use varjacobi_core::picone::frame_symmetry_residuals;
use varjacobi_core::{ConjugacyOptions, HamiltonianSystem, Verdict};

fn points(result: &varjacobi_core::ConjugacyResult) -> Vec<f64> {
    result.sign_change_points().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frame_stays_lagrangian_and_symplectic(seed in any::<u64>(), order in 1usize..=3, dim in 1usize..=2) {
        let prob = random_problem(seed, order, dim, (0.0, 1.0), 0.0);
        let traj = integrate_frame(&HamiltonianSystem::new(&prob).unwrap(), 1.0 / 512.0).unwrap();
        let residuals = frame_symmetry_residuals(&traj);
        prop_assert!(residuals.lagrangian_scaled < 1e-9, "{}", residuals.lagrangian_scaled);
        let scale = traj.frames().iter().map(|f| f.norm_squared()).fold(1.0, f64::max);
        prop_assert!(traj.symplectic_drift() < 1e-9 * scale);
    }

    #[test]
    fn conjugate_points_ignore_the_vertical_normalization(seed in any::<u64>(), dim in 1usize..=2) {
        let prob = random_problem(seed, 1, dim, (0.0, 2.0), 25.0);
        let system = HamiltonianSystem::new(&prob).unwrap();
        let step = 2.0 / 1024.0;
        let opts = ConjugacyOptions::default();
        let reference = points(&find_conjugate_points(&integrate_frame(&system, step).unwrap(), &opts).unwrap());
        let mut rng = rng(seed ^ 5);
        let random = DMatrix::identity(dim, dim) + random_matrix(&mut rng, dim, dim, 0.3);
        for vertical in [random, -DMatrix::identity(dim, dim)] {
            let traj = integrate_frame_with_vertical(&system, step, &vertical).unwrap();
            let moved = points(&find_conjugate_points(&traj, &opts).unwrap());
            prop_assert_eq!(moved.len(), reference.len());
            for (p, q) in moved.iter().zip(&reference) {
                prop_assert!((p - q).abs() < 1e-8, "{p} vs {q}");
            }
        }
    }
}

#[test]
fn harmonic_zeros_sit_at_multiples_of_pi_over_omega() {
    for omega in [1.0, 2.0, 0.5] {
        let b = 7.0 / omega;
        let result = positivity_verdict(&harmonic(omega, (0.0, b)), None, &ConjugacyOptions::default()).unwrap();
        assert_eq!(result.verdict, Verdict::ConjugatePointFound);
        let found = points(&result);
        let expected: Vec<f64> = (1..).map(|j| j as f64 * PI / omega).take_while(|&t| t < b).collect();
        assert_eq!(found.len(), expected.len(), "omega {omega}: {found:?}");
        for (p, q) in found.iter().zip(&expected) {
            assert!((p - q).abs() < 1e-8, "omega {omega}: {p} vs {q}");
        }
    }
}

#[test]
fn short_harmonic_interval_is_certified() {
    let result = positivity_verdict(&harmonic(1.0, (0.0, 3.0)), None, &ConjugacyOptions::default()).unwrap();
    assert_eq!(result.verdict, Verdict::PositiveDefiniteCertified);
    assert!(result.conjugate_points.is_empty());
}
