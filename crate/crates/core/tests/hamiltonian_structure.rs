mod common;

use common::{random_field, random_problem, rng};
use nalgebra::DVector;
use proptest::prelude::*;
use varjacobi_core::frame::integrate_frame;
use varjacobi_core::grassmann::frame_jet;
use varjacobi_core::hamiltonian::{legendre_transform, zeroing_transform};
use varjacobi_core::{HamiltonianSystem, JetVector, QuadraticFunctional};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hamiltonian_is_infinitesimally_symplectic(seed in any::<u64>(), order in 1usize..=3, dim in 1usize..=3) {
        let prob = random_problem(seed, order, dim, (-0.5, 1.0), 0.0);
        let system = HamiltonianSystem::new(&prob).unwrap();
        let residual = system.check_infinitesimally_symplectic(33).unwrap();
        prop_assert!(residual < 1e-12, "residual {residual}");
    }

    #[test]
    fn zeroing_transform_reproduces_the_integrand(seed in any::<u64>(), order in 1usize..=3, dim in 1usize..=3, t in -0.5f64..1.0) {
        let prob = random_problem(seed, order, dim, (-0.5, 1.0), 0.0);
        let system = HamiltonianSystem::new(&prob).unwrap();
        let (a, b, c) = system.blocks(t).unwrap();
        let mut rng = rng(seed ^ 3);
        let jet = JetVector::new((0..=order).map(|_| DVector::from_fn(dim, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0))).collect()).unwrap();
        let (y, z) = zeroing_transform(&prob, &jet, t).unwrap();
        let two_l = 2.0 * prob.density(t, &jet);
        let lhs = z.dot(&(&b * &z)) + y.dot(&(&c * &y));
        prop_assert!((lhs - two_l).abs() < 1e-10 * (1.0 + two_l.abs()), "{lhs} vs {two_l}");
        // ŷ′ = Aŷ + Bẑ
        let y_prime = jet.stacked(1, order + 1);
        let transported = &a * &y + &b * &z;
        prop_assert!((y_prime - &transported).norm() < 1e-10 * (1.0 + transported.norm()));
    }

    #[test]
    fn legendre_transform_of_a_solution_is_its_momentum(seed in any::<u64>(), order in 1usize..=3, dim in 1usize..=2, column in 0usize..12, position in 0.0f64..1.0) {
        let prob = random_problem(seed, order, dim, (0.0, 1.0), 0.0);
        let system = HamiltonianSystem::new(&prob).unwrap();
        let traj = integrate_frame(&system, 1.0 / 256.0).unwrap();
        let index = ((position * (traj.len() - 1) as f64) as usize).min(traj.len() - 1);
        let t = traj.time(index);
        let m = order * dim;
        let column = column % (2 * m);
        let stack = frame_jet(&traj, index, 2 * order - 1).unwrap();
        let jet = JetVector::new(stack.jets().iter().map(|d| d.row(column).transpose()).collect()).unwrap();
        let (y, z) = legendre_transform(&prob, &jet, t).unwrap();
        let psi = traj.frame(index);
        let (y_frame, z_frame) = (psi.view((0, column), (m, 1)), psi.view((m, column), (m, 1)));
        let scale = 1.0 + psi.column(column).norm();
        prop_assert!((&y - y_frame).norm() < 1e-9 * scale);
        prop_assert!((&z - z_frame).norm() < 1e-8 * scale, "{}", (&z - z_frame).norm());
    }

    #[test]
    fn functional_is_a_quadratic_form(seed in any::<u64>(), order in 1usize..=2, dim in 1usize..=2) {
        let interval = (0.0, 1.0);
        let prob = random_problem(seed, order, dim, interval, 0.0);
        let mut rng = rng(seed ^ 4);
        let (u, v) = (random_field(&mut rng, dim, order, interval), random_field(&mut rng, dim, order, interval));
        let sum = varjacobi_core::TestField::new(u.base() + v.base(), order, interval).unwrap();
        let q = |f: &varjacobi_core::TestField| varjacobi_core::picone::functional_value(&prob, f);
        let cross = varjacobi_core::picone::bilinear_value(&prob, u.polynomial(), v.polynomial());
        let expected = q(&u) + q(&v) + 2.0 * cross;
        prop_assert!((q(&sum) - expected).abs() < 1e-9 * (1.0 + expected.abs()));
    }
}
