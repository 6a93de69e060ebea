use num_complex::Complex64;
use pointerlab::classical::{self, ClassicalNetwork};
use pointerlab::linalg::CMatrix;
use pointerlab::{GridConfig, PointerSpec, QuantumScenario};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quantum(seed: u64, n: usize, dynamics: bool) -> QuantumScenario {
    QuantumScenario::random(n, dynamics, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quasi_probabilities_marginalize(seed in any::<u64>(), n in 2usize..7) {
        let sc = quantum(seed, n, true);
        let q = sc.quasi_probabilities();
        prop_assert!((q.total() - 1.0).abs() < 1e-12);
        for (a, b) in q.node_marginals().iter().zip(sc.node_probabilities()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in q.arrival_marginals().iter().zip(sc.arrival_probabilities()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    // Σ_j P_j Z_j = Y: post-selected shifts average back to the unconditional one
    #[test]
    fn shifts_average_to_mean(seed in any::<u64>(), n in 2usize..6) {
        let sc = quantum(seed, n, true);
        let b = sc.b_values().to_vec();
        let y = sc.mean_shift_y(&b).unwrap();
        let total: f64 = sc.postselected_shifts(&b).unwrap().iter().map(|(_, p, z)| p * z).sum();
        prop_assert!((total - y).abs() < 1e-10);
        prop_assert!((sc.expectation(&b).unwrap() - y).abs() < 1e-12);
    }

    #[test]
    fn weak_value_routes_agree_without_dynamics(seed in any::<u64>(), n in 2usize..6) {
        let sc = quantum(seed, n, false);
        for (j, p) in sc.arrival_probabilities().iter().enumerate() {
            prop_assume!(*p > 1e-3);
            let w = sc.weak_value(j).unwrap();
            let me = sc.weak_value_matrix_element(j).unwrap();
            prop_assert!((w - me).norm() < 1e-10 * w.norm().max(1.0));
        }
    }

    #[test]
    fn quantum_marginal_is_causal(seed in any::<u64>(), width in 0.5f64..5.0) {
        let sc = quantum(seed, 3, true);
        let p1 = PointerSpec::new(sc.b_values().to_vec(), width).unwrap();
        let p2 = PointerSpec::new(sc.f_values().to_vec(), 0.1).unwrap();
        let cfg = GridConfig { points: 801, ..GridConfig::default() };
        let m = sc.causality_marginal(&p1, &p2, &cfg).unwrap();
        let d = sc.density_one_pointer_on(&p1, &m.grid).unwrap();
        prop_assert!(m.sup_distance(&d).unwrap() < 1e-8);
        prop_assert!((d.integral() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn hamiltonian_evolution_is_unitary(seed in any::<u64>(), n in 1usize..6, t in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = CMatrix::random_unitary(n, &mut rng);
        let d: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64 - 1.5, 0.0)).collect();
        let h = &(&u * &CMatrix::diagonal(&d)) * &u.adjoint();
        let v = CMatrix::unitary_from_hamiltonian(&h, t).unwrap();
        prop_assert!(v.unitarity_deviation() < 1e-10);
    }

    #[test]
    fn classical_shifts_recover_paths(seed in any::<u64>(), n in 2usize..6) {
        let net = ClassicalNetwork::random(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let exact = classical::path_probabilities(&net);
        let arrivals = exact.arrivals();
        prop_assume!(arrivals.iter().all(|p| *p > 1e-9));
        let mut shifts = vec![vec![0.0; n]; n];
        for i0 in 0..n {
            let b: Vec<f64> = (0..n).map(|i| if i == i0 { 1.0 } else { 0.0 }).collect();
            for (j, row) in shifts.iter_mut().enumerate() {
                row[i0] = classical::conditional_shift_z(&net, &b, j).unwrap();
            }
        }
        let rec = classical::recover_path_probabilities(&shifts, &arrivals).unwrap();
        prop_assert!(rec.max_abs_diff(&exact) < 1e-12);
        // z_j is a convex combination of the B_i
        let b: Vec<f64> = (0..n).map(|i| i as f64 * 0.7 - 1.0).collect();
        let (lo, hi) = (b[0], b[n - 1]);
        for j in 0..n {
            let z = classical::conditional_shift_z(&net, &b, j).unwrap();
            prop_assert!(z >= lo - 1e-12 && z <= hi + 1e-12);
        }
    }
}
