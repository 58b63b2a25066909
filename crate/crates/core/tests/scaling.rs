mod common;

use common::{depolarize_pair, noisy_density, Mat};
use num_complex::Complex64;
use proptest::prelude::*;
use zne_core::scaling::{build_plan, epsilon_from_p0, exponential_factors, lambda_max, p0_from_epsilon, ErrorEstimate, EstimateSource};
use zne_core::Benchmark;

/// Survival of a state that is replaced by the maximally mixed state with probability λ, for
/// the λ whose entanglement fidelity is that of two halves of average infidelity ε.
fn replacement_channel_p0(epsilon: f64, q: usize) -> f64 {
    let d = (1usize << q) as f64;
    // Average infidelity ε ↔ entanglement fidelity 1 − ε(d+1)/d per half.
    let fe_half = 1.0 - epsilon * (d + 1.0) / d;
    let fe = fe_half * fe_half;
    let lambda = (1.0 - fe) / (1.0 - 1.0 / (d * d));
    (1.0 - lambda) + lambda / d
}

#[test]
fn estimator_inverts_the_replacement_channel() {
    for q in 1..=8 {
        for i in 0..=10 {
            let eps = 0.05 * i as f64;
            let p0 = replacement_channel_p0(eps, q);
            assert!((p0 - p0_from_epsilon(eps, q)).abs() < 1e-12);
            let back = epsilon_from_p0(p0, q).unwrap();
            assert!((back - eps).abs() < 1e-9, "q={q} ε={eps}: {back}");
        }
    }
}

#[test]
fn estimator_domain() {
    assert!(epsilon_from_p0(0.1, 1).is_err());
    assert!(epsilon_from_p0(1.5, 2).is_err());
    assert_eq!(epsilon_from_p0(1.0, 3).unwrap(), 0.0);
}

/// Exact survival of a benchmark followed by its inverse, under the reference channel, gives
/// an ε that grows with the depolarizing rate.
#[test]
fn exact_survival_maps_to_increasing_epsilon() {
    let c = Benchmark::Grover.build().circuit;
    let mirrored = c.compose(&c.invert().unwrap()).unwrap();
    let mut last = -1.0;
    for p in [0.0, 0.005, 0.01, 0.02, 0.05] {
        let rho = noisy_density(&mirrored, |_, _| p);
        let eps = epsilon_from_p0(rho[0][0].re, 3).unwrap();
        assert!(eps > last);
        last = eps;
    }
}

#[test]
fn reference_channel_sanity() {
    // Full depolarization of both qubits of a 2-qubit pure state gives I/4.
    let zero: Mat = (0..4).map(|i| (0..4).map(|j| Complex64::new((i == 0 && j == 0) as u8 as f64, 0.0)).collect()).collect();
    let out = depolarize_pair(&zero, 0, 1, 1.0, 2);
    for (i, row) in out.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((v - Complex64::new(if i == j { 0.25 } else { 0.0 }, 0.0)).norm() < 1e-15);
        }
    }
}

proptest! {
    #[test]
    fn p0_round_trip(eps in 0.0f64..0.5, q in 1usize..10) {
        let back = epsilon_from_p0(p0_from_epsilon(eps, q), q).unwrap();
        prop_assert!((back - eps).abs() < 1e-9);
    }

    #[test]
    fn lambda_max_is_monotone(e1 in 1e-4f64..1.0, e2 in 1e-4f64..1.0, x1 in 0.01f64..1.0, x2 in 0.01f64..1.0, n in 1usize..40, clamp in any::<bool>()) {
        let (elo, ehi) = (e1.min(e2), e1.max(e2));
        let (xlo, xhi) = (x1.min(x2), x1.max(x2));
        // Non-increasing in ε₀ and non-decreasing in ξ.
        prop_assert!(lambda_max(elo, x1, 3, n, clamp).unwrap().value >= lambda_max(ehi, x1, 3, n, clamp).unwrap().value);
        prop_assert!(lambda_max(e1, xhi, 3, n, clamp).unwrap().value >= lambda_max(e1, xlo, 3, n, clamp).unwrap().value);
    }

    #[test]
    fn factors_are_geometric(lm in 1.0f64..100.0, k in 2usize..8) {
        let f = exponential_factors(lm, k).unwrap();
        prop_assert_eq!(f.len(), k);
        prop_assert!((f[0] - 1.0).abs() < 1e-15 && (f[k - 1] - lm).abs() < 1e-9 * lm);
        for w in f.windows(3) {
            prop_assert!((w[1] * w[1] - w[0] * w[2]).abs() < 1e-9 * w[2] * w[2]);
        }
    }

    #[test]
    fn plans_are_increasing_realizable_and_start_at_one(eps in 1e-3f64..0.5, xi in 0.02f64..0.6, n in 1usize..30) {
        let est = ErrorEstimate { epsilon0: eps, source: EstimateSource::Measured, p0: None, qubits: 3 };
        let plan = build_plan(n, &est, xi, 3, true).unwrap();
        prop_assert_eq!(plan.lambdas[0].to_f64(), 1.0);
        prop_assert!(plan.lambdas.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(plan.lambdas.iter().all(|l| l.total_insertions(n).is_some()));
        prop_assert_eq!(plan.lambdas.len(), 3);
    }
}
