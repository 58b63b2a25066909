use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use zne_core::filtering::{filter_2d, filter_global, filter_runs_epsilon0, fit_gaussian2d, fit_gmm_1d, GmmConfig};

fn mixture(n: usize, seed: u64, w: f64, (m1, s1): (f64, f64), (m2, s2): (f64, f64)) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (Normal::new(m1, s1).unwrap(), Normal::new(m2, s2).unwrap());
    (0..n).map(|_| if rand::Rng::random::<f64>(&mut rng) < w { a.sample(&mut rng) } else { b.sample(&mut rng) }).collect()
}

fn cloud(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let (u, v): (f64, f64) = (z.sample(&mut rng), z.sample(&mut rng));
            (0.5 + 0.02 * u, 0.1 + 0.01 * (0.6 * u + 0.8 * v))
        })
        .collect()
}

#[test]
fn em_recovers_a_separated_mixture() {
    let data = mixture(500, 3, 0.9, (0.15, 0.02), (0.40, 0.03));
    let fit = fit_gmm_1d(&data, &GmmConfig::default()).unwrap();
    assert_eq!(fit.components.len(), 2);
    let p = fit.primary();
    let s = &fit.components[1 - fit.primary_index];
    assert!((p.mean - 0.15).abs() < 0.01 && (s.mean - 0.40).abs() < 0.01);
    assert!((p.weight - 0.9).abs() < 0.05);
}

#[test]
fn unimodal_data_keeps_one_component() {
    let data = mixture(200, 5, 1.0, (0.3, 0.01), (0.0, 1.0));
    let fit = fit_gmm_1d(&data, &GmmConfig::default()).unwrap();
    assert_eq!(fit.components.len(), 1);
    let out = filter_runs_epsilon0(&data);
    // Only the 2σ band acts: about 5% removed.
    assert!(out.retained_count() >= 180, "{}", out.retained_count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn em_log_likelihood_never_decreases(seed in any::<u64>(), w in 0.5f64..0.95, gap in 0.0f64..0.5, n in 20usize..300) {
        let data = mixture(n, seed, w, (0.1, 0.02), (0.1 + gap, 0.03));
        let cfg = GmmConfig { select_by_bic: false, ..GmmConfig::default() };
        let fit = fit_gmm_1d(&data, &cfg).unwrap();
        for pair in fit.loglik_trace.windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-9 * pair[0].abs().max(1.0), "{:?}", pair);
        }
    }

    #[test]
    fn mahalanobis_is_affine_invariant(seed in any::<u64>(), n in 8usize..60,
        m in prop::array::uniform4(-3.0f64..3.0), shift in prop::array::uniform2(-5.0f64..5.0)) {
        let det = m[0] * m[3] - m[1] * m[2];
        prop_assume!(det.abs() > 0.1);
        let pts = cloud(n, seed);
        let moved: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (m[0] * x + m[1] * y + shift[0], m[2] * x + m[3] * y + shift[1])).collect();
        let (g, h) = (fit_gaussian2d(&pts), fit_gaussian2d(&moved));
        prop_assume!(g.is_ok() && h.is_ok());
        let (g, h) = (g.unwrap(), h.unwrap());
        for (p, q) in pts.iter().zip(&moved) {
            let (a, b) = (g.mahalanobis_sq(p.0, p.1), h.mahalanobis_sq(q.0, q.1));
            prop_assert!((a - b).abs() < 1e-6 * (1.0 + a), "{} vs {}", a, b);
        }
    }

    #[test]
    fn filters_never_add_points(seed in any::<u64>(), n in 0usize..80, gap in 0.0f64..0.4) {
        let data = mixture(n, seed, 0.85, (0.1, 0.02), (0.1 + gap, 0.02));
        let out = filter_runs_epsilon0(&data);
        prop_assert_eq!(out.reasons.len(), n);
        prop_assert!(out.retained_count() <= n);
        let groups = vec![data.clone(), data.iter().map(|v| v * 2.0).collect()];
        for (o, g) in filter_global(&groups).iter().zip(&groups) {
            prop_assert_eq!(o.reasons.len(), g.len());
        }
        let pts = cloud(n, seed);
        let (o, _) = filter_2d(&pts);
        prop_assert_eq!(o.reasons.len(), n);
        prop_assert!(o.retained_count() <= n);
    }
}
