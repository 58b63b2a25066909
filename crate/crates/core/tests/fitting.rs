use proptest::prelude::*;
use zne_core::extrapolation::{fit_exponential_with, fit_linear, FitModel, FitOptions};

/// Closed-form simple regression, written out from the normal equations.
fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 * p.0, b + p.0 * p.1));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

fn unguarded() -> FitOptions {
    FitOptions { curvature_alpha: None, max_initial_decay: None, value_range: None, ..FitOptions::default() }
}

proptest! {
    #[test]
    fn linear_fit_matches_normal_equations(pts in prop::collection::vec((0.0f64..1.0, -1.0f64..1.0), 3..40)) {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let r = fit_linear(&pts).unwrap();
        let (_, intercept) = ols(&pts);
        prop_assert!((r.zero_noise_value - intercept).abs() < 1e-8 * (1.0 + intercept.abs()));
    }

    #[test]
    fn exact_exponentials_are_recovered(a in 0.1f64..0.8, b in 0.05f64..0.8, c in 0.0f64..0.3) {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 3.5, 5.0].iter().map(|&x| (x, c + a * (-b * x).exp())).collect();
        let r = fit_exponential_with(&pts, &unguarded()).unwrap();
        prop_assert_eq!(r.model(), FitModel::Exponential);
        prop_assert!((r.zero_noise_value - (a + c)).abs() < 1e-5, "{:?}", r);
    }

    /// The curvature test never rejects noiseless exponential data with visible curvature.
    #[test]
    fn default_guards_keep_clean_curvature(a in 0.3f64..0.8, b in 0.1f64..0.5) {
        let pts: Vec<(f64, f64)> = [1.0, 3.0, 5.0].iter().flat_map(|&x| [(x, a * (-b * x).exp()); 4]).collect();
        let r = fit_exponential_with(&pts, &FitOptions::default()).unwrap();
        prop_assert_eq!(r.model(), FitModel::Exponential);
        prop_assert!((r.zero_noise_value - a).abs() < 1e-6);
    }

    #[test]
    fn fits_never_fail_on_finite_input(pts in prop::collection::vec((0.0f64..10.0, -2.0f64..2.0), 1..30)) {
        let r = fit_exponential_with(&pts, &FitOptions::default()).unwrap();
        prop_assert!(r.zero_noise_value.is_finite());
        prop_assert!(fit_linear(&pts).unwrap().zero_noise_value.is_finite());
    }
}
