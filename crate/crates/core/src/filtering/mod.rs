//! Outlier filters over runs and samples.
//!
//! Every filter returns one retention flag and one reason per input; nothing is removed from
//! the caller's data. Inputs smaller than the minimum group size pass through unfiltered.

mod gaussian2d;
mod gmm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gaussian2d::{fit_gaussian2d, Gaussian2D, RHO_LIMIT};
pub use gmm::{fit_gmm_1d, GaussianComponent, GmmConfig, MixtureFit};

/// Fewest runs the ε₀ filter acts on.
pub const MIN_RUNS: usize = 4;
/// Fewest samples per λ group the global and 2D filters act on.
pub const MIN_GROUP: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("need at least {need} points, got {got}")]
    TooFew { got: usize, need: usize },
    #[error("all points are identical")]
    Degenerate,
    #[error("non-finite input")]
    NonFinite,
    #[error("zero variance along one axis")]
    ZeroVariance,
    #[error("singular covariance (rho = {0})")]
    SingularCovariance(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    Kept,
    SecondaryComponent,
    TwoSigma,
    /// Retained because the group was too small or too degenerate to model.
    DegeneratePassthrough,
}

impl FilterReason {
    pub fn name(self) -> &'static str {
        match self {
            FilterReason::Kept => "kept",
            FilterReason::SecondaryComponent => "secondary_component",
            FilterReason::TwoSigma => "two_sigma",
            FilterReason::DegeneratePassthrough => "degenerate_passthrough",
        }
    }

    pub fn retained(self) -> bool {
        matches!(self, FilterReason::Kept | FilterReason::DegeneratePassthrough)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub reasons: Vec<FilterReason>,
    pub model: Option<MixtureFit>,
}

impl FilterOutcome {
    pub fn passthrough(n: usize) -> FilterOutcome {
        FilterOutcome { reasons: vec![FilterReason::DegeneratePassthrough; n], model: None }
    }

    pub fn retained(&self) -> Vec<bool> {
        self.reasons.iter().map(|r| r.retained()).collect()
    }

    pub fn retained_count(&self) -> usize {
        self.reasons.iter().filter(|r| r.retained()).count()
    }

    pub fn is_degenerate(&self) -> bool {
        self.reasons.contains(&FilterReason::DegeneratePassthrough)
    }
}

/// Secondary-component membership plus a 2σ band around the primary component.
///
/// A single-component fit (unimodal data) reduces to the 2σ band alone.
pub fn gmm_two_sigma(values: &[f64], min_size: usize, config: &GmmConfig) -> FilterOutcome {
    if values.len() < min_size.max(2 * config.components) {
        log::warn!("filter input of {} points below minimum {}; passing through", values.len(), min_size);
        return FilterOutcome::passthrough(values.len());
    }
    let fit = match fit_gmm_1d(values, config) {
        Ok(fit) => fit,
        // Identical values: a zero-width Gaussian keeps all of them.
        Err(_) => return FilterOutcome::passthrough(values.len()),
    };
    let primary = *fit.primary();
    let reasons = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if fit.components.len() > 1 && fit.primary_responsibility(i) <= 0.5 {
                FilterReason::SecondaryComponent
            } else if (v - primary.mean).abs() > 2.0 * primary.std {
                FilterReason::TwoSigma
            } else {
                FilterReason::Kept
            }
        })
        .collect();
    FilterOutcome { reasons, model: Some(fit) }
}

/// Run-level filter on the measured base error strengths, one value per run.
pub fn filter_runs_epsilon0(eps0: &[f64]) -> FilterOutcome {
    gmm_two_sigma(eps0, MIN_RUNS, &GmmConfig::default())
}

/// Sample-level filter applied independently to each λ group of expectation values.
pub fn filter_global(groups: &[Vec<f64>]) -> Vec<FilterOutcome> {
    groups.iter().map(|g| gmm_two_sigma(g, MIN_GROUP, &GmmConfig::default())).collect()
}

/// Fits a 2D Gaussian to the (value, ε) points of one group and keeps those inside 2σ.
pub fn filter_2d(points: &[(f64, f64)]) -> (FilterOutcome, Option<Gaussian2D>) {
    if points.len() < MIN_GROUP {
        return (FilterOutcome::passthrough(points.len()), None);
    }
    match fit_gaussian2d(points) {
        Ok(g) => {
            let reasons = points
                .iter()
                .map(|&(x, y)| if g.within_two_sigma(x, y) { FilterReason::Kept } else { FilterReason::TwoSigma })
                .collect();
            (FilterOutcome { reasons, model: None }, Some(g))
        }
        Err(e) => {
            log::debug!("2D fit degenerate ({e}); passing group through");
            (FilterOutcome::passthrough(points.len()), None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_inputs_pass_through() {
        let out = filter_runs_epsilon0(&[0.1, 0.2, 5.0]);
        assert_eq!(out.retained(), vec![true; 3]);
        assert!(out.is_degenerate());
        let (o, g) = filter_2d(&[(0.0, 1.0); 5]);
        assert!(g.is_none() && o.retained_count() == 5);
    }

    #[test]
    fn identical_values_kept() {
        let out = filter_runs_epsilon0(&[0.1; 12]);
        assert_eq!(out.retained_count(), 12);
    }

    #[test]
    fn outlier_cluster_removed() {
        let mut e: Vec<f64> = (0..18).map(|i| 0.05 + 0.0005 * (i % 6) as f64).collect();
        e.extend([0.125, 0.126]);
        let out = filter_runs_epsilon0(&e);
        assert!(!out.retained()[18] && !out.retained()[19]);
        assert!(out.retained_count() >= 14);
    }

    #[test]
    fn reason_names() {
        assert_eq!(FilterReason::SecondaryComponent.name(), "secondary_component");
        assert!(FilterReason::DegeneratePassthrough.retained());
        assert!(!FilterReason::TwoSigma.retained());
    }
}
