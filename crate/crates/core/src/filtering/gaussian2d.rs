//! Moment fit of a correlated 2D Gaussian and the 2σ Mahalanobis ellipse.

use serde::{Deserialize, Serialize};

use super::FilterError;

/// |ρ| at or above this is treated as a singular covariance.
pub const RHO_LIMIT: f64 = 1.0 - 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian2D {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho: f64,
}

impl Gaussian2D {
    pub fn new(mu_x: f64, mu_y: f64, sigma_x: f64, sigma_y: f64, rho: f64) -> Result<Gaussian2D, FilterError> {
        if !(sigma_x > 0.0 && sigma_y > 0.0) {
            return Err(FilterError::ZeroVariance);
        }
        if !(rho.abs() < RHO_LIMIT) {
            return Err(FilterError::SingularCovariance(rho));
        }
        Ok(Gaussian2D { mu_x, mu_y, sigma_x, sigma_y, rho })
    }

    /// Squared Mahalanobis distance of (x, y).
    pub fn mahalanobis_sq(&self, x: f64, y: f64) -> f64 {
        let u = (x - self.mu_x) / self.sigma_x;
        let v = (y - self.mu_y) / self.sigma_y;
        (u * u - 2.0 * self.rho * u * v + v * v) / (1.0 - self.rho * self.rho)
    }

    /// Inside the 2σ region, d² ≤ 4.
    pub fn within_two_sigma(&self, x: f64, y: f64) -> bool {
        self.mahalanobis_sq(x, y) <= 4.0
    }
}

/// Sample means, sample standard deviations (n − 1) and Pearson correlation.
pub fn fit_gaussian2d(points: &[(f64, f64)]) -> Result<Gaussian2D, FilterError> {
    if points.len() < 3 {
        return Err(FilterError::TooFew { got: points.len(), need: 3 });
    }
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(FilterError::NonFinite);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
        sxy += (x - mx) * (y - my);
    }
    // Spread below rounding noise of the mean counts as none.
    let flat = |ss: f64, m: f64| ss <= n * (1e-14 * m.abs()).powi(2);
    if flat(sxx, mx) || flat(syy, my) {
        return Err(FilterError::ZeroVariance);
    }
    let rho = sxy / (sxx * syy).sqrt();
    Gaussian2D::new(mx, my, (sxx / (n - 1.0)).sqrt(), (syy / (n - 1.0)).sqrt(), rho)
}
