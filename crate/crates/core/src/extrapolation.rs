//! Zero-noise extrapolation fits.
//!
//! Exponential fits c + a·e^(−b·x) (b ≥ 0) are used over scale factors, linear fits over
//! measured error strengths. Unidentifiable inputs fall back to simpler models and are
//! flagged `degenerate` instead of failing.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FitError {
    #[error("no samples to fit")]
    Empty,
    #[error("sample {0} has a non-finite or negative coordinate")]
    BadSample(usize),
}

/// One measured point of a run. `x` is λ or a measured ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub value: f64,
    pub run_id: u64,
    pub twirl_id: u32,
    pub retained: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Exponential,
    Linear,
    MeanFallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FitParams {
    Exponential { a: f64, b: f64, c: f64 },
    Linear { slope: f64, intercept: f64 },
    MeanFallback { mean: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FitParams,
    pub zero_noise_value: f64,
    pub residual_rms: f64,
    pub degenerate: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn model(&self) -> FitModel {
        match self.params {
            FitParams::Exponential { .. } => FitModel::Exponential,
            FitParams::Linear { .. } => FitModel::Linear,
            FitParams::MeanFallback { .. } => FitModel::MeanFallback,
        }
    }

    /// Fitted value at `x`.
    pub fn predict(&self, x: f64) -> f64 {
        match self.params {
            FitParams::Exponential { a, b, c } => c + a * (-b * x).exp(),
            FitParams::Linear { slope, intercept } => intercept + slope * x,
            FitParams::MeanFallback { mean } => mean,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub step_tolerance: f64,
    /// Significance level of the lack-of-fit F-test that decides whether the data show
    /// curvature beyond a straight line. `None` accepts any converged exponential.
    pub curvature_alpha: Option<f64>,
    /// Attainable range of the observable. An exponential whose zero-noise value falls
    /// outside it is rejected in favour of the linear fallback.
    #[serde(default)]
    pub value_range: Option<(f64, f64)>,
    /// Largest accepted b·x_min, the e-folds the fitted curve decays between zero noise and
    /// the least-noisy sample. Beyond it, extrapolating back multiplies the noise at x_min by
    /// more than e^limit.
    #[serde(default)]
    pub max_initial_decay: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> FitOptions {
        FitOptions { max_iterations: 200, step_tolerance: 1e-10, curvature_alpha: Some(0.01), value_range: None, max_initial_decay: Some(1.0) }
    }
}

fn validate(points: &[(f64, f64)]) -> Result<(), FitError> {
    if points.is_empty() {
        return Err(FitError::Empty);
    }
    match points.iter().position(|&(x, y)| !(x.is_finite() && y.is_finite() && x >= 0.0)) {
        Some(i) => Err(FitError::BadSample(i)),
        None => Ok(()),
    }
}

fn distinct_x(points: &[(f64, f64)]) -> usize {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.len()
}

fn sse(points: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    points.iter().map(|&(x, y)| (y - f(x)).powi(2)).sum()
}

fn mean_fallback(points: &[(f64, f64)]) -> FitResult {
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    FitResult {
        params: FitParams::MeanFallback { mean },
        zero_noise_value: mean,
        residual_rms: (sse(points, |_| mean) / n).sqrt(),
        degenerate: true,
        iterations: 0,
    }
}

/// Ordinary least squares; intercept is the zero-noise value.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    validate(points)?;
    if distinct_x(points) < 2 {
        return Ok(mean_fallback(points));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(FitResult {
        params: FitParams::Linear { slope, intercept },
        zero_noise_value: intercept,
        residual_rms: (sse(points, |x| intercept + slope * x) / n).sqrt(),
        degenerate: false,
        iterations: 0,
    })
}

fn degenerate_linear(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    let mut r = fit_linear(points)?;
    r.degenerate = true;
    Ok(r)
}

/// Solves a 3×3 system by Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        v.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut out = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * out[k]).sum();
        out[row] = (v[row] - s) / m[row][row];
    }
    out.iter().all(|x| x.is_finite()).then_some(out)
}

/// Log-linear start: regress ln|y − bound| on x, where the bound sits just beyond the data
/// on the side the curve approaches.
fn initial_guess(points: &[(f64, f64)]) -> [f64; 3] {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let trend: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.1), h.max(p.1)));
    let margin = 0.1 * (hi - lo) + 1e-9;
    let (bound, sign) = if trend <= 0.0 { (lo - margin, 1.0) } else { (hi + margin, -1.0) };
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, (sign * (y - bound)).ln())).collect();
    let ly = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - ly)).sum();
    let slope = sxy / sxx;
    let b = (-slope).max(1e-3);
    let a = sign * (ly - slope * mx).exp();
    [a, b, bound]
}

struct Levenberg {
    theta: [f64; 3],
    sse: f64,
    iterations: usize,
    converged: bool,
}

fn levenberg_marquardt(points: &[(f64, f64)], start: [f64; 3], opts: &FitOptions) -> Levenberg {
    let model = |t: &[f64; 3], x: f64| t[2] + t[0] * (-t[1] * x).exp();
    let mut theta = start;
    let mut cur = sse(points, |x| model(&theta, x));
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for &(x, y) in points {
            let e = (-theta[1] * x).exp();
            let j = [e, -theta[0] * x * e, 1.0];
            let r = y - (theta[2] + theta[0] * e);
            for p in 0..3 {
                jtr[p] += j[p] * r;
                for q in 0..3 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        loop {
            let mut m = jtj;
            for (p, row) in m.iter_mut().enumerate() {
                row[p] += mu * jtj[p][p] + 1e-15;
            }
            let Some(delta) = solve3(m, jtr) else {
                mu *= 10.0;
                if mu > 1e12 {
                    return Levenberg { theta, sse: cur, iterations, converged: false };
                }
                continue;
            };
            let mut next = [theta[0] + delta[0], theta[1] + delta[1], theta[2] + delta[2]];
            next[1] = next[1].max(0.0);
            let step = (0..3).map(|p| (next[p] - theta[p]).abs()).fold(0.0, f64::max);
            let s = sse(points, |x| model(&next, x));
            if s.is_finite() && s <= cur {
                theta = next;
                let improved = cur - s;
                cur = s;
                mu = (mu / 3.0).max(1e-12);
                if step < opts.step_tolerance || improved <= 1e-30 {
                    return Levenberg { theta, sse: cur, iterations, converged: true };
                }
                break;
            }
            mu *= 4.0;
            if mu > 1e12 || step < opts.step_tolerance {
                // No downhill step exists: theta is a (possibly constrained) stationary point.
                return Levenberg { theta, sse: cur, iterations, converged: true };
            }
        }
    }
    Levenberg { theta, sse: cur, iterations, converged: false }
}

/// Least-squares fit of c + a·e^(−b·x) with b ≥ 0.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    fit_exponential_with(points, &FitOptions::default())
}

pub fn fit_exponential_with(points: &[(f64, f64)], opts: &FitOptions) -> Result<FitResult, FitError> {
    validate(points)?;
    let distinct = distinct_x(points);
    if distinct < 2 {
        return Ok(mean_fallback(points));
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.1), h.max(p.1)));
    if distinct < 3 || hi - lo <= 1e-14 * hi.abs().max(1.0) {
        return degenerate_linear(points);
    }
    let lm = levenberg_marquardt(points, initial_guess(points), opts);
    let [a, b, c] = lm.theta;
    let span = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let usable = lm.converged && a.is_finite() && b.is_finite() && c.is_finite() && b * span >= 1e-3 && a.abs() <= 1e6;
    if !usable {
        return degenerate_linear(points);
    }
    let n = points.len();
    if let Some(alpha) = opts.curvature_alpha {
        if n > 3 {
            let linear = fit_linear(points)?;
            let sse_lin = sse(points, |x| linear.predict(x));
            let significant = if lm.sse <= 1e-28 * n as f64 {
                sse_lin > 1e-24 * n as f64
            } else {
                let f = (sse_lin - lm.sse) * (n - 3) as f64 / lm.sse;
                let crit = FisherSnedecor::new(1.0, (n - 3) as f64)
                    .expect("positive degrees of freedom")
                    .inverse_cdf(1.0 - alpha);
                f > crit
            };
            if !significant {
                return degenerate_linear(points);
            }
        }
    }
    let x_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if matches!(opts.max_initial_decay, Some(limit) if b * x_min > limit) {
        return degenerate_linear(points);
    }
    if let Some((lo, hi)) = opts.value_range {
        if !(lo..=hi).contains(&(c + a)) {
            return degenerate_linear(points);
        }
    }
    Ok(FitResult {
        params: FitParams::Exponential { a, b, c },
        zero_noise_value: c + a,
        residual_rms: (lm.sse / n as f64).sqrt(),
        degenerate: false,
        iterations: lm.iterations,
    })
}

/// Fits the retained samples with the given model.
pub fn fit_samples(samples: &[Sample], model: FitModel, opts: &FitOptions) -> Result<FitResult, FitError> {
    let points: Vec<(f64, f64)> = samples.iter().filter(|s| s.retained).map(|s| (s.x, s.value)).collect();
    match model {
        FitModel::Exponential => fit_exponential_with(&points, opts),
        FitModel::Linear => fit_linear(&points),
        FitModel::MeanFallback => {
            validate(&points)?;
            Ok(mean_fallback(&points))
        }
    }
}
