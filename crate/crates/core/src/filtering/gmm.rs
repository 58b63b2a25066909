//! One-dimensional Gaussian mixtures fitted by expectation-maximisation.

use serde::{Deserialize, Serialize};

use super::FilterError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: f64,
    pub std: f64,
    pub weight: f64,
}

impl GaussianComponent {
    fn log_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std;
        -0.5 * z * z - self.std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmConfig {
    pub components: usize,
    pub variance_floor: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Accept the multi-component fit only if it beats a single Gaussian by the Bayesian
    /// information criterion. Without this, EM splits unimodal data into two overlapping
    /// halves and the secondary-component rule discards good points.
    pub select_by_bic: bool,
}

impl Default for GmmConfig {
    fn default() -> GmmConfig {
        GmmConfig { components: 2, variance_floor: 1e-12, tolerance: 1e-8, max_iterations: 500, select_by_bic: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub components: Vec<GaussianComponent>,
    pub primary_index: usize,
    /// `responsibilities[i][t]`: membership probability of point i in component t.
    pub responsibilities: Vec<Vec<f64>>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood after every EM iteration of the multi-component fit.
    pub loglik_trace: Vec<f64>,
}

impl MixtureFit {
    pub fn primary(&self) -> &GaussianComponent {
        &self.components[self.primary_index]
    }

    /// Responsibility of the primary component for point i.
    pub fn primary_responsibility(&self, i: usize) -> f64 {
        self.responsibilities[i][self.primary_index]
    }
}

fn primary_of(components: &[GaussianComponent]) -> usize {
    let mut best = 0;
    for (t, c) in components.iter().enumerate().skip(1) {
        let b = &components[best];
        if c.weight > b.weight || (c.weight == b.weight && c.mean < b.mean) {
            best = t;
        }
    }
    best
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Maximum-likelihood single Gaussian.
fn single(data: &[f64], floor: f64) -> (GaussianComponent, f64) {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = (data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).max(floor);
    let c = GaussianComponent { mean, std: var.sqrt(), weight: 1.0 };
    let ll = data.iter().map(|&x| c.log_density(x)).sum();
    (c, ll)
}

/// Fits a `config.components`-component mixture.
///
/// Initialisation splits the sorted data into equal contiguous groups, so the result depends
/// only on the multiset of values. A component collapsing onto the variance floor, or a
/// mixture that does not beat one Gaussian by BIC when `select_by_bic` is set, yields a
/// single-component fit.
pub fn fit_gmm_1d(data: &[f64], config: &GmmConfig) -> Result<MixtureFit, FilterError> {
    let t_count = config.components.max(1);
    if data.len() < 2 * t_count {
        return Err(FilterError::TooFew { got: data.len(), need: 2 * t_count });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(FilterError::NonFinite);
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(FilterError::Degenerate);
    }
    let n = sorted.len();
    let floor = config.variance_floor;

    let mut comps: Vec<GaussianComponent> = (0..t_count)
        .map(|t| {
            let chunk = &sorted[t * n / t_count..(t + 1) * n / t_count];
            let (g, _) = single(chunk, floor);
            GaussianComponent { weight: chunk.len() as f64 / n as f64, ..g }
        })
        .collect();

    let mut resp = vec![vec![0.0; t_count]; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut collapsed = false;
    let mut logp = vec![0.0; t_count];
    for _ in 0..config.max_iterations {
        // E-step on the sorted data; log-likelihood of the current parameters.
        let mut ll = 0.0;
        for (i, &x) in sorted.iter().enumerate() {
            for (t, c) in comps.iter().enumerate() {
                logp[t] = c.weight.ln() + c.log_density(x);
            }
            let lse = log_sum_exp(&logp);
            ll += lse;
            for t in 0..t_count {
                resp[i][t] = (logp[t] - lse).exp();
            }
        }
        let improvement = trace.last().map(|&prev| ll - prev);
        trace.push(ll);
        if matches!(improvement, Some(d) if d < config.tolerance) {
            converged = true;
            break;
        }
        // M-step.
        for (t, c) in comps.iter_mut().enumerate() {
            let nk: f64 = resp.iter().map(|r| r[t]).sum();
            if nk <= 0.0 {
                collapsed = true;
                break;
            }
            let mean = resp.iter().zip(&sorted).map(|(r, x)| r[t] * x).sum::<f64>() / nk;
            let var = resp.iter().zip(&sorted).map(|(r, x)| r[t] * (x - mean).powi(2)).sum::<f64>() / nk;
            if var <= floor {
                collapsed = true;
            }
            *c = GaussianComponent { mean, std: var.max(floor).sqrt(), weight: nk / n as f64 };
        }
        if collapsed {
            break;
        }
    }

    let (one, ll_one) = single(&sorted, floor);
    let extra_params = 3.0 * (t_count as f64 - 1.0);
    let multi_ll = *trace.last().expect("at least one iteration");
    let keep_single = t_count == 1
        || collapsed
        || (config.select_by_bic && multi_ll - ll_one <= 0.5 * extra_params * (n as f64).ln());

    // Responsibilities are reported in input order.
    let (components, loglik) = if keep_single { (vec![one], ll_one) } else { (comps, multi_ll) };
    let responsibilities = data
        .iter()
        .map(|&x| {
            let lp: Vec<f64> = components.iter().map(|c| c.weight.ln() + c.log_density(x)).collect();
            let lse = log_sum_exp(&lp);
            lp.iter().map(|v| (v - lse).exp()).collect()
        })
        .collect();
    Ok(MixtureFit {
        primary_index: primary_of(&components),
        components,
        responsibilities,
        loglik,
        converged: converged || keep_single,
        iterations: trace.len(),
        loglik_trace: trace,
    })
}
