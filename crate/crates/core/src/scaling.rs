//! Error-strength estimation and adaptive scaling plans.
//!
//! The widest scale factor is chosen so that the amplified error stays near a target strength
//! ξ: λ_max = ξ/ε₀. Factors between 1 and λ_max are spaced geometrically.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, Layout};
use crate::folding::{realizable_lambda, FoldingError, ScaleFactor};
use crate::noise::CalibrationTable;
use crate::sim::{self, Confusion, GateNoise, SimError};

pub const DEFAULT_XI: f64 = 0.125;
pub const DEFAULT_K: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScalingError {
    #[error("P0 = {p0} outside [{min}, 1] for {qubits} qubit(s)")]
    P0OutOfDomain { p0: f64, min: f64, qubits: usize },
    #[error("estimated error strength is zero; nothing to scale against")]
    NoiselessEstimate,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("CNOT pairs missing from calibration table: {0:?}")]
    MissingPairs(Vec<(u32, u32)>),
    #[error("only {0} distinct realizable factor(s) remain")]
    TooFewFactors(usize),
    #[error(transparent)]
    Folding(#[from] FoldingError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateSource {
    Measured,
    Calibration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub epsilon0: f64,
    pub source: EstimateSource,
    /// All-zeros survival of circuit + inverse; present for measured estimates.
    pub p0: Option<f64>,
    pub qubits: usize,
}

/// Error strength of a circuit from the all-zeros survival P₀ of circuit + inverse:
/// ε = (1 − √(P₀ − (1 − P₀)/2^q)) / (1 + 1/2^q).
pub fn epsilon_from_p0(p0: f64, qubits: usize) -> Result<f64, ScalingError> {
    let d = (qubits as f64).exp2();
    let min = 1.0 / (d + 1.0);
    if !(p0 >= min && p0 <= 1.0 + 1e-12) || qubits == 0 {
        return Err(ScalingError::P0OutOfDomain { p0, min, qubits });
    }
    let p0 = p0.min(1.0);
    let radicand = (p0 - (1.0 - p0) / d).max(0.0);
    Ok((1.0 - radicand.sqrt()) / (1.0 + 1.0 / d))
}

/// All-zeros survival that a circuit of error strength ε produces under the estimator's
/// model, in which each of the two halves is depolarized to the fully mixed state of all
/// qubits with the entanglement-fidelity loss of an average infidelity ε. Inverse of
/// [`epsilon_from_p0`].
pub fn p0_from_epsilon(epsilon: f64, qubits: usize) -> f64 {
    let d = (qubits as f64).exp2();
    let x = epsilon * (1.0 + 1.0 / d);
    (d * (1.0 - x) * (1.0 - x) + 1.0) / (d + 1.0)
}

/// Runs `circuit` followed by its inverse and converts the all-zeros frequency to ε₀.
///
/// With readout noise the frequency is taken from the readout-mitigated quasi-distribution,
/// clipped to [0, 1].
pub fn measure_epsilon0<R: Rng + ?Sized>(
    circuit: &Circuit,
    noise: &GateNoise,
    readout: Option<&[Confusion]>,
    shots: u64,
    rng: &mut R,
) -> Result<ErrorEstimate, ScalingError> {
    let mirrored = circuit.compose(&circuit.invert().map_err(|e| ScalingError::Parameter(e.to_string()))?)
        .map_err(|e| ScalingError::Parameter(e.to_string()))?;
    let p0 = survival(&mirrored, noise, readout, shots, rng)?;
    let q = circuit.width();
    Ok(ErrorEstimate { epsilon0: epsilon_from_p0(p0, q)?, source: EstimateSource::Measured, p0: Some(p0), qubits: q })
}

/// Sampled all-zeros frequency of `circuit` (expected to act as the identity when noiseless).
pub fn survival<R: Rng + ?Sized>(
    circuit: &Circuit,
    noise: &GateNoise,
    readout: Option<&[Confusion]>,
    shots: u64,
    rng: &mut R,
) -> Result<f64, ScalingError> {
    let rho = sim::evolve(circuit, noise)?;
    let counts = sim::measure_counts(&rho, shots, readout, rng)?;
    let p0 = match readout {
        Some(r) => sim::readout_mitigate(&counts, r)?.values[0].clamp(0.0, 1.0),
        None => counts.dense()[0] as f64 / counts.shots() as f64,
    };
    Ok(p0)
}

/// ε₀ as the sum of the calibrated CX errors of every CNOT, in the direction each is applied.
pub fn estimate_epsilon_from_calibration(
    circuit: &Circuit,
    table: &CalibrationTable,
    layout: &Layout,
) -> Result<ErrorEstimate, ScalingError> {
    let mut sum = 0.0;
    let mut missing = Vec::new();
    for g in circuit.gates() {
        if let Gate::Cnot { control, target } = *g {
            let pair = layout.physical_pair(control, target);
            match table.cx_error(pair) {
                Some(e) => sum += e,
                None if !missing.contains(&pair) => missing.push(pair),
                None => {}
            }
        }
    }
    if !missing.is_empty() {
        return Err(ScalingError::MissingPairs(missing));
    }
    Ok(ErrorEstimate { epsilon0: sum, source: EstimateSource::Calibration, p0: None, qubits: circuit.width() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaMax {
    pub value: f64,
    /// ξ/ε₀ before the floor was applied.
    pub unclamped: f64,
    pub clamped: bool,
}

/// λ_max = ξ/ε₀, raised to at least 1 + 2k/N_c when `clamp` is set so that k distinct
/// factors remain realizable.
pub fn lambda_max(epsilon0: f64, xi: f64, k: usize, n_cnots: usize, clamp: bool) -> Result<LambdaMax, ScalingError> {
    if epsilon0 == 0.0 {
        return Err(ScalingError::NoiselessEstimate);
    }
    if !(epsilon0 > 0.0 && epsilon0.is_finite()) {
        return Err(ScalingError::Parameter(format!("epsilon0 {epsilon0} must be finite and > 0")));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(ScalingError::Parameter(format!("xi {xi} must be finite and > 0")));
    }
    let unclamped = xi / epsilon0;
    let floor = 1.0 + 2.0 * k as f64 / n_cnots.max(1) as f64;
    if clamp && unclamped < floor {
        Ok(LambdaMax { value: floor, unclamped, clamped: true })
    } else {
        Ok(LambdaMax { value: unclamped, unclamped, clamped: false })
    }
}

/// λ′_j = λ_max^((j−1)/(k−1)) for j = 1..k.
pub fn exponential_factors(lambda_max: f64, k: usize) -> Result<Vec<f64>, ScalingError> {
    if !(lambda_max >= 1.0 && lambda_max.is_finite()) {
        return Err(ScalingError::Parameter(format!("lambda_max {lambda_max} must be finite and >= 1")));
    }
    if k < 2 {
        return Err(ScalingError::Parameter(format!("k = {k} must be >= 2")));
    }
    Ok((0..k).map(|j| lambda_max.powf(j as f64 / (k - 1) as f64)).collect())
}

/// The scale factors one method uses in one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPlan {
    pub xi: Option<f64>,
    pub lambda_max: f64,
    pub lambda_max_unclamped: f64,
    pub clamped: bool,
    pub k: usize,
    pub desired: Vec<f64>,
    pub lambdas: Vec<ScaleFactor>,
    pub epsilon0: Option<f64>,
    /// Set when no scaling was possible and only λ = 1 is measured.
    pub degenerate: bool,
}

impl ScalingPlan {
    /// Fixed odd-integer factors.
    pub fn fixed(factors: &[i64]) -> ScalingPlan {
        let lambdas: Vec<ScaleFactor> = factors.iter().map(|&f| ScaleFactor::integer(f)).collect();
        let max = *factors.iter().max().unwrap_or(&1) as f64;
        ScalingPlan {
            xi: None,
            lambda_max: max,
            lambda_max_unclamped: max,
            clamped: false,
            k: lambdas.len(),
            desired: factors.iter().map(|&f| f as f64).collect(),
            lambdas,
            epsilon0: None,
            degenerate: false,
        }
    }

    /// λ ∈ {1, 3, 5}.
    pub fn standard() -> ScalingPlan {
        ScalingPlan::fixed(&[1, 3, 5])
    }

    /// Only the unscaled circuit; used when ε₀ = 0 or no plan could be built.
    pub fn unscaled(epsilon0: Option<f64>) -> ScalingPlan {
        ScalingPlan { epsilon0, degenerate: true, ..ScalingPlan::fixed(&[1]) }
    }
}

/// λ_max → geometric factors → nearest realizable factors, deduplicated and increasing.
pub fn build_plan(n_cnots: usize, estimate: &ErrorEstimate, xi: f64, k: usize, clamp: bool) -> Result<ScalingPlan, ScalingError> {
    let lm = lambda_max(estimate.epsilon0, xi, k, n_cnots, clamp)?;
    let desired = exponential_factors(lm.value, k)?;
    let mut lambdas = Vec::with_capacity(k);
    for &d in &desired {
        lambdas.push(realizable_lambda(d, n_cnots)?);
    }
    lambdas.sort();
    lambdas.dedup();
    if lambdas.len() < 2 {
        return Err(ScalingError::TooFewFactors(lambdas.len()));
    }
    Ok(ScalingPlan {
        xi: Some(xi),
        lambda_max: lm.value,
        lambda_max_unclamped: lm.unclamped,
        clamped: lm.clamped,
        k,
        desired,
        lambdas,
        epsilon0: Some(estimate.epsilon0),
        degenerate: false,
    })
}
