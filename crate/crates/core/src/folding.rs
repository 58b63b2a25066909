//! Noise amplification by local CNOT folding, and Pauli twirling.
//!
//! Replacing the i-th CNOT by 2nᵢ + 1 copies scales the CNOT count by
//! λ = (1/N_c)·Σ(2nᵢ + 1). Scale factors are exact rationals throughout.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::circuit::{Circuit, CircuitError, Gate};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FoldingError {
    #[error("desired scale factor {0} must be a finite number >= 1")]
    BelowOne(f64),
    #[error("circuit has no CNOTs to fold")]
    NoCnots,
    #[error("scale factor {lambda} is not realizable with {n_cnots} CNOTs")]
    NotRealizable { lambda: ScaleFactor, n_cnots: usize },
    #[error("assignment has {got} entries but the circuit has {want} CNOTs")]
    LengthMismatch { got: usize, want: usize },
    #[error("bad scale factor {0:?}")]
    Parse(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// An exact noise scale factor λ ≥ 1. Serialised as `"13/3"` (or `"3"`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScaleFactor(Ratio<i64>);

impl ScaleFactor {
    pub const ONE: ScaleFactor = ScaleFactor(Ratio::new_raw(1, 1));

    pub fn new(numer: i64, denom: i64) -> ScaleFactor {
        ScaleFactor(Ratio::new(numer, denom))
    }

    pub fn integer(n: i64) -> ScaleFactor {
        ScaleFactor(Ratio::from_integer(n))
    }

    pub fn ratio(self) -> Ratio<i64> {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().expect("finite ratio")
    }

    /// Total insertions Σnᵢ = (λ − 1)·N_c/2, if that is a nonnegative integer.
    pub fn total_insertions(self, n_cnots: usize) -> Option<u64> {
        let t = (self.0 - 1) * Ratio::from_integer(n_cnots as i64) / 2;
        (t.is_integer() && t >= Ratio::zero()).then(|| t.to_integer() as u64)
    }
}

impl fmt::Display for ScaleFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for ScaleFactor {
    type Err = FoldingError;

    fn from_str(s: &str) -> Result<ScaleFactor, FoldingError> {
        let bad = || FoldingError::Parse(s.to_string());
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim().parse::<i64>().map_err(|_| bad())?, d.trim().parse::<i64>().map_err(|_| bad())?),
            None => (s.parse::<i64>().map_err(|_| bad())?, 1),
        };
        if d <= 0 {
            return Err(bad());
        }
        Ok(ScaleFactor::new(n, d))
    }
}

impl Serialize for ScaleFactor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScaleFactor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<ScaleFactor, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The achievable factor closest to `desired`:
/// λ = 1 + (2/N_c)·⌊((λ′ − 1)/2)·N_c + 1/2⌋. Exact ties round up.
pub fn realizable_lambda(desired: f64, n_cnots: usize) -> Result<ScaleFactor, FoldingError> {
    if !(desired >= 1.0 && desired.is_finite()) {
        return Err(FoldingError::BelowOne(desired));
    }
    if n_cnots == 0 {
        return Err(FoldingError::NoCnots);
    }
    let n = n_cnots as i64;
    // ⌊x + 1/2⌋ computed as a comparison of the two neighbouring totals, so that rounding in
    // x cannot move a tie.
    let lower = ((desired - 1.0) / 2.0 * n as f64).floor() as i64;
    let dist = |t: i64| (1.0 + 2.0 * t as f64 / n as f64 - desired).abs();
    let total = if dist(lower + 1) <= dist(lower) { lower + 1 } else { lower };
    Ok(ScaleFactor(Ratio::from_integer(1) + Ratio::new(2 * total, n)))
}

/// Per-CNOT insertion counts nᵢ and the exact factor they achieve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub insertions: Vec<u32>,
    pub achieved_lambda: ScaleFactor,
}

impl FoldAssignment {
    /// All nᵢ = 0.
    pub fn identity(n_cnots: usize) -> FoldAssignment {
        FoldAssignment { insertions: vec![0; n_cnots], achieved_lambda: ScaleFactor::ONE }
    }
}

/// Spreads Σnᵢ = (λ − 1)·N_c/2 as evenly as possible: every nᵢ is ⌊n⌋ or ⌊n⌋ + 1, and the
/// positions of the larger values are drawn uniformly from `rng`.
pub fn assign_insertions<R: Rng + ?Sized>(
    lambda: ScaleFactor,
    n_cnots: usize,
    rng: &mut R,
) -> Result<FoldAssignment, FoldingError> {
    if n_cnots == 0 {
        return Err(FoldingError::NoCnots);
    }
    let total = lambda.total_insertions(n_cnots).ok_or(FoldingError::NotRealizable { lambda, n_cnots })?;
    let floor = (total / n_cnots as u64) as u32;
    let extra = (total % n_cnots as u64) as usize;
    let mut insertions = vec![floor; n_cnots];
    for i in index::sample(rng, n_cnots, extra) {
        insertions[i] += 1;
    }
    Ok(FoldAssignment { insertions, achieved_lambda: lambda })
}

/// Replaces the i-th CNOT by 2nᵢ + 1 consecutive copies.
pub fn fold(circuit: &Circuit, assignment: &FoldAssignment) -> Result<Circuit, FoldingError> {
    let want = circuit.cnot_count();
    if assignment.insertions.len() != want {
        return Err(FoldingError::LengthMismatch { got: assignment.insertions.len(), want });
    }
    let mut out = Circuit::new(circuit.width(), format!("{}_x{}", circuit.label(), assignment.achieved_lambda))?;
    let mut k = 0;
    for g in circuit.gates() {
        if g.is_cnot() {
            for _ in 0..2 * assignment.insertions[k] + 1 {
                out.push(*g)?;
            }
            k += 1;
        } else {
            out.push(*g)?;
        }
    }
    Ok(out)
}

/// A Pauli as (x, z) bits: I = (0,0), X = (1,0), Z = (0,1), Y = (1,1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pauli {
    x: bool,
    z: bool,
}

impl Pauli {
    fn from_index(i: u8) -> Pauli {
        Pauli { x: i & 1 != 0, z: i & 2 != 0 }
    }

    /// Native gates realising the Pauli up to global phase (Y ∝ X·Z).
    fn emit(self, q: usize, out: &mut Vec<Gate>) {
        if self.z {
            out.push(Gate::Rz(q, std::f64::consts::PI));
        }
        if self.x {
            out.push(Gate::X(q));
        }
    }
}

/// Conjugates every CNOT by a uniformly random Pauli frame from the 16-element twirling set:
/// CNOT = (P_c′ ⊗ P_t′)·CNOT·(P_c ⊗ P_t) up to phase, with X_c → X_c X_t and Z_t → Z_c Z_t.
pub fn twirl<R: Rng + ?Sized>(circuit: &Circuit, rng: &mut R) -> Circuit {
    let mut gates = Vec::with_capacity(circuit.len() + 4 * circuit.cnot_count());
    for g in circuit.gates() {
        match *g {
            Gate::Cnot { control, target } => {
                let draw: u8 = rng.random_range(0..16);
                let (pc, pt) = (Pauli::from_index(draw & 3), Pauli::from_index(draw >> 2));
                let pc_out = Pauli { x: pc.x, z: pc.z ^ pt.z };
                let pt_out = Pauli { x: pt.x ^ pc.x, z: pt.z };
                pc.emit(control, &mut gates);
                pt.emit(target, &mut gates);
                gates.push(*g);
                pc_out.emit(control, &mut gates);
                pt_out.emit(target, &mut gates);
            }
            _ => gates.push(*g),
        }
    }
    Circuit::from_gates(circuit.width(), circuit.label().to_string(), gates).expect("indices come from a valid circuit")
}
