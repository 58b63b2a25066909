//! Gate-level circuit IR.
//!
//! Qubit 0 is the most significant bit of a computational-basis index and the first character
//! of a bitstring.

mod benchmarks;
mod layout;

pub use benchmarks::{build_benchmark, Benchmark, BenchmarkCircuit};
pub use layout::Layout;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest register the simulator is sized for.
pub const MAX_WIDTH: usize = 10;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CircuitError {
    #[error("circuit width must be at least 1")]
    ZeroWidth,
    #[error("gate {index}: qubit {qubit} out of range for width {width}")]
    QubitOutOfRange { index: usize, qubit: usize, width: usize },
    #[error("gate {index}: CNOT control and target are both {qubit}")]
    SameControlTarget { index: usize, qubit: usize },
    #[error("gate {index}: not unitary ({reason})")]
    NonUnitary { index: usize, reason: String },
    #[error("width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("unknown gate kind {0:?}")]
    UnknownKind(String),
    #[error("gate {index}: {kind} expects {qubits} qubit(s) and {params} parameter(s)")]
    Arity { index: usize, kind: String, qubits: usize, params: usize },
    #[error("observable: {0}")]
    Observable(String),
    #[error("unknown benchmark {0:?} (expected grover, hhl or ladder)")]
    UnknownBenchmark(String),
    #[error("json: {0}")]
    Json(String),
}

pub type Mat2 = [[Complex64; 2]; 2];

/// A native gate. `Sxdg` exists so that inversion stays inside the gate set gate-for-gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Sx(usize),
    Sxdg(usize),
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::Cnot { control, target }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    /// The qubit acted on by a single-qubit gate, or `None` for a CNOT.
    pub fn single_qubit(&self) -> Option<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Sx(q) | Gate::Sxdg(q) | Gate::Rz(q, _) => Some(q),
            Gate::Cnot { .. } => None,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Cnot { control, target } => vec![control, target],
            _ => vec![self.single_qubit().expect("single-qubit gate")],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::Sx(_) => "sx",
            Gate::Sxdg(_) => "sxdg",
            Gate::Rz(..) => "rz",
            Gate::Cnot { .. } => "cnot",
        }
    }

    pub fn adjoint(&self) -> Gate {
        match *self {
            Gate::Sx(q) => Gate::Sxdg(q),
            Gate::Sxdg(q) => Gate::Sx(q),
            Gate::Rz(q, theta) => Gate::Rz(q, -theta),
            g => g,
        }
    }

    /// 2×2 matrix of a single-qubit gate. `None` for CNOT.
    pub fn matrix1(&self) -> Option<Mat2> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let m = match *self {
            Gate::H(_) => {
                let s = FRAC_1_SQRT_2;
                [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
            }
            Gate::X(_) => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            Gate::Sx(_) => [[c(0.5, 0.5), c(0.5, -0.5)], [c(0.5, -0.5), c(0.5, 0.5)]],
            Gate::Sxdg(_) => [[c(0.5, -0.5), c(0.5, 0.5)], [c(0.5, 0.5), c(0.5, -0.5)]],
            Gate::Rz(_, theta) => {
                let h = theta / 2.0;
                [
                    [Complex64::from_polar(1.0, -h), c(0.0, 0.0)],
                    [c(0.0, 0.0), Complex64::from_polar(1.0, h)],
                ]
            }
            Gate::Cnot { .. } => return None,
        };
        Some(m)
    }

    /// 4×4 matrix in the local basis |control, target⟩ (control is the high bit); 2×2 gates
    /// are returned as 2×2 through [`Gate::matrix1`] instead.
    pub fn matrix(&self) -> Vec<Vec<Complex64>> {
        match self.matrix1() {
            Some(m) => m.iter().map(|r| r.to_vec()).collect(),
            None => {
                let mut m = vec![vec![Complex64::new(0.0, 0.0); 4]; 4];
                for (row, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                    m[row][col] = Complex64::new(1.0, 0.0);
                }
                m
            }
        }
    }

    /// Largest entry of |U·U† − I|.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.matrix();
        let n = m.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += m[i][k] * m[j][k].conj();
                }
                let target = if i == j { 1.0 } else { 0.0 };
                let d = (s - target).norm();
                if !d.is_finite() {
                    return f64::INFINITY;
                }
                worst = worst.max(d);
            }
        }
        worst
    }

    fn check(&self, index: usize, width: usize) -> Result<(), CircuitError> {
        for q in self.qubits() {
            if q >= width {
                return Err(CircuitError::QubitOutOfRange { index, qubit: q, width });
            }
        }
        if let Gate::Cnot { control, target } = *self {
            if control == target {
                return Err(CircuitError::SameControlTarget { index, qubit: control });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Rz(q, t) => write!(f, "rz({t}) q{q}"),
            Gate::Cnot { control, target } => write!(f, "cnot q{control} q{target}"),
            g => write!(f, "{} q{}", g.kind(), g.single_qubit().unwrap_or(0)),
        }
    }
}

/// Ordered gate list over `width` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
    label: String,
}

impl Circuit {
    pub fn new(width: usize, label: impl Into<String>) -> Result<Circuit, CircuitError> {
        if width == 0 {
            return Err(CircuitError::ZeroWidth);
        }
        Ok(Circuit { width, gates: Vec::new(), label: label.into() })
    }

    pub fn from_gates(
        width: usize,
        label: impl Into<String>,
        gates: impl IntoIterator<Item = Gate>,
    ) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new(width, label)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Circuit {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Circuit, CircuitError> {
        gate.check(self.gates.len(), self.width)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<&mut Circuit, CircuitError> {
        for g in gates {
            self.push(g)?;
        }
        Ok(self)
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_cnot()).count()
    }

    /// Positions of the CNOTs in gate order.
    pub fn cnot_positions(&self) -> Vec<usize> {
        self.gates.iter().enumerate().filter(|(_, g)| g.is_cnot()).map(|(i, _)| i).collect()
    }

    /// Returns U†: gates reversed and individually adjointed.
    pub fn invert(&self) -> Result<Circuit, CircuitError> {
        for (index, g) in self.gates.iter().enumerate() {
            let defect = g.unitarity_defect();
            if defect > 1e-12 {
                return Err(CircuitError::NonUnitary { index, reason: format!("|UU† - I| = {defect:e}") });
            }
        }
        Ok(Circuit {
            width: self.width,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
            label: format!("{}_inv", self.label),
        })
    }

    /// `self` followed by `other`.
    pub fn compose(&self, other: &Circuit) -> Result<Circuit, CircuitError> {
        if self.width != other.width {
            return Err(CircuitError::WidthMismatch { left: self.width, right: other.width });
        }
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&other.gates);
        Ok(Circuit { width: self.width, gates, label: self.label.clone() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CircuitFile::from(self)).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Circuit, CircuitError> {
        let file: CircuitFile = serde_json::from_str(text).map_err(|e| CircuitError::Json(e.to_string()))?;
        file.try_into()
    }
}

// Builder helpers. Indices are checked on push, so these panic only on programmer error.
impl Circuit {
    pub fn h(&mut self, q: usize) -> &mut Circuit {
        self.push(Gate::H(q)).expect("valid qubit")
    }
    pub fn x(&mut self, q: usize) -> &mut Circuit {
        self.push(Gate::X(q)).expect("valid qubit")
    }
    pub fn sx(&mut self, q: usize) -> &mut Circuit {
        self.push(Gate::Sx(q)).expect("valid qubit")
    }
    pub fn rz(&mut self, q: usize, theta: f64) -> &mut Circuit {
        self.push(Gate::Rz(q, theta)).expect("valid qubit")
    }
    pub fn cx(&mut self, control: usize, target: usize) -> &mut Circuit {
        self.push(Gate::cnot(control, target)).expect("valid CNOT")
    }
}

#[derive(Serialize, Deserialize)]
struct GateRecord {
    kind: String,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    width: usize,
    #[serde(default)]
    label: String,
    gates: Vec<GateRecord>,
}

impl From<&Circuit> for CircuitFile {
    fn from(c: &Circuit) -> CircuitFile {
        let gates = c
            .gates
            .iter()
            .map(|g| GateRecord {
                kind: g.kind().to_string(),
                qubits: g.qubits(),
                params: match *g {
                    Gate::Rz(_, t) => vec![t],
                    _ => Vec::new(),
                },
            })
            .collect();
        CircuitFile { width: c.width, label: c.label.clone(), gates }
    }
}

impl TryFrom<CircuitFile> for Circuit {
    type Error = CircuitError;

    fn try_from(file: CircuitFile) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new(file.width, file.label)?;
        for (index, r) in file.gates.into_iter().enumerate() {
            let (nq, np) = match r.kind.as_str() {
                "h" | "x" | "sx" | "sxdg" => (1, 0),
                "rz" => (1, 1),
                "cnot" | "cx" => (2, 0),
                _ => return Err(CircuitError::UnknownKind(r.kind)),
            };
            if r.qubits.len() != nq || r.params.len() != np {
                return Err(CircuitError::Arity { index, kind: r.kind, qubits: nq, params: np });
            }
            let q = r.qubits[0];
            let gate = match r.kind.as_str() {
                "h" => Gate::H(q),
                "x" => Gate::X(q),
                "sx" => Gate::Sx(q),
                "sxdg" => Gate::Sxdg(q),
                "rz" => Gate::Rz(q, r.params[0]),
                _ => Gate::cnot(q, r.qubits[1]),
            };
            if gate.unitarity_defect() > 1e-12 {
                return Err(CircuitError::NonUnitary { index, reason: "non-finite parameter".into() });
            }
            c.push(gate)?;
        }
        Ok(c)
    }
}

/// Diagonal observable A = Σ w_s |s⟩⟨s|, stored densely over all 2^q basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    width: usize,
    kind: ObservableKind,
    ideal_value: f64,
    weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableKind {
    /// Weighted sum of projectors onto the listed bitstrings.
    ProjectorSet { terms: Vec<(String, f64)> },
    /// Projector onto `value` (0 or 1) of one qubit.
    QubitProjector { qubit: usize, value: u8 },
}

impl Observable {
    pub fn new(width: usize, kind: ObservableKind, ideal_value: f64) -> Result<Observable, CircuitError> {
        if width == 0 || width > MAX_WIDTH {
            return Err(CircuitError::Observable(format!("width {width} outside 1..={MAX_WIDTH}")));
        }
        if !(0.0..=1.0).contains(&ideal_value) {
            return Err(CircuitError::Observable(format!("ideal value {ideal_value} outside [0,1]")));
        }
        let dim = 1usize << width;
        let mut weights = vec![0.0; dim];
        match &kind {
            ObservableKind::ProjectorSet { terms } => {
                for (s, w) in terms {
                    if !(0.0..=1.0).contains(w) {
                        return Err(CircuitError::Observable(format!("weight {w} outside [0,1]")));
                    }
                    let idx = bitstring_index(s, width)
                        .ok_or_else(|| CircuitError::Observable(format!("bad bitstring {s:?} for width {width}")))?;
                    weights[idx] += w;
                }
            }
            ObservableKind::QubitProjector { qubit, value } => {
                if *qubit >= width || *value > 1 {
                    return Err(CircuitError::Observable(format!("bad projector qubit {qubit} value {value}")));
                }
                let mask = qubit_mask(*qubit, width);
                for (i, w) in weights.iter_mut().enumerate() {
                    if ((i & mask) != 0) == (*value == 1) {
                        *w = 1.0;
                    }
                }
            }
        }
        Ok(Observable { width, kind, ideal_value, weights })
    }

    pub fn projectors(width: usize, bitstrings: &[&str], ideal_value: f64) -> Result<Observable, CircuitError> {
        let terms = bitstrings.iter().map(|s| (s.to_string(), 1.0)).collect();
        Observable::new(width, ObservableKind::ProjectorSet { terms }, ideal_value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    pub fn ideal_value(&self) -> f64 {
        self.ideal_value
    }

    /// Weight of each computational basis state, indexed big-endian.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ⟨A⟩ for a (quasi-)probability vector over basis states.
    pub fn evaluate(&self, probabilities: &[f64]) -> f64 {
        debug_assert_eq!(probabilities.len(), self.weights.len());
        self.weights.iter().zip(probabilities).map(|(w, p)| w * p).sum()
    }
}

/// Index mask of `qubit` in a `width`-qubit register.
pub fn qubit_mask(qubit: usize, width: usize) -> usize {
    1 << (width - 1 - qubit)
}

/// Parses a big-endian bitstring of exactly `width` characters.
pub fn bitstring_index(s: &str, width: usize) -> Option<usize> {
    if s.len() != width {
        return None;
    }
    s.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Some(acc << 1),
        '1' => Some((acc << 1) | 1),
        _ => None,
    })
}

pub fn index_bitstring(index: usize, width: usize) -> String {
    (0..width).map(|q| if index & qubit_mask(q, width) != 0 { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn native_gates_are_unitary() {
        for g in [Gate::H(0), Gate::X(0), Gate::Sx(0), Gate::Sxdg(0), Gate::Rz(0, 0.37), Gate::cnot(0, 1)] {
            assert!(g.unitarity_defect() < 1e-12, "{g}");
        }
        assert!(Gate::Rz(0, f64::NAN).unitarity_defect() > 1.0);
    }

    #[test]
    fn sx_squared_is_x() {
        let s = Gate::Sx(0).matrix1().unwrap();
        let mut sq = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    sq[i][j] += s[i][k] * s[k][j];
                }
            }
        }
        let x = Gate::X(0).matrix1().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((sq[i][j] - x[i][j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn push_validates_indices() {
        let mut c = Circuit::new(2, "t").unwrap();
        assert_eq!(c.push(Gate::H(2)).unwrap_err(), CircuitError::QubitOutOfRange { index: 0, qubit: 2, width: 2 });
        assert_eq!(c.push(Gate::cnot(1, 1)).unwrap_err(), CircuitError::SameControlTarget { index: 0, qubit: 1 });
        assert_eq!(Circuit::new(0, "z").unwrap_err(), CircuitError::ZeroWidth);
    }

    #[test]
    fn empty_circuit_has_no_cnots() {
        assert_eq!(Circuit::new(3, "e").unwrap().cnot_count(), 0);
    }

    #[test]
    fn invert_of_self_adjoint_gates() {
        let cx = Circuit::from_gates(2, "cx", [Gate::cnot(0, 1)]).unwrap();
        assert_eq!(cx.invert().unwrap().gates(), cx.gates());
        let h = Circuit::from_gates(1, "h", [Gate::H(0)]).unwrap();
        assert_eq!(h.invert().unwrap().gates(), h.gates());
    }

    #[test]
    fn invert_rejects_non_unitary() {
        let c = Circuit::from_gates(1, "bad", [Gate::Rz(0, f64::INFINITY)]).unwrap();
        assert!(matches!(c.invert(), Err(CircuitError::NonUnitary { index: 0, .. })));
    }

    #[test]
    fn double_inversion_is_identity_gate_for_gate() {
        let c = Circuit::from_gates(2, "c", [Gate::Sx(0), Gate::Rz(1, 0.4), Gate::cnot(1, 0), Gate::Sxdg(1)]).unwrap();
        assert_eq!(c.invert().unwrap().invert().unwrap().gates(), c.gates());
    }

    #[test]
    fn json_round_trip() {
        let c = Circuit::from_gates(3, "j", [Gate::H(0), Gate::Rz(2, -1.25), Gate::cnot(2, 1), Gate::Sx(1)]).unwrap();
        let back = Circuit::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(matches!(Circuit::from_json(r#"{"width":1,"gates":[{"kind":"u3","qubits":[0]}]}"#), Err(CircuitError::UnknownKind(_))));
        assert!(matches!(Circuit::from_json(r#"{"width":1,"gates":[{"kind":"rz","qubits":[0]}]}"#), Err(CircuitError::Arity { .. })));
    }

    #[test]
    fn bitstrings_are_big_endian() {
        assert_eq!(bitstring_index("100", 3), Some(4));
        assert_eq!(bitstring_index("10", 3), None);
        assert_eq!(bitstring_index("1x0", 3), None);
        assert_eq!(index_bitstring(6, 3), "110");
        assert_eq!(qubit_mask(0, 3), 4);
    }

    #[test]
    fn observable_weights() {
        let a = Observable::projectors(3, &["101", "011"], 1.0).unwrap();
        assert_eq!(a.weights().iter().sum::<f64>(), 2.0);
        assert_eq!(a.weights()[5], 1.0);
        let last = Observable::new(2, ObservableKind::QubitProjector { qubit: 1, value: 1 }, 0.5).unwrap();
        assert_eq!(last.weights(), &[0.0, 1.0, 0.0, 1.0]);
        assert!(Observable::projectors(3, &["11"], 1.0).is_err());
        assert!(Observable::new(1, ObservableKind::ProjectorSet { terms: vec![("1".into(), 1.5)] }, 0.5).is_err());
    }
}
