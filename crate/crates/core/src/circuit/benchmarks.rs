//! The three fixed benchmark circuits.
//!
//! Gate lists are written out by hand in the native gate set. Routing CNOTs are already part
//! of the lists, so CNOT counts are final: Grover 10, HHL 18, Ladder 7.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Circuit, CircuitError, Gate, Layout, Observable, ObservableKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Grover,
    Hhl,
    Ladder,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Grover, Benchmark::Hhl, Benchmark::Ladder];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Grover => "grover",
            Benchmark::Hhl => "hhl",
            Benchmark::Ladder => "ladder",
        }
    }

    pub fn build(self) -> BenchmarkCircuit {
        match self {
            Benchmark::Grover => grover(),
            Benchmark::Hhl => hhl(),
            Benchmark::Ladder => ladder(),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Benchmark, CircuitError> {
        match s.to_ascii_lowercase().as_str() {
            "grover" => Ok(Benchmark::Grover),
            "hhl" => Ok(Benchmark::Hhl),
            "ladder" => Ok(Benchmark::Ladder),
            _ => Err(CircuitError::UnknownBenchmark(s.to_string())),
        }
    }
}

/// Looks up a benchmark by name.
pub fn build_benchmark(name: &str) -> Result<BenchmarkCircuit, CircuitError> {
    Ok(name.parse::<Benchmark>()?.build())
}

#[derive(Clone, Debug)]
pub struct BenchmarkCircuit {
    pub benchmark: Benchmark,
    pub circuit: Circuit,
    pub observable: Observable,
    pub layout: Layout,
}

const T: f64 = PI / 4.0;

fn ry(q: usize, theta: f64) -> [Gate; 5] {
    [Gate::Rz(q, -PI / 2.0), Gate::H(q), Gate::Rz(q, theta), Gate::H(q), Gate::Rz(q, PI / 2.0)]
}

/// Two-solution Grover search over 3 qubits; marked states 101 and 011.
fn grover() -> BenchmarkCircuit {
    let mut c = Circuit::new(3, "grover").expect("width");
    for q in 0..3 {
        c.h(q);
    }
    // Oracle: phase flip on 101 and 011.
    c.cx(0, 1).h(2).cx(1, 2).h(2).cx(0, 1);
    // Diffuser: H X CCZ X H, with the CCZ followed by a routing SWAP of qubits 0 and 1 whose
    // first CNOT cancels the last CNOT of the CCZ.
    for q in 0..3 {
        c.h(q).x(q);
    }
    let (a, b, t) = (0, 1, 2);
    c.cx(b, t).rz(t, -T).cx(a, t).rz(t, T).cx(b, t).rz(t, -T).cx(a, t).rz(b, T).rz(t, T);
    c.cx(a, b).rz(a, T).rz(b, -T);
    c.cx(b, a).cx(a, b);
    // The SWAP exchanged qubits 0 and 1; the remaining layers are symmetric in them.
    for q in 0..3 {
        c.x(q).h(q);
    }
    let observable = Observable::projectors(3, &["101", "011"], 1.0).expect("static observable");
    let layout = Layout::new(vec![4, 7, 6]).with_pair((0, 2), (6, 7));
    BenchmarkCircuit { benchmark: Benchmark::Grover, circuit: c, observable, layout }
}

/// 4-qubit HHL for a 2×2 system with eigenvalues 1 and 2.
///
/// Qubit 0 holds b, qubits 1 and 2 the low and high clock bits, qubit 3 the ancilla.
/// P(ancilla = 1) = 5/8 and, post-selected, the b register holds x ∝ (9/8, 3/8).
fn hhl() -> BenchmarkCircuit {
    const B: usize = 0;
    const LO: usize = 1;
    const HI: usize = 2;
    const ANC: usize = 3;

    fn crz(c: usize, t: usize, theta: f64) -> Vec<Gate> {
        vec![Gate::cnot(c, t), Gate::Rz(t, -theta / 2.0), Gate::cnot(c, t), Gate::Rz(t, theta / 2.0)]
    }
    fn cphase(a: usize, b: usize, phi: f64) -> Vec<Gate> {
        vec![Gate::Rz(a, phi / 2.0), Gate::Rz(b, phi / 2.0), Gate::cnot(a, b), Gate::Rz(b, -phi / 2.0), Gate::cnot(a, b)]
    }
    fn swap(a: usize, b: usize) -> Vec<Gate> {
        vec![Gate::cnot(a, b), Gate::cnot(b, a), Gate::cnot(a, b)]
    }

    let mut qpe = vec![Gate::H(LO), Gate::H(HI), Gate::Rz(LO, 3.0 * PI / 4.0), Gate::H(B)];
    qpe.extend(crz(LO, B, PI / 2.0));
    qpe.extend([Gate::H(B), Gate::cnot(HI, B), Gate::Rz(HI, PI)]);
    qpe.extend(swap(LO, HI));
    qpe.push(Gate::H(LO));
    qpe.extend(cphase(LO, HI, -PI / 2.0));
    qpe.push(Gate::H(HI));

    let mut rot = Vec::new();
    rot.extend(ry(ANC, PI / 3.0));
    rot.extend(ry(ANC, PI / 3.0));
    rot.push(Gate::cnot(LO, ANC));
    rot.extend(ry(ANC, -PI / 3.0));
    rot.push(Gate::cnot(LO, ANC));

    let forward = Circuit::from_gates(4, "hhl_qpe", qpe).expect("static gates");
    let uncompute = forward.invert().expect("unitary");
    let mut c = Circuit::from_gates(4, "hhl", forward.gates().iter().copied()).expect("static gates");
    c.extend(rot).expect("static gates");
    c.extend(uncompute.gates().iter().copied()).expect("static gates");

    let observable =
        Observable::new(4, ObservableKind::QubitProjector { qubit: ANC, value: 1 }, 0.625).expect("static observable");
    let layout = Layout::new(vec![7, 4, 6, 1]).with_pair((LO, HI), (4, 7)).with_pair((HI, LO), (7, 4));
    BenchmarkCircuit { benchmark: Benchmark::Hhl, circuit: c, observable, layout }
}

/// 8-qubit GHZ ladder: H then a CNOT chain.
fn ladder() -> BenchmarkCircuit {
    let mut c = Circuit::new(8, "ladder").expect("width");
    c.h(0);
    for k in 0..7 {
        c.cx(k, k + 1);
    }
    let observable = Observable::projectors(8, &["11111111"], 0.5).expect("static observable");
    let layout = Layout::new(vec![10, 12, 13, 14, 16, 19, 22, 25]);
    BenchmarkCircuit { benchmark: Benchmark::Ladder, circuit: c, observable, layout }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cnot_counts() {
        assert_eq!(Benchmark::Grover.build().circuit.cnot_count(), 10);
        assert_eq!(Benchmark::Hhl.build().circuit.cnot_count(), 18);
        assert_eq!(Benchmark::Ladder.build().circuit.cnot_count(), 7);
    }

    #[test]
    fn names_parse() {
        for b in Benchmark::ALL {
            assert_eq!(b.name().parse::<Benchmark>().unwrap(), b);
        }
        assert!(matches!(build_benchmark("shor"), Err(CircuitError::UnknownBenchmark(_))));
    }

    #[test]
    fn ideal_values() {
        assert_eq!(Benchmark::Grover.build().observable.ideal_value(), 1.0);
        assert_eq!(Benchmark::Hhl.build().observable.ideal_value(), 0.625);
        assert_eq!(Benchmark::Ladder.build().observable.ideal_value(), 0.5);
    }
}
