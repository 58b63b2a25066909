//! Exact density-matrix simulation under per-CNOT two-qubit depolarizing noise.
//!
//! After every CNOT on (c, t) the channel ρ → (1−p)ρ + p·(I/4 ⊗ Tr_{c,t} ρ) is applied with
//! p the rate of that pair. Optionally SX and X gates are followed by a single-qubit
//! depolarizing channel.
//!
//! [`evolve`] fuses runs of gates that stay inside one two-qubit support into a single 4×4
//! unitary followed by a single depolarizing step of strength 1 − ∏(1 − pᵢ). This is exact: a
//! two-qubit depolarizing channel commutes with every unitary on its own pair, and composing
//! two of them multiplies their survival probabilities. [`evolve_unfused`] applies gates one
//! by one and serves as the reference.

mod kernels;
mod measure;

pub use measure::{expectation, measure_counts, readout_mitigate, Confusion, CountsTable, QuasiDistribution};

use std::collections::HashMap;

use num_complex::Complex64;

use crate::circuit::{qubit_mask, Circuit, Gate, Layout, Mat2, MAX_WIDTH};
use crate::noise::{Epoch, NoiseError, NoiseProcess};

pub type Mat4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("width {0} outside 1..={MAX_WIDTH}")]
    Width(usize),
    #[error("rate {rate} for {what} outside [0,1]")]
    Rate { what: String, rate: f64 },
    #[error("no CNOT rate for logical pair ({0}, {1})")]
    MissingRate(usize, usize),
    #[error("width mismatch: state {state}, {other} {other_width}")]
    WidthMismatch { state: usize, other: &'static str, other_width: usize },
    #[error("shots must be >= 1")]
    NoShots,
    #[error("confusion matrix for qubit {0} is singular")]
    SingularConfusion(usize),
    #[error("confusion matrix for qubit {0} is not column-stochastic")]
    BadConfusion(usize),
    #[error("invalid state: {0}")]
    State(String),
}

/// Error rates seen by the simulator, indexed by logical qubits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GateNoise {
    cnot: HashMap<(usize, usize), f64>,
    cnot_default: Option<f64>,
    sx: Vec<f64>,
    x: Vec<f64>,
}

impl GateNoise {
    pub fn noiseless() -> GateNoise {
        GateNoise::uniform(0.0)
    }

    /// Every CNOT at rate `p`.
    pub fn uniform(p: f64) -> GateNoise {
        GateNoise { cnot_default: Some(p), ..GateNoise::default() }
    }

    pub fn with_cnot(mut self, control: usize, target: usize, p: f64) -> GateNoise {
        self.cnot.insert((control, target), p);
        self
    }

    /// Per-qubit depolarizing rates after SX (and SX†) and after X.
    pub fn with_single_qubit(mut self, sx: Vec<f64>, x: Vec<f64>) -> GateNoise {
        self.sx = sx;
        self.x = x;
        self
    }

    /// Rates of one epoch mapped onto logical qubits through `layout`.
    pub fn from_epoch(epoch: &Epoch, layout: &Layout, process: &NoiseProcess) -> Result<GateNoise, NoiseError> {
        let w = layout.width();
        let mut noise = GateNoise::default();
        for c in 0..w {
            for t in 0..w {
                if c != t {
                    if let Some(&p) = epoch.cx.get(&layout.physical_pair(c, t)) {
                        noise.cnot.insert((c, t), p);
                    }
                }
            }
        }
        if process.single_qubit_noise {
            for &q in layout.physical_qubits() {
                let cal = process.base.qubit(q).ok_or_else(|| NoiseError::Missing(format!("qubit {q}")))?;
                noise.sx.push(cal.sx);
                noise.x.push(cal.x);
            }
        }
        Ok(noise)
    }

    pub fn cnot_rate(&self, control: usize, target: usize) -> Result<f64, SimError> {
        self.cnot
            .get(&(control, target))
            .copied()
            .or(self.cnot_default)
            .ok_or(SimError::MissingRate(control, target))
    }

    fn single_rate(&self, gate: &Gate) -> f64 {
        match *gate {
            Gate::Sx(q) | Gate::Sxdg(q) => self.sx.get(q).copied().unwrap_or(0.0),
            Gate::X(q) => self.x.get(q).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let check = |what: String, rate: f64| {
            if (0.0..=1.0).contains(&rate) {
                Ok(())
            } else {
                Err(SimError::Rate { what, rate })
            }
        };
        for (&(c, t), &p) in &self.cnot {
            check(format!("cnot ({c},{t})"), p)?;
        }
        if let Some(p) = self.cnot_default {
            check("default cnot".into(), p)?;
        }
        for (q, &p) in self.sx.iter().enumerate() {
            check(format!("sx q{q}"), p)?;
        }
        for (q, &p) in self.x.iter().enumerate() {
            check(format!("x q{q}"), p)?;
        }
        Ok(())
    }
}

/// Row-major density matrix over `width` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    width: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// |0…0⟩⟨0…0|.
    pub fn zero_state(width: usize) -> Result<DensityMatrix, SimError> {
        check_width(width)?;
        let dim = 1 << width;
        let mut data = vec![ZERO; dim * dim];
        data[0] = ONE;
        Ok(DensityMatrix { width, dim, data })
    }

    pub fn maximally_mixed(width: usize) -> Result<DensityMatrix, SimError> {
        check_width(width)?;
        let dim = 1 << width;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(DensityMatrix { width, dim, data })
    }

    /// |ψ⟩⟨ψ| for a normalised amplitude vector.
    pub fn from_statevector(amplitudes: &[Complex64]) -> Result<DensityMatrix, SimError> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() {
            return Err(SimError::State(format!("length {dim} is not a power of two")));
        }
        let width = dim.trailing_zeros() as usize;
        check_width(width)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SimError::State(format!("norm {norm} != 1")));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for a in amplitudes {
            for b in amplitudes {
                data.push(a * b.conj());
            }
        }
        Ok(DensityMatrix { width, dim, data })
    }

    /// Wraps raw row-major entries. Only the shape is checked.
    pub fn from_entries(width: usize, data: Vec<Complex64>) -> Result<DensityMatrix, SimError> {
        check_width(width)?;
        let dim = 1 << width;
        if data.len() != dim * dim {
            return Err(SimError::State(format!("expected {} entries, got {}", dim * dim, data.len())));
        }
        Ok(DensityMatrix { width, dim, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// Diagonal in the computational basis; round-off negatives are clipped to zero.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.entry(i, i).re.max(0.0)).collect()
    }

    /// max |ρ − ρ†|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }

    /// True when ρ + tol·I admits a Cholesky factorisation, i.e. no eigenvalue is below −tol.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let n = self.dim;
        let mut l = vec![ZERO; n * n];
        for j in 0..n {
            let mut d = self.entry(j, j).re + tol;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d <= 0.0 {
                return false;
            }
            let d = d.sqrt();
            l[j * n + j] = Complex64::new(d, 0.0);
            for i in j + 1..n {
                let mut s = self.entry(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        true
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn fidelity_with_pure(&self, psi: &[Complex64]) -> f64 {
        let mut f = ZERO;
        for i in 0..self.dim {
            let mut row = ZERO;
            for j in 0..self.dim {
                row += self.entry(i, j) * psi[j];
            }
            f += psi[i].conj() * row;
        }
        f.re
    }

    /// (1 − w)·self + w·other.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix, SimError> {
        if other.width != self.width {
            return Err(SimError::WidthMismatch { state: self.width, other: "state", other_width: other.width });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a * (1.0 - w) + b * w).collect();
        Ok(DensityMatrix { width: self.width, dim: self.dim, data })
    }

    /// Reduced state on (a, b); a is the high bit of the local index.
    pub fn reduced_pair(&self, a: usize, b: usize) -> Mat4 {
        let (ma, mb) = (qubit_mask(a, self.width), qubit_mask(b, self.width));
        let off = [0, mb, ma, ma | mb];
        let mut out = [[ZERO; 4]; 4];
        for base in (0..self.dim).filter(|i| i & (ma | mb) == 0) {
            for s in 0..4 {
                for t in 0..4 {
                    out[s][t] += self.entry(base | off[s], base | off[t]);
                }
            }
        }
        out
    }

    /// Applies one gate exactly (no noise).
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        self.check_qubits(&gate.qubits())?;
        match *gate {
            Gate::Cnot { control, target } => self.apply_unitary2(control, target, &cnot_local()),
            g => self.apply_unitary1(g.single_qubit().expect("single-qubit gate"), &g.matrix1().expect("single-qubit gate")),
        }
        Ok(())
    }

    pub fn apply_unitary1(&mut self, q: usize, u: &Mat2) {
        kernels::apply_local(&mut self.data, self.dim, [0, qubit_mask(q, self.width)], u);
    }

    /// Applies a 4×4 unitary in the local basis |a, b⟩.
    pub fn apply_unitary2(&mut self, a: usize, b: usize, u: &Mat4) {
        let (ma, mb) = (qubit_mask(a, self.width), qubit_mask(b, self.width));
        kernels::apply_local(&mut self.data, self.dim, [0, mb, ma, ma | mb], u);
    }

    pub fn depolarize2(&mut self, a: usize, b: usize, p: f64) {
        let (ma, mb) = (qubit_mask(a, self.width), qubit_mask(b, self.width));
        kernels::depolarize(&mut self.data, self.dim, [0, mb, ma, ma | mb], p);
    }

    pub fn depolarize1(&mut self, q: usize, p: f64) {
        kernels::depolarize(&mut self.data, self.dim, [0, qubit_mask(q, self.width)], p);
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<(), SimError> {
        match qubits.iter().find(|&&q| q >= self.width) {
            Some(&q) => Err(SimError::WidthMismatch { state: self.width, other: "qubit index", other_width: q + 1 }),
            None => Ok(()),
        }
    }

    fn apply_op(&mut self, op: &Op) {
        match *op {
            Op::Unitary1 { q, ref u } => self.apply_unitary1(q, u),
            Op::Unitary2 { a, b, ref u } => self.apply_unitary2(a, b, u),
            Op::Depolarize1 { q, p } => self.depolarize1(q, p),
            Op::Depolarize2 { a, b, p } => self.depolarize2(a, b, p),
        }
    }
}

fn check_width(width: usize) -> Result<(), SimError> {
    if (1..=MAX_WIDTH).contains(&width) {
        Ok(())
    } else {
        Err(SimError::Width(width))
    }
}

fn cnot_local() -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[r][c] = ONE;
    }
    m
}

/// Noisy evolution of |0…0⟩ through `circuit`, with gate fusion.
pub fn evolve(circuit: &Circuit, noise: &GateNoise) -> Result<DensityMatrix, SimError> {
    evolve_from(DensityMatrix::zero_state(circuit.width())?, circuit, noise)
}

/// Noisy evolution of an arbitrary initial state, with gate fusion.
pub fn evolve_from(mut rho: DensityMatrix, circuit: &Circuit, noise: &GateNoise) -> Result<DensityMatrix, SimError> {
    if rho.width != circuit.width() {
        return Err(SimError::WidthMismatch { state: rho.width, other: "circuit", other_width: circuit.width() });
    }
    noise.validate()?;
    for op in compile(circuit, noise)? {
        rho.apply_op(&op);
    }
    Ok(rho)
}

/// Gate-by-gate reference evolution without fusion.
pub fn evolve_unfused(circuit: &Circuit, noise: &GateNoise) -> Result<DensityMatrix, SimError> {
    check_width(circuit.width())?;
    noise.validate()?;
    let mut rho = DensityMatrix::zero_state(circuit.width())?;
    for g in circuit.gates() {
        rho.apply_gate(g)?;
        match *g {
            Gate::Cnot { control, target } => {
                let p = noise.cnot_rate(control, target)?;
                if p > 0.0 {
                    rho.depolarize2(control, target, p);
                }
            }
            _ => {
                let p = noise.single_rate(g);
                if p > 0.0 {
                    rho.depolarize1(g.single_qubit().expect("single-qubit gate"), p);
                }
            }
        }
    }
    Ok(rho)
}

#[derive(Clone, Debug)]
enum Op {
    Unitary1 { q: usize, u: Mat2 },
    Unitary2 { a: usize, b: usize, u: Mat4 },
    Depolarize1 { q: usize, p: f64 },
    Depolarize2 { a: usize, b: usize, p: f64 },
}

enum Block {
    Empty,
    One { q: usize, u: Mat2 },
    Two { a: usize, b: usize, u: Mat4, survival: f64 },
}

fn mul2(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    m
}

fn mul4(x: &Mat4, y: &Mat4) -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            if x[i][k] != ZERO {
                for j in 0..4 {
                    m[i][j] += x[i][k] * y[k][j];
                }
            }
        }
    }
    m
}

/// `u` acting on the high (`high = true`) or low bit of a two-qubit local basis.
fn embed(u: &Mat2, high: bool) -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let (rh, rl, ch, cl) = (r >> 1, r & 1, c >> 1, c & 1);
            m[r][c] = if high {
                if rl == cl { u[rh][ch] } else { ZERO }
            } else if rh == ch {
                u[rl][cl]
            } else {
                ZERO
            };
        }
    }
    m
}

/// CNOT in the local basis of (a, b), with control either a or b.
fn cnot_in(a: usize, control: usize) -> Mat4 {
    if control == a {
        cnot_local()
    } else {
        let mut m = [[ZERO; 4]; 4];
        for (r, c) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
            m[r][c] = ONE;
        }
        m
    }
}

fn flush(block: &mut Block, ops: &mut Vec<Op>) {
    match std::mem::replace(block, Block::Empty) {
        Block::Empty => {}
        Block::One { q, u } => ops.push(Op::Unitary1 { q, u }),
        Block::Two { a, b, u, survival } => {
            ops.push(Op::Unitary2 { a, b, u });
            if survival < 1.0 {
                ops.push(Op::Depolarize2 { a, b, p: 1.0 - survival });
            }
        }
    }
}

fn compile(circuit: &Circuit, noise: &GateNoise) -> Result<Vec<Op>, SimError> {
    let mut ops = Vec::new();
    let mut block = Block::Empty;
    for g in circuit.gates() {
        match *g {
            Gate::Cnot { control, target } => {
                let keep = 1.0 - noise.cnot_rate(control, target)?;
                block = match block {
                    Block::Two { a, b, u, survival } if (a == control && b == target) || (a == target && b == control) => {
                        Block::Two { a, b, u: mul4(&cnot_in(a, control), &u), survival: survival * keep }
                    }
                    Block::One { q, u } if q == control || q == target => {
                        let prior = embed(&u, q == control);
                        Block::Two { a: control, b: target, u: mul4(&cnot_local(), &prior), survival: keep }
                    }
                    other => {
                        let mut other = other;
                        flush(&mut other, &mut ops);
                        Block::Two { a: control, b: target, u: cnot_local(), survival: keep }
                    }
                };
            }
            _ => {
                let q = g.single_qubit().expect("single-qubit gate");
                let m = g.matrix1().expect("single-qubit gate");
                block = match block {
                    Block::One { q: bq, u } if bq == q => Block::One { q, u: mul2(&m, &u) },
                    Block::Two { a, b, u, survival } if q == a || q == b => {
                        Block::Two { a, b, u: mul4(&embed(&m, q == a), &u), survival }
                    }
                    other => {
                        let mut other = other;
                        flush(&mut other, &mut ops);
                        Block::One { q, u: m }
                    }
                };
                let p = noise.single_rate(g);
                if p > 0.0 {
                    flush(&mut block, &mut ops);
                    ops.push(Op::Depolarize1 { q, p });
                }
            }
        }
    }
    flush(&mut block, &mut ops);
    Ok(ops)
}
