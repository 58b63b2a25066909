//! Reference implementations used as independent oracles.
//!
//! Everything here works on full 2^n × 2^n matrices built from Kronecker products, with gate
//! matrices written out from their textbook definitions. Nothing reuses the crate's kernels,
//! fusion or gate matrices.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use zne_core::{Circuit, Gate};

pub type Mat = Vec<Vec<C>>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn identity(d: usize) -> Mat {
    (0..d).map(|i| (0..d).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![c(0.0, 0.0); m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..m {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn dagger(a: &Mat) -> Mat {
    (0..a[0].len()).map(|i| (0..a.len()).map(|j| a[j][i].conj()).collect()).collect()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn pauli(k: usize) -> Mat {
    match k {
        0 => identity(2),
        1 => vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]],
        2 => vec![vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]],
        _ => vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]],
    }
}

fn one_qubit(g: &Gate) -> Mat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match *g {
        Gate::H(_) => vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]],
        Gate::X(_) => pauli(1),
        // √X = e^{iπ/4} RX(π/2).
        Gate::Sx(_) => {
            let rx = vec![vec![c(s, 0.0), c(0.0, -s)], vec![c(0.0, -s), c(s, 0.0)]];
            let ph = C::from_polar(1.0, std::f64::consts::FRAC_PI_4);
            rx.into_iter().map(|r| r.into_iter().map(|v| v * ph).collect()).collect()
        }
        Gate::Sxdg(q) => dagger(&one_qubit(&Gate::Sx(q))),
        Gate::Rz(_, t) => vec![
            vec![C::from_polar(1.0, -t / 2.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), C::from_polar(1.0, t / 2.0)],
        ],
        Gate::Cnot { .. } => unreachable!(),
    }
}

/// `op` on qubit `q` of `n`, qubit 0 leftmost in the tensor product.
pub fn embed1(op: &Mat, q: usize, n: usize) -> Mat {
    (0..n).fold(vec![vec![c(1.0, 0.0)]], |acc, k| kron(&acc, &if k == q { op.clone() } else { identity(2) }))
}

/// Full-space matrix of a gate, built by permutation for CNOT.
pub fn full_matrix(g: &Gate, n: usize) -> Mat {
    match *g {
        Gate::Cnot { control, target } => {
            let d = 1 << n;
            let bit = |q: usize| 1usize << (n - 1 - q);
            let mut m = vec![vec![c(0.0, 0.0); d]; d];
            for col in 0..d {
                let row = if col & bit(control) != 0 { col ^ bit(target) } else { col };
                m[row][col] = c(1.0, 0.0);
            }
            m
        }
        _ => embed1(&one_qubit(g), g.qubits()[0], n),
    }
}

pub fn circuit_unitary(circuit: &Circuit) -> Mat {
    let n = circuit.width();
    circuit.gates().iter().fold(identity(1 << n), |u, g| matmul(&full_matrix(g, n), &u))
}

pub fn statevector(circuit: &Circuit) -> Vec<C> {
    let u = circuit_unitary(circuit);
    u.iter().map(|row| row[0]).collect()
}

/// Two-qubit depolarizing with replacement probability p, as the Pauli-twirl Kraus sum
/// (1 − p)ρ + (p/16)·Σ_{P,Q} (P⊗Q)ρ(P⊗Q)†.
pub fn depolarize_pair(rho: &Mat, a: usize, b: usize, p: f64, n: usize) -> Mat {
    let d = rho.len();
    let mut out: Mat = rho.iter().map(|r| r.iter().map(|v| v * (1.0 - p)).collect()).collect();
    for i in 0..4 {
        for j in 0..4 {
            let k = matmul(&embed1(&pauli(i), a, n), &embed1(&pauli(j), b, n));
            let term = matmul(&matmul(&k, rho), &dagger(&k));
            for r in 0..d {
                for s in 0..d {
                    out[r][s] += term[r][s] * (p / 16.0);
                }
            }
        }
    }
    out
}

/// Density matrix of `circuit` from |0…0⟩ with depolarizing noise `rate(control, target)`
/// after every CNOT.
pub fn noisy_density(circuit: &Circuit, rate: impl Fn(usize, usize) -> f64) -> Mat {
    let n = circuit.width();
    let d = 1 << n;
    let mut rho = vec![vec![c(0.0, 0.0); d]; d];
    rho[0][0] = c(1.0, 0.0);
    for g in circuit.gates() {
        let u = full_matrix(g, n);
        rho = matmul(&matmul(&u, &rho), &dagger(&u));
        if let Gate::Cnot { control, target } = *g {
            let p = rate(control, target);
            if p > 0.0 {
                rho = depolarize_pair(&rho, control, target, p, n);
            }
        }
    }
    rho
}

pub fn max_abs_diff(a: &Mat, b: &[C]) -> f64 {
    let d = a.len();
    (0..d * d).map(|k| (a[k / d][k % d] - b[k]).norm()).fold(0.0, f64::max)
}

/// Brute-force nearest realizable factor: the total T ≥ 0 minimizing |1 + 2T/N − λ′|, ties to
/// the larger total.
pub fn brute_force_lambda(desired: f64, n: usize) -> (i64, i64) {
    let mut best = (0i64, f64::INFINITY);
    for t in 0..=(desired * n as f64).ceil() as i64 + 2 {
        let d = (1.0 + 2.0 * t as f64 / n as f64 - desired).abs();
        if d <= best.1 {
            best = (t, d);
        }
    }
    (n as i64 + 2 * best.0, n as i64)
}
