//! In-place kernels on a row-major density matrix.
//!
//! A local operator on K = 2 or 4 basis states is described by `offs`: the index offsets of the
//! local basis states relative to a base index whose local bits are all zero.

use num_complex::Complex64;

const TOL: f64 = 1e-12;

fn bases<const K: usize>(dim: usize, offs: [usize; K]) -> Vec<usize> {
    let mask = offs[K - 1];
    (0..dim).filter(|i| i & mask == 0).collect()
}

enum Structure<const K: usize> {
    Diagonal([Complex64; K]),
    /// Row r of U has its single nonzero `phase[r]` in column `perm[r]`.
    Monomial { perm: [usize; K], phase: [Complex64; K] },
    Dense,
}

fn classify<const K: usize>(u: &[[Complex64; K]; K]) -> Structure<K> {
    let mut perm = [0usize; K];
    let mut phase = [Complex64::new(0.0, 0.0); K];
    let mut used = [false; K];
    for r in 0..K {
        let mut found = None;
        for c in 0..K {
            if u[r][c].norm() > TOL {
                if found.is_some() {
                    return Structure::Dense;
                }
                found = Some(c);
            }
        }
        match found {
            Some(c) if !used[c] => {
                used[c] = true;
                perm[r] = c;
                phase[r] = u[r][c];
            }
            _ => return Structure::Dense,
        }
    }
    if (0..K).all(|r| perm[r] == r) {
        Structure::Diagonal(phase)
    } else {
        Structure::Monomial { perm, phase }
    }
}

/// ρ → UρU†.
pub fn apply_local<const K: usize>(data: &mut [Complex64], dim: usize, offs: [usize; K], u: &[[Complex64; K]; K]) {
    let bases = bases(dim, offs);
    match classify(u) {
        Structure::Diagonal(d) => {
            let mut dv = vec![Complex64::new(0.0, 0.0); dim];
            for &b in &bases {
                for s in 0..K {
                    dv[b + offs[s]] = d[s];
                }
            }
            for i in 0..dim {
                let di = dv[i];
                let row = &mut data[i * dim..(i + 1) * dim];
                for (x, dj) in row.iter_mut().zip(&dv) {
                    *x *= di * dj.conj();
                }
            }
        }
        Structure::Monomial { perm, phase } => {
            let mut scratch = vec![Complex64::new(0.0, 0.0); K * dim];
            for &b in &bases {
                for s in 0..K {
                    let src = (b + offs[s]) * dim;
                    scratch[s * dim..(s + 1) * dim].copy_from_slice(&data[src..src + dim]);
                }
                for r in 0..K {
                    let dst = (b + offs[r]) * dim;
                    let src = &scratch[perm[r] * dim..(perm[r] + 1) * dim];
                    for (x, y) in data[dst..dst + dim].iter_mut().zip(src) {
                        *x = phase[r] * y;
                    }
                }
            }
            let conj: [Complex64; K] = std::array::from_fn(|r| phase[r].conj());
            for i in 0..dim {
                let row = &mut data[i * dim..(i + 1) * dim];
                for &b in &bases {
                    let v: [Complex64; K] = std::array::from_fn(|t| row[b + offs[t]]);
                    for r in 0..K {
                        row[b + offs[r]] = conj[r] * v[perm[r]];
                    }
                }
            }
        }
        Structure::Dense => {
            for &b in &bases {
                for j in 0..dim {
                    let v: [Complex64; K] = std::array::from_fn(|s| data[(b + offs[s]) * dim + j]);
                    for r in 0..K {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for s in 0..K {
                            acc += u[r][s] * v[s];
                        }
                        data[(b + offs[r]) * dim + j] = acc;
                    }
                }
            }
            let uc: [[Complex64; K]; K] = std::array::from_fn(|r| std::array::from_fn(|t| u[r][t].conj()));
            for i in 0..dim {
                let row = &mut data[i * dim..(i + 1) * dim];
                for &b in &bases {
                    let v: [Complex64; K] = std::array::from_fn(|t| row[b + offs[t]]);
                    for r in 0..K {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for t in 0..K {
                            acc += v[t] * uc[r][t];
                        }
                        row[b + offs[r]] = acc;
                    }
                }
            }
        }
    }
}

/// ρ → (1−p)ρ + p·(I/K ⊗ Tr_local ρ).
pub fn depolarize<const K: usize>(data: &mut [Complex64], dim: usize, offs: [usize; K], p: f64) {
    if p == 0.0 {
        return;
    }
    let bases = bases(dim, offs);
    let n = bases.len();
    let mut traces = vec![Complex64::new(0.0, 0.0); n * n];
    for (bi, &i0) in bases.iter().enumerate() {
        for (bj, &j0) in bases.iter().enumerate() {
            traces[bi * n + bj] = (0..K).map(|s| data[(i0 + offs[s]) * dim + j0 + offs[s]]).sum();
        }
    }
    let keep = 1.0 - p;
    for x in data.iter_mut() {
        *x *= keep;
    }
    let share = p / K as f64;
    for (bi, &i0) in bases.iter().enumerate() {
        for (bj, &j0) in bases.iter().enumerate() {
            let add = traces[bi * n + bj] * share;
            for s in 0..K {
                data[(i0 + offs[s]) * dim + j0 + offs[s]] += add;
            }
        }
    }
}
