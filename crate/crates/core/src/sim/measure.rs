//! Shot sampling, expectation values and tensor-product readout mitigation.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DensityMatrix, SimError};
use crate::circuit::{bitstring_index, index_bitstring, qubit_mask, Observable};

/// Readout confusion of one qubit: the column-stochastic matrix
/// `[[1 − p0to1, p1to0], [p0to1, 1 − p1to0]]` (columns are the true state).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub p0to1: f64,
    pub p1to0: f64,
}

impl Confusion {
    pub fn identity() -> Confusion {
        Confusion { p0to1: 0.0, p1to0: 0.0 }
    }

    pub fn symmetric(p: f64) -> Confusion {
        Confusion { p0to1: p, p1to0: p }
    }

    fn is_trivial(&self) -> bool {
        self.p0to1 == 0.0 && self.p1to0 == 0.0
    }
}

/// Outcome tallies over all 2^width bitstrings. Counts always sum to `shots`.
#[derive(Clone, Debug, PartialEq)]
pub struct CountsTable {
    width: usize,
    shots: u64,
    counts: Vec<u64>,
}

impl CountsTable {
    pub fn from_map(width: usize, map: &BTreeMap<String, u64>) -> Result<CountsTable, SimError> {
        let mut counts = vec![0u64; 1 << width];
        for (s, &n) in map {
            let i = bitstring_index(s, width)
                .ok_or_else(|| SimError::State(format!("bitstring {s:?} does not have width {width}")))?;
            counts[i] += n;
        }
        let shots = counts.iter().sum();
        if shots == 0 {
            return Err(SimError::NoShots);
        }
        Ok(CountsTable { width, shots, counts })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn get(&self, bitstring: &str) -> u64 {
        bitstring_index(bitstring, self.width).map_or(0, |i| self.counts[i])
    }

    /// Counts indexed by basis state.
    pub fn dense(&self) -> &[u64] {
        &self.counts
    }

    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, &n)| (index_bitstring(i, self.width), n))
            .collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let s = self.shots as f64;
        self.counts.iter().map(|&n| n as f64 / s).collect()
    }
}

impl Serialize for CountsTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            width: usize,
            shots: u64,
            counts: BTreeMap<String, u64>,
        }
        Repr { width: self.width, shots: self.shots, counts: self.to_map() }.serialize(s)
    }
}

/// Draws `shots` outcomes from the diagonal of `state`, then flips each bit independently
/// according to `readout` if given.
pub fn measure_counts<R: Rng + ?Sized>(
    state: &DensityMatrix,
    shots: u64,
    readout: Option<&[Confusion]>,
    rng: &mut R,
) -> Result<CountsTable, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    let width = state.width();
    if let Some(r) = readout {
        if r.len() != width {
            return Err(SimError::WidthMismatch { state: width, other: "readout", other_width: r.len() });
        }
    }
    let readout = readout.filter(|r| r.iter().any(|c| !c.is_trivial()));
    let mut cdf = state.probabilities();
    for i in 1..cdf.len() {
        cdf[i] += cdf[i - 1];
    }
    let total = *cdf.last().expect("nonempty");
    let last = cdf.len() - 1;
    let mut counts = vec![0u64; cdf.len()];
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let mut i = cdf.partition_point(|&c| c <= u).min(last);
        if let Some(r) = readout {
            for (q, c) in r.iter().enumerate() {
                let m = qubit_mask(q, width);
                let flip = if i & m == 0 { c.p0to1 } else { c.p1to0 };
                if flip > 0.0 && rng.random::<f64>() < flip {
                    i ^= m;
                }
            }
        }
        counts[i] += 1;
    }
    Ok(CountsTable { width, shots, counts })
}

/// Empirical ⟨A⟩: weighted frequency of the observable's projectors.
pub fn expectation(counts: &CountsTable, observable: &Observable) -> Result<f64, SimError> {
    if counts.width != observable.width() {
        return Err(SimError::WidthMismatch { state: counts.width, other: "observable", other_width: observable.width() });
    }
    let hits: f64 = observable.weights().iter().zip(&counts.counts).map(|(w, &n)| w * n as f64).sum();
    Ok(hits / counts.shots as f64)
}

/// Quasi-probabilities over basis states; may contain small negatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiDistribution {
    pub width: usize,
    pub values: Vec<f64>,
}

impl QuasiDistribution {
    pub fn get(&self, bitstring: &str) -> f64 {
        bitstring_index(bitstring, self.width).map_or(0.0, |i| self.values[i])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn expectation(&self, observable: &Observable) -> Result<f64, SimError> {
        if self.width != observable.width() {
            return Err(SimError::WidthMismatch { state: self.width, other: "observable", other_width: observable.width() });
        }
        Ok(observable.evaluate(&self.values))
    }
}

/// Applies the inverse of the tensor-product confusion map to the empirical distribution.
pub fn readout_mitigate(counts: &CountsTable, confusion: &[Confusion]) -> Result<QuasiDistribution, SimError> {
    let width = counts.width;
    if confusion.len() != width {
        return Err(SimError::WidthMismatch { state: width, other: "confusion", other_width: confusion.len() });
    }
    let mut v = counts.frequencies();
    for (q, c) in confusion.iter().enumerate() {
        if !(0.0..=1.0).contains(&c.p0to1) || !(0.0..=1.0).contains(&c.p1to0) {
            return Err(SimError::BadConfusion(q));
        }
        let det = 1.0 - c.p0to1 - c.p1to0;
        if det.abs() < 1e-12 {
            return Err(SimError::SingularConfusion(q));
        }
        if c.is_trivial() {
            continue;
        }
        let m = qubit_mask(q, width);
        for i in (0..v.len()).filter(|i| i & m == 0) {
            let (a, b) = (v[i], v[i | m]);
            v[i] = ((1.0 - c.p1to0) * a - c.p1to0 * b) / det;
            v[i | m] = (-c.p0to1 * a + (1.0 - c.p0to1) * b) / det;
        }
    }
    Ok(QuasiDistribution { width, values: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis_state(width: usize, index: usize) -> DensityMatrix {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << width];
        amps[index] = Complex64::new(1.0, 0.0);
        DensityMatrix::from_statevector(&amps).unwrap()
    }

    #[test]
    fn deterministic_outcome() {
        let rho = basis_state(3, 0b101);
        let c = measure_counts(&rho, 777, None, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(c.get("101"), 777);
        assert_eq!(c.shots(), 777);
    }

    #[test]
    fn grover_style_frequencies() {
        let obs = Observable::projectors(3, &["101", "011"], 1.0).unwrap();
        let map: BTreeMap<String, u64> = [("101", 300), ("011", 200), ("000", 500)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let c = CountsTable::from_map(3, &map).unwrap();
        assert!((expectation(&c, &obs).unwrap() - 0.5).abs() < 1e-15);
        let all101 = CountsTable::from_map(3, &[("101".to_string(), 10)].into_iter().collect()).unwrap();
        assert_eq!(expectation(&all101, &obs).unwrap(), 1.0);
        let all000 = CountsTable::from_map(3, &[("000".to_string(), 10)].into_iter().collect()).unwrap();
        assert_eq!(expectation(&all000, &obs).unwrap(), 0.0);
        let narrow = CountsTable::from_map(2, &[("00".to_string(), 10)].into_iter().collect()).unwrap();
        assert!(matches!(expectation(&narrow, &obs), Err(SimError::WidthMismatch { .. })));
    }

    #[test]
    fn identity_confusion_leaves_counts() {
        let map: BTreeMap<String, u64> = [("01".to_string(), 3), ("10".to_string(), 1)].into_iter().collect();
        let c = CountsTable::from_map(2, &map).unwrap();
        let q = readout_mitigate(&c, &[Confusion::identity(); 2]).unwrap();
        assert_eq!(q.values, c.frequencies());
    }

    #[test]
    fn singular_confusion_rejected() {
        let c = CountsTable::from_map(1, &[("0".to_string(), 3)].into_iter().collect()).unwrap();
        assert_eq!(readout_mitigate(&c, &[Confusion::symmetric(0.5)]), Err(SimError::SingularConfusion(0)));
    }

    #[test]
    fn zero_shots_rejected() {
        let rho = basis_state(1, 0);
        assert_eq!(measure_counts(&rho, 0, None, &mut ChaCha8Rng::seed_from_u64(1)).unwrap_err(), SimError::NoShots);
    }
}
