use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Placement of logical qubits on device qubits.
///
/// Used only to look up calibration data: readout and single-qubit rates by physical qubit,
/// CNOT rates by physical directed pair. A pair override covers CNOTs whose logical endpoints
/// were routed through a different coupler than their placement suggests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    qubits: Vec<u32>,
    #[serde(default, with = "pair_map")]
    pair_overrides: BTreeMap<(usize, usize), (u32, u32)>,
}

impl Layout {
    pub fn new(qubits: Vec<u32>) -> Layout {
        Layout { qubits, pair_overrides: BTreeMap::new() }
    }

    /// Logical qubit i on physical qubit i.
    pub fn identity(width: usize) -> Layout {
        Layout::new((0..width as u32).collect())
    }

    pub fn with_pair(mut self, logical: (usize, usize), physical: (u32, u32)) -> Layout {
        self.pair_overrides.insert(logical, physical);
        self
    }

    pub fn width(&self) -> usize {
        self.qubits.len()
    }

    pub fn physical_qubit(&self, q: usize) -> u32 {
        self.qubits[q]
    }

    pub fn physical_qubits(&self) -> &[u32] {
        &self.qubits
    }

    pub fn physical_pair(&self, control: usize, target: usize) -> (u32, u32) {
        self.pair_overrides
            .get(&(control, target))
            .copied()
            .unwrap_or((self.qubits[control], self.qubits[target]))
    }
}

mod pair_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        logical: (usize, usize),
        physical: (u32, u32),
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<(usize, usize), (u32, u32)>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Entry> = m.iter().map(|(&logical, &physical)| Entry { logical, physical }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, usize), (u32, u32)>, D::Error> {
        let v = Vec::<Entry>::deserialize(d)?;
        Ok(v.into_iter().map(|e| (e.logical, e.physical)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_take_precedence() {
        let l = Layout::new(vec![4, 7, 6]).with_pair((0, 2), (6, 7));
        assert_eq!(l.physical_pair(0, 1), (4, 7));
        assert_eq!(l.physical_pair(0, 2), (6, 7));
        assert_eq!(l.physical_pair(2, 0), (6, 4));
        let back: Layout = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        assert_eq!(back, l);
    }
}
