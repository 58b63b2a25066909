//! Calibration data and the run-to-run noise process.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, Layout};
use crate::rng::{self, Purpose};

/// Upper bound of a two-qubit depolarizing rate that keeps the channel physical.
pub const MAX_CX_RATE: f64 = 0.75;

const BUILTIN_CX: &str = include_str!("../data/cx_errors.csv");
const BUILTIN_QUBITS: &str = include_str!("../data/qubit_props.csv");

#[derive(Debug, thiserror::Error)]
pub enum NoiseError {
    #[error("calibration input is empty")]
    Empty,
    #[error("missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("pair {0}_{1} listed twice with different rates")]
    Asymmetric(u32, u32),
    #[error("invalid noise parameter: {0}")]
    Parameter(String),
    #[error("no calibration for {0}")]
    Missing(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Per-qubit calibration row. Frequencies and coherence times are carried but not used by the
/// channel model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitCalibration {
    pub readout: f64,
    pub sx: f64,
    pub x: f64,
    #[serde(default)]
    pub frequency_ghz: Option<f64>,
    #[serde(default)]
    pub t1_us: Option<f64>,
    #[serde(default)]
    pub t2_us: Option<f64>,
}

impl QubitCalibration {
    pub fn ideal() -> QubitCalibration {
        QubitCalibration { readout: 0.0, sx: 0.0, x: 0.0, frequency_ghz: None, t1_us: None, t2_us: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    #[serde(with = "pair_keys")]
    cx: BTreeMap<(u32, u32), f64>,
    qubits: BTreeMap<u32, QubitCalibration>,
}

impl CalibrationTable {
    pub fn new(cx: BTreeMap<(u32, u32), f64>, qubits: BTreeMap<u32, QubitCalibration>) -> Result<CalibrationTable, NoiseError> {
        for (&(a, b), &p) in &cx {
            check_rate(p, &format!("cx {a}_{b}"))?;
            if let Some(&q) = cx.get(&(b, a)) {
                if (q - p).abs() > 1e-12 {
                    return Err(NoiseError::Asymmetric(a, b));
                }
            }
        }
        for (q, c) in &qubits {
            for (name, v) in [("readout", c.readout), ("sx", c.sx), ("x", c.x)] {
                check_rate(v, &format!("qubit {q} {name}"))?;
            }
        }
        Ok(CalibrationTable { cx, qubits })
    }

    /// Parses a CX table and, optionally, a qubit table.
    pub fn from_csv(cx: impl Read, qubits: Option<impl Read>) -> Result<CalibrationTable, NoiseError> {
        let cx = parse_cx_errors(cx)?;
        let qubits = match qubits {
            Some(r) => parse_qubit_props(r)?,
            None => BTreeMap::new(),
        };
        CalibrationTable::new(cx, qubits)
    }

    pub fn from_files(cx: &Path, qubits: Option<&Path>) -> Result<CalibrationTable, NoiseError> {
        let cx = std::fs::File::open(cx)?;
        let qubits = qubits.map(std::fs::File::open).transpose()?;
        CalibrationTable::from_csv(cx, qubits)
    }

    /// The shipped 27-qubit device tables.
    pub fn builtin() -> CalibrationTable {
        CalibrationTable::from_csv(BUILTIN_CX.as_bytes(), Some(BUILTIN_QUBITS.as_bytes())).expect("shipped tables parse")
    }

    /// Every listed pair (both directions) at rate `p`, ideal qubits.
    pub fn uniform(pairs: impl IntoIterator<Item = (u32, u32)>, p: f64) -> Result<CalibrationTable, NoiseError> {
        let mut cx = BTreeMap::new();
        let mut qubits = BTreeMap::new();
        for (a, b) in pairs {
            cx.insert((a, b), p);
            cx.insert((b, a), p);
            qubits.insert(a, QubitCalibration::ideal());
            qubits.insert(b, QubitCalibration::ideal());
        }
        CalibrationTable::new(cx, qubits)
    }

    /// Uniform table covering exactly the couplers `circuit` uses under `layout`.
    pub fn uniform_for(circuit: &Circuit, layout: &Layout, p: f64) -> Result<CalibrationTable, NoiseError> {
        let mut t = CalibrationTable::uniform(used_pairs(circuit, layout), p)?;
        for &q in layout.physical_qubits() {
            t.qubits.entry(q).or_insert_with(QubitCalibration::ideal);
        }
        Ok(t)
    }

    /// All CX rates multiplied by `factor`; fails if any leaves [0, 1].
    pub fn scaled(&self, factor: f64) -> Result<CalibrationTable, NoiseError> {
        let cx = self.cx.iter().map(|(&k, &v)| (k, v * factor)).collect();
        CalibrationTable::new(cx, self.qubits.clone())
    }

    pub fn cx_error(&self, pair: (u32, u32)) -> Option<f64> {
        self.cx.get(&pair).copied()
    }

    pub fn cx_errors(&self) -> &BTreeMap<(u32, u32), f64> {
        &self.cx
    }

    pub fn qubit(&self, q: u32) -> Option<&QubitCalibration> {
        self.qubits.get(&q)
    }

    pub fn qubits(&self) -> &BTreeMap<u32, QubitCalibration> {
        &self.qubits
    }

    /// Median over the listed CX entries. `None` for an empty table.
    pub fn median_cx_error(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.cx.values().copied().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
    }
}

fn check_rate(p: f64, what: &str) -> Result<(), NoiseError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(NoiseError::Parameter(format!("{what} rate {p} outside [0,1]")))
    }
}

/// Physical couplers used by the CNOTs of `circuit`, direction-normalised (low, high).
pub fn used_pairs(circuit: &Circuit, layout: &Layout) -> BTreeSet<(u32, u32)> {
    circuit
        .gates()
        .iter()
        .filter_map(|g| match *g {
            Gate::Cnot { control, target } => {
                let (a, b) = layout.physical_pair(control, target);
                Some((a.min(b), a.max(b)))
            }
            _ => None,
        })
        .collect()
}

fn csv_reader(r: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).has_headers(true).from_reader(r)
}

fn column(headers: &csv::StringRecord, name: &'static str) -> Result<usize, NoiseError> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or(NoiseError::MissingColumn(name))
}

fn optional_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name))
}

fn field(rec: &csv::StringRecord, idx: usize, row: usize) -> Result<&str, NoiseError> {
    rec.get(idx).ok_or_else(|| NoiseError::Row { row, message: format!("missing field {idx}") })
}

fn parse_f64(s: &str, row: usize, what: &str) -> Result<f64, NoiseError> {
    s.parse::<f64>().map_err(|_| NoiseError::Row { row, message: format!("bad {what} {s:?}") })
}

/// Parses `pair,error` rows; a pair is written `control_target`. Row numbers are 1-based
/// data rows (the header is row 0).
pub fn parse_cx_errors(r: impl Read) -> Result<BTreeMap<(u32, u32), f64>, NoiseError> {
    let mut reader = csv_reader(r);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(NoiseError::Empty);
    }
    let (pi, ei) = (column(&headers, "pair")?, column(&headers, "error")?);
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| NoiseError::Row { row, message: e.to_string() })?;
        let pair = field(&rec, pi, row)?;
        let (a, b) = pair
            .split_once('_')
            .and_then(|(a, b)| Some((a.parse::<u32>().ok()?, b.parse::<u32>().ok()?)))
            .ok_or_else(|| NoiseError::Row { row, message: format!("bad pair {pair:?}") })?;
        let e = parse_f64(field(&rec, ei, row)?, row, "error")?;
        if !(0.0..=1.0).contains(&e) {
            return Err(NoiseError::Row { row, message: format!("error {e} outside [0,1]") });
        }
        out.insert((a, b), e);
    }
    if out.is_empty() {
        return Err(NoiseError::Empty);
    }
    Ok(out)
}

/// Parses `qubit,readout,sx,x[,frequency_ghz,t1_us,t2_us]` rows.
pub fn parse_qubit_props(r: impl Read) -> Result<BTreeMap<u32, QubitCalibration>, NoiseError> {
    let mut reader = csv_reader(r);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(NoiseError::Empty);
    }
    let q = column(&headers, "qubit")?;
    let ro = column(&headers, "readout")?;
    let sx = column(&headers, "sx")?;
    let x = column(&headers, "x")?;
    let extras = ["frequency_ghz", "t1_us", "t2_us"].map(|n| optional_column(&headers, n));
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| NoiseError::Row { row, message: e.to_string() })?;
        let qubit = field(&rec, q, row)?
            .parse::<u32>()
            .map_err(|_| NoiseError::Row { row, message: "bad qubit index".into() })?;
        let rate = |idx, what| -> Result<f64, NoiseError> {
            let v = parse_f64(field(&rec, idx, row)?, row, what)?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(NoiseError::Row { row, message: format!("{what} {v} outside [0,1]") })
            }
        };
        let extra = |k: usize| -> Result<Option<f64>, NoiseError> {
            match extras[k] {
                Some(idx) => Ok(Some(parse_f64(field(&rec, idx, row)?, row, "property")?)),
                None => Ok(None),
            }
        };
        out.insert(
            qubit,
            QubitCalibration {
                readout: rate(ro, "readout")?,
                sx: rate(sx, "sx")?,
                x: rate(x, "x")?,
                frequency_ghz: extra(0)?,
                t1_us: extra(1)?,
                t2_us: extra(2)?,
            },
        );
    }
    if out.is_empty() {
        return Err(NoiseError::Empty);
    }
    Ok(out)
}

/// Calibrated device whose CNOT rates drift from run to run.
///
/// In a normal epoch each coupler's rate is multiplied by `exp(drift_sigma·Z)` with an
/// independent standard normal Z per coupler (both directions share one factor), and by one
/// further factor `exp(global_drift_sigma·Z_g)` shared by every coupler in that run. With
/// probability `outlier_prob` the epoch is instead an outlier and every rate is exactly
/// `outlier_scale` times the base rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseProcess {
    pub base: CalibrationTable,
    pub drift_sigma: f64,
    #[serde(default)]
    pub global_drift_sigma: f64,
    pub outlier_prob: f64,
    pub outlier_scale: f64,
    pub readout_enabled: bool,
    #[serde(default)]
    pub single_qubit_noise: bool,
    pub seed: u64,
}

impl NoiseProcess {
    /// No drift, no outliers, no readout or single-qubit noise.
    pub fn stationary(base: CalibrationTable, seed: u64) -> NoiseProcess {
        NoiseProcess {
            base,
            drift_sigma: 0.0,
            global_drift_sigma: 0.0,
            outlier_prob: 0.0,
            outlier_scale: 1.0,
            readout_enabled: false,
            single_qubit_noise: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |m: String| Err(NoiseError::Parameter(m));
        if !(self.drift_sigma >= 0.0 && self.drift_sigma.is_finite()) {
            return bad(format!("drift_sigma {} must be finite and >= 0", self.drift_sigma));
        }
        if !(self.global_drift_sigma >= 0.0 && self.global_drift_sigma.is_finite()) {
            return bad(format!("global_drift_sigma {} must be finite and >= 0", self.global_drift_sigma));
        }
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            return bad(format!("outlier_prob {} outside [0,1]", self.outlier_prob));
        }
        if !(self.outlier_scale >= 1.0 && self.outlier_scale.is_finite()) {
            return bad(format!("outlier_scale {} must be >= 1", self.outlier_scale));
        }
        Ok(())
    }

    /// Effective rates for run `run_index`. A pure function of `(self, run_index)`.
    pub fn sample_epoch(&self, run_index: u64) -> Epoch {
        let mut rng = rng::stream(self.seed, Purpose::Epoch, &[run_index]);
        let outlier = rng.random::<f64>() < self.outlier_prob;
        let zg: f64 = StandardNormal.sample(&mut rng);
        let global = (self.global_drift_sigma * zg).exp();
        let mut factors: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for &(a, b) in self.base.cx.keys() {
            let key = (a.min(b), a.max(b));
            factors.entry(key).or_insert_with(|| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (self.drift_sigma * z).exp() * global
            });
        }
        let mut cx = BTreeMap::new();
        let mut clamped = Vec::new();
        for (&(a, b), &base) in &self.base.cx {
            let raw = if outlier { base * self.outlier_scale } else { base * factors[&(a.min(b), a.max(b))] };
            let rate = raw.clamp(0.0, MAX_CX_RATE);
            if rate != raw {
                clamped.push((a, b));
            }
            cx.insert((a, b), rate);
        }
        if !clamped.is_empty() {
            log::warn!("run {run_index}: {} CX rate(s) clamped to {MAX_CX_RATE}", clamped.len());
        }
        Epoch { run_index, outlier, global_factor: if outlier { 1.0 } else { global }, cx, clamped }
    }

    /// Per-logical-qubit readout flip probabilities, if readout noise is enabled.
    pub fn readout_confusion(&self, layout: &Layout) -> Result<Option<Vec<crate::sim::Confusion>>, NoiseError> {
        if !self.readout_enabled {
            return Ok(None);
        }
        let mut out = Vec::with_capacity(layout.width());
        for &q in layout.physical_qubits() {
            let c = self.base.qubit(q).ok_or_else(|| NoiseError::Missing(format!("qubit {q}")))?;
            out.push(crate::sim::Confusion::symmetric(c.readout));
        }
        Ok(Some(out))
    }
}

/// Effective CX rates of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    pub run_index: u64,
    pub outlier: bool,
    pub global_factor: f64,
    #[serde(with = "pair_keys")]
    pub cx: BTreeMap<(u32, u32), f64>,
    pub clamped: Vec<(u32, u32)>,
}

impl Epoch {
    /// Sum of the effective rates of the CNOTs of `circuit`.
    pub fn cx_sum(&self, circuit: &Circuit, layout: &Layout) -> Result<f64, NoiseError> {
        let mut s = 0.0;
        for g in circuit.gates() {
            if let Gate::Cnot { control, target } = *g {
                let pair = layout.physical_pair(control, target);
                s += self.cx.get(&pair).ok_or_else(|| NoiseError::Missing(format!("cx {}_{}", pair.0, pair.1)))?;
            }
        }
        Ok(s)
    }
}

/// Serialisable description of a noise process, as read from a profile file.
///
/// Without `cx_errors` the shipped tables are used; `uniform_cx_error` replaces every CX rate
/// the circuit touches with one value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseProfile {
    pub cx_errors: Option<PathBuf>,
    pub qubit_props: Option<PathBuf>,
    pub uniform_cx_error: Option<f64>,
    pub cx_scale: f64,
    pub drift_sigma: f64,
    pub global_drift_sigma: f64,
    pub outlier_prob: f64,
    pub outlier_scale: f64,
    pub readout: bool,
    pub single_qubit_noise: bool,
    pub seed: Option<u64>,
}

impl Default for NoiseProfile {
    fn default() -> NoiseProfile {
        NoiseProfile {
            cx_errors: None,
            qubit_props: None,
            uniform_cx_error: None,
            cx_scale: 1.0,
            drift_sigma: 0.15,
            global_drift_sigma: 0.0,
            outlier_prob: 0.1,
            outlier_scale: 2.5,
            readout: false,
            single_qubit_noise: false,
            seed: None,
        }
    }
}

impl NoiseProfile {
    /// Reads a JSON profile. Relative table paths resolve against the profile's directory.
    pub fn load(path: &Path) -> Result<NoiseProfile, NoiseError> {
        let mut p: NoiseProfile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for f in [&mut p.cx_errors, &mut p.qubit_props].into_iter().flatten() {
            if f.is_relative() {
                *f = dir.join(&*f);
            }
        }
        Ok(p)
    }

    pub fn build(&self, circuit: &Circuit, layout: &Layout, default_seed: u64) -> Result<NoiseProcess, NoiseError> {
        let table = match (&self.cx_errors, self.uniform_cx_error) {
            (_, Some(p)) => CalibrationTable::uniform_for(circuit, layout, p)?,
            (Some(cx), None) => CalibrationTable::from_files(cx, self.qubit_props.as_deref())?,
            (None, None) => CalibrationTable::builtin(),
        };
        let table = if self.cx_scale != 1.0 { table.scaled(self.cx_scale)? } else { table };
        let process = NoiseProcess {
            base: table,
            drift_sigma: self.drift_sigma,
            global_drift_sigma: self.global_drift_sigma,
            outlier_prob: self.outlier_prob,
            outlier_scale: self.outlier_scale,
            readout_enabled: self.readout,
            single_qubit_noise: self.single_qubit_noise,
            seed: self.seed.unwrap_or(default_seed),
        };
        process.validate()?;
        Ok(process)
    }
}

/// Serialises pair-keyed maps as `{"a_b": value}`.
mod pair_keys {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<(u32, u32), f64>, s: S) -> Result<S::Ok, S::Error> {
        let v: BTreeMap<String, f64> = m.iter().map(|((a, b), &p)| (format!("{a}_{b}"), p)).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(u32, u32), f64>, D::Error> {
        let v = BTreeMap::<String, f64>::deserialize(d)?;
        v.into_iter()
            .map(|(k, p)| {
                let (a, b) = k.split_once('_').ok_or_else(|| D::Error::custom(format!("bad pair {k:?}")))?;
                let a = a.parse().map_err(D::Error::custom)?;
                let b = b.parse().map_err(D::Error::custom)?;
                Ok(((a, b), p))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_row() {
        let m = parse_cx_errors("pair,error\n25_22, 0.00565\n".as_bytes()).unwrap();
        assert_eq!(m[&(25, 22)], 0.00565);
    }

    #[test]
    fn builtin_median() {
        let t = CalibrationTable::builtin();
        assert_eq!(t.cx_errors().len(), 56);
        assert!((t.median_cx_error().unwrap() - 0.00705).abs() < 1e-12);
        assert_eq!(t.qubits().len(), 27);
    }

    #[test]
    fn rejects_empty_and_malformed() {
        assert!(matches!(parse_cx_errors("".as_bytes()), Err(NoiseError::Empty)));
        assert!(matches!(parse_cx_errors("pair,error\n".as_bytes()), Err(NoiseError::Empty)));
        assert!(matches!(parse_cx_errors("pair,error\n1_2,0.1\n3-4,0.2\n".as_bytes()), Err(NoiseError::Row { row: 2, .. })));
        assert!(matches!(parse_cx_errors("pair,error\n1_2,abc\n".as_bytes()), Err(NoiseError::Row { row: 1, .. })));
        assert!(matches!(parse_cx_errors("pair,error\n1_2,1.5\n".as_bytes()), Err(NoiseError::Row { row: 1, .. })));
        assert!(matches!(parse_cx_errors("a,b\n1_2,0.1\n".as_bytes()), Err(NoiseError::MissingColumn("pair"))));
        assert!(matches!(parse_qubit_props("qubit,readout,sx\n0,0.1,0.1\n".as_bytes()), Err(NoiseError::MissingColumn("x"))));
        let asym = CalibrationTable::from_csv("pair,error\n1_2,0.1\n2_1,0.2\n".as_bytes(), None::<&[u8]>);
        assert!(matches!(asym, Err(NoiseError::Asymmetric(..))));
    }

    #[test]
    fn degenerate_process_returns_base() {
        let p = NoiseProcess::stationary(CalibrationTable::builtin(), 3);
        let e = p.sample_epoch(11);
        assert!(!e.outlier);
        assert_eq!(&e.cx, p.base.cx_errors());
    }

    #[test]
    fn forced_outlier_is_exact_multiple() {
        let mut p = NoiseProcess::stationary(CalibrationTable::builtin(), 3);
        p.outlier_prob = 1.0;
        p.outlier_scale = 3.0;
        p.drift_sigma = 0.4;
        let e = p.sample_epoch(0);
        assert!(e.outlier);
        for (k, v) in p.base.cx_errors() {
            assert_eq!(e.cx[k], v * 3.0);
        }
    }

    #[test]
    fn epochs_are_pure_and_symmetric() {
        let mut p = NoiseProcess::stationary(CalibrationTable::builtin(), 9);
        p.drift_sigma = 0.3;
        let a = p.sample_epoch(4);
        assert_eq!(a, p.sample_epoch(4));
        assert_ne!(a, p.sample_epoch(5));
        assert_eq!(a.cx[&(25, 22)], a.cx[&(22, 25)]);
    }

    #[test]
    fn clamping_is_reported() {
        let mut p = NoiseProcess::stationary(CalibrationTable::uniform([(0, 1)], 0.5).unwrap(), 1);
        p.outlier_prob = 1.0;
        p.outlier_scale = 2.0;
        let e = p.sample_epoch(0);
        assert_eq!(e.cx[&(0, 1)], MAX_CX_RATE);
        assert_eq!(e.clamped.len(), 2);
    }

    #[test]
    fn validation() {
        let mut p = NoiseProcess::stationary(CalibrationTable::builtin(), 0);
        assert!(p.validate().is_ok());
        p.outlier_scale = 0.5;
        assert!(p.validate().is_err());
        p.outlier_scale = 1.0;
        p.drift_sigma = -0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn table_serde_round_trip() {
        let t = CalibrationTable::builtin();
        let back: CalibrationTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
