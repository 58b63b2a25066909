//! Noise-adaptive zero-noise extrapolation.
//!
//! The crate is organised bottom-up:
//!
//! - [`circuit`]: gate-level IR, inversion, observables and the built-in benchmark circuits.
//! - [`noise`]: calibration tables and a drifting noise process with rare outlier epochs.
//! - [`sim`]: exact density-matrix evolution under per-CNOT depolarizing noise, shot sampling
//!   and readout mitigation.
//! - [`folding`]: realizable scale factors, identity-insertion assignment, folding and Pauli twirling.
//! - [`scaling`]: error-strength estimation and adaptive scaling plans.
//! - [`extrapolation`]: exponential and linear zero-noise fits.
//! - [`filtering`]: Gaussian-mixture and 2D Gaussian rejection of unreliable runs and samples.
//! - [`harness`]: experiment orchestration, reporting and persistence.
//!
//! Runs are data-parallel. With the default `parallel` feature they are distributed with rayon;
//! without it, or with [`exec::Parallelism::Sequential`], everything executes on the calling
//! thread. Both paths produce bit-identical results.

pub mod circuit;
pub mod exec;
pub mod extrapolation;
pub mod filtering;
pub mod folding;
pub mod harness;
pub mod noise;
pub mod rng;
pub mod scaling;
pub mod sim;

pub use circuit::{Benchmark, BenchmarkCircuit, Circuit, Gate, Layout, Observable};
pub use exec::Parallelism;
pub use folding::{FoldAssignment, ScaleFactor};
pub use harness::{ExperimentConfig, ExperimentReport, FilterKind, Method};
pub use noise::{CalibrationTable, NoiseProcess};
pub use sim::{CountsTable, DensityMatrix, GateNoise};
