//! Ternary MERA simulation of random quantum circuits.
//!
//! A state of `n = 3^M` qubits is stored as a ternary MERA with bond
//! dimension capped at `chi`. Two-qubit gates are absorbed one at a time by
//! re-optimizing only the tensors in the gate's causal cone, and the product
//! of per-gate fidelities estimates the overall fidelity of the run.

pub mod circuit;
pub mod error;
pub mod linalg;
pub mod mera;
pub mod oracle;
pub mod sim;
pub mod stiefel;
pub mod tensor;
pub mod update;

pub use circuit::{checkerboard_circuit, random_two_qubit_gate, Circuit, Gate};
pub use error::{Error, Result};
pub use mera::{causal_cone, CausalCone, MeraNetwork, TensorId, TensorKind};
pub use oracle::{dense_rdm, exact_fidelity, run_dense, DenseState};
pub use sim::{
    run_simulation, run_sweep, InitMode, OutputFormat, RunConfig, SimulationRecord, SweepGrid, SweepTable,
};
pub use stiefel::{adam_step, AdamParams, AdamState, StiefelPoint};
pub use tensor::{contract, ComplexTensor, LabeledTensor, C64};
pub use update::{
    apply_gate, environment, fidelity_gradient, initialize_optimized, overlap, GateUpdateOptions,
    GateUpdateOutcome, OverlapNetwork, UpdateMode,
};
