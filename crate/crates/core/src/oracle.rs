//! Dense state-vector reference simulator for small systems.
//!
//! Amplitudes are indexed with qubit 0 as the most significant bit, the same
//! order [`MeraNetwork::to_statevector`] produces.

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::mera::{MeraNetwork, DENSE_CAP};
use crate::tensor::{contract, ComplexTensor, C64, ONE};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amplitudes: ComplexTensor,
}

impl DenseState {
    /// `|0...0>`.
    pub fn zero(n: usize) -> Result<Self> {
        check_cap(n)?;
        let mut amplitudes = ComplexTensor::zeros(&[1 << n]);
        amplitudes.data_mut()[0] = ONE;
        Ok(DenseState { n, amplitudes })
    }

    /// Wraps a normalized amplitude vector of length `2^n`.
    pub fn from_amplitudes(n: usize, amplitudes: ComplexTensor) -> Result<Self> {
        check_cap(n)?;
        if amplitudes.shape() != [1usize << n] {
            return Err(Error::Shape(format!(
                "{n} qubits need {} amplitudes, got {:?}",
                1usize << n,
                amplitudes.shape()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Config(format!("state has norm {norm}")));
        }
        Ok(DenseState { n, amplitudes })
    }

    pub fn from_network(network: &MeraNetwork) -> Result<Self> {
        Self::from_amplitudes(network.n_qubits(), network.to_statevector()?)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &ComplexTensor {
        &self.amplitudes
    }

    fn as_tensor(&self) -> ComplexTensor {
        self.amplitudes
            .reshape(&vec![2; self.n])
            .expect("length 2^n")
    }

    /// Applies an operator with axes `(out..., in...)` on the listed qubits.
    /// The result is not renormalized.
    pub fn apply(&self, op: &ComplexTensor, qubits: &[usize]) -> Result<Self> {
        let k = qubits.len();
        check_qubits(self.n, qubits)?;
        let op = op.reshape(&vec![2; 2 * k])?;
        let pairs: Vec<(usize, usize)> = qubits.iter().enumerate().map(|(i, &q)| (k + i, q)).collect();
        // result axes: op outputs, then untouched qubits in order
        let moved = contract(&op, &self.as_tensor(), &pairs)?;
        let rest: Vec<usize> = (0..self.n).filter(|q| !qubits.contains(q)).collect();
        let mut perm = vec![0usize; self.n];
        for (i, &q) in qubits.iter().enumerate() {
            perm[q] = i;
        }
        for (i, &q) in rest.iter().enumerate() {
            perm[q] = k + i;
        }
        let amplitudes = moved.permute(&perm)?.into_reshape(&[1 << self.n])?;
        Ok(DenseState { n: self.n, amplitudes })
    }

    pub fn inner(&self, other: &DenseState) -> Result<C64> {
        self.amplitudes.inner(&other.amplitudes)
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        return Err(Error::TooLarge { n, cap: DENSE_CAP });
    }
    if n == 0 {
        return Err(Error::Config("dense state needs at least one qubit".into()));
    }
    Ok(())
}

fn check_qubits(n: usize, qubits: &[usize]) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n || qubits[..i].contains(&q) {
            return Err(Error::Qubits(format!("{qubits:?} on {n} qubits")));
        }
    }
    Ok(())
}

/// Applies every gate of the circuit in order.
pub fn run_dense(circuit: &Circuit, initial: &DenseState) -> Result<DenseState> {
    if circuit.n != initial.n {
        return Err(Error::Config(format!(
            "circuit on {} qubits, state on {}",
            circuit.n, initial.n
        )));
    }
    circuit.gates.iter().try_fold(initial.clone(), |state, gate| {
        state.apply(&gate.matrix, &[gate.pair.0, gate.pair.1])
    })
}

/// `|<state|psi_network>|^2`.
pub fn exact_fidelity(state: &DenseState, network: &MeraNetwork) -> Result<f64> {
    if state.n != network.n_qubits() {
        return Err(Error::Config(format!(
            "state on {} qubits, network on {}",
            state.n,
            network.n_qubits()
        )));
    }
    let psi = network.to_statevector()?;
    Ok(state.amplitudes.inner(&psi)?.norm_sqr())
}

/// Partial trace onto one or two qubits (in the given order), `rho[ket, bra]`.
pub fn dense_rdm(state: &DenseState, qubits: &[usize]) -> Result<ComplexTensor> {
    if qubits.is_empty() || qubits.len() > 2 {
        return Err(Error::Qubits(format!("{} qubits requested", qubits.len())));
    }
    check_qubits(state.n, qubits)?;
    let psi = state.as_tensor();
    let traced: Vec<usize> = (0..state.n).filter(|q| !qubits.contains(q)).collect();
    let pairs: Vec<(usize, usize)> = traced.iter().map(|&q| (q, q)).collect();
    // axes: kept qubits of psi (ascending), then kept qubits of conj(psi)
    let rho = contract(&psi, &psi.conj(), &pairs)?;
    let k = qubits.len();
    let mut sorted = qubits.to_vec();
    sorted.sort_unstable();
    let perm: Vec<usize> = qubits
        .iter()
        .map(|q| sorted.iter().position(|s| s == q).unwrap())
        .chain(qubits.iter().map(|q| k + sorted.iter().position(|s| s == q).unwrap()))
        .collect();
    let dim = 1 << k;
    rho.permute(&perm)?.into_reshape(&[dim, dim])
}
