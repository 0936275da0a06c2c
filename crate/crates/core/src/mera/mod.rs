//! Ternary MERA with open boundaries.
//!
//! A network with `levels = M` describes `n = 3^M` qubits. Layers `1..M-1`
//! each hold a row of disentanglers followed by a row of isometries; the
//! three wires left at level `M-1` are closed by an arity-3 top tensor.
//!
//! ```text
//! level l      j                      (isometry outputs, dim D_l)
//!              |
//!           [ v_j ]                    isometry: D_l x (d*d*d), v v† = I
//!           /  |  \
//! mid      3j 3j+1 3j+2
//!               \   /
//!              [ u_k ]                 disentangler on (3k+2, 3k+3), k = 0..T-2
//!               /   \
//! level l-1   ...    ...               (dim d = D_{l-1})
//! ```
//!
//! Conventions:
//! * every tensor stores output (upper) axes first, then input (lower) axes;
//!   reshaped that way it is a row-orthonormal matrix;
//! * amplitudes are multilinear in the tensors: the lower wires of a tensor
//!   carry `sum_upper T[upper, lower] * phi[upper]`, so the ket uses the
//!   tensors as stored and the bra uses their complex conjugates;
//! * qubit `q` is leaf position `q`, and in state vectors qubit 0 is the
//!   most significant bit.

mod cone;

pub use cone::{causal_cone, CausalCone, ConeLayer};
pub(crate) use cone::{ConePass, TensorSource};

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::haar_isometry;
use crate::tensor::{contract, ComplexTensor, LabeledTensor, ONE};

/// Tolerance used by [`MeraNetwork::validate`].
pub const CONSTRAINT_TOLERANCE: f64 = 1e-10;

/// Default qubit cap for [`MeraNetwork::to_statevector`].
pub const DENSE_CAP: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorKind {
    Disentangler,
    Isometry,
    Top,
}

impl TensorKind {
    /// Number of leading (output) axes in the stored tensor.
    pub fn output_axes(self) -> usize {
        match self {
            TensorKind::Disentangler => 2,
            TensorKind::Isometry => 1,
            TensorKind::Top => 0,
        }
    }
}

/// Names one elementary tensor. Layers are numbered from 1; the top tensor
/// lives at `layer == levels`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TensorId {
    pub layer: usize,
    pub kind: TensorKind,
    pub position: usize,
}

impl TensorId {
    pub fn disentangler(layer: usize, position: usize) -> Self {
        TensorId {
            layer,
            kind: TensorKind::Disentangler,
            position,
        }
    }

    pub fn isometry(layer: usize, position: usize) -> Self {
        TensorId {
            layer,
            kind: TensorKind::Isometry,
            position,
        }
    }

    pub fn top(levels: usize) -> Self {
        TensorId {
            layer: levels,
            kind: TensorKind::Top,
            position: 0,
        }
    }
}

impl fmt::Display for TensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TensorKind::Disentangler => write!(f, "u[{}:{}]", self.layer, self.position),
            TensorKind::Isometry => write!(f, "v[{}:{}]", self.layer, self.position),
            TensorKind::Top => write!(f, "top"),
        }
    }
}

/// Reshapes a stored tensor into its row-orthonormal matrix form.
pub fn stiefel_matrix(kind: TensorKind, t: &ComplexTensor) -> ComplexTensor {
    let rows: usize = t.shape()[..kind.output_axes()].iter().product();
    let cols = t.len() / rows;
    t.reshape(&[rows, cols]).expect("element count preserved")
}

#[derive(Clone, Debug)]
struct Layer {
    disentanglers: Vec<Arc<ComplexTensor>>,
    isometries: Vec<Arc<ComplexTensor>>,
}

/// An immutable ternary MERA. Replacing tensors yields a new value that
/// shares every untouched tensor with the original.
#[derive(Clone, Debug)]
pub struct MeraNetwork {
    levels: usize,
    chi: usize,
    /// Wire dimension at levels `0..levels`.
    dims: Vec<usize>,
    layers: Vec<Layer>,
    top: Arc<ComplexTensor>,
}

fn level_dims(levels: usize, chi: usize) -> Vec<usize> {
    let mut dims = vec![2usize];
    for _ in 1..levels {
        let prev = *dims.last().unwrap();
        dims.push(prev.saturating_mul(prev).saturating_mul(prev).min(chi));
    }
    dims
}

fn check_size(levels: usize, chi: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::Config("MERA needs at least one level".into()));
    }
    if chi < 2 {
        return Err(Error::Config(format!("bond cap chi = {chi} must be at least 2")));
    }
    if levels > 12 {
        return Err(Error::Config(format!("{levels} levels is beyond the supported range")));
    }
    Ok(())
}

impl MeraNetwork {
    fn assemble(
        levels: usize,
        chi: usize,
        mut make: impl FnMut(TensorId, &[usize]) -> Result<ComplexTensor>,
    ) -> Result<Self> {
        check_size(levels, chi)?;
        let dims = level_dims(levels, chi);
        let mut layers = Vec::with_capacity(levels - 1);
        for layer in 1..levels {
            let d = dims[layer - 1];
            let big = dims[layer];
            let triples = 3usize.pow((levels - layer) as u32);
            let disentanglers = (0..triples - 1)
                .map(|k| make(TensorId::disentangler(layer, k), &[d, d, d, d]).map(Arc::new))
                .collect::<Result<_>>()?;
            let isometries = (0..triples)
                .map(|j| make(TensorId::isometry(layer, j), &[big, d, d, d]).map(Arc::new))
                .collect::<Result<_>>()?;
            layers.push(Layer {
                disentanglers,
                isometries,
            });
        }
        let d = dims[levels - 1];
        let top = Arc::new(make(TensorId::top(levels), &[d, d, d])?);
        Ok(MeraNetwork {
            levels,
            chi,
            dims,
            layers,
            top,
        })
    }

    /// Exact network for `|0...0>` (every qubit at the north pole).
    ///
    /// Isometries are `[I | 0]`, which is the Gram–Schmidt completion of
    /// `|000> -> e_0` over the standard basis; disentanglers are identities;
    /// the top tensor is `e_0`.
    pub fn build_product_state(levels: usize, chi: usize) -> Result<Self> {
        Self::assemble(levels, chi, |id, shape| {
            let mut t = ComplexTensor::zeros(shape);
            match id.kind {
                TensorKind::Top => t.data_mut()[0] = ONE,
                TensorKind::Isometry => {
                    let cols: usize = shape[1..].iter().product();
                    for r in 0..shape[0] {
                        t.data_mut()[r * cols + r] = ONE;
                    }
                }
                TensorKind::Disentangler => {
                    let n = shape[0] * shape[1];
                    for r in 0..n {
                        t.data_mut()[r * n + r] = ONE;
                    }
                }
            }
            Ok(t)
        })
    }

    /// Every tensor drawn Haar-randomly at its required shape.
    pub fn build_random(levels: usize, chi: usize, rng: &mut impl Rng) -> Result<Self> {
        Self::assemble(levels, chi, |id, shape| {
            let rows: usize = shape[..id.kind.output_axes()].iter().product();
            let cols: usize = shape[id.kind.output_axes()..].iter().product();
            haar_isometry(rows, cols, rng)?.into_reshape(shape)
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn n_qubits(&self) -> usize {
        3usize.pow(self.levels as u32)
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    /// Number of wires at `level`.
    pub fn n_wires(&self, level: usize) -> usize {
        3usize.pow((self.levels - level) as u32)
    }

    /// Dimension of the wires at `level`: 2 at the leaves, then
    /// `min(prev^3, chi)` above each layer of isometries. Level `M` is the
    /// scalar output of the top tensor.
    pub fn wire_dimension(&self, level: usize) -> Result<usize> {
        match level {
            l if l < self.levels => Ok(self.dims[l]),
            l if l == self.levels => Ok(1),
            l => Err(Error::Config(format!(
                "level {l} out of range for a {}-level network",
                self.levels
            ))),
        }
    }

    pub fn tensor_ids(&self) -> Vec<TensorId> {
        let mut ids = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            ids.extend((0..layer.disentanglers.len()).map(|k| TensorId::disentangler(i + 1, k)));
            ids.extend((0..layer.isometries.len()).map(|j| TensorId::isometry(i + 1, j)));
        }
        ids.push(TensorId::top(self.levels));
        ids
    }

    fn slot(&self, id: TensorId) -> Result<&Arc<ComplexTensor>> {
        let missing = || Error::Config(format!("no tensor {id} in a {}-level network", self.levels));
        match id.kind {
            TensorKind::Top if id.layer == self.levels && id.position == 0 => Ok(&self.top),
            TensorKind::Top => Err(missing()),
            kind => {
                let layer = id
                    .layer
                    .checked_sub(1)
                    .and_then(|l| self.layers.get(l))
                    .ok_or_else(missing)?;
                let row = if kind == TensorKind::Disentangler {
                    &layer.disentanglers
                } else {
                    &layer.isometries
                };
                row.get(id.position).ok_or_else(missing)
            }
        }
    }

    pub fn tensor(&self, id: TensorId) -> Result<&ComplexTensor> {
        self.slot(id).map(Arc::as_ref)
    }

    /// Shared handle, for checking structural sharing.
    pub fn tensor_arc(&self, id: TensorId) -> Result<&Arc<ComplexTensor>> {
        self.slot(id)
    }

    /// New network with one tensor replaced. Shapes must match; constraints
    /// are the caller's responsibility (see [`validate`](Self::validate)).
    pub fn with_tensor(&self, id: TensorId, t: ComplexTensor) -> Result<Self> {
        self.with_tensors([(id, t)])
    }

    pub fn with_tensors(&self, replacements: impl IntoIterator<Item = (TensorId, ComplexTensor)>) -> Result<Self> {
        let mut out = self.clone();
        for (id, t) in replacements {
            let current = out.slot(id)?;
            if current.shape() != t.shape() {
                return Err(Error::Shape(format!(
                    "{id} has shape {:?}, replacement has {:?}",
                    current.shape(),
                    t.shape()
                )));
            }
            let t = Arc::new(t);
            match id.kind {
                TensorKind::Top => out.top = t,
                TensorKind::Disentangler => out.layers[id.layer - 1].disentanglers[id.position] = t,
                TensorKind::Isometry => out.layers[id.layer - 1].isometries[id.position] = t,
            }
        }
        Ok(out)
    }

    /// Constraint deviation of one tensor: `‖v v† - I‖` for isometries,
    /// the larger of both Gram defects for disentanglers, `|<t,t> - 1|`
    /// for the top.
    pub fn constraint_defect(&self, id: TensorId) -> Result<f64> {
        let t = self.tensor(id)?;
        let m = stiefel_matrix(id.kind, t);
        Ok(match id.kind {
            TensorKind::Top => (t.norm_sqr() - 1.0).abs(),
            TensorKind::Isometry => m.row_isometry_defect()?,
            TensorKind::Disentangler => m.row_isometry_defect()?.max(m.col_isometry_defect()?),
        })
    }

    pub fn max_constraint_defect(&self) -> f64 {
        self.tensor_ids()
            .into_iter()
            .map(|id| self.constraint_defect(id).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        for id in self.tensor_ids() {
            let deviation = self.constraint_defect(id)?;
            if !(deviation <= CONSTRAINT_TOLERANCE) {
                return Err(Error::Constraint {
                    id: id.to_string(),
                    deviation,
                });
            }
        }
        Ok(())
    }

    /// Layer-1 (or top, for one level) tensor that a qubit feeds, and the
    /// axis carrying it.
    fn leaf_slot(&self, qubit: usize) -> (TensorId, usize) {
        if self.levels == 1 {
            return (TensorId::top(1), qubit);
        }
        let triples = self.n_wires(1);
        let r = qubit % 3;
        if r == 2 && qubit / 3 + 1 < triples {
            (TensorId::disentangler(1, qubit / 3), 2)
        } else if r == 0 && qubit >= 3 {
            (TensorId::disentangler(1, qubit / 3 - 1), 3)
        } else {
            (TensorId::isometry(1, qubit / 3), 1 + r)
        }
    }

    /// Merges a one-qubit unitary into the tensor its qubit enters. The
    /// represented state becomes `g_q |psi>` exactly.
    pub fn absorb_single_qubit_gate(&self, g: &ComplexTensor, qubit: usize) -> Result<Self> {
        if g.shape() != [2, 2] {
            return Err(Error::Shape(format!("single-qubit gate has shape {:?}", g.shape())));
        }
        let deviation = g.col_isometry_defect()?;
        if !(deviation <= 1e-12) {
            return Err(Error::NotUnitary { deviation });
        }
        if qubit >= self.n_qubits() {
            return Err(Error::Qubits(format!("qubit {qubit} of {}", self.n_qubits())));
        }
        let (id, axis) = self.leaf_slot(qubit);
        let t = self.tensor(id)?;
        // new[.., a, ..] = sum_b g[a, b] old[.., b, ..]
        let moved = contract(t, g, &[(axis, 1)])?;
        let rank = t.rank();
        let mut perm: Vec<usize> = (0..rank - 1).collect();
        perm.insert(axis, rank - 1);
        self.with_tensor(id, moved.permute(&perm)?)
    }

    /// Full amplitude vector (length `2^n`) by contracting every tensor.
    pub fn to_statevector(&self) -> Result<ComplexTensor> {
        self.to_statevector_capped(DENSE_CAP)
    }

    pub fn to_statevector_capped(&self, cap: usize) -> Result<ComplexTensor> {
        let n = self.n_qubits();
        if n > cap {
            return Err(Error::TooLarge { n, cap });
        }
        let lab = |tier: usize, pos: usize| ((tier as u32) << 20) | pos as u32;
        let top_tier = 2 * (self.levels - 1);
        let mut state = LabeledTensor::new((*self.top).clone(), (0..3).map(|p| lab(top_tier, p)).collect())?;
        for layer in (1..self.levels).rev() {
            let (up, mid, low) = (2 * layer, 2 * layer - 1, 2 * layer - 2);
            let row = &self.layers[layer - 1];
            for (j, v) in row.isometries.iter().enumerate() {
                let labels = [lab(up, j), lab(mid, 3 * j), lab(mid, 3 * j + 1), lab(mid, 3 * j + 2)];
                state = state.contract(&LabeledTensor::new((**v).clone(), labels.to_vec())?)?;
            }
            let mut covered = vec![false; 3 * row.isometries.len()];
            for (k, u) in row.disentanglers.iter().enumerate() {
                let p = 3 * k + 2;
                covered[p] = true;
                covered[p + 1] = true;
                let labels = [lab(mid, p), lab(mid, p + 1), lab(low, p), lab(low, p + 1)];
                state = state.contract(&LabeledTensor::new((**u).clone(), labels.to_vec())?)?;
            }
            for (p, _) in covered.iter().enumerate().filter(|(_, c)| !**c) {
                state.relabel(lab(mid, p), lab(low, p));
            }
        }
        let order: Vec<u32> = (0..n).map(|p| lab(0, p)).collect();
        state.into_order(&order)?.into_reshape(&[1 << n])
    }

    pub fn to_record(&self) -> NetworkRecord {
        NetworkRecord {
            levels: self.levels,
            chi: self.chi,
            tensors: self
                .tensor_ids()
                .into_iter()
                .map(|id| TensorEntry {
                    id,
                    tensor: self.tensor(id).expect("id from this network").clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds a network from its serialized form, checking shapes and
    /// constraints.
    pub fn from_record(rec: NetworkRecord) -> Result<Self> {
        let mut entries: std::collections::BTreeMap<TensorId, ComplexTensor> = Default::default();
        for e in rec.tensors {
            if entries.insert(e.id, e.tensor).is_some() {
                return Err(Error::Format(format!("tensor {} listed twice", e.id)));
            }
        }
        let net = Self::assemble(rec.levels, rec.chi, |id, shape| {
            let t = entries
                .remove(&id)
                .ok_or_else(|| Error::Format(format!("missing tensor {id}")))?;
            if t.shape() != shape {
                return Err(Error::Format(format!("{id} has shape {:?}, expected {shape:?}", t.shape())));
            }
            Ok(t)
        })?;
        if let Some(id) = entries.keys().next() {
            return Err(Error::Format(format!("unexpected tensor {id}")));
        }
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(serde_json::from_str(s)?)
    }

    /// True if both networks hold bit-identical tensors.
    pub fn same_tensors(&self, other: &Self) -> bool {
        self.levels == other.levels
            && self.chi == other.chi
            && self
                .tensor_ids()
                .into_iter()
                .all(|id| self.tensor(id).ok() == other.tensor(id).ok())
    }
}

impl TensorSource for MeraNetwork {
    fn source_tensor(&self, id: TensorId) -> Result<&ComplexTensor> {
        self.tensor(id)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorEntry {
    pub id: TensorId,
    #[serde(flatten)]
    pub tensor: ComplexTensor,
}

/// Serialized network: `{levels, chi, tensors: [{id, shape, data}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub levels: usize,
    pub chi: usize,
    pub tensors: Vec<TensorEntry>,
}

#[cfg(test)]
/// `|<a|b>|^2` for two normalized vectors.
pub(crate) fn overlap_sqr(a: &ComplexTensor, b: &ComplexTensor) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

#[cfg(test)]
pub(crate) fn pauli_x() -> ComplexTensor {
    let mut x = ComplexTensor::zeros(&[2, 2]);
    x.data_mut()[1] = ONE;
    x.data_mut()[2] = ONE;
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use crate::tensor::C64;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimension_rule() {
        let net = MeraNetwork::build_product_state(3, 25).unwrap();
        assert_eq!(net.wire_dimension(0).unwrap(), 2);
        assert_eq!(net.wire_dimension(1).unwrap(), 8);
        assert_eq!(net.wire_dimension(2).unwrap(), 25);
        assert_eq!(net.wire_dimension(3).unwrap(), 1);
        assert!(net.wire_dimension(4).is_err());
        let small = MeraNetwork::build_product_state(2, 4).unwrap();
        assert_eq!(small.wire_dimension(1).unwrap(), 4);
    }

    #[test]
    fn tensor_counts_and_shapes() {
        let net = MeraNetwork::build_product_state(3, 25).unwrap();
        assert_eq!(net.n_qubits(), 27);
        let ids = net.tensor_ids();
        // layer 1: 8 disentanglers + 9 isometries, layer 2: 2 + 3, top
        assert_eq!(ids.len(), 8 + 9 + 2 + 3 + 1);
        assert_eq!(net.tensor(TensorId::isometry(2, 0)).unwrap().shape(), &[25, 8, 8, 8]);
        assert_eq!(net.tensor(TensorId::top(3)).unwrap().shape(), &[25, 25, 25]);
        assert!(net.tensor(TensorId::disentangler(1, 8)).is_err());
        assert!(net.tensor(TensorId::top(2)).is_err());
    }

    #[test]
    fn product_state_is_basis_vector() {
        let net = MeraNetwork::build_product_state(1, 2).unwrap();
        let psi = net.to_statevector().unwrap();
        let mut e0 = ComplexTensor::zeros(&[8]);
        e0.data_mut()[0] = ONE;
        assert_eq!(psi, e0);

        let net = MeraNetwork::build_product_state(2, 8).unwrap();
        net.validate().unwrap();
        let psi = net.to_statevector().unwrap();
        let mut e0 = ComplexTensor::zeros(&[512]);
        e0.data_mut()[0] = ONE;
        assert!(psi.max_abs_diff(&e0) < 1e-12);
    }

    #[test]
    fn random_networks_are_valid_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (m, chi) in [(1, 2), (2, 4), (2, 8), (2, 2)] {
            let net = MeraNetwork::build_random(m, chi, &mut rng).unwrap();
            net.validate().unwrap();
            let psi = net.to_statevector().unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_states() {
        let a = MeraNetwork::build_random(2, 8, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        let b = MeraNetwork::build_random(2, 8, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let f = overlap_sqr(&a.to_statevector().unwrap(), &b.to_statevector().unwrap()).unwrap();
        assert!(f < 0.5, "{f}");
    }

    #[test]
    fn statevector_cap() {
        let net = MeraNetwork::build_product_state(3, 2).unwrap();
        assert!(matches!(net.to_statevector(), Err(Error::TooLarge { n: 27, cap: 12 })));
    }

    #[test]
    fn with_tensor_shares_the_rest() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = MeraNetwork::build_random(2, 4, &mut rng).unwrap();
        let id = TensorId::isometry(1, 1);
        let fresh = haar_isometry(4, 8, &mut rng).unwrap().into_reshape(&[4, 2, 2, 2]).unwrap();
        let next = net.with_tensor(id, fresh).unwrap();
        for other in net.tensor_ids().into_iter().filter(|&o| o != id) {
            assert!(Arc::ptr_eq(net.tensor_arc(other).unwrap(), next.tensor_arc(other).unwrap()));
        }
        assert!(net
            .with_tensor(id, ComplexTensor::zeros(&[2, 2, 2, 2]))
            .is_err());
    }

    #[test]
    fn identity_absorption_keeps_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = MeraNetwork::build_random(2, 8, &mut rng).unwrap();
        let before = net.to_statevector().unwrap();
        for q in 0..9 {
            let after = net
                .absorb_single_qubit_gate(&ComplexTensor::identity(2), q)
                .unwrap()
                .to_statevector()
                .unwrap();
            assert!((overlap_sqr(&before, &after).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn absorption_rejects_bad_input() {
        let net = MeraNetwork::build_product_state(2, 4).unwrap();
        let bad = ComplexTensor::identity(2).scale_real(2.0);
        assert!(matches!(net.absorb_single_qubit_gate(&bad, 0), Err(Error::NotUnitary { .. })));
        assert!(net.absorb_single_qubit_gate(&pauli_x(), 9).is_err());
    }

    #[test]
    fn record_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = MeraNetwork::build_random(2, 4, &mut rng).unwrap();
        let json = net.to_json().unwrap();
        let back = MeraNetwork::from_json(&json).unwrap();
        assert!(net.same_tensors(&back));
        assert_eq!(json, back.to_json().unwrap());
    }

    #[test]
    fn record_load_rejects_tampering() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = MeraNetwork::build_random(2, 4, &mut rng).unwrap();
        let mut rec = net.to_record();
        rec.tensors[0].tensor.data_mut()[0] += C64::new(1e-3, 0.0);
        assert!(matches!(MeraNetwork::from_record(rec), Err(Error::Constraint { .. })));
        let mut rec = net.to_record();
        rec.tensors.pop();
        assert!(matches!(MeraNetwork::from_record(rec), Err(Error::Format(_))));
    }

    #[test]
    fn invalid_sizes() {
        assert!(MeraNetwork::build_product_state(0, 4).is_err());
        assert!(MeraNetwork::build_product_state(2, 1).is_err());
    }
}
