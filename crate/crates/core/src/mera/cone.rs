//! Causal cones and cone-restricted contractions.
//!
//! Marking starts from the chosen leaf wires and moves upward: a
//! disentangler joins the cone when one of its lower wires is marked (both
//! its upper wires become marked), an isometry joins when one of its lower
//! wires is marked (its upper wire becomes marked), and the top tensor is
//! always a member. Every tensor outside the cone meets its own conjugate
//! over all of its lower wires, and `T T† = I` removes it.
//!
//! [`ConePass`] evaluates networks of the form `<psi'| O |psi>` where `psi'`
//! differs from `psi` only on cone tensors. Wires are addressed by *tier*:
//! tier `2l` holds the level-`l` wires and tier `2l - 1` the wires between
//! the isometries and disentanglers of layer `l`. Downward we carry the
//! mixed operator `sigma = |ket><bra|` restricted to the marked wires of a
//! tier; upward we carry the operator lifted from the leaves. Their full
//! contraction at any tier is the overlap, and closing a sublayer around a
//! missing bra tensor gives that tensor's environment.

use std::collections::BTreeMap;

use super::{MeraNetwork, TensorId, TensorKind};
use crate::error::{Error, Result};
use crate::tensor::{contract_chain, ComplexTensor, LabeledTensor, C64};

/// Read access to elementary tensors by id.
pub(crate) trait TensorSource {
    fn source_tensor(&self, id: TensorId) -> Result<&ComplexTensor>;
}

/// Membership of one layer of the cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeLayer {
    pub layer: usize,
    /// Marked wires below the layer (level `layer - 1`).
    pub lower: Vec<usize>,
    pub disentanglers: Vec<usize>,
    /// Marked wires between disentanglers and isometries.
    pub middle: Vec<usize>,
    pub isometries: Vec<usize>,
    /// Marked wires above the layer (level `layer`).
    pub upper: Vec<usize>,
}

impl ConeLayer {
    /// Marked middle wires that bypass every member disentangler.
    pub fn direct_wires(&self) -> impl Iterator<Item = usize> + '_ {
        self.middle.iter().copied().filter(|&w| {
            !self
                .disentanglers
                .iter()
                .any(|&k| w == 3 * k + 2 || w == 3 * k + 3)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalCone {
    /// Leaf qubits in caller order; this is also the operator axis order.
    pub sites: Vec<usize>,
    pub levels: usize,
    pub layers: Vec<ConeLayer>,
    /// Marked wires entering the top tensor.
    pub top_wires: Vec<usize>,
}

impl CausalCone {
    pub fn members(&self) -> Vec<TensorId> {
        let mut ids = Vec::new();
        for l in &self.layers {
            ids.extend(l.disentanglers.iter().map(|&k| TensorId::disentangler(l.layer, k)));
            ids.extend(l.isometries.iter().map(|&j| TensorId::isometry(l.layer, j)));
        }
        ids.push(TensorId::top(self.levels));
        ids
    }

    pub fn contains(&self, id: TensorId) -> bool {
        match id.kind {
            TensorKind::Top => id.layer == self.levels,
            TensorKind::Disentangler => self
                .layers
                .get(id.layer.wrapping_sub(1))
                .is_some_and(|l| l.disentanglers.contains(&id.position)),
            TensorKind::Isometry => self
                .layers
                .get(id.layer.wrapping_sub(1))
                .is_some_and(|l| l.isometries.contains(&id.position)),
        }
    }

    fn top_tier(&self) -> usize {
        2 * (self.levels - 1)
    }

    /// Marked wires at a tier.
    fn marked(&self, tier: usize) -> &[usize] {
        if tier == self.top_tier() {
            return &self.top_wires;
        }
        let layer = &self.layers[tier / 2];
        if tier % 2 == 0 {
            &layer.lower
        } else {
            &layer.middle
        }
    }
}

/// Cone of a non-empty set of distinct leaf qubits.
pub fn causal_cone(network: &MeraNetwork, sites: &[usize]) -> Result<CausalCone> {
    let n = network.n_qubits();
    if sites.is_empty() {
        return Err(Error::Qubits("empty site set".into()));
    }
    for (i, &q) in sites.iter().enumerate() {
        if q >= n {
            return Err(Error::Qubits(format!("qubit {q} out of range 0..{n}")));
        }
        if sites[..i].contains(&q) {
            return Err(Error::Qubits(format!("qubit {q} repeated")));
        }
    }
    let mut marked: Vec<usize> = sites.to_vec();
    marked.sort_unstable();
    let mut layers = Vec::new();
    for layer in 1..network.levels() {
        let triples = network.n_wires(layer);
        let disentanglers: Vec<usize> = (0..triples - 1)
            .filter(|&k| marked.contains(&(3 * k + 2)) || marked.contains(&(3 * k + 3)))
            .collect();
        let mut middle = marked.clone();
        for &k in &disentanglers {
            middle.extend([3 * k + 2, 3 * k + 3]);
        }
        middle.sort_unstable();
        middle.dedup();
        let isometries: Vec<usize> = (0..triples)
            .filter(|&j| (3 * j..3 * j + 3).any(|w| middle.contains(&w)))
            .collect();
        let upper = isometries.clone();
        layers.push(ConeLayer {
            layer,
            lower: std::mem::replace(&mut marked, upper.clone()),
            disentanglers,
            middle,
            isometries,
            upper,
        });
    }
    Ok(CausalCone {
        sites: sites.to_vec(),
        levels: network.levels(),
        layers,
        top_wires: marked,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Ket = 0,
    Bra = 1,
    /// Unmarked wire joining ket and bra directly.
    Traced = 2,
}

fn label(tier: usize, side: Side, pos: usize) -> u32 {
    ((tier as u32) << 22) | ((side as u32) << 20) | pos as u32
}

/// One evaluation of a cone network with frozen ket tensors and a set of
/// bra tensors (stored conjugated).
pub(crate) struct ConePass<'a> {
    cone: &'a CausalCone,
    ket: &'a dyn TensorSource,
    bra_conj: BTreeMap<TensorId, ComplexTensor>,
}

impl<'a> ConePass<'a> {
    pub fn new(cone: &'a CausalCone, ket: &'a dyn TensorSource, bra: &dyn TensorSource) -> Result<Self> {
        let bra_conj = cone
            .members()
            .into_iter()
            .map(|id| Ok((id, bra.source_tensor(id)?.conj())))
            .collect::<Result<_>>()?;
        Ok(ConePass { cone, ket, bra_conj })
    }

    fn wire(&self, tier: usize, side: Side, pos: usize) -> u32 {
        if self.cone.marked(tier).contains(&pos) {
            label(tier, side, pos)
        } else {
            label(tier, Side::Traced, pos)
        }
    }

    /// Axis labels of a member, in stored axis order.
    fn labels(&self, id: TensorId, side: Side) -> Vec<u32> {
        match id.kind {
            TensorKind::Top => {
                let t = self.cone.top_tier();
                (0..3).map(|p| self.wire(t, side, p)).collect()
            }
            TensorKind::Isometry => {
                let (up, mid) = (2 * id.layer, 2 * id.layer - 1);
                let j = id.position;
                vec![
                    self.wire(up, side, j),
                    self.wire(mid, side, 3 * j),
                    self.wire(mid, side, 3 * j + 1),
                    self.wire(mid, side, 3 * j + 2),
                ]
            }
            TensorKind::Disentangler => {
                let (mid, low) = (2 * id.layer - 1, 2 * id.layer - 2);
                let p = 3 * id.position + 2;
                vec![
                    self.wire(mid, side, p),
                    self.wire(mid, side, p + 1),
                    self.wire(low, side, p),
                    self.wire(low, side, p + 1),
                ]
            }
        }
    }

    fn ket_item(&self, id: TensorId) -> Result<(&ComplexTensor, Vec<u32>)> {
        Ok((self.ket.source_tensor(id)?, self.labels(id, Side::Ket)))
    }

    fn bra_item(&self, id: TensorId) -> (&ComplexTensor, Vec<u32>) {
        (&self.bra_conj[&id], self.labels(id, Side::Bra))
    }

    fn absorb(&self, acc: LabeledTensor, id: TensorId) -> Result<LabeledTensor> {
        let (k, kl) = self.ket_item(id)?;
        let acc = acc.contract(&LabeledTensor::new(k.clone(), kl)?)?;
        let (b, bl) = self.bra_item(id);
        acc.contract(&LabeledTensor::new(b.clone(), bl)?)
    }

    fn relabel_direct(&self, t: &mut LabeledTensor, layer: &ConeLayer, from: usize, to: usize) {
        for w in layer.direct_wires() {
            for side in [Side::Ket, Side::Bra] {
                t.relabel(label(from, side, w), label(to, side, w));
            }
        }
    }

    /// `sigma` at every tier (index = tier), top down.
    pub fn descend(&self) -> Result<Vec<LabeledTensor>> {
        let top = TensorId::top(self.cone.levels);
        let top_tier = self.cone.top_tier();
        let mut sigmas: Vec<Option<LabeledTensor>> = vec![None; top_tier + 1];
        let (k, kl) = self.ket_item(top)?;
        let (b, bl) = self.bra_item(top);
        let mut cur = contract_chain([(k, &kl[..]), (b, &bl[..])])?;
        sigmas[top_tier] = Some(cur.clone());
        for layer in self.cone.layers.iter().rev() {
            let l = layer.layer;
            for &j in &layer.isometries {
                cur = self.absorb(cur, TensorId::isometry(l, j))?;
            }
            sigmas[2 * l - 1] = Some(cur.clone());
            for &k in &layer.disentanglers {
                cur = self.absorb(cur, TensorId::disentangler(l, k))?;
            }
            self.relabel_direct(&mut cur, layer, 2 * l - 1, 2 * l - 2);
            sigmas[2 * l - 2] = Some(cur.clone());
        }
        Ok(sigmas.into_iter().map(|s| s.expect("every tier visited")).collect())
    }

    /// Leaf operator with axes `(out sites..., in sites...)` as a labeled
    /// tensor: output legs pair with the bra, input legs with the ket.
    pub fn leaf_operator(&self, op: &ComplexTensor) -> Result<LabeledTensor> {
        let s = &self.cone.sites;
        if op.rank() != 2 * s.len() || op.shape().iter().any(|&d| d != 2) {
            return Err(Error::Shape(format!(
                "operator {:?} does not act on {} qubits",
                op.shape(),
                s.len()
            )));
        }
        let labels = s
            .iter()
            .map(|&q| label(0, Side::Bra, q))
            .chain(s.iter().map(|&q| label(0, Side::Ket, q)))
            .collect();
        LabeledTensor::new(op.clone(), labels)
    }

    /// Operator lifted to every tier (index = tier), bottom up.
    pub fn ascend(&self, op: &ComplexTensor) -> Result<Vec<LabeledTensor>> {
        let mut cur = self.leaf_operator(op)?;
        let mut ops = vec![cur.clone()];
        for layer in &self.cone.layers {
            let l = layer.layer;
            self.relabel_direct(&mut cur, layer, 2 * l - 2, 2 * l - 1);
            for &k in &layer.disentanglers {
                cur = self.absorb(cur, TensorId::disentangler(l, k))?;
            }
            ops.push(cur.clone());
            for &j in &layer.isometries {
                cur = self.absorb(cur, TensorId::isometry(l, j))?;
            }
            ops.push(cur.clone());
        }
        Ok(ops)
    }

    /// Closes the network at the top: `sum O * t_ket * conj(t_bra)`.
    pub fn close_top(&self, op_top: &LabeledTensor) -> Result<C64> {
        let top = TensorId::top(self.cone.levels);
        let (k, kl) = self.ket_item(top)?;
        let (b, bl) = self.bra_item(top);
        contract_chain([(&op_top.tensor, &op_top.labels[..]), (k, &kl[..]), (b, &bl[..])])?
            .tensor
            .to_scalar()
    }

    /// Environment of the bra tensor `id`: the contraction of everything
    /// else, so that `overlap = sum conj(bra) * env`.
    pub fn environment(
        &self,
        id: TensorId,
        sigmas: &[LabeledTensor],
        ops: &[LabeledTensor],
    ) -> Result<ComplexTensor> {
        if !self.cone.contains(id) {
            return Err(Error::Config(format!("{id} is not in the causal cone")));
        }
        let hole = self.labels(id, Side::Bra);
        let env = match id.kind {
            TensorKind::Top => {
                let op = &ops[self.cone.top_tier()];
                let (k, kl) = self.ket_item(id)?;
                contract_chain([(&op.tensor, &op.labels[..]), (k, &kl[..])])?
            }
            TensorKind::Isometry => {
                let l = id.layer;
                let layer = &self.cone.layers[l - 1];
                let members: Vec<TensorId> = layer.isometries.iter().map(|&j| TensorId::isometry(l, j)).collect();
                self.close_sublayer(id, ops[2 * l - 1].clone(), &members, &sigmas[2 * l])?
            }
            TensorKind::Disentangler => {
                let l = id.layer;
                let layer = &self.cone.layers[l - 1];
                let mut below = ops[2 * l - 2].clone();
                self.relabel_direct(&mut below, layer, 2 * l - 2, 2 * l - 1);
                let members: Vec<TensorId> = layer
                    .disentanglers
                    .iter()
                    .map(|&k| TensorId::disentangler(l, k))
                    .collect();
                self.close_sublayer(id, below, &members, &sigmas[2 * l - 1])?
            }
        };
        env.into_order(&hole)
    }

    fn close_sublayer(
        &self,
        hole: TensorId,
        below: LabeledTensor,
        members: &[TensorId],
        above: &LabeledTensor,
    ) -> Result<LabeledTensor> {
        let mut acc = below;
        for &m in members {
            let (k, kl) = self.ket_item(m)?;
            acc = acc.contract(&LabeledTensor::new(k.clone(), kl)?)?;
        }
        for &m in members.iter().filter(|&&m| m != hole) {
            let (b, bl) = self.bra_item(m);
            acc = acc.contract(&LabeledTensor::new(b.clone(), bl)?)?;
        }
        acc.contract(above)
    }

    /// Reduced density matrix `rho[ket, bra]` of the sites from `sigma` at
    /// tier 0, as a `2^k x 2^k` matrix.
    pub fn leaf_density(&self, sigma0: &LabeledTensor) -> Result<ComplexTensor> {
        let s = &self.cone.sites;
        let order: Vec<u32> = s
            .iter()
            .map(|&q| label(0, Side::Ket, q))
            .chain(s.iter().map(|&q| label(0, Side::Bra, q)))
            .collect();
        let dim = 1usize << s.len();
        sigma0.clone().into_order(&order)?.into_reshape(&[dim, dim])
    }
}

impl MeraNetwork {
    /// Causal cone of the given leaf qubits.
    pub fn causal_cone(&self, sites: &[usize]) -> Result<CausalCone> {
        causal_cone(self, sites)
    }

    /// Reduced density matrix of one or two qubits (in the given order,
    /// first qubit most significant), contracted over the cone only.
    pub fn reduced_density_matrix(&self, qubits: &[usize]) -> Result<ComplexTensor> {
        if qubits.len() > 2 {
            return Err(Error::Qubits(format!(
                "reduced density matrices of {} qubits are not supported",
                qubits.len()
            )));
        }
        let cone = causal_cone(self, qubits)?;
        let pass = ConePass::new(&cone, self, self)?;
        let sigmas = pass.descend()?;
        pass.leaf_density(&sigmas[0])
    }
}
