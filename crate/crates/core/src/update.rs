//! Approximate absorption of two-qubit gates.
//!
//! For a gate `U` on qubits `(q, q+1)` we maximize `|<psi'|U|psi>|^2` over
//! the tensors of the gate's causal cone, keeping every other tensor fixed.
//! Because `psi'` and `psi` agree outside the cone, the overlap reduces to a
//! cone-only network ([`OverlapNetwork`]). Gradients come from hole
//! contractions: the overlap is anti-linear in each bra tensor `B`,
//! `c = sum conj(B) E`, so `E` is the Wirtinger derivative `dc/d conj(B)`
//! and the Euclidean gradient of `|c|^2` is `2 conj(c) E`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::{unitarity_defect, Gate, UNITARITY_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::polar_maximizer;
use crate::mera::{stiefel_matrix, CausalCone, ConePass, MeraNetwork, TensorId, TensorSource};
use crate::stiefel::{adam_step, AdamParams, AdamState, StiefelPoint};
use crate::tensor::{ComplexTensor, C64, ONE};

/// A gate update stops once its objective is within this of 1, so a
/// fidelity product over `G` gates is resolved to about `G` times this.
pub const SATURATION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    /// Riemannian ADAM on all cone tensors jointly.
    Adam,
    /// Cyclic sweep replacing each tensor by the polar factor of its
    /// environment.
    Linearized,
    /// Alternates ADAM and linearized sweeps, each until it stalls, starting
    /// every phase from the best point so far.
    Hybrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateUpdateOptions {
    pub max_iterations: usize,
    pub adam: AdamParams,
    /// Minimum gain in the best objective that resets the patience counter.
    pub convergence_threshold: f64,
    pub patience: usize,
    /// Return the best iterate rather than the last one.
    pub keep_best: bool,
    pub mode: UpdateMode,
}

impl Default for GateUpdateOptions {
    fn default() -> Self {
        GateUpdateOptions {
            max_iterations: 500,
            adam: AdamParams::default(),
            convergence_threshold: 1e-9,
            patience: 50,
            keep_best: true,
            mode: UpdateMode::Adam,
        }
    }
}

impl GateUpdateOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// One optimizer iteration, for progress logs.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub best: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateUpdateOutcome {
    /// `|<psi'|U|psi>|^2` at the returned tensors.
    pub fidelity: f64,
    /// Objective with the bra initialized to the ket.
    pub initial_fidelity: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
struct BraTensors(BTreeMap<TensorId, ComplexTensor>);

impl TensorSource for BraTensors {
    fn source_tensor(&self, id: TensorId) -> Result<&ComplexTensor> {
        self.0
            .get(&id)
            .ok_or_else(|| Error::Config(format!("{id} is not a bra-side tensor")))
    }
}

/// `<psi'| O |psi>` restricted to a causal cone, where `psi'` is `psi` with
/// its cone tensors replaced by the bra-side tensors.
#[derive(Clone, Debug)]
pub struct OverlapNetwork<'a> {
    ket: &'a MeraNetwork,
    cone: CausalCone,
    bra: BraTensors,
    operator: ComplexTensor,
}

/// Overlap together with every bra-side environment.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub overlap: C64,
    pub environments: BTreeMap<TensorId, ComplexTensor>,
}

impl<'a> OverlapNetwork<'a> {
    /// `operator` has axes `(out sites..., in sites...)`, each of length 2.
    /// The bra side starts as a copy of the ket's cone tensors.
    pub fn new(ket: &'a MeraNetwork, sites: &[usize], operator: ComplexTensor) -> Result<Self> {
        let cone = ket.causal_cone(sites)?;
        let bra = cone
            .members()
            .into_iter()
            .map(|id| Ok((id, ket.tensor(id)?.clone())))
            .collect::<Result<_>>()?;
        let net = OverlapNetwork {
            ket,
            cone,
            bra: BraTensors(bra),
            operator,
        };
        // shape check up front
        ConePass::new(&net.cone, net.ket, &net.bra)?.leaf_operator(&net.operator)?;
        Ok(net)
    }

    pub fn for_gate(ket: &'a MeraNetwork, gate: &Gate) -> Result<Self> {
        Self::new(ket, &[gate.pair.0, gate.pair.1], gate.as_tensor())
    }

    pub fn cone(&self) -> &CausalCone {
        &self.cone
    }

    pub fn members(&self) -> Vec<TensorId> {
        self.cone.members()
    }

    pub fn bra_tensor(&self, id: TensorId) -> Result<&ComplexTensor> {
        self.bra.source_tensor(id)
    }

    pub fn set_bra_tensor(&mut self, id: TensorId, t: ComplexTensor) -> Result<()> {
        let slot = self
            .bra
            .0
            .get_mut(&id)
            .ok_or_else(|| Error::Config(format!("{id} is not in the causal cone")))?;
        if slot.shape() != t.shape() {
            return Err(Error::Shape(format!(
                "{id} has shape {:?}, got {:?}",
                slot.shape(),
                t.shape()
            )));
        }
        *slot = t;
        Ok(())
    }

    /// The full `psi'` network.
    pub fn bra_network(&self) -> Result<MeraNetwork> {
        self.ket
            .with_tensors(self.bra.0.iter().map(|(&id, t)| (id, t.clone())))
    }

    pub fn evaluate(&self, with_environments: bool) -> Result<Evaluation> {
        let pass = ConePass::new(&self.cone, self.ket, &self.bra)?;
        let ops = pass.ascend(&self.operator)?;
        let overlap = pass.close_top(ops.last().expect("at least the leaf tier"))?;
        let mut environments = BTreeMap::new();
        if with_environments {
            let sigmas = pass.descend()?;
            for id in self.cone.members() {
                environments.insert(id, pass.environment(id, &sigmas, &ops)?);
            }
        }
        Ok(Evaluation { overlap, environments })
    }
}

/// `<psi'|O|psi>` by cone-only contraction.
pub fn overlap(net: &OverlapNetwork<'_>) -> Result<C64> {
    Ok(net.evaluate(false)?.overlap)
}

/// `E` with `overlap = sum conj(bra) * E`, in the bra tensor's axis order.
pub fn environment(net: &OverlapNetwork<'_>, id: TensorId) -> Result<ComplexTensor> {
    if !net.cone.contains(id) {
        return Err(Error::Config(format!("{id} is not in the causal cone")));
    }
    let pass = ConePass::new(&net.cone, net.ket, &net.bra)?;
    let sigmas = pass.descend()?;
    let ops = pass.ascend(&net.operator)?;
    pass.environment(id, &sigmas, &ops)
}

fn gradient_from(id: TensorId, overlap: C64, env: &ComplexTensor) -> ComplexTensor {
    stiefel_matrix(id.kind, &env.scale(overlap.conj() * 2.0))
}

/// Euclidean gradient of `|overlap|^2` with respect to the bra tensor
/// (real and imaginary parts as independent coordinates), laid out as the
/// tensor's Stiefel matrix.
pub fn fidelity_gradient(net: &OverlapNetwork<'_>, id: TensorId) -> Result<ComplexTensor> {
    let c = overlap(net)?;
    Ok(gradient_from(id, c, &environment(net, id)?))
}

fn check_gate(network: &MeraNetwork, u: &ComplexTensor, pair: (usize, usize)) -> Result<()> {
    if u.shape() != [4, 4] {
        return Err(Error::Shape(format!("two-qubit gate has shape {:?}", u.shape())));
    }
    let deviation = unitarity_defect(u)?;
    if !(deviation <= UNITARITY_TOLERANCE) {
        return Err(Error::NotUnitary { deviation });
    }
    let (a, b) = pair;
    if b != a + 1 || b >= network.n_qubits() {
        return Err(Error::Qubits(format!(
            "gate pair ({a}, {b}) is not a nearest-neighbour pair of {} qubits",
            network.n_qubits()
        )));
    }
    Ok(())
}

/// Absorbs `u` on `(q, q+1)` by re-optimizing the cone tensors. Returns the
/// updated network (sharing every tensor outside the cone) and the achieved
/// fidelity `|<psi'|U|psi>|^2`.
pub fn apply_gate(
    network: &MeraNetwork,
    u: &ComplexTensor,
    pair: (usize, usize),
    opts: &GateUpdateOptions,
) -> Result<(MeraNetwork, GateUpdateOutcome)> {
    apply_gate_observed(network, u, pair, opts, &mut |_| {})
}

pub fn apply_gate_observed(
    network: &MeraNetwork,
    u: &ComplexTensor,
    pair: (usize, usize),
    opts: &GateUpdateOptions,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<(MeraNetwork, GateUpdateOutcome)> {
    opts.validate()?;
    check_gate(network, u, pair)?;
    let mut net = OverlapNetwork::new(network, &[pair.0, pair.1], u.reshape(&[2, 2, 2, 2])?)?;

    let initial = net.evaluate(false)?.overlap.norm_sqr();
    let mut tracker = Tracker::new(initial, snapshot(&net), opts);
    if initial >= 1.0 - SATURATION_TOLERANCE {
        return finish(&net, tracker, initial, 0, opts);
    }

    let budget = opts.max_iterations;
    let iterations = match opts.mode {
        UpdateMode::Adam => adam_phase(&mut net, &mut tracker, 0, budget, opts, observer)?,
        UpdateMode::Linearized => linearized_phase(&mut net, &mut tracker, 0, budget, observer)?,
        UpdateMode::Hybrid => {
            let mut done = 0;
            let mut idle_phases = 0;
            // ADAM first: polar sweeps from the warm start tend to stall early
            let mut polar = false;
            while done < budget && !tracker.saturated() && idle_phases < 2 {
                let before = tracker.best;
                tracker.rearm(done);
                for (id, t) in tracker.best_tensors.clone() {
                    net.set_bra_tensor(id, t)?;
                }
                done = if polar {
                    linearized_phase(&mut net, &mut tracker, done, budget, observer)?
                } else {
                    adam_phase(&mut net, &mut tracker, done, budget, opts, observer)?
                };
                if tracker.best > before + opts.convergence_threshold {
                    idle_phases = 0;
                } else {
                    idle_phases += 1;
                }
                polar = !polar;
            }
            done
        }
    };
    finish(&net, tracker, initial, iterations, opts)
}

fn checked_objective(eval: &Evaluation, it: usize) -> Result<f64> {
    let f = eval.overlap.norm_sqr();
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFinite(format!("objective at iteration {it}")))
    }
}

/// Riemannian ADAM on all cone tensors jointly, iterations `first+1..=budget`.
/// Returns the last iteration run.
fn adam_phase(
    net: &mut OverlapNetwork<'_>,
    tracker: &mut Tracker,
    first: usize,
    budget: usize,
    opts: &GateUpdateOptions,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<usize> {
    let members = net.members();
    let mut points: Vec<StiefelPoint> = members
        .iter()
        .map(|&id| StiefelPoint::from_polar(&stiefel_matrix(id.kind, net.bra_tensor(id)?)))
        .collect::<Result<_>>()?;
    // polish the stored copies onto the manifold at working precision
    for (&id, p) in members.iter().zip(&points) {
        let shape = net.bra_tensor(id)?.shape().to_vec();
        net.set_bra_tensor(id, p.matrix().reshape(&shape)?)?;
    }
    let mut eval = net.evaluate(true)?;
    let mut states: Vec<AdamState> = points.iter().map(|p| AdamState::new(p, opts.adam)).collect();
    let mut last = first;
    for it in first + 1..=budget {
        for (i, &id) in members.iter().enumerate() {
            let g = gradient_from(id, eval.overlap, &eval.environments[&id]);
            let state = std::mem::replace(&mut states[i], AdamState::new(&points[i], opts.adam));
            let (p, s) = adam_step(&points[i], &g, state)?;
            let shape = net.bra_tensor(id)?.shape().to_vec();
            net.set_bra_tensor(id, p.matrix().reshape(&shape)?)?;
            points[i] = p;
            states[i] = s;
        }
        eval = net.evaluate(true)?;
        last = it;
        let f = checked_objective(&eval, it)?;
        let stop = tracker.record(it, f, || snapshot(net));
        observer(&tracker.last);
        if stop {
            break;
        }
    }
    Ok(last)
}

/// Cyclic sweeps replacing each tensor by a polar factor of its
/// environment, which maximizes `Re <B, E>` and so never lowers `|overlap|`.
fn linearized_phase(
    net: &mut OverlapNetwork<'_>,
    tracker: &mut Tracker,
    first: usize,
    budget: usize,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<usize> {
    let members = net.members();
    let mut last = first;
    for it in first + 1..=budget {
        for &id in &members {
            let env = environment(net, id)?;
            match polar_maximizer(&stiefel_matrix(id.kind, &env)) {
                Ok(w) => net.set_bra_tensor(id, w.reshape(env.shape())?)?,
                Err(Error::RankDeficient { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let eval = net.evaluate(false)?;
        last = it;
        let f = checked_objective(&eval, it)?;
        let stop = tracker.record(it, f, || snapshot(net));
        observer(&tracker.last);
        if stop {
            break;
        }
    }
    Ok(last)
}

fn snapshot(net: &OverlapNetwork<'_>) -> BTreeMap<TensorId, ComplexTensor> {
    net.bra.0.clone()
}

/// Best-iterate bookkeeping and the patience rule.
struct Tracker {
    best: f64,
    best_tensors: BTreeMap<TensorId, ComplexTensor>,
    current: f64,
    current_tensors: Option<BTreeMap<TensorId, ComplexTensor>>,
    anchor: f64,
    last_gain: usize,
    last: IterationRecord,
    threshold: f64,
    patience: usize,
    keep_best: bool,
}

impl Tracker {
    fn new(initial: f64, tensors: BTreeMap<TensorId, ComplexTensor>, opts: &GateUpdateOptions) -> Self {
        Tracker {
            best: initial,
            best_tensors: tensors,
            current: initial,
            current_tensors: None,
            anchor: initial,
            last_gain: 0,
            last: IterationRecord {
                iteration: 0,
                objective: initial,
                best: initial,
            },
            threshold: opts.convergence_threshold,
            patience: opts.patience,
            keep_best: opts.keep_best,
        }
    }

    fn saturated(&self) -> bool {
        self.best >= 1.0 - SATURATION_TOLERANCE
    }

    /// Restarts the patience window at iteration `it`.
    fn rearm(&mut self, it: usize) {
        self.anchor = self.best;
        self.last_gain = it;
    }

    /// Returns true when the run should stop.
    fn record(
        &mut self,
        it: usize,
        f: f64,
        tensors: impl FnOnce() -> BTreeMap<TensorId, ComplexTensor>,
    ) -> bool {
        self.current = f;
        if f > self.best {
            self.best = f;
            self.best_tensors = tensors();
            self.current_tensors = None;
        } else if !self.keep_best {
            self.current_tensors = Some(tensors());
        }
        if self.best > self.anchor + self.threshold {
            self.anchor = self.best;
            self.last_gain = it;
        }
        self.last = IterationRecord {
            iteration: it,
            objective: f,
            best: self.best,
        };
        self.saturated() || it - self.last_gain >= self.patience
    }
}

fn finish(
    net: &OverlapNetwork<'_>,
    tracker: Tracker,
    initial: f64,
    iterations: usize,
    opts: &GateUpdateOptions,
) -> Result<(MeraNetwork, GateUpdateOutcome)> {
    let (tensors, fidelity) = match (opts.keep_best, tracker.current_tensors) {
        (false, Some(t)) => (t, tracker.current),
        _ => (tracker.best_tensors, tracker.best),
    };
    let updated = net.ket.with_tensors(tensors)?;
    Ok((
        updated,
        GateUpdateOutcome {
            fidelity,
            initial_fidelity: initial,
            iterations,
        },
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitOutcome {
    /// `sum_i |<up|rho_i|up>|^2` at the returned network.
    pub objective: f64,
    /// `|<up|rho_i|up>|^2` per qubit.
    pub per_qubit: Vec<f64>,
    pub iterations: usize,
}

fn projector_up() -> ComplexTensor {
    let mut p = ComplexTensor::zeros(&[2, 2]);
    p.data_mut()[0] = ONE;
    p
}

/// Objective, per-qubit populations `<up|rho_i|up>`, and Euclidean
/// gradients of `sum_i <up|rho_i|up>^2` for every tensor.
fn init_objective(net: &MeraNetwork) -> Result<(f64, Vec<f64>, BTreeMap<TensorId, ComplexTensor>)> {
    let p = projector_up();
    let mut grads: BTreeMap<TensorId, ComplexTensor> = net
        .tensor_ids()
        .into_iter()
        .map(|id| Ok((id, ComplexTensor::zeros(net.tensor(id)?.shape()))))
        .collect::<Result<_>>()?;
    let mut populations = Vec::with_capacity(net.n_qubits());
    for q in 0..net.n_qubits() {
        let cone = net.causal_cone(&[q])?;
        let pass = ConePass::new(&cone, net, net)?;
        let ops = pass.ascend(&p)?;
        let sigmas = pass.descend()?;
        let c = pass.close_top(ops.last().expect("leaf tier"))?.re;
        populations.push(c);
        // d(c^2) = 2 c dc, and dc/dconj(T) = E from the bra occurrence;
        // the real gradient is twice the Wirtinger derivative.
        for id in cone.members() {
            let env = pass.environment(id, &sigmas, &ops)?;
            let g = grads.get_mut(&id).expect("all ids present");
            *g = g.axpy(C64::new(4.0 * c, 0.0), &env)?;
        }
    }
    let objective = populations.iter().map(|c| c * c).sum();
    Ok((objective, populations, grads))
}

/// Drives the network toward `|0...0>` by maximizing
/// `sum_i |<up|rho_i|up>|^2` over every tensor, returning the best iterate.
pub fn initialize_optimized(
    network: &MeraNetwork,
    opts: &GateUpdateOptions,
) -> Result<(MeraNetwork, InitOutcome)> {
    opts.validate()?;
    let n = network.n_qubits() as f64;
    let ids = network.tensor_ids();
    let mut points: Vec<StiefelPoint> = ids
        .iter()
        .map(|&id| StiefelPoint::from_polar(&stiefel_matrix(id.kind, network.tensor(id)?)))
        .collect::<Result<_>>()?;
    let rebuild = |points: &[StiefelPoint]| -> Result<MeraNetwork> {
        network.with_tensors(
            ids.iter()
                .zip(points)
                .map(|(&id, p)| Ok((id, p.matrix().reshape(network.tensor(id)?.shape())?)))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    let mut current = rebuild(&points)?;
    let (mut objective, mut populations, mut grads) = init_objective(&current)?;
    let mut best = (objective, populations.clone(), current.clone());
    let mut anchor = objective;
    let mut last_gain = 0;
    let mut iterations = 0;
    let mut states: Vec<AdamState> = points.iter().map(|p| AdamState::new(p, opts.adam)).collect();

    while iterations < opts.max_iterations && best.0 < n - SATURATION_TOLERANCE {
        iterations += 1;
        for (i, &id) in ids.iter().enumerate() {
            let g = stiefel_matrix(id.kind, &grads[&id]);
            let state = std::mem::replace(&mut states[i], AdamState::new(&points[i], opts.adam));
            let (p, s) = adam_step(&points[i], &g, state)?;
            points[i] = p;
            states[i] = s;
        }
        current = rebuild(&points)?;
        (objective, populations, grads) = init_objective(&current)?;
        if !objective.is_finite() {
            return Err(Error::NonFinite(format!("initialization objective at iteration {iterations}")));
        }
        if objective > best.0 {
            best = (objective, populations.clone(), current.clone());
        }
        if best.0 > anchor + opts.convergence_threshold {
            anchor = best.0;
            last_gain = iterations;
        }
        if iterations - last_gain >= opts.patience {
            break;
        }
    }
    let (objective, populations, net) = best;
    Ok((
        net,
        InitOutcome {
            objective,
            per_qubit: populations.iter().map(|c| c * c).collect(),
            iterations,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_two_qubit_gate;
    use crate::oracle::DenseState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_operator_gives_unit_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = MeraNetwork::build_random(2, 4, &mut rng).unwrap();
        let id4 = ComplexTensor::identity(4).into_reshape(&[2, 2, 2, 2]).unwrap();
        for pair in [[0, 1], [2, 3], [5, 6], [3, 7]] {
            let ov = OverlapNetwork::new(&net, &pair, id4.clone()).unwrap();
            assert!((overlap(&ov).unwrap() - ONE).norm() < 1e-10);
        }
    }

    #[test]
    fn product_state_matrix_element() {
        let net = MeraNetwork::build_product_state(2, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for q in 0..8 {
            let g = random_two_qubit_gate((q, q + 1), &mut rng);
            let ov = OverlapNetwork::for_gate(&net, &g).unwrap();
            assert!((overlap(&ov).unwrap() - g.matrix.at(0, 0)).norm() < 1e-12);
        }
    }

    #[test]
    fn environment_reproduces_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = MeraNetwork::build_random(2, 4, &mut rng).unwrap();
        let g = random_two_qubit_gate((2, 3), &mut rng);
        let ov = OverlapNetwork::for_gate(&net, &g).unwrap();
        let c = overlap(&ov).unwrap();
        for id in ov.members() {
            let e = environment(&ov, id).unwrap();
            let back = ov.bra_tensor(id).unwrap().inner(&e).unwrap();
            assert!((back - c).norm() < 1e-12, "{id}");
        }
        let outside = TensorId::isometry(1, 2);
        assert!(environment(&ov, outside).is_err());
    }

    #[test]
    fn stationary_at_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = MeraNetwork::build_random(2, 4, &mut rng).unwrap();
        let id4 = ComplexTensor::identity(4).into_reshape(&[2, 2, 2, 2]).unwrap();
        let ov = OverlapNetwork::new(&net, &[4, 5], id4).unwrap();
        for id in ov.members() {
            let g = fidelity_gradient(&ov, id).unwrap();
            let w = StiefelPoint::new(stiefel_matrix(id.kind, ov.bra_tensor(id).unwrap())).unwrap();
            let xi = crate::stiefel::project_tangent(&w, &g).unwrap();
            assert!(xi.norm() < 1e-8, "{id}: {}", xi.norm());
        }
    }

    #[test]
    fn phase_does_not_change_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = MeraNetwork::build_random(2, 4, &mut rng).unwrap();
        let g = random_two_qubit_gate((1, 2), &mut rng);
        let phased = g.as_tensor().scale(C64::from_polar(1.0, 0.7));
        let a = OverlapNetwork::for_gate(&net, &g).unwrap();
        let b = OverlapNetwork::new(&net, &[1, 2], phased).unwrap();
        for id in a.members() {
            let ga = fidelity_gradient(&a, id).unwrap();
            let gb = fidelity_gradient(&b, id).unwrap();
            assert!(ga.max_abs_diff(&gb) < 1e-12);
        }
    }

    #[test]
    fn identity_gate_needs_no_iterations() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = MeraNetwork::build_random(2, 4, &mut rng).unwrap();
        let (out, res) = apply_gate(&net, &ComplexTensor::identity(4), (3, 4), &Default::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert!(res.fidelity >= 1.0 - 1e-10);
        assert!(out.same_tensors(&net));
    }

    #[test]
    fn rejects_bad_gates() {
        let net = MeraNetwork::build_product_state(2, 4).unwrap();
        let opts = GateUpdateOptions::default();
        let u = ComplexTensor::identity(4);
        assert!(matches!(apply_gate(&net, &u, (0, 2), &opts), Err(Error::Qubits(_))));
        assert!(matches!(apply_gate(&net, &u, (8, 9), &opts), Err(Error::Qubits(_))));
        assert!(matches!(
            apply_gate(&net, &u.scale_real(1.01), (0, 1), &opts),
            Err(Error::NotUnitary { .. })
        ));
        let zero_iters = GateUpdateOptions {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(apply_gate(&net, &u, (0, 1), &zero_iters).is_err());
    }

    #[test]
    fn best_iterate_never_below_start_and_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = MeraNetwork::build_random(2, 2, &mut rng).unwrap();
        let g = random_two_qubit_gate((2, 3), &mut rng);
        let opts = GateUpdateOptions {
            max_iterations: 60,
            ..Default::default()
        };
        let mut trace = Vec::new();
        let (out, res) =
            apply_gate_observed(&net, &g.matrix, g.pair, &opts, &mut |r| trace.push(*r)).unwrap();
        assert!(res.fidelity >= res.initial_fidelity);
        assert!(trace.windows(2).all(|w| w[1].best >= w[0].best));
        out.validate().unwrap();
        let psi = DenseState::from_network(&net).unwrap();
        let moved = psi.apply(&g.matrix, &[2, 3]).unwrap();
        let phi = DenseState::from_network(&out).unwrap();
        let dense = phi.inner(&moved).unwrap().norm_sqr();
        assert!((dense - res.fidelity).abs() < 1e-8);
    }

    #[test]
    fn linearized_mode_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = MeraNetwork::build_random(2, 4, &mut rng).unwrap();
        let g = random_two_qubit_gate((4, 5), &mut rng);
        let opts = GateUpdateOptions {
            mode: UpdateMode::Linearized,
            max_iterations: 30,
            ..Default::default()
        };
        let (out, res) = apply_gate(&net, &g.matrix, g.pair, &opts).unwrap();
        assert!(res.fidelity > res.initial_fidelity);
        out.validate().unwrap();
    }

    #[test]
    fn hybrid_mode_absorbs_a_representable_gate() {
        let net = MeraNetwork::build_product_state(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = random_two_qubit_gate((4, 5), &mut rng);
        let opts = GateUpdateOptions {
            mode: UpdateMode::Hybrid,
            max_iterations: 2000,
            ..Default::default()
        };
        let mut trace = Vec::new();
        let (out, res) =
            apply_gate_observed(&net, &g.matrix, g.pair, &opts, &mut |r| trace.push(*r)).unwrap();
        out.validate().unwrap();
        assert!(res.fidelity >= 1.0 - 1e-9, "{}", res.fidelity);
        assert_eq!(trace.len(), res.iterations);
        assert!(trace.iter().enumerate().all(|(i, r)| r.iteration == i + 1));
    }

    #[test]
    fn init_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = MeraNetwork::build_random(2, 2, &mut rng).unwrap();
        let (_, _, grads) = init_objective(&net).unwrap();
        let h = 1e-5;
        for id in [TensorId::isometry(1, 1), TensorId::disentangler(1, 0), TensorId::top(2)] {
            let t = net.tensor(id).unwrap();
            for (idx, dir) in [(0usize, C64::new(1.0, 0.0)), (3, C64::new(0.0, 1.0))] {
                let bump = |s: f64| {
                    let mut p = t.clone();
                    p.data_mut()[idx] += dir * s;
                    init_objective(&net.with_tensor(id, p).unwrap()).unwrap().0
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                let g = grads[&id].data()[idx];
                let analytic = if dir.re != 0.0 { g.re } else { g.im };
                assert!((fd - analytic).abs() <= 1e-5 * analytic.abs().max(1.0), "{id}: {fd} vs {analytic}");
            }
        }
    }

    #[test]
    fn optimized_init_from_product_state_is_immediate() {
        let net = MeraNetwork::build_product_state(2, 8).unwrap();
        let (out, res) = initialize_optimized(&net, &Default::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert!((res.objective - 9.0).abs() < 1e-12);
        assert!(out.same_tensors(&net));
    }
}
