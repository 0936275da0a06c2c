//! First-order Riemannian optimization on the complex Stiefel manifold
//! `{W : W W† = I}` (orthonormal rows).
//!
//! Geometry: embedded Frobenius metric, tangent projection
//! `Ξ = G - ½ (G W† + W G†) W`, polar retraction, and vector transport by
//! re-projection. [`adam_step`] is Riemannian ADAM with a per-tensor scalar
//! second moment, oriented for *maximization*.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::polar_of_matrix;
use crate::tensor::{ComplexTensor, C64};

/// Tolerance on `‖W W† - I‖_max` for every stored point.
pub const ISOMETRY_TOLERANCE: f64 = 1e-10;

/// Number of step halvings [`adam_step`] tries when a retraction degenerates.
const MAX_HALVINGS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct StiefelPoint {
    matrix: ComplexTensor,
}

impl StiefelPoint {
    /// Wraps a matrix, checking the isometry invariant.
    pub fn new(matrix: ComplexTensor) -> Result<Self> {
        if matrix.rank() != 2 || matrix.rows() > matrix.cols() {
            return Err(Error::Shape(format!(
                "Stiefel point must be a wide or square matrix, got {:?}",
                matrix.shape()
            )));
        }
        let deviation = matrix.row_isometry_defect()?;
        if !(deviation <= ISOMETRY_TOLERANCE) {
            return Err(Error::Constraint {
                id: "stiefel point".into(),
                deviation,
            });
        }
        Ok(StiefelPoint { matrix })
    }

    /// Projects an arbitrary full-rank matrix onto the manifold.
    pub fn from_polar(m: &ComplexTensor) -> Result<Self> {
        Ok(StiefelPoint {
            matrix: polar_of_matrix(m)?,
        })
    }

    pub fn matrix(&self) -> &ComplexTensor {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexTensor {
        self.matrix
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.matrix.rows(), self.matrix.cols())
    }

    pub fn isometry_defect(&self) -> f64 {
        self.matrix.row_isometry_defect().unwrap_or(f64::INFINITY)
    }
}

fn check_shape(w: &StiefelPoint, g: &ComplexTensor) -> Result<()> {
    if g.shape() != w.matrix.shape() {
        return Err(Error::Shape(format!(
            "matrix {:?} does not match point {:?}",
            g.shape(),
            w.matrix.shape()
        )));
    }
    Ok(())
}

/// Orthogonal projection onto the tangent space at `w`.
pub fn project_tangent(w: &StiefelPoint, g: &ComplexTensor) -> Result<ComplexTensor> {
    check_shape(w, g)?;
    let wm = &w.matrix;
    let gw = g.matmul(&wm.adjoint()?)?;
    let sym = gw.add(&gw.adjoint()?)?.scale_real(0.5);
    g.sub(&sym.matmul(wm)?)
}

/// Tangent-space defect `max |Ξ W† + W Ξ†|`.
pub fn tangent_defect(w: &StiefelPoint, xi: &ComplexTensor) -> Result<f64> {
    check_shape(w, xi)?;
    let a = xi.matmul(&w.matrix.adjoint()?)?;
    Ok(a.add(&a.adjoint()?)?.max_abs())
}

/// Polar retraction `W' = polar(W + step Ξ)`. A zero step (or zero
/// direction) returns `W` unchanged.
pub fn retract(w: &StiefelPoint, xi: &ComplexTensor, step: f64) -> Result<StiefelPoint> {
    check_shape(w, xi)?;
    if step == 0.0 || xi.data().iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(w.clone());
    }
    let moved = w.matrix.axpy(C64::new(step, 0.0), xi)?;
    Ok(StiefelPoint {
        matrix: polar_of_matrix(&moved)?,
    })
}

/// Vector transport by projection onto the tangent space at the new point.
pub fn transport(w_new: &StiefelPoint, xi_old: &ComplexTensor) -> Result<ComplexTensor> {
    project_tangent(w_new, xi_old)
}

/// Transforms the Euclidean gradient before tangent projection.
pub trait Preconditioner {
    fn precondition(&self, point: &StiefelPoint, gradient: ComplexTensor) -> Result<ComplexTensor>;
}

/// No preconditioning.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn precondition(&self, _point: &StiefelPoint, gradient: ComplexTensor) -> Result<ComplexTensor> {
        Ok(gradient)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    pub momentum: ComplexTensor,
    pub second_moment: f64,
    pub step_count: u64,
    pub params: AdamParams,
}

impl AdamState {
    pub fn new(point: &StiefelPoint, params: AdamParams) -> Self {
        AdamState {
            momentum: ComplexTensor::zeros(point.matrix.shape()),
            second_moment: 0.0,
            step_count: 0,
            params,
        }
    }
}

/// One ascent step of Riemannian ADAM.
pub fn adam_step(
    w: &StiefelPoint,
    g_euclidean: &ComplexTensor,
    state: AdamState,
) -> Result<(StiefelPoint, AdamState)> {
    adam_step_with(w, g_euclidean, state, &Identity)
}

pub fn adam_step_with(
    w: &StiefelPoint,
    g_euclidean: &ComplexTensor,
    mut state: AdamState,
    preconditioner: &dyn Preconditioner,
) -> Result<(StiefelPoint, AdamState)> {
    check_shape(w, g_euclidean)?;
    if !g_euclidean.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    let p = state.params;
    let g = preconditioner.precondition(w, g_euclidean.clone())?;
    let xi = project_tangent(w, &g)?;

    state.momentum = state
        .momentum
        .scale_real(p.beta1)
        .axpy(C64::new(1.0 - p.beta1, 0.0), &xi)?;
    state.second_moment = p.beta2 * state.second_moment + (1.0 - p.beta2) * xi.norm_sqr();
    state.step_count += 1;

    let t = state.step_count as f64;
    let m_hat = state.momentum.scale_real(1.0 / (1.0 - p.beta1.powf(t)));
    let v_hat = state.second_moment / (1.0 - p.beta2.powf(t));
    let mut step = p.lr / (v_hat.sqrt() + p.eps);

    let mut halvings = 0;
    let w_new = loop {
        match retract(w, &m_hat, step) {
            Ok(w_new) => break w_new,
            Err(Error::RankDeficient { .. }) if halvings < MAX_HALVINGS => {
                step *= 0.5;
                halvings += 1;
            }
            Err(e) => return Err(e),
        }
    };
    state.momentum = transport(&w_new, &state.momentum)?;
    Ok((w_new, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, haar_isometry, nuclear_norm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_point(p: usize, q: usize, rng: &mut ChaCha8Rng) -> StiefelPoint {
        StiefelPoint::new(haar_isometry(p, q, rng).unwrap()).unwrap()
    }

    #[test]
    fn projection_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_point(3, 5, &mut rng);
        let g = gaussian_matrix(3, 5, &mut rng);
        let xi = project_tangent(&w, &g).unwrap();
        assert!(tangent_defect(&w, &xi).unwrap() < 1e-12);
        let twice = project_tangent(&w, &xi).unwrap();
        assert!(twice.max_abs_diff(&xi) < 1e-13);
        let normal = project_tangent(&w, w.matrix()).unwrap();
        assert!(normal.max_abs() < 1e-13);
        // self-adjoint: Re<P a, b> = Re<a, P b>
        let h = gaussian_matrix(3, 5, &mut rng);
        let ph = project_tangent(&w, &h).unwrap();
        let lhs = xi.inner(&h).unwrap().re;
        let rhs = g.inner(&ph).unwrap().re;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn retraction_zero_step_and_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_point(3, 5, &mut rng);
        let xi = project_tangent(&w, &gaussian_matrix(3, 5, &mut rng)).unwrap();
        assert_eq!(retract(&w, &xi, 0.0).unwrap(), w);
        for step in [0.01, 0.1, 1.0] {
            let w2 = retract(&w, &xi, step).unwrap();
            assert!(w2.isometry_defect() < 1e-12);
        }
    }

    #[test]
    fn retraction_is_second_order_close_to_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_point(3, 5, &mut rng);
        let xi = project_tangent(&w, &gaussian_matrix(3, 5, &mut rng)).unwrap();
        let constants: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&h| {
                let r = retract(&w, &xi, h).unwrap();
                let line = w.matrix().axpy(C64::new(h, 0.0), &xi).unwrap();
                r.matrix().sub(&line).unwrap().norm() / (h * h)
            })
            .collect();
        for c in &constants {
            assert!((c / constants[0] - 1.0).abs() < 0.05, "{constants:?}");
        }
    }

    #[test]
    fn transport_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_point(2, 4, &mut rng);
        let xi = project_tangent(&w, &gaussian_matrix(2, 4, &mut rng)).unwrap();
        assert!(transport(&w, &xi).unwrap().max_abs_diff(&xi) < 1e-13);
        let w2 = random_point(2, 4, &mut rng);
        let moved = transport(&w2, &xi).unwrap();
        assert!(tangent_defect(&w2, &moved).unwrap() < 1e-12);
        assert!(moved.norm() <= xi.norm() + 1e-12);
    }

    #[test]
    fn zero_gradient_leaves_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_point(3, 5, &mut rng);
        let state = AdamState::new(&w, AdamParams::default());
        let (w2, s2) = adam_step(&w, &ComplexTensor::zeros(&[3, 5]), state).unwrap();
        assert_eq!(w2, w);
        assert_eq!(s2.second_moment, 0.0);
        assert_eq!(s2.step_count, 1);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = random_point(2, 2, &mut rng);
        let mut g = ComplexTensor::zeros(&[2, 2]);
        g.set(&[0, 1], C64::new(f64::NAN, 0.0));
        let state = AdamState::new(&w, AdamParams::default());
        assert!(matches!(adam_step(&w, &g, state), Err(Error::NonFinite(_))));
    }

    #[test]
    fn adam_reaches_trace_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = gaussian_matrix(3, 5, &mut rng);
        let mut w = random_point(3, 5, &mut rng);
        let mut state = AdamState::new(&w, AdamParams::default());
        for _ in 0..500 {
            (w, state) = adam_step(&w, &a, state).unwrap();
        }
        let value = w.matrix().inner(&a).unwrap().re;
        assert!((nuclear_norm(&a) - value).abs() < 1e-3, "{value} vs {}", nuclear_norm(&a));
    }

    #[test]
    fn isometry_holds_over_many_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // objective Re tr(W† H W B) with Hermitian H and B
        let h0 = gaussian_matrix(4, 4, &mut rng);
        let h = h0.add(&h0.adjoint().unwrap()).unwrap();
        let b0 = gaussian_matrix(6, 6, &mut rng);
        let b = b0.add(&b0.adjoint().unwrap()).unwrap();
        let mut w = random_point(4, 6, &mut rng);
        let mut state = AdamState::new(&w, AdamParams::default());
        for _ in 0..1000 {
            let g = h.matmul(w.matrix()).unwrap().matmul(&b).unwrap().scale_real(2.0);
            (w, state) = adam_step(&w, &g, state).unwrap();
            assert!(tangent_defect(&w, &state.momentum).unwrap() < 1e-10);
        }
        assert!(w.isometry_defect() <= ISOMETRY_TOLERANCE);
    }

    #[test]
    fn small_steps_do_not_lose_more_than_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = gaussian_matrix(3, 5, &mut rng);
        let w = random_point(3, 5, &mut rng);
        let f = |p: &StiefelPoint| p.matrix().inner(&a).unwrap().re;
        for lr in [1e-3, 1e-4] {
            let params = AdamParams { lr, ..AdamParams::default() };
            let (w2, _) = adam_step(&w, &a, AdamState::new(&w, params)).unwrap();
            assert!(f(&w2) - f(&w) >= -10.0 * lr * lr);
        }
    }

    #[test]
    fn point_constructor_checks_invariant() {
        assert!(StiefelPoint::new(ComplexTensor::identity(3).scale_real(1.1)).is_err());
        assert!(StiefelPoint::new(ComplexTensor::zeros(&[3, 2])).is_err());
        assert!(StiefelPoint::new(ComplexTensor::identity(3)).is_ok());
    }
}
