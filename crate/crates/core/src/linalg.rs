//! Matrix factorizations on [`ComplexTensor`] matrices.
//!
//! SVD and QR are delegated to nalgebra; everything else in the crate works
//! on row-major [`ComplexTensor`] values and converts at this boundary.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{ComplexTensor, MatrixView, C64};

/// Relative singular-value floor below which a matrix counts as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

pub(crate) fn to_nalgebra(m: &ComplexTensor) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> ComplexTensor {
    let (r, c) = m.shape();
    let data = (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])).collect();
    ComplexTensor::from_vec(vec![r, c], data).expect("nalgebra shape is consistent")
}

/// Closest row-orthonormal matrix to `m` (rows <= cols): `W = U V†` from the
/// thin SVD `M = U S V†`. `W` maximizes `Re tr(W† M)` over all `W` with
/// `W W† = I`.
pub fn polar_isometry(m: &MatrixView<'_>) -> Result<ComplexTensor> {
    polar_of_matrix(&m.to_matrix()?)
}

pub(crate) fn polar_of_matrix(m: &ComplexTensor) -> Result<ComplexTensor> {
    polar_with_floor(m, RANK_TOLERANCE)
}

/// A maximizer of `Re tr(W† M)` even when `M` is rank deficient; the
/// factor is then not unique. Fails only for a zero matrix.
pub(crate) fn polar_maximizer(m: &ComplexTensor) -> Result<ComplexTensor> {
    let w = polar_with_floor(m, 0.0)?;
    let deviation = w.row_isometry_defect()?;
    if !(deviation <= 1e-12) {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    Ok(w)
}

fn polar_with_floor(m: &ComplexTensor, floor: f64) -> Result<ComplexTensor> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows > cols {
        return Err(Error::TallIsometry { rows, cols });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("polar decomposition input".into()));
    }
    let svd = to_nalgebra(m).svd(true, true);
    let s = &svd.singular_values;
    let largest = s.max();
    let smallest = s.min();
    if largest == 0.0 || (floor > 0.0 && smallest <= floor * largest) {
        return Err(Error::RankDeficient {
            ratio: if largest == 0.0 { 0.0 } else { smallest / largest },
        });
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    Ok(from_nalgebra(&(u * v_t)))
}

/// Sum of singular values, i.e. `max Re tr(W† A)` over row-orthonormal `W`.
pub fn nuclear_norm(m: &ComplexTensor) -> f64 {
    to_nalgebra(m).singular_values().sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexTensor) -> Result<Vec<f64>> {
    if m.rank() != 2 || m.rows() != m.cols() {
        return Err(Error::Shape(format!("eigenvalues of {:?}", m.shape())));
    }
    let mut ev: Vec<f64> = to_nalgebra(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn determinant(m: &ComplexTensor) -> Result<C64> {
    if m.rank() != 2 || m.rows() != m.cols() {
        return Err(Error::Shape(format!("determinant of {:?}", m.shape())));
    }
    Ok(to_nalgebra(m).determinant())
}

/// Complex matrix with i.i.d. standard normal real and imaginary parts.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexTensor {
    ComplexTensor::from_fn(&[rows, cols], |_| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-distributed `cols x cols` unitary from an existing Gaussian seed
/// matrix: QR with the diagonal phases of R moved into Q.
pub fn haar_unitary_from_gaussian(g: &ComplexTensor) -> Result<ComplexTensor> {
    let qr = to_nalgebra(g).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { C64::new(1.0, 0.0) } else { d / d.norm() };
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    Ok(from_nalgebra(&q))
}

/// Haar-random `rows x cols` matrix with orthonormal rows (`rows <= cols`).
///
/// Samples a `cols x rows` complex Gaussian, takes its phase-corrected thin
/// QR factor `Q` (orthonormal columns) and returns `Q^T`.
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> Result<ComplexTensor> {
    if rows > cols {
        return Err(Error::TallIsometry { rows, cols });
    }
    let g = gaussian_matrix(cols, rows, rng);
    haar_unitary_from_gaussian(&g)?.transpose()
}
