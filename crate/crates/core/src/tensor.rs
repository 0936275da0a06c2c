//! Dense complex tensors in row-major order.
//!
//! [`ComplexTensor`] is the only array type used by the simulator. Every
//! diagram edge join is a call to [`contract`], which permutes both operands
//! into matrix form and runs a single matrix product. Multi-tensor networks
//! are contracted pairwise in the order the caller provides; see
//! [`LabeledTensor`] for the label-driven front end used by the MERA code.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Products with at least this many multiply-adds split output rows across
/// the rayon pool. Each row is reduced sequentially, so results do not
/// depend on the thread count.
const PARALLEL_FLOPS: usize = 1 << 18;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRecord", into = "TensorRecord")]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

/// On-disk form: `{shape: [..], data: [[re, im], ..]}`, row-major.
#[derive(Serialize, Deserialize)]
struct TensorRecord {
    shape: Vec<usize>,
    data: Vec<[f64; 2]>,
}

impl TryFrom<TensorRecord> for ComplexTensor {
    type Error = Error;

    fn try_from(rec: TensorRecord) -> Result<Self> {
        let data = rec.data.into_iter().map(|[re, im]| C64::new(re, im)).collect();
        ComplexTensor::from_vec(rec.shape, data)
    }
}

impl From<ComplexTensor> for TensorRecord {
    fn from(t: ComplexTensor) -> Self {
        TensorRecord {
            shape: t.shape,
            data: t.data.into_iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl ComplexTensor {
    pub fn from_vec(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!("zero-length axis in {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(ComplexTensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        assert!(shape.iter().all(|&d| d > 0), "zero-length axis in {shape:?}");
        ComplexTensor {
            shape: shape.to_vec(),
            data: vec![ZERO; shape.iter().product()],
        }
    }

    pub fn scalar(z: C64) -> Self {
        ComplexTensor {
            shape: Vec::new(),
            data: vec![z],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = ONE;
        }
        t
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_vec(vec![r, c], rows.concat())
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0usize; shape.len()];
        for slot in t.data.iter_mut() {
            *slot = f(&idx);
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape)
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len(), "index rank mismatch");
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| {
                assert!(i < d, "index {i} out of range for axis of length {d}");
                acc * d + i
            })
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], z: C64) {
        let o = self.offset(idx);
        self.data[o] = z;
    }

    /// Matrix entry for rank-2 tensors.
    pub fn at(&self, r: usize, c: usize) -> C64 {
        debug_assert_eq!(self.rank(), 2);
        self.data[r * self.shape[1] + c]
    }

    /// Same data, new shape with the same element count.
    pub fn reshape(&self, new_shape: &[usize]) -> Result<Self> {
        Self::from_vec(new_shape.to_vec(), self.data.clone())
    }

    pub fn into_reshape(self, new_shape: &[usize]) -> Result<Self> {
        Self::from_vec(new_shape.to_vec(), self.data)
    }

    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        validate_permutation(perm, self.rank())?;
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        Ok(self.permute_unchecked(perm))
    }

    fn permute_unchecked(&self, perm: &[usize]) -> Self {
        let src_strides = self.strides();
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let strides: Vec<usize> = perm.iter().map(|&p| src_strides[p]).collect();
        let rank = new_shape.len();
        let mut out = Vec::with_capacity(self.data.len());
        if rank == 0 {
            out.push(self.data[0]);
        } else {
            // Odometer over the destination; the innermost axis is a strided run.
            let inner_len = new_shape[rank - 1];
            let inner_stride = strides[rank - 1];
            let mut idx = vec![0usize; rank - 1];
            let mut base = 0usize;
            loop {
                let mut o = base;
                for _ in 0..inner_len {
                    out.push(self.data[o]);
                    o += inner_stride;
                }
                let mut ax = rank - 1;
                loop {
                    if ax == 0 {
                        return ComplexTensor {
                            shape: new_shape,
                            data: out,
                        };
                    }
                    ax -= 1;
                    idx[ax] += 1;
                    base += strides[ax];
                    if idx[ax] < new_shape[ax] {
                        break;
                    }
                    base -= strides[ax] * new_shape[ax];
                    idx[ax] = 0;
                }
            }
        }
        ComplexTensor {
            shape: new_shape,
            data: out,
        }
    }

    pub fn conj(&self) -> Self {
        ComplexTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, a: C64) -> Self {
        ComplexTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * a).collect(),
        }
    }

    pub fn scale_real(&self, a: f64) -> Self {
        self.scale(C64::new(a, 0.0))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "elementwise op on {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(ComplexTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: C64, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + a * y)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `<self, other> = sum conj(self) * other`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "inner product of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Scalar value of a rank-0 (or single-element) tensor.
    pub fn to_scalar(&self) -> Result<C64> {
        if self.data.len() != 1 {
            return Err(Error::Shape(format!("{:?} is not a scalar", self.shape)));
        }
        Ok(self.data[0])
    }

    // ----- matrix helpers (rank-2 only) -----

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    fn expect_matrix(&self, what: &str) -> Result<(usize, usize)> {
        if self.rank() != 2 {
            return Err(Error::Shape(format!("{what}: expected a matrix, got {:?}", self.shape)));
        }
        Ok((self.shape[0], self.shape[1]))
    }

    pub fn adjoint(&self) -> Result<Self> {
        self.expect_matrix("adjoint")?;
        Ok(self.permute_unchecked(&[1, 0]).conj())
    }

    pub fn transpose(&self) -> Result<Self> {
        self.expect_matrix("transpose")?;
        Ok(self.permute_unchecked(&[1, 0]))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let (m, k) = self.expect_matrix("matmul")?;
        let (k2, n) = other.expect_matrix("matmul")?;
        if k != k2 {
            return Err(Error::Shape(format!(
                "matmul of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(ComplexTensor {
            shape: vec![m, n],
            data: gemm(&self.data, &other.data, m, k, n),
        })
    }

    /// `max |W W† - I|` for a matrix with rows <= cols.
    pub fn row_isometry_defect(&self) -> Result<f64> {
        let gram = self.matmul(&self.adjoint()?)?;
        Ok(gram.max_abs_diff(&Self::identity(self.rows())))
    }

    /// `max |W† W - I|`.
    pub fn col_isometry_defect(&self) -> Result<f64> {
        let gram = self.adjoint()?.matmul(self)?;
        Ok(gram.max_abs_diff(&Self::identity(self.cols())))
    }

    pub fn trace(&self) -> Result<C64> {
        let (r, c) = self.expect_matrix("trace")?;
        if r != c {
            return Err(Error::Shape(format!("trace of non-square {:?}", self.shape)));
        }
        Ok((0..r).map(|i| self.data[i * c + i]).sum())
    }
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for ax in (0..shape.len().saturating_sub(1)).rev() {
        strides[ax] = strides[ax + 1] * shape[ax + 1];
    }
    strides
}

fn validate_permutation(perm: &[usize], rank: usize) -> Result<()> {
    if perm.len() != rank {
        return Err(Error::Axis(format!("permutation {perm:?} for rank {rank}")));
    }
    let mut seen = vec![false; rank];
    for &p in perm {
        if p >= rank || seen[p] {
            return Err(Error::Axis(format!("invalid permutation {perm:?}")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Row-major `(m x k) * (k x n)`.
fn gemm(a: &[C64], b: &[C64], m: usize, k: usize, n: usize) -> Vec<C64> {
    let mut c = vec![ZERO; m * n];
    let row = |i: usize, out: &mut [C64]| {
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &aip) in a_row.iter().enumerate() {
            if aip == ZERO {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bpj) in out.iter_mut().zip(b_row) {
                *o += aip * bpj;
            }
        }
    };
    if n == 0 {
        return c;
    }
    if m * n * k >= PARALLEL_FLOPS && m > 1 {
        c.par_chunks_mut(n).enumerate().for_each(|(i, out)| row(i, out));
    } else {
        c.chunks_mut(n).enumerate().for_each(|(i, out)| row(i, out));
    }
    c
}

/// Permutes then reshapes. The element count must be preserved.
pub fn permute_reshape(t: &ComplexTensor, perm: &[usize], new_shape: &[usize]) -> Result<ComplexTensor> {
    let p = t.permute(perm)?;
    let len: usize = new_shape.iter().product();
    if len != p.len() {
        return Err(Error::Shape(format!(
            "cannot reshape {:?} ({} entries) to {new_shape:?}",
            p.shape(),
            p.len()
        )));
    }
    p.into_reshape(new_shape)
}

/// Sums over the paired axes. Result axes: unpaired axes of `a` in order,
/// then unpaired axes of `b` in order.
pub fn contract(a: &ComplexTensor, b: &ComplexTensor, pairs: &[(usize, usize)]) -> Result<ComplexTensor> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(i, j) in pairs {
        if i >= a.rank() || j >= b.rank() {
            return Err(Error::Axis(format!(
                "pair ({i}, {j}) out of range for ranks {} and {}",
                a.rank(),
                b.rank()
            )));
        }
        if used_a[i] || used_b[j] {
            return Err(Error::Axis(format!("axis repeated in pairs {pairs:?}")));
        }
        if a.shape[i] != b.shape[j] {
            return Err(Error::Shape(format!(
                "contracted axes ({i}, {j}) have lengths {} and {}",
                a.shape[i], b.shape[j]
            )));
        }
        used_a[i] = true;
        used_b[j] = true;
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&j| !used_b[j]).collect();

    let perm_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();

    let m: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let k: usize = pairs.iter().map(|p| a.shape[p.0]).product();
    let n: usize = free_b.iter().map(|&j| b.shape[j]).product();

    let a_mat = a.permute(&perm_a)?;
    let b_mat = b.permute(&perm_b)?;
    let shape: Vec<usize> = free_a
        .iter()
        .map(|&i| a.shape[i])
        .chain(free_b.iter().map(|&j| b.shape[j]))
        .collect();
    Ok(ComplexTensor {
        shape,
        data: gemm(&a_mat.data, &b_mat.data, m, k, n),
    })
}

/// A tensor whose axes carry labels. Contracting two labeled tensors sums
/// over every label they share; each label must occur at most once per
/// tensor.
#[derive(Clone, Debug)]
pub struct LabeledTensor {
    pub tensor: ComplexTensor,
    pub labels: Vec<u32>,
}

impl LabeledTensor {
    pub fn new(tensor: ComplexTensor, labels: Vec<u32>) -> Result<Self> {
        if tensor.rank() != labels.len() {
            return Err(Error::Axis(format!(
                "{} labels for tensor of rank {}",
                labels.len(),
                tensor.rank()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Axis(format!("label {l} repeated")));
            }
        }
        Ok(LabeledTensor { tensor, labels })
    }

    pub fn contract(&self, other: &LabeledTensor) -> Result<LabeledTensor> {
        contract_labeled(&self.tensor, &self.labels, &other.tensor, &other.labels)
    }

    pub fn relabel(&mut self, from: u32, to: u32) {
        if let Some(l) = self.labels.iter_mut().find(|l| **l == from) {
            *l = to;
        }
    }

    /// Permutes axes into the requested label order.
    pub fn into_order(self, order: &[u32]) -> Result<ComplexTensor> {
        if order.len() != self.labels.len() {
            return Err(Error::Axis(format!(
                "requested order {order:?} but tensor has labels {:?}",
                self.labels
            )));
        }
        let perm = order
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::Axis(format!("label {l} not present in {:?}", self.labels)))
            })
            .collect::<Result<Vec<_>>>()?;
        self.tensor.permute(&perm)
    }
}

pub fn contract_labeled(
    a: &ComplexTensor,
    la: &[u32],
    b: &ComplexTensor,
    lb: &[u32],
) -> Result<LabeledTensor> {
    let pairs: Vec<(usize, usize)> = la
        .iter()
        .enumerate()
        .filter_map(|(i, l)| lb.iter().position(|x| x == l).map(|j| (i, j)))
        .collect();
    let tensor = contract(a, b, &pairs)?;
    let labels = la
        .iter()
        .filter(|l| !lb.contains(l))
        .chain(lb.iter().filter(|l| !la.contains(l)))
        .copied()
        .collect();
    LabeledTensor::new(tensor, labels)
}

/// Contracts a sequence left to right in the given order.
pub fn contract_chain<'a, I>(items: I) -> Result<LabeledTensor>
where
    I: IntoIterator<Item = (&'a ComplexTensor, &'a [u32])>,
{
    let mut iter = items.into_iter();
    let (t0, l0) = iter
        .next()
        .ok_or_else(|| Error::Axis("empty contraction chain".into()))?;
    let mut acc = LabeledTensor::new(t0.clone(), l0.to_vec())?;
    for (t, l) in iter {
        acc = contract_labeled(&acc.tensor, &acc.labels, t, l)?;
    }
    Ok(acc)
}

/// A tensor viewed as a matrix by grouping axes into rows and columns.
#[derive(Clone, Debug)]
pub struct MatrixView<'a> {
    pub tensor: &'a ComplexTensor,
    pub row_axes: Vec<usize>,
    pub col_axes: Vec<usize>,
}

impl<'a> MatrixView<'a> {
    pub fn new(tensor: &'a ComplexTensor, row_axes: Vec<usize>, col_axes: Vec<usize>) -> Result<Self> {
        let perm: Vec<usize> = row_axes.iter().chain(&col_axes).copied().collect();
        validate_permutation(&perm, tensor.rank())?;
        Ok(MatrixView {
            tensor,
            row_axes,
            col_axes,
        })
    }

    /// Leading `n_rows` axes as rows, the rest as columns.
    pub fn split(tensor: &'a ComplexTensor, n_rows: usize) -> Result<Self> {
        if n_rows > tensor.rank() {
            return Err(Error::Axis(format!("{n_rows} row axes for rank {}", tensor.rank())));
        }
        Self::new(tensor, (0..n_rows).collect(), (n_rows..tensor.rank()).collect())
    }

    pub fn dims(&self) -> (usize, usize) {
        let s = self.tensor.shape();
        (
            self.row_axes.iter().map(|&a| s[a]).product(),
            self.col_axes.iter().map(|&a| s[a]).product(),
        )
    }

    pub fn to_matrix(&self) -> Result<ComplexTensor> {
        let perm: Vec<usize> = self.row_axes.iter().chain(&self.col_axes).copied().collect();
        let (r, c) = self.dims();
        permute_reshape(self.tensor, &perm, &[r, c])
    }
}
