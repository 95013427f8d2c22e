//! Dense complex matrices and 3-D tensors.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`. [`CTensor3`] is
//! a small owned 3-D array with the contraction operators used by the channel
//! algebra:
//!
//! * mode-`i` products with a vector or a matrix (the `i`-th tensor axis is
//!   contracted with the first axis of the operand),
//! * the two-factor Hadamard product that builds a tensor from an `M×N` and an
//!   `N×L` matrix,
//! * dimension shrinkage, which drops a unit axis and returns a matrix.
//!
//! Storage keeps the second axis outermost, so a slab `t(:, j, :)` is one
//! contiguous row-major block. The mode-2 contractions that dominate the rate
//! and gradient evaluation walk slabs in order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Tensor axis, numbered from 1 as in the usual mode-`n` notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    One,
    Two,
    Three,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::One => 0,
            Axis::Two => 1,
            Axis::Three => 2,
        }
    }

    pub fn from_mode(mode: usize) -> Result<Self> {
        match mode {
            1 => Ok(Axis::One),
            2 => Ok(Axis::Two),
            3 => Ok(Axis::Three),
            _ => Err(Error::dim(format!("mode {mode} is not in 1..=3"))),
        }
    }
}

/// Complex 3-D tensor with extents `(dim1, dim2, dim3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CTensor3 {
    dims: [usize; 3],
    data: Vec<C64>,
}

impl CTensor3 {
    pub fn zeros(dim1: usize, dim2: usize, dim3: usize) -> Self {
        Self {
            dims: [dim1, dim2, dim3],
            data: vec![ZERO; dim1 * dim2 * dim3],
        }
    }

    pub fn from_fn(
        dim1: usize,
        dim2: usize,
        dim3: usize,
        mut f: impl FnMut(usize, usize, usize) -> C64,
    ) -> Self {
        let mut t = Self::zeros(dim1, dim2, dim3);
        for j in 0..dim2 {
            for i in 0..dim1 {
                for k in 0..dim3 {
                    let idx = t.offset(i, j, k);
                    t.data[idx] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Stacks `dim1×dim3` matrices along the second axis.
    pub fn from_slabs(slabs: &[CMatrix]) -> Result<Self> {
        let first = slabs
            .first()
            .ok_or_else(|| Error::Shape("cannot stack zero slabs".into()))?;
        let (d1, d3) = first.shape();
        let mut t = Self::zeros(d1, slabs.len(), d3);
        for (j, s) in slabs.iter().enumerate() {
            t.set_slab(j, s)?;
        }
        Ok(t)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn dim(&self, axis: Axis) -> usize {
        self.dims[axis.index()]
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (j * self.dims[0] + i) * self.dims[2] + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: C64) {
        let idx = self.offset(i, j, k);
        self.data[idx] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `[[t(:, j, :)]]`, a `dim1×dim3` matrix.
    pub fn slab(&self, j: usize) -> CMatrix {
        let [d1, _, d3] = self.dims;
        let start = j * d1 * d3;
        CMatrix::from_row_slice(d1, d3, &self.data[start..start + d1 * d3])
    }

    pub fn set_slab(&mut self, j: usize, m: &CMatrix) -> Result<()> {
        let [d1, d2, d3] = self.dims;
        if j >= d2 || m.shape() != (d1, d3) {
            return Err(Error::dim(format!(
                "slab {j} of shape {:?} does not fit tensor {:?}",
                m.shape(),
                self.dims
            )));
        }
        for i in 0..d1 {
            for k in 0..d3 {
                self.set(i, j, k, m[(i, k)]);
            }
        }
        Ok(())
    }

    /// All slabs along the second axis.
    pub fn slabs(&self) -> Vec<CMatrix> {
        (0..self.dims[1]).map(|j| self.slab(j)).collect()
    }

    /// `[[t(i, :, :)]]`, a `dim2×dim3` matrix.
    pub fn row_slice(&self, i: usize) -> CMatrix {
        let [_, d2, d3] = self.dims;
        CMatrix::from_fn(d2, d3, |j, k| self.get(i, j, k))
    }

    /// `[[t(:, :, k)]]`, a `dim1×dim2` matrix.
    pub fn col_slice(&self, k: usize) -> CMatrix {
        let [d1, d2, _] = self.dims;
        CMatrix::from_fn(d1, d2, |i, j| self.get(i, j, k))
    }

    /// `[front : t]`: prepends a `dim1×dim3` matrix as slab 0.
    pub fn prepend_slab(&self, front: &CMatrix) -> Result<Self> {
        let [d1, d2, d3] = self.dims;
        if front.shape() != (d1, d3) {
            return Err(Error::dim(format!(
                "cannot prepend {:?} to tensor {:?}",
                front.shape(),
                self.dims
            )));
        }
        let mut out = Self::zeros(d1, d2 + 1, d3);
        out.set_slab(0, front)?;
        let block = d1 * d3;
        out.data[block..].copy_from_slice(&self.data);
        Ok(out)
    }

    pub fn scale(&mut self, s: C64) {
        for z in &mut self.data {
            *z *= s;
        }
    }
}

/// `[[t ×_mode v]]`: contracts one axis with a vector and drops it.
pub fn mode_product(t: &CTensor3, v: &[C64], mode: Axis) -> Result<CMatrix> {
    let [d1, d2, d3] = t.dims;
    if v.len() != t.dim(mode) {
        return Err(Error::dim(format!(
            "vector of length {} against axis of extent {}",
            v.len(),
            t.dim(mode)
        )));
    }
    let out = match mode {
        Axis::Two => {
            // Slab-ordered accumulation: sum_j v_j * slab_j.
            let mut acc = vec![ZERO; d1 * d3];
            for (j, &vj) in v.iter().enumerate() {
                if vj == ZERO {
                    continue;
                }
                let slab = &t.data[j * d1 * d3..(j + 1) * d1 * d3];
                for (a, s) in acc.iter_mut().zip(slab) {
                    *a += vj * s;
                }
            }
            CMatrix::from_row_slice(d1, d3, &acc)
        }
        Axis::One => CMatrix::from_fn(d2, d3, |j, k| {
            (0..d1).map(|i| v[i] * t.get(i, j, k)).sum()
        }),
        Axis::Three => CMatrix::from_fn(d1, d2, |i, j| {
            (0..d3).map(|k| t.get(i, j, k) * v[k]).sum()
        }),
    };
    Ok(out)
}

/// `t ×_mode x`: the `mode` axis is contracted with the first axis of `x` and
/// replaced by its second axis.
pub fn mode_matrix_product(t: &CTensor3, x: &CMatrix, mode: Axis) -> Result<CTensor3> {
    let [d1, d2, d3] = t.dims;
    if x.nrows() != t.dim(mode) {
        return Err(Error::dim(format!(
            "matrix with {} rows against axis of extent {}",
            x.nrows(),
            t.dim(mode)
        )));
    }
    let p = x.ncols();
    let out = match mode {
        Axis::One => {
            let xt = x.transpose();
            let slabs: Vec<CMatrix> = (0..d2).map(|j| &xt * t.slab(j)).collect();
            if d2 == 0 {
                CTensor3::zeros(p, 0, d3)
            } else {
                CTensor3::from_slabs(&slabs)?
            }
        }
        Axis::Three => {
            let slabs: Vec<CMatrix> = (0..d2).map(|j| t.slab(j) * x).collect();
            if d2 == 0 {
                CTensor3::zeros(d1, 0, p)
            } else {
                CTensor3::from_slabs(&slabs)?
            }
        }
        Axis::Two => CTensor3::from_fn(d1, p, d3, |i, q, k| {
            (0..d2).map(|j| t.get(i, j, k) * x[(j, q)]).sum()
        }),
    };
    Ok(out)
}

/// `a ⊙₂ b` for `a: M×N`, `b: N×L`; slab `n` of the `M×N×L` result is the
/// outer product of column `n` of `a` and row `n` of `b`.
pub fn hadamard2(a: &CMatrix, b: &CMatrix) -> Result<CTensor3> {
    if a.ncols() != b.nrows() {
        return Err(Error::dim(format!(
            "hadamard2 of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(CTensor3::from_fn(a.nrows(), a.ncols(), b.ncols(), |m, n, l| {
        a[(m, n)] * b[(n, l)]
    }))
}

/// `[[t]]` for a tensor with exactly one unit axis.
pub fn shrink(t: &CTensor3) -> Result<CMatrix> {
    let units: Vec<usize> = (0..3).filter(|&a| t.dims[a] == 1).collect();
    match units.as_slice() {
        [a] => shrink_axis(t, [Axis::One, Axis::Two, Axis::Three][*a]),
        [] => Err(Error::Shape(format!("tensor {:?} has no unit axis", t.dims))),
        _ => Err(Error::Shape(format!(
            "tensor {:?} has several unit axes; name the one to drop",
            t.dims
        ))),
    }
}

/// Drops the named unit axis.
pub fn shrink_axis(t: &CTensor3, axis: Axis) -> Result<CMatrix> {
    let [d1, d2, d3] = t.dims;
    if t.dim(axis) != 1 {
        return Err(Error::Shape(format!(
            "axis {axis:?} of tensor {:?} is not a unit axis",
            t.dims
        )));
    }
    Ok(match axis {
        Axis::One => t.row_slice(0),
        Axis::Two => t.slab(0),
        Axis::Three => t.col_slice(0),
    })
    .map(|m| {
        debug_assert_eq!(m.len(), d1 * d2 * d3);
        m
    })
}

/// Inverse of [`shrink_axis`]: inserts a unit axis at `axis`.
pub fn expand(m: &CMatrix, axis: Axis) -> CTensor3 {
    let (r, c) = m.shape();
    match axis {
        Axis::One => CTensor3::from_fn(1, r, c, |_, j, k| m[(j, k)]),
        Axis::Two => CTensor3::from_fn(r, 1, c, |i, _, k| m[(i, k)]),
        Axis::Three => CTensor3::from_fn(r, c, 1, |i, j, _| m[(i, j)]),
    }
}

/// Largest elementwise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(a + aᴴ)/2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// `ln det a` for Hermitian positive semidefinite `a`.
///
/// Cholesky first; if the factorization breaks down, falls back to the
/// eigenvalues with a floor of `1e-300`.
pub fn logdet_hermitian_psd(a: &CMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::dim(format!("logdet of non-square {:?}", a.shape())));
    }
    let scale = max_abs(a).max(1.0);
    if hermitian_defect(a) > 1e-10 * scale {
        return Err(Error::Domain(format!(
            "matrix is not Hermitian (defect {:.3e})",
            hermitian_defect(a)
        )));
    }
    let h = hermitize(a);
    if let Some(ch) = h.clone().cholesky() {
        let l = ch.l_dirty();
        return Ok((0..h.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum());
    }
    let eig = h.symmetric_eigen();
    Ok(eig.eigenvalues.iter().map(|&e| e.max(1e-300).ln()).sum())
}

/// Solves `a x = b` for Hermitian positive definite `a`, falling back to LU.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if let Some(ch) = hermitize(a).cholesky() {
        return Ok(ch.solve(b));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular system".into()))
}

/// Inverse of a Hermitian positive definite matrix, re-symmetrized.
pub fn inv_hpd(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    Ok(hermitize(&solve_hpd(a, &CMatrix::identity(n, n))?))
}

/// Frobenius inner product `Σ conj(a_ij) b_ij`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}
