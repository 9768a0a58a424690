use num_complex::Complex64;

use super::CMatrix;
use crate::error::{Error, Result};

/// Largest dimension handled by the kernel: a three-phase `[[v, S], [S^H, l]]` block.
pub const MAX_DIM: usize = 6;
const MAX_PARAMS: usize = MAX_DIM * MAX_DIM;

/// Complex Hermitian matrix stored through its `n^2` real parameters.
///
/// Layout: the `n` real diagonal entries first, then for every strictly lower
/// entry `(r, c)` in row-major order its real and imaginary parts. The upper
/// triangle is never stored, so the value is Hermitian by construction.
#[derive(Clone, Copy, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    params: [f64; MAX_PARAMS],
}

/// Offset of the real part of strictly-lower entry `(r, c)`, `r > c`.
#[inline]
pub(crate) fn lower_offset(n: usize, r: usize, c: usize) -> usize {
    debug_assert!(r > c && r < n);
    n + 2 * (r * (r - 1) / 2 + c)
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_DIM, "hermitian dimension {n} exceeds {MAX_DIM}");
        HermitianMatrix {
            n,
            params: [0.0; MAX_PARAMS],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut h = Self::zeros(diag.len());
        h.params[..diag.len()].copy_from_slice(diag);
        h
    }

    /// Rebuilds a matrix from its real parameter vector.
    pub fn from_params(n: usize, params: &[f64]) -> Result<Self> {
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge(n));
        }
        if params.len() != n * n {
            return Err(Error::ShapeMismatch {
                op: "hermitian parameters",
                left: (n, n),
                right: (params.len(), 1),
            });
        }
        let mut h = Self::zeros(n);
        h.params[..n * n].copy_from_slice(params);
        Ok(h)
    }

    /// Hermitian part `(m + m^H) / 2` of a square matrix.
    pub fn hermitian_part(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare(m.shape()));
        }
        let n = m.rows();
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge(n));
        }
        let mut h = Self::zeros(n);
        for r in 0..n {
            h.params[r] = m[(r, r)].re;
            for c in 0..r {
                let v = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
                let o = lower_offset(n, r, c);
                h.params[o] = v.re;
                h.params[o + 1] = v.im;
            }
        }
        Ok(h)
    }

    /// `v v^H` for a complex vector.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut h = Self::zeros(n);
        for r in 0..n {
            h.params[r] = v[r].norm_sqr();
            for c in 0..r {
                let e = v[r] * v[c].conj();
                let o = lower_offset(n, r, c);
                h.params[o] = e.re;
                h.params[o + 1] = e.im;
            }
        }
        h
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Real parameters, length `n^2`.
    pub fn params(&self) -> &[f64] {
        &self.params[..self.n * self.n]
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        let n = self.n;
        &mut self.params[..n * n]
    }

    /// Weight of each real parameter in the Frobenius norm: 1 on the
    /// diagonal and 2 for off-diagonal re/im parts (each stands for two entries).
    pub fn param_multiplicity(n: usize, k: usize) -> f64 {
        if k < n {
            1.0
        } else {
            2.0
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        assert!(r < self.n && c < self.n);
        use std::cmp::Ordering;
        match r.cmp(&c) {
            Ordering::Equal => Complex64::new(self.params[r], 0.0),
            Ordering::Greater => {
                let o = lower_offset(self.n, r, c);
                Complex64::new(self.params[o], self.params[o + 1])
            }
            Ordering::Less => {
                let o = lower_offset(self.n, c, r);
                Complex64::new(self.params[o], -self.params[o + 1])
            }
        }
    }

    /// Sets entry `(r, c)` and, implicitly, its mirror. On the diagonal only
    /// the real part is kept.
    pub fn set(&mut self, r: usize, c: usize, value: Complex64) {
        assert!(r < self.n && c < self.n);
        use std::cmp::Ordering;
        match r.cmp(&c) {
            Ordering::Equal => self.params[r] = value.re,
            Ordering::Greater => {
                let o = lower_offset(self.n, r, c);
                self.params[o] = value.re;
                self.params[o + 1] = value.im;
            }
            Ordering::Less => {
                let o = lower_offset(self.n, c, r);
                self.params[o] = value.re;
                self.params[o + 1] = -value.im;
            }
        }
    }

    pub fn diag(&self) -> &[f64] {
        &self.params[..self.n]
    }

    pub fn to_dense(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |r, c| self.get(r, c))
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = *self;
        out.params_mut().iter_mut().for_each(|p| *p *= k);
        out
    }

    fn check_same_dim(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.n != other.n {
            return Err(Error::ShapeMismatch {
                op,
                left: (self.n, self.n),
                right: (other.n, other.n),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other, "hermitian sum")?;
        let mut out = *self;
        for (a, b) in out.params_mut().iter_mut().zip(other.params()) {
            *a += b;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other, "hermitian difference")?;
        let mut out = *self;
        for (a, b) in out.params_mut().iter_mut().zip(other.params()) {
            *a -= b;
        }
        Ok(out)
    }

    /// `self + k * other`.
    pub fn axpy(&self, k: f64, other: &Self) -> Result<Self> {
        self.check_same_dim(other, "hermitian axpy")?;
        let mut out = *self;
        for (a, b) in out.params_mut().iter_mut().zip(other.params()) {
            *a += k * b;
        }
        Ok(out)
    }

    /// `<self, other> = Re tr(self^H other)`; for Hermitian pairs this is the
    /// weighted parameter dot product.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other, "hermitian inner product")?;
        let n = self.n;
        Ok(self
            .params()
            .iter()
            .zip(other.params())
            .enumerate()
            .map(|(k, (a, b))| Self::param_multiplicity(n, k) * a * b)
            .sum())
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        let n = self.n;
        self.params()
            .iter()
            .enumerate()
            .map(|(k, a)| Self::param_multiplicity(n, k) * a * a)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    /// Principal submatrix on the given (sorted) indices.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(idx.len());
        for (r, &ir) in idx.iter().enumerate() {
            for (c, &ic) in idx.iter().enumerate().take(r + 1) {
                out.set(r, c, self.get(ir, ic));
            }
        }
        out
    }

    /// Assembles `[[a, b], [b^H, d]]`.
    pub fn from_blocks(a: &Self, b: &CMatrix, d: &Self) -> Result<Self> {
        if b.shape() != (a.n, d.n) {
            return Err(Error::ShapeMismatch {
                op: "hermitian block assembly",
                left: (a.n, d.n),
                right: b.shape(),
            });
        }
        let n = a.n + d.n;
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge(n));
        }
        let mut out = Self::zeros(n);
        for r in 0..a.n {
            for c in 0..=r {
                out.set(r, c, a.get(r, c));
            }
        }
        for r in 0..d.n {
            for c in 0..=r {
                out.set(a.n + r, a.n + c, d.get(r, c));
            }
            for c in 0..a.n {
                // lower-left block is b^H
                out.set(a.n + r, c, b[(c, r)].conj());
            }
        }
        Ok(out)
    }

    /// Splits into `(a, b, d)` with `a` of dimension `k`.
    pub fn split_blocks(&self, k: usize) -> (Self, CMatrix, Self) {
        assert!(k <= self.n);
        let m = self.n - k;
        let top: Vec<usize> = (0..k).collect();
        let bottom: Vec<usize> = (k..self.n).collect();
        let b = CMatrix::from_fn(k, m, |r, c| self.get(r, k + c));
        (self.principal(&top), b, self.principal(&bottom))
    }
}

impl std::fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut list = f.debug_list();
        for r in 0..self.n {
            let row: Vec<Complex64> = (0..self.n).map(|c| self.get(r, c)).collect();
            list.entry(&row);
        }
        list.finish()
    }
}
