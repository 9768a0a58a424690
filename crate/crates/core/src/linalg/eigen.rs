//! Cyclic complex Jacobi eigensolver and the PSD-cone projection built on it.

use num_complex::Complex64;

use super::hermitian::MAX_DIM;
use super::{CMatrix, HermitianMatrix};

const OFF_DIAG_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 50;

type Dense = [[Complex64; MAX_DIM]; MAX_DIM];

/// Eigenvalues in descending order with the matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    pub sweeps: usize,
}

impl EigenDecomposition {
    /// `U diag(f(lambda)) U^H`, keeping only eigenpairs for which `f` returns `Some`.
    pub fn recompose(&self, mut f: impl FnMut(f64) -> Option<f64>) -> HermitianMatrix {
        let n = self.values.len();
        let mut out = HermitianMatrix::zeros(n);
        let mut acc: Dense = [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM];
        for (k, &lambda) in self.values.iter().enumerate() {
            let Some(w) = f(lambda) else { continue };
            for (r, row) in acc.iter_mut().enumerate().take(n) {
                let ur = self.vectors[(r, k)] * w;
                for (c, slot) in row.iter_mut().enumerate().take(r + 1) {
                    *slot += ur * self.vectors[(c, k)].conj();
                }
            }
        }
        for (r, row) in acc.iter().enumerate().take(n) {
            for (c, v) in row.iter().enumerate().take(r + 1) {
                out.set(r, c, *v);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.recompose(Some)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix of dimension at most six.
pub fn eigh(w: &HermitianMatrix) -> EigenDecomposition {
    let n = w.dim();
    let zero = Complex64::new(0.0, 0.0);
    let mut a: Dense = [[zero; MAX_DIM]; MAX_DIM];
    let mut u: Dense = [[zero; MAX_DIM]; MAX_DIM];
    for r in 0..n {
        for c in 0..n {
            a[r][c] = w.get(r, c);
        }
        u[r][r] = Complex64::new(1.0, 0.0);
    }

    let scale = w.frobenius_norm().max(1.0);
    let tol = OFF_DIAG_TOL * scale;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p][q].norm());
            }
        }
        if off <= tol {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut u, n, p, q);
            }
        }
    }
    debug_assert!(sweeps < MAX_SWEEPS, "jacobi sweep cap reached");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].re.total_cmp(&a[i][i].re));
    let values = order.iter().map(|&k| a[k][k].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| u[r][order[c]]);
    EigenDecomposition {
        values,
        vectors,
        sweeps,
    }
}

/// One complex Givens rotation annihilating `a[p][q]`.
///
/// The rotation is `G = D R`, where `D = diag(.., conj(e), ..)` at `q` makes
/// the pivot real and `R` is the classical real Jacobi rotation.
fn rotate(a: &mut Dense, u: &mut Dense, n: usize, p: usize, q: usize) {
    let apq = a[p][q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let e = apq / mag;
    let app = a[p][p].re;
    let aqq = a[q][q].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let gpp = Complex64::new(c, 0.0);
    let gpq = Complex64::new(s, 0.0);
    let gqp = e.conj() * (-s);
    let gqq = e.conj() * c;

    // A <- A G
    for row in a.iter_mut().take(n) {
        let akp = row[p];
        let akq = row[q];
        row[p] = akp * gpp + akq * gqp;
        row[q] = akp * gpq + akq * gqq;
    }
    // A <- G^H A
    for k in 0..n {
        let apk = a[p][k];
        let aqk = a[q][k];
        a[p][k] = gpp.conj() * apk + gqp.conj() * aqk;
        a[q][k] = gpq.conj() * apk + gqq.conj() * aqk;
    }
    a[p][q] = Complex64::new(0.0, 0.0);
    a[q][p] = Complex64::new(0.0, 0.0);
    a[p][p] = Complex64::new(a[p][p].re, 0.0);
    a[q][q] = Complex64::new(a[q][q].re, 0.0);

    for row in u.iter_mut().take(n) {
        let ukp = row[p];
        let ukq = row[q];
        row[p] = ukp * gpp + ukq * gqp;
        row[q] = ukp * gpq + ukq * gqq;
    }
}

/// Nearest PSD matrix in Frobenius norm: `sum_{lambda_i > 0} lambda_i u_i u_i^H`.
pub fn psd_project(w: &HermitianMatrix) -> HermitianMatrix {
    eigh(w).recompose(|l| (l > 0.0).then_some(l))
}

pub fn min_eigenvalue(w: &HermitianMatrix) -> f64 {
    eigh(w).min_value()
}
