use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, CMatrix, HermitianMatrix};

/// Branch variables of the line from a bus to its parent.
#[derive(Clone, Debug, PartialEq)]
pub struct LineVars {
    /// Sending-end branch power `S = V I^H` (general complex matrix).
    pub power: CMatrix,
    /// Current outer product `l = I I^H`.
    pub current: HermitianMatrix,
}

impl LineVars {
    pub fn zeros(n: usize) -> Self {
        LineVars {
            power: CMatrix::zeros(n, n),
            current: HermitianMatrix::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.current.dim()
    }

    pub fn dist_sqr(&self, other: &LineVars) -> f64 {
        let ds = (&self.power - &other.power).frobenius_norm();
        let dl = self.current.try_sub(&other.current).map_or(f64::NAN, |d| d.frobenius_norm_sqr());
        ds * ds + dl
    }
}

/// `(v, s, S, l)` of one bus; the line part is absent at the substation.
#[derive(Clone, Debug, PartialEq)]
pub struct XBlock {
    pub v: HermitianMatrix,
    pub s: Vec<Complex64>,
    pub line: Option<LineVars>,
}

impl XBlock {
    pub fn zeros(n: usize, has_line: bool) -> Self {
        XBlock {
            v: HermitianMatrix::zeros(n),
            s: vec![Complex64::new(0.0, 0.0); n],
            line: has_line.then(|| LineVars::zeros(n)),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    /// `[[v, S], [S^H, l]]`, or just `v` at the root.
    pub fn psd_block(&self) -> Result<HermitianMatrix> {
        match &self.line {
            Some(l) => HermitianMatrix::from_blocks(&self.v, &l.power, &l.current),
            None => Ok(self.v),
        }
    }

    pub fn min_block_eigenvalue(&self) -> Result<f64> {
        Ok(min_eigenvalue(&self.psd_block()?))
    }

    pub fn dist_sqr(&self, other: &XBlock) -> Result<f64> {
        let dv = self.v.try_sub(&other.v)?.frobenius_norm_sqr();
        if self.s.len() != other.s.len() {
            return Err(Error::ShapeMismatch {
                op: "injection difference",
                left: (self.s.len(), 1),
                right: (other.s.len(), 1),
            });
        }
        let ds: f64 = self.s.iter().zip(&other.s).map(|(a, b)| (a - b).norm_sqr()).sum();
        let dl = match (&self.line, &other.line) {
            (Some(a), Some(b)) => a.dist_sqr(b),
            (None, None) => 0.0,
            _ => return Err(Error::MissingObservation("line variables on one side only".into())),
        };
        Ok(dv + ds + dl)
    }
}
