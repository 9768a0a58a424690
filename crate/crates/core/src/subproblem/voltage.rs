use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;

/// `x_{i1}` update: `argmin <lambda, x> + rho/2 ||x - y_v||^2` subject to
/// `v_lo <= diag(x) <= v_hi`. Off-diagonal entries are unconstrained.
pub fn solve_x1_voltage(
    lambda: &HermitianMatrix,
    y_v: &HermitianMatrix,
    v_lo: &[f64],
    v_hi: &[f64],
    rho: f64,
) -> Result<HermitianMatrix> {
    let n = y_v.dim();
    if v_lo.len() != n || v_hi.len() != n {
        return Err(Error::ShapeMismatch {
            op: "voltage limits",
            left: (n, 1),
            right: (v_lo.len().min(v_hi.len()), 1),
        });
    }
    let mut x = y_v.axpy(-1.0 / rho, lambda)?;
    for (k, d) in x.params_mut()[..n].iter_mut().enumerate() {
        *d = d.max(v_lo[k]).min(v_hi[k]);
    }
    Ok(x)
}
