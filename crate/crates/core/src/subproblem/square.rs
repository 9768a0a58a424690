//! The `x_{i0}` update: square completion of the augmented Lagrangian terms
//! into a single block distance, PSD projection of that block, and the
//! per-phase injection proximal steps.

use num_complex::Complex64;

use super::injection::prox_injection;
use super::{LineVars, XBlock};
use crate::error::{Error, Result};
use crate::linalg::{psd_project, CMatrix, HermitianMatrix};
use crate::network::BusSpec;

/// Penalty weights attached to each observation of `x_{i0}`.
///
/// Bus `i` with `k` children observes itself with weights `(2k+3)` on `S`,
/// `(k+1)` on `l`, `2` on `v` and `1` on `s`; the parent's copy of `(S, l)`
/// and every child's copy of `v` carry weight 1. Each matrix block then sums
/// to `k + 2` (twice that for `S`, which appears twice in the PSD block).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservationWeights {
    pub own_power: f64,
    pub own_current: f64,
    pub own_voltage: f64,
    pub own_injection: f64,
    pub parent_line: f64,
    pub child_voltage: f64,
}

impl ObservationWeights {
    pub fn for_children(k: usize) -> Self {
        let k = k as f64;
        ObservationWeights {
            own_power: 2.0 * k + 3.0,
            own_current: k + 1.0,
            own_voltage: 2.0,
            own_injection: 1.0,
            parent_line: 1.0,
            child_voltage: 1.0,
        }
    }
}

/// Copy of `x_{i0}` held elsewhere together with its multiplier.
#[derive(Clone, Copy, Debug)]
pub struct Observed<'a, T> {
    pub value: &'a T,
    pub dual: &'a T,
}

/// Everything bus `i` receives before its `x_{i0}` update.
#[derive(Clone, Debug)]
pub struct X0Observations<'a> {
    /// `y_ii` and `mu_ii^(1..4)`.
    pub own: Observed<'a, XBlock>,
    /// `y_{i,A_i}` (held by the parent) and `mu_{i,A_i}`.
    pub parent: Option<Observed<'a, LineVars>>,
    /// `y_{ij}` (voltage copy held by child `j`) and `mu_{ij}`.
    pub children: Vec<Observed<'a, HermitianMatrix>>,
}

/// Constants of the completed square:
/// `H_i0 = rho*weight/2 * ||X - w||^2 + f_i(s) + rho/2 ||s - s_hat||^2 + const`.
#[derive(Clone, Debug, PartialEq)]
pub struct HatConstants {
    pub w: HermitianMatrix,
    pub s_hat: Vec<Complex64>,
    /// Common block weight `|C_i| + 2`.
    pub weight: f64,
}

fn weighted_mean_h(
    terms: &[(f64, &HermitianMatrix)],
    duals: &[&HermitianMatrix],
    rho: f64,
) -> Result<HermitianMatrix> {
    let n = terms[0].1.dim();
    let mut acc = HermitianMatrix::zeros(n);
    let mut total = 0.0;
    for (k, m) in terms {
        acc = acc.axpy(*k, m)?;
        total += k;
    }
    for d in duals {
        acc = acc.axpy(-1.0 / rho, d)?;
    }
    Ok(acc.scale(1.0 / total))
}

fn weighted_mean_c(terms: &[(f64, &CMatrix)], duals: &[&CMatrix], rho: f64) -> Result<CMatrix> {
    let (r, c) = terms[0].1.shape();
    let mut acc = CMatrix::zeros(r, c);
    let mut total = 0.0;
    for (k, m) in terms {
        acc = acc.try_add(&m.scale(*k))?;
        total += k;
    }
    for d in duals {
        acc = acc.try_sub(&d.scale(1.0 / rho))?;
    }
    Ok(acc.scale(1.0 / total))
}

/// Hat constants for bus `i` from all observations of `x_{i0}`:
/// every entry becomes `(sum_j k_j w_j - mu_total / rho) / sum_j k_j`.
pub fn complete_square_x0(obs: &X0Observations<'_>, rho: f64) -> Result<HatConstants> {
    if !(rho > 0.0) {
        return Err(Error::Unsupported(format!("penalty rho must be positive, got {rho}")));
    }
    let k = obs.children.len();
    let wts = ObservationWeights::for_children(k);
    let own = obs.own.value;
    let own_dual = obs.own.dual;

    let mut v_terms = vec![(wts.own_voltage, &own.v)];
    let mut v_duals = vec![&own_dual.v];
    for c in &obs.children {
        v_terms.push((wts.child_voltage, c.value));
        v_duals.push(c.dual);
    }
    let v_hat = weighted_mean_h(&v_terms, &v_duals, rho)?;

    let w = match (&own.line, &own_dual.line, &obs.parent) {
        (None, None, None) => v_hat,
        (Some(line), Some(line_dual), Some(parent)) => {
            let s_hat = weighted_mean_c(
                &[(wts.own_power, &line.power), (wts.parent_line, &parent.value.power)],
                &[&line_dual.power, &parent.dual.power],
                rho,
            )?;
            let l_hat = weighted_mean_h(
                &[(wts.own_current, &line.current), (wts.parent_line, &parent.value.current)],
                &[&line_dual.current, &parent.dual.current],
                rho,
            )?;
            HermitianMatrix::from_blocks(&v_hat, &s_hat, &l_hat)?
        }
        (_, _, None) => {
            return Err(Error::MissingObservation(
                "parent copy of the line variables".into(),
            ))
        }
        _ => {
            return Err(Error::MissingObservation(
                "own copy of the line variables or its multiplier".into(),
            ))
        }
    };

    if own.s.len() != own_dual.s.len() {
        return Err(Error::ShapeMismatch {
            op: "injection multiplier",
            left: (own.s.len(), 1),
            right: (own_dual.s.len(), 1),
        });
    }
    let s_hat = own
        .s
        .iter()
        .zip(&own_dual.s)
        .map(|(y, mu)| (y * wts.own_injection - mu / rho) / wts.own_injection)
        .collect();

    Ok(HatConstants {
        w,
        s_hat,
        weight: k as f64 + 2.0,
    })
}

/// `(v, line)` from the PSD projection of the hat block.
pub fn solve_x0_matrix(hat: &HatConstants) -> (HermitianMatrix, Option<LineVars>) {
    let x = psd_project(&hat.w);
    let n = hat.s_hat.len();
    if x.dim() == n {
        (x, None)
    } else {
        let (v, power, current) = x.split_blocks(n);
        (v, Some(LineVars { power, current }))
    }
}

/// Full `x_{i0}` update for one bus.
pub fn update_x0(bus: &BusSpec, obs: &X0Observations<'_>, rho: f64) -> Result<XBlock> {
    let hat = complete_square_x0(obs, rho)?;
    let (v, line) = solve_x0_matrix(&hat);
    let s = bus
        .region
        .iter()
        .zip(&bus.cost)
        .zip(&hat.s_hat)
        .map(|((region, cost), s_hat)| prox_injection(region, cost, rho, *s_hat))
        .collect::<Result<Vec<_>>>()?;
    Ok(XBlock { v, s, line })
}
