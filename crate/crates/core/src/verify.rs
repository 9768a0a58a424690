//! Solver-independent checks of a solution: branch-flow residuals, operating
//! limits, rank-one exactness of the relaxed line blocks, and an exhaustive
//! grid oracle for single-phase two-bus feeders.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::eigh;
use crate::network::{phase_lift, phase_project_hermitian, FeederModel, InjectionRegion};
use crate::solution::Solution;
use crate::subproblem::XBlock;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BusResidual {
    pub id: i64,
    /// Max-abs residual of the voltage-drop equation (0 at the root).
    pub voltage_drop: f64,
    /// Max-abs residual of the power-balance equation.
    pub balance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BfmReport {
    pub buses: Vec<BusResidual>,
    pub max_voltage_drop: f64,
    pub max_balance: f64,
    pub tol: f64,
    pub passed: bool,
}

impl BfmReport {
    /// Ids of the buses whose residuals exceed the tolerance.
    pub fn failing(&self) -> Vec<i64> {
        self.buses
            .iter()
            .filter(|b| b.voltage_drop > self.tol || b.balance > self.tol)
            .map(|b| b.id)
            .collect()
    }
}

impl fmt::Display for BfmReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "branch flow residuals: max voltage drop {:.3e}, max balance {:.3e} (tol {:.1e}) -> {}",
            self.max_voltage_drop,
            self.max_balance,
            self.tol,
            if self.passed { "pass" } else { "FAIL" }
        )?;
        for b in &self.buses {
            if b.voltage_drop > self.tol || b.balance > self.tol {
                writeln!(
                    f,
                    "  bus {}: voltage drop {:.3e}, balance {:.3e}",
                    b.id, b.voltage_drop, b.balance
                )?;
            }
        }
        Ok(())
    }
}

fn max_abs(m: &crate::linalg::CMatrix) -> f64 {
    m.max_abs()
}

fn block_is_finite(x: &XBlock) -> bool {
    let line_ok = x.line.as_ref().map_or(true, |l| {
        l.current.params().iter().all(|v| v.is_finite())
            && l.power.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    });
    line_ok
        && x.v.params().iter().all(|v| v.is_finite())
        && x.s.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Residuals of the branch-flow equations at every bus of `solution`.
pub fn check_bfm_feasibility(solution: &Solution, model: &FeederModel, tol: f64) -> Result<BfmReport> {
    solution.check_against(model)?;
    let topo = model.topology()?;
    let mut buses = Vec::with_capacity(model.buses.len());
    for (i, (spec, b)) in model.buses.iter().zip(&solution.buses).enumerate() {
        let x = &b.x;
        let voltage_drop = match (topo.parent[i], &x.line, model.line_of(&topo, i)) {
            (Some(p), Some(line), Some(ls)) => {
                let z = &ls.z;
                let parent_v = phase_project_hermitian(&solution.buses[p].x.v, model.buses[p].phases, spec.phases)?;
                let zsh = z.try_mul(&line.power.adjoint())?;
                let zlz = z.try_mul(&line.current.to_dense())?.try_mul(&z.adjoint())?;
                let e = parent_v
                    .to_dense()
                    .try_sub(&x.v.to_dense())?
                    .try_add(&zsh)?
                    .try_add(&zsh.adjoint())?
                    .try_sub(&zlz)?;
                max_abs(&e)
            }
            _ => 0.0,
        };
        let n = spec.phases.len();
        let mut acc = crate::linalg::CMatrix::zeros(n, n);
        for &c in &topo.children[i] {
            let cl = solution.buses[c]
                .x
                .line
                .as_ref()
                .ok_or_else(|| Error::MissingObservation(format!("line variables of bus {}", model.buses[c].id)))?;
            let z = &model
                .line_of(&topo, c)
                .ok_or_else(|| Error::MissingObservation(format!("line of bus {}", model.buses[c].id)))?
                .z;
            let arriving = cl.power.try_sub(&z.try_mul(&cl.current.to_dense())?)?;
            acc = acc.try_add(&phase_lift(&arriving, model.buses[c].phases, spec.phases)?)?;
        }
        if let Some(line) = &x.line {
            acc = acc.try_sub(&line.power)?;
        }
        let balance = x
            .s
            .iter()
            .enumerate()
            .map(|(k, s)| (s + acc[(k, k)]).norm())
            .fold(0.0, f64::max);
        // a non-finite entry anywhere in the block must not pass as a zero residual
        let (voltage_drop, balance) = if block_is_finite(x) {
            (voltage_drop, balance)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        buses.push(BusResidual {
            id: spec.id,
            voltage_drop,
            balance,
        });
    }
    let max_voltage_drop = buses.iter().map(|b| b.voltage_drop).fold(0.0, f64::max);
    let max_balance = buses.iter().map(|b| b.balance).fold(0.0, f64::max);
    Ok(BfmReport {
        passed: max_voltage_drop <= tol && max_balance <= tol,
        buses,
        max_voltage_drop,
        max_balance,
        tol,
    })
}

/// Largest violation of the voltage-magnitude limits and injection regions.
pub fn max_limit_violation(solution: &Solution, model: &FeederModel) -> Result<f64> {
    solution.check_against(model)?;
    let mut worst = 0.0f64;
    for (spec, b) in model.buses.iter().zip(&solution.buses) {
        for (k, d) in b.x.v.diag().iter().enumerate() {
            worst = worst.max(spec.v_lo[k] - d).max(d - spec.v_hi[k]);
        }
        for (region, s) in spec.region.iter().zip(&b.x.s) {
            let gap = match *region {
                InjectionRegion::Box {
                    p_lo,
                    p_hi,
                    q_lo,
                    q_hi,
                } => (p_lo - s.re).max(s.re - p_hi).max(q_lo - s.im).max(s.im - q_hi),
                InjectionRegion::Disk { s_max } => (-s.re).max(s.norm() - s_max),
            };
            worst = worst.max(gap);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineRatio {
    pub id: i64,
    pub ratio: f64,
}

/// Second-to-largest singular value ratio of every line block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactnessReport {
    pub lines: Vec<LineRatio>,
    pub max_ratio: f64,
    pub threshold: f64,
    pub exact: bool,
}

impl fmt::Display for ExactnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "rank-one exactness: max sigma2/sigma1 {:.3e} (threshold {:.1e}) -> {}",
            self.max_ratio,
            self.threshold,
            if self.exact { "exact" } else { "NOT exact" }
        )?;
        for l in &self.lines {
            if l.ratio > self.threshold {
                writeln!(f, "  line to bus {}: ratio {:.3e}", l.id, l.ratio)?;
            }
        }
        Ok(())
    }
}

pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-2;

/// `sigma2 / sigma1` of `[[v, S], [S^H, l]]` for every non-root bus.
pub fn check_rank1(solution: &Solution, threshold: f64) -> Result<ExactnessReport> {
    let mut lines = Vec::new();
    for b in &solution.buses {
        if b.x.line.is_none() {
            continue;
        }
        let block = b.x.psd_block()?;
        let mut sv: Vec<f64> = eigh(&block).values.iter().map(|l| l.abs()).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let ratio = if sv[0] > 0.0 { (sv[1] / sv[0]).min(1.0) } else { 0.0 };
        lines.push(LineRatio { id: b.id, ratio });
    }
    let max_ratio = lines.iter().map(|l| l.ratio).fold(0.0, f64::max);
    Ok(ExactnessReport {
        lines,
        max_ratio,
        threshold,
        exact: max_ratio <= threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BruteForceResult {
    pub objective: f64,
    /// Injection at the non-root bus.
    pub injection: Complex64,
    pub root_injection: Complex64,
    pub voltage: f64,
    pub current: f64,
}

/// Physical power flow of a single-phase line feeding a leaf: `(v1, l, s0)`
/// for leaf injection `s1` and root squared voltage `v0`, or `None` when no
/// real solution exists.
pub fn two_bus_flow(v0: f64, z: Complex64, s1: Complex64) -> Option<(f64, f64, Complex64)> {
    // leaf: S = s1; l v1 = |S|^2 and v1 = v0 + 2 Re(z S^*) - |z|^2 l
    let b = v0 + 2.0 * (z * s1.conj()).re;
    let a = z.norm_sqr();
    let c = s1.norm_sqr();
    let l = if a == 0.0 {
        if b <= 0.0 {
            return None;
        }
        c / b
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 || b <= 0.0 {
            return None;
        }
        // smaller root, written to avoid cancellation
        2.0 * c / (b + disc.sqrt())
    };
    let v1 = b - a * l;
    let s0 = -(s1 - z * l);
    Some((v1, l, s0))
}

fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / step).ceil().max(0.0) as usize;
    (0..=n).map(move |k| if n == 0 { lo } else { lo + (hi - lo) * k as f64 / n as f64 })
}

/// Exhaustive scan of the leaf injection region of a single-phase two-bus
/// feeder at resolution `grid_step`, keeping the best feasible objective.
pub fn brute_force_opf(model: &FeederModel, grid_step: f64) -> Result<BruteForceResult> {
    let topo = model.topology()?;
    if model.buses.len() != 2 || model.buses.iter().any(|b| b.phases.len() != 1) {
        return Err(Error::Unsupported(
            "grid oracle needs exactly two single-phase buses".into(),
        ));
    }
    if !(grid_step > 0.0) {
        return Err(Error::Unsupported(format!("grid step must be positive, got {grid_step}")));
    }
    let root = &model.buses[topo.root];
    let leaf_idx = 1 - topo.root;
    let leaf = &model.buses[leaf_idx];
    if root.v_lo[0] != root.v_hi[0] {
        return Err(Error::Unsupported("grid oracle needs a pinned root voltage".into()));
    }
    let v0 = root.v_lo[0];
    let z = model
        .line_of(&topo, leaf_idx)
        .ok_or_else(|| Error::MissingObservation("line of the leaf".into()))?
        .z[(0, 0)];
    let region = leaf.region[0];
    let (p_range, q_range) = match region {
        InjectionRegion::Box {
            p_lo,
            p_hi,
            q_lo,
            q_hi,
        } => ((p_lo, p_hi), (q_lo, q_hi)),
        InjectionRegion::Disk { s_max } => ((0.0, s_max), (-s_max, s_max)),
    };
    if ![p_range.0, p_range.1, q_range.0, q_range.1].iter().all(|x| x.is_finite()) {
        return Err(Error::Unsupported("grid oracle needs a bounded leaf region".into()));
    }

    let mut best: Option<BruteForceResult> = None;
    for p in grid(p_range.0, p_range.1, grid_step) {
        for q in grid(q_range.0, q_range.1, grid_step) {
            if !region.contains(p, q, 0.0) {
                continue;
            }
            let s1 = Complex64::new(p, q);
            let Some((v1, l, s0)) = two_bus_flow(v0, z, s1) else {
                continue;
            };
            if v1 < leaf.v_lo[0] || v1 > leaf.v_hi[0] || !root.region[0].contains(s0.re, s0.im, 0.0) {
                continue;
            }
            let objective = root.cost[0].eval(s0.re) + leaf.cost[0].eval(p);
            if best.map_or(true, |b| objective < b.objective) {
                best = Some(BruteForceResult {
                    objective,
                    injection: s1,
                    root_injection: s0,
                    voltage: v1,
                    current: l,
                });
            }
        }
    }
    best.ok_or(Error::NoFeasiblePoint)
}
