use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::network::{FeederModel, InjectionRegion, Phase, PhaseSet, Topology};
use crate::subproblem::{LineVars, XBlock};

/// Balanced unit phasors `1, e^{-i 2pi/3}, e^{+i 2pi/3}` on phases a, b, c.
pub fn flat_start_voltage(phases: PhaseSet) -> Vec<Complex64> {
    phases
        .iter()
        .map(|p| match p {
            Phase::A => Complex64::new(1.0, 0.0),
            Phase::B => Complex64::from_polar(1.0, -2.0 * PI / 3.0),
            Phase::C => Complex64::from_polar(1.0, 2.0 * PI / 3.0),
        })
        .collect()
}

fn start_coordinate(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else {
        0.0f64.max(lo).min(hi)
    }
}

/// Starting injection: box midpoint (0 clamped into half-open boxes), disk origin.
pub fn initial_injection(region: &InjectionRegion) -> Complex64 {
    match *region {
        InjectionRegion::Box {
            p_lo,
            p_hi,
            q_lo,
            q_hi,
        } => Complex64::new(start_coordinate(p_lo, p_hi), start_coordinate(q_lo, q_hi)),
        InjectionRegion::Disk { .. } => Complex64::new(0.0, 0.0),
    }
}

/// Flat-start `x_{i0}` for every bus: branch currents accumulated leaf to root
/// as `I_i = (s_i / V_i)^* + sum_j I_j`, then `v = V V^H`, `l = I I^H`, `S = V I^H`.
pub fn initial_blocks(model: &FeederModel, topo: &Topology) -> Result<Vec<XBlock>> {
    let n = model.buses.len();
    let mut volt = Vec::with_capacity(n);
    let mut inj = Vec::with_capacity(n);
    for bus in &model.buses {
        for (region, phase) in bus.region.iter().zip(bus.phases.iter()) {
            if !region.is_valid() {
                return Err(Error::EmptyRegion {
                    bus: bus.id,
                    phase: phase.as_char(),
                });
            }
        }
        volt.push(flat_start_voltage(bus.phases));
        inj.push(bus.region.iter().map(initial_injection).collect::<Vec<_>>());
    }

    let mut current: Vec<Vec<Complex64>> = (0..n)
        .map(|i| inj[i].iter().zip(&volt[i]).map(|(s, v)| (s / v).conj()).collect())
        .collect();
    for &i in topo.order.iter().rev() {
        if let Some(p) = topo.parent[i] {
            let pos = model.buses[p].phases.positions_of(model.buses[i].phases)?;
            let child = current[i].clone();
            for (k, c) in pos.into_iter().zip(child) {
                current[p][k] += c;
            }
        }
    }

    Ok((0..n)
        .map(|i| XBlock {
            v: HermitianMatrix::outer(&volt[i]),
            s: inj[i].clone(),
            line: topo.parent[i].map(|_| LineVars {
                power: CMatrix::outer(&volt[i], &current[i]),
                current: HermitianMatrix::outer(&current[i]),
            }),
        })
        .collect())
}
