use num_complex::Complex64;

use super::{BusSpec, FeederModel, InjectionRegion, LineSpec, ObjectiveCoeffs, PhaseSet};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyKind {
    /// Path rooted at one end (maximum diameter).
    Line,
    /// Balanced binary tree in heap order (minimum diameter for a binary tree).
    FatTree,
}

impl std::str::FromStr for TopologyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "line" => Ok(TopologyKind::Line),
            "fat-tree" | "fattree" => Ok(TopologyKind::FatTree),
            other => Err(format!("unknown topology kind `{other}` (expected line|fat-tree)")),
        }
    }
}

impl std::fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TopologyKind::Line => "line",
            TopologyKind::FatTree => "fat-tree",
        })
    }
}

/// Per-bus defaults stamped onto every generated bus.
#[derive(Clone, Debug)]
pub struct BusTemplate {
    pub phases: PhaseSet,
    /// Squared voltage magnitude at the substation.
    pub root_voltage: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    /// Injection region of each phase of a load bus.
    pub load: Vec<InjectionRegion>,
    pub load_cost: ObjectiveCoeffs,
    /// Quadratic supply cost at the substation; penalizing supply also
    /// penalizes losses.
    pub root_cost: ObjectiveCoeffs,
    /// Series impedance of every line (p.u.).
    pub z: CMatrix,
}

impl Default for BusTemplate {
    fn default() -> Self {
        let self_z = Complex64::new(0.0030, 0.0060);
        let mutual = Complex64::new(0.0010, 0.0025);
        let z = CMatrix::from_fn(3, 3, |r, c| if r == c { self_z } else { mutual });
        BusTemplate {
            phases: PhaseSet::ABC,
            root_voltage: 1.0,
            v_lo: 0.95 * 0.95,
            v_hi: 1.05 * 1.05,
            load: vec![
                InjectionRegion::Box { p_lo: -0.020, p_hi: -0.020, q_lo: -0.010, q_hi: 0.010 },
                InjectionRegion::Box { p_lo: -0.015, p_hi: -0.015, q_lo: -0.010, q_hi: 0.010 },
                InjectionRegion::Box { p_lo: -0.025, p_hi: -0.025, q_lo: -0.010, q_hi: 0.010 },
            ],
            load_cost: ObjectiveCoeffs::LOSS,
            root_cost: ObjectiveCoeffs { alpha: 1.0, beta: 0.0 },
            z,
        }
    }
}

impl BusTemplate {
    fn bus(&self, id: i64) -> BusSpec {
        let m = self.phases.len();
        if id == 0 {
            BusSpec {
                id,
                phases: self.phases,
                v_lo: vec![self.root_voltage; m],
                v_hi: vec![self.root_voltage; m],
                region: vec![InjectionRegion::unbounded(); m],
                cost: vec![self.root_cost; m],
            }
        } else {
            BusSpec {
                id,
                phases: self.phases,
                v_lo: vec![self.v_lo; m],
                v_hi: vec![self.v_hi; m],
                region: (0..m).map(|k| self.load[k % self.load.len()]).collect(),
                cost: vec![self.load_cost; m],
            }
        }
    }
}

/// Generates a line or fat-tree feeder of `size` buses rooted at bus 0.
pub fn generate_topology(kind: TopologyKind, size: usize, template: &BusTemplate) -> Result<FeederModel> {
    if size < 2 {
        return Err(Error::TopologySize(size));
    }
    if template.z.shape() != (template.phases.len(), template.phases.len()) {
        return Err(Error::ShapeMismatch {
            op: "template impedance",
            left: (template.phases.len(), template.phases.len()),
            right: template.z.shape(),
        });
    }
    let buses = (0..size as i64).map(|id| template.bus(id)).collect();
    let lines = (1..size)
        .map(|i| {
            let parent = match kind {
                TopologyKind::Line => i - 1,
                TopologyKind::FatTree => (i - 1) / 2,
            };
            LineSpec {
                bus: i as i64,
                parent: parent as i64,
                z: template.z.clone(),
            }
        })
        .collect();
    Ok(FeederModel::new(buses, lines))
}
