//! The feeder-json document format.
//!
//! ```text
//! {"buses": [{"id": 0, "phases": "abc", "vmin": [..], "vmax": [..],
//!             "region": [{"type": "box", "p": [lo, hi], "q": [lo, hi]} | {"type": "disk", "smax": x}],
//!             "cost": [{"alpha": x, "beta": x}]}],
//!  "lines": [{"bus": 1, "parent": 0, "z": [[{"re": x, "im": x}, ..], ..]}]}
//! ```
//! A `null` box bound stands for an infinite one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BusSpec, FeederModel, InjectionRegion, LineSpec, ObjectiveCoeffs, PhaseSet};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexDoc {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexDoc {
    fn from(c: Complex64) -> Self {
        ComplexDoc { re: c.re, im: c.im }
    }
}

impl From<ComplexDoc> for Complex64 {
    fn from(c: ComplexDoc) -> Self {
        Complex64::new(c.re, c.im)
    }
}

pub fn matrix_to_doc(m: &CMatrix) -> Vec<Vec<ComplexDoc>> {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| m[(r, c)].into()).collect())
        .collect()
}

pub fn matrix_from_doc(rows: &[Vec<ComplexDoc>], path: &str) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Schema {
            path: path.to_string(),
            message: "rows have different lengths".into(),
        });
    }
    Ok(CMatrix::from_fn(n, m, |r, c| rows[r][c].into()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeederDoc {
    pub buses: Vec<BusDoc>,
    pub lines: Vec<LineDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusDoc {
    pub id: i64,
    pub phases: String,
    pub vmin: Vec<f64>,
    pub vmax: Vec<f64>,
    pub region: Vec<RegionDoc>,
    pub cost: Vec<CostDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionDoc {
    Box {
        p: [Option<f64>; 2],
        q: [Option<f64>; 2],
    },
    Disk {
        smax: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostDoc {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDoc {
    pub bus: i64,
    pub parent: i64,
    pub z: Vec<Vec<ComplexDoc>>,
}

fn bound_to_doc(b: f64) -> Option<f64> {
    b.is_finite().then_some(b)
}

impl From<&InjectionRegion> for RegionDoc {
    fn from(r: &InjectionRegion) -> Self {
        match *r {
            InjectionRegion::Box {
                p_lo,
                p_hi,
                q_lo,
                q_hi,
            } => RegionDoc::Box {
                p: [bound_to_doc(p_lo), bound_to_doc(p_hi)],
                q: [bound_to_doc(q_lo), bound_to_doc(q_hi)],
            },
            InjectionRegion::Disk { s_max } => RegionDoc::Disk { smax: s_max },
        }
    }
}

impl From<&RegionDoc> for InjectionRegion {
    fn from(r: &RegionDoc) -> Self {
        match *r {
            RegionDoc::Box { p, q } => InjectionRegion::Box {
                p_lo: p[0].unwrap_or(f64::NEG_INFINITY),
                p_hi: p[1].unwrap_or(f64::INFINITY),
                q_lo: q[0].unwrap_or(f64::NEG_INFINITY),
                q_hi: q[1].unwrap_or(f64::INFINITY),
            },
            RegionDoc::Disk { smax } => InjectionRegion::Disk { s_max: smax },
        }
    }
}

impl From<&FeederModel> for FeederDoc {
    fn from(m: &FeederModel) -> Self {
        FeederDoc {
            buses: m
                .buses
                .iter()
                .map(|b| BusDoc {
                    id: b.id,
                    phases: b.phases.to_string(),
                    vmin: b.v_lo.clone(),
                    vmax: b.v_hi.clone(),
                    region: b.region.iter().map(RegionDoc::from).collect(),
                    cost: b
                        .cost
                        .iter()
                        .map(|c| CostDoc {
                            alpha: c.alpha,
                            beta: c.beta,
                        })
                        .collect(),
                })
                .collect(),
            lines: m
                .lines
                .iter()
                .map(|l| LineDoc {
                    bus: l.bus,
                    parent: l.parent,
                    z: matrix_to_doc(&l.z),
                })
                .collect(),
        }
    }
}

impl FeederDoc {
    /// Converts to a model without topology validation.
    pub fn into_model(self) -> Result<FeederModel> {
        let mut buses = Vec::with_capacity(self.buses.len());
        for (k, b) in self.buses.into_iter().enumerate() {
            let phases: PhaseSet = b.phases.parse().map_err(|message| Error::Schema {
                path: format!("buses[{k}].phases"),
                message,
            })?;
            buses.push(BusSpec {
                id: b.id,
                phases,
                v_lo: b.vmin,
                v_hi: b.vmax,
                region: b.region.iter().map(InjectionRegion::from).collect(),
                cost: b
                    .cost
                    .iter()
                    .map(|c| ObjectiveCoeffs {
                        alpha: c.alpha,
                        beta: c.beta,
                    })
                    .collect(),
            });
        }
        let mut lines = Vec::with_capacity(self.lines.len());
        for (k, l) in self.lines.into_iter().enumerate() {
            lines.push(LineSpec {
                bus: l.bus,
                parent: l.parent,
                z: matrix_from_doc(&l.z, &format!("lines[{k}].z"))?,
            });
        }
        Ok(FeederModel { buses, lines })
    }
}

pub fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse(format!(
            "{} (field `{}`, line {}, column {})",
            inner,
            path,
            inner.line(),
            inner.column()
        ))
    })
}

/// Parses and validates a feeder-json document.
pub fn load_feeder(source: &[u8]) -> Result<FeederModel> {
    let doc: FeederDoc = parse_json(source)?;
    doc.into_model()?.validated()
}

pub fn feeder_to_json(model: &FeederModel) -> String {
    serde_json::to_string_pretty(&FeederDoc::from(model)).expect("feeder document serializes")
}
