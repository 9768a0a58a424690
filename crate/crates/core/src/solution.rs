//! Per-bus solution blocks, their JSON document and the iteration-history CSV.

use serde::{Deserialize, Serialize};

use crate::admm::{AgentState, IterationStats};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::network::{matrix_from_doc, matrix_to_doc, parse_json, ComplexDoc, FeederDoc, FeederModel, PhaseSet};
use crate::subproblem::{LineVars, XBlock};

#[derive(Clone, Debug, PartialEq)]
pub struct BusSolution {
    pub id: i64,
    pub phases: PhaseSet,
    pub x: XBlock,
}

/// `x_{i0}` of every bus, in model bus order.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub buses: Vec<BusSolution>,
}

impl Solution {
    pub fn from_agents(agents: &[AgentState]) -> Self {
        Solution {
            buses: agents
                .iter()
                .map(|a| BusSolution {
                    id: a.bus.id,
                    phases: a.bus.phases,
                    x: a.x0.clone(),
                })
                .collect(),
        }
    }

    pub fn bus(&self, id: i64) -> Option<&BusSolution> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn objective(&self, model: &FeederModel) -> f64 {
        model
            .buses
            .iter()
            .zip(&self.buses)
            .map(|(spec, b)| spec.cost.iter().zip(&b.x.s).map(|(c, s)| c.eval(s.re)).sum::<f64>())
            .sum()
    }

    /// Checks bus ids, phases and block sizes against `model`.
    pub fn check_against(&self, model: &FeederModel) -> Result<()> {
        let topo = model.topology()?;
        if self.buses.len() != model.buses.len() {
            return Err(Error::ShapeMismatch {
                op: "solution vs network bus count",
                left: (self.buses.len(), 1),
                right: (model.buses.len(), 1),
            });
        }
        for (i, (b, spec)) in self.buses.iter().zip(&model.buses).enumerate() {
            let n = spec.phases.len();
            let has_line = topo.parent[i].is_some();
            let ok = b.id == spec.id
                && b.phases == spec.phases
                && b.x.dim() == n
                && b.x.s.len() == n
                && b.x.line.is_some() == has_line
                && b.x.line.as_ref().map_or(true, |l| l.dim() == n && l.power.shape() == (n, n));
            if !ok {
                return Err(Error::Schema {
                    path: format!("buses[{i}]"),
                    message: format!(
                        "bus {} does not match network bus {} ({} phases{})",
                        b.id,
                        spec.id,
                        n,
                        if has_line { ", with line" } else { ", root" }
                    ),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusStateDoc {
    pub id: i64,
    pub phases: String,
    pub v: Vec<Vec<ComplexDoc>>,
    pub s: Vec<ComplexDoc>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub power: Option<Vec<Vec<ComplexDoc>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<Vec<ComplexDoc>>>,
}

/// Feeder document plus the solved per-bus state.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDoc {
    pub network: FeederDoc,
    pub state: Vec<BusStateDoc>,
}

fn complex_doc(z: num_complex::Complex64) -> ComplexDoc {
    ComplexDoc { re: z.re, im: z.im }
}

fn hermitian_from_doc(rows: &[Vec<ComplexDoc>], path: &str) -> Result<HermitianMatrix> {
    let m: CMatrix = matrix_from_doc(rows, path)?;
    HermitianMatrix::hermitian_part(&m).map_err(|e| Error::Schema {
        path: path.to_string(),
        message: e.to_string(),
    })
}

impl SolutionDoc {
    pub fn new(model: &FeederModel, solution: &Solution) -> Self {
        SolutionDoc {
            network: FeederDoc::from(model),
            state: solution
                .buses
                .iter()
                .map(|b| BusStateDoc {
                    id: b.id,
                    phases: b.phases.to_string(),
                    v: matrix_to_doc(&b.x.v.to_dense()),
                    s: b.x.s.iter().copied().map(complex_doc).collect(),
                    power: b.x.line.as_ref().map(|l| matrix_to_doc(&l.power)),
                    l: b.x.line.as_ref().map(|l| matrix_to_doc(&l.current.to_dense())),
                })
                .collect(),
        }
    }

    pub fn to_solution(&self) -> Result<Solution> {
        let buses = self
            .state
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let path = format!("state[{i}]");
                let phases: PhaseSet = b.phases.parse().map_err(|e: String| Error::Schema {
                    path: format!("{path}.phases"),
                    message: e,
                })?;
                let line = match (&b.power, &b.l) {
                    (Some(p), Some(l)) => Some(LineVars {
                        power: matrix_from_doc(p, &format!("{path}.S"))?,
                        current: hermitian_from_doc(l, &format!("{path}.l"))?,
                    }),
                    (None, None) => None,
                    _ => {
                        return Err(Error::Schema {
                            path,
                            message: "`S` and `l` must be given together".into(),
                        })
                    }
                };
                Ok(BusSolution {
                    id: b.id,
                    phases,
                    x: XBlock {
                        v: hermitian_from_doc(&b.v, &format!("{path}.v"))?,
                        s: b.s.iter().map(|z| num_complex::Complex64::new(z.re, z.im)).collect(),
                        line,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Solution { buses })
    }
}

pub fn solution_to_json(model: &FeederModel, solution: &Solution) -> String {
    serde_json::to_string_pretty(&SolutionDoc::new(model, solution)).expect("solution document serializes")
}

/// Parses a solution document into its embedded network and solved state.
pub fn load_solution(source: &[u8]) -> Result<(FeederModel, Solution)> {
    let doc: SolutionDoc = parse_json(source)?;
    let model = doc.network.clone().into_model()?.validated()?;
    Ok((model, doc.to_solution()?))
}

pub const HISTORY_HEADER: &str = "k,r,s,objective";

pub fn history_to_csv(history: &[IterationStats]) -> String {
    let mut out = String::with_capacity(32 * (history.len() + 1));
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    for h in history {
        out.push_str(&format!("{},{:e},{:e},{:e}\n", h.k, h.r, h.s, h.objective));
    }
    out
}
