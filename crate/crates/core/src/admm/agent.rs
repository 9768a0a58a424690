use super::init::flat_start_voltage;
use super::message::{Envelope, Inbox, Message, XShare, YShare};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::network::{BusSpec, FeederModel, Topology};
use crate::subproblem::{
    solve_x1_voltage, update_x0, LineVars, LinkSpec, NodeContext, Observed, X0Observations, XBlock, YLocal,
    YNodeSolver, YTargets,
};

/// Neighbor primal values received in the latest XShare round.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborX {
    pub parent_v: Option<HermitianMatrix>,
    pub children: Vec<LineVars>,
}

/// Everything one bus owns: its primal blocks, the observations it keeps of
/// itself and its neighbors, and the multipliers attached to those.
#[derive(Clone, Debug)]
pub struct AgentState {
    pub index: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub bus: BusSpec,
    /// `x_{i0} = (v, s, S, l)`.
    pub x0: XBlock,
    /// `x_{i1}`: voltage copy carrying the box limits.
    pub x1: HermitianMatrix,
    /// Multiplier of `x_{i1} = y_ii.v`.
    pub lambda1: HermitianMatrix,
    pub y: YLocal,
    /// Multipliers with the same layout as `y`.
    pub mu: YLocal,
    pub neighbor_x: NeighborX,
    pub y_prev: YLocal,
    /// Full voltage matrix of a substation whose phasors are fixed.
    pub pinned_voltage: Option<HermitianMatrix>,
    solver: YNodeSolver,
}

fn missing(what: &str, from: Option<usize>) -> Error {
    Error::MissingObservation(match from {
        Some(k) => format!("{what} from neighbor slot {k}"),
        None => what.to_string(),
    })
}

fn wrong_kind(what: &str) -> Error {
    Error::MissingObservation(format!("{what}: unexpected message kind"))
}

impl AgentState {
    /// Agent for bus `index` at the flat start: every observation equals the
    /// observed block and all multipliers are zero.
    pub fn initial(
        model: &FeederModel,
        topo: &Topology,
        blocks: &[XBlock],
        index: usize,
        config: &SolverConfig,
    ) -> Result<Self> {
        let rho = config.rho;
        let bus = model.buses[index].clone();
        let parent = topo.parent[index];
        let children = topo.children[index].clone();
        let line_z = |i: usize| {
            model
                .line_of(topo, i)
                .map(|l| l.z.clone())
                .ok_or_else(|| missing("line impedance", Some(i)))
        };
        let ctx = NodeContext {
            phases: bus.phases,
            parent: match parent {
                Some(p) => Some((model.buses[p].phases, line_z(index)?)),
                None => None,
            },
            children: children
                .iter()
                .map(|&c| {
                    Ok(LinkSpec {
                        phases: model.buses[c].phases,
                        z: line_z(c)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let x0 = blocks[index].clone();
        let neighbor_x = NeighborX {
            parent_v: parent.map(|p| blocks[p].v),
            children: children
                .iter()
                .map(|&c| blocks[c].line.clone().ok_or_else(|| missing("child line", Some(c))))
                .collect::<Result<Vec<_>>>()?,
        };
        let y = YLocal {
            own: x0.clone(),
            parent_v: neighbor_x.parent_v,
            children: neighbor_x.children.clone(),
        };
        let mu = ctx.zeros();
        let n = x0.dim();
        let pinned_voltage = (config.pin_root_phasors
            && parent.is_none()
            && bus.v_lo.iter().zip(&bus.v_hi).all(|(lo, hi)| lo == hi))
        .then(|| {
            let phasors: Vec<_> = flat_start_voltage(bus.phases)
                .into_iter()
                .zip(&bus.v_lo)
                .map(|(u, m)| u * m.sqrt())
                .collect();
            HermitianMatrix::outer(&phasors)
        });
        Ok(AgentState {
            index,
            parent,
            children,
            bus,
            x1: x0.v,
            lambda1: HermitianMatrix::zeros(n),
            x0,
            y_prev: y.clone(),
            y,
            mu,
            neighbor_x,
            pinned_voltage,
            solver: YNodeSolver::new(ctx, rho)?,
        })
    }

    pub fn context(&self) -> &NodeContext {
        self.solver.context()
    }

    fn envelope(&self, receiver: usize, message: Message) -> Envelope {
        Envelope {
            sender: self.index,
            receiver,
            message,
        }
    }

    /// Observations and multipliers this bus holds about each neighbor.
    pub fn y_messages(&self) -> Vec<Envelope> {
        let mut out = Vec::with_capacity(self.children.len() + 1);
        if let (Some(p), Some(value), Some(dual)) = (self.parent, self.y.parent_v, self.mu.parent_v) {
            out.push(self.envelope(p, Message::Y(YShare::VoltageCopy { value, dual })));
        }
        for (k, &c) in self.children.iter().enumerate() {
            out.push(self.envelope(
                c,
                Message::Y(YShare::LineCopy {
                    value: self.y.children[k].clone(),
                    dual: self.mu.children[k].clone(),
                }),
            ));
        }
        out
    }

    /// Primal values each neighbor needs for its y-update.
    pub fn x_messages(&self) -> Vec<Envelope> {
        let mut out = Vec::with_capacity(self.children.len() + 1);
        if let (Some(p), Some(line)) = (self.parent, &self.x0.line) {
            out.push(self.envelope(p, Message::X(XShare::Line(line.clone()))));
        }
        for &c in &self.children {
            out.push(self.envelope(c, Message::X(XShare::Voltage(self.x0.v))));
        }
        out
    }

    /// Updates `x_{i0}` and `x_{i1}` from the neighbors' YShare messages.
    pub fn x_update(&mut self, inbox: Inbox, rho: f64) -> Result<()> {
        let parent = match (&self.parent, &inbox.parent) {
            (None, _) => None,
            (Some(_), Some(Message::Y(YShare::LineCopy { value, dual }))) => {
                Some(Observed { value, dual })
            }
            (Some(_), Some(_)) => return Err(wrong_kind("parent line copy")),
            (Some(_), None) => return Err(missing("parent line copy", None)),
        };
        let children = inbox
            .children
            .iter()
            .enumerate()
            .map(|(k, m)| match m {
                Some(Message::Y(YShare::VoltageCopy { value, dual })) => Ok(Observed { value, dual }),
                Some(_) => Err(wrong_kind("child voltage copy")),
                None => Err(missing("child voltage copy", Some(k))),
            })
            .collect::<Result<Vec<_>>>()?;
        let obs = X0Observations {
            own: Observed {
                value: &self.y.own,
                dual: &self.mu.own,
            },
            parent,
            children,
        };
        self.x0 = update_x0(&self.bus, &obs, rho)?;
        self.x1 = match self.pinned_voltage {
            Some(v) => v,
            None => solve_x1_voltage(&self.lambda1, &self.y.own.v, &self.bus.v_lo, &self.bus.v_hi, rho)?,
        };
        Ok(())
    }

    /// Updates every `y` this bus owns from the neighbors' XShare messages.
    pub fn y_update(&mut self, inbox: Inbox) -> Result<()> {
        let parent_v = match (&self.parent, inbox.parent) {
            (None, _) => None,
            (Some(_), Some(Message::X(XShare::Voltage(v)))) => Some(v),
            (Some(_), Some(_)) => return Err(wrong_kind("parent voltage")),
            (Some(_), None) => return Err(missing("parent voltage", None)),
        };
        let children = inbox
            .children
            .into_iter()
            .enumerate()
            .map(|(k, m)| match m {
                Some(Message::X(XShare::Line(l))) => Ok(l),
                Some(_) => Err(wrong_kind("child line")),
                None => Err(missing("child line", Some(k))),
            })
            .collect::<Result<Vec<_>>>()?;
        self.neighbor_x = NeighborX { parent_v, children };
        let targets = YTargets {
            own: &self.x0,
            voltage_copy: &self.x1,
            parent_v: self.neighbor_x.parent_v.as_ref(),
            children: self.neighbor_x.children.iter().collect(),
        };
        let next = self.solver.solve(&targets, &self.mu, &self.lambda1)?;
        self.y_prev = std::mem::replace(&mut self.y, next);
        Ok(())
    }

    /// The `x` side of every consensus pair owned here, in `y` layout.
    fn x_mirror(&self) -> YLocal {
        YLocal {
            own: self.x0.clone(),
            parent_v: self.neighbor_x.parent_v,
            children: self.neighbor_x.children.clone(),
        }
    }

    /// Dual ascent `mu += rho (x - y)` on every pair owned here, optionally
    /// scaled by each pair's penalty weight.
    pub fn multiplier_update(&mut self, rho: f64, weighted: bool) -> Result<()> {
        let ctx = self.solver.context();
        let x = ctx.to_params(&self.x_mirror())?;
        let y = ctx.to_params(&self.y)?;
        let mut mu = ctx.to_params(&self.mu)?;
        let weights = if weighted {
            ctx.pair_weights()
        } else {
            vec![1.0; mu.len()]
        };
        for (((m, x), y), w) in mu.iter_mut().zip(&x).zip(&y).zip(&weights) {
            *m += rho * w * (x - y);
        }
        self.mu = ctx.from_params(&mu)?;
        let gap = self.x1.try_sub(&self.y.own.v)?;
        self.lambda1 = self.lambda1.axpy(rho, &gap)?;
        Ok(())
    }

    /// Squared consensus gap and squared y change of the pairs owned here.
    pub fn local_residuals(&self) -> Result<(f64, f64)> {
        let r2 = self.x_mirror().dist_sqr(&self.y)? + self.x1.try_sub(&self.y.own.v)?.frobenius_norm_sqr();
        let d2 = self.y.dist_sqr(&self.y_prev)?;
        Ok((r2, d2))
    }

    pub fn objective(&self) -> f64 {
        self.bus
            .cost
            .iter()
            .zip(&self.x0.s)
            .map(|(c, s)| c.eval(s.re))
            .sum()
    }
}
