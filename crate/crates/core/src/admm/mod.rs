//! Bulk-synchronous ADMM over one agent per bus. Each iteration runs
//! YShare exchange, x-update, XShare exchange, y-update, multiplier update,
//! with a barrier between phases. Agents touch only their own state; data
//! crosses buses through [`Envelope`]s between tree neighbors.

mod agent;
mod init;
mod message;

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use agent::{AgentState, NeighborX};
pub use init::{flat_start_voltage, initial_blocks, initial_injection};
pub use message::{deliver, Envelope, Inbox, Message, XShare, YShare};

use crate::error::{Error, Result};
use crate::network::{FeederModel, Topology};
use crate::solution::Solution;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecutionMode {
    /// Agents run one after another in bus order.
    #[default]
    Serial,
    /// Agents of a phase run concurrently on the rayon pool.
    Parallel,
}

impl std::str::FromStr for ExecutionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "serial" => Ok(ExecutionMode::Serial),
            "parallel" => Ok(ExecutionMode::Parallel),
            other => Err(format!("unknown mode `{other}` (expected serial|parallel)")),
        }
    }
}

impl fmt::Display for ExecutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecutionMode::Serial => "serial",
            ExecutionMode::Parallel => "parallel",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub rho: f64,
    /// Both residuals must drop to `tol_scale * sqrt(|N|)`.
    pub tol_scale: f64,
    pub max_iters: usize,
    pub mode: ExecutionMode,
    /// Count every (sender, receiver) pair that carried a message.
    pub trace_messages: bool,
    /// Fix the whole substation voltage matrix to balanced phasors of the
    /// pinned magnitudes instead of constraining only its diagonal.
    pub pin_root_phasors: bool,
    /// Scale each multiplier step by its pair's penalty weight.
    pub weighted_dual_step: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 1.0,
            tol_scale: 1e-4,
            max_iters: 20000,
            mode: ExecutionMode::Serial,
            trace_messages: false,
            pin_root_phasors: true,
            weighted_dual_step: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Unsupported(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.tol_scale > 0.0) {
            return Err(Error::Unsupported(format!(
                "tolerance must be positive, got {}",
                self.tol_scale
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Unsupported("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationStats {
    pub k: usize,
    pub r: f64,
    pub s: f64,
    pub objective: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIters,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIters => "max-iters",
        })
    }
}

/// Accumulated wall time of the run and of its two update phases.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunTiming {
    pub total: Duration,
    pub x_update: Duration,
    pub y_update: Duration,
}

/// Message counts keyed by `(sender, receiver)` bus index.
pub type MessageTrace = BTreeMap<(usize, usize), u64>;

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub solution: Solution,
    pub history: Vec<IterationStats>,
    pub status: RunStatus,
    pub timing: RunTiming,
    pub trace: Option<MessageTrace>,
}

impl RunOutcome {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn last(&self) -> Option<&IterationStats> {
        self.history.last()
    }
}

fn first_error(results: Vec<Result<()>>) -> Result<()> {
    results.into_iter().collect()
}

pub struct Engine {
    config: SolverConfig,
    topo: Topology,
    agents: Vec<AgentState>,
    trace: Option<MessageTrace>,
    timing: RunTiming,
    iteration: usize,
}

impl Engine {
    /// Flat-start agents for a validated model.
    pub fn new(model: &FeederModel, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let topo = model.topology()?;
        let blocks = initial_blocks(model, &topo)?;
        let agents = (0..model.buses.len())
            .map(|i| AgentState::initial(model, &topo, &blocks, i, &config))
            .collect::<Result<Vec<_>>>()?;
        Ok(Engine {
            trace: config.trace_messages.then(BTreeMap::new),
            config,
            topo,
            agents,
            timing: RunTiming::default(),
            iteration: 0,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [AgentState] {
        &mut self.agents
    }

    pub fn timing(&self) -> RunTiming {
        self.timing
    }

    pub fn trace(&self) -> Option<&MessageTrace> {
        self.trace.as_ref()
    }

    fn exchange(&mut self, produce: impl Fn(&AgentState) -> Vec<Envelope> + Sync) -> Result<Vec<Inbox>> {
        let outgoing: Vec<Vec<Envelope>> = match self.config.mode {
            ExecutionMode::Serial => self.agents.iter().map(&produce).collect(),
            ExecutionMode::Parallel => self.agents.par_iter().map(&produce).collect(),
        };
        if let Some(trace) = &mut self.trace {
            for env in outgoing.iter().flatten() {
                *trace.entry((env.sender, env.receiver)).or_default() += 1;
            }
        }
        deliver(&self.topo, outgoing)
    }

    fn each<I, T, F>(&mut self, inputs: Vec<I>, f: F) -> Vec<T>
    where
        I: Send,
        T: Send,
        F: Fn(&mut AgentState, I) -> T + Sync + Send,
    {
        match self.config.mode {
            ExecutionMode::Serial => self.agents.iter_mut().zip(inputs).map(|(a, i)| f(a, i)).collect(),
            ExecutionMode::Parallel => self
                .agents
                .par_iter_mut()
                .zip(inputs.into_par_iter())
                .map(|(a, i)| f(a, i))
                .collect(),
        }
    }

    /// YShare exchange followed by every bus's `x_{i0}` and `x_{i1}` update.
    pub fn x_update_round(&mut self) -> Result<()> {
        let inboxes = self.exchange(AgentState::y_messages)?;
        let rho = self.config.rho;
        let start = Instant::now();
        let results = self.each(inboxes, |a, inbox| a.x_update(inbox, rho));
        self.timing.x_update += start.elapsed();
        first_error(results)
    }

    /// XShare exchange followed by every bus's y-update.
    pub fn y_update_round(&mut self) -> Result<()> {
        let inboxes = self.exchange(AgentState::x_messages)?;
        let start = Instant::now();
        let results = self.each(inboxes, |a, inbox| a.y_update(inbox));
        self.timing.y_update += start.elapsed();
        first_error(results)
    }

    pub fn multiplier_update_round(&mut self) -> Result<()> {
        let rho = self.config.rho;
        let weighted = self.config.weighted_dual_step;
        let n = self.agents.len();
        let results = self.each(vec![(); n], |a, ()| a.multiplier_update(rho, weighted));
        first_error(results)
    }

    /// `(r, s)`: consensus gap norm and `rho` times the norm of the latest y
    /// change, summed in bus order.
    pub fn residuals(&self) -> Result<(f64, f64)> {
        let mut r2 = 0.0;
        let mut d2 = 0.0;
        for a in &self.agents {
            let (r, d) = a.local_residuals()?;
            r2 += r;
            d2 += d;
        }
        Ok((r2.sqrt(), self.config.rho * d2.sqrt()))
    }

    /// Sum of bus objectives evaluated on `x_{i0}`.
    pub fn objective(&self) -> f64 {
        self.agents.iter().map(AgentState::objective).sum()
    }

    /// One full iteration; errors carry the iteration index.
    pub fn step(&mut self) -> Result<IterationStats> {
        let k = self.iteration + 1;
        let wrap = |e: Error| Error::Solver {
            iteration: k,
            source: Box::new(e),
        };
        self.x_update_round().map_err(wrap)?;
        self.y_update_round().map_err(wrap)?;
        self.multiplier_update_round().map_err(wrap)?;
        let (r, s) = self.residuals().map_err(wrap)?;
        self.iteration = k;
        Ok(IterationStats {
            k,
            r,
            s,
            objective: self.objective(),
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.config.tol_scale * (self.agents.len() as f64).sqrt()
    }

    pub fn solution(&self) -> Solution {
        Solution::from_agents(&self.agents)
    }

    /// Iterates until both residuals meet the tolerance or `max_iters` is hit.
    pub fn run(mut self) -> Result<RunOutcome> {
        let start = Instant::now();
        let tol = self.tolerance();
        let mut history = Vec::new();
        let mut status = RunStatus::MaxIters;
        while history.len() < self.config.max_iters {
            let stats = self.step()?;
            history.push(stats);
            if stats.r <= tol && stats.s <= tol {
                status = RunStatus::Converged;
                break;
            }
        }
        self.timing.total = start.elapsed();
        Ok(RunOutcome {
            solution: self.solution(),
            history,
            status,
            timing: self.timing,
            trace: self.trace,
        })
    }
}

pub fn run(model: &FeederModel, config: &SolverConfig) -> Result<RunOutcome> {
    Engine::new(model, config.clone())?.run()
}
