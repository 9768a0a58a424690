use std::collections::HashMap;
use std::fmt;

use super::PhaseSet;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Feasible set of one phase's complex injection `p + jq`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InjectionRegion {
    /// Rectangle; bounds may be infinite.
    Box {
        p_lo: f64,
        p_hi: f64,
        q_lo: f64,
        q_hi: f64,
    },
    /// Inverter half-disk `{p >= 0, p^2 + q^2 <= s_max^2}`.
    Disk { s_max: f64 },
}

impl InjectionRegion {
    pub fn unbounded() -> Self {
        InjectionRegion::Box {
            p_lo: f64::NEG_INFINITY,
            p_hi: f64::INFINITY,
            q_lo: f64::NEG_INFINITY,
            q_hi: f64::INFINITY,
        }
    }

    pub fn fixed(p: f64, q: f64) -> Self {
        InjectionRegion::Box {
            p_lo: p,
            p_hi: p,
            q_lo: q,
            q_hi: q,
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            InjectionRegion::Box {
                p_lo,
                p_hi,
                q_lo,
                q_hi,
            } => !p_lo.is_nan() && !q_lo.is_nan() && p_lo <= p_hi && q_lo <= q_hi,
            InjectionRegion::Disk { s_max } => s_max >= 0.0 && s_max.is_finite(),
        }
    }

    pub fn contains(&self, p: f64, q: f64, tol: f64) -> bool {
        match *self {
            InjectionRegion::Box {
                p_lo,
                p_hi,
                q_lo,
                q_hi,
            } => p >= p_lo - tol && p <= p_hi + tol && q >= q_lo - tol && q <= q_hi + tol,
            InjectionRegion::Disk { s_max } => p >= -tol && p.hypot(q) <= s_max + tol,
        }
    }

    pub fn is_bounded(&self) -> bool {
        match *self {
            InjectionRegion::Box {
                p_lo,
                p_hi,
                q_lo,
                q_hi,
            } => [p_lo, p_hi, q_lo, q_hi].iter().all(|b| b.is_finite()),
            InjectionRegion::Disk { .. } => true,
        }
    }
}

/// Per-phase cost `alpha/2 p^2 + beta p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveCoeffs {
    pub alpha: f64,
    pub beta: f64,
}

impl ObjectiveCoeffs {
    /// Line-loss objective: `f(s) = p`.
    pub const LOSS: ObjectiveCoeffs = ObjectiveCoeffs {
        alpha: 0.0,
        beta: 1.0,
    };

    pub fn eval(&self, p: f64) -> f64 {
        0.5 * self.alpha * p * p + self.beta * p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BusSpec {
    pub id: i64,
    pub phases: PhaseSet,
    /// Squared-magnitude voltage limits, one per phase.
    pub v_lo: Vec<f64>,
    pub v_hi: Vec<f64>,
    pub region: Vec<InjectionRegion>,
    pub cost: Vec<ObjectiveCoeffs>,
}

impl BusSpec {
    pub fn objective(&self, p: &[f64]) -> f64 {
        self.cost.iter().zip(p).map(|(c, p)| c.eval(*p)).sum()
    }
}

/// Line from `bus` to its parent, with series impedance over the child's phases.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSpec {
    pub bus: i64,
    pub parent: i64,
    pub z: CMatrix,
}

/// Radial feeder. Bus ids are arbitrary integers; the substation has id 0.
#[derive(Clone, Debug, PartialEq)]
pub struct FeederModel {
    pub buses: Vec<BusSpec>,
    pub lines: Vec<LineSpec>,
}

/// Index-based view of a validated feeder. Bus indices follow `FeederModel::buses`.
#[derive(Clone, Debug)]
pub struct Topology {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Index into `FeederModel::lines` of the line leaving each non-root bus.
    pub line: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    /// Breadth-first order from the root.
    pub order: Vec<usize>,
}

impl Topology {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.parent[a] == Some(b) || self.parent[b] == Some(a)
    }

    /// Longest path length in edges.
    pub fn diameter(&self) -> usize {
        // height of each subtree, combined at every node
        let mut height = vec![0usize; self.len()];
        let mut best = 0;
        for &i in self.order.iter().rev() {
            let mut top = [0usize; 2];
            for &c in &self.children[i] {
                let h = height[c] + 1;
                if h > top[0] {
                    top = [h, top[0]];
                } else if h > top[1] {
                    top[1] = h;
                }
            }
            height[i] = top[0];
            best = best.max(top[0] + top[1]);
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DuplicateId(i64),
    MissingRoot,
    UnknownBus { line: usize, id: i64 },
    SelfLoop(i64),
    MultipleParents(i64),
    RootHasParent,
    EdgeCount { buses: usize, lines: usize },
    NotATree(String),
    PhaseNesting { bus: i64, phases: String, parent: i64, parent_phases: String },
    ImpedanceDimension { bus: i64, expected: usize, got: (usize, usize) },
    PerPhaseLength { bus: i64, field: &'static str, expected: usize, got: usize },
    InvalidRegion { bus: i64, phase: usize },
    VoltageLimits { bus: i64, phase: usize, lo: f64, hi: f64 },
    NegativeAlpha { bus: i64, phase: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "duplicate id {id}"),
            Violation::MissingRoot => write!(f, "no bus with id 0 (root)"),
            Violation::UnknownBus { line, id } => {
                write!(f, "line {line} references unknown bus {id}")
            }
            Violation::SelfLoop(id) => write!(f, "bus {id} is its own parent"),
            Violation::MultipleParents(id) => write!(f, "bus {id} has more than one parent line"),
            Violation::RootHasParent => write!(f, "root bus 0 has a parent line"),
            Violation::EdgeCount { buses, lines } => {
                write!(f, "not a tree: {lines} lines for {buses} buses")
            }
            Violation::NotATree(why) => write!(f, "not a tree: {why}"),
            Violation::PhaseNesting {
                bus,
                phases,
                parent,
                parent_phases,
            } => write!(
                f,
                "phase nesting violated: bus {bus} has phases {phases}, parent {parent} has {parent_phases}"
            ),
            Violation::ImpedanceDimension { bus, expected, got } => write!(
                f,
                "impedance of line {bus} is {}x{}, expected {expected}x{expected}",
                got.0, got.1
            ),
            Violation::PerPhaseLength {
                bus,
                field,
                expected,
                got,
            } => write!(f, "bus {bus}: `{field}` has {got} entries, expected {expected}"),
            Violation::InvalidRegion { bus, phase } => {
                write!(f, "bus {bus} phase #{phase}: invalid injection region")
            }
            Violation::VoltageLimits { bus, phase, lo, hi } => {
                write!(f, "bus {bus} phase #{phase}: voltage limits [{lo}, {hi}] invalid")
            }
            Violation::NegativeAlpha { bus, phase } => {
                write!(f, "bus {bus} phase #{phase}: negative quadratic cost")
            }
        }
    }
}

/// Every violation found by [`validate_radial`]; empty means valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

pub fn validate_radial(model: &FeederModel) -> ValidationReport {
    model.analyze().1
}

impl FeederModel {
    pub fn new(buses: Vec<BusSpec>, lines: Vec<LineSpec>) -> Self {
        FeederModel { buses, lines }
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn index_of(&self, id: i64) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Validated index view; fails with the full violation list.
    pub fn topology(&self) -> Result<Topology> {
        match self.analyze() {
            (Some(t), r) if r.is_empty() => Ok(t),
            (_, r) => Err(Error::Validation(r)),
        }
    }

    pub fn validated(self) -> Result<Self> {
        self.topology()?;
        Ok(self)
    }

    pub fn line_of(&self, topo: &Topology, bus: usize) -> Option<&LineSpec> {
        topo.line[bus].map(|l| &self.lines[l])
    }

    fn analyze(&self) -> (Option<Topology>, ValidationReport) {
        let mut v = Vec::new();
        let n = self.buses.len();

        let mut index: HashMap<i64, usize> = HashMap::new();
        for (k, b) in self.buses.iter().enumerate() {
            if index.insert(b.id, k).is_some() {
                v.push(Violation::DuplicateId(b.id));
            }
            let m = b.phases.len();
            for (field, len) in [
                ("vmin", b.v_lo.len()),
                ("vmax", b.v_hi.len()),
                ("region", b.region.len()),
                ("cost", b.cost.len()),
            ] {
                if len != m {
                    v.push(Violation::PerPhaseLength {
                        bus: b.id,
                        field,
                        expected: m,
                        got: len,
                    });
                }
            }
            for (ph, (lo, hi)) in b.v_lo.iter().zip(&b.v_hi).enumerate() {
                if !(*lo > 0.0 && lo <= hi && hi.is_finite()) {
                    v.push(Violation::VoltageLimits {
                        bus: b.id,
                        phase: ph,
                        lo: *lo,
                        hi: *hi,
                    });
                }
            }
            for (ph, r) in b.region.iter().enumerate() {
                if !r.is_valid() {
                    v.push(Violation::InvalidRegion { bus: b.id, phase: ph });
                }
            }
            for (ph, c) in b.cost.iter().enumerate() {
                if !(c.alpha >= 0.0) {
                    v.push(Violation::NegativeAlpha { bus: b.id, phase: ph });
                }
            }
        }
        let root = index.get(&0).copied();
        if root.is_none() {
            v.push(Violation::MissingRoot);
        }

        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut line_of: Vec<Option<usize>> = vec![None; n];
        let mut structural = true;
        for (k, l) in self.lines.iter().enumerate() {
            let (Some(&c), Some(&p)) = (index.get(&l.bus), index.get(&l.parent)) else {
                for id in [l.bus, l.parent] {
                    if !index.contains_key(&id) {
                        v.push(Violation::UnknownBus { line: k, id });
                    }
                }
                structural = false;
                continue;
            };
            if c == p {
                v.push(Violation::SelfLoop(l.bus));
                structural = false;
                continue;
            }
            if Some(c) == root {
                v.push(Violation::RootHasParent);
                structural = false;
            }
            if parent[c].is_some() {
                v.push(Violation::MultipleParents(l.bus));
                structural = false;
                continue;
            }
            parent[c] = Some(p);
            line_of[c] = Some(k);

            let (cb, pb) = (&self.buses[c], &self.buses[p]);
            if !cb.phases.is_subset_of(pb.phases) {
                v.push(Violation::PhaseNesting {
                    bus: cb.id,
                    phases: cb.phases.to_string(),
                    parent: pb.id,
                    parent_phases: pb.phases.to_string(),
                });
            }
            let m = cb.phases.len();
            if l.z.shape() != (m, m) {
                v.push(Violation::ImpedanceDimension {
                    bus: cb.id,
                    expected: m,
                    got: l.z.shape(),
                });
            }
        }
        if n > 0 && self.lines.len() != n - 1 {
            v.push(Violation::EdgeCount {
                buses: n,
                lines: self.lines.len(),
            });
            structural = false;
        }

        let Some(root) = root else {
            return (None, ValidationReport { violations: v });
        };

        let mut children = vec![Vec::new(); n];
        for (c, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(c);
            }
        }
        let mut depth = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        depth[root] = 0;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let i = order[head];
            head += 1;
            for &c in &children[i] {
                if depth[c] == usize::MAX {
                    depth[c] = depth[i] + 1;
                    order.push(c);
                }
            }
        }
        if order.len() != n {
            let stranded: Vec<String> = (0..n)
                .filter(|&i| depth[i] == usize::MAX)
                .map(|i| self.buses[i].id.to_string())
                .collect();
            v.push(Violation::NotATree(format!(
                "buses {} are not reachable from the root (disconnected or on a cycle)",
                stranded.join(", ")
            )));
            structural = false;
        }

        let topo = structural.then_some(Topology {
            root,
            parent,
            children,
            line: line_of,
            depth,
            order,
        });
        (topo, ValidationReport { violations: v })
    }
}
