//! Convergence sweeps over generated line and fat-tree feeders.

use std::time::Instant;

use crate::admm::{run, RunStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::network::{generate_topology, BusTemplate, TopologyKind};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub kind: TopologyKind,
    pub size: usize,
    pub iterations: usize,
    pub status: RunStatus,
    pub total_s: f64,
    /// Total wall time divided by the number of buses.
    pub per_bus_s: f64,
}

pub const BENCH_HEADER: &str = "kind,size,iterations,total_s,per_bus_s";

/// One solve per `(kind, size)`, kinds outermost.
pub fn run_bench(
    kinds: &[TopologyKind],
    sizes: &[usize],
    template: &BusTemplate,
    config: &SolverConfig,
) -> Result<Vec<BenchRow>> {
    if kinds.is_empty() || sizes.is_empty() {
        return Err(Error::Unsupported("benchmark needs at least one kind and one size".into()));
    }
    let mut rows = Vec::with_capacity(kinds.len() * sizes.len());
    for &kind in kinds {
        for &size in sizes {
            let model = generate_topology(kind, size, template)?;
            let start = Instant::now();
            let out = run(&model, config)?;
            let total_s = start.elapsed().as_secs_f64();
            rows.push(BenchRow {
                kind,
                size,
                iterations: out.iterations(),
                status: out.status,
                total_s,
                per_bus_s: total_s / size as f64,
            });
        }
    }
    Ok(rows)
}

pub fn bench_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6e}\n",
            r.kind, r.size, r.iterations, r.total_s, r.per_bus_s
        ));
    }
    out
}
