//! `dopf`: solve feeders, generate test topologies, verify solution files and
//! run convergence sweeps.
//!
//! Exit codes: 0 success, 1 solver failure or failed verification,
//! 2 iteration budget exhausted, 3 invalid input, 4 I/O failure.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dopf_core::admm::{run, ExecutionMode, RunStatus, SolverConfig};
use dopf_core::bench::{bench_to_csv, run_bench};
use dopf_core::network::{feeder_to_json, generate_topology, load_feeder, BusTemplate, TopologyKind};
use dopf_core::solution::{history_to_csv, load_solution, solution_to_json};
use dopf_core::verify::{check_bfm_feasibility, check_rank1, DEFAULT_RANK_THRESHOLD};
use dopf_core::Error;

use manifest::{sha256_hex, RunManifest};

const EXIT_FAILED: u8 = 1;
const EXIT_MAX_ITERS: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "dopf", version, about = "Distributed ADMM optimal power flow on radial feeders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a feeder and write solution.json, history.csv and manifest.json.
    Solve {
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Rank-one threshold on sigma2/sigma1 of every line block.
        #[arg(long, default_value_t = DEFAULT_RANK_THRESHOLD)]
        rank_threshold: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Write a line or fat-tree test feeder.
    Generate {
        #[arg(long)]
        kind: TopologyKind,
        #[arg(long)]
        size: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iteration counts and timings over generated feeders, as CSV.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "line,fat-tree")]
        kinds: Vec<TopologyKind>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30")]
        sizes: Vec<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a solution file against a network: branch-flow residuals and
    /// rank-one exactness.
    Verify {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        network: PathBuf,
        /// Tolerance on the branch-flow residuals.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_RANK_THRESHOLD)]
        rank_threshold: f64,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Residual tolerance scale; the stopping threshold is tol * sqrt(buses).
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 20000)]
    max_iters: usize,
    #[arg(long, default_value_t = ExecutionMode::Serial)]
    mode: ExecutionMode,
    /// Constrain only the diagonal of a pinned substation voltage.
    #[arg(long)]
    root_diagonal_only: bool,
    /// Scale each multiplier step by its pair's penalty weight.
    #[arg(long)]
    weighted_dual_step: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            rho: self.rho,
            tol_scale: self.tol,
            max_iters: self.max_iters,
            mode: self.mode,
            trace_messages: false,
            pin_root_phasors: !self.root_diagonal_only,
            weighted_dual_step: self.weighted_dual_step,
        }
    }
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => EXIT_IO,
            Error::Parse(_)
            | Error::Schema { .. }
            | Error::Validation(_)
            | Error::TopologySize(_)
            | Error::EmptyRegion { .. }
            | Error::ShapeMismatch { .. }
            | Error::PhaseSubset { .. }
            | Error::DimensionTooLarge(_)
            | Error::Unsupported(_) => EXIT_INVALID,
            _ => EXIT_FAILED,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|source| {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|source| {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn in_file(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

fn solve(network: &Path, solver: &SolverArgs, rank_threshold: f64, out_dir: &Path) -> Result<u8, Failure> {
    let bytes = read(network)?;
    let model = load_feeder(&bytes).map_err(in_file(network))?;
    let config = solver.config();
    let outcome = run(&model, &config)?;
    let exactness = check_rank1(&outcome.solution, rank_threshold)?;
    let objective = outcome.solution.objective(&model);
    let manifest = RunManifest::new(
        &config,
        &network.display().to_string(),
        &bytes,
        model.buses.len(),
        &outcome,
        objective,
        &exactness,
    );

    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    write(&out_dir.join("solution.json"), &solution_to_json(&model, &outcome.solution))?;
    write(&out_dir.join("history.csv"), &history_to_csv(&outcome.history))?;
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&out_dir.join("manifest.json"), &text)?;

    println!(
        "{} after {} iterations: objective {:.6e}, r {:.3e}, s {:.3e}, {:.3}s total, {:.3e}s per bus",
        manifest.status,
        manifest.iterations,
        objective,
        manifest.final_residuals.r,
        manifest.final_residuals.s,
        manifest.wall_time_total_s,
        manifest.wall_time_per_bus_s
    );
    print!("{exactness}");
    Ok(match outcome.status {
        RunStatus::Converged => 0,
        RunStatus::MaxIters => EXIT_MAX_ITERS,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(kind: TopologyKind, size: usize, out: Option<&Path>) -> Result<u8, Failure> {
    let model = generate_topology(kind, size, &BusTemplate::default())?;
    emit(out, &(feeder_to_json(&model) + "\n"))?;
    Ok(0)
}

fn bench(kinds: &[TopologyKind], sizes: &[usize], solver: &SolverArgs, out: Option<&Path>) -> Result<u8, Failure> {
    let rows = run_bench(kinds, sizes, &BusTemplate::default(), &solver.config())?;
    emit(out, &bench_to_csv(&rows))?;
    for r in rows.iter().filter(|r| r.status != RunStatus::Converged) {
        eprintln!("warning: {} size {} stopped at {} iterations ({})", r.kind, r.size, r.iterations, r.status);
    }
    Ok(0)
}

fn verify(solution: &Path, network: &Path, tol: f64, rank_threshold: f64) -> Result<u8, Failure> {
    let model = load_feeder(&read(network)?).map_err(in_file(network))?;
    let (embedded, sol) = load_solution(&read(solution)?).map_err(in_file(solution))?;
    sol.check_against(&model).map_err(in_file(solution))?;
    if sha256_hex(feeder_to_json(&embedded).as_bytes()) != sha256_hex(feeder_to_json(&model).as_bytes()) {
        eprintln!(
            "note: the network embedded in {} differs from {}; checking against the latter",
            solution.display(),
            network.display()
        );
    }
    let bfm = check_bfm_feasibility(&sol, &model, tol)?;
    let exactness = check_rank1(&sol, rank_threshold)?;
    print!("{bfm}{exactness}");
    let ok = bfm.passed && exactness.exact;
    println!("verdict: {}", if ok { "pass" } else { "FAIL" });
    Ok(if ok { 0 } else { EXIT_FAILED })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Solve {
            network,
            solver,
            rank_threshold,
            out_dir,
        } => solve(network, solver, *rank_threshold, out_dir),
        Command::Generate { kind, size, out } => generate(*kind, *size, out.as_deref()),
        Command::Bench {
            kinds,
            sizes,
            solver,
            out,
        } => bench(kinds, sizes, solver, out.as_deref()),
        Command::Verify {
            solution,
            network,
            tol,
            rank_threshold,
        } => verify(solution, network, *tol, *rank_threshold),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
