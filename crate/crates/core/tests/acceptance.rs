//! Acceptance suite: one PASS/FAIL line per criterion. Numeric arguments
//! select a subset, e.g. `cargo test --test acceptance -- 1 5`.

mod common;

use std::time::{Duration, Instant};

use common::*;
use dopf_core::admm::{run, RunStatus, SolverConfig};
use dopf_core::bench::run_bench;
use dopf_core::linalg::{psd_project, HermitianMatrix};
use dopf_core::network::{load_feeder, BusTemplate, FeederModel, InjectionRegion, ObjectiveCoeffs, TopologyKind};
use dopf_core::subproblem::{
    build_constraint_system, complete_square_x0, disk_case, disk_residual, prox_injection, solve_disk_multiplier,
    solve_equality_qp, DiskCase, LineVars, Observed, X0Observations, XBlock, YNodeSolver, YTargets,
};
use dopf_core::verify::{brute_force_opf, check_bfm_feasibility, check_rank1, max_limit_violation, DEFAULT_RANK_THRESHOLD};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn feeder(name: &str) -> FeederModel {
    let path = format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"));
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    load_feeder(&bytes).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// `V max(L + shift, 0) V^H` from the reference eigendecomposition.
fn clipped(w: &HermitianMatrix, shift: f64) -> Dense {
    let eig = dense_h(w).symmetric_eigen();
    let n = w.dim();
    let mut out = Dense::zeros(n, n);
    for k in 0..n {
        let l = eig.eigenvalues[k] + shift;
        if l > 0.0 {
            let u = eig.eigenvectors.column(k);
            out += (u * u.adjoint()).scale(l);
        }
    }
    out
}

fn psd_projection() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut min_eig = f64::INFINITY;
    let mut gap = f64::NEG_INFINITY;
    let mut value_err = 0.0f64;
    for t in 0..1000 {
        let n = 2 + t % 5;
        let w = random_hermitian(&mut rng, n, 1.0);
        let x = psd_project(&w);
        min_eig = min_eig.min(eigenvalues(&x)[0]);
        let wd = dense_h(&w);
        let d2 = norm_sqr(&(dense_h(&x) - &wd));
        let neg: f64 = eigenvalues(&w).iter().filter(|l| **l <= 0.0).map(|l| l * l).sum();
        value_err = value_err.max((d2 - neg).abs());
        let dist = d2.sqrt();
        for c in 0..200 {
            let y = match c % 4 {
                0 => dense_h(&random_psd(&mut rng, n, n, 1.0)),
                1 => dense_h(&random_psd(&mut rng, n, 1, 1.0)),
                2 => dense_h(&x) + dense_h(&random_psd(&mut rng, n, 1, 0.03)),
                _ => clipped(&w, rng.gen_range(-0.05..0.05)),
            };
            gap = gap.max(dist - norm_sqr(&(y - &wd)).sqrt());
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: min_eig >= -1e-10 && gap <= 1e-9 && value_err <= 1e-8 && elapsed < Duration::from_secs(5),
        detail: format!(
            "min eig {min_eig:.2e}, worst candidate gap {gap:.2e}, optimal value error {value_err:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn injection_projections() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut infeasible = 0;
    let mut worst_g = 0.0f64;
    let mut cases = [0usize; 3];
    for t in 0..2000 {
        let cost = ObjectiveCoeffs {
            alpha: if t % 3 == 0 { 0.0 } else { rng.gen_range(0.0..2.0) },
            beta: rng.gen_range(-1.0..1.0),
        };
        let rho = rng.gen_range(0.1..5.0);
        let s_hat = Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let region = if t < 1000 {
            let p_lo = rng.gen_range(-1.0..0.5);
            let q_lo = rng.gen_range(-1.0..0.5);
            let wp = if t % 10 == 0 { 0.0 } else { rng.gen_range(0.0..1.0) };
            InjectionRegion::Box {
                p_lo,
                p_hi: p_lo + wp,
                q_lo,
                q_hi: q_lo + rng.gen_range(0.0..1.0),
            }
        } else {
            InjectionRegion::Disk {
                s_max: rng.gen_range(0.05..1.5),
            }
        };
        let s = prox_injection(&region, &cost, rho, s_hat).unwrap();
        if !region.contains(s.re, s.im, 0.0) {
            infeasible += 1;
        }
        if let InjectionRegion::Disk { s_max } = region {
            let (a1, b1, a2, b2) = (cost.alpha + rho, cost.beta - rho * s_hat.re, rho, -rho * s_hat.im);
            let case = disk_case(a1, b1, a2, b2, s_max);
            cases[case as usize] += 1;
            if case == DiskCase::Boundary {
                let lambda = solve_disk_multiplier(a1, b1, a2, b2, s_max).unwrap();
                worst_g = worst_g.max(disk_residual(a1, b1, a2, b2, s_max, lambda).abs());
            }
        }
        let f = |p: f64, q: f64| injection_objective(&cost, rho, s_hat, p, q);
        worst_gap = worst_gap.max(f(s.re, s.im) - grid_minimum(&region, f));
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: worst_gap <= 1e-5
            && infeasible == 0
            && worst_g <= 1e-10
            && cases.iter().all(|&c| c > 0)
            && elapsed < Duration::from_secs(10),
        detail: format!(
            "worst gap {worst_gap:.2e}, {infeasible} infeasible, |g| {worst_g:.2e}, disk cases {cases:?}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn y_update_closed_form() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut dev = 0.0f64;
    let mut ay = 0.0f64;
    let mut bfm = 0.0f64;
    let mut stationarity = 0.0f64;
    let mut cached = 0.0f64;
    for t in 0..500 {
        let phases = random_phases(&mut rng);
        let kids = rng.gen_range(0..4);
        let ctx = random_context(&mut rng, phases, t % 5 != 0, kids);
        let x = random_local(&ctx, &mut rng, 1.0);
        let duals = random_local(&ctx, &mut rng, 1.0);
        let x1 = random_hermitian(&mut rng, phases.len(), 1.0);
        let lambda1 = random_hermitian(&mut rng, phases.len(), 1.0);
        let rho = rng.gen_range(0.2..5.0);
        let targets = YTargets {
            own: &x.own,
            voltage_copy: &x1,
            parent_v: x.parent_v.as_ref(),
            children: x.children.iter().collect(),
        };
        let sys = build_constraint_system(&ctx, &targets, &duals, &lambda1, rho).unwrap();
        let ours = solve_equality_qp(&sys).unwrap();
        let kkt = kkt_solve(&sys);
        dev = dev.max(ours.iter().zip(&kkt).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
        for r in 0..sys.rows {
            let row: f64 = (0..sys.cols).map(|c| sys.a[r * sys.cols + c] * ours[c]).sum();
            ay = ay.max(row.abs());
        }
        let y = ctx.from_params(&ours).unwrap();
        bfm = bfm.max(max_abs(&bfm_rows(&ctx, &y)));

        // Directional derivatives of the directly evaluated objective vanish
        // along every direction that keeps the branch-flow equations.
        let h = 1e-4;
        for d in bfm_null_space(&ctx) {
            let at = |k: f64| {
                let p: Vec<f64> = ours.iter().zip(&d).map(|(a, b)| a + k * b).collect();
                y_objective(&ctx, &targets, &duals, &lambda1, rho, &ctx.from_params(&p).unwrap())
            };
            stationarity = stationarity.max(((at(h) - at(-h)) / (2.0 * h)).abs());
        }

        let solver = YNodeSolver::new(ctx.clone(), rho).unwrap();
        let again = ctx.to_params(&solver.solve(&targets, &duals, &lambda1).unwrap()).unwrap();
        cached = cached.max(again.iter().zip(&ours).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
    }
    Verdict {
        pass: dev <= 1e-8 && ay <= 1e-10 && bfm <= 1e-10 && stationarity <= 1e-7 && cached <= 1e-12,
        detail: format!(
            "KKT deviation {dev:.2e}, |Ay| {ay:.2e}, branch-flow rows {bfm:.2e}, stationarity {stationarity:.2e}, cached factor {cached:.2e}"
        ),
    }
}

/// Real coordinates of `x_{i0}`: `v`, `S` (re, im), `l`, `s` (re, im).
fn block_from_coords(n: usize, has_line: bool, t: &[f64]) -> XBlock {
    let h = n * n;
    let v = HermitianMatrix::from_params(n, &t[..h]).unwrap();
    let (line, rest) = if has_line {
        let s = &t[h..3 * h];
        let power = dopf_core::linalg::CMatrix::from_fn(n, n, |r, c| {
            let k = 2 * (r * n + c);
            Complex64::new(s[k], s[k + 1])
        });
        let current = HermitianMatrix::from_params(n, &t[3 * h..4 * h]).unwrap();
        (Some(LineVars { power, current }), &t[4 * h..])
    } else {
        (None, &t[h..])
    };
    let s = (0..n).map(|k| Complex64::new(rest[2 * k], rest[2 * k + 1])).collect();
    XBlock { v, s, line }
}

fn random_block(rng: &mut impl Rng, n: usize, has_line: bool, scale: f64) -> XBlock {
    let len = if has_line { 4 * n * n + 2 * n } else { n * n + 2 * n };
    let t: Vec<f64> = (0..len).map(|_| rng.gen_range(-scale..scale)).collect();
    block_from_coords(n, has_line, &t)
}

fn random_line(rng: &mut impl Rng, n: usize) -> LineVars {
    LineVars {
        power: random_cmatrix(rng, n, n, 1.0),
        current: random_hermitian(rng, n, 1.0),
    }
}

fn square_completion() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut grad_err = 0.0f64;
    let mut offset_err = 0.0f64;
    let mut seen = [[false; 4]; 3];
    for t in 0..100 {
        let n = 1 + t % 3;
        let k = (t / 3) % 4;
        seen[n - 1][k] = true;
        let has_line = t % 7 != 0;
        let rho = rng.gen_range(0.2..5.0);
        let own = random_block(&mut rng, n, has_line, 1.0);
        let own_dual = random_block(&mut rng, n, has_line, 1.0);
        let parent = (random_line(&mut rng, n), random_line(&mut rng, n));
        let kids: Vec<(HermitianMatrix, HermitianMatrix)> = (0..k)
            .map(|_| (random_hermitian(&mut rng, n, 1.0), random_hermitian(&mut rng, n, 1.0)))
            .collect();
        let obs = X0Observations {
            own: Observed {
                value: &own,
                dual: &own_dual,
            },
            parent: has_line.then(|| Observed {
                value: &parent.0,
                dual: &parent.1,
            }),
            children: kids.iter().map(|(v, d)| Observed { value: v, dual: d }).collect(),
        };
        let hat = complete_square_x0(&obs, rho).unwrap();
        let w = dense_h(&hat.w);
        let len = if has_line { 4 * n * n + 2 * n } else { n * n + 2 * n };
        let theta: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = block_from_coords(n, has_line, &theta);
        let square = |x: &XBlock| {
            let ds: Vec<Complex64> = x.s.iter().zip(&hat.s_hat).map(|(a, b)| a - b).collect();
            0.5 * rho * hat.weight * norm_sqr(&(block(x) - &w)) + 0.5 * rho * inner_vec(&ds, &ds)
        };
        let h = 1e-4;
        for j in 0..len {
            let mut e = vec![0.0; len];
            e[j] = 1.0;
            let d = block_from_coords(n, has_line, &e);
            let ds: Vec<Complex64> = x.s.iter().zip(&hat.s_hat).map(|(a, b)| a - b).collect();
            let analytic = rho * hat.weight * inner(&(block(&x) - &w), &block(&d)) + rho * inner_vec(&ds, &d.s);
            let shifted = |k: f64| {
                let p: Vec<f64> = theta.iter().zip(&e).map(|(a, b)| a + k * b).collect();
                h_i0_without_cost(&obs, rho, &block_from_coords(n, has_line, &p))
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            grad_err = grad_err.max((fd - analytic).abs());
        }
        let other_theta: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let other = block_from_coords(n, has_line, &other_theta);
        let c1 = h_i0_without_cost(&obs, rho, &x) - square(&x);
        let c2 = h_i0_without_cost(&obs, rho, &other) - square(&other);
        offset_err = offset_err.max((c1 - c2).abs());
    }
    let covered = seen.iter().flatten().all(|s| *s);
    Verdict {
        pass: grad_err <= 1e-6 && offset_err <= 1e-8 && covered,
        detail: format!("gradient error {grad_err:.2e}, constant-offset drift {offset_err:.2e}, all (phases, children) combinations covered: {covered}"),
    }
}

fn two_bus_optimality() -> Verdict {
    let start = Instant::now();
    let model = feeder("two_bus.json");
    let out = run(&model, &SolverConfig::default()).unwrap();
    let oracle = brute_force_opf(&model, 1e-3).unwrap();
    let objective = out.solution.objective(&model);
    let rel = (objective - oracle.objective).abs() / oracle.objective.abs();
    let rank = check_rank1(&out.solution, DEFAULT_RANK_THRESHOLD).unwrap();
    let last = out.last().unwrap();
    let elapsed = start.elapsed();
    Verdict {
        pass: out.status == RunStatus::Converged
            && rel <= 1e-3
            && rank.max_ratio <= 1e-2
            && elapsed < Duration::from_secs(30),
        detail: format!(
            "{} after {} iterations (r {:.2e}, s {:.2e}), objective {objective:.6} vs grid {:.6} (rel {rel:.2e}), rank ratio {:.2e}, {:.2}s",
            out.status,
            out.iterations(),
            last.r,
            last.s,
            oracle.objective,
            rank.max_ratio,
            elapsed.as_secs_f64()
        ),
    }
}

fn four_bus_feasibility() -> Verdict {
    let model = feeder("four_bus.json");
    let out = run(&model, &SolverConfig::default()).unwrap();
    let bfm = check_bfm_feasibility(&out.solution, &model, 1e-3).unwrap();
    let (lo, hi) = (0.95f64.powi(2), 1.05f64.powi(2));
    let band = out
        .solution
        .buses
        .iter()
        .flat_map(|b| b.x.v.diag().iter().copied())
        .fold(0.0f64, |m, d| m.max(lo - d).max(d - hi));
    let limits = max_limit_violation(&out.solution, &model).unwrap();
    Verdict {
        pass: out.status == RunStatus::Converged && bfm.passed && band <= 1e-6,
        detail: format!(
            "{} after {} iterations, branch-flow residual {:.2e} (drop) / {:.2e} (balance), band excess {band:.2e}, bus-limit excess {limits:.2e}",
            out.status,
            out.iterations(),
            bfm.max_voltage_drop,
            bfm.max_balance
        ),
    }
}

fn topology_trend() -> Verdict {
    let start = Instant::now();
    let sizes = [5, 10, 15, 20, 25, 30];
    let rows = run_bench(
        &[TopologyKind::Line, TopologyKind::FatTree],
        &sizes,
        &BusTemplate::default(),
        &SolverConfig::default(),
    )
    .unwrap();
    let (line, fat) = rows.split_at(sizes.len());
    let converged = rows.iter().all(|r| r.status == RunStatus::Converged);
    let dominates = line.iter().zip(fat).filter(|(l, _)| l.size >= 10).all(|(l, f)| l.iterations > f.iterations);
    let monotone = line.windows(2).all(|w| w[1].iterations > w[0].iterations);
    let elapsed = start.elapsed();
    let counts = |rs: &[dopf_core::bench::BenchRow]| rs.iter().map(|r| r.iterations.to_string()).collect::<Vec<_>>().join("/");
    Verdict {
        pass: converged && dominates && monotone && elapsed < Duration::from_secs(600),
        detail: format!(
            "line {} vs fat-tree {} iterations at sizes 5..30, all converged: {converged}, {:.1}s",
            counts(line),
            counts(fat),
            elapsed.as_secs_f64()
        ),
    }
}

fn per_iteration_cost() -> Verdict {
    let model = feeder("ieee13_like.json");
    let out = run(&model, &SolverConfig::default()).unwrap();
    let per = out.timing.x_update.as_secs_f64() / (out.iterations() * model.buses.len()) as f64;
    Verdict {
        pass: per <= 1e-3,
        detail: format!(
            "{:.2e} s per bus per x-update over {} iterations ({}), {:.2e} s per iteration overall",
            per,
            out.iterations(),
            out.status,
            out.timing.total.as_secs_f64() / out.iterations() as f64
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("PSD projection optimality", psd_projection),
        ("injection projections vs grid search", injection_projections),
        ("y-update closed form vs KKT solve", y_update_closed_form),
        ("square completion gradient", square_completion),
        ("two-bus end-to-end optimality", two_bus_optimality),
        ("four-bus three-phase feasibility", four_bus_feasibility),
        ("line vs fat-tree iteration trend", topology_trend),
        ("per-bus x-update cost on a 13-bus feeder", per_iteration_cost),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!("criterion {id} {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
