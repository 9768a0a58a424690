//! Oracles shared by the integration suites. Each one re-derives its quantity
//! from dense complex matrices instead of the library's parameter layouts.

#![allow(dead_code)]

use dopf_core::linalg::{CMatrix, HermitianMatrix};
use dopf_core::network::{BusSpec, InjectionRegion, ObjectiveCoeffs, PhaseSet};
use dopf_core::subproblem::{ConstraintSystem, LineVars, NodeContext, X0Observations, XBlock, YLocal, YTargets};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type Dense = DMatrix<Complex64>;

pub fn dense(m: &CMatrix) -> Dense {
    Dense::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

pub fn dense_h(h: &HermitianMatrix) -> Dense {
    dense(&h.to_dense())
}

pub fn from_dense(m: &Dense) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

/// `Re tr(a^H b)`.
pub fn inner(a: &Dense, b: &Dense) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn inner_vec(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn norm_sqr(a: &Dense) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = dense_h(h).symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> HermitianMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
    });
    HermitianMatrix::hermitian_part(&m).unwrap()
}

pub fn random_cmatrix(rng: &mut impl Rng, r: usize, c: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| {
        Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
    })
}

/// `G G^H` for a random `n x rank` factor.
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize, scale: f64) -> HermitianMatrix {
    let g = dense(&random_cmatrix(rng, n, rank, scale));
    HermitianMatrix::hermitian_part(&from_dense(&(&g * g.adjoint()))).unwrap()
}

pub fn random_phases(rng: &mut impl Rng) -> PhaseSet {
    const SETS: [&str; 7] = ["a", "b", "c", "ab", "bc", "ac", "abc"];
    SETS[rng.gen_range(0..SETS.len())].parse().unwrap()
}

pub fn random_subset(rng: &mut impl Rng, of: PhaseSet) -> PhaseSet {
    loop {
        let p = random_phases(rng);
        if p.is_subset_of(of) {
            return p;
        }
    }
}

pub fn random_impedance(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| {
        let k = if r == c { 1.0 } else { 0.3 };
        Complex64::new(k * rng.gen_range(0.002..0.02), k * rng.gen_range(0.004..0.04))
    })
}

/// Indices of `sub`'s phases inside `sup`.
pub fn positions(sub: PhaseSet, sup: PhaseSet) -> Vec<usize> {
    sub.iter().map(|p| sup.iter().position(|q| q == p).unwrap()).collect()
}

/// Real and imaginary parts of every entry of the voltage-drop and
/// power-balance equations at one bus.
pub fn bfm_rows(ctx: &NodeContext, y: &YLocal) -> Vec<f64> {
    let n = ctx.phases.len();
    let mut rows = Vec::new();
    if let (Some((pp, z)), Some(line), Some(pv)) = (&ctx.parent, &y.own.line, &y.parent_v) {
        let idx = positions(ctx.phases, *pp);
        let pv = dense_h(pv);
        let projected = Dense::from_fn(n, n, |r, c| pv[(idx[r], idx[c])]);
        let z = dense(z);
        let s = dense(&line.power);
        let l = dense_h(&line.current);
        let e = projected - dense_h(&y.own.v) + &z * s.adjoint() + &s * z.adjoint() - &z * l * z.adjoint();
        for v in e.iter() {
            rows.push(v.re);
            rows.push(v.im);
        }
    }
    let mut acc = Dense::zeros(n, n);
    for (c, l) in ctx.children.iter().zip(&y.children) {
        let idx = positions(c.phases, ctx.phases);
        let arriving = dense(&l.power) - dense(&c.z) * dense_h(&l.current);
        for (a, &ra) in idx.iter().enumerate() {
            for (b, &rb) in idx.iter().enumerate() {
                acc[(ra, rb)] += arriving[(a, b)];
            }
        }
    }
    if let Some(line) = &y.own.line {
        acc -= dense(&line.power);
    }
    for k in 0..n {
        let r = y.own.s[k] + acc[(k, k)];
        rows.push(r.re);
        rows.push(r.im);
    }
    rows
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Random node context: a bus on `phases` with an optional parent and up to
/// `max_children` children on phase subsets.
pub fn random_context(rng: &mut impl Rng, phases: PhaseSet, has_parent: bool, children: usize) -> NodeContext {
    NodeContext {
        phases,
        parent: has_parent.then(|| {
            let pp = loop {
                let p = random_phases(rng);
                if phases.is_subset_of(p) {
                    break p;
                }
            };
            (pp, random_impedance(rng, phases.len()))
        }),
        children: (0..children)
            .map(|_| {
                let p = random_subset(rng, phases);
                dopf_core::subproblem::LinkSpec {
                    phases: p,
                    z: random_impedance(rng, p.len()),
                }
            })
            .collect(),
    }
}

pub fn random_local(ctx: &NodeContext, rng: &mut impl Rng, scale: f64) -> YLocal {
    let p: Vec<f64> = (0..ctx.param_count()).map(|_| rng.gen_range(-scale..scale)).collect();
    ctx.from_params(&p).unwrap()
}

/// Dense KKT solve of `[[M, A^T], [A, 0]] [y; nu] = [-c; 0]`.
pub fn kkt_solve(sys: &ConstraintSystem) -> Vec<f64> {
    let (r, n) = (sys.rows, sys.cols);
    let mut k = DMatrix::<f64>::zeros(n + r, n + r);
    let mut rhs = DVector::<f64>::zeros(n + r);
    for j in 0..n {
        k[(j, j)] = sys.m[j];
        rhs[j] = -sys.c[j];
    }
    for i in 0..r {
        for j in 0..n {
            k[(n + i, j)] = sys.a[i * n + j];
            k[(j, n + i)] = sys.a[i * n + j];
        }
    }
    let sol = k.lu().solve(&rhs).expect("KKT matrix is nonsingular");
    sol.iter().take(n).copied().collect()
}

/// Basis of the null space of the branch-flow map in parameter coordinates,
/// from the Jacobian of [`bfm_rows`] (the map is linear).
pub fn bfm_null_space(ctx: &NodeContext) -> Vec<Vec<f64>> {
    let n = ctx.param_count();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            bfm_rows(ctx, &ctx.from_params(&e).unwrap())
        })
        .collect();
    let m = cols[0].len();
    let j = DMatrix::<f64>::from_fn(m, n, |r, c| cols[c][r]);
    let eig = (j.transpose() * &j).symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    (0..n)
        .filter(|&k| eig.eigenvalues[k].abs() <= 1e-12 * top)
        .map(|k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect()
}

/// Augmented-Lagrangian terms of one bus's y-update evaluated directly:
/// `sum <mu, x - y> + rho*w/2 ||x - y||^2` over every consensus pair it owns.
pub fn y_objective(
    ctx: &NodeContext,
    targets: &YTargets<'_>,
    duals: &YLocal,
    lambda1: &HermitianMatrix,
    rho: f64,
    y: &YLocal,
) -> f64 {
    let k = ctx.children.len() as f64;
    let term = |w: f64, mu: &Dense, x: &Dense, y: &Dense| {
        let d = x - y;
        inner(mu, &d) + 0.5 * rho * w * norm_sqr(&d)
    };
    let mut acc = 0.0;
    let own = targets.own;
    acc += term(2.0, &dense_h(&duals.own.v), &dense_h(&own.v), &dense_h(&y.own.v));
    acc += term(1.0, &dense_h(lambda1), &dense_h(targets.voltage_copy), &dense_h(&y.own.v));
    let ds: Vec<Complex64> = own.s.iter().zip(&y.own.s).map(|(a, b)| a - b).collect();
    acc += inner_vec(&duals.own.s, &ds) + 0.5 * rho * inner_vec(&ds, &ds);
    if let (Some(x), Some(yl), Some(mu)) = (&own.line, &y.own.line, &duals.own.line) {
        acc += term(2.0 * k + 3.0, &dense(&mu.power), &dense(&x.power), &dense(&yl.power));
        acc += term(k + 1.0, &dense_h(&mu.current), &dense_h(&x.current), &dense_h(&yl.current));
    }
    if let (Some(x), Some(yv), Some(mu)) = (targets.parent_v, &y.parent_v, &duals.parent_v) {
        acc += term(1.0, &dense_h(mu), &dense_h(x), &dense_h(yv));
    }
    for ((x, yl), mu) in targets.children.iter().zip(&y.children).zip(&duals.children) {
        acc += term(1.0, &dense(&mu.power), &dense(&x.power), &dense(&yl.power));
        acc += term(1.0, &dense_h(&mu.current), &dense_h(&x.current), &dense_h(&yl.current));
    }
    acc
}

/// `H_i0 - f_i` evaluated term by term from the observations of `x_{i0}`.
pub fn h_i0_without_cost(obs: &X0Observations<'_>, rho: f64, x: &XBlock) -> f64 {
    let k = obs.children.len() as f64;
    let term = |w: f64, mu: &Dense, y: &Dense, x: &Dense| {
        let d = x - y;
        inner(mu, &d) + 0.5 * rho * w * norm_sqr(&d)
    };
    let own = obs.own.value;
    let dual = obs.own.dual;
    let mut acc = term(2.0, &dense_h(&dual.v), &dense_h(&own.v), &dense_h(&x.v));
    let ds: Vec<Complex64> = x.s.iter().zip(&own.s).map(|(a, b)| a - b).collect();
    acc += inner_vec(&dual.s, &ds) + 0.5 * rho * inner_vec(&ds, &ds);
    if let (Some(xl), Some(yl), Some(mu)) = (&x.line, &own.line, &dual.line) {
        acc += term(2.0 * k + 3.0, &dense(&mu.power), &dense(&yl.power), &dense(&xl.power));
        acc += term(k + 1.0, &dense_h(&mu.current), &dense_h(&yl.current), &dense_h(&xl.current));
        let parent = obs.parent.as_ref().expect("bus with a line has a parent copy");
        acc += term(1.0, &dense(&parent.dual.power), &dense(&parent.value.power), &dense(&xl.power));
        acc += term(1.0, &dense_h(&parent.dual.current), &dense_h(&parent.value.current), &dense_h(&xl.current));
    }
    for c in &obs.children {
        acc += term(1.0, &dense_h(c.dual), &dense_h(c.value), &dense_h(&x.v));
    }
    acc
}

pub fn cost(bus: &BusSpec, x: &XBlock) -> f64 {
    bus.cost.iter().zip(&x.s).map(|(c, s)| c.eval(s.re)).sum()
}

pub fn h_i0(bus: &BusSpec, obs: &X0Observations<'_>, rho: f64, x: &XBlock) -> f64 {
    cost(bus, x) + h_i0_without_cost(obs, rho, x)
}

/// `[[v, S], [S^H, l]]` of a block, or `v` alone at the root.
pub fn block(x: &XBlock) -> Dense {
    let v = dense_h(&x.v);
    match &x.line {
        None => v,
        Some(LineVars { power, current }) => {
            let n = v.nrows();
            let s = dense(power);
            let l = dense_h(current);
            Dense::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
                (true, true) => v[(r, c)],
                (true, false) => s[(r, c - n)],
                (false, true) => s[(c, r - n)].conj(),
                (false, false) => l[(r - n, c - n)],
            })
        }
    }
}

/// Objective of one phase's injection step, `f(p) + rho/2 |s - s_hat|^2`.
pub fn injection_objective(cost: &ObjectiveCoeffs, rho: f64, s_hat: Complex64, p: f64, q: f64) -> f64 {
    cost.eval(p) + 0.5 * rho * (Complex64::new(p, q) - s_hat).norm_sqr()
}

/// Minimum of `f` over a bounded injection region by a grid search that is
/// refined around the incumbent.
pub fn grid_minimum(region: &InjectionRegion, f: impl Fn(f64, f64) -> f64) -> f64 {
    const N: usize = 80;
    match *region {
        InjectionRegion::Box {
            p_lo,
            p_hi,
            q_lo,
            q_hi,
        } => {
            let (mut plo, mut phi, mut qlo, mut qhi) = (p_lo, p_hi, q_lo, q_hi);
            let mut best = (f64::INFINITY, p_lo, q_lo);
            for _ in 0..8 {
                for i in 0..=N {
                    let p = plo + (phi - plo) * i as f64 / N as f64;
                    for j in 0..=N {
                        let q = qlo + (qhi - qlo) * j as f64 / N as f64;
                        let v = f(p, q);
                        if v < best.0 {
                            best = (v, p, q);
                        }
                    }
                }
                let (dp, dq) = (2.0 * (phi - plo) / N as f64, 2.0 * (qhi - qlo) / N as f64);
                plo = (best.1 - dp).max(p_lo);
                phi = (best.1 + dp).min(p_hi);
                qlo = (best.2 - dq).max(q_lo);
                qhi = (best.2 + dq).min(q_hi);
            }
            best.0
        }
        InjectionRegion::Disk { s_max } => {
            let half = std::f64::consts::FRAC_PI_2;
            let (mut rlo, mut rhi, mut tlo, mut thi) = (0.0, s_max, -half, half);
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for _ in 0..8 {
                for i in 0..=N {
                    let r = rlo + (rhi - rlo) * i as f64 / N as f64;
                    for j in 0..=N {
                        let t = tlo + (thi - tlo) * j as f64 / N as f64;
                        let v = f(r * t.cos(), r * t.sin());
                        if v < best.0 {
                            best = (v, r, t);
                        }
                    }
                }
                let (dr, dt) = (2.0 * (rhi - rlo) / N as f64, 2.0 * (thi - tlo) / N as f64);
                rlo = (best.1 - dr).max(0.0);
                rhi = (best.1 + dr).min(s_max);
                tlo = (best.2 - dt).max(-half);
                thi = (best.2 + dt).min(half);
            }
            best.0
        }
    }
}
