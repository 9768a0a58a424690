//! The per-bus y-update: a diagonal quadratic over the real parameters of the
//! variables a bus owns, subject to its branch-flow equalities, solved in
//! closed form `y = (M^-1 A^T (A M^-1 A^T)^-1 A M^-1 - M^-1) c`.

use num_complex::Complex64;

use super::square::ObservationWeights;
use super::{LineVars, XBlock};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::network::{phase_lift, phase_project_hermitian, PhaseSet};

/// Line data seen from one end: the phases and impedance of the line.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkSpec {
    pub phases: PhaseSet,
    pub z: CMatrix,
}

/// Phase and impedance data bus `i` needs for its y-update.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeContext {
    pub phases: PhaseSet,
    /// Phases of the parent bus and the impedance `z_i` of the line to it.
    pub parent: Option<(PhaseSet, CMatrix)>,
    /// Phases and impedance `z_j` of every child line, in topology order.
    pub children: Vec<LinkSpec>,
}

/// Variables bus `i` owns in the y-update: `y_ii = (S, l, v, s)`, its copy of
/// the parent voltage `y_{A_i,i}` (over all parent phases) and its copies
/// `y_{ji} = (S_j, l_j)` of each child's line.
#[derive(Clone, Debug, PartialEq)]
pub struct YLocal {
    pub own: XBlock,
    pub parent_v: Option<HermitianMatrix>,
    pub children: Vec<LineVars>,
}

impl YLocal {
    pub fn dist_sqr(&self, other: &YLocal) -> Result<f64> {
        let mut acc = self.own.dist_sqr(&other.own)?;
        if let (Some(a), Some(b)) = (&self.parent_v, &other.parent_v) {
            acc += a.try_sub(b)?.frobenius_norm_sqr();
        }
        for (a, b) in self.children.iter().zip(&other.children) {
            acc += a.dist_sqr(b);
        }
        Ok(acc)
    }
}

/// Offsets of each variable group inside the real parameter vector.
#[derive(Clone, Debug, PartialEq)]
struct Layout {
    own_power: usize,
    own_current: usize,
    own_v: usize,
    own_s: usize,
    parent_v: usize,
    children: Vec<usize>,
    total: usize,
}

fn push_complex(out: &mut Vec<f64>, m: &CMatrix) {
    for z in m.as_slice() {
        out.push(z.re);
        out.push(z.im);
    }
}

fn read_complex(n: usize, p: &[f64]) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| {
        let k = 2 * (r * n + c);
        Complex64::new(p[k], p[k + 1])
    })
}

impl NodeContext {
    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    fn layout(&self) -> Layout {
        let n = self.dim();
        let line = if self.is_root() { 0 } else { 1 };
        let own_power = 0;
        let own_current = own_power + line * 2 * n * n;
        let own_v = own_current + line * n * n;
        let own_s = own_v + n * n;
        let parent_v = own_s + 2 * n;
        let mut next = parent_v + self.parent.as_ref().map_or(0, |(p, _)| p.len().pow(2));
        let children = self
            .children
            .iter()
            .map(|c| {
                let at = next;
                next += 3 * c.phases.len().pow(2);
                at
            })
            .collect();
        Layout {
            own_power,
            own_current,
            own_v,
            own_s,
            parent_v,
            children,
            total: next,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }

    /// Number of equality rows: `n^2` voltage-drop rows (non-root) plus `2n`
    /// power-balance rows.
    pub fn row_count(&self) -> usize {
        let n = self.dim();
        if self.is_root() {
            2 * n
        } else {
            n * n + 2 * n
        }
    }

    pub fn zeros(&self) -> YLocal {
        YLocal {
            own: XBlock::zeros(self.dim(), !self.is_root()),
            parent_v: self.parent.as_ref().map(|(p, _)| HermitianMatrix::zeros(p.len())),
            children: self.children.iter().map(|c| LineVars::zeros(c.phases.len())).collect(),
        }
    }

    fn check_shape(&self, y: &YLocal) -> Result<()> {
        let n = self.dim();
        let ok = y.own.dim() == n
            && y.own.s.len() == n
            && y.own.line.is_some() != self.is_root()
            && y.own.line.as_ref().map_or(true, |l| l.dim() == n && l.power.shape() == (n, n))
            && y.parent_v.as_ref().map(|v| v.dim()) == self.parent.as_ref().map(|(p, _)| p.len())
            && y.children.len() == self.children.len()
            && y
                .children
                .iter()
                .zip(&self.children)
                .all(|(l, c)| l.dim() == c.phases.len() && l.power.shape() == c.z.shape());
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                op: "y-variables vs bus context",
                left: (self.param_count(), 1),
                right: (n, y.children.len()),
            })
        }
    }

    /// Real parameters of `y` in layout order.
    pub fn to_params(&self, y: &YLocal) -> Result<Vec<f64>> {
        self.check_shape(y)?;
        let mut out = Vec::with_capacity(self.param_count());
        if let Some(l) = &y.own.line {
            push_complex(&mut out, &l.power);
            out.extend_from_slice(l.current.params());
        }
        out.extend_from_slice(y.own.v.params());
        for s in &y.own.s {
            out.push(s.re);
            out.push(s.im);
        }
        if let Some(v) = &y.parent_v {
            out.extend_from_slice(v.params());
        }
        for c in &y.children {
            push_complex(&mut out, &c.power);
            out.extend_from_slice(c.current.params());
        }
        Ok(out)
    }

    pub fn from_params(&self, p: &[f64]) -> Result<YLocal> {
        let lay = self.layout();
        if p.len() != lay.total {
            return Err(Error::ShapeMismatch {
                op: "y parameter vector",
                left: (lay.total, 1),
                right: (p.len(), 1),
            });
        }
        let n = self.dim();
        let line = if self.is_root() {
            None
        } else {
            Some(LineVars {
                power: read_complex(n, &p[lay.own_power..]),
                current: HermitianMatrix::from_params(n, &p[lay.own_current..lay.own_current + n * n])?,
            })
        };
        let v = HermitianMatrix::from_params(n, &p[lay.own_v..lay.own_v + n * n])?;
        let s = (0..n)
            .map(|k| Complex64::new(p[lay.own_s + 2 * k], p[lay.own_s + 2 * k + 1]))
            .collect();
        let parent_v = match &self.parent {
            Some((pp, _)) => {
                let m = pp.len();
                Some(HermitianMatrix::from_params(m, &p[lay.parent_v..lay.parent_v + m * m])?)
            }
            None => None,
        };
        let children = self
            .children
            .iter()
            .zip(&lay.children)
            .map(|(c, &at)| {
                let m = c.phases.len();
                Ok(LineVars {
                    power: read_complex(m, &p[at..]),
                    current: HermitianMatrix::from_params(m, &p[at + 2 * m * m..at + 3 * m * m])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(YLocal {
            own: XBlock { v, s, line },
            parent_v,
            children,
        })
    }

    /// Frobenius weight of every real parameter (2 for Hermitian off-diagonals).
    pub fn multiplicity(&self) -> Vec<f64> {
        let lay = self.layout();
        let mut m = vec![1.0; lay.total];
        let mut herm = |at: usize, n: usize| {
            for k in n..n * n {
                m[at + k] = 2.0;
            }
        };
        let n = self.dim();
        if !self.is_root() {
            herm(lay.own_current, n);
        }
        herm(lay.own_v, n);
        if let Some((pp, _)) = &self.parent {
            herm(lay.parent_v, pp.len());
        }
        for (c, &at) in self.children.iter().zip(&lay.children) {
            let k = c.phases.len();
            herm(at + 2 * k * k, k);
        }
        m
    }

    /// Branch-flow residual rows of `y`:
    /// voltage drop `P_i(v_parent) - v + z S^H + S z^H - z l z^H` (Hermitian, `n^2` rows)
    /// followed by power balance `s + diag(sum_j lift(S_j - z_j l_j) - S)` (`2n` rows).
    pub fn residual(&self, y: &YLocal) -> Result<Vec<f64>> {
        self.check_shape(y)?;
        let n = self.dim();
        let mut rows = Vec::with_capacity(self.row_count());
        if let (Some((pp, z)), Some(line), Some(pv)) = (&self.parent, &y.own.line, &y.parent_v) {
            let projected = phase_project_hermitian(pv, *pp, self.phases)?.to_dense();
            let zsh = z.try_mul(&line.power.adjoint())?;
            let zlz = z.try_mul(&line.current.to_dense())?.try_mul(&z.adjoint())?;
            let e = projected
                .try_sub(&y.own.v.to_dense())?
                .try_add(&zsh)?
                .try_add(&zsh.adjoint())?
                .try_sub(&zlz)?;
            rows.extend_from_slice(HermitianMatrix::hermitian_part(&e)?.params());
        }
        let mut acc = CMatrix::zeros(n, n);
        for (c, l) in self.children.iter().zip(&y.children) {
            let arriving = l.power.try_sub(&c.z.try_mul(&l.current.to_dense())?)?;
            acc = acc.try_add(&phase_lift(&arriving, c.phases, self.phases)?)?;
        }
        if let Some(line) = &y.own.line {
            acc = acc.try_sub(&line.power)?;
        }
        for (k, s) in y.own.s.iter().enumerate() {
            let r = s + acc[(k, k)];
            rows.push(r.re);
            rows.push(r.im);
        }
        Ok(rows)
    }

    /// Constraint matrix, row-major, built column by column from the linear residual map.
    pub fn constraint_matrix(&self) -> Result<Vec<f64>> {
        let cols = self.param_count();
        let rows = self.row_count();
        let mut a = vec![0.0; rows * cols];
        let mut unit = vec![0.0; cols];
        for k in 0..cols {
            unit[k] = 1.0;
            let col = self.residual(&self.from_params(&unit)?)?;
            unit[k] = 0.0;
            for (r, v) in col.into_iter().enumerate() {
                a[r * cols + k] = v;
            }
        }
        Ok(a)
    }

    /// Penalty weight of each `(x, y)` pair owned here, per real parameter
    /// (the `x_{i1}` pair on `v_ii` is not included).
    pub fn pair_weights(&self) -> Vec<f64> {
        let lay = self.layout();
        let w = ObservationWeights::for_children(self.children.len());
        let n = self.dim();
        let mut k = vec![0.0; lay.total];
        k[lay.own_power..lay.own_current].fill(w.own_power);
        k[lay.own_current..lay.own_v].fill(w.own_current);
        k[lay.own_v..lay.own_v + n * n].fill(w.own_voltage);
        k[lay.own_s..lay.own_s + 2 * n].fill(w.own_injection);
        // the parent's voltage is one of its children's observations
        k[lay.parent_v..].fill(w.child_voltage);
        for &at in &lay.children {
            let end = lay.children.iter().find(|&&b| b > at).copied().unwrap_or(lay.total);
            k[at..end].fill(w.parent_line);
        }
        k
    }

    /// Total quadratic weight per parameter: the pair weights plus the unit
    /// weight of the voltage copy `x_{i1}` on `v_ii`.
    fn kappa(&self) -> Vec<f64> {
        let lay = self.layout();
        let n = self.dim();
        let mut k = self.pair_weights();
        for w in &mut k[lay.own_v..lay.own_v + n * n] {
            *w += 1.0;
        }
        k
    }
}

/// Neighbor `x` values entering bus `i`'s y-update.
#[derive(Clone, Debug)]
pub struct YTargets<'a> {
    /// `x_{i0}`.
    pub own: &'a XBlock,
    /// `x_{i1}`.
    pub voltage_copy: &'a HermitianMatrix,
    /// `v` of `x_{A_i,0}`.
    pub parent_v: Option<&'a HermitianMatrix>,
    /// `(S, l)` of `x_{j0}` for each child.
    pub children: Vec<&'a LineVars>,
}

/// `min 1/2 y^T diag(m) y + c^T y  s.t.  A y = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols`.
    pub a: Vec<f64>,
    pub m: Vec<f64>,
    pub c: Vec<f64>,
}

fn linear_term(
    ctx: &NodeContext,
    targets: &YTargets<'_>,
    duals: &YLocal,
    lambda1: &HermitianMatrix,
    rho: f64,
) -> Result<Vec<f64>> {
    let lay = ctx.layout();
    let x = YLocal {
        own: targets.own.clone(),
        parent_v: targets.parent_v.copied(),
        children: targets.children.iter().map(|l| (*l).clone()).collect(),
    };
    if x.parent_v.is_none() != ctx.is_root() {
        return Err(Error::MissingObservation("parent voltage for the y-update".into()));
    }
    let xp = ctx.to_params(&x)?;
    let mu = ctx.to_params(duals)?;
    let mult = ctx.multiplicity();
    let kappa = ctx.pair_weights();
    let n = ctx.dim();
    let mut c: Vec<f64> = (0..lay.total)
        .map(|k| -mult[k] * (rho * kappa[k] * xp[k] + mu[k]))
        .collect();
    if targets.voltage_copy.dim() != n || lambda1.dim() != n {
        return Err(Error::ShapeMismatch {
            op: "voltage copy",
            left: (n, n),
            right: (targets.voltage_copy.dim(), lambda1.dim()),
        });
    }
    for k in 0..n * n {
        let at = lay.own_v + k;
        c[at] -= mult[at] * (rho * targets.voltage_copy.params()[k] + lambda1.params()[k]);
    }
    Ok(c)
}

/// Assembles bus `i`'s y-update system from its context, neighbor `x` values
/// and the multipliers it owns.
pub fn build_constraint_system(
    ctx: &NodeContext,
    targets: &YTargets<'_>,
    duals: &YLocal,
    lambda1: &HermitianMatrix,
    rho: f64,
) -> Result<ConstraintSystem> {
    let a = ctx.constraint_matrix()?;
    let mult = ctx.multiplicity();
    let m = ctx.kappa().iter().zip(&mult).map(|(k, w)| rho * k * w).collect();
    let c = linear_term(ctx, targets, duals, lambda1, rho)?;
    Ok(ConstraintSystem {
        rows: ctx.row_count(),
        cols: ctx.param_count(),
        a,
        m,
        c,
    })
}

/// Cholesky factor of `A M^-1 A^T` with the data needed to reuse it.
#[derive(Clone, Debug)]
pub struct FactoredSystem {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    m_inv: Vec<f64>,
    /// Lower-triangular factor, row-major `rows x rows`.
    chol: Vec<f64>,
}

impl FactoredSystem {
    pub fn new(rows: usize, cols: usize, a: Vec<f64>, m: &[f64]) -> Result<Self> {
        if a.len() != rows * cols || m.len() != cols {
            return Err(Error::ShapeMismatch {
                op: "constraint system",
                left: (rows, cols),
                right: (a.len(), m.len()),
            });
        }
        if let Some(bad) = m.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::Unsupported(format!("quadratic weight {bad} is not positive")));
        }
        let m_inv: Vec<f64> = m.iter().map(|w| 1.0 / w).collect();
        let mut k = vec![0.0; rows * rows];
        for r in 0..rows {
            for s in 0..=r {
                let v: f64 = (0..cols)
                    .map(|j| a[r * cols + j] * m_inv[j] * a[s * cols + j])
                    .sum();
                k[r * rows + s] = v;
                k[s * rows + r] = v;
            }
        }
        let scale = (0..rows).map(|r| k[r * rows + r]).fold(0.0, f64::max);
        let mut l = vec![0.0; rows * rows];
        for r in 0..rows {
            for s in 0..=r {
                let mut v = k[r * rows + s];
                for t in 0..s {
                    v -= l[r * rows + t] * l[s * rows + t];
                }
                if r == s {
                    if v <= 1e-12 * scale || scale == 0.0 {
                        return Err(Error::RankDeficient(format!(
                            "pivot {r} of A M^-1 A^T is {v:e}"
                        )));
                    }
                    l[r * rows + r] = v.sqrt();
                } else {
                    l[r * rows + s] = v / l[s * rows + s];
                }
            }
        }
        Ok(FactoredSystem {
            rows,
            cols,
            a,
            m_inv,
            chol: l,
        })
    }

    /// `y = M^-1 (A^T w - c)` with `(A M^-1 A^T) w = A M^-1 c`.
    pub fn solve(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.cols {
            return Err(Error::ShapeMismatch {
                op: "linear term",
                left: (self.cols, 1),
                right: (c.len(), 1),
            });
        }
        let (rows, cols) = (self.rows, self.cols);
        let mc: Vec<f64> = c.iter().zip(&self.m_inv).map(|(c, m)| c * m).collect();
        let mut w: Vec<f64> = (0..rows)
            .map(|r| (0..cols).map(|j| self.a[r * cols + j] * mc[j]).sum())
            .collect();
        for r in 0..rows {
            let mut v = w[r];
            for t in 0..r {
                v -= self.chol[r * rows + t] * w[t];
            }
            w[r] = v / self.chol[r * rows + r];
        }
        for r in (0..rows).rev() {
            let mut v = w[r];
            for t in (r + 1)..rows {
                v -= self.chol[t * rows + r] * w[t];
            }
            w[r] = v / self.chol[r * rows + r];
        }
        Ok((0..cols)
            .map(|j| {
                let atw: f64 = (0..rows).map(|r| self.a[r * cols + j] * w[r]).sum();
                self.m_inv[j] * (atw - c[j])
            })
            .collect())
    }
}

/// Closed-form minimizer of a [`ConstraintSystem`].
pub fn solve_equality_qp(sys: &ConstraintSystem) -> Result<Vec<f64>> {
    FactoredSystem::new(sys.rows, sys.cols, sys.a.clone(), &sys.m)?.solve(&sys.c)
}

pub fn solve_y_node(ctx: &NodeContext, sys: &ConstraintSystem) -> Result<YLocal> {
    ctx.from_params(&solve_equality_qp(sys)?)
}

/// Bus y-update with the constraint factorization cached for a fixed `rho`.
#[derive(Clone, Debug)]
pub struct YNodeSolver {
    ctx: NodeContext,
    rho: f64,
    factored: FactoredSystem,
}

impl YNodeSolver {
    pub fn new(ctx: NodeContext, rho: f64) -> Result<Self> {
        let a = ctx.constraint_matrix()?;
        let m: Vec<f64> = ctx
            .kappa()
            .iter()
            .zip(ctx.multiplicity())
            .map(|(k, w)| rho * k * w)
            .collect();
        let factored = FactoredSystem::new(ctx.row_count(), ctx.param_count(), a, &m)?;
        Ok(YNodeSolver { ctx, rho, factored })
    }

    pub fn context(&self) -> &NodeContext {
        &self.ctx
    }

    pub fn solve(
        &self,
        targets: &YTargets<'_>,
        duals: &YLocal,
        lambda1: &HermitianMatrix,
    ) -> Result<YLocal> {
        let c = linear_term(&self.ctx, targets, duals, lambda1, self.rho)?;
        self.ctx.from_params(&self.factored.solve(&c)?)
    }
}
