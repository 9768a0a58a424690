//! Closed-form proximal steps for a single phase's injection
//! `min a1/2 p^2 + b1 p + a2/2 q^2 + b2 q` over a box or an inverter half-disk.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::{InjectionRegion, ObjectiveCoeffs};

fn check_curvature(a1: f64, a2: f64) -> Result<()> {
    if a1 > 0.0 && a2 > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveCurvature { a1, a2 })
    }
}

fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// Minimizer of the separable quadratic over `[p_lo, p_hi] x [q_lo, q_hi]`.
pub fn project_injection_box(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    p_lo: f64,
    p_hi: f64,
    q_lo: f64,
    q_hi: f64,
) -> Result<(f64, f64)> {
    check_curvature(a1, a2)?;
    for (lo, hi) in [(p_lo, p_hi), (q_lo, q_hi)] {
        if !(lo <= hi) {
            return Err(Error::InvalidBounds { lo, hi });
        }
    }
    Ok((clamp(-b1 / a1, p_lo, p_hi), clamp(-b2 / a2, q_lo, q_hi)))
}

/// Which KKT regime of the half-disk problem applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiskCase {
    /// `b1 >= 0`: the `p >= 0` bound is active.
    ZeroReal,
    /// Unconstrained minimizer lies inside the disk.
    Interior,
    /// Disk boundary active with a positive multiplier.
    Boundary,
}

pub fn disk_case(a1: f64, b1: f64, a2: f64, b2: f64, c: f64) -> DiskCase {
    if b1 >= 0.0 {
        DiskCase::ZeroReal
    } else {
        let (p, q) = (b1 / a1, b2 / a2);
        if p * p + q * q <= c * c {
            DiskCase::Interior
        } else {
            DiskCase::Boundary
        }
    }
}

/// Minimizer over `{p >= 0, p^2 + q^2 <= c^2}`.
pub fn project_injection_disk(a1: f64, b1: f64, a2: f64, b2: f64, c: f64) -> Result<(f64, f64)> {
    check_curvature(a1, a2)?;
    if !(c > 0.0) {
        return Err(Error::NonPositiveRadius(c));
    }
    Ok(match disk_case(a1, b1, a2, b2, c) {
        DiskCase::ZeroReal => (0.0, clamp(-b2 / a2, -c, c)),
        DiskCase::Interior => (-b1 / a1, -b2 / a2),
        DiskCase::Boundary => {
            let lambda = solve_disk_multiplier(a1, b1, a2, b2, c)?;
            onto_disk(-b1 / (a1 + 2.0 * lambda), -b2 / (a2 + 2.0 * lambda), c)
        }
    })
}

/// Pulls a point that round-off left just outside the disk back onto it.
fn onto_disk(p: f64, q: f64, c: f64) -> (f64, f64) {
    let r = p.hypot(q);
    if r <= c {
        return (p, q);
    }
    let mut k = c / r;
    while (k * p).hypot(k * q) > c {
        k *= 1.0 - f64::EPSILON;
    }
    (k * p, k * q)
}

/// `g(lambda) = b1^2/(a1+2 lambda)^2 + b2^2/(a2+2 lambda)^2 - c^2`.
pub fn disk_residual(a1: f64, b1: f64, a2: f64, b2: f64, c: f64, lambda: f64) -> f64 {
    let d1 = a1 + 2.0 * lambda;
    let d2 = a2 + 2.0 * lambda;
    (b1 * b1) / (d1 * d1) + (b2 * b2) / (d2 * d2) - c * c
}

/// Unique positive root of the disk multiplier equation.
///
/// `g` is convex and strictly decreasing on `lambda >= 0`, so Newton from the
/// left never overshoots; bisection on the bracket guards against round-off.
pub fn solve_disk_multiplier(a1: f64, b1: f64, a2: f64, b2: f64, c: f64) -> Result<f64> {
    check_curvature(a1, a2)?;
    if !(c > 0.0) {
        return Err(Error::NonPositiveRadius(c));
    }
    let g = |l: f64| disk_residual(a1, b1, a2, b2, c, l);
    let g0 = g(0.0);
    if !(g0 > 0.0) {
        return Err(Error::Bracketing(format!(
            "unconstrained minimizer is inside the disk (g(0) = {g0:e})"
        )));
    }
    let bnorm = b1.hypot(b2);
    let mut lo = 0.0f64;
    // analytically g(hi) <= 0; widen if round-off says otherwise
    let mut hi = (0.5 * (bnorm / c - a1.min(a2))).max(0.0);
    for _ in 0..64 {
        if g(hi) <= 0.0 {
            break;
        }
        hi = 2.0 * hi + f64::MIN_POSITIVE;
    }
    if !(g(hi) <= 0.0) {
        return Err(Error::Bracketing(format!("g({hi:e}) = {:e} > 0", g(hi))));
    }

    let dg = |l: f64| {
        let d1 = a1 + 2.0 * l;
        let d2 = a2 + 2.0 * l;
        -4.0 * (b1 * b1) / (d1 * d1 * d1) - 4.0 * (b2 * b2) / (d2 * d2 * d2)
    };
    let tol = 1e-14 * (c * c).max(1e-300);
    let mut x = lo;
    for _ in 0..200 {
        let gx = g(x);
        if gx.abs() <= tol {
            return Ok(x);
        }
        if gx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - gx / dg(x);
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.max(1e-300) {
            break;
        }
    }
    Ok(x)
}

/// Proximal step of one phase: `min f(p) + rho/2 |s - s_hat|^2` over the region.
pub fn prox_injection(
    region: &InjectionRegion,
    cost: &ObjectiveCoeffs,
    rho: f64,
    s_hat: Complex64,
) -> Result<Complex64> {
    let a1 = cost.alpha + rho;
    let b1 = cost.beta - rho * s_hat.re;
    let a2 = rho;
    let b2 = -rho * s_hat.im;
    let (p, q) = match *region {
        InjectionRegion::Box {
            p_lo,
            p_hi,
            q_lo,
            q_hi,
        } => project_injection_box(a1, b1, a2, b2, p_lo, p_hi, q_lo, q_hi)?,
        InjectionRegion::Disk { s_max } if s_max == 0.0 => (0.0, 0.0),
        InjectionRegion::Disk { s_max } => project_injection_disk(a1, b1, a2, b2, s_max)?,
    };
    Ok(Complex64::new(p, q))
}
