//! Lambert W on arbitrary branches of the complex plane.
//!
//! Branch `k` follows the usual convention: branch cuts on the negative real
//! axis, values on a cut taken as the limit from above (`Im z -> 0+`).
//! Initial guesses come from the branch-point series, a Padé fit of the
//! principal branch near the origin, or the asymptotic expansion
//! `L1 - ln L1` with `L1 = ln z + 2 pi i k`. Refinement is Halley's method on
//! `w e^w - z`.

use std::f64::consts::{E, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

const EXPN1: f64 = 1.0 / E;
const MAX_ITERATIONS: usize = 100;

/// Relative step size at which Halley iteration stops.
pub const DEFAULT_TOL: f64 = 1e-14;

pub fn lambert_w(z: Complex64, branch: i64) -> Result<Complex64> {
    lambert_w_tol(z, branch, DEFAULT_TOL)
}

pub fn lambert_w_tol(z: Complex64, branch: i64, tol: f64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid(format!("Lambert W of non-finite argument {z}")));
    }
    // +0.0 keeps the cut convention when callers hand us -0.0 imaginary parts
    let z = Complex64::new(z.re + 0.0, z.im + 0.0);
    if z.re == 0.0 && z.im == 0.0 {
        return if branch == 0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            Err(Error::BranchNotConverged {
                branch,
                detail: "W_k(0) is -infinity for k != 0".into(),
            })
        };
    }

    let mut w = initial_guess(z, branch);
    for _ in 0..MAX_ITERATIONS {
        let next = halley_step(z, w);
        if !(next.re.is_finite() && next.im.is_finite()) {
            // w == -1 is the double root at z = -1/e; nothing left to refine
            if (w + 1.0).norm() < 1e-7 {
                return Ok(w);
            }
            return Err(Error::BranchNotConverged {
                branch,
                detail: format!("non-finite Halley iterate from {w} for z = {z}"),
            });
        }
        if (next - w).norm() <= tol * next.norm().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        w = next;
    }
    Err(Error::BranchNotConverged {
        branch,
        detail: format!("no convergence after {MAX_ITERATIONS} Halley steps for z = {z}"),
    })
}

fn halley_step(z: Complex64, w: Complex64) -> Complex64 {
    let two = Complex64::new(2.0, 0.0);
    if w.re >= 0.0 {
        // divide through by e^w to keep the exponential bounded
        let ew = (-w).exp();
        let wewz = w - z * ew;
        w - wewz / (w + 1.0 - (w + two) * wewz / (two * w + two))
    } else {
        let ew = w.exp();
        let wew = w * ew;
        let wewz = wew - z;
        w - wewz / (wew + ew - (w + two) * wewz / (two * w + two))
    }
}

fn initial_guess(z: Complex64, branch: i64) -> Complex64 {
    let near_branch_point = (z + EXPN1).norm() < 0.3;
    match branch {
        0 if near_branch_point => {
            let p = branch_point_p(z);
            -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
        }
        0 if z.re > -1.0 && z.re < 1.5 && z.im.abs() < 1.0 && -2.5 * z.im.abs() - 0.2 < z.re => {
            pade0(z)
        }
        -1 if near_branch_point && z.im >= 0.0 => lower_branch_point(z),
        1 if near_branch_point && z.im < 0.0 => lower_branch_point(z),
        k => asymptotic(z, k),
    }
}

fn branch_point_p(z: Complex64) -> Complex64 {
    (2.0 * (E * z + 1.0)).sqrt()
}

fn lower_branch_point(z: Complex64) -> Complex64 {
    let p = branch_point_p(z);
    -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p
}

fn pade0(z: Complex64) -> Complex64 {
    let num = 12.851_063_829_787_234 + z * (12.340_425_531_914_894 + z);
    let den = 32.531_914_893_617_02 + z * (14.340_425_531_914_894 + z);
    z * num / den
}

fn asymptotic(z: Complex64, k: i64) -> Complex64 {
    let l1 = z.ln() + Complex64::new(0.0, 2.0 * PI * k as f64);
    l1 - l1.ln()
}
