//! The characteristic function `P(s) = s - lambda e^{-s tau}` of a single
//! delayed mode: region membership, critical delay, imaginary-axis crossings
//! and characteristic roots.
//!
//! Roots solve `s tau e^{s tau} = lambda tau`, so `s = W_k(lambda tau) / tau`
//! over Lambert W branches `k`. Every root is polished by Newton iteration on
//! `P` itself. The right half-plane is additionally inspected with an
//! argument-principle count so that a root escaping the branch sweep is
//! detected rather than silently ignored.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambert;

/// Default number of Lambert W branches on each side of the principal one.
pub const DEFAULT_BRANCHES: u32 = 16;
/// Residual tolerance, relative to `1 + |s|`, accepted for a characteristic root.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
/// Half-width of the band around `|lambda| tau = |Arg lambda| - pi/2` that is
/// reported as critical instead of as a member.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Base number of contour samples for the argument principle.
pub const CONTOUR_SAMPLES: usize = 4096;

const NEWTON_MAX_ITER: usize = 30;
const CONTOUR_MAX_DEPTH: u32 = 40;
const MAX_PHASE_STEP: f64 = PI / 4.0;

/// Principal argument in `(-pi, pi]`; a negative real number has argument `pi`
/// regardless of the sign of its zero imaginary part.
pub fn principal_arg(z: Complex64) -> f64 {
    if z.im == 0.0 && z.re < 0.0 {
        PI
    } else {
        z.im.atan2(z.re)
    }
}

/// Eigenvalue and delay of one mode, `lambda` in the open left half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    lambda: Complex64,
    tau: f64,
}

/// Position of a mode relative to `Lambda_tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Member,
    /// On the boundary within [`BOUNDARY_TOL`]; not a member.
    Critical,
    Outside,
}

impl ModeParams {
    pub fn new(lambda: Complex64, tau: f64) -> Result<Self> {
        check_left_half_plane(lambda)?;
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("delay must be finite and positive, got {tau}")));
        }
        // normalise signed zeros so that Arg and the Lambert W cut agree
        let lambda = Complex64::new(lambda.re + 0.0, lambda.im + 0.0);
        Ok(Self { lambda, tau })
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn conj(&self) -> Self {
        Self::new(self.lambda.conj(), self.tau).expect("conjugate of a valid mode is valid")
    }

    pub fn arg(&self) -> f64 {
        principal_arg(self.lambda)
    }

    /// `|Arg lambda| - pi/2`, in `(0, pi/2]` for `Re lambda < 0`.
    pub fn epsilon_lambda(&self) -> f64 {
        self.arg().abs() - FRAC_PI_2
    }

    /// `(|Arg lambda| - pi/2) - |lambda| tau`; positive inside `Lambda_tau`.
    pub fn boundary_gap(&self) -> f64 {
        self.epsilon_lambda() - self.lambda.norm() * self.tau
    }

    pub fn region(&self) -> Region {
        let gap = self.boundary_gap();
        if gap.abs() <= BOUNDARY_TOL {
            Region::Critical
        } else if gap > 0.0 {
            Region::Member
        } else {
            Region::Outside
        }
    }

    pub fn charfun(&self, s: Complex64) -> Complex64 {
        s - self.lambda * (-s * self.tau).exp()
    }

    pub fn charfun_derivative(&self, s: Complex64) -> Complex64 {
        1.0 + self.lambda * self.tau * (-s * self.tau).exp()
    }
}

fn check_left_half_plane(lambda: Complex64) -> Result<()> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::invalid(format!("eigenvalue must be finite, got {lambda}")));
    }
    if lambda.re >= 0.0 {
        return Err(Error::invalid(format!("eigenvalue must satisfy Re < 0, got {lambda}")));
    }
    Ok(())
}

/// `P(s) = s - lambda e^{-s tau}`.
pub fn eval_charfun(mode: &ModeParams, s: Complex64) -> Complex64 {
    mode.charfun(s)
}

/// Strict membership in `Lambda_tau`: `|lambda| tau < |Arg lambda| - pi/2`.
/// Points within [`BOUNDARY_TOL`] of the boundary are not members.
pub fn in_lambda_region(mode: &ModeParams) -> bool {
    mode.region() == Region::Member
}

/// Largest delay keeping the mode stable: `(|Arg lambda| - pi/2) / |lambda|`.
pub fn critical_delay(lambda: Complex64) -> Result<f64> {
    check_left_half_plane(lambda)?;
    Ok((principal_arg(lambda).abs() - FRAC_PI_2) / lambda.norm())
}

/// Frequency at which a root sits on the imaginary axis at the critical delay:
/// `+|lambda|` for `Arg lambda` in `(pi/2, pi]`, `-|lambda|` otherwise.
pub fn crossing_frequency(lambda: Complex64) -> Result<f64> {
    check_left_half_plane(lambda)?;
    let lambda = Complex64::new(lambda.re, lambda.im + 0.0);
    if principal_arg(lambda) > 0.0 {
        Ok(lambda.norm())
    } else {
        Ok(-lambda.norm())
    }
}

/// `Re(ds/dtau)` at `s = i omega`, from `ds/dtau = -s^2 / (1 + s tau)`.
///
/// Accepts `tau = 0` (the undelayed limit); rejects `omega = 0`.
pub fn crossing_direction(tau: f64, omega: f64) -> Result<f64> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::invalid("crossing direction needs a finite nonzero frequency"));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::invalid(format!("delay must be finite and non-negative, got {tau}")));
    }
    let s = Complex64::new(0.0, omega);
    Ok((-(s * s) / (1.0 + s * tau)).re)
}

/// One characteristic root and the Lambert W branch it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharRoot {
    pub s: Complex64,
    pub branch: i64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    /// Sorted by descending real part.
    pub roots: Vec<CharRoot>,
    pub branch_range: u32,
    pub residual_tol: f64,
    /// Argument-principle count of zeros in the right half-plane rectangle.
    pub verified_count: Option<u32>,
}

impl RootSet {
    pub fn values(&self) -> Vec<Complex64> {
        self.roots.iter().map(|r| r.s).collect()
    }

    pub fn rightmost(&self) -> Option<&CharRoot> {
        self.roots.first()
    }
}

/// Characteristic roots from Lambert W branches `-k..=k`.
pub fn char_roots(mode: &ModeParams, branches: u32) -> Result<RootSet> {
    char_roots_tol(mode, branches, DEFAULT_RESIDUAL_TOL)
}

pub fn char_roots_tol(mode: &ModeParams, branches: u32, residual_tol: f64) -> Result<RootSet> {
    let z = mode.lambda * mode.tau;
    let k = i64::from(branches);
    let mut roots: Vec<CharRoot> = Vec::with_capacity(2 * branches as usize + 1);
    for branch in -k..=k {
        let w = lambert::lambert_w(z, branch)?;
        let s = newton_polish(mode, w / mode.tau);
        let residual = mode.charfun(s).norm();
        if residual.is_nan() || residual > residual_tol * (1.0 + s.norm()) {
            return Err(Error::BranchNotConverged {
                branch,
                detail: format!("root {s} has residual {residual:e} after Newton polish"),
            });
        }
        let duplicate = roots
            .iter()
            .any(|r| (r.s - s).norm() <= residual_tol * (1.0 + s.norm()));
        if !duplicate {
            roots.push(CharRoot { s, branch, residual });
        }
    }
    roots.sort_by(|a, b| b.s.re.total_cmp(&a.s.re).then(b.s.im.total_cmp(&a.s.im)));
    Ok(RootSet { roots, branch_range: branches, residual_tol, verified_count: None })
}

fn newton_polish(mode: &ModeParams, mut s: Complex64) -> Complex64 {
    let mut best = s;
    let mut best_res = mode.charfun(s).norm();
    for _ in 0..NEWTON_MAX_ITER {
        let p = mode.charfun(s);
        let dp = mode.charfun_derivative(s);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        s -= step;
        let res = mode.charfun(s).norm();
        if res < best_res {
            best = s;
            best_res = res;
        }
        if step.norm() <= 4.0 * f64::EPSILON * s.norm().max(1.0) {
            break;
        }
    }
    best
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

/// Number of zeros of `P` inside `rect`, by tracking the phase of `P` around
/// the boundary. The base sampling has `samples` points; segments whose phase
/// step exceeds `pi/4` are bisected.
///
/// Fails when the contour passes through or extremely close to a zero.
pub fn count_zeros(mode: &ModeParams, rect: Rectangle, samples: usize) -> Result<u32> {
    let corners = [
        Complex64::new(rect.re_min, rect.im_min),
        Complex64::new(rect.re_max, rect.im_min),
        Complex64::new(rect.re_max, rect.im_max),
        Complex64::new(rect.re_min, rect.im_max),
    ];
    let width = rect.re_max - rect.re_min;
    let height = rect.im_max - rect.im_min;
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::ArgumentPrinciple(format!("degenerate rectangle {rect:?}")));
    }
    let perimeter = 2.0 * (width + height);
    let mut total = 0.0;
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let len = (b - a).norm();
        let n = ((samples as f64 * len / perimeter).ceil() as usize).max(64);
        let mut prev_s = a;
        let mut prev_p = checked_charfun(mode, a)?;
        for j in 1..=n {
            let s = a + (b - a) * (j as f64 / n as f64);
            let p = checked_charfun(mode, s)?;
            total += phase_change(mode, prev_s, s, prev_p, p, 0)?;
            prev_s = s;
            prev_p = p;
        }
    }
    let winding = total / (2.0 * PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 1e-6 || rounded < 0.0 {
        return Err(Error::ArgumentPrinciple(format!("non-integer winding number {winding}")));
    }
    Ok(rounded as u32)
}

fn checked_charfun(mode: &ModeParams, s: Complex64) -> Result<Complex64> {
    let p = mode.charfun(s);
    let scale = s.norm() + (mode.lambda * (-s * mode.tau).exp()).norm();
    if p.norm() <= 1e-13 * scale.max(1e-300) {
        return Err(Error::ArgumentPrinciple(format!("contour passes through a zero near {s}")));
    }
    Ok(p)
}

fn phase_change(
    mode: &ModeParams,
    a: Complex64,
    b: Complex64,
    pa: Complex64,
    pb: Complex64,
    depth: u32,
) -> Result<f64> {
    let d = principal_arg(pb / pa);
    if d.abs() <= MAX_PHASE_STEP {
        return Ok(d);
    }
    if depth >= CONTOUR_MAX_DEPTH {
        return Err(Error::ArgumentPrinciple(format!(
            "phase does not resolve between {a} and {b}; contour is within tolerance of a zero"
        )));
    }
    let m = 0.5 * (a + b);
    let pm = checked_charfun(mode, m)?;
    Ok(phase_change(mode, a, m, pa, pm, depth + 1)? + phase_change(mode, m, b, pm, pb, depth + 1)?)
}

/// Rightmost characteristic root together with an independent count of
/// right-half-plane zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub abscissa: f64,
    pub rightmost: Complex64,
    /// Number of zeros with `Re s > contour_shift` in the search rectangle.
    pub rhp_count: u32,
    /// How far the left edge of the contour was moved right to avoid a zero
    /// lying on the imaginary axis (0 when no retry was needed).
    pub contour_shift: f64,
    pub rectangle: Rectangle,
    pub roots: RootSet,
}

impl SpectralReport {
    pub fn rhp_free(&self) -> bool {
        self.rhp_count == 0
    }
}

/// Search rectangle `[0, max(2|lambda|, 1)] x [-Omega, Omega]` with
/// `Omega = max((2k + 2) pi / tau, 2 |lambda|)`. Every right half-plane zero
/// satisfies `|s| <= |lambda|`, so the rectangle contains all of them.
pub fn rhp_rectangle(mode: &ModeParams, branches: u32) -> Rectangle {
    let r = mode.lambda.norm();
    let omega = ((2.0 * f64::from(branches) + 2.0) * PI / mode.tau).max(2.0 * r);
    Rectangle { re_min: 0.0, re_max: (2.0 * r).max(1.0), im_min: -omega, im_max: omega }
}

pub fn spectral_abscissa(mode: &ModeParams, branches: u32) -> Result<SpectralReport> {
    if branches < 1 {
        return Err(Error::invalid("spectral abscissa needs at least one branch on each side"));
    }
    let mut roots = char_roots(mode, branches)?;
    let rightmost = roots.rightmost().expect("branch sweep yields at least one root").s;

    let base = rhp_rectangle(mode, branches);
    let scale = mode.lambda.norm().max(1.0 / mode.tau);
    let mut last_err = None;
    let mut found = None;
    for shift in [0.0, 1e-9 * scale, 1e-7 * scale, 1e-5 * scale] {
        let rect = Rectangle { re_min: shift, ..base };
        match count_zeros(mode, rect, CONTOUR_SAMPLES) {
            Ok(n) => {
                found = Some((n, shift, rect));
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (count, shift, rect) = match found {
        Some(f) => f,
        None => return Err(last_err.expect("at least one contour was tried")),
    };

    let abscissa = rightmost.re;
    let sweep_rhp = roots.roots.iter().filter(|r| r.s.re > shift && rect_contains(&rect, r.s)).count();
    if sweep_rhp as u32 != count {
        return Err(Error::ArgumentPrinciple(format!(
            "branch sweep found {sweep_rhp} right half-plane roots but the contour counts {count}"
        )));
    }
    roots.verified_count = Some(count);
    Ok(SpectralReport { abscissa, rightmost, rhp_count: count, contour_shift: shift, rectangle: rect, roots })
}

fn rect_contains(rect: &Rectangle, s: Complex64) -> bool {
    s.re > rect.re_min && s.re < rect.re_max && s.im > rect.im_min && s.im < rect.im_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn boundary_lambda() -> Complex64 {
        Complex64::from_polar(FRAC_PI_4, 3.0 * FRAC_PI_4)
    }

    fn mode(lambda: Complex64, tau: f64) -> ModeParams {
        ModeParams::new(lambda, tau).unwrap()
    }

    #[test]
    fn rejects_invalid_modes() {
        assert!(ModeParams::new(Complex64::new(0.0, 1.0), 1.0).is_err());
        assert!(ModeParams::new(Complex64::new(0.5, 0.0), 1.0).is_err());
        assert!(ModeParams::new(Complex64::new(-1.0, 0.0), 0.0).is_err());
        assert!(ModeParams::new(Complex64::new(-1.0, 0.0), f64::INFINITY).is_err());
        assert!(ModeParams::new(Complex64::new(f64::NAN, 0.0), 1.0).is_err());
    }

    #[test]
    fn arg_of_negative_real_is_pi() {
        assert_eq!(principal_arg(Complex64::new(-2.0, -0.0)), PI);
        assert_eq!(mode(Complex64::new(-1.0, -0.0), 1.0).arg(), PI);
    }

    #[test]
    fn charfun_examples() {
        let m = mode(Complex64::new(-1.0, 0.0), 1.0);
        assert_eq!(eval_charfun(&m, Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));

        let b = mode(boundary_lambda(), 1.0);
        assert!(eval_charfun(&b, Complex64::new(0.0, FRAC_PI_4)).norm() < 1e-15);

        let w0 = Complex64::new(-0.318_131_505_204_764_1, 1.337_235_701_430_689_4);
        assert!(eval_charfun(&m, w0).norm() < 1e-12);
    }

    #[test]
    fn region_examples() {
        for k in 1..=100 {
            let lam = Complex64::new(-1.0 / (k * k) as f64, 0.0);
            assert!(in_lambda_region(&mode(lam, 1.0)), "k = {k}");
        }
        assert!(!in_lambda_region(&mode(Complex64::new(-2.0, 0.0), 1.0)));
        let b = mode(boundary_lambda(), 1.0);
        assert!(!in_lambda_region(&b));
        assert_eq!(b.region(), Region::Critical);
    }

    #[test]
    fn critical_delay_examples() {
        assert!((critical_delay(Complex64::new(-1.0, 0.0)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((critical_delay(boundary_lambda()).unwrap() - 1.0).abs() < 1e-14);
        assert!((critical_delay(Complex64::new(-0.25, 0.0)).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!(critical_delay(Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn crossing_frequency_examples() {
        assert_eq!(crossing_frequency(Complex64::new(-1.0, 0.0)).unwrap(), 1.0);
        let conj = Complex64::from_polar(1.0, -3.0 * FRAC_PI_4);
        assert!((crossing_frequency(conj).unwrap() + 1.0).abs() < 1e-15);
        let w = crossing_frequency(boundary_lambda()).unwrap();
        assert!((w - FRAC_PI_4).abs() < 1e-15);
        let b = mode(boundary_lambda(), 1.0);
        assert!(eval_charfun(&b, Complex64::new(0.0, w)).norm() < 1e-12);
        assert!(crossing_frequency(Complex64::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn crossing_direction_examples() {
        assert!((crossing_direction(1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((crossing_direction(0.0, 2.0).unwrap() - 4.0).abs() < 1e-15);
        let w = FRAC_PI_4;
        let expected = w * w / (1.0 + w * w);
        assert!((crossing_direction(1.0, w).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.381_514).abs() < 1e-6);
        assert!(crossing_direction(1.0, 0.0).is_err());
    }

    #[test]
    fn principal_root_of_unit_delay() {
        let set = char_roots(&mode(Complex64::new(-1.0, 0.0), 1.0), 0).unwrap();
        assert_eq!(set.roots.len(), 1);
        let w0 = Complex64::new(-0.318_131_505_204_764_1, 1.337_235_701_430_689_4);
        assert!((set.roots[0].s - w0).norm() < 1e-13);
    }

    #[test]
    fn boundary_mode_has_root_on_axis() {
        let set = char_roots(&mode(boundary_lambda(), 1.0), 0).unwrap();
        assert!(set.values().iter().any(|s| (s - Complex64::new(0.0, FRAC_PI_4)).norm() < 1e-10));
    }

    #[test]
    fn tiny_delay_recovers_undelayed_root() {
        let set = char_roots(&mode(Complex64::new(-1.0, 0.0), 1e-8), 0).unwrap();
        assert!((set.roots[0].s - Complex64::new(-1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn roots_sorted_and_counted() {
        let set = char_roots(&mode(Complex64::new(-1.0, 0.0), 1.0), 4).unwrap();
        assert_eq!(set.roots.len(), 9);
        for pair in set.roots.windows(2) {
            assert!(pair[0].s.re >= pair[1].s.re);
        }
    }

    #[test]
    fn spectral_abscissa_examples() {
        let rep = spectral_abscissa(&mode(Complex64::new(-1.0, 0.0), 1.0), 8).unwrap();
        assert!((rep.abscissa + 0.318_131_505_204_764).abs() < 1e-12);
        assert_eq!(rep.rhp_count, 0);
        assert_eq!(rep.contour_shift, 0.0);

        let rep = spectral_abscissa(&mode(boundary_lambda(), 1.0), 8).unwrap();
        assert!(rep.abscissa.abs() < 1e-10);
        assert!(rep.contour_shift > 0.0);
        assert_eq!(rep.rhp_count, 0);

        let rep = spectral_abscissa(&mode(Complex64::new(-2.0, 0.0), 2.0), 8).unwrap();
        assert!(rep.abscissa > 0.0);
        assert!(rep.rhp_count >= 1);
        assert_eq!(rep.roots.verified_count, Some(rep.rhp_count));

        assert!(spectral_abscissa(&mode(Complex64::new(-1.0, 0.0), 1.0), 0).is_err());
    }

    #[test]
    fn count_zeros_finds_known_roots() {
        let m = mode(Complex64::new(-1.0, 0.0), 1.0);
        let rect = Rectangle { re_min: -0.5, re_max: 0.5, im_min: -2.0, im_max: 2.0 };
        assert_eq!(count_zeros(&m, rect, 512).unwrap(), 2);
    }

    #[test]
    fn critical_delay_puts_root_on_axis() {
        for theta in [1.7, 2.0, 2.5, 3.0, PI] {
            for r in [0.1, 1.0, 7.0] {
                let lam = Complex64::from_polar(r, theta);
                let tau = critical_delay(lam).unwrap();
                let m = mode(lam, tau);
                let w = crossing_frequency(lam).unwrap();
                assert!(m.charfun(Complex64::new(0.0, w)).norm() <= 1e-12 * (1.0 + r));
                let mc = m.conj();
                let wc = crossing_frequency(mc.lambda()).unwrap();
                assert!(mc.charfun(Complex64::new(0.0, wc)).norm() <= 1e-12 * (1.0 + r));
            }
        }
    }
}
