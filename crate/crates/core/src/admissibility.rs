//! Admissibility constants.
//!
//! For a mode in `Lambda_tau` and any `delta` with `(1 + delta)|lambda| tau <
//! eps_lambda`, the forcing map satisfies
//! `||Phi u||^2 <= C ||u||^2` with
//!
//! ```text
//! C = |b|^2 (1 + tau) / pi * ((2 - delta) / (delta |lambda|) + 2 delta / ((1 - m^2) |lambda|)),
//! m = cos(eps_lambda - (1 + delta) |lambda| tau).
//! ```
//!
//! The bracket divided by `pi` bounds the frequency integral
//! `(1 / 2 pi) int |i omega - lambda e^{-i omega tau}|^{-2} d omega`, which is
//! computed here as an independent check. A diagonal system is admissible
//! when the constants `C_k` are summable.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::quasipoly::{ModeParams, Region};
use crate::systems::SystemSpec;

/// Default relative tolerance of [`frequency_integral`].
pub const DEFAULT_REL_TOL: f64 = 1e-6;
/// Default number of modes summed by [`system_certificate`].
pub const DEFAULT_TRUNCATION: usize = 1000;
/// Distance kept from both ends of the feasible `delta` interval.
pub const ENDPOINT_CLEARANCE: f64 = 1e-12;
/// Feasible intervals narrower than this flag the certificate.
pub const NARROW_INTERVAL: f64 = 1e-10;
/// Raabe statistics must clear `1 +- RAABE_MARGIN` to count as a proof.
pub const RAABE_MARGIN: f64 = 0.05;

const MAX_INTERVALS: usize = 200_000;
const MAX_CUTOFF_GROWTH: f64 = 1e4;
const RAABE_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyIntegral {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub cutoff: f64,
}

fn require_member(mode: &ModeParams) -> Result<()> {
    match mode.region() {
        Region::Member => Ok(()),
        Region::Critical => Err(Error::OutsideRegion(format!(
            "lambda = {}, tau = {} lies on the boundary: P has a zero on the imaginary axis",
            mode.lambda(),
            mode.tau()
        ))),
        Region::Outside => Err(Error::OutsideRegion(format!(
            "lambda = {}, tau = {}: |lambda| tau exceeds |Arg lambda| - pi/2 by {:e}",
            mode.lambda(),
            mode.tau(),
            -mode.boundary_gap()
        ))),
    }
}

fn integrand(mode: &ModeParams) -> impl Fn(f64) -> f64 + '_ {
    move |omega| 1.0 / mode.charfun(Complex64::new(0.0, omega)).norm_sqr()
}

/// Both tails beyond `cutoff`: midpoint of the reverse-triangle bracket
/// `[1/(c + r), 1/(c - r)]` per side, and the bracket half-width.
fn tails(cutoff: f64, r: f64) -> (f64, f64) {
    let lo = 1.0 / (cutoff + r);
    let hi = 1.0 / (cutoff - r);
    (lo + hi, hi - lo)
}

fn base_cutoff(mode: &ModeParams) -> f64 {
    let r = mode.lambda().norm();
    (8.0 * r).max(8.0 / mode.tau()).max(16.0)
}

/// `(1 / 2 pi) int_R |i omega - lambda e^{-i omega tau}|^{-2} d omega`.
///
/// Adaptive Gauss-Kronrod on `[-c, c]`; the two tails are taken from the
/// analytic bracket. The cutoff starts at `max(8|lambda|, 8/tau, 16)` and grows
/// until the bracket width is below a quarter of the requested tolerance.
pub fn frequency_integral(mode: &ModeParams, rel_tol: f64) -> Result<FrequencyIntegral> {
    require_member(mode)?;
    check_rel_tol(rel_tol)?;
    let r = mode.lambda().norm();
    let c0 = base_cutoff(mode);
    let core = integrate_core(mode, c0, rel_tol)?;
    let (tail0, _) = tails(c0, r);
    let estimate = (core.value + tail0) / (2.0 * PI);

    // smallest c with tail slack / (2 pi) <= rel_tol/4 * estimate
    let target = 0.25 * rel_tol * estimate * 2.0 * PI;
    let needed = (r * r + 2.0 * r / target).sqrt();
    if needed <= c0 {
        return finish(core.value, core.abs_error, c0, r);
    }
    if needed > MAX_CUTOFF_GROWTH * c0 {
        return Err(Error::QuadratureBudget { estimate, error: tails(c0, r).1 / (2.0 * PI) });
    }
    let cutoff = needed.max(2.0 * c0);
    let f = integrand(mode);
    let tol = 0.5 * rel_tol;
    let left = quadrature::integrate(&f, &[-cutoff, -c0], 0.0, tol, MAX_INTERVALS)?;
    let right = quadrature::integrate(&f, &[c0, cutoff], 0.0, tol, MAX_INTERVALS)?;
    finish(
        core.value + left.value + right.value,
        core.abs_error + left.abs_error + right.abs_error,
        cutoff,
        r,
    )
}

/// Same quantity with a caller-chosen cutoff, no automatic extension.
pub fn frequency_integral_with_cutoff(mode: &ModeParams, rel_tol: f64, cutoff: f64) -> Result<FrequencyIntegral> {
    require_member(mode)?;
    check_rel_tol(rel_tol)?;
    let r = mode.lambda().norm();
    if !(cutoff.is_finite() && cutoff > 2.0 * r) {
        return Err(Error::invalid(format!("cutoff must exceed 2|lambda| = {}, got {cutoff}", 2.0 * r)));
    }
    let core = integrate_core(mode, cutoff, rel_tol)?;
    finish(core.value, core.abs_error, cutoff, r)
}

fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("relative tolerance must lie in (0, 1), got {rel_tol}")))
    }
}

fn integrate_core(mode: &ModeParams, cutoff: f64, rel_tol: f64) -> Result<quadrature::QuadResult> {
    let r = mode.lambda().norm();
    let mut points = vec![-cutoff, 0.0, cutoff];
    if r < cutoff {
        points.extend([-r, r]);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    quadrature::integrate(integrand(mode), &points, 0.0, 0.5 * rel_tol, MAX_INTERVALS)
}

fn finish(core: f64, core_err: f64, cutoff: f64, r: f64) -> Result<FrequencyIntegral> {
    let (tail, slack) = tails(cutoff, r);
    let value = (core + tail) / (2.0 * PI);
    let abs_error_estimate = (core_err + slack) / (2.0 * PI);
    if !(value > 0.0 && abs_error_estimate < value) {
        return Err(Error::QuadratureBudget { estimate: value, error: abs_error_estimate });
    }
    Ok(FrequencyIntegral { value, abs_error_estimate, cutoff })
}

/// Upper end of the feasible interval `(0, min(1, eps_lambda / (|lambda| tau) - 1))`.
pub fn feasible_upper(mode: &ModeParams) -> f64 {
    let a = mode.lambda().norm() * mode.tau();
    (mode.epsilon_lambda() / a - 1.0).min(1.0)
}

/// `eps_lambda - (1 + delta)|lambda| tau`, the angle whose cosine is `m`.
fn margin_angle(mode: &ModeParams, delta: f64) -> f64 {
    mode.epsilon_lambda() - (1.0 + delta) * mode.lambda().norm() * mode.tau()
}

/// `(2 - delta)/delta + 2 delta/(1 - m^2)` with `1 - m^2` taken as
/// `sin^2` of the margin angle, which stays accurate as `m -> 1`.
pub fn bracket(mode: &ModeParams, delta: f64) -> f64 {
    let s = margin_angle(mode, delta).sin();
    (2.0 - delta) / delta + 2.0 * delta / (s * s)
}

/// `(1/pi) * bracket / |lambda|`: the bound on [`frequency_integral`].
pub fn integral_bound(mode: &ModeParams, delta: f64) -> f64 {
    bracket(mode, delta) / (PI * mode.lambda().norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaChoice {
    pub delta: f64,
    pub m: f64,
    pub bracket: f64,
    pub feasible_upper: f64,
    pub near_boundary: bool,
}

/// Minimizes the bracket over the open feasible interval by golden-section
/// search, stopping at a bracket width of `1e-10` relative to the interval.
pub fn select_delta(mode: &ModeParams) -> Result<DeltaChoice> {
    require_member(mode)?;
    let upper = feasible_upper(mode);
    let mut lo = ENDPOINT_CLEARANCE.min(0.25 * upper);
    let mut hi = upper - lo;
    let g = |d: f64| bracket(mode, d);
    let tol = 1e-10 * upper;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    while hi - lo > tol {
        if g1 <= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = g(x2);
        }
    }
    let delta = if g1 <= g2 { x1 } else { x2 };
    Ok(DeltaChoice {
        delta,
        m: margin_angle(mode, delta).cos(),
        bracket: g(delta),
        feasible_upper: upper,
        near_boundary: upper < NARROW_INTERVAL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCertificate {
    pub lambda: Complex64,
    pub b: Complex64,
    pub tau: f64,
    pub delta: f64,
    pub m: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub epsilon_lambda: f64,
    pub feasible_upper: f64,
    pub near_boundary: bool,
}

impl ModeCertificate {
    /// `C` recomputed from the stored `(lambda, b, tau, delta)`.
    pub fn recompute_c(&self) -> Result<f64> {
        let mode = ModeParams::new(self.lambda, self.tau)?;
        Ok(constant(&mode, self.b, self.delta))
    }
}

fn constant(mode: &ModeParams, b: Complex64, delta: f64) -> f64 {
    b.norm_sqr() * (1.0 + mode.tau()) * integral_bound(mode, delta)
}

/// Per-mode constant; `delta` defaults to [`select_delta`]'s choice.
pub fn mode_bound(mode: &ModeParams, b: Complex64, delta: Option<f64>) -> Result<ModeCertificate> {
    require_member(mode)?;
    if !(b.re.is_finite() && b.im.is_finite()) {
        return Err(Error::invalid(format!("input coefficient must be finite, got {b}")));
    }
    let upper = feasible_upper(mode);
    let delta = match delta {
        Some(d) if d > 0.0 && d < upper => d,
        Some(d) => return Err(Error::InfeasibleDelta { delta: d, upper }),
        None => select_delta(mode)?.delta,
    };
    Ok(ModeCertificate {
        lambda: mode.lambda(),
        b,
        tau: mode.tau(),
        delta,
        m: margin_angle(mode, delta).cos(),
        c: constant(mode, b, delta),
        epsilon_lambda: mode.epsilon_lambda(),
        feasible_upper: upper,
        near_boundary: upper < NARROW_INTERVAL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailVerdict {
    ProvenSummableByRatio,
    /// Raabe's statistic stays below one on the sampled tail: the constants
    /// decay no faster than a harmonic series.
    ProvenDivergentByRatio,
    EmpiricallyDecaying,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaabeSample {
    pub k: usize,
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemCertificate {
    pub mode_certs: Vec<ModeCertificate>,
    pub partial_sum: f64,
    pub truncation: usize,
    pub requested_truncation: usize,
    pub tail_verdict: TailVerdict,
    pub raabe: Vec<RaabeSample>,
    pub near_boundary_modes: Vec<usize>,
}

/// Certificates for modes `1..=n` and a verdict on the tail of `sum C_k`.
///
/// Modes beyond the listed ones come from the tail rule; without a rule the
/// truncation is clamped to the listed count. With a rule, Raabe's statistic
/// `k (C_k / C_{k+1} - 1)` is evaluated at sample points in `[n, 4n]`.
pub fn system_certificate(spec: &SystemSpec, n: usize) -> Result<SystemCertificate> {
    if n == 0 {
        return Err(Error::invalid("truncation must be at least 1"));
    }
    let truncation = if spec.has_tail_rule() { n } else { n.min(spec.len()) };

    let results: Vec<Result<ModeCertificate>> = (1..=truncation)
        .into_par_iter()
        .map(|k| {
            let m = spec.mode(k).ok_or_else(|| Error::invalid(format!("system has no mode {k}")))?;
            let mode = ModeParams::new(m.lambda, spec.tau).map_err(|e| e.at_mode(k))?;
            mode_bound(&mode, m.b, None).map_err(|e| e.at_mode(k))
        })
        .collect();
    let mut mode_certs = Vec::with_capacity(truncation);
    for r in results {
        mode_certs.push(r?);
    }

    let mut partial_sum = 0.0;
    for cert in &mode_certs {
        partial_sum += cert.c;
    }
    let near_boundary_modes = mode_certs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.near_boundary)
        .map(|(i, _)| i + 1)
        .collect();

    let raabe = if spec.has_tail_rule() { raabe_samples(spec, truncation)? } else { Vec::new() };
    let tail_verdict = verdict(&raabe, &mode_certs);
    Ok(SystemCertificate {
        mode_certs,
        partial_sum,
        truncation,
        requested_truncation: n,
        tail_verdict,
        raabe,
        near_boundary_modes,
    })
}

fn rule_constant(spec: &SystemSpec, k: usize) -> Result<f64> {
    let (lambda, b) = spec
        .tail_rule
        .and_then(|r| r.mode(k, spec.tau))
        .ok_or_else(|| Error::invalid("tail rule required"))?;
    let mode = ModeParams::new(lambda, spec.tau).map_err(|e| e.at_mode(k))?;
    Ok(mode_bound(&mode, b, None).map_err(|e| e.at_mode(k))?.c)
}

fn raabe_samples(spec: &SystemSpec, n: usize) -> Result<Vec<RaabeSample>> {
    let (lo, hi) = (n as f64, 4.0 * n as f64);
    let mut ks: Vec<usize> = (0..RAABE_SAMPLES)
        .map(|j| (lo * (hi / lo).powf(j as f64 / (RAABE_SAMPLES - 1) as f64)).round() as usize)
        .collect();
    ks.dedup();
    ks.into_par_iter()
        .map(|k| {
            let (ck, cnext) = (rule_constant(spec, k)?, rule_constant(spec, k + 1)?);
            let statistic = if ck == 0.0 && cnext == 0.0 {
                f64::INFINITY
            } else {
                k as f64 * (ck / cnext - 1.0)
            };
            Ok(RaabeSample { k, statistic })
        })
        .collect()
}

fn verdict(raabe: &[RaabeSample], certs: &[ModeCertificate]) -> TailVerdict {
    if !raabe.is_empty() {
        if raabe.iter().all(|s| s.statistic >= 1.0 + RAABE_MARGIN) {
            return TailVerdict::ProvenSummableByRatio;
        }
        if raabe.iter().all(|s| s.statistic <= 1.0 - RAABE_MARGIN) {
            return TailVerdict::ProvenDivergentByRatio;
        }
    }
    let n = certs.len();
    if n >= 4 {
        let quartile = &certs[3 * n / 4..];
        let monotone = quartile.windows(2).all(|w| w[1].c <= w[0].c);
        if monotone && quartile.last().unwrap().c < quartile[0].c {
            return TailVerdict::EmpiricallyDecaying;
        }
    }
    TailVerdict::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{heat_reciprocal_spec, symbol_sampled_spec};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn mode(re: f64, im: f64, tau: f64) -> ModeParams {
        ModeParams::new(Complex64::new(re, im), tau).unwrap()
    }

    #[test]
    fn small_delay_limit() {
        let fi = frequency_integral(&mode(-1.0, 0.0, 1e-6), 1e-6).unwrap();
        assert!((fi.value - 0.5).abs() < 1e-3, "{fi:?}");
    }

    #[test]
    fn undelayed_oscillatory_limit() {
        // 1 / (2 |Re lambda|) for lambda = -2 + 3i
        let fi = frequency_integral(&mode(-2.0, 3.0, 1e-7), 1e-7).unwrap();
        assert!((fi.value - 0.25).abs() < 1e-4, "{fi:?}");
    }

    #[test]
    fn bracketed_by_floor_and_bound() {
        let m = mode(-0.25, 0.0, 1.0);
        let fi = frequency_integral(&m, 1e-6).unwrap();
        // the integrand is at least 1/(omega + 1/4)^2
        let floor = 2.0 / (0.25 * 2.0 * PI);
        assert!(fi.value >= floor * 0.5);
        let choice = select_delta(&m).unwrap();
        assert!(fi.value <= integral_bound(&m, choice.delta));
    }

    #[test]
    fn rejects_non_members() {
        assert!(matches!(frequency_integral(&mode(-2.0, 0.0, 1.0), 1e-6), Err(Error::OutsideRegion(_))));
        let boundary = ModeParams::new(Complex64::from_polar(FRAC_PI_2, PI), 1.0).unwrap();
        assert!(frequency_integral(&boundary, 1e-6).is_err());
        assert!(frequency_integral(&mode(-1.0, 0.0, 1.0), 0.0).is_err());
        assert!(select_delta(&mode(-2.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn error_estimate_is_sensible() {
        let fi = frequency_integral(&mode(-1.0, 0.0, 1.0), 1e-6).unwrap();
        assert!(fi.abs_error_estimate < 1e-5 * fi.value);
        assert!(fi.cutoff > 2.0);
    }

    fn grid_scan(m: &ModeParams, points: usize) -> f64 {
        let upper = feasible_upper(m);
        (1..points).map(|j| bracket(m, upper * j as f64 / points as f64)).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn select_delta_unit_mode() {
        let m = mode(-1.0, 0.0, 1.0);
        let choice = select_delta(&m).unwrap();
        assert!((choice.feasible_upper - (FRAC_PI_2 - 1.0)).abs() < 1e-15);
        assert!(choice.delta > 0.0 && choice.delta < choice.feasible_upper);
        assert!(choice.bracket <= bracket(&m, 0.2854));
        assert!(choice.bracket <= grid_scan(&m, 10_000) * (1.0 + 1e-12));
        assert!(choice.m > 0.0 && choice.m < 1.0);
        assert!(!choice.near_boundary);
    }

    #[test]
    fn select_delta_heat_tail_is_capped() {
        for k in [10usize, 100, 1000] {
            let m = mode(-1.0 / (k * k) as f64, 0.0, 1.0);
            let choice = select_delta(&m).unwrap();
            assert_eq!(choice.feasible_upper, 1.0);
            assert!(choice.delta > 0.5 && choice.delta < 1.0, "k={k}: {choice:?}");
            assert!(choice.bracket <= grid_scan(&m, 10_000) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn select_delta_near_boundary() {
        let lambda = Complex64::from_polar(PI / 4.0 - 1e-9, 3.0 * PI / 4.0);
        let m = ModeParams::new(lambda, 1.0).unwrap();
        let choice = select_delta(&m).unwrap();
        assert!((choice.feasible_upper - 1e-9 * 4.0 / PI).abs() < 1e-14);
        assert!(choice.delta > 0.0 && choice.delta < choice.feasible_upper);
        assert!(!choice.near_boundary);

        let lambda = Complex64::from_polar(PI / 4.0 - 1e-11, 3.0 * PI / 4.0);
        let m = ModeParams::new(lambda, 1.0).unwrap();
        let cert = mode_bound(&m, Complex64::new(1.0, 0.0), None).unwrap();
        assert!(cert.delta > 0.0 && cert.delta < cert.feasible_upper);
        assert!(cert.c.is_finite() && cert.c > 1e6);
        assert!(cert.near_boundary);
    }

    #[test]
    fn mode_bound_examples() {
        let m = mode(-1.0, 0.0, 1.0);
        assert_eq!(mode_bound(&m, Complex64::new(0.0, 0.0), None).unwrap().c, 0.0);

        let cert = mode_bound(&m, Complex64::new(1.0, 0.0), Some(0.5)).unwrap();
        assert!((cert.m - 1.5f64.sin()).abs() < 1e-15);
        let expected = 2.0 / PI * (3.0 + 1.0 / 1.5f64.cos().powi(2));
        assert!((cert.c - expected).abs() < 1e-12 * expected);
        assert!((cert.c - 129.138).abs() < 1e-3, "{}", cert.c);

        let best = mode_bound(&m, Complex64::new(1.0, 0.0), None).unwrap();
        assert!(best.c < cert.c);

        match mode_bound(&m, Complex64::new(1.0, 0.0), Some(0.6)) {
            Err(Error::InfeasibleDelta { upper, .. }) => assert!((upper - (FRAC_PI_2 - 1.0)).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        assert!(mode_bound(&m, Complex64::new(1.0, 0.0), Some(0.0)).is_err());
    }

    #[test]
    fn single_mode_system() {
        let spec = symbol_sampled_spec(&[Complex64::new(-1.0, 0.0)], 1.0, &[Complex64::new(1.0, 0.0)]).unwrap();
        let cert = system_certificate(&spec, 1000).unwrap();
        assert_eq!(cert.truncation, 1);
        let single = mode_bound(&mode(-1.0, 0.0, 1.0), Complex64::new(1.0, 0.0), None).unwrap();
        assert_eq!(cert.partial_sum, single.c);
        assert_eq!(cert.tail_verdict, TailVerdict::Inconclusive);
    }

    #[test]
    fn failing_mode_is_named() {
        let spec = symbol_sampled_spec(
            &[Complex64::new(-1.0, 0.0), Complex64::new(-0.5, 0.0), Complex64::new(-2.0, 0.0), Complex64::new(-3.0, 0.0)],
            1.0,
            &[Complex64::new(1.0, 0.0); 4],
        )
        .unwrap();
        match system_certificate(&spec, 10).unwrap_err() {
            Error::Mode { index, source } => {
                assert_eq!(index, 3);
                assert!(matches!(*source, Error::OutsideRegion(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn heat_reciprocal_verdicts() {
        let spec = heat_reciprocal_spec(10, 2.0).unwrap();
        let cert = system_certificate(&spec, 1000).unwrap();
        assert_eq!(cert.truncation, 1000);
        assert_eq!(cert.tail_verdict, TailVerdict::ProvenSummableByRatio);
        assert!(cert.raabe.iter().all(|s| (s.statistic - 2.0).abs() < 0.1), "{:?}", cert.raabe);

        let spec = heat_reciprocal_spec(10, 1.0).unwrap();
        let cert = system_certificate(&spec, 200).unwrap();
        assert_eq!(cert.tail_verdict, TailVerdict::ProvenDivergentByRatio);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn certificate_recomputes_exactly(
            arg in 0.55f64..1.0, frac in 0.05f64..0.95, tau in 0.1f64..3.0,
            bre in -3.0f64..3.0, bim in -3.0f64..3.0,
        ) {
            let arg = arg * PI;
            let r = frac * (arg - FRAC_PI_2) / tau;
            let m = ModeParams::new(Complex64::from_polar(r, arg), tau).unwrap();
            let cert = mode_bound(&m, Complex64::new(bre, bim), None).unwrap();
            prop_assert_eq!(cert.recompute_c().unwrap().to_bits(), cert.c.to_bits());
            prop_assert!((1.0 + cert.delta) * r * tau < cert.epsilon_lambda);
            prop_assert!(cert.m > 0.0 && cert.m < 1.0);
        }

        #[test]
        fn optimizer_dominates_random_deltas(
            arg in 0.55f64..1.0, frac in 0.05f64..0.95, tau in 0.1f64..3.0,
            probes in proptest::collection::vec(0.0f64..1.0, 100),
        ) {
            let arg = arg * PI;
            let r = frac * (arg - FRAC_PI_2) / tau;
            let m = ModeParams::new(Complex64::from_polar(r, arg), tau).unwrap();
            let choice = select_delta(&m).unwrap();
            for p in probes {
                let d = p * choice.feasible_upper;
                if d > 0.0 && d < choice.feasible_upper {
                    prop_assert!(choice.bracket <= bracket(&m, d) * (1.0 + 1e-9));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn conjugate_invariance(arg in 0.55f64..0.99, frac in 0.05f64..0.9, tau in 0.2f64..2.0) {
            let arg = arg * PI;
            let r = frac * (arg - FRAC_PI_2) / tau;
            let m = ModeParams::new(Complex64::from_polar(r, arg), tau).unwrap();
            let a = frequency_integral(&m, 1e-7).unwrap();
            let b = frequency_integral(&m.conj(), 1e-7).unwrap();
            prop_assert!((a.value - b.value).abs() <= a.abs_error_estimate + b.abs_error_estimate);
        }

        #[test]
        fn bound_validity(arg in 0.55f64..1.0, frac in 0.05f64..0.95, tau in 0.1f64..3.0, p in 0.01f64..0.99) {
            let arg = arg * PI;
            let r = frac * (arg - FRAC_PI_2) / tau;
            let m = ModeParams::new(Complex64::from_polar(r, arg), tau).unwrap();
            let fi = frequency_integral(&m, 1e-6).unwrap();
            let delta = p * feasible_upper(&m);
            prop_assert!(fi.value <= integral_bound(&m, delta) + fi.abs_error_estimate);
        }

        #[test]
        fn tail_bound_soundness(arg in 0.55f64..1.0, frac in 0.05f64..0.95, tau in 0.2f64..2.0, grow in 1.1f64..4.0) {
            let arg = arg * PI;
            let r = frac * (arg - FRAC_PI_2) / tau;
            let m = ModeParams::new(Complex64::from_polar(r, arg), tau).unwrap();
            let c = base_cutoff(&m);
            let a = frequency_integral_with_cutoff(&m, 1e-8, c).unwrap();
            let b = frequency_integral_with_cutoff(&m, 1e-8, grow * c).unwrap();
            let stated = 2.0 / (2.0 * PI) / (c - r);
            prop_assert!(b.value + b.abs_error_estimate <= a.value + a.abs_error_estimate + stated);
        }
    }
}
