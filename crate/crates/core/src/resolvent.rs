//! Per-mode resolvent blocks.
//!
//! For a mode with characteristic function `P(s) = s - lambda e^{-s tau}`:
//!
//! * `R(s, Psi_s) = 1 / P(s)`,
//! * `R(s, A_0) f (r) = int_r^0 e^{s (r - t)} f(t) dt` on `[-tau, 0]`,
//! * `R(s, A) B = b / P(s) * (1, e_s)` with `e_s(sigma) = e^{s sigma}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quasipoly::ModeParams;

/// Samples of a function on a uniform grid over `[-tau, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryGrid {
    samples: Vec<Complex64>,
    tau: f64,
    step: f64,
}

impl HistoryGrid {
    pub fn new(samples: Vec<Complex64>, tau: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("history grid needs at least two nodes"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("history length must be positive, got {tau}")));
        }
        let step = tau / (samples.len() - 1) as f64;
        Ok(Self { samples, tau, step })
    }

    /// Samples `f` at `-tau + j tau / intervals`, `j = 0..=intervals`.
    pub fn from_fn(tau: f64, intervals: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::invalid("history grid needs at least one interval"));
        }
        let step = tau / intervals as f64;
        let samples = (0..=intervals).map(|j| f(-tau + j as f64 * step)).collect();
        Self::new(samples, tau)
    }

    pub fn zeros(tau: f64, intervals: usize) -> Result<Self> {
        Self::from_fn(tau, intervals, |_| Complex64::new(0.0, 0.0))
    }

    pub fn constant(tau: f64, intervals: usize, value: Complex64) -> Result<Self> {
        Self::from_fn(tau, intervals, |_| value)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.intervals() {
            0.0
        } else {
            -self.tau + j as f64 * self.step
        }
    }

    /// Value at the right end, `f(0)`.
    pub fn last(&self) -> Complex64 {
        *self.samples.last().expect("grid is non-empty")
    }

    /// Piecewise-linear interpolation; `r` is clamped into `[-tau, 0]`.
    pub fn value_at(&self, r: f64) -> Complex64 {
        let x = ((r + self.tau) / self.step).clamp(0.0, self.intervals() as f64);
        let j = (x.floor() as usize).min(self.intervals() - 1);
        let frac = x - j as f64;
        self.samples[j] * (1.0 - frac) + self.samples[j + 1] * frac
    }

    /// `int_{-tau}^0 |f|^2` by the composite trapezoid rule.
    pub fn l2_norm_sq(&self) -> f64 {
        let n = self.samples.len();
        let inner: f64 = self.samples[1..n - 1].iter().map(|v| v.norm_sqr()).sum();
        self.step * (inner + 0.5 * (self.samples[0].norm_sqr() + self.samples[n - 1].norm_sqr()))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { samples: self.samples.iter().map(|v| v * c).collect(), ..*self }
    }
}

/// `|P(s)|` below this many rounding units of its two terms counts as a pole.
const POLE_ULPS: f64 = 256.0;

/// `R(s, Psi_s) = 1 / (s - lambda e^{-s tau})`.
pub fn resolvent_psi(mode: &ModeParams, s: Complex64) -> Result<Complex64> {
    let delayed = mode.lambda() * (-s * mode.tau()).exp();
    let p = s - delayed;
    let scale = s.norm() + delayed.norm();
    if p.norm() <= (POLE_ULPS * f64::EPSILON * scale).max(1e-300) {
        return Err(Error::Pole { s, residual: p.norm() });
    }
    Ok(1.0 / p)
}

/// `R(s, A_0) f (r) = int_r^0 e^{s (r - t)} f(t) dt` by composite Simpson on the
/// grid nodes in `[r, 0]`; the partial cell `[r, t_m]` uses linear
/// interpolation of `f` at the cut.
pub fn resolvent_a0_apply(s: Complex64, f: &HistoryGrid, r: f64) -> Result<Complex64> {
    let tau = f.tau();
    let slack = 1e-12 * tau;
    if !(r >= -tau - slack && r <= slack) {
        return Err(Error::invalid(format!("evaluation point {r} outside [-{tau}, 0]")));
    }
    let r = r.clamp(-tau, 0.0);
    if r == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let h = f.step();
    let n = f.intervals();
    let g = |t: f64, v: Complex64| (s * (r - t)).exp() * v;

    // first node at or right of r
    let pos = (r + tau) / h;
    let m = ((pos - 1e-9).ceil().max(0.0) as usize).min(n);
    let tm = f.node(m);

    let mut total = Complex64::new(0.0, 0.0);
    let head = tm - r;
    if head > 1e-12 * h {
        let mid = 0.5 * (r + tm);
        total += head / 6.0
            * (g(r, f.value_at(r)) + 4.0 * g(mid, f.value_at(mid)) + g(tm, f.samples()[m]));
    }

    let q = n - m;
    let node_g = |j: usize| g(f.node(j), f.samples()[j]);
    let simpson = |from: usize, count: usize| -> Complex64 {
        let mut acc = node_g(from) + node_g(from + count);
        for i in 1..count {
            acc += node_g(from + i) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * (h / 3.0)
    };
    let three_eighths = |from: usize| -> Complex64 {
        (node_g(from) + 3.0 * node_g(from + 1) + 3.0 * node_g(from + 2) + node_g(from + 3)) * (3.0 * h / 8.0)
    };
    match q {
        0 => {}
        1 if n >= 2 => {
            // midpoint from the quadratic through the last three nodes
            let (a, b, c) = (f.samples()[n - 2], f.samples()[n - 1], f.samples()[n]);
            let mid_val = (-a + 6.0 * b + 3.0 * c) / 8.0;
            let mid = f.node(n - 1) + 0.5 * h;
            total += h / 6.0 * (node_g(n - 1) + 4.0 * g(mid, mid_val) + node_g(n));
        }
        1 => total += 0.5 * h * (node_g(m) + node_g(n)),
        q if q % 2 == 0 => total += simpson(m, q),
        3 => total += three_eighths(m),
        q => total += simpson(m, q - 3) + three_eighths(n - 3),
    }
    Ok(total)
}

/// `R(s, A) B = b / P(s) * (1, e_s)`: the scalar part and the history part
/// sampled on `intervals` cells of `[-tau, 0]`.
pub fn resolvent_block_apply(
    mode: &ModeParams,
    b: Complex64,
    s: Complex64,
    intervals: usize,
) -> Result<(Complex64, HistoryGrid)> {
    let head = b * resolvent_psi(mode, s)?;
    let grid = HistoryGrid::from_fn(mode.tau(), intervals, |sigma| head * (s * sigma).exp())?;
    Ok((head, grid))
}

/// Squared `L^2(-tau, 0)` norm of the boundary trace `R21*(i omega)`:
/// `tau / |i omega - lambda e^{-i omega tau}|^2`.
pub fn trace_norm_sq_r21(mode: &ModeParams, omega: f64) -> Result<f64> {
    let r = resolvent_psi(mode, Complex64::new(0.0, omega))?;
    Ok(mode.tau() * r.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_mode() -> ModeParams {
        ModeParams::new(c(-1.0, 0.0), 1.0).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = HistoryGrid::zeros(2.0, 8).unwrap();
        assert_eq!(g.samples().len(), 9);
        assert!((g.step() * 8.0 - 2.0).abs() < 1e-15);
        assert_eq!(g.node(8), 0.0);
        assert!(HistoryGrid::new(vec![c(1.0, 0.0)], 1.0).is_err());
        assert!(HistoryGrid::new(vec![c(1.0, 0.0); 3], 0.0).is_err());
    }

    #[test]
    fn psi_examples() {
        assert_eq!(resolvent_psi(&unit_mode(), c(0.0, 0.0)).unwrap(), c(1.0, 0.0));

        let v = resolvent_psi(&unit_mode(), c(0.0, 1.0)).unwrap();
        let expected = 1.0 / c(1f64.cos(), 1.0 - 1f64.sin());
        assert!((v - expected).norm() < 1e-15);

        let boundary = ModeParams::new(Complex64::from_polar(FRAC_PI_4, 3.0 * FRAC_PI_4), 1.0).unwrap();
        assert!(matches!(resolvent_psi(&boundary, c(0.0, FRAC_PI_4)), Err(Error::Pole { .. })));
    }

    #[test]
    fn a0_examples() {
        let zero = HistoryGrid::zeros(1.0, 16).unwrap();
        assert_eq!(resolvent_a0_apply(c(2.0, 1.0), &zero, -0.5).unwrap(), c(0.0, 0.0));

        let one = HistoryGrid::constant(3.0, 16, c(1.0, 0.0)).unwrap();
        assert!((resolvent_a0_apply(c(0.0, 0.0), &one, -3.0).unwrap() - c(3.0, 0.0)).norm() < 1e-14);

        let exp = HistoryGrid::from_fn(1.0, 64, |t| c(t.exp(), 0.0)).unwrap();
        let v = resolvent_a0_apply(c(1.0, 0.0), &exp, -1.0).unwrap();
        assert!((v - c((-1f64).exp(), 0.0)).norm() < 1e-10);

        assert_eq!(resolvent_a0_apply(c(1.0, 0.0), &exp, 0.0).unwrap(), c(0.0, 0.0));
        assert!(resolvent_a0_apply(c(1.0, 0.0), &exp, -1.5).is_err());
        assert!(resolvent_a0_apply(c(1.0, 0.0), &exp, 0.1).is_err());
    }

    #[test]
    fn a0_error_contracts_under_refinement() {
        // s = 1, f(t) = e^{2t}: integrand e^{r + t}, exact value e^r (1 - e^r)
        for r in [-1.0f64, -0.5, -0.75] {
            let exact = r.exp() * (1.0 - r.exp());
            let err = |n: usize| {
                let f = HistoryGrid::from_fn(1.0, n, |t| c((2.0 * t).exp(), 0.0)).unwrap();
                (resolvent_a0_apply(c(1.0, 0.0), &f, r).unwrap() - c(exact, 0.0)).norm()
            };
            let mut prev = err(16);
            for n in [32, 64] {
                let e = err(n);
                assert!(prev / e >= 3.0, "r={r} n={n}: {prev:e} -> {e:e}");
                prev = e;
            }
        }
    }

    #[test]
    fn a0_cut_inside_a_cell_is_second_order() {
        let r: f64 = -0.77;
        let exact = -r * r.exp();
        for n in [16, 32, 64, 128, 256] {
            let f = HistoryGrid::from_fn(1.0, n, |t| c(t.exp(), 0.0)).unwrap();
            let e = (resolvent_a0_apply(c(1.0, 0.0), &f, r).unwrap() - c(exact, 0.0)).norm();
            let h = 1.0 / n as f64;
            assert!(e <= 0.5 * h * h, "n={n}: {e:e}");
        }
    }

    #[test]
    fn a0_odd_interval_counts() {
        let s = c(0.3, -2.0);
        let f = HistoryGrid::from_fn(1.0, 64, |t| c(t.cos(), t)).unwrap();
        // compare several cut points against a fine grid
        let fine = HistoryGrid::from_fn(1.0, 4096, |t| c(t.cos(), t)).unwrap();
        for k in [61, 62, 63, 1, 7] {
            let r = f.node(k);
            let a = resolvent_a0_apply(s, &f, r).unwrap();
            let b = resolvent_a0_apply(s, &fine, r).unwrap();
            assert!((a - b).norm() < 1e-7, "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn block_examples() {
        let (head, grid) = resolvent_block_apply(&unit_mode(), c(0.0, 0.0), c(0.5, 0.0), 8).unwrap();
        assert_eq!(head, c(0.0, 0.0));
        assert!(grid.samples().iter().all(|v| *v == c(0.0, 0.0)));

        let (head, grid) = resolvent_block_apply(&unit_mode(), c(1.0, 0.0), c(0.0, 0.0), 8).unwrap();
        assert_eq!(head, c(1.0, 0.0));
        assert!(grid.samples().iter().all(|v| (*v - c(1.0, 0.0)).norm() < 1e-15));

        let (head, _) = resolvent_block_apply(&unit_mode(), c(2.0, 0.0), c(1.0, 0.0), 8).unwrap();
        assert!((head.re - 2.0 / (1.0 + (-1f64).exp())).abs() < 1e-15);
        assert!((head.re - 1.462_11).abs() < 1e-5);
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm_sq_r21(&unit_mode(), 0.0).unwrap() - 1.0).abs() < 1e-15);
        let m2 = ModeParams::new(c(-1.0, 0.0), 2.0).unwrap();
        assert!((trace_norm_sq_r21(&m2, 0.0).unwrap() - 2.0).abs() < 1e-15);

        let v = trace_norm_sq_r21(&unit_mode(), 1.0).unwrap();
        let expected = 1.0 / (1f64.cos().powi(2) + (1.0 - 1f64.sin()).powi(2));
        assert!((v - expected).abs() < 1e-13);
        assert!((v - 3.154_00).abs() < 1e-5);

        // numerical integral of |e^{i w t} / P(i w)|^2 over [-tau, 0]
        let (_, grid) = resolvent_block_apply(&unit_mode(), c(1.0, 0.0), c(0.0, 1.0), 256).unwrap();
        assert!((grid.l2_norm_sq() - v).abs() < 1e-12);
    }

    #[test]
    fn resolvent_identity() {
        let m = ModeParams::new(c(-0.7, 0.4), 1.3).unwrap();
        let pairs = [(c(0.2, 1.0), c(-0.1, -2.0)), (c(1.5, 0.0), c(0.0, 0.3)), (c(3.0, 4.0), c(0.01, 9.0))];
        for (s1, s2) in pairs {
            let r1 = resolvent_psi(&m, s1).unwrap();
            let r2 = resolvent_psi(&m, s2).unwrap();
            let rhs = r1 * (m.charfun(s2) - m.charfun(s1)) * r2;
            assert!((r1 - r2 - rhs).norm() <= 1e-12 * (r1.norm() + r2.norm()));
        }
    }
}
