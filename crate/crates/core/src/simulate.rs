//! Method-of-steps integration of `z'(t) = lambda z(t - tau) + b u(t)`.
//!
//! The grid is aligned with the delay (`dt = tau / n`), so on each step the
//! delayed term is read from stored nodes of the previous delay interval.
//! Because the right-hand side does not depend on `z(t)`, the classical
//! four-stage scheme collapses to Simpson's rule in time; its midpoint value
//! of the delayed term comes from a cubic through four stored nodes, kept
//! inside one delay interval so that it never straddles a propagated kink.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::quasipoly::{self, ModeParams, Region};
use crate::resolvent::HistoryGrid;

pub const MIN_STEPS_PER_DELAY: usize = 16;
/// Tolerance on the domain condition `f(0) = x0`.
pub const DOMAIN_TOL: f64 = 1e-9;
pub const DEFAULT_DECAY_TOL: f64 = 1e-8;
/// Trailing-window energy fraction below which an `L^2(0, T)` norm is final.
pub const TRAILING_ENERGY_TOL: f64 = 1e-8;
/// Minimum horizon, in delays, before non-decay becomes an error.
pub const HORIZON_DELAYS: f64 = 200.0;
/// Horizon in units of `1 / |spectral abscissa|` for slowly decaying modes.
pub const HORIZON_DECAY_TIMES: f64 = 60.0;

/// Finitely supported input sampled on `[0, support_end]`, zero afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSignal {
    samples: Vec<Complex64>,
    step: f64,
    norm_sq: f64,
}

impl InputSignal {
    pub fn new(samples: Vec<Complex64>, step: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("input needs at least one sample"));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid(format!("input step must be positive, got {step}")));
        }
        if samples.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid("input samples must be finite"));
        }
        let norm_sq = trapezoid(samples.iter().map(|v| v.norm_sqr()), step);
        Ok(Self { samples, step, norm_sq })
    }

    /// The zero input.
    pub fn zero() -> Self {
        Self { samples: vec![Complex64::new(0.0, 0.0)], step: 1.0, norm_sq: 0.0 }
    }

    pub fn from_fn(support_end: f64, intervals: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if intervals == 0 || !(support_end.is_finite() && support_end > 0.0) {
            return Err(Error::invalid("input needs a positive support and at least one interval"));
        }
        let step = support_end / intervals as f64;
        Self::new((0..=intervals).map(|j| f(j as f64 * step)).collect(), step)
    }

    /// `value` on `[0, support_end]`.
    pub fn constant(support_end: f64, intervals: usize, value: Complex64) -> Result<Self> {
        Self::from_fn(support_end, intervals, |_| value)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn support_end(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.step
    }

    /// Squared `L^2` norm by the composite trapezoid rule.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    fn interpolate(&self, t: f64) -> Complex64 {
        let pos = (t / self.step).clamp(0.0, (self.samples.len() - 1) as f64);
        let j = (pos.floor() as usize).min(self.samples.len().saturating_sub(2));
        if self.samples.len() == 1 {
            return self.samples[0];
        }
        let w = pos - j as f64;
        self.samples[j] * (1.0 - w) + self.samples[j + 1] * w
    }

    /// Limit from the right; zero from `support_end` on.
    pub fn value_right(&self, t: f64) -> Complex64 {
        if t < 0.0 || t >= self.support_end() - 1e-9 * self.step {
            Complex64::new(0.0, 0.0)
        } else {
            self.interpolate(t)
        }
    }

    /// Limit from the left; zero after `support_end` and at or before 0.
    pub fn value_left(&self, t: f64) -> Complex64 {
        if t <= 1e-9 * self.step || t > self.support_end() + 1e-9 * self.step {
            Complex64::new(0.0, 0.0)
        } else {
            self.interpolate(t)
        }
    }

    /// Value at an interior point; at a jump the right limit.
    pub fn value_at(&self, t: f64) -> Complex64 {
        self.value_right(t)
    }
}

/// Seeded band-limited input: up to eight complex sinusoids with
/// frequencies below `4 * 2 pi / tau`, cut to `[0, 4 tau]` and sampled with
/// `steps_per_delay` points per delay.
pub fn band_limited_input<R: Rng>(rng: &mut R, tau: f64, steps_per_delay: usize) -> Result<InputSignal> {
    let terms = rng.gen_range(1..=8);
    let components: Vec<(Complex64, f64)> = (0..terms)
        .map(|_| {
            let amp = Complex64::from_polar(rng.gen_range(0.1..1.0), rng.gen_range(-PI..PI));
            let freq = rng.gen_range(-4.0..4.0) * 2.0 * PI / tau;
            (amp, freq)
        })
        .collect();
    InputSignal::from_fn(4.0 * tau, 4 * steps_per_delay, |t| {
        components.iter().map(|&(a, w)| a * Complex64::new(0.0, w * t).exp()).sum()
    })
}

/// Solution on the grid `t_i = i dt`, together with its prehistory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    steps_per_delay: usize,
    z: Vec<Complex64>,
    prehistory: HistoryGrid,
    mode: ModeParams,
    b: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateNorm {
    pub t: f64,
    pub value_sq: f64,
    /// `t` was not a grid node; the nearest node was used.
    pub off_node: bool,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_per_delay(&self) -> usize {
        self.steps_per_delay
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn prehistory(&self) -> &HistoryGrid {
        &self.prehistory
    }

    pub fn mode(&self) -> &ModeParams {
        &self.mode
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.z.len() - 1)
    }

    /// Node `k` of the extended grid; `k < 0` reads the prehistory.
    fn node(&self, k: isize) -> Complex64 {
        node_value(&self.z, self.prehistory.samples(), self.steps_per_delay, k)
    }

    /// `|z(t_i)|^2 + int_{-tau}^0 |z(t_i + s)|^2 ds` at node `i`.
    pub fn state_norm_at(&self, i: usize) -> f64 {
        let n = self.steps_per_delay as isize;
        let i = i as isize;
        let window = trapezoid((i - n..=i).map(|k| self.node(k).norm_sqr()), self.dt);
        self.node(i).norm_sqr() + window
    }

    /// State norms at every node, by a sliding window refreshed once per delay.
    pub fn state_norm_series(&self) -> Vec<f64> {
        let n = self.steps_per_delay as isize;
        let mut out = Vec::with_capacity(self.z.len());
        let mut interior = 0.0;
        for i in 0..self.z.len() as isize {
            if i % n == 0 {
                interior = (i - n + 1..i).map(|k| self.node(k).norm_sqr()).sum();
            } else {
                interior += self.node(i - 1).norm_sqr() - self.node(i - n).norm_sqr();
            }
            let ends = 0.5 * (self.node(i - n).norm_sqr() + self.node(i).norm_sqr());
            out.push(self.node(i).norm_sqr() + self.dt * (interior.max(0.0) + ends));
        }
        out
    }

    /// `int_0^{t_i} |z|^2` by the trapezoid rule up to node `i`.
    pub fn l2_norm_sq_to(&self, i: usize) -> f64 {
        trapezoid(self.z[..=i.min(self.z.len() - 1)].iter().map(|v| v.norm_sqr()), self.dt)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq_to(self.z.len() - 1)
    }

    /// Writes `t, re, im, state_norm_sq` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "re", "im", "state_norm_sq"])?;
        for (i, norm) in self.state_norm_series().into_iter().enumerate() {
            let v = self.z[i];
            w.write_record(&[
                format!("{}", self.time(i)),
                format!("{:e}", v.re),
                format!("{:e}", v.im),
                format!("{norm:e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn node_value(z: &[Complex64], pre: &[Complex64], n: usize, k: isize) -> Complex64 {
    if k >= 0 {
        z[k as usize]
    } else {
        pre[(k + n as isize) as usize]
    }
}

fn trapezoid(values: impl Iterator<Item = f64>, h: f64) -> f64 {
    let mut sum = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for v in values {
        if first.is_none() {
            first = Some(v);
        }
        sum += v;
        last = v;
    }
    match first {
        None => 0.0,
        Some(f) => h * (sum - 0.5 * (f + last)),
    }
}

/// `n` with `dt = tau / n`, or an error when `dt` does not divide `tau`.
pub fn steps_per_delay(tau: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    let n = (tau / dt).round();
    if (n * dt - tau).abs() > 1e-10 * tau {
        return Err(Error::invalid(format!("time step {dt} does not divide the delay {tau}")));
    }
    let n = n as usize;
    if n < MIN_STEPS_PER_DELAY {
        return Err(Error::invalid(format!(
            "need at least {MIN_STEPS_PER_DELAY} steps per delay, got {n} (dt = {dt})"
        )));
    }
    Ok(n)
}

fn node_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::invalid(format!("final time must be finite and >= 0, got {t_end}")));
    }
    Ok((t_end / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Integrates from `x0`, prehistory `f` on `[-tau, 0]` and input `u` up to the
/// first grid node at or after `t_end`.
pub fn step_integrate(
    mode: &ModeParams,
    b: Complex64,
    x0: Complex64,
    f: &HistoryGrid,
    u: &InputSignal,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    let n = steps_per_delay(mode.tau(), dt)?;
    let steps = node_count(t_end, dt)?;
    if (f.tau() - mode.tau()).abs() > 1e-12 * mode.tau() || f.intervals() != n {
        return Err(Error::invalid(format!(
            "prehistory must live on the integration grid: {} intervals on [-{}, 0], expected {n} on [-{}, 0]",
            f.intervals(),
            f.tau(),
            mode.tau()
        )));
    }
    if (f.last() - x0).norm() > DOMAIN_TOL {
        return Err(Error::invalid(format!("domain condition f(0) = x0 violated: f(0) = {}, x0 = {x0}", f.last())));
    }
    if !(b.re.is_finite() && b.im.is_finite() && x0.re.is_finite() && x0.im.is_finite()) {
        return Err(Error::invalid("b and x0 must be finite"));
    }
    let mut traj = start(mode, b, x0, f.clone(), dt, n);
    advance(&mut traj, u, steps);
    Ok(traj)
}

fn start(mode: &ModeParams, b: Complex64, x0: Complex64, prehistory: HistoryGrid, dt: f64, n: usize) -> Trajectory {
    Trajectory { dt, steps_per_delay: n, z: vec![x0], prehistory, mode: *mode, b }
}

/// Extends `traj` until it holds `steps + 1` nodes.
fn advance(traj: &mut Trajectory, u: &InputSignal, steps: usize) {
    let n = traj.steps_per_delay;
    let dt = traj.dt;
    let lambda = traj.mode.lambda();
    let b = traj.b;
    let forced = b != Complex64::new(0.0, 0.0) && !u.is_zero();
    traj.z.reserve((steps + 1).saturating_sub(traj.z.len()));
    while traj.z.len() <= steps {
        let i = traj.z.len() - 1;
        let l = i % n;
        // the first delay interval reads the prehistory only, including its
        // endpoint f(0), which may differ from x0 for the fundamental solution
        let seg = i - l;
        let pre = traj.prehistory.samples();
        let z = &traj.z;
        let d = |j: usize| if seg == 0 { pre[j] } else { z[seg - n + j] };
        let s = l.saturating_sub(1).min(n - 3);
        let (d0, d1, d2, d3) = (d(s), d(s + 1), d(s + 2), d(s + 3));
        let mid = match l - s {
            0 => (5.0 * d0 + 15.0 * d1 - 5.0 * d2 + d3) / 16.0,
            1 => (-d0 + 9.0 * d1 + 9.0 * d2 - d3) / 16.0,
            _ => (d0 - 5.0 * d1 + 15.0 * d2 + 5.0 * d3) / 16.0,
        };
        let mut g0 = lambda * d(l);
        let mut gm = lambda * mid;
        let mut g1 = lambda * d(l + 1);
        if forced {
            let t = i as f64 * dt;
            g0 += b * u.value_right(t);
            gm += b * u.value_at(t + 0.5 * dt);
            g1 += b * u.value_left(t + dt);
        }
        let next = traj.z[i] + dt / 6.0 * (g0 + 4.0 * gm + g1);
        traj.z.push(next);
    }
}

/// The kernel `T_11(t)`: solution from `x0 = 1`, `f = 0`, `u = 0`. The jump
/// at `t = 0` is deliberate, so the domain condition is not enforced.
pub fn fundamental_solution(mode: &ModeParams, t_end: f64, dt: f64) -> Result<Trajectory> {
    let n = steps_per_delay(mode.tau(), dt)?;
    let steps = node_count(t_end, dt)?;
    let mut traj = start(mode, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), HistoryGrid::zeros(mode.tau(), n)?, dt, n);
    advance(&mut traj, &InputSignal::zero(), steps);
    Ok(traj)
}

pub fn state_norm(traj: &Trajectory, t: f64) -> Result<StateNorm> {
    let end = traj.end_time();
    let slack = 1e-9 * traj.dt;
    if !(t >= -slack && t <= end + slack) {
        return Err(Error::invalid(format!("time {t} outside the trajectory range [0, {end}]")));
    }
    let i = ((t / traj.dt).round().max(0.0) as usize).min(traj.len() - 1);
    let off_node = (t - traj.time(i)).abs() > slack;
    Ok(StateNorm { t, value_sq: traj.state_norm_at(i), off_node })
}

fn require_member(mode: &ModeParams) -> Result<()> {
    if mode.region() == Region::Member {
        Ok(())
    } else {
        Err(Error::OutsideRegion(format!("lambda = {}, tau = {}", mode.lambda(), mode.tau())))
    }
}

/// Time beyond which a member mode that has not decayed is reported as such:
/// `max(200 tau, 60 / |sigma|)` with `sigma` the spectral abscissa.
pub fn decay_horizon(mode: &ModeParams) -> Result<f64> {
    let roots = quasipoly::char_roots(mode, 2)?;
    let sigma = roots.rightmost().map(|r| r.s.re).unwrap_or(-1.0 / mode.tau());
    let slow = if sigma < 0.0 { HORIZON_DECAY_TIMES / -sigma } else { 0.0 };
    Ok((HORIZON_DELAYS * mode.tau()).max(slow))
}

/// `sup_{t >= T_u} ||v(t)||` for zero initial data, where `T_u` is the end
/// of the input's support. The run continues until the state norm over the
/// last delay interval is below `decay_tol` times its running maximum.
pub fn forcing_norm_empirical(
    mode: &ModeParams,
    b: Complex64,
    u: &InputSignal,
    dt: f64,
    decay_tol: f64,
) -> Result<f64> {
    require_member(mode)?;
    if !(decay_tol > 0.0 && decay_tol < 1.0) {
        return Err(Error::invalid(format!("decay tolerance must lie in (0, 1), got {decay_tol}")));
    }
    let n = steps_per_delay(mode.tau(), dt)?;
    if b == Complex64::new(0.0, 0.0) || u.is_zero() {
        return Ok(0.0);
    }
    let tau = mode.tau();
    let support = u.support_end();
    let start_index = (support / dt - 1e-9).ceil() as usize;
    let cap = support + decay_horizon(mode)?;

    let mut traj = start(mode, b, Complex64::new(0.0, 0.0), HistoryGrid::zeros(tau, n)?, dt, n);
    let mut t_end = support + 5.0 * tau;
    loop {
        advance(&mut traj, u, node_count(t_end, dt)?);
        let series = traj.state_norm_series();
        let peak = series.iter().copied().fold(0.0, f64::max);
        let recent = series[series.len().saturating_sub(n + 1)..].iter().copied().fold(0.0, f64::max);
        if peak == 0.0 || recent <= decay_tol * peak {
            let sup = series[start_index.min(series.len() - 1)..].iter().copied().fold(0.0, f64::max);
            return Ok(sup.sqrt());
        }
        if t_end >= cap {
            return Err(Error::NoDecay {
                horizon: t_end,
                detail: format!("state norm still {:e} of its peak", recent / peak),
            });
        }
        t_end = (2.0 * t_end).min(cap);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `||T_11||^2` on `[0, horizon]`.
    pub value: f64,
    pub horizon: f64,
    /// Share of `value` carried by the trailing window `[T - w, T]`,
    /// `w = max(5 tau, T / 4)`.
    pub trailing_fraction: f64,
}

/// `||T_11||^2_{L^2(0, T)}` with `T` doubled from `20 tau` until the trailing
/// window carries less than `trailing_tol` of the total.
pub fn fundamental_energy(mode: &ModeParams, dt: f64, trailing_tol: f64) -> Result<EnergyReport> {
    require_member(mode)?;
    let tau = mode.tau();
    let n = steps_per_delay(tau, dt)?;
    let cap = 2.0 * decay_horizon(mode)?;
    let mut traj = start(mode, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), HistoryGrid::zeros(tau, n)?, dt, n);
    let mut t_end = 20.0 * tau;
    loop {
        let steps = node_count(t_end, dt)?;
        advance(&mut traj, &InputSignal::zero(), steps);
        let total = traj.l2_norm_sq_to(steps);
        let window = (5.0 * tau).max(t_end / 4.0);
        let cut = ((t_end - window) / dt).round().max(0.0) as usize;
        let trailing = total - traj.l2_norm_sq_to(cut);
        let fraction = (trailing / total).max(0.0);
        if fraction < trailing_tol {
            return Ok(EnergyReport { value: total, horizon: traj.time(steps), trailing_fraction: fraction });
        }
        if t_end >= cap {
            return Err(Error::NoDecay { horizon: t_end, detail: format!("trailing energy fraction {fraction:e}") });
        }
        t_end = (2.0 * t_end).min(cap);
    }
}
