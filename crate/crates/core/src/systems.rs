//! System descriptions: a delay plus an ordered list of `(lambda_k, b_k)`
//! modes, optionally backed by a closed-form rule that extends the list
//! beyond its last entry.
//!
//! On disk a system is a JSON document
//!
//! ```json
//! { "tau": 1.0,
//!   "modes": [ { "index": 1, "lambda": [-1.0, 0.0], "b": [1.0, 0.0] } ],
//!   "tail_rule": { "kind": "power-law", "c": -1.0, "p": 2.0, "d": 1.0, "q": 2.0 } }
//! ```
//!
//! with complex numbers written as `[re, im]`.

use std::f64::consts::FRAC_PI_2;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quasipoly::ModeParams;

/// Relative tolerance for listed modes against their tail rule.
pub const RULE_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub index: usize,
    pub lambda: Complex64,
    pub b: Complex64,
}

/// Closed-form description of the eigenvalue and input sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailRule {
    None,
    /// `lambda_k = c k^{-p}` with `c < 0`, `b_k = d k^{-q}`.
    PowerLaw { c: f64, p: f64, d: f64, q: f64 },
    /// `lambda_k = (-pi / (2 tau) + eps) / k`, `b_k = k^{-2}`.
    Artificial { eps: f64 },
}

impl TailRule {
    /// Mode `k >= 1` under this rule, `None` for [`TailRule::None`].
    pub fn mode(&self, k: usize, tau: f64) -> Option<(Complex64, Complex64)> {
        let kf = k as f64;
        match *self {
            TailRule::None => None,
            TailRule::PowerLaw { c, p, d, q } => {
                Some((Complex64::new(c * kf.powf(-p), 0.0), Complex64::new(d * kf.powf(-q), 0.0)))
            }
            TailRule::Artificial { eps } => {
                Some((Complex64::new((-FRAC_PI_2 / tau + eps) / kf, 0.0), Complex64::new(kf.powi(-2), 0.0)))
            }
        }
    }

    fn validate(&self, tau: f64) -> Result<()> {
        let bad = |message: String| Err(Error::Spec { path: "tail_rule".into(), message });
        match *self {
            TailRule::None => Ok(()),
            TailRule::PowerLaw { c, p, d, q } => {
                if !(c < 0.0 && c.is_finite()) {
                    return bad(format!("power-law coefficient c must be negative, got {c}"));
                }
                if ![p, d, q].iter().all(|v| v.is_finite()) {
                    return bad("power-law parameters must be finite".into());
                }
                Ok(())
            }
            TailRule::Artificial { eps } => {
                if !(eps > 0.0 && eps < FRAC_PI_2 / tau) {
                    return bad(format!("artificial rule needs 0 < eps < pi/(2 tau), got {eps}"));
                }
                Ok(())
            }
        }
    }

    fn is_none(&self) -> bool {
        matches!(self, TailRule::None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub tau: f64,
    pub modes: Vec<ModeSpec>,
    pub tail_rule: Option<TailRule>,
    /// Non-fatal remarks from generators; not serialized.
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    index: usize,
    lambda: [f64; 2],
    b: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    tau: f64,
    modes: Vec<RawMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_rule: Option<TailRule>,
}

impl SystemSpec {
    /// Validates every invariant; see [`load_spec`].
    pub fn new(tau: f64, modes: Vec<ModeSpec>, tail_rule: Option<TailRule>) -> Result<Self> {
        let spec = Self { tau, modes, tail_rule, warnings: Vec::new() };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Spec { path: "tau".into(), message: format!("must be finite and > 0, got {}", self.tau) });
        }
        if self.modes.is_empty() {
            return Err(Error::Spec { path: "modes".into(), message: "must contain at least one mode".into() });
        }
        if let Some(rule) = &self.tail_rule {
            rule.validate(self.tau)?;
        }
        for (i, m) in self.modes.iter().enumerate() {
            let path = |field: &str| format!("modes[{i}].{field}");
            if m.index != i + 1 {
                return Err(Error::Spec {
                    path: path("index"),
                    message: format!("indices must be contiguous from 1; expected {}, got {}", i + 1, m.index),
                });
            }
            if !(m.b.re.is_finite() && m.b.im.is_finite()) {
                return Err(Error::Spec { path: path("b"), message: "must be finite".into() });
            }
            if let Err(e) = ModeParams::new(m.lambda, self.tau) {
                return Err(Error::Spec { path: path("lambda"), message: format!("mode {}: {e}", m.index) });
            }
            if let Some((lambda, b)) = self.tail_rule.and_then(|r| r.mode(m.index, self.tau)) {
                let close = |x: Complex64, y: Complex64| (x - y).norm() <= RULE_MATCH_TOL * y.norm().max(f64::MIN_POSITIVE);
                if !close(m.lambda, lambda) || !close(m.b, b) {
                    return Err(Error::Spec {
                        path: format!("modes[{i}]"),
                        message: format!("mode {} does not match tail rule ({lambda}, {b})", m.index),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Mode `k >= 1`: the listed entry, else the tail rule's value.
    pub fn mode(&self, k: usize) -> Option<ModeSpec> {
        if k == 0 {
            return None;
        }
        if let Some(m) = self.modes.get(k - 1) {
            return Some(*m);
        }
        self.tail_rule
            .and_then(|r| r.mode(k, self.tau))
            .map(|(lambda, b)| ModeSpec { index: k, lambda, b })
    }

    pub fn has_tail_rule(&self) -> bool {
        self.tail_rule.is_some_and(|r| !r.is_none())
    }

    pub fn mode_params(&self, k: usize) -> Result<ModeParams> {
        let m = self.mode(k).ok_or_else(|| Error::invalid(format!("system has no mode {k}")))?;
        ModeParams::new(m.lambda, self.tau).map_err(|e| e.at_mode(k))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text)?;
        Self::from_raw(raw)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let raw: RawSpec = serde_json::from_reader(reader)?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawSpec) -> Result<Self> {
        let modes = raw
            .modes
            .into_iter()
            .map(|m| ModeSpec {
                index: m.index,
                lambda: Complex64::new(m.lambda[0], m.lambda[1]),
                b: Complex64::new(m.b[0], m.b[1]),
            })
            .collect();
        Self::new(raw.tau, modes, raw.tail_rule)
    }

    fn to_raw(&self) -> RawSpec {
        RawSpec {
            tau: self.tau,
            modes: self
                .modes
                .iter()
                .map(|m| RawMode { index: m.index, lambda: [m.lambda.re, m.lambda.im], b: [m.b.re, m.b.im] })
                .collect(),
            tail_rule: self.tail_rule,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_raw())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<SystemSpec> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Spec { path: path.display().to_string(), message: e.to_string() })?;
    SystemSpec::from_reader(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Json(j) => Error::Spec {
            path: format!("{}:{}:{}", path.display(), j.line(), j.column()),
            message: j.to_string(),
        },
        other => other,
    })
}

/// Reciprocal heat-equation system: `tau = 1`, `lambda_k = -1/k^2`,
/// `b_k = k^{-q}`. The constants scale like `k^{2 - 2q}`, so `q <= 3/2`
/// produces a spec carrying a non-summability warning.
pub fn heat_reciprocal_spec(n: usize, q: f64) -> Result<SystemSpec> {
    if n == 0 {
        return Err(Error::invalid("heat-reciprocal spec needs N >= 1"));
    }
    if !q.is_finite() {
        return Err(Error::invalid(format!("decay exponent q must be finite, got {q}")));
    }
    let rule = TailRule::PowerLaw { c: -1.0, p: 2.0, d: 1.0, q };
    let mut spec = from_rule(n, 1.0, rule)?;
    if q <= 1.5 {
        spec.warnings.push(format!("q = {q} <= 3/2: admissibility constants are not summable"));
    }
    Ok(spec)
}

/// `lambda_k = (-pi / (2 tau) + eps) / k`, `b_k = k^{-2}`.
pub fn artificial_spec(n: usize, tau: f64, eps: f64) -> Result<SystemSpec> {
    if n == 0 {
        return Err(Error::invalid("artificial spec needs N >= 1"));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("delay must be positive, got {tau}")));
    }
    if !(eps > 0.0 && eps < FRAC_PI_2 / tau) {
        return Err(Error::invalid(format!("eps must lie in (0, pi/(2 tau)) = (0, {}), got {eps}", FRAC_PI_2 / tau)));
    }
    from_rule(n, tau, TailRule::Artificial { eps })
}

fn from_rule(n: usize, tau: f64, rule: TailRule) -> Result<SystemSpec> {
    let modes = (1..=n)
        .map(|k| {
            let (lambda, b) = rule.mode(k, tau).expect("rule is not None");
            ModeSpec { index: k, lambda, b }
        })
        .collect();
    SystemSpec::new(tau, modes, Some(rule))
}

/// Finite diagonal surrogate of a multiplication operator: the sampled symbol
/// values become the eigenvalues. Membership in `Lambda_tau` is not checked
/// here; it is a certification-time condition.
pub fn symbol_sampled_spec(symbol_samples: &[Complex64], tau: f64, b: &[Complex64]) -> Result<SystemSpec> {
    if symbol_samples.is_empty() {
        return Err(Error::invalid("symbol sample list is empty"));
    }
    if symbol_samples.len() != b.len() {
        return Err(Error::invalid(format!(
            "{} symbol samples but {} input coefficients",
            symbol_samples.len(),
            b.len()
        )));
    }
    let modes = symbol_samples
        .iter()
        .zip(b)
        .enumerate()
        .map(|(i, (&lambda, &b))| ModeSpec { index: i + 1, lambda, b })
        .collect();
    SystemSpec::new(tau, modes, None)
}

/// Evaluates a symbol `q` at the given points.
pub fn sample_symbol(q: impl Fn(f64) -> Complex64, points: &[f64]) -> Vec<Complex64> {
    points.iter().map(|&x| q(x)).collect()
}

/// Sum of per-mode squared norms, `||v||^2 = sum_k ||v_k||^2`, with
/// compensated summation in index order.
pub fn aggregate_norm(per_mode_values: &[f64]) -> Result<f64> {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (i, &v) in per_mode_values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::invalid(format!("entry {i} must be finite and non-negative, got {v}")));
        }
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    Ok(sum + comp)
}
