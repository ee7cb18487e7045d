//! The sharp bound `M(n, sigma2, d)` on `||S - ES||_d` for sums of `n`
//! k-wise independent variables in `[-1, 1]` with average variance `sigma2`,
//! its three regimes, the discrete and continuous maximization forms it is
//! derived from, and the Markov tail bound built on it.
//!
//! All logarithms are natural. Values are computed in the log domain.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::calibration::Calibration;
use crate::error::{Error, Result};

/// `(n, sigma2, d, k)`: the parameters every bound consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundQuery {
    n: u64,
    sigma2: f64,
    d: u32,
    k: u32,
}

impl BoundQuery {
    pub fn new(n: u64, sigma2: f64, d: u32, k: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if !(sigma2 > 0.0 && sigma2 <= 1.0) {
            return Err(Error::invalid(format!("sigma2 = {sigma2} must lie in (0, 1]")));
        }
        if d == 0 || !d.is_multiple_of(2) {
            return Err(Error::invalid("d must be even"));
        }
        if d > k {
            return Err(Error::invalid(format!("d <= k required (d = {d}, k = {k})")));
        }
        Ok(BoundQuery { n, sigma2, d, k })
    }

    /// Query with the smallest admissible independence order, `k = d`.
    pub fn fully_moment_independent(n: u64, sigma2: f64, d: u32) -> Result<Self> {
        Self::new(n, sigma2, d, d.max(2))
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `log(d / (n sigma2))`.
    pub fn log_ratio(&self) -> f64 {
        (self.d as f64).ln() - (self.n as f64).ln() - self.sigma2.ln()
    }

    /// Left end `max(2, d/n)` of the relaxed maximization interval.
    pub fn left_endpoint(&self) -> f64 {
        (self.d as f64 / self.n as f64).max(2.0)
    }

    fn total_variance(&self) -> f64 {
        self.n as f64 * self.sigma2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Regime {
    SubGaussian,
    LogCorrected,
    SmallVariance,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::SubGaussian, Regime::LogCorrected, Regime::SmallVariance];

    pub fn tag(&self) -> &'static str {
        match self {
            Regime::SubGaussian => "SubGaussian",
            Regime::LogCorrected => "LogCorrected",
            Regime::SmallVariance => "SmallVariance",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantMode {
    Unit,
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub value: f64,
    pub regime: Regime,
    pub branch_expression: String,
    pub constant_mode: ConstantMode,
}

/// Boundary ties go to the middle branch.
pub fn classify_regime(q: &BoundQuery) -> Regime {
    let log_ratio = q.log_ratio();
    if log_ratio < q.left_endpoint() {
        Regime::SubGaussian
    } else if log_ratio <= q.d as f64 {
        Regime::LogCorrected
    } else {
        Regime::SmallVariance
    }
}

/// `M(n, sigma2, d)` with constant 1.
///
/// The sub-Gaussian branch is the relaxed maximum at the left endpoint
/// `q0 = max(2, d/n)`, scaled by 2: `2 (d/q0) (n sigma2 / d)^{1/q0}`. For
/// `d <= 2n` this is exactly `sqrt(d n sigma2)`; for `d > 2n` the sum has
/// fewer than `d/2` terms and the branch becomes `2n (n sigma2/d)^{n/d}`.
pub fn sharp_bound_m(q: &BoundQuery) -> BoundResult {
    let regime = classify_regime(q);
    let (value, branch) = branch_value(q, regime);
    BoundResult {
        value,
        regime,
        branch_expression: branch.to_string(),
        constant_mode: ConstantMode::Unit,
    }
}

/// Evaluates the formula of `regime` at `q`, whichever regime `q` is in.
pub fn branch_value(q: &BoundQuery, regime: Regime) -> (f64, &'static str) {
    let d = q.d as f64;
    match regime {
        Regime::SubGaussian if q.d as u64 <= 2 * q.n => {
            ((d * q.total_variance()).sqrt(), "sqrt(d*n*sigma2)")
        }
        Regime::SubGaussian => {
            let q0 = q.left_endpoint();
            let ln_a = q.total_variance().ln() - d.ln();
            ((2.0 * d / q0) * (ln_a / q0).exp(), "2*n*(n*sigma2/d)^(n/d)")
        }
        Regime::LogCorrected => (d / q.log_ratio(), "d/log(d/(n*sigma2))"),
        Regime::SmallVariance => ((q.total_variance().ln() / d).exp(), "(n*sigma2)^(1/d)"),
    }
}

/// `M` scaled by the calibrated constant of its regime.
pub fn sharp_bound_m_calibrated(q: &BoundQuery, calibration: &Calibration) -> BoundResult {
    let mut out = sharp_bound_m(q);
    out.value *= calibration.constant(out.regime);
    out.constant_mode = ConstantMode::Calibrated;
    out
}

pub fn sharp_bound(q: &BoundQuery, mode: ConstantMode, calibration: Option<&Calibration>) -> BoundResult {
    match (mode, calibration) {
        (ConstantMode::Calibrated, Some(c)) => sharp_bound_m_calibrated(q, c),
        _ => sharp_bound_m(q),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteMax {
    pub value: f64,
    pub argmax: u32,
}

/// `max_{1 <= l <= min(d/2, n)} [l^d C(n, l) sigma2^l]^{1/d}`.
pub fn discrete_max_bound(q: &BoundQuery) -> DiscreteMax {
    let d = q.d as f64;
    let top = (q.d as u64 / 2).min(q.n) as u32;
    let mut ln_choose = 0.0;
    let mut best = DiscreteMax { value: f64::NEG_INFINITY, argmax: 1 };
    for l in 1..=top {
        let lf = l as f64;
        ln_choose += (q.n as f64 - lf + 1.0).ln() - lf.ln();
        let ln_term = (d * lf.ln() + ln_choose + lf * q.sigma2.ln()) / d;
        if ln_term > best.value {
            best = DiscreteMax { value: ln_term, argmax: l };
        }
    }
    best.value = best.value.exp();
    best
}

/// `g(q) = a^{1/q} / q`.
pub fn auxiliary_g(q: f64, a: f64) -> f64 {
    (a.ln() / q).exp() / q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxationMax {
    pub value: f64,
    /// Maximizing `q` in `[max(2, d/n), d]`.
    pub at: f64,
}

/// `max_{max(2, d/n) <= q <= d} (d/q) (n sigma2 / d)^{1/q}`, using the
/// stationary point `q = log(1/a)` of `g` when `a < 1`.
pub fn continuous_relaxation_max(q: &BoundQuery) -> RelaxationMax {
    let d = q.d as f64;
    let a = q.total_variance() / d;
    let lo = q.left_endpoint();
    let at = if a >= 1.0 {
        lo
    } else {
        (-a.ln()).clamp(lo, d)
    };
    RelaxationMax { value: d * auxiliary_g(at, a), at }
}

/// `min(1, (c M / t)^d)` with `M` in unit mode.
pub fn tail_bound(q: &BoundQuery, t: f64, c: f64) -> Result<f64> {
    Ok(tail_bound_unclamped(q, t, c)?.min(1.0))
}

/// `(c M / t)^d` before clamping to 1.
pub fn tail_bound_unclamped(q: &BoundQuery, t: f64, c: f64) -> Result<f64> {
    if !(t > 0.0) || !(c > 0.0) {
        return Err(Error::invalid("t and c must be positive"));
    }
    let m = sharp_bound_m(q).value;
    Ok((c * m / t).powi(q.d as i32))
}
