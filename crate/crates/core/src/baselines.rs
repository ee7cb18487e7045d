//! Competing moment bounds and the row-wise comparison against `M`.
//!
//! Bounds stated only up to constants are evaluated with constant 1. The raw
//! Schmidt-type display is the only entry carrying explicit constants.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sharp_bounds::{sharp_bound_m, BoundQuery};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineQuery {
    pub n: u64,
    pub d: u32,
    pub sigma2: f64,
    pub mu: Option<f64>,
}

impl BaselineQuery {
    pub fn new(n: u64, d: u32, sigma2: f64, mu: Option<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if d == 0 || !d.is_multiple_of(2) {
            return Err(Error::invalid("d must be even"));
        }
        if !(sigma2 > 0.0 && sigma2 <= 1.0) {
            return Err(Error::invalid(format!("sigma2 = {sigma2} must lie in (0, 1]")));
        }
        if let Some(mu) = mu {
            if !(0.0..=1.0).contains(&mu) {
                return Err(Error::invalid(format!("mu = {mu} must lie in [0, 1]")));
            }
            if sigma2 > mu {
                return Err(Error::invalid(format!(
                    "sigma2 = {sigma2} exceeds mu = {mu}; [0,1]-valued summands have variance <= mean"
                )));
            }
        }
        Ok(BaselineQuery { n, d, sigma2, mu })
    }

    fn d(&self) -> f64 {
        self.d as f64
    }

    fn total_variance(&self) -> f64 {
        self.n as f64 * self.sigma2
    }
}

/// `log cosh(x)` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}

/// `[sqrt(2) cosh(sqrt(d^3/(36C))) (dC/e)^{d/2}]^{1/d}`, valid for
/// `C >= n sigma2`.
pub fn schmidt_raw(q: &BaselineQuery, c: f64) -> Result<f64> {
    if !(c >= q.total_variance()) || !c.is_finite() {
        return Err(Error::invalid(format!(
            "C = {c} must be at least n*sigma2 = {}",
            q.total_variance()
        )));
    }
    let d = q.d();
    let ln = 0.5 * std::f64::consts::LN_2
        + ln_cosh((d * d * d / (36.0 * c)).sqrt())
        + 0.5 * d * ((d * c).ln() - 1.0);
    Ok((ln / d).exp())
}

/// `cosh(sqrt(d/(36C))) sqrt(dC)`: the raw bound up to constants.
pub fn schmidt_rewritten(d: u32, c: f64) -> f64 {
    let d = d as f64;
    (ln_cosh((d / (36.0 * c)).sqrt()) + 0.5 * (d * c).ln()).exp()
}

/// Root of `tanh(t) = 1/t` on `[1, 2]`.
pub fn schmidt_t_star() -> f64 {
    let f = |t: f64| t.tanh() - 1.0 / t;
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    assert!(f(lo) < 0.0 && f(hi) > 0.0, "bracket must straddle the root");
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.abs() <= 1e-12 && hi - lo < 1e-13 {
            break;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

/// Minimizer of [`schmidt_rewritten`] over `C > 0`: `C* = d / (36 t*^2)`.
pub fn schmidt_find_cstar(d: u32) -> f64 {
    let t = schmidt_t_star();
    d as f64 / (36.0 * t * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchmidtOptimized {
    /// `C = max(C*, n sigma2)`.
    pub c: f64,
    /// Rewritten bound at `c`.
    pub bound: f64,
    /// `max(sqrt(d n sigma2), d)`.
    pub proxy: f64,
}

pub fn schmidt_optimized(q: &BaselineQuery) -> SchmidtOptimized {
    let c = schmidt_find_cstar(q.d).max(q.total_variance());
    SchmidtOptimized {
        c,
        bound: schmidt_rewritten(q.d, c),
        proxy: bernstein_moment(q),
    }
}

/// `min(sqrt(d n), sqrt(d n mu + d^2))`.
pub fn bellare_rompel(q: &BaselineQuery) -> Result<f64> {
    let mu = q
        .mu
        .ok_or_else(|| Error::invalid("the Bellare-Rompel bound needs mu"))?;
    let (d, n) = (q.d(), q.n as f64);
    Ok((d * n).sqrt().min((d * n * mu + d * d).sqrt()))
}

/// `max(sqrt(n d sigma2), d)`.
pub fn bernstein_moment(q: &BaselineQuery) -> f64 {
    (q.d() * q.total_variance()).sqrt().max(q.d())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RosenthalMoment {
    pub value: f64,
    /// `max(sqrt(d n sigma2), d)`, the simplified form.
    pub simplified: f64,
}

/// `d (sum E|X_i - EX_i|^d)^{1/d} + sqrt(d) (n sigma2)^{1/2}`. Without
/// per-summand moments, uses `E|X_i - EX_i|^d <= sigma_i^2` for bounded
/// summands, so the first sum becomes `n sigma2`.
pub fn rosenthal_moment(q: &BaselineQuery, dth_abs_moments: Option<&[f64]>) -> Result<RosenthalMoment> {
    let d = q.d();
    let dth_sum = match dth_abs_moments {
        Some(m) if m.len() as u64 != q.n => {
            return Err(Error::invalid(format!(
                "expected {} d-th moments, got {}",
                q.n,
                m.len()
            )))
        }
        Some(m) => m.iter().sum::<f64>(),
        None => q.total_variance(),
    };
    Ok(RosenthalMoment {
        value: d * dth_sum.powf(1.0 / d) + (d * q.total_variance()).sqrt(),
        simplified: bernstein_moment(q),
    })
}

/// One row of the comparison table. Absent entries could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub n: u64,
    pub d: u32,
    pub sigma2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ours: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schmidt_raw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schmidt_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bellare: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bernstein: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rosenthal: Option<f64>,
    pub best: String,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "n", "d", "sigma2", "mu", "ours", "schmidt_raw", "schmidt_opt", "bellare", "bernstein",
    "rosenthal", "best",
];

impl ComparisonRow {
    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.n.to_string(),
            self.d.to_string(),
            self.sigma2.to_string(),
            opt(self.mu),
            opt(self.ours),
            opt(self.schmidt_raw),
            opt(self.schmidt_opt),
            opt(self.bellare),
            opt(self.bernstein),
            opt(self.rosenthal),
            self.best.clone(),
        ]
    }
}

/// Evaluates every bound for `q`. `best` ranks the constant-free entries
/// (everything except `schmidt_raw`); ties go to the earlier column.
pub fn compare_all(q: &BaselineQuery) -> ComparisonRow {
    let ours = BoundQuery::fully_moment_independent(q.n, q.sigma2, q.d)
        .ok()
        .map(|b| sharp_bound_m(&b).value);
    let opt = schmidt_optimized(q);
    let schmidt_raw = schmidt_raw(q, opt.c).ok().filter(|v| v.is_finite());
    let bellare = bellare_rompel(q).ok();
    let bernstein = Some(bernstein_moment(q));
    let rosenthal = rosenthal_moment(q, None).ok().map(|r| r.value);

    let ranked = [
        ("ours", ours),
        ("schmidt_opt", Some(opt.proxy)),
        ("bellare", bellare),
        ("bernstein", bernstein),
        ("rosenthal", rosenthal),
    ];
    let best = ranked
        .iter()
        .filter_map(|(name, v)| v.filter(|x| x.is_finite()).map(|x| (*name, x)))
        .fold(None::<(&str, f64)>, |acc, (name, x)| match acc {
            Some((_, y)) if y <= x => acc,
            _ => Some((name, x)),
        })
        .map(|(name, _)| name.to_string())
        .unwrap_or_default();

    ComparisonRow {
        n: q.n,
        d: q.d,
        sigma2: q.sigma2,
        mu: q.mu,
        ours,
        schmidt_raw,
        schmidt_opt: Some(opt.proxy),
        bellare,
        bernstein,
        rosenthal,
        best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sharp_bounds::{classify_regime, Regime};

    fn q(n: u64, d: u32, sigma2: f64, mu: Option<f64>) -> BaselineQuery {
        BaselineQuery::new(n, d, sigma2, mu).unwrap()
    }

    #[test]
    fn query_validation() {
        assert!(BaselineQuery::new(10, 4, 0.5, Some(0.25)).is_err());
        assert!(BaselineQuery::new(10, 3, 0.5, None).is_err());
        assert!(BaselineQuery::new(10, 4, 0.0, None).is_err());
        assert!(BaselineQuery::new(10, 4, 0.5, Some(1.5)).is_err());
    }

    #[test]
    fn schmidt_raw_shape() {
        let base = q(10, 4, 0.1, None);
        assert!(schmidt_raw(&base, 0.5).is_err());
        let big = schmidt_raw(&base, 1e12).unwrap();
        let bigger = schmidt_raw(&base, 1e14).unwrap();
        assert!(bigger > big && bigger > 1e6);
        let tiny = q(1, 4, 1e-12, None);
        assert!(schmidt_raw(&tiny, 1e-9).unwrap() > schmidt_raw(&tiny, 1e-3).unwrap());
    }

    #[test]
    fn schmidt_raw_direct_evaluation() {
        // d = 4, C = d/36 so that sqrt(d/(36C)) = 1 and sqrt(d^3/(36C)) = 4.
        let d = 4u32;
        let c = d as f64 / 36.0;
        let base = q(1, d, 0.1, None);
        let direct = (2f64.sqrt() * 4f64.cosh() * (4.0 * c / std::f64::consts::E).powi(2)).powf(0.25);
        let v = schmidt_raw(&base, c).unwrap();
        assert!((v - direct).abs() < 1e-13 * direct);
    }

    #[test]
    fn cstar_anchor() {
        let t = schmidt_t_star();
        assert!((t.tanh() - 1.0 / t).abs() <= 1e-12);
        assert!((t - 1.19967864).abs() < 1e-7);
        for d in [2u32, 4, 8, 36, 80] {
            let c = schmidt_find_cstar(d);
            let scaled = c * 36.0 / d as f64;
            assert!((0.690..=0.700).contains(&scaled));
            assert_eq!(schmidt_find_cstar(2 * d), 2.0 * c);
            let at = schmidt_rewritten(d, c);
            assert!(schmidt_rewritten(d, 0.9 * c) > at);
            assert!(schmidt_rewritten(d, 1.1 * c) > at);
        }
        assert!((schmidt_find_cstar(36) - 0.6948).abs() < 1e-3);
    }

    #[test]
    fn schmidt_optimized_examples() {
        let big = q(1000, 2, 1.0, None);
        let opt = schmidt_optimized(&big);
        assert_eq!(opt.proxy, 2000f64.sqrt());
        assert_eq!(opt.c, 1000.0);
        assert!((0.25..=4.0).contains(&(opt.bound / opt.proxy)));
        let small = q(4, 16, 1e-6, None);
        let opt = schmidt_optimized(&small);
        assert_eq!(opt.proxy, 16.0);
        assert!((0.25..=4.0).contains(&(opt.bound / opt.proxy)));
    }

    #[test]
    fn bellare_examples() {
        let v = bellare_rompel(&q(30, 4, 0.5, Some(1.0))).unwrap();
        assert_eq!(v, 120f64.sqrt());
        assert_eq!(bellare_rompel(&q(30, 4, 1e-9, Some(1e-9))).unwrap(), (120.0f64).sqrt().min((120.0f64 * 1e-9 + 16.0).sqrt()));
        let v = bellare_rompel(&q(100, 4, 0.25, Some(0.25))).unwrap();
        assert_eq!(v, 116f64.sqrt());
        assert!(bellare_rompel(&q(100, 4, 0.25, None)).is_err());
    }

    #[test]
    fn bernstein_examples() {
        // n d sigma2 = d^2
        assert_eq!(bernstein_moment(&q(16, 4, 0.25, None)), 4.0);
        assert_eq!(bernstein_moment(&q(100, 4, 0.25, None)), 10.0);
        assert_eq!(bernstein_moment(&q(100, 4, 1e-12, None)), 4.0);
    }

    #[test]
    fn rosenthal_examples() {
        let r = rosenthal_moment(&q(4, 6, 0.25, None), None).unwrap();
        assert!((r.value - (6.0 + 6f64.sqrt())).abs() < 1e-12);
        let r = rosenthal_moment(&q(10, 2, 0.3, None), None).unwrap();
        assert!((r.value - (2.0 * 3f64.sqrt() + 6f64.sqrt())).abs() < 1e-12);
        let r = rosenthal_moment(&q(16, 4, 0.25, None), None).unwrap();
        assert!((r.value - (4.0 * 2f64.sqrt() + 4.0)).abs() < 1e-12);
        let m = [0.1; 16];
        let r = rosenthal_moment(&q(16, 4, 0.25, None), Some(&m)).unwrap();
        assert!((r.value - (4.0 * 1.6f64.powf(0.25) + 4.0)).abs() < 1e-12);
        assert!(rosenthal_moment(&q(16, 4, 0.25, None), Some(&m[..3])).is_err());
    }

    #[test]
    fn comparison_rows() {
        let sub = q(100, 4, 0.25, None);
        let row = compare_all(&sub);
        assert_eq!(row.best, "ours");
        assert_eq!(row.ours, row.bernstein);
        assert!(row.bellare.is_none());

        // Small variance: n sigma2 = e^{-2d}.
        let d = 8u32;
        let small = q(1, d, (-2.0 * d as f64).exp(), Some(0.5));
        let bq = BoundQuery::fully_moment_independent(1, small.sigma2, d).unwrap();
        assert_eq!(classify_regime(&bq), Regime::SmallVariance);
        let row = compare_all(&small);
        assert_eq!(row.best, "ours");
        let ours = row.ours.unwrap();
        for other in [row.schmidt_opt, row.bellare, row.bernstein, row.rosenthal] {
            assert!(ours < other.unwrap());
        }

        // Log-corrected: ours * log(d / (n sigma2)) equals the proxy d.
        let (n, d) = (10u64, 16u32);
        let sigma2 = d as f64 * (-5.0f64).exp() / n as f64;
        let row = compare_all(&q(n, d, sigma2, None));
        let ratio = row.schmidt_opt.unwrap() / (row.ours.unwrap() * 5.0);
        assert!((ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bellare_never_exceeds_sqrt_dn() {
        for n in [1u64, 3, 10, 100] {
            for d in [2u32, 4, 8] {
                for mu in [1e-6f64, 0.1, 0.5, 1.0] {
                    let v = bellare_rompel(&q(n, d, mu, Some(mu))).unwrap();
                    let dn = (d as f64 * n as f64).sqrt();
                    assert!(v <= dn);
                    let reaches = d as f64 * n as f64 * mu + (d * d) as f64 >= d as f64 * n as f64;
                    assert_eq!(v == dn, reaches);
                }
            }
        }
    }
}
