//! Exactly k-wise independent `{-1, 0, +1}` sequences from random
//! degree-`(k-1)` polynomials over `GF(p)`, with Monte Carlo and exhaustive
//! estimates of tails and moments of their sums.
//!
//! Randomness: coefficient vectors are drawn from `ChaCha8Rng`, seeded with
//! `seed_from_u64(seed)` and switched to stream `trial_index`, so every trial
//! is reproducible on its own and trials may run in any order.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{rational_to_f64, Rational};
use crate::distributions::{require_even, DiscretePmf};
use crate::error::{Error, Result};
use crate::sharp_bounds::{tail_bound, BoundQuery};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Largest number of polynomials enumerated by the exhaustive routines.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

/// Primes are kept below `2^32` so products fit in `u64`.
pub const MAX_PRIME: u64 = u32::MAX as u64;

pub const MIN_TRIALS: u64 = 10_000;

const BOOTSTRAP_RESAMPLES: usize = 200;

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p.is_multiple_of(2) {
        return p == 2;
    }
    let mut f = 3u64;
    while f * f <= p {
        if p.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KWiseFamily {
    pub prime: u64,
    pub k: u32,
    pub m_neg: u64,
    pub m_pos: u64,
    pub n: u64,
}

impl KWiseFamily {
    pub fn new(prime: u64, k: u32, m_neg: u64, m_pos: u64, n: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid(format!("k = {k}; k >= 2 required")));
        }
        if !is_prime(prime) || prime > MAX_PRIME {
            return Err(Error::invalid(format!("p = {prime} is not a prime below 2^32")));
        }
        if n == 0 || n > prime {
            return Err(Error::invalid(format!("n = {n} must lie in [1, p = {prime}]")));
        }
        if m_neg.checked_add(m_pos).is_none_or(|m| m > prime) {
            return Err(Error::invalid("thresholds exceed the field size"));
        }
        Ok(KWiseFamily { prime, k, m_neg, m_pos, n })
    }

    fn p_rational(&self, count: u64) -> Rational {
        Rational::new(BigInt::from(count), BigInt::from(self.prime))
    }

    /// Law of each position.
    pub fn marginal(&self) -> DiscretePmf {
        DiscretePmf::new(vec![
            (Rational::from_integer((-1).into()), self.p_rational(self.m_neg)),
            (Rational::zero(), self.p_rational(self.prime - self.m_neg - self.m_pos)),
            (Rational::from_integer(1.into()), self.p_rational(self.m_pos)),
        ])
        .expect("threshold masses sum to one")
    }

    /// Realized variance; `2m/p` for symmetric thresholds.
    pub fn sigma2_hat(&self) -> Rational {
        self.marginal().variance()
    }

    /// Largest even `d <= k`.
    pub fn moment_order(&self) -> u32 {
        self.k - self.k % 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.m_neg == self.m_pos
    }

    #[inline]
    fn symbol(&self, v: u64) -> i64 {
        if v < self.m_neg {
            -1
        } else if v >= self.prime - self.m_pos {
            1
        } else {
            0
        }
    }

    #[inline]
    fn eval(&self, coeffs: &[u64], x: u64) -> u64 {
        coeffs.iter().rev().fold(0u64, |acc, &c| (acc * x + c) % self.prime)
    }

    /// `sum_i symbol(h(i))` over positions `1..=n`.
    pub fn sum_for(&self, coeffs: &[u64]) -> i64 {
        (1..=self.n)
            .map(|i| self.symbol(self.eval(coeffs, i % self.prime)))
            .sum()
    }

    fn draw_coeffs(&self, rng: &mut ChaCha8Rng, buf: &mut [u64]) {
        for c in buf.iter_mut() {
            *c = rng.gen_range(0..self.prime);
        }
    }

    pub fn polynomial_count(&self) -> Option<u64> {
        self.prime.checked_pow(self.k)
    }

    /// Coefficients of the `index`-th polynomial, base-`p` digits.
    fn coeffs_of(&self, mut index: u64, buf: &mut [u64]) {
        for c in buf.iter_mut() {
            *c = index % self.prime;
            index /= self.prime;
        }
    }
}

/// The family for `sigma2` with symmetric thresholds `m = round(p sigma2 / 2)`,
/// capped at `floor(p/2)`.
pub fn build_family(n: u64, k: u32, sigma2: f64, p: u64) -> Result<KWiseFamily> {
    if !(sigma2 > 0.0 && sigma2 <= 1.0) {
        return Err(Error::invalid(format!("sigma2 = {sigma2} must lie in (0, 1]")));
    }
    if p < n {
        return Err(Error::invalid(format!("p = {p} must be at least n = {n}")));
    }
    let m = ((p as f64 * sigma2 / 2.0).round() as u64).min(p / 2);
    KWiseFamily::new(p, k, m, m, n)
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One draw of the sum, determined by `seed`.
pub fn sample_sum(family: &KWiseFamily, seed: u64) -> i64 {
    let mut coeffs = vec![0u64; family.k as usize];
    family.draw_coeffs(&mut ChaCha8Rng::seed_from_u64(seed), &mut coeffs);
    family.sum_for(&coeffs)
}

/// Counts of `S = s` at index `s + n` over `trials` seeded draws.
pub fn sample_histogram(family: &KWiseFamily, trials: u64, seed: u64) -> Vec<u64> {
    let width = 2 * family.n as usize + 1;
    (0..trials)
        .into_par_iter()
        .fold(
            || (vec![0u64; width], vec![0u64; family.k as usize]),
            |(mut hist, mut coeffs), trial| {
                family.draw_coeffs(&mut trial_rng(seed, trial), &mut coeffs);
                hist[(family.sum_for(&coeffs) + family.n as i64) as usize] += 1;
                (hist, coeffs)
            },
        )
        .map(|(hist, _)| hist)
        .reduce(|| vec![0u64; width], add_histograms)
}

/// Counts of `S = s` over every polynomial of degree below `k`.
pub fn exhaustive_histogram(family: &KWiseFamily) -> Result<Vec<u64>> {
    let total = exhaustive_count(family)?;
    let width = 2 * family.n as usize + 1;
    Ok((0..total)
        .into_par_iter()
        .fold(
            || (vec![0u64; width], vec![0u64; family.k as usize]),
            |(mut hist, mut coeffs), index| {
                family.coeffs_of(index, &mut coeffs);
                hist[(family.sum_for(&coeffs) + family.n as i64) as usize] += 1;
                (hist, coeffs)
            },
        )
        .map(|(hist, _)| hist)
        .reduce(|| vec![0u64; width], add_histograms))
}

fn add_histograms(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

fn exhaustive_count(family: &KWiseFamily) -> Result<u64> {
    match family.polynomial_count() {
        Some(c) if c <= EXHAUSTIVE_LIMIT => Ok(c),
        _ => Err(Error::invalid(format!(
            "p^k = {}^{} exceeds the exhaustive limit {EXHAUSTIVE_LIMIT}",
            family.prime, family.k
        ))),
    }
}

/// Count of `|s| > t` in a histogram indexed by `s + n`.
fn count_beyond(hist: &[u64], n: u64, t: f64) -> u64 {
    hist.iter()
        .enumerate()
        .filter(|(i, _)| (*i as f64 - n as f64).abs() > t)
        .map(|(_, c)| c)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilsonInterval {
    pub low: f64,
    pub high: f64,
    pub halfwidth: f64,
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> WilsonInterval {
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let halfwidth = WILSON_Z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    WilsonInterval {
        low: (center - halfwidth).max(0.0),
        high: (center + halfwidth).min(1.0),
        halfwidth,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub t: f64,
    /// Fraction of draws with `|S - ES| > t`.
    pub empirical: f64,
    pub trials: u64,
    pub wilson_halfwidth: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// `min(1, (c M / t)^d)` at `sigma2_hat` and `d` the largest even `<= k`.
    pub bound: f64,
    pub c: f64,
    pub d: u32,
    pub sigma2_hat: f64,
    /// Set when every polynomial was enumerated.
    pub exact: bool,
}

/// Tail bound at the family's parameters; the degenerate `sigma2_hat = 0`
/// law is the point mass at 0.
pub fn family_tail_bound(family: &KWiseFamily, t: f64, c: f64) -> Result<f64> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::invalid(format!("t = {t} must be a non-negative number")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let s2 = rational_to_f64(&family.sigma2_hat());
    if s2 == 0.0 {
        return Ok(0.0);
    }
    let d = family.moment_order();
    let q = BoundQuery::new(family.n, s2, d, family.k)?;
    tail_bound(&q, t, c)
}

fn require_symmetric(family: &KWiseFamily) -> Result<()> {
    if !family.is_symmetric() {
        return Err(Error::invalid("tail estimates need symmetric thresholds (ES = 0)"));
    }
    Ok(())
}

fn estimates_from_histogram(
    family: &KWiseFamily,
    hist: &[u64],
    t_list: &[f64],
    c: f64,
    exact: bool,
) -> Result<Vec<TailEstimate>> {
    let trials: u64 = hist.iter().sum();
    let s2 = rational_to_f64(&family.sigma2_hat());
    t_list
        .iter()
        .map(|&t| {
            let bound = family_tail_bound(family, t, c)?;
            let hits = count_beyond(hist, family.n, t);
            let w = if exact {
                let p = hits as f64 / trials as f64;
                WilsonInterval { low: p, high: p, halfwidth: 0.0 }
            } else {
                wilson_interval(hits, trials)
            };
            Ok(TailEstimate {
                t,
                empirical: hits as f64 / trials as f64,
                trials,
                wilson_halfwidth: w.halfwidth,
                wilson_low: w.low,
                wilson_high: w.high,
                bound,
                c,
                d: family.moment_order(),
                sigma2_hat: s2,
                exact,
            })
        })
        .collect()
}

/// Monte Carlo estimates of `Pr[|S| > t]` for every `t` in `t_list`, sharing
/// one set of draws.
pub fn empirical_tails(
    family: &KWiseFamily,
    t_list: &[f64],
    trials: u64,
    seed: u64,
    c: f64,
) -> Result<Vec<TailEstimate>> {
    require_symmetric(family)?;
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!("trials = {trials}; at least {MIN_TRIALS} required")));
    }
    let hist = sample_histogram(family, trials, seed);
    estimates_from_histogram(family, &hist, t_list, c, false)
}

pub fn empirical_tail(family: &KWiseFamily, t: f64, trials: u64, seed: u64, c: f64) -> Result<TailEstimate> {
    Ok(empirical_tails(family, &[t], trials, seed, c)?.remove(0))
}

/// Exact tail probabilities over all `p^k` polynomials.
pub fn exhaustive_tails(family: &KWiseFamily, t_list: &[f64], c: f64) -> Result<Vec<TailEstimate>> {
    require_symmetric(family)?;
    let hist = exhaustive_histogram(family)?;
    estimates_from_histogram(family, &hist, t_list, c, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub d: u32,
    /// Sample mean of `S^d`.
    pub moment: f64,
    pub moment_se: f64,
    /// `moment^{1/d}`.
    pub norm: f64,
    /// Bootstrap standard error of `norm`.
    pub norm_se: f64,
    pub trials: u64,
}

fn check_moment_order(family: &KWiseFamily, d: u32) -> Result<()> {
    require_even(d)?;
    if d > family.k {
        return Err(Error::invalid(format!(
            "d = {d} exceeds k = {}; the sum is not moment-equivalent to the independent one",
            family.k
        )));
    }
    Ok(())
}

/// Monte Carlo `||S||_d` for even `d <= k`, with bootstrap standard errors.
pub fn empirical_moment(family: &KWiseFamily, d: u32, trials: u64, seed: u64) -> Result<MomentEstimate> {
    check_moment_order(family, d)?;
    require_symmetric(family)?;
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let hist = sample_histogram(family, trials, seed);
    let n = family.n as i64;
    let powers: Vec<f64> = (0..hist.len()).map(|i| ((i as i64 - n) as f64).powi(d as i32)).collect();
    let moment_of = |h: &[u64], total: u64| -> f64 {
        h.iter().zip(&powers).map(|(&c, &v)| c as f64 * v).sum::<f64>() / total as f64
    };
    let moment = moment_of(&hist, trials);

    // Resample from the empirical law via its cumulative counts.
    let cumulative: Vec<u64> = hist
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    let mut rng = trial_rng(seed, u64::MAX);
    let mut norms = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut moments = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut resample = vec![0u64; hist.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        resample.iter_mut().for_each(|c| *c = 0);
        for _ in 0..trials {
            let u = rng.gen_range(0..trials);
            resample[cumulative.partition_point(|&c| c <= u)] += 1;
        }
        let m = moment_of(&resample, trials);
        moments.push(m);
        norms.push(m.powf(1.0 / d as f64));
    }
    Ok(MomentEstimate {
        d,
        moment,
        moment_se: std_dev(&moments),
        norm: moment.powf(1.0 / d as f64),
        norm_se: std_dev(&norms),
        trials,
    })
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `E(S - ES)^d` averaged exactly over all `p^k` polynomials.
pub fn exhaustive_moment(family: &KWiseFamily, d: u32) -> Result<Rational> {
    check_moment_order(family, d)?;
    Ok(exhaustive_law(family)?.central_moment(d))
}

/// Law of `S` over all `p^k` polynomials.
pub fn exhaustive_law(family: &KWiseFamily) -> Result<DiscretePmf> {
    let hist = exhaustive_histogram(family)?;
    let total: u64 = hist.iter().sum();
    let atoms = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            (
                Rational::from_integer(BigInt::from(i as i64 - family.n as i64)),
                Rational::new(BigInt::from(c), BigInt::from(total)),
            )
        })
        .collect();
    DiscretePmf::with_extended_support(atoms)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniformityReport {
    pub subsets: u64,
    pub polynomials: u64,
    /// Subsets whose value tuples were not hit exactly once each.
    pub failures: Vec<Vec<u64>>,
}

impl UniformityReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

fn k_subsets(n: u64, k: usize) -> Vec<Vec<u64>> {
    fn rec(start: u64, n: u64, k: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            if n - i + 1 < (k - cur.len()) as u64 {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Enumerates every polynomial and checks that on each `k`-subset of positions
/// every tuple in `GF(p)^k` occurs exactly once.
pub fn check_kwise_uniformity(family: &KWiseFamily) -> Result<UniformityReport> {
    let total = exhaustive_count(family)?;
    let k = family.k as usize;
    if (family.n as usize) < k {
        return Ok(UniformityReport { subsets: 0, polynomials: total, failures: vec![] });
    }
    let n = family.n as usize;
    // values[index * n + (i - 1)] = h_index(i).
    let values: Vec<u32> = (0..total)
        .into_par_iter()
        .flat_map_iter(|index| {
            let mut coeffs = vec![0u64; k];
            family.coeffs_of(index, &mut coeffs);
            (1..=family.n)
                .map(|i| family.eval(&coeffs, i % family.prime) as u32)
                .collect::<Vec<_>>()
        })
        .collect();
    let subsets = k_subsets(family.n, k);
    let p = family.prime;
    let failures: Vec<Vec<u64>> = subsets
        .par_iter()
        .filter(|subset| {
            let mut hits = vec![0u32; total as usize];
            for row in values.chunks_exact(n) {
                let code = subset
                    .iter()
                    .fold(0u64, |acc, &i| acc * p + row[(i - 1) as usize] as u64);
                hits[code as usize] += 1;
            }
            hits.iter().any(|&h| h != 1)
        })
        .cloned()
        .collect();
    Ok(UniformityReport {
        subsets: subsets.len() as u64,
        polynomials: total,
        failures,
    })
}

/// `d`-th central moment of the sum of `n` independent marginals, via the
/// convolution oracle.
pub fn independent_moment(family: &KWiseFamily, d: u32) -> Result<Rational> {
    crate::oracle::moment_of_sum(&vec![family.marginal(); family.n as usize], d)
}

pub fn sigma2_hat_f64(family: &KWiseFamily) -> f64 {
    family.sigma2_hat().to_f64().unwrap_or(f64::NAN)
}
