//! Exact integer and rational helpers: factorials, binomial and multinomial
//! coefficients, elementary symmetric polynomials and their means.
//!
//! Everything here is exact except [`stirling_estimate`], which exists only
//! for sanity checks against the exact factorials.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always stored in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

/// Factorials up to this bound are memoized by default.
pub const DEFAULT_FACTORIAL_CACHE_CAP: usize = 4096;

static FACTORIAL_CACHE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_FACTORIAL_CACHE_CAP);
static FACTORIALS: OnceLock<RwLock<Vec<BigUint>>> = OnceLock::new();

/// Changes the memoization bound for [`factorial`]. Already cached entries
/// are kept; larger arguments are computed without caching.
pub fn set_factorial_cache_cap(cap: usize) {
    FACTORIAL_CACHE_CAP.store(cap, Ordering::Relaxed);
}

/// Integer sequence `(j_1, ..., j_L)` indexing a multinomial coefficient.
/// Entries may be negative, in which case the coefficient is zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(entries: Vec<i64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("multi-index must have at least one entry"));
        }
        Ok(MultiIndex(entries))
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<&[i64]> for MultiIndex {
    fn from(entries: &[i64]) -> Self {
        assert!(!entries.is_empty(), "multi-index must have at least one entry");
        MultiIndex(entries.to_vec())
    }
}

pub fn factorial(m: u64) -> BigUint {
    let cap = FACTORIAL_CACHE_CAP.load(Ordering::Relaxed) as u64;
    if m > cap {
        return (1..=m).fold(BigUint::one(), |acc, i| acc * i);
    }
    let table = FACTORIALS.get_or_init(|| RwLock::new(vec![BigUint::one()]));
    {
        let cached = table.read().expect("factorial cache poisoned");
        if let Some(v) = cached.get(m as usize) {
            return v.clone();
        }
    }
    let mut cached = table.write().expect("factorial cache poisoned");
    while cached.len() <= m as usize {
        let next = cached.last().unwrap() * BigUint::from(cached.len());
        cached.push(next);
    }
    cached[m as usize].clone()
}

/// `d! / prod(j_i!)`, extended by zero when an entry is negative or the
/// entries do not sum to `d`.
pub fn multinomial(d: u64, j: &MultiIndex) -> BigUint {
    if j.entries().iter().any(|&x| x < 0) {
        return BigUint::zero();
    }
    let total: i128 = j.entries().iter().map(|&x| x as i128).sum();
    if total != d as i128 {
        return BigUint::zero();
    }
    j.entries()
        .iter()
        .fold(factorial(d), |acc, &x| acc / factorial(x as u64))
}

/// Binomial coefficient, zero outside `0 <= l <= n`.
pub fn binomial(n: u64, l: i64) -> BigUint {
    if l < 0 || l as u64 > n {
        return BigUint::zero();
    }
    let l = (l as u64).min(n - l as u64);
    let mut acc = BigUint::one();
    for i in 0..l {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// All elementary symmetric polynomials `Pi_0(u) = 1, Pi_1(u), ..., Pi_top(u)`,
/// accumulated one variable at a time. Degrees above `u.len()` are zero.
pub fn elementary_symmetric_upto(top: usize, u: &[Rational]) -> Vec<Rational> {
    let mut e = vec![Rational::zero(); top + 1];
    e[0] = Rational::one();
    for (seen, x) in u.iter().enumerate() {
        let hi = top.min(seen + 1);
        for deg in (1..=hi).rev() {
            let term = &e[deg - 1] * x;
            e[deg] += term;
        }
    }
    e
}

pub fn elementary_symmetric(l: usize, u: &[Rational]) -> Result<Rational> {
    check_degree(l, u.len())?;
    Ok(elementary_symmetric_upto(l, u).swap_remove(l))
}

/// Elementary symmetric mean `Pi_l(u) / C(n, l)`.
pub fn symmetric_mean(l: usize, u: &[Rational]) -> Result<Rational> {
    let pi = elementary_symmetric(l, u)?;
    let count = BigInt::from(binomial(u.len() as u64, l as i64));
    Ok(pi / Rational::from_integer(count))
}

fn check_degree(l: usize, n: usize) -> Result<()> {
    if l == 0 || l > n {
        return Err(Error::invalid(format!(
            "degree {l} outside [1, {n}] for {n} variables"
        )));
    }
    Ok(())
}

/// First-order Stirling estimate `sqrt(m) * (m/e)^m`. Floating point; never
/// used on exact paths.
pub fn stirling_estimate(m: u64) -> f64 {
    let m = m as f64;
    (0.5 * m.ln() + m * (m.ln() - 1.0)).exp()
}

/// Natural logarithm of a positive big integer, accurate to f64 precision
/// regardless of magnitude.
pub fn ln_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "logarithm of zero");
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational.
pub fn ln_rational(r: &Rational) -> f64 {
    assert!(r.is_positive(), "logarithm of a non-positive rational");
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

/// `r^(1/d)` for a non-negative rational, as a float.
pub fn rational_root(r: &Rational, d: u32) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    (ln_rational(r) / d as f64).exp()
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    let mag = ln_rational(&r.abs()).exp();
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

pub fn rational_from_u64(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Renders a rational as `"num/den"`; integers keep an explicit `/1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Fixed-point decimal rendering with `digits` fractional digits, rounded
/// half away from zero.
pub fn decimal_string(r: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = r.abs() * Rational::from_integer(scale.clone());
    let rounded = (scaled + Rational::new(BigInt::one(), BigInt::from(2))).floor();
    let q = rounded.to_integer();
    let (int_part, frac_part) = q.div_rem(&scale);
    let sign = if r.is_negative() && !q.is_zero() { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{int_part}");
    }
    format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = digits)
}

/// Parses `"num/den"`, an integer, or a decimal such as `"0.125"` or
/// `"1.5e-3"` into an exact rational. Decimals are converted through scaled
/// integers, never through binary floating point.
pub fn parse_rational(input: &str) -> Result<Rational> {
    let s = input.trim();
    let fail = |reason: &str| Error::Parse {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| fail("bad numerator"))?;
        let den: BigInt = den.trim().parse().map_err(|_| fail("bad denominator"))?;
        if den.is_zero() {
            return Err(fail("zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| fail("bad exponent"))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_digits, frac_digits) = body.split_once('.').unwrap_or((body, ""));
    if int_digits.is_empty() && frac_digits.is_empty() {
        return Err(fail("empty number"));
    }
    if !int_digits.chars().chain(frac_digits.chars()).all(|c| c.is_ascii_digit()) {
        return Err(fail("not a rational or decimal"));
    }
    let digits: BigInt = format!("0{int_digits}{frac_digits}").parse().unwrap();
    let scale = exponent - frac_digits.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rational::from_integer(digits * ten.pow(scale as u32))
    } else {
        Rational::new(digits, ten.pow((-scale) as u32))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}
