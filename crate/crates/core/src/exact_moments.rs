//! Closed-form even moments of sums of symmetric `{-1, 0, 1}`-valued
//! variables.
//!
//! For independent symmetric `Z_i` on `{-1, 0, 1}` with variances `s_i`,
//!
//! ```text
//! E (sum Z_i)^d = sum_{l=1}^{d/2} F(d, l) * Pi_l(s_1, ..., s_n)
//! ```
//!
//! where `F(d, l)` sums `d! / prod (2 j_i)!` over compositions of `d/2` into
//! `l` positive parts and `Pi_l` is the `l`-th elementary symmetric
//! polynomial. With equal variances `Pi_l = C(n, l) s^l`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::combinatorics::{
    binomial, decimal_string, elementary_symmetric_upto, factorial, format_rational,
    rational_root, Rational,
};
use crate::distributions::{require_even, BernoulliPair, DiscretePmf};
use crate::error::{Error, Result};

/// Default number of fractional digits in decimal renderings.
pub const DEFAULT_DIGITS: usize = 12;

/// `(n, d, sigma2)` for a sum of `n` iid three-point variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentQuery {
    n: u64,
    d: u32,
    sigma2: Rational,
}

impl MomentQuery {
    pub fn new(n: u64, d: u32, sigma2: Rational) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        require_even(d)?;
        check_variance(&sigma2)?;
        Ok(MomentQuery { n, d, sigma2 })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn sigma2(&self) -> &Rational {
        &self.sigma2
    }
}

/// Per-summand variances for the heterogeneous formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeterogeneousQuery {
    d: u32,
    sigma2s: Vec<Rational>,
}

impl HeterogeneousQuery {
    pub fn new(d: u32, sigma2s: Vec<Rational>) -> Result<Self> {
        require_even(d)?;
        if sigma2s.is_empty() {
            return Err(Error::invalid("at least one variance is required"));
        }
        for s in &sigma2s {
            check_variance(s)?;
        }
        Ok(HeterogeneousQuery { d, sigma2s })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn sigma2s(&self) -> &[Rational] {
        &self.sigma2s
    }
}

fn check_variance(s: &Rational) -> Result<()> {
    if s.is_negative() || *s > Rational::one() {
        return Err(Error::invalid(format!(
            "sigma2 = {} must lie in [0, 1]",
            format_rational(s)
        )));
    }
    Ok(())
}

/// `G[h][parts]`: sum over compositions of `h` into `parts` positive parts of
/// `prod 1/(2 j_i)!`. Rows are independent of `d`, so one table serves all
/// moment orders; it only ever grows.
static HALF_DEGREE_TABLE: OnceLock<RwLock<Vec<Vec<Rational>>>> = OnceLock::new();

fn half_degree_row(h: usize) -> Vec<Rational> {
    let table = HALF_DEGREE_TABLE.get_or_init(|| RwLock::new(vec![vec![Rational::one()]]));
    if let Some(row) = table.read().expect("F cache poisoned").get(h) {
        return row.clone();
    }
    let mut rows = table.write().expect("F cache poisoned");
    let inverse_even_factorials: Vec<Rational> = (0..=h)
        .map(|j| Rational::new(BigInt::one(), BigInt::from(factorial(2 * j as u64))))
        .collect();
    while rows.len() <= h {
        let cur = rows.len();
        let mut row = vec![Rational::zero(); cur + 1];
        for (parts, slot) in row.iter_mut().enumerate().skip(1) {
            let mut acc = Rational::zero();
            for j in 1..=(cur + 1 - parts) {
                let prev = &rows[cur - j];
                if let Some(g) = prev.get(parts - 1) {
                    if !g.is_zero() {
                        acc += g * &inverse_even_factorials[j];
                    }
                }
            }
            *slot = acc;
        }
        rows.push(row);
    }
    rows[h].clone()
}

static F_CACHE: OnceLock<RwLock<HashMap<u32, Arc<Vec<BigUint>>>>> = OnceLock::new();

/// `[F(d, 1), ..., F(d, d/2)]`, memoized per `d`.
pub fn composition_sums(d: u32) -> Result<Arc<Vec<BigUint>>> {
    require_even(d)?;
    let cache = F_CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(v) = cache.read().expect("F cache poisoned").get(&d) {
        return Ok(v.clone());
    }
    let h = (d / 2) as usize;
    let row = half_degree_row(h);
    let d_factorial = Rational::from_integer(BigInt::from(factorial(d as u64)));
    let values: Vec<BigUint> = (1..=h)
        .map(|l| {
            let f = &row[l] * &d_factorial;
            assert!(f.is_integer(), "F(d, l) must be an integer");
            f.to_integer().to_biguint().expect("F is non-negative")
        })
        .collect();
    let values = Arc::new(values);
    cache
        .write()
        .expect("F cache poisoned")
        .insert(d, values.clone());
    Ok(values)
}

/// `F(d, l) = sum over (j_1..j_l) >= 1, sum j = d/2, of d! / prod (2 j_i)!`.
pub fn composition_sum_f(d: u32, l: u32) -> Result<BigUint> {
    require_even(d)?;
    if l == 0 || l > d / 2 {
        return Err(Error::invalid(format!("l = {l} outside [1, {}]", d / 2)));
    }
    Ok(composition_sums(d)?[(l - 1) as usize].clone())
}

/// Exact `E (Z_1 + ... + Z_n)^d` for iid three-point `Z_i` with variance
/// `sigma2`.
pub fn exact_moment_iid_threepoint(q: &MomentQuery) -> Rational {
    let f = composition_sums(q.d).expect("query validated");
    let mut power = Rational::one();
    let mut total = Rational::zero();
    for (idx, f_l) in f.iter().enumerate() {
        let l = idx as i64 + 1;
        power *= &q.sigma2;
        let c = binomial(q.n, l);
        if c.is_zero() {
            break;
        }
        let coeff = BigInt::from(f_l * c);
        total += &power * Rational::from_integer(coeff);
    }
    total
}

/// Exact `E (Z_1 + ... + Z_n)^d` for independent symmetric `{-1, 0, 1}`
/// variables with the given variances.
pub fn exact_moment_het_threepoint(q: &HeterogeneousQuery) -> Rational {
    het_expression(q.d, &q.sigma2s)
}

fn het_expression(d: u32, variances: &[Rational]) -> Rational {
    let f = composition_sums(d).expect("validated even d");
    let pi = elementary_symmetric_upto(f.len(), variances);
    f.iter()
        .zip(pi.iter().skip(1))
        .map(|(f_l, pi_l)| pi_l * Rational::from_integer(BigInt::from(f_l.clone())))
        .sum()
}

/// Upper bound on `E (sum Z_i)^d` for independent symmetric summands with
/// values in `[-1, 1]`; exact only when every summand lives on `{-1, 0, 1}`.
pub fn upper_bound_het(components: &[DiscretePmf], d: u32) -> Result<Rational> {
    require_even(d)?;
    if components.is_empty() {
        return Err(Error::invalid("at least one component is required"));
    }
    let mut variances = Vec::with_capacity(components.len());
    for c in components {
        if !c.is_unit_support() || !c.is_symmetric() {
            return Err(Error::invalid(
                "components must be symmetric with support in [-1, 1]",
            ));
        }
        variances.push(c.variance());
    }
    Ok(het_expression(d, &variances))
}

/// Exact `E (S - S')^d` for `S, S'` iid `Binom(n, p)`, `p <= 1/2`.
pub fn exact_moment_symmetrized_binomial(n: u64, p: &Rational, d: u32) -> Result<Rational> {
    let pair = BernoulliPair::new(p.clone())?;
    let q = MomentQuery::new(n, d, pair.sigma2())?;
    Ok(exact_moment_iid_threepoint(&q))
}

/// An exact moment together with its decimal renderings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderedMoment {
    pub exact: String,
    pub decimal: String,
    pub dth_root_decimal: String,
}

pub fn render_moment(value: &Rational, d: u32, digits: usize) -> RenderedMoment {
    let root = rational_root(value, d);
    RenderedMoment {
        exact: format_rational(value),
        decimal: decimal_string(value, digits),
        dth_root_decimal: format!("{root:.digits$}"),
    }
}
