//! Finite discrete laws with exact rational atoms, plus the named families
//! used throughout the crate: the extreme three-point law, Bernoulli,
//! binomial and their symmetrizations.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::combinatorics::{
    binomial, format_rational, parse_rational, rational_to_f64, ratio, Rational,
};
use crate::error::{Error, Result};

/// Whether a PMF is held to the `[-1, 1]` support constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// Every atom lies in `[-1, 1]`.
    Unit,
    /// Atoms may lie anywhere (binomial laws, symmetrized laws, sums).
    Extended,
}

/// A finite discrete distribution.
///
/// Atoms are kept sorted by value with duplicates merged and zero-mass atoms
/// dropped, so two PMFs describing the same law compare equal structurally.
#[derive(Debug, Clone)]
pub struct DiscretePmf {
    atoms: Vec<(Rational, Rational)>,
    support: Support,
}

impl PartialEq for DiscretePmf {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
    }
}

impl Eq for DiscretePmf {}

impl DiscretePmf {
    /// Builds a PMF whose values must lie in `[-1, 1]`.
    pub fn new(atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        let one = Rational::one();
        if let Some((v, _)) = atoms.iter().find(|(v, _)| v.abs() > one) {
            return Err(Error::invalid(format!(
                "atom value {} lies outside [-1, 1]",
                format_rational(v)
            )));
        }
        Self::build(atoms, Support::Unit)
    }

    /// Builds a PMF without the `[-1, 1]` constraint. Majorization checks
    /// reject PMFs built this way.
    pub fn with_extended_support(atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        Self::build(atoms, Support::Extended)
    }

    /// Unit support when all values happen to lie in `[-1, 1]`, extended
    /// otherwise.
    pub(crate) fn from_values_auto(atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        let one = Rational::one();
        let support = if atoms.iter().all(|(v, _)| v.abs() <= one) {
            Support::Unit
        } else {
            Support::Extended
        };
        Self::build(atoms, support)
    }

    fn build(atoms: Vec<(Rational, Rational)>, support: Support) -> Result<Self> {
        let mut merged: BTreeMap<Rational, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        for (v, p) in atoms {
            if p.is_negative() {
                return Err(Error::invalid(format!(
                    "negative probability {}",
                    format_rational(&p)
                )));
            }
            total += &p;
            *merged.entry(v).or_insert_with(Rational::zero) += p;
        }
        if !total.is_one() {
            return Err(Error::invalid(format!(
                "probabilities sum to {}, not 1",
                format_rational(&total)
            )));
        }
        let atoms = merged.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Ok(DiscretePmf { atoms, support })
    }

    pub fn point_mass(value: Rational) -> Result<Self> {
        Self::new(vec![(value, Rational::one())])
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn is_unit_support(&self) -> bool {
        self.support == Support::Unit
    }

    /// Probability of exactly `value`.
    pub fn prob(&self, value: &Rational) -> Rational {
        self.atoms
            .binary_search_by(|(v, _)| v.cmp(value))
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| Rational::zero())
    }

    /// `pmf(-v) == pmf(v)` for every atom.
    pub fn is_symmetric(&self) -> bool {
        let n = self.atoms.len();
        (0..n).all(|i| {
            let (a, pa) = &self.atoms[i];
            let (b, pb) = &self.atoms[n - 1 - i];
            *a == -b && pa == pb
        })
    }

    pub fn mean(&self) -> Rational {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    pub fn raw_moment(&self, r: u32) -> Rational {
        self.atoms
            .iter()
            .map(|(v, p)| num_traits::pow(v.clone(), r as usize) * p)
            .sum()
    }

    /// `E (X - EX)^r` for any order `r`.
    pub fn central_moment(&self, r: u32) -> Rational {
        let mu = self.mean();
        self.atoms
            .iter()
            .map(|(v, p)| num_traits::pow(v - &mu, r as usize) * p)
            .sum()
    }

    pub fn variance(&self) -> Rational {
        self.central_moment(2)
    }

    /// `E|X - EX|^d` for even `d`.
    pub fn central_abs_moment_even(&self, d: u32) -> Result<Rational> {
        require_even(d)?;
        Ok(self.central_moment(d))
    }

    /// Law of `X - X'` for independent copies `X, X'`. The result is
    /// symmetric; its support may reach `[-2, 2]`.
    pub fn symmetrize(&self) -> DiscretePmf {
        let mut out = Vec::with_capacity(self.atoms.len() * self.atoms.len());
        for (a, pa) in &self.atoms {
            for (b, pb) in &self.atoms {
                out.push((a - b, pa * pb));
            }
        }
        Self::from_values_auto(out).expect("product of two PMFs is a PMF")
    }

    /// Law of `X - EX`.
    pub fn centered(&self) -> DiscretePmf {
        let mu = self.mean();
        let atoms = self.atoms.iter().map(|(v, p)| (v - &mu, p.clone())).collect();
        Self::with_extended_support(atoms).expect("shifting preserves total mass")
    }
}

pub(crate) fn require_even(d: u32) -> Result<()> {
    if d == 0 || !d.is_multiple_of(2) {
        return Err(Error::invalid("d must be even"));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct AtomRecord {
    value: String,
    prob: String,
}

impl Serialize for DiscretePmf {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let records: Vec<AtomRecord> = self
            .atoms
            .iter()
            .map(|(v, p)| AtomRecord {
                value: format_rational(v),
                prob: format_rational(p),
            })
            .collect();
        records.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DiscretePmf {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let records = Vec::<AtomRecord>::deserialize(deserializer)?;
        let atoms = records
            .iter()
            .map(|r| Ok((parse_rational(&r.value)?, parse_rational(&r.prob)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        DiscretePmf::from_values_auto(atoms).map_err(D::Error::custom)
    }
}

/// Variance parameter of the extreme three-point law, `0 <= sigma2 <= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreePointParams {
    sigma2: Rational,
}

impl ThreePointParams {
    pub fn new(sigma2: Rational) -> Result<Self> {
        if sigma2.is_negative() || sigma2 > Rational::one() {
            return Err(Error::invalid(format!(
                "sigma2 = {} must lie in [0, 1]",
                format_rational(&sigma2)
            )));
        }
        Ok(ThreePointParams { sigma2 })
    }

    pub fn sigma2(&self) -> &Rational {
        &self.sigma2
    }

    pub fn pmf(&self) -> DiscretePmf {
        let half_mass = &self.sigma2 / Rational::from_integer(BigInt::from(2));
        DiscretePmf::new(vec![
            (ratio(-1, 1), half_mass.clone()),
            (Rational::zero(), Rational::one() - &self.sigma2),
            (ratio(1, 1), half_mass),
        ])
        .expect("three-point law is a valid PMF")
    }
}

/// The law on `{-1, 0, +1}` with masses `(sigma2/2, 1 - sigma2, sigma2/2)`.
pub fn three_point(sigma2: &Rational) -> Result<DiscretePmf> {
    Ok(ThreePointParams::new(sigma2.clone())?.pmf())
}

/// Bernoulli parameter `p` of the pair `B - B'`, with `0 <= p <= 1/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliPair {
    p: Rational,
}

impl BernoulliPair {
    pub fn new(p: Rational) -> Result<Self> {
        if p.is_negative() || p > ratio(1, 2) {
            return Err(Error::invalid(format!(
                "p = {} must lie in [0, 1/2]",
                format_rational(&p)
            )));
        }
        Ok(BernoulliPair { p })
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    /// Variance `2p(1-p)` of `B - B'`.
    pub fn sigma2(&self) -> Rational {
        ratio(2, 1) * &self.p * (Rational::one() - &self.p)
    }

    pub fn difference_law(&self) -> DiscretePmf {
        bernoulli(&self.p).expect("p in [0, 1/2]").symmetrize()
    }
}

/// Bernoulli law on `{0, 1}`.
pub fn bernoulli(p: &Rational) -> Result<DiscretePmf> {
    check_probability(p)?;
    DiscretePmf::new(vec![
        (Rational::zero(), Rational::one() - p),
        (Rational::one(), p.clone()),
    ])
}

/// Binomial law on `{0, ..., n}`; exempt from the `[-1, 1]` constraint.
pub fn binomial_pmf(n: u64, p: &Rational) -> Result<DiscretePmf> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    check_probability(p)?;
    let q = Rational::one() - p;
    let atoms = (0..=n)
        .map(|i| {
            let c = Rational::from_integer(BigInt::from(binomial(n, i as i64)));
            let mass = c
                * num_traits::pow(p.clone(), i as usize)
                * num_traits::pow(q.clone(), (n - i) as usize);
            (Rational::from_integer(BigInt::from(i)), mass)
        })
        .collect();
    DiscretePmf::with_extended_support(atoms)
}

fn check_probability(p: &Rational) -> Result<()> {
    if p.is_negative() || *p > Rational::one() {
        return Err(Error::invalid(format!(
            "probability {} outside [0, 1]",
            format_rational(p)
        )));
    }
    Ok(())
}

/// Solves `2p(1-p) = sigma2` for `p <= 1/2`.
///
/// Uses the cancellation-free form `sigma2 / (1 + sqrt(1 - 2 sigma2))`.
/// No solution exists for `sigma2 > 1/2`.
pub fn bernoulli_p_from_sigma2(sigma2: &Rational) -> Result<f64> {
    if sigma2.is_negative() || *sigma2 > ratio(1, 2) {
        return Err(Error::invalid(format!(
            "sigma2 = {} must lie in [0, 1/2] for a symmetrized Bernoulli representation",
            format_rational(sigma2)
        )));
    }
    let s = rational_to_f64(sigma2);
    Ok(s / (1.0 + (1.0 - 2.0 * s).sqrt()))
}

/// Exact check that a rational `p` solves `2p(1-p) = sigma2` with `p <= 1/2`.
pub fn is_bernoulli_p_for_sigma2(p: &Rational, sigma2: &Rational) -> bool {
    BernoulliPair::new(p.clone())
        .map(|pair| pair.sigma2() == *sigma2)
        .unwrap_or(false)
}
