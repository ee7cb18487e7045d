//! Ground truth by brute force: exact convolution of independent discrete
//! laws, and the majorization and symmetrization checks built on it.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::combinatorics::Rational;
use crate::distributions::{require_even, three_point, DiscretePmf};
use crate::error::{Error, Result};

/// Default cap on the width of the intermediate integer grid.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// Law of an independent sum, together with its summands.
#[derive(Debug, Clone, PartialEq)]
pub struct SumLaw {
    pub pmf: DiscretePmf,
    pub components: Vec<DiscretePmf>,
}

impl SumLaw {
    pub fn mean(&self) -> Rational {
        self.pmf.mean()
    }

    /// `E(S - ES)^r`.
    pub fn central_moment(&self, r: u32) -> Rational {
        self.pmf.central_moment(r)
    }
}

pub fn convolve_sum(components: &[DiscretePmf]) -> Result<SumLaw> {
    convolve_sum_capped(components, DEFAULT_SUPPORT_CAP)
}

/// Iterated convolution on the grid `Z / L`, where `L` is the lcm of all atom
/// denominators. Fails once the running grid would exceed `cap` cells.
pub fn convolve_sum_capped(components: &[DiscretePmf], cap: usize) -> Result<SumLaw> {
    let scale = components
        .iter()
        .flat_map(|c| c.atoms().iter().map(|(v, _)| v.denom().clone()))
        .fold(BigInt::one(), |acc, d| acc.lcm(&d));
    let scale_r = Rational::from_integer(scale.clone());
    let to_index = |v: &Rational| -> Result<i64> {
        (v * &scale_r)
            .to_integer()
            .to_i64()
            .ok_or_else(|| Error::invalid("atom value too large for the integer grid"))
    };

    // Running law: masses[i] is the mass at (lo + i) / L.
    let mut lo: i64 = 0;
    let mut masses: Vec<Rational> = vec![Rational::one()];
    for c in components {
        let atoms = c
            .atoms()
            .iter()
            .map(|(v, p)| Ok((to_index(v)?, p)))
            .collect::<Result<Vec<_>>>()?;
        let (c_lo, c_hi) = match (atoms.first(), atoms.last()) {
            (Some(a), Some(b)) => (a.0, b.0),
            _ => return Err(Error::invalid("component has no atoms")),
        };
        let width = (masses.len() as u128) + (c_hi - c_lo) as u128;
        if width > cap as u128 {
            return Err(Error::SupportCap { size: width as usize, cap });
        }
        let mut next = vec![Rational::zero(); width as usize];
        for (i, m) in masses.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            for (k, p) in &atoms {
                next[i + (k - c_lo) as usize] += m * *p;
            }
        }
        lo += c_lo;
        masses = next;
    }

    let atoms = masses
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_zero())
        .map(|(i, m)| {
            let v = Rational::new(BigInt::from(lo + i as i64), scale.clone());
            (v, m)
        })
        .collect();
    Ok(SumLaw {
        pmf: DiscretePmf::from_values_auto(atoms)?,
        components: components.to_vec(),
    })
}

/// `E(S - ES)^d` for the independent sum of `components`.
pub fn moment_of_sum(components: &[DiscretePmf], d: u32) -> Result<Rational> {
    require_even(d)?;
    Ok(convolve_sum(components)?.central_moment(d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorizationReport {
    /// `E(sum Z_i)^d`.
    pub lhs: Rational,
    /// `E(sum Z'_i)^d` for iid three-point `Z'_i`.
    pub rhs: Rational,
    pub holds: bool,
    pub equal: bool,
    /// Average variance of the inputs.
    pub sigma2: Rational,
}

/// Compares the independent sum of symmetric `[-1, 1]` laws with the sum of
/// iid three-point laws of the same average variance.
pub fn check_majorization(components: &[DiscretePmf], d: u32) -> Result<MajorizationReport> {
    require_even(d)?;
    if components.is_empty() {
        return Err(Error::invalid("at least one component is required"));
    }
    for (i, c) in components.iter().enumerate() {
        if !c.is_unit_support() {
            return Err(Error::invalid(format!("component {i} is not supported on [-1, 1]")));
        }
        if !c.is_symmetric() {
            return Err(Error::invalid(format!("component {i} is not symmetric")));
        }
    }
    let n = components.len();
    let sigma2 = components.iter().map(|c| c.variance()).fold(Rational::zero(), |a, b| a + b)
        / Rational::from_integer(BigInt::from(n));
    let extreme = vec![three_point(&sigma2)?; n];
    let lhs = moment_of_sum(components, d)?;
    let rhs = moment_of_sum(&extreme, d)?;
    Ok(MajorizationReport {
        holds: lhs <= rhs,
        equal: lhs == rhs,
        lhs,
        rhs,
        sigma2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizationReport {
    /// `E|X - EX|^d`.
    pub centered: Rational,
    /// `E|X - X'|^d`.
    pub symmetrized: Rational,
    /// `E|X - EX|^d <= E|X - X'|^d`.
    pub left_holds: bool,
    /// `E|X - X'|^d <= 2^d E|X - EX|^d`.
    pub right_holds: bool,
}

impl SymmetrizationReport {
    pub fn holds(&self) -> bool {
        self.left_holds && self.right_holds
    }
}

pub fn check_symmetrization_props(pmf: &DiscretePmf, d: u32) -> Result<SymmetrizationReport> {
    require_even(d)?;
    let centered = pmf.centered().raw_moment(d);
    let symmetrized = pmf.symmetrize().raw_moment(d);
    let two_d = Rational::from_integer(BigInt::from(2).pow(d));
    Ok(SymmetrizationReport {
        left_holds: centered <= symmetrized,
        right_holds: symmetrized <= &two_d * &centered,
        centered,
        symmetrized,
    })
}

/// The grid `{0, ±1/4, ±1/2, ±3/4, ±1}` used by the random generators.
pub fn quarter_grid() -> Vec<Rational> {
    (-4..=4).map(|i| Rational::new(BigInt::from(i), BigInt::from(4))).collect()
}

/// Random masses on the quarter grid: `units` indivisible units dropped into
/// uniformly chosen cells.
fn random_masses<R: Rng + ?Sized>(rng: &mut R) -> Vec<u32> {
    let grid_len = 9;
    let units = rng.gen_range(1..=24);
    let mut counts = vec![0u32; grid_len];
    for _ in 0..units {
        counts[rng.gen_range(0..grid_len)] += 1;
    }
    counts
}

/// Random law on the quarter grid.
pub fn random_pmf<R: Rng + ?Sized>(rng: &mut R) -> DiscretePmf {
    let counts = random_masses(rng);
    let total: u32 = counts.iter().sum();
    let atoms = quarter_grid()
        .into_iter()
        .zip(&counts)
        .map(|(v, &c)| (v, Rational::new(BigInt::from(c), BigInt::from(total))))
        .collect();
    DiscretePmf::new(atoms).expect("quarter-grid law")
}

/// Random symmetric law on the quarter grid: a random law averaged with its
/// reflection.
pub fn random_symmetric_pmf<R: Rng + ?Sized>(rng: &mut R) -> DiscretePmf {
    let counts = random_masses(rng);
    let total: u32 = counts.iter().sum();
    let grid = quarter_grid();
    let atoms = grid
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let c = counts[i] + counts[counts.len() - 1 - i];
            (v, Rational::new(BigInt::from(c), BigInt::from(2 * total)))
        })
        .collect();
    DiscretePmf::new(atoms).expect("quarter-grid law")
}

/// Random rational in `(0, 1]` with denominator at most `max_den`.
pub fn random_unit_rational<R: Rng + ?Sized>(rng: &mut R, max_den: i64) -> Rational {
    let den = rng.gen_range(1..=max_den);
    let num = rng.gen_range(1..=den);
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Odd central moments of a symmetric sum vanish.
pub fn odd_moments_vanish(law: &SumLaw, up_to: u32) -> bool {
    (1..=up_to).step_by(2).all(|r| law.central_moment(r).is_zero())
}

/// Largest `|v|` in the support.
pub fn support_radius(pmf: &DiscretePmf) -> Rational {
    pmf.atoms()
        .iter()
        .map(|(v, _)| v.abs())
        .max()
        .unwrap_or_else(Rational::zero)
}
