//! Property suites run by `kwm verify` and the acceptance target. Every suite
//! returns a [`VerifyReport`]; a suite passes iff `failures` is empty.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::baselines::{
    bellare_rompel, bernstein_moment, schmidt_find_cstar, schmidt_optimized, schmidt_rewritten,
    BaselineQuery,
};
use crate::calibration::{grid_ratios, power_of_two_inverse, Calibration, CalibrationGrid};
use crate::combinatorics::{
    binomial, elementary_symmetric_upto, factorial, format_rational, multinomial, rational_root,
    rational_to_f64, MultiIndex, Rational,
};
use crate::distributions::{bernoulli, binomial_pmf, three_point, DiscretePmf};
use crate::error::{Error, Result};
use crate::exact_moments::{
    exact_moment_het_threepoint, exact_moment_iid_threepoint, HeterogeneousQuery, MomentQuery,
};
use crate::kwise_sim::{check_kwise_uniformity, exhaustive_moment, independent_moment, KWiseFamily};
use crate::oracle::{
    check_majorization, check_symmetrization_props, convolve_sum, moment_of_sum, random_pmf,
    random_symmetric_pmf, random_unit_rational,
};
use crate::sharp_bounds::{
    branch_value, discrete_max_bound, sharp_bound_m, BoundQuery, Regime,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Suite {
    Majorization,
    Formula,
    Regimes,
    Dominance,
    Symmetrization,
    KwiseExact,
    Binomial,
    Preliminaries,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Majorization,
        Suite::Formula,
        Suite::Regimes,
        Suite::Dominance,
        Suite::Symmetrization,
        Suite::KwiseExact,
        Suite::Binomial,
        Suite::Preliminaries,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Majorization => "majorization",
            Suite::Formula => "formula",
            Suite::Regimes => "regimes",
            Suite::Dominance => "dominance",
            Suite::Symmetrization => "symmetrization",
            Suite::KwiseExact => "kwise-exact",
            Suite::Binomial => "binomial",
            Suite::Preliminaries => "preliminaries",
        }
    }

    /// Number of random cases when the caller gives none.
    pub fn default_cases(&self) -> u64 {
        match self {
            Suite::Majorization => 500,
            Suite::Formula | Suite::Symmetrization | Suite::Preliminaries => 200,
            _ => 0,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremes {
    pub min: f64,
    pub max: f64,
    pub count: u64,
}

impl Extremes {
    fn new() -> Self {
        Extremes { min: f64::INFINITY, max: f64::NEG_INFINITY, count: 0 }
    }

    fn add(&mut self, x: f64) {
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        self.count += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub seed: u64,
    /// Number of individual checks performed.
    pub cases: u64,
    pub failures: Vec<Value>,
    pub extremal_ratios: BTreeMap<String, Extremes>,
}

impl VerifyReport {
    pub fn new(suite: Suite, seed: u64) -> Self {
        VerifyReport {
            suite: suite.name().to_string(),
            seed,
            cases: 0,
            failures: Vec::new(),
            extremal_ratios: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, descriptor: impl FnOnce() -> Value) {
        self.cases += 1;
        if !ok {
            self.failures.push(descriptor());
        }
    }

    fn ratio(&mut self, name: &str, x: f64) {
        self.extremal_ratios
            .entry(name.to_string())
            .or_insert_with(Extremes::new)
            .add(x);
    }

    /// Records `x` and checks it lies in `[lo, hi]`.
    fn bracket(&mut self, name: &str, x: f64, lo: f64, hi: f64, at: impl FnOnce() -> Value) {
        self.ratio(name, x);
        self.check(x >= lo && x <= hi, || {
            json!({"check": name, "value": x, "bracket": [lo, hi], "at": at()})
        });
    }
}

pub fn run_suite(suite: Suite, seed: u64, cases: Option<u64>) -> Result<VerifyReport> {
    let cases = cases.unwrap_or_else(|| suite.default_cases());
    match suite {
        Suite::Majorization => majorization(seed, cases),
        Suite::Formula => formula(seed, cases),
        Suite::Regimes => regimes(seed),
        Suite::Dominance => dominance(seed),
        Suite::Symmetrization => symmetrization(seed, cases),
        Suite::KwiseExact => kwise_exact(seed),
        Suite::Binomial => binomial_corollary(seed),
        Suite::Preliminaries => preliminaries(seed, cases),
    }
}

fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

fn r(x: &Rational) -> String {
    format_rational(x)
}

/// The `sigma2` values used by the exact-formula grids.
pub fn formula_sigma2_grid() -> Vec<Rational> {
    [(1, 8), (1, 4), (1, 2), (3, 4), (1, 1)]
        .iter()
        .map(|&(a, b)| Rational::new(BigInt::from(a), BigInt::from(b)))
        .collect()
}

/// Random symmetric laws against the iid three-point law, plus the tight case
/// where the inputs already are iid three-point.
pub fn majorization(seed: u64, cases: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::new(Suite::Majorization, seed);
    let outcomes: Vec<(u64, usize, u32, crate::oracle::MajorizationReport)> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = case_rng(seed, case);
            let n = rng.gen_range(1..=6usize);
            let d = [2u32, 4, 6, 8][rng.gen_range(0..4)];
            let comps: Vec<DiscretePmf> = (0..n).map(|_| random_symmetric_pmf(&mut rng)).collect();
            check_majorization(&comps, d).map(|rep| (case, n, d, rep))
        })
        .collect::<Result<_>>()?;
    for (case, n, d, rep) in outcomes {
        if !rep.rhs.is_zero() {
            report.ratio("lhs_over_rhs", rational_to_f64(&(&rep.lhs / &rep.rhs)));
        }
        report.check(rep.holds, || {
            json!({"case": case, "n": n, "d": d, "lhs": r(&rep.lhs), "rhs": r(&rep.rhs)})
        });
    }
    for s2 in formula_sigma2_grid() {
        let tp = three_point(&s2)?;
        for n in 1..=6usize {
            for d in [2u32, 4, 6, 8] {
                let rep = check_majorization(&vec![tp.clone(); n], d)?;
                report.check(rep.equal, || {
                    json!({"check": "tight", "n": n, "d": d, "sigma2": r(&s2)})
                });
            }
        }
    }
    Ok(report)
}

/// Closed forms against the convolution oracle: the iid grid and `cases`
/// random heterogeneous cases.
pub fn formula(seed: u64, cases: u64) -> Result<VerifyReport> {
    let mut report = formula_iid(seed)?;
    let het = formula_het(seed, cases)?;
    report.cases += het.cases;
    report.failures.extend(het.failures);
    Ok(report)
}

/// `n <= 8`, even `d <= 12`, the `sigma2` grid, exact equality.
pub fn formula_iid(seed: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::new(Suite::Formula, seed);
    let mut points = Vec::new();
    for n in 1..=8u64 {
        for d in (2..=12u32).step_by(2) {
            for s2 in formula_sigma2_grid() {
                points.push((n, d, s2));
            }
        }
    }
    let outcomes: Vec<_> = points
        .into_par_iter()
        .map(|(n, d, s2)| {
            let closed = exact_moment_iid_threepoint(&MomentQuery::new(n, d, s2.clone())?);
            let oracle = moment_of_sum(&vec![three_point(&s2)?; n as usize], d)?;
            Ok((n, d, s2, closed, oracle))
        })
        .collect::<Result<_>>()?;
    for (n, d, s2, closed, oracle) in outcomes {
        report.check(closed == oracle, || {
            json!({"check": "iid", "n": n, "d": d, "sigma2": r(&s2), "closed": r(&closed), "oracle": r(&oracle)})
        });
    }
    Ok(report)
}

/// Seeded heterogeneous cases: `n <= 5`, even `d <= 10`, random `sigma_i^2`.
pub fn formula_het(seed: u64, cases: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::new(Suite::Formula, seed);
    let outcomes: Vec<_> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = case_rng(seed, case);
            let n = rng.gen_range(1..=5usize);
            let d = 2 * rng.gen_range(1..=5u32);
            let s2: Vec<Rational> = (0..n).map(|_| random_unit_rational(&mut rng, 16)).collect();
            let closed = exact_moment_het_threepoint(&HeterogeneousQuery::new(d, s2.clone())?);
            let comps = s2.iter().map(three_point).collect::<Result<Vec<_>>>()?;
            let oracle = moment_of_sum(&comps, d)?;
            Ok((case, d, s2, closed, oracle))
        })
        .collect::<Result<_>>()?;
    for (case, d, s2, closed, oracle) in outcomes {
        report.check(closed == oracle, || {
            json!({"check": "het", "case": case, "d": d,
                   "sigma2s": s2.iter().map(r).collect::<Vec<_>>(),
                   "closed": r(&closed), "oracle": r(&oracle)})
        });
    }
    Ok(report)
}

/// Exact-to-bound sandwich on the calibration grid, calibrated reproduction,
/// the discrete maximum bracket, the argmax property and branch continuity.
pub fn regimes(seed: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::new(Suite::Regimes, seed);
    regimes_sandwich(&mut report, Calibration::load_or_warn().as_ref());
    regimes_discrete_max(&mut report)?;
    regimes_continuity(&mut report)?;
    Ok(report)
}

/// `exact^{1/d} / M(unit)` in `[1/16, 16]`, and `exact^{1/d} / (c_regime M)` in
/// `[1/2, 2]` when a calibration is available.
pub fn regimes_sandwich(report: &mut VerifyReport, calibration: Option<&Calibration>) {
    let grid = CalibrationGrid::default();
    for g in grid_ratios(&grid) {
        let at = || json!({"n": g.n, "d": g.d, "sigma2": format!("2^-{}", g.neg_log2_sigma2), "regime": g.regime});
        report.bracket("exact_over_m", g.ratio, 1.0 / 16.0, 16.0, at);
        match calibration {
            Some(c) => {
                let x = g.ratio / c.constant(g.regime);
                report.bracket(&format!("exact_over_calibrated_m/{}", g.regime), x, 0.5, 2.0, at);
            }
            None => report.check(false, || json!({"check": "calibrated", "error": "calibration unavailable"})),
        }
    }
}

fn pow2_grid(max_log2_n: u32, max_d: u32, max_b: u32) -> Vec<(u64, u32, f64)> {
    let mut out = Vec::new();
    for a in 0..=max_log2_n {
        for d in (2..=max_d).step_by(2) {
            for b in 0..=max_b {
                out.push((1u64 << a, d, 2f64.powi(-(b as i32))));
            }
        }
    }
    out
}

fn regimes_discrete_max(report: &mut VerifyReport) -> Result<()> {
    for (n, d, s2) in pow2_grid(10, 32, 20) {
        let q = BoundQuery::fully_moment_independent(n, s2, d)?;
        let m = sharp_bound_m(&q);
        let dm = discrete_max_bound(&q);
        let at = || json!({"n": n, "d": d, "sigma2": s2});
        report.bracket("discrete_max_over_m", dm.value / m.value, 1.0 / 8.0, 8.0, at);
        if m.regime == Regime::SmallVariance && (d as f64) < q.log_ratio() - 2.0 {
            report.check(dm.argmax == 1, || {
                json!({"check": "argmax", "n": n, "d": d, "sigma2": s2, "argmax": dm.argmax})
            });
        }
    }
    Ok(())
}

/// At `log(d/(n sigma2)) = max(2, d/n)` and at `log(d/(n sigma2)) = d`, the
/// two neighbouring branch formulas agree within a factor `e`.
fn regimes_continuity(report: &mut VerifyReport) -> Result<()> {
    let e = std::f64::consts::E;
    for a in 0..=10u32 {
        let n = 1u64 << a;
        for d in (2..=32u32).step_by(2) {
            let left = (d as f64 / n as f64).max(2.0);
            for (boundary, pair) in [
                (left, (Regime::SubGaussian, Regime::LogCorrected)),
                (d as f64, (Regime::LogCorrected, Regime::SmallVariance)),
            ] {
                if boundary > d as f64 {
                    continue;
                }
                let s2 = d as f64 * (-boundary).exp() / n as f64;
                if !(s2 > 0.0 && s2 <= 1.0) {
                    continue;
                }
                let q = BoundQuery::fully_moment_independent(n, s2, d)?;
                let x = branch_value(&q, pair.0).0 / branch_value(&q, pair.1).0;
                report.bracket("boundary_branch_ratio", x, 1.0 / e - 1e-9, e + 1e-9, || {
                    json!({"n": n, "d": d, "boundary": [pair.0, pair.1]})
                });
            }
        }
    }
    Ok(())
}

/// Table ordering and the Schmidt optimization.
pub fn dominance(seed: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::new(Suite::Dominance, seed);
    dominance_chain(&mut report)?;
    schmidt_checks(&mut report)?;
    Ok(report)
}

/// On `d <= n`, `sigma2 <= mu <= 1`:
/// `M <= 2 max(sqrt(d n sigma2), d) <= 2 sqrt 2 min(sqrt(d n), sqrt(d n mu + d^2))`,
/// with the log-corrected and small-variance gap factors.
pub fn dominance_chain(report: &mut VerifyReport) -> Result<()> {
    let sqrt2 = std::f64::consts::SQRT_2;
    for (n, d, s2) in pow2_grid(10, 32, 20) {
        if d as u64 > n {
            continue;
        }
        let bq = BoundQuery::fully_moment_independent(n, s2, d)?;
        let m = sharp_bound_m(&bq);
        let base = BaselineQuery::new(n, d, s2, None)?;
        let bern = bernstein_moment(&base);
        let at = || json!({"n": n, "d": d, "sigma2": s2});
        report.ratio("m_over_bernstein", m.value / bern);
        report.check(m.value <= 2.0 * bern, || json!({"check": "m <= 2 bernstein", "at": at()}));

        let log = bq.log_ratio();
        let proxy = schmidt_optimized(&base).proxy;
        match m.regime {
            Regime::LogCorrected => {
                report.bracket("log_corrected_gap_over_log", proxy / m.value / log, 0.25, 4.0, at)
            }
            Regime::SmallVariance => {
                let x = proxy / m.value / d as f64;
                report.ratio("small_variance_gap_over_d", x);
                report.check(x >= 0.25, || json!({"check": "small variance gap", "value": x, "at": at()}));
            }
            Regime::SubGaussian => {}
        }

        let mut mu = s2;
        while mu <= 1.0 {
            let with_mu = BaselineQuery::new(n, d, s2, Some(mu))?;
            let br = bellare_rompel(&with_mu)?;
            report.ratio("bernstein_over_bellare", bern / br);
            report.check(2.0 * bern <= 2.0 * sqrt2 * br * (1.0 + 1e-12), || {
                json!({"check": "bernstein <= sqrt2 bellare", "mu": mu, "at": at()})
            });
            mu *= 2.0;
        }
    }
    Ok(())
}

/// `C* 36/d` in `[0.690, 0.700]`, local minimality at `±10%`, and the
/// optimized rewritten bound within `[1/4, 4]` of `max(sqrt(d n sigma2), d)`
/// on the calibration grid.
pub fn schmidt_checks(report: &mut VerifyReport) -> Result<()> {
    for d in (2..=64u32).step_by(2) {
        let c = schmidt_find_cstar(d);
        let at = || json!({"d": d});
        report.bracket("cstar_scaled", c * 36.0 / d as f64, 0.690, 0.700, at);
        let v = schmidt_rewritten(d, c);
        report.check(schmidt_rewritten(d, 0.9 * c) > v && schmidt_rewritten(d, 1.1 * c) > v, || {
            json!({"check": "cstar local minimum", "d": d})
        });
    }
    for (n, d, s2) in pow2_grid(10, 16, 20) {
        let opt = schmidt_optimized(&BaselineQuery::new(n, d, s2, None)?);
        report.bracket("schmidt_opt_over_proxy", opt.bound / opt.proxy, 0.25, 4.0, || {
            json!({"n": n, "d": d, "sigma2": s2})
        });
    }
    Ok(())
}

/// Symmetrization on random laws: both inequalities, variance doubling,
/// exact symmetry, and the Bernoulli-to-three-point identity.
pub fn symmetrization(seed: u64, cases: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::new(Suite::Symmetrization, seed);
    let two = Rational::from_integer(BigInt::from(2));
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let pmf = random_pmf(&mut rng);
        let sym = pmf.symmetrize();
        report.check(sym.is_symmetric(), || json!({"check": "symmetric", "case": case}));
        report.check(sym.variance() == &two * pmf.variance(), || {
            json!({"check": "variance doubles", "case": case})
        });
        for d in (2..=10u32).step_by(2) {
            let rep = check_symmetrization_props(&pmf, d)?;
            if !rep.centered.is_zero() {
                report.ratio(
                    "symmetrized_over_centered_dth_root",
                    rational_root(&(&rep.symmetrized / &rep.centered), d),
                );
            }
            report.check(rep.holds(), || {
                json!({"check": "symmetrization inequalities", "case": case, "d": d,
                       "centered": r(&rep.centered), "symmetrized": r(&rep.symmetrized)})
            });
        }
    }
    for den in 2..=16i64 {
        for num in 0..=den / 2 {
            let p = Rational::new(BigInt::from(num), BigInt::from(den));
            let s2 = &two * &p * (Rational::one() - &p);
            let ok = bernoulli(&p)?.symmetrize() == three_point(&s2)?;
            report.check(ok, || json!({"check": "bernoulli symmetrization", "p": r(&p)}));
        }
    }
    Ok(report)
}

/// `(p, k, n)` configurations for the exhaustive k-wise checks.
pub const KWISE_CONFIGS: [(u64, u32, u64); 9] = [
    (3, 2, 3),
    (5, 2, 5),
    (5, 3, 5),
    (7, 3, 6),
    (7, 4, 7),
    (11, 3, 11),
    (11, 5, 11),
    (13, 4, 13),
    (11, 4, 6),
];

/// Exact k-wise uniformity and the exhaustive moment identity.
pub fn kwise_exact(seed: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::new(Suite::KwiseExact, seed);
    for (p, k, n) in KWISE_CONFIGS {
        let fam = KWiseFamily::new(p, k, 1, 1, n)?;
        let u = check_kwise_uniformity(&fam)?;
        report.check(u.holds(), || {
            json!({"check": "uniformity", "p": p, "k": k, "n": n, "failing_subsets": u.failures.len()})
        });
        for m in [0, 1, p / 4, p / 2] {
            let fam = KWiseFamily::new(p, k, m, m, n)?;
            let s2 = fam.sigma2_hat();
            for d in (2..=k).step_by(2) {
                let exhaustive = exhaustive_moment(&fam, d)?;
                let independent = independent_moment(&fam, d)?;
                let closed = exact_moment_iid_threepoint(&MomentQuery::new(n, d, s2.clone())?);
                report.check(exhaustive == independent && exhaustive == closed, || {
                    json!({"check": "moment identity", "p": p, "k": k, "n": n, "m": m, "d": d,
                           "exhaustive": r(&exhaustive), "independent": r(&independent), "closed": r(&closed)})
                });
            }
        }
    }
    Ok(report)
}

pub fn binomial_p_grid() -> Vec<Rational> {
    (1..=6u32).map(power_of_two_inverse).collect()
}

/// Exact central binomial moments against the piecewise bound with `sigma2 = p`
/// (within factor 16), and symmetrized binomial moments against the
/// three-point closed form at `2p(1-p)` (exactly).
pub fn binomial_corollary(seed: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::new(Suite::Binomial, seed);
    let two = Rational::from_integer(BigInt::from(2));
    let per_p: Vec<_> = binomial_p_grid()
        .into_par_iter()
        .map(|p| -> Result<Vec<(u64, u32, f64, f64, bool)>> {
            let bern = bernoulli(&p)?;
            let s2 = &two * &p * (Rational::one() - &p);
            let pf = rational_to_f64(&p);
            let mut law = DiscretePmf::point_mass(Rational::zero())?;
            let mut rows = Vec::new();
            for n in 1..=64u64 {
                law = convolve_sum(&[law, bern.clone()])?.pmf;
                let direct = binomial_pmf(n, &p)?;
                let sym = law.symmetrize();
                for d in (2..=12u32).step_by(2) {
                    let norm = rational_root(&law.central_moment(d), d);
                    let m = sharp_bound_m(&BoundQuery::fully_moment_independent(n, pf, d)?).value;
                    let closed = exact_moment_iid_threepoint(&MomentQuery::new(n, d, s2.clone())?);
                    let exact_ok = direct == law && sym.raw_moment(d) == closed;
                    rows.push((n, d, pf, norm / m, exact_ok));
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    for (n, d, p, ratio, exact_ok) in per_p.into_iter().flatten() {
        let at = || json!({"n": n, "d": d, "p": p});
        report.bracket("binomial_norm_over_m", ratio, 1.0 / 16.0, 16.0, at);
        report.check(exact_ok, || json!({"check": "symmetrized binomial identity", "at": at()}));
    }
    Ok(report)
}

/// Newton and Maclaurin inequalities on random rational vectors (`n <= 12`),
/// multinomial zero-extension and the multinomial theorem, and the
/// symmetrization double inequality.
pub fn preliminaries(seed: u64, cases: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport::new(Suite::Preliminaries, seed);
    for case in 0..cases {
        let mut rng = case_rng(seed, case);
        let n = rng.gen_range(1..=12usize);
        let u: Vec<Rational> = (0..n).map(|_| random_unit_rational(&mut rng, 20)).collect();
        let e = elementary_symmetric_upto(n, &u);
        let s: Vec<Rational> = (0..=n)
            .map(|l| &e[l] / Rational::from_integer(BigInt::from(binomial(n as u64, l as i64))))
            .collect();
        let all_equal = u.iter().all(|x| x == &u[0]);
        for l in 1..n {
            let lhs = &s[l - 1] * &s[l + 1];
            let rhs = &s[l] * &s[l];
            report.check(lhs <= rhs, || json!({"check": "newton", "case": case, "l": l}));
            if all_equal {
                report.check(lhs == rhs, || json!({"check": "newton equality", "case": case, "l": l}));
            }
        }
        // Maclaurin: S_l^{1/l} nonincreasing, compared exactly as
        // S_{l+1}^l <= S_l^{l+1}.
        for l in 1..n {
            let lhs = num_traits::pow(s[l + 1].clone(), l);
            let rhs = num_traits::pow(s[l].clone(), l + 1);
            report.check(lhs <= rhs, || json!({"check": "maclaurin", "case": case, "l": l}));
        }
    }

    for d in 0..=10u64 {
        for parts in 1..=4usize {
            let mut total = num_bigint::BigUint::zero();
            for_each_index(parts, d as i64, &mut |j| {
                total += multinomial(d, &MultiIndex::new(j.to_vec()).expect("non-empty"));
            });
            let expected = num_bigint::BigUint::from(parts).pow(d as u32);
            report.check(total == expected, || {
                json!({"check": "multinomial theorem", "d": d, "parts": parts})
            });
            let mut negative = vec![d as i64 + 1; parts];
            negative[0] = -1;
            let ext = MultiIndex::new(negative).expect("non-empty");
            report.check(multinomial(d, &ext).is_zero(), || {
                json!({"check": "zero extension", "d": d, "parts": parts})
            });
        }
        let pairs: num_bigint::BigUint = (0..=d)
            .map(|a| multinomial(d, &MultiIndex::new(vec![a as i64, (d - a) as i64]).expect("non-empty")))
            .sum();
        report.check(pairs == num_bigint::BigUint::from(2u32).pow(d as u32), || {
            json!({"check": "binomial row sum", "d": d})
        });
        report.check(
            multinomial(d, &MultiIndex::new(vec![d as i64]).expect("non-empty")) == num_bigint::BigUint::one()
                && factorial(d) > num_bigint::BigUint::zero(),
            || json!({"check": "trivial multinomial", "d": d}),
        );
    }

    let sym = symmetrization(seed, cases)?;
    report.cases += sym.cases;
    report.failures.extend(sym.failures);
    Ok(report)
}

/// Calls `f` on every vector of `parts` non-negative integers summing to `total`.
fn for_each_index(parts: usize, total: i64, f: &mut dyn FnMut(&[i64])) {
    fn rec(cur: &mut Vec<i64>, parts: usize, left: i64, f: &mut dyn FnMut(&[i64])) {
        if cur.len() + 1 == parts {
            cur.push(left);
            f(cur);
            cur.pop();
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(cur, parts, left - a, f);
            cur.pop();
        }
    }
    rec(&mut Vec::with_capacity(parts), parts, total, f);
}

/// Maps a suite name to a [`Suite`].
pub fn parse_suite(name: &str) -> Result<Suite> {
    Suite::ALL
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::invalid(format!("unknown suite '{name}'")))
}
