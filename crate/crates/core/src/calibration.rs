//! Per-regime constants for `M`, fitted against exact three-point moments.
//!
//! The file format is a flat JSON object keyed by regime tag, plus the tail
//! constant and provenance metadata:
//!
//! ```json
//! {"version": 1, "SubGaussian": 0.62, "LogCorrected": 0.50, "SmallVariance": 1.02,
//!  "tail_constant": 1.05, "provenance": {...}}
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::combinatorics::{rational_root, Rational};
use crate::error::{Error, Result};
use crate::exact_moments::{exact_moment_iid_threepoint, MomentQuery};
use crate::sharp_bounds::{sharp_bound_m, BoundQuery, Regime};

pub const CALIBRATION_VERSION: u32 = 1;

/// Environment variable overriding the calibration file location.
pub const CALIBRATION_ENV: &str = "KWM_CALIBRATION";

/// Calibration shipped with the crate.
pub const DEFAULT_CALIBRATION_PATH: &str =
    concat!(env!("CARGO_MANIFEST_DIR"), "/data/calibration.json");

/// `n = 2^0..2^max_log2_n`, even `d <= max_d`, `sigma2 = 2^-b` for
/// `b = 0..=max_neg_log2_sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    pub max_log2_n: u32,
    pub max_d: u32,
    pub max_neg_log2_sigma2: u32,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        CalibrationGrid { max_log2_n: 10, max_d: 16, max_neg_log2_sigma2: 20 }
    }
}

impl CalibrationGrid {
    pub fn describe(&self) -> String {
        format!(
            "n=pow2:0:{};d=2:{}:2;sigma2=log2:-{}:0:1",
            self.max_log2_n, self.max_d, self.max_neg_log2_sigma2
        )
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.describe().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `(n, d, b)` triples with `sigma2 = 2^-b`.
    pub fn points(&self) -> Vec<(u64, u32, u32)> {
        let mut out = Vec::new();
        for a in 0..=self.max_log2_n {
            for d in (2..=self.max_d).step_by(2) {
                for b in 0..=self.max_neg_log2_sigma2 {
                    out.push((1u64 << a, d, b));
                }
            }
        }
        out
    }
}

/// One grid point: `||sum Z'_i||_d / M(unit)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRatio {
    pub n: u64,
    pub d: u32,
    pub neg_log2_sigma2: u32,
    pub regime: Regime,
    pub exact_norm: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn power_of_two_inverse(b: u32) -> Rational {
    Rational::new(BigInt::from(1), BigInt::from(2u32).pow(b))
}

pub fn grid_ratio(n: u64, d: u32, b: u32) -> GridRatio {
    let sigma2 = power_of_two_inverse(b);
    let exact = exact_moment_iid_threepoint(&MomentQuery::new(n, d, sigma2).expect("grid point"));
    let exact_norm = rational_root(&exact, d);
    let q = BoundQuery::fully_moment_independent(n, 2f64.powi(-(b as i32)), d).expect("grid point");
    let m = sharp_bound_m(&q);
    GridRatio {
        n,
        d,
        neg_log2_sigma2: b,
        regime: m.regime,
        exact_norm,
        bound: m.value,
        ratio: exact_norm / m.value,
    }
}

pub fn grid_ratios(grid: &CalibrationGrid) -> Vec<GridRatio> {
    grid.points()
        .into_par_iter()
        .map(|(n, d, b)| grid_ratio(n, d, b))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub grid: String,
    pub grid_hash: String,
    pub date: String,
    pub observed: BTreeMap<Regime, RatioRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub version: u32,
    #[serde(rename = "SubGaussian")]
    pub sub_gaussian: f64,
    #[serde(rename = "LogCorrected")]
    pub log_corrected: f64,
    #[serde(rename = "SmallVariance")]
    pub small_variance: f64,
    /// Smallest absolute constant with `c * M >= ||S||_d` on the whole grid;
    /// the default constant for tail bounds.
    pub tail_constant: f64,
    pub provenance: Provenance,
}

impl Calibration {
    pub fn constant(&self, regime: Regime) -> f64 {
        match regime {
            Regime::SubGaussian => self.sub_gaussian,
            Regime::LogCorrected => self.log_corrected,
            Regime::SmallVariance => self.small_variance,
        }
    }

    /// Fits each regime's constant to the geometric midpoint of its observed
    /// ratios, which minimizes the worst multiplicative error.
    pub fn fit(grid: &CalibrationGrid, date: impl Into<String>) -> Result<Self> {
        let ratios = grid_ratios(grid);
        let mut observed: BTreeMap<Regime, RatioRange> = BTreeMap::new();
        for r in &ratios {
            let e = observed
                .entry(r.regime)
                .or_insert(RatioRange { min: f64::INFINITY, max: 0.0, points: 0 });
            e.min = e.min.min(r.ratio);
            e.max = e.max.max(r.ratio);
            e.points += 1;
        }
        let midpoint = |regime: Regime| -> Result<f64> {
            observed
                .get(&regime)
                .map(|r| (r.min * r.max).sqrt())
                .ok_or_else(|| Error::invalid(format!("grid has no {regime} points")))
        };
        let tail_constant = ratios.iter().map(|r| r.ratio).fold(0.0, f64::max);
        Ok(Calibration {
            version: CALIBRATION_VERSION,
            sub_gaussian: midpoint(Regime::SubGaussian)?,
            log_corrected: midpoint(Regime::LogCorrected)?,
            small_variance: midpoint(Regime::SmallVariance)?,
            tail_constant,
            provenance: Provenance {
                grid: grid.describe(),
                grid_hash: grid.hash(),
                date: date.into(),
                observed,
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cal: Calibration = serde_json::from_str(&text)?;
        if cal.version != CALIBRATION_VERSION {
            return Err(Error::invalid(format!(
                "calibration version {} is not supported (expected {CALIBRATION_VERSION})",
                cal.version
            )));
        }
        for regime in Regime::ALL {
            if !(cal.constant(regime) > 0.0) {
                return Err(Error::invalid(format!("non-positive constant for {regime}")));
            }
        }
        Ok(cal)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Location from `KWM_CALIBRATION`, else the shipped file.
    pub fn default_path() -> PathBuf {
        std::env::var_os(CALIBRATION_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CALIBRATION_PATH))
    }

    /// Loads the default calibration; on failure warns on stderr and returns
    /// `None`, meaning unit mode.
    pub fn load_or_warn() -> Option<Self> {
        let path = Self::default_path();
        match Self::load(&path) {
            Ok(c) => Some(c),
            Err(e) => {
                eprintln!(
                    "warning: calibration unavailable at {} ({e}); falling back to unit constants",
                    path.display()
                );
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_fit_round_trip() {
        let grid = CalibrationGrid { max_log2_n: 4, max_d: 8, max_neg_log2_sigma2: 12 };
        let cal = Calibration::fit(&grid, "2026-01-01").unwrap();
        for regime in Regime::ALL {
            let r = cal.provenance.observed[&regime];
            let c = cal.constant(regime);
            assert!(r.min / c >= 0.5 && r.max / c <= 2.0);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cal.json");
        cal.save(&path).unwrap();
        assert_eq!(Calibration::load(&path).unwrap(), cal);
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(json["SubGaussian"].is_f64());
        assert_eq!(json["provenance"]["grid_hash"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(Calibration::load(Path::new("/nonexistent/cal.json")).is_err());
    }

    #[test]
    fn shipped_file_loads() {
        let cal = Calibration::load(Path::new(DEFAULT_CALIBRATION_PATH)).unwrap();
        assert_eq!(cal.provenance.grid_hash, CalibrationGrid::default().hash());
    }
}
