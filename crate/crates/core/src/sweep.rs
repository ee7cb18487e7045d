//! Parameter sweeps written as CSV: bound surfaces, regime boundaries, the
//! auxiliary `g(q)` curves and the Schmidt `C`-curves.
//!
//! Grid syntax: `;`-separated axes `n=...`, `d=...`, `sigma2=...`, each one of
//!
//! * `pow2:a:b` — `2^a, ..., 2^b`
//! * `a:b:step` — arithmetic range
//! * `log2:a:b:step` — `2^x` for `x = a, a+step, ..., b`
//! * a comma list, e.g. `1,2,4` or `1/8,1/4`

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::baselines::{schmidt_find_cstar, schmidt_rewritten};
use crate::calibration::Calibration;
use crate::combinatorics::{parse_rational, rational_to_f64};
use crate::error::{Error, Result};
use crate::sharp_bounds::{
    auxiliary_g, continuous_relaxation_max, discrete_max_bound, sharp_bound_m,
    sharp_bound_m_calibrated, BoundQuery,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub n: Vec<u64>,
    pub d: Vec<u32>,
    pub sigma2: Vec<f64>,
}

pub const DEFAULT_GRID: &str = "n=pow2:0:10;d=2:16:2;sigma2=log2:-20:0:1";

/// `a` values for the `g(q)` curves.
pub const G_CURVE_A: [f64; 7] = [1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.5, 2.0];
pub const G_CURVE_STEP: f64 = 0.05;
pub const G_CURVE_MAX_Q: f64 = 20.0;

/// `C` grid in units of `d/36`.
pub const SCHMIDT_STEP: f64 = 0.005;
pub const SCHMIDT_MAX: f64 = 3.0;

fn spec_error(input: &str, reason: impl Into<String>) -> Error {
    Error::Parse { input: input.to_string(), reason: reason.into() }
}

fn parse_num<T: std::str::FromStr>(input: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| spec_error(input, format!("'{s}' is not a number")))
}

fn parse_axis_i64(input: &str, body: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = body.split(':').collect();
    match parts.as_slice() {
        ["pow2", a, b] => {
            let (a, b): (i32, i32) = (parse_num(input, a)?, parse_num(input, b)?);
            Ok((a..=b).map(|e| 2f64.powi(e)).collect())
        }
        ["log2", a, b, step] => {
            let (a, b, step): (f64, f64, f64) =
                (parse_num(input, a)?, parse_num(input, b)?, parse_num(input, step)?);
            if !(step > 0.0) {
                return Err(spec_error(input, "step must be positive"));
            }
            let count = ((b - a) / step + 1e-9).floor();
            if count < 0.0 {
                return Ok(vec![]);
            }
            Ok((0..=count as i64).map(|i| 2f64.powf(a + i as f64 * step)).collect())
        }
        [a, b, step] => {
            let (a, b, step): (i64, i64, i64) =
                (parse_num(input, a)?, parse_num(input, b)?, parse_num(input, step)?);
            if step <= 0 {
                return Err(spec_error(input, "step must be positive"));
            }
            Ok((a..=b).step_by(step as usize).map(|x| x as f64).collect())
        }
        [_] => body
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_rational(s.trim()).map(|r| rational_to_f64(&r)))
            .collect(),
        _ => Err(spec_error(input, format!("cannot parse axis '{body}'"))),
    }
}

fn as_integers<T: TryFrom<u64>>(input: &str, axis: &str, xs: Vec<f64>) -> Result<Vec<T>> {
    xs.into_iter()
        .map(|x| {
            if x.fract() != 0.0 || x < 1.0 {
                return Err(spec_error(input, format!("{axis} = {x} must be a positive integer")));
            }
            T::try_from(x as u64).map_err(|_| spec_error(input, format!("{axis} = {x} is too large")))
        })
        .collect()
}

impl SweepGrid {
    pub fn parse(input: &str) -> Result<Self> {
        let (mut n, mut d, mut sigma2) = (None, None, None);
        for axis in input.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, body) = axis
                .split_once('=')
                .ok_or_else(|| spec_error(input, format!("axis '{axis}' lacks '='")))?;
            let values = parse_axis_i64(input, body.trim())?;
            match name.trim() {
                "n" => n = Some(as_integers::<u64>(input, "n", values)?),
                "d" => d = Some(as_integers::<u32>(input, "d", values)?),
                "sigma2" => sigma2 = Some(values),
                other => return Err(spec_error(input, format!("unknown axis '{other}'"))),
            }
        }
        let grid = SweepGrid {
            n: n.ok_or_else(|| spec_error(input, "missing n axis"))?,
            d: d.ok_or_else(|| spec_error(input, "missing d axis"))?,
            sigma2: sigma2.ok_or_else(|| spec_error(input, "missing sigma2 axis"))?,
        };
        if grid.n.is_empty() || grid.d.is_empty() || grid.sigma2.is_empty() {
            return Err(spec_error(input, "grid is empty"));
        }
        if let Some(d) = grid.d.iter().find(|&&d| d % 2 != 0) {
            return Err(spec_error(input, format!("d = {d} must be even")));
        }
        if let Some(s) = grid.sigma2.iter().find(|&&s| !(s > 0.0 && s <= 1.0)) {
            return Err(spec_error(input, format!("sigma2 = {s} must lie in (0, 1]")));
        }
        Ok(grid)
    }
}

pub const BOUND_SURFACE_COLUMNS: [&str; 11] = [
    "n", "d", "sigma2", "log_ratio", "regime", "m_unit", "m_calibrated", "discrete_max",
    "discrete_argmax", "relaxation_max", "relaxation_at",
];
pub const REGIME_BOUNDARY_COLUMNS: [&str; 5] =
    ["n", "d", "left_endpoint", "sigma2_sub_to_log", "sigma2_log_to_small"];
pub const G_CURVE_COLUMNS: [&str; 4] = ["a", "q", "g", "log_inv_a"];
pub const SCHMIDT_CURVE_COLUMNS: [&str; 5] = ["d", "c", "c_scaled", "value", "cstar"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub files: Vec<PathBuf>,
    pub rows: Vec<usize>,
}

struct CsvSink {
    writer: csv::Writer<File>,
    rows: usize,
}

impl CsvSink {
    fn create(path: &Path, columns: &[&str]) -> Result<Self> {
        let mut file = File::create(path)?;
        writeln!(file, "# columns: {}", columns.join(","))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(columns)?;
        Ok(CsvSink { writer, rows: 0 })
    }

    fn row(&mut self, record: Vec<String>) -> Result<()> {
        self.writer.write_record(&record)?;
        self.rows += 1;
        Ok(())
    }

    fn finish(mut self) -> Result<usize> {
        self.writer.flush()?;
        Ok(self.rows)
    }
}

/// Writes the four CSV files into `out`, creating it if needed.
pub fn run_sweep(grid: &SweepGrid, out: &Path, calibration: Option<&Calibration>) -> Result<SweepOutput> {
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut rows = Vec::new();

    let path = out.join("bound_surface.csv");
    let mut sink = CsvSink::create(&path, &BOUND_SURFACE_COLUMNS)?;
    for &n in &grid.n {
        for &d in &grid.d {
            for &s2 in &grid.sigma2 {
                let q = BoundQuery::fully_moment_independent(n, s2, d)?;
                let m = sharp_bound_m(&q);
                let cal = calibration
                    .map(|c| sharp_bound_m_calibrated(&q, c).value.to_string())
                    .unwrap_or_default();
                let dm = discrete_max_bound(&q);
                let rm = continuous_relaxation_max(&q);
                sink.row(vec![
                    n.to_string(),
                    d.to_string(),
                    s2.to_string(),
                    q.log_ratio().to_string(),
                    m.regime.to_string(),
                    m.value.to_string(),
                    cal,
                    dm.value.to_string(),
                    dm.argmax.to_string(),
                    rm.value.to_string(),
                    rm.at.to_string(),
                ])?;
            }
        }
    }
    rows.push(sink.finish()?);
    files.push(path);

    let path = out.join("regime_boundaries.csv");
    let mut sink = CsvSink::create(&path, &REGIME_BOUNDARY_COLUMNS)?;
    for &n in &grid.n {
        for &d in &grid.d {
            let left = (d as f64 / n as f64).max(2.0);
            let at = |l: f64| d as f64 * (-l).exp() / n as f64;
            sink.row(vec![
                n.to_string(),
                d.to_string(),
                left.to_string(),
                at(left).to_string(),
                at(d as f64).to_string(),
            ])?;
        }
    }
    rows.push(sink.finish()?);
    files.push(path);

    let path = out.join("g_curve.csv");
    let mut sink = CsvSink::create(&path, &G_CURVE_COLUMNS)?;
    for a in G_CURVE_A {
        for q in g_curve_q_grid() {
            sink.row(vec![
                a.to_string(),
                q.to_string(),
                auxiliary_g(q, a).to_string(),
                (-a.ln()).to_string(),
            ])?;
        }
    }
    rows.push(sink.finish()?);
    files.push(path);

    let path = out.join("schmidt_curve.csv");
    let mut sink = CsvSink::create(&path, &SCHMIDT_CURVE_COLUMNS)?;
    for &d in &grid.d {
        let cstar = schmidt_find_cstar(d);
        for x in schmidt_scaled_grid() {
            let c = x * d as f64 / 36.0;
            sink.row(vec![
                d.to_string(),
                c.to_string(),
                x.to_string(),
                schmidt_rewritten(d, c).to_string(),
                cstar.to_string(),
            ])?;
        }
    }
    rows.push(sink.finish()?);
    files.push(path);

    Ok(SweepOutput { files, rows })
}

pub fn g_curve_q_grid() -> Vec<f64> {
    let steps = (G_CURVE_MAX_Q / G_CURVE_STEP).round() as usize;
    (1..=steps).map(|i| i as f64 * G_CURVE_STEP).collect()
}

pub fn schmidt_scaled_grid() -> Vec<f64> {
    let steps = (SCHMIDT_MAX / SCHMIDT_STEP).round() as usize;
    (1..=steps).map(|i| i as f64 * SCHMIDT_STEP).collect()
}
