//! Run configuration, external-field presets and result files.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{trapezoid_weights, Grid1, Grid2, Grid3};
use crate::harness::SweepRow;
use crate::operators::VectorField3;
use crate::optimize::OptimizerOptions;

/// Asymptotic thickness regime, `ℓ = lim h_b / h_a²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    Finite(f64),
    Zero,
    Infinity,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Finite(l) => write!(f, "finite({l})"),
            Regime::Zero => write!(f, "zero"),
            Regime::Infinity => write!(f, "infinity"),
        }
    }
}

/// One monomial `coeff · x1^p1 x2^p2 x3^p3` added to `component` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub component: usize,
    pub coeff: f64,
    pub powers: [u32; 3],
}

/// Thickness-independent external field, evaluated at node coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub enum FieldPreset {
    #[default]
    Zero,
    Constant([f64; 3]),
    /// Component `axis` (1-based) equals `amplitude · sin(π x_axis)`.
    AxisSine { axis: usize, amplitude: f64 },
    Polynomial(Vec<Monomial>),
}

impl FieldPreset {
    pub fn validate(&self) -> Result<()> {
        match self {
            FieldPreset::AxisSine { axis, .. } if !(1..=3).contains(axis) => {
                Err(Error::Validation(format!("AxisSine axis must be 1, 2 or 3, got {axis}")))
            }
            FieldPreset::Polynomial(terms) => {
                match terms.iter().find(|t| !(1..=3).contains(&t.component)) {
                    Some(t) => Err(Error::Validation(format!(
                        "polynomial component must be 1, 2 or 3, got {}",
                        t.component
                    ))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        match self {
            FieldPreset::Zero => [0.0; 3],
            FieldPreset::Constant(c) => *c,
            FieldPreset::AxisSine { axis, amplitude } => {
                let mut v = [0.0; 3];
                v[axis - 1] = amplitude * (std::f64::consts::PI * x[axis - 1]).sin();
                v
            }
            FieldPreset::Polynomial(terms) => {
                let mut v = [0.0; 3];
                for t in terms {
                    v[t.component - 1] +=
                        t.coeff * x[0].powi(t.powers[0] as i32) * x[1].powi(t.powers[1] as i32) * x[2].powi(t.powers[2] as i32);
                }
                v
            }
        }
    }
}

/// Pointwise evaluation of a preset at the grid's nodes.
pub fn materialize_field(preset: &FieldPreset, grid: &Grid3) -> VectorField3 {
    VectorField3::from_fn(grid, |x| preset.eval(x))
}

const PROFILE_NODES: usize = 129;

/// Wire profile forcing `F^a(x3) = ∫_Θ f_3(x', x3) dx'` at the 1D nodes.
pub fn wire_profile(preset: &FieldPreset, grid: &Grid1) -> Vec<f64> {
    let d = 1.0 / (PROFILE_NODES - 1) as f64;
    let w = trapezoid_weights(PROFILE_NODES, d);
    grid.coords()
        .iter()
        .map(|&x3| {
            let mut s = 0.0;
            for (j, wj) in w.iter().enumerate() {
                for (i, wi) in w.iter().enumerate() {
                    let x = [-0.5 + i as f64 * d, -0.5 + j as f64 * d, x3];
                    s += wi * wj * preset.eval(x)[2];
                }
            }
            s
        })
        .collect()
}

/// Film forcing `F^b(x') = ∫_{-1}^0 (f_1, f_2)(x', x3) dx3` at the 2D nodes.
pub fn film_profile(preset: &FieldPreset, grid: &Grid2) -> [Vec<f64>; 2] {
    let d = 1.0 / (PROFILE_NODES - 1) as f64;
    let w = trapezoid_weights(PROFILE_NODES, d);
    let mut out = [vec![0.0; grid.len()], vec![0.0; grid.len()]];
    for n in 0..grid.len() {
        let [x1, x2] = grid.coords(n);
        for (k, wk) in w.iter().enumerate() {
            let v = preset.eval([x1, x2, -1.0 + k as f64 * d]);
            out[0][n] += wk * v[0];
            out[1][n] += wk * v[1];
        }
    }
    out
}

fn default_alpha() -> f64 {
    1.0
}
fn default_grid3() -> [usize; 3] {
    [9, 9, 9]
}
fn default_grid_1d() -> usize {
    65
}
fn default_grid_2d() -> [usize; 2] {
    [33, 33]
}
fn default_output() -> String {
    "results.csv".into()
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub regime: Regime,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_alpha")]
    pub beta: f64,
    #[serde(default = "default_grid3")]
    pub grid_a: [usize; 3],
    #[serde(default = "default_grid3")]
    pub grid_b: [usize; 3],
    #[serde(default = "default_grid_1d")]
    pub grid_1d: usize,
    #[serde(default = "default_grid_2d")]
    pub grid_2d: [usize; 2],
    pub thickness_schedule: Vec<(f64, f64)>,
    #[serde(default)]
    pub field_preset_a: FieldPreset,
    #[serde(default)]
    pub field_preset_b: FieldPreset,
    #[serde(default)]
    pub optimizer: OptimizerOptions,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_path: String,
    /// Pins the junction values of the coupled limit model to zero.
    #[serde(default = "default_true")]
    pub junction_zero: bool,
}

impl RunConfig {
    /// Defaults with the given regime and schedule.
    pub fn new(regime: Regime, thickness_schedule: Vec<(f64, f64)>) -> Self {
        Self {
            regime,
            alpha: 1.0,
            beta: 1.0,
            grid_a: default_grid3(),
            grid_b: default_grid3(),
            grid_1d: default_grid_1d(),
            grid_2d: default_grid_2d(),
            thickness_schedule,
            field_preset_a: FieldPreset::Zero,
            field_preset_b: FieldPreset::Zero,
            optimizer: OptimizerOptions::default(),
            seed: 0,
            output_path: default_output(),
            junction_zero: true,
        }
    }

    /// Checks every invariant. Under a finite regime, `h_b` values within a
    /// relative `1e-9` of `ℓ·h_a²` are replaced by `ℓ·h_a²`.
    pub fn validate(mut self) -> Result<Self> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("alpha and beta must be positive, got {}, {}", self.alpha, self.beta));
        }
        for (name, dims) in [("grid_a", &self.grid_a[..]), ("grid_b", &self.grid_b[..]), ("grid_2d", &self.grid_2d[..])] {
            if dims.iter().any(|&n| n < 3) {
                return bad(format!("{name} = {dims:?}: every dimension must be at least 3"));
            }
        }
        if self.grid_1d < 3 {
            return bad(format!("grid_1d = {} must be at least 3", self.grid_1d));
        }
        self.field_preset_a.validate()?;
        self.field_preset_b.validate()?;
        self.optimizer.validate()?;
        if self.thickness_schedule.is_empty() {
            return bad("thickness_schedule is empty".into());
        }
        for &(h_a, h_b) in &self.thickness_schedule {
            if !(h_a > 0.0 && h_a < 1.0 && h_b > 0.0 && h_b < 1.0) {
                return bad(format!("pair ({h_a}, {h_b}) is not in (0, 1)²"));
            }
        }
        let ratios: Vec<f64> = self.thickness_schedule.iter().map(|(a, b)| b / (a * a)).collect();
        match self.regime {
            Regime::Finite(ell) => {
                if !(ell > 0.0 && ell.is_finite()) {
                    return bad(format!("finite regime needs ℓ > 0, got {ell}"));
                }
                for pair in &mut self.thickness_schedule {
                    let target = ell * pair.0 * pair.0;
                    if (pair.1 - target).abs() > 1e-9 * target {
                        return bad(format!("pair ({}, {}) violates h_b = {ell}·h_a² (expected {target})", pair.0, pair.1));
                    }
                    pair.1 = target;
                }
            }
            Regime::Zero => {
                if let Some(i) = (1..ratios.len()).find(|&i| ratios[i] >= ratios[i - 1]) {
                    let (a, b) = self.thickness_schedule[i];
                    return bad(format!("pair ({a}, {b}): h_b/h_a² must decrease strictly along the schedule"));
                }
            }
            Regime::Infinity => {
                if let Some(i) = (1..ratios.len()).find(|&i| ratios[i] <= ratios[i - 1]) {
                    let (a, b) = self.thickness_schedule[i];
                    return bad(format!("pair ({a}, {b}): h_b/h_a² must increase strictly along the schedule"));
                }
                let rel: Vec<f64> = self.thickness_schedule.iter().map(|(a, b)| b / a.sqrt()).collect();
                for (i, &(a, b)) in self.thickness_schedule.iter().enumerate() {
                    if rel[i] >= 1.0 {
                        return bad(format!("pair ({a}, {b}) violates h_b < sqrt(h_a)"));
                    }
                    if i > 0 && rel[i] >= rel[i - 1] {
                        return bad(format!("pair ({a}, {b}): h_b/sqrt(h_a) must decrease strictly along the schedule"));
                    }
                }
            }
        }
        Ok(self)
    }
}

/// Parses and validates a JSON run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn to_json(cfg: &RunConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config is serializable")
}

/// `h_b = ℓ·h_a²` for each `h_a`.
pub fn finite_schedule(ell: f64, h_a: &[f64]) -> Vec<(f64, f64)> {
    h_a.iter().map(|&a| (a, ell * a * a)).collect()
}

/// `h_b = h_a^p` for each `h_a`.
pub fn power_schedule(power: f64, h_a: &[f64]) -> Vec<(f64, f64)> {
    h_a.iter().map(|&a| (a, a.powf(power))).collect()
}

/// The five-step geometric ladder from 0.4 to 0.1 used by default sweeps.
pub const DEFAULT_H_A: [f64; 5] = [0.4, 0.283, 0.2, 0.141, 0.1];

/// The JSON file written next to the CSV results.
pub fn json_sibling(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes the CSV summary and its sibling JSON with full breakdowns.
pub fn write_results(rows: &[SweepRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Validation("no sweep rows to write".into()));
    }
    let io_err = |source: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(source),
        other => Error::Serialize {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    })?;
    let ser = |e: csv::Error| Error::Serialize {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    w.write_record(SweepRow::CSV_HEADER).map_err(ser)?;
    for r in rows {
        w.write_record(r.csv_record()).map_err(ser)?;
    }
    w.flush().map_err(io_err)?;
    let jpath = json_sibling(path);
    let mut f = File::create(&jpath).map_err(|source| Error::Io {
        path: jpath.clone(),
        source,
    })?;
    let text = serde_json::to_string_pretty(rows).map_err(|e| Error::Serialize {
        path: jpath.clone(),
        message: e.to_string(),
    })?;
    f.write_all(text.as_bytes()).map_err(|source| Error::Io { path: jpath, source })?;
    Ok(())
}
