//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown keys are errors,
//! missing keys keep the benchmark defaults. [`BenchmarkConfig::to_text`]
//! writes every key, and parsing that text gives back the same config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::adaptivity::{AdaptOptions, AdaptSchedule};
use crate::error::{Error, Result};
use crate::geometry::{CrossSectionSpec, MaterialProps};
use crate::solver::LinearSolver;
use crate::system::Excitation;

/// Longitudinal mesh at the start of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialMesh {
    Uniform,
    /// Interfaces at `z_q ± 2σ` and `z_q ± 4σ`.
    Bracket,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub geometry: CrossSectionSpec,
    pub excitation: Excitation,
    pub theta_d: f64,
    pub theta_0: f64,
    pub length: f64,
    pub refinement_level: u32,
    pub se_elements: usize,
    pub se_degree: usize,
    pub initial_mesh: InitialMesh,
    pub oracle_layers: usize,
    pub dt: f64,
    pub t_end: f64,
    pub adapt_schedule: AdaptSchedule,
    pub front_threshold: f64,
    pub front_samples: usize,
    pub front_margin: f64,
    pub min_element_fraction: f64,
    pub profile_times: Vec<f64>,
    pub profile_samples: usize,
    pub vtk_z_samples: usize,
    pub sweep_levels: Vec<u32>,
    pub linear_solver: LinearSolver,
    pub output_dir: PathBuf,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            geometry: CrossSectionSpec::default(),
            excitation: Excitation::default(),
            theta_d: 2.0,
            theta_0: 2.0,
            length: 1.0,
            refinement_level: 1,
            se_elements: 5,
            se_degree: 8,
            initial_mesh: InitialMesh::Uniform,
            oracle_layers: 400,
            dt: 1e-4,
            t_end: 1e-2,
            adapt_schedule: AdaptSchedule::HalfTime,
            front_threshold: 0.05,
            front_samples: 1001,
            front_margin: 0.0,
            min_element_fraction: 1e-3,
            profile_times: vec![5e-3, 1e-2],
            profile_samples: 1001,
            vtk_z_samples: 101,
            sweep_levels: vec![0, 1, 2],
            linear_solver: LinearSolver::Direct,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Every accepted key, in the order of the resolved echo.
pub const KEYS: &[&str] = &[
    "cable_width",
    "cable_height",
    "insulation_thickness",
    "n_cables",
    "cable_lambda",
    "cable_cv",
    "insulation_lambda",
    "insulation_cv",
    "q_hat",
    "sigma",
    "z_q",
    "theta_d",
    "theta_0",
    "length",
    "refinement_level",
    "se_elements",
    "se_degree",
    "initial_mesh",
    "oracle_layers",
    "dt",
    "t_end",
    "adapt_schedule",
    "front_threshold",
    "front_samples",
    "front_margin",
    "min_element_fraction",
    "profile_times",
    "profile_samples",
    "vtk_z_samples",
    "sweep_levels",
    "linear_solver",
    "output_dir",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::value(key, format!("cannot parse `{value}`")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_schedule(value: &str) -> Result<AdaptSchedule> {
    let key = "adapt_schedule";
    match value {
        "never" => Ok(AdaptSchedule::Never),
        "half" => Ok(AdaptSchedule::HalfTime),
        _ => {
            if let Some(t) = value.strip_prefix("times:") {
                Ok(AdaptSchedule::AtTimes(list(key, t)?))
            } else if let Some(n) = value.strip_prefix("every:") {
                Ok(AdaptSchedule::EverySteps(num(key, n)?))
            } else {
                Err(Error::value(key, format!("expected never, half, times:<t,...> or every:<n>, got `{value}`")))
            }
        }
    }
}

fn schedule_text(s: &AdaptSchedule) -> String {
    match s {
        AdaptSchedule::Never => "never".into(),
        AdaptSchedule::HalfTime => "half".into(),
        AdaptSchedule::AtTimes(t) => format!("times:{}", join(t)),
        AdaptSchedule::EverySteps(n) => format!("every:{n}"),
    }
}

impl BenchmarkConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses config text on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = BenchmarkConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::ConfigParse { line: i + 1, message: format!("expected `key = value`, got `{line}`") });
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::ConfigParse { line: i + 1, message: format!("unknown key `{key}`") });
            }
            cfg.set(key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its text form (no validation).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let g = &mut self.geometry;
        match key {
            "cable_width" => g.cable_width = num(key, value)?,
            "cable_height" => g.cable_height = num(key, value)?,
            "insulation_thickness" => g.insulation_thickness = num(key, value)?,
            "n_cables" => g.n_cables = num(key, value)?,
            "cable_lambda" => g.cable.lambda = num(key, value)?,
            "cable_cv" => g.cable.c_v = num(key, value)?,
            "insulation_lambda" => g.insulation.lambda = num(key, value)?,
            "insulation_cv" => g.insulation.c_v = num(key, value)?,
            "q_hat" => self.excitation.q_hat = num(key, value)?,
            "sigma" => self.excitation.sigma = num(key, value)?,
            "z_q" => self.excitation.z_q = num(key, value)?,
            "theta_d" => self.theta_d = num(key, value)?,
            "theta_0" => self.theta_0 = num(key, value)?,
            "length" => self.length = num(key, value)?,
            "refinement_level" => self.refinement_level = num(key, value)?,
            "se_elements" => self.se_elements = num(key, value)?,
            "se_degree" => self.se_degree = num(key, value)?,
            "initial_mesh" => {
                self.initial_mesh = match value {
                    "uniform" => InitialMesh::Uniform,
                    "bracket" => InitialMesh::Bracket,
                    _ => return Err(Error::value(key, format!("expected uniform or bracket, got `{value}`"))),
                }
            }
            "oracle_layers" => self.oracle_layers = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "t_end" => self.t_end = num(key, value)?,
            "adapt_schedule" => self.adapt_schedule = parse_schedule(value)?,
            "front_threshold" => self.front_threshold = num(key, value)?,
            "front_samples" => self.front_samples = num(key, value)?,
            "front_margin" => self.front_margin = num(key, value)?,
            "min_element_fraction" => self.min_element_fraction = num(key, value)?,
            "profile_times" => self.profile_times = list(key, value)?,
            "profile_samples" => self.profile_samples = num(key, value)?,
            "vtk_z_samples" => self.vtk_z_samples = num(key, value)?,
            "sweep_levels" => self.sweep_levels = list(key, value)?,
            "linear_solver" => {
                self.linear_solver = match value {
                    "direct" => LinearSolver::Direct,
                    "cg" => LinearSolver::ConjugateGradient,
                    _ => return Err(Error::value(key, format!("expected direct or cg, got `{value}`"))),
                }
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => return Err(Error::value(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        g.validate().map_err(|e| Error::value("geometry", e.to_string()))?;
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::value(key, format!("must be positive, got {v}")))
            }
        };
        positive("cable_width", g.cable_width)?;
        positive("cable_height", g.cable_height)?;
        positive("cable_lambda", g.cable.lambda)?;
        positive("cable_cv", g.cable.c_v)?;
        positive("insulation_lambda", g.insulation.lambda)?;
        positive("insulation_cv", g.insulation.c_v)?;
        positive("q_hat", self.excitation.q_hat)?;
        positive("sigma", self.excitation.sigma)?;
        positive("length", self.length)?;
        positive("dt", self.dt)?;
        if !(self.excitation.z_q > 0.0 && self.excitation.z_q < self.length) {
            return Err(Error::value("z_q", format!("must lie in (0, length), got {}", self.excitation.z_q)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::value("t_end", format!("must be non-negative, got {}", self.t_end)));
        }
        if !self.theta_d.is_finite() || !self.theta_0.is_finite() {
            return Err(Error::value("theta_d", "temperatures must be finite"));
        }
        if self.se_elements < 3 {
            return Err(Error::value("se_elements", format!("need at least 3, got {}", self.se_elements)));
        }
        if self.se_degree < 1 {
            return Err(Error::value("se_degree", "must be at least 1"));
        }
        if self.oracle_layers < 1 {
            return Err(Error::value("oracle_layers", "must be at least 1"));
        }
        if self.refinement_level > 6 {
            return Err(Error::value("refinement_level", format!("at most 6, got {}", self.refinement_level)));
        }
        if !(self.front_threshold > 0.0 && self.front_threshold <= 1.0) {
            return Err(Error::value("front_threshold", "must lie in (0, 1]"));
        }
        if self.front_samples < 2 {
            return Err(Error::value("front_samples", "need at least 2"));
        }
        if !(self.front_margin >= 0.0) {
            return Err(Error::value("front_margin", "must be non-negative"));
        }
        if !(self.min_element_fraction > 0.0 && self.min_element_fraction < 1.0 / self.se_elements as f64) {
            return Err(Error::value("min_element_fraction", "must lie in (0, 1 / se_elements)"));
        }
        if self.profile_samples < 2 {
            return Err(Error::value("profile_samples", "need at least 2"));
        }
        if self.vtk_z_samples < 2 {
            return Err(Error::value("vtk_z_samples", "need at least 2"));
        }
        if let Some(t) = self.profile_times.iter().find(|&&t| !(t >= 0.0 && t <= self.t_end)) {
            return Err(Error::value("profile_times", format!("{t} lies outside [0, t_end]")));
        }
        if self.sweep_levels.iter().any(|&l| l > 6) {
            return Err(Error::value("sweep_levels", "levels must be at most 6"));
        }
        match &self.adapt_schedule {
            AdaptSchedule::EverySteps(0) => return Err(Error::value("adapt_schedule", "every:<n> needs n ≥ 1")),
            AdaptSchedule::AtTimes(t) if t.iter().any(|t| !t.is_finite()) => {
                return Err(Error::value("adapt_schedule", "times must be finite"))
            }
            _ => {}
        }
        crate::system::step_count(self.t_end, self.dt).map_err(|e| Error::value("dt", e.to_string()))?;
        Ok(())
    }

    /// Fully resolved config, one `key = value` line per key.
    pub fn to_text(&self) -> String {
        let g = &self.geometry;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("cable_width", g.cable_width.to_string());
        put("cable_height", g.cable_height.to_string());
        put("insulation_thickness", g.insulation_thickness.to_string());
        put("n_cables", g.n_cables.to_string());
        put("cable_lambda", g.cable.lambda.to_string());
        put("cable_cv", g.cable.c_v.to_string());
        put("insulation_lambda", g.insulation.lambda.to_string());
        put("insulation_cv", g.insulation.c_v.to_string());
        put("q_hat", self.excitation.q_hat.to_string());
        put("sigma", self.excitation.sigma.to_string());
        put("z_q", self.excitation.z_q.to_string());
        put("theta_d", self.theta_d.to_string());
        put("theta_0", self.theta_0.to_string());
        put("length", self.length.to_string());
        put("refinement_level", self.refinement_level.to_string());
        put("se_elements", self.se_elements.to_string());
        put("se_degree", self.se_degree.to_string());
        put(
            "initial_mesh",
            match self.initial_mesh {
                InitialMesh::Uniform => "uniform".into(),
                InitialMesh::Bracket => "bracket".into(),
            },
        );
        put("oracle_layers", self.oracle_layers.to_string());
        put("dt", self.dt.to_string());
        put("t_end", self.t_end.to_string());
        put("adapt_schedule", schedule_text(&self.adapt_schedule));
        put("front_threshold", self.front_threshold.to_string());
        put("front_samples", self.front_samples.to_string());
        put("front_margin", self.front_margin.to_string());
        put("min_element_fraction", self.min_element_fraction.to_string());
        put("profile_times", join(&self.profile_times));
        put("profile_samples", self.profile_samples.to_string());
        put("vtk_z_samples", self.vtk_z_samples.to_string());
        put("sweep_levels", join(&self.sweep_levels));
        put("linear_solver", self.linear_solver.name().into());
        put("output_dir", self.output_dir.display().to_string());
        out
    }

    /// SHA-256 of the resolved text without `output_dir`, hex encoded, so
    /// the same run written to two places carries the same hash.
    pub fn hash(&self) -> String {
        let text: String = self.to_text().lines().filter(|l| !l.starts_with("output_dir ")).map(|l| format!("{l}\n")).collect();
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn adapt_options(&self) -> AdaptOptions {
        AdaptOptions {
            schedule: self.adapt_schedule.clone(),
            threshold: self.front_threshold,
            samples: self.front_samples,
            margin: self.front_margin,
            min_element_fraction: self.min_element_fraction,
            line: None,
        }
    }

    pub fn materials(&self) -> (MaterialProps, MaterialProps) {
        (self.geometry.cable, self.geometry.insulation)
    }

    /// Interfaces of the initial longitudinal mesh.
    pub fn initial_interfaces(&self) -> Vec<f64> {
        let k = self.se_elements;
        let uniform = || (0..=k).map(|i| if i == k { self.length } else { self.length * i as f64 / k as f64 }).collect();
        match self.initial_mesh {
            InitialMesh::Uniform => uniform(),
            InitialMesh::Bracket => crate::adaptivity::source_bracket_interfaces(
                self.excitation.z_q,
                self.excitation.sigma,
                k,
                self.length,
                self.min_element_fraction,
            ),
        }
    }
}
