//! Benchmark runs, validation against the 3D reference and the efficiency
//! sweep.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde_json::json;

use crate::adaptivity::{source_bracket_interfaces, AdaptEvent, AdaptSchedule};
use crate::config::BenchmarkConfig;
use crate::error::{Error, Result};
use crate::fem2d::FeFields;
use crate::geometry::{build_benchmark_cross_section, triangulate_structured, Mesh2D, PointLocation, Region};
use crate::output::{field_vtk, fmt_f64, write_text, CsvTable};
use crate::reference3d::{assemble_3d, extrude, solve_3d_steady, solve_3d_transient, NodalSolution3D, Transient3DOptions};
use crate::spectral::SpectralMesh1D;
use crate::system::{solve_steady, solve_transient, Q3dProblem, SpectralSolution, TransientOptions};

/// Relative-difference thresholds of the validation run.
pub const VALIDATION_LIMIT: f64 = 0.03;
pub const VALIDATION_LIMIT_ADAPTED: f64 = 0.02;
/// Largest admissible Q3D / 3D dimension ratio at matched error.
pub const SWEEP_RATIO_LIMIT: f64 = 0.15;
/// Tolerance on "matched" hot-spot error.
pub const SWEEP_ERROR_MATCH: f64 = 1.1;
/// Layer count of the deliberately coarse reference reported by validation.
pub const COARSE_ORACLE_LAYERS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Q3d,
    Ref3d,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Q3d => "q3d",
            SolverKind::Ref3d => "ref3d",
        }
    }
}

/// Rise normalized by the reference rise: `|θ - θ_ref| / (θ_ref - θ_D)`.
pub fn relative_difference(theta: f64, theta_ref: f64, theta_d: f64) -> f64 {
    let diff = (theta - theta_ref).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / (theta_ref - theta_d).abs()
    }
}

/// A temperature field that can be sampled.
pub trait Field {
    fn at(&self, loc: &PointLocation, z: f64) -> Result<f64>;
    /// Temperatures of all cross-section nodes at `z`.
    fn nodal_slice(&self, z: f64) -> Result<Vec<f64>>;
}

impl Field for SpectralSolution {
    fn at(&self, loc: &PointLocation, z: f64) -> Result<f64> {
        self.evaluate_located(loc, z)
    }

    fn nodal_slice(&self, z: f64) -> Result<Vec<f64>> {
        self.slice(z)
    }
}

impl Field for NodalSolution3D {
    fn at(&self, loc: &PointLocation, z: f64) -> Result<f64> {
        self.evaluate_located(loc, z)
    }

    fn nodal_slice(&self, z: f64) -> Result<Vec<f64>> {
        self.slice(z)
    }
}

/// Mesh, fields and probe positions shared by every run of a config.
#[derive(Clone, Debug)]
pub struct Setup {
    pub mesh2d: Arc<Mesh2D>,
    pub fields: FeFields,
    /// Centroid of the quenched cable at `z_q`.
    pub hot_spot: [f64; 3],
    /// Centroid of the neighbouring cable at `z_q`, if there is one.
    pub neighbor: Option<[f64; 3]>,
    pub level: u32,
}

pub fn setup(cfg: &BenchmarkConfig, level: u32) -> Result<Setup> {
    let geometry = build_benchmark_cross_section(&cfg.geometry)?;
    let mesh2d = Arc::new(triangulate_structured(&geometry, level));
    let zq = cfg.excitation.z_q;
    let centroid = |k| geometry.region_rect(Region::Cable(k)).map(|r| r.centroid());
    let hot = centroid(1).ok_or_else(|| Error::Geometry("no cable in the cross-section".into()))?;
    Ok(Setup {
        mesh2d,
        fields: FeFields::for_stack(&cfg.geometry, cfg.excitation.q_hat),
        hot_spot: [hot[0], hot[1], zq],
        neighbor: centroid(2).map(|c| [c[0], c[1], zq]),
        level,
    })
}

impl Setup {
    pub fn probes(&self) -> Vec<[f64; 3]> {
        std::iter::once(self.hot_spot).chain(self.neighbor).collect()
    }

    pub fn problem(&self, cfg: &BenchmarkConfig) -> Result<Q3dProblem> {
        Q3dProblem::new(self.mesh2d.clone(), &self.fields, cfg.excitation.profile(), cfg.length, cfg.theta_d)
    }

    pub fn quench_line(&self) -> [f64; 2] {
        [self.hot_spot[0], self.hot_spot[1]]
    }
}

fn uniform_samples(length: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { length } else { length * i as f64 / (n - 1) as f64 }).collect()
}

/// Everything one benchmark run produces.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub solver: SolverKind,
    pub config_hash: String,
    pub times: Vec<f64>,
    /// Hot-spot temperature per recorded time.
    pub hot_spot: Vec<f64>,
    pub probes: CsvTable,
    pub profiles: CsvTable,
    pub events: Option<CsvTable>,
    pub vtk: String,
    pub metadata: serde_json::Value,
}

impl RunArtifacts {
    pub fn write(&self, dir: &Path, cfg: &BenchmarkConfig) -> Result<()> {
        let s = self.solver.name();
        self.probes.write(&dir.join(format!("probes_{s}.csv")), &self.config_hash)?;
        self.profiles.write(&dir.join(format!("profiles_{s}.csv")), &self.config_hash)?;
        if let Some(ev) = &self.events {
            ev.write(&dir.join(format!("events_{s}.csv")), &self.config_hash)?;
        }
        write_text(&dir.join(format!("field_{s}.vtk")), &self.vtk)?;
        let meta = serde_json::to_string_pretty(&self.metadata).expect("metadata is plain JSON");
        write_text(&dir.join(format!("metadata_{s}.json")), &(meta + "\n"))?;
        write_text(&dir.join("config_resolved.txt"), &format!("# config_sha256={}\n{}", self.config_hash, cfg.to_text()))
    }
}

fn probe_table(times: &[f64], values: &[Vec<f64>]) -> CsvTable {
    let mut t = CsvTable::new(&["time_s", "theta_hotspot_K", "theta_neighbor_K"]);
    for (time, v) in times.iter().zip(values) {
        t.push_numbers(&[*time, v[0], v.get(1).copied().unwrap_or(f64::NAN)]);
    }
    t
}

fn profile_table<F: Field>(snapshots: &[(f64, &F)], loc: &PointLocation, zs: &[f64]) -> Result<CsvTable> {
    let mut t = CsvTable::new(&["time_s", "z_m", "theta_K"]);
    for (time, field) in snapshots {
        for &z in zs {
            t.push_numbers(&[*time, z, field.at(loc, z)?]);
        }
    }
    Ok(t)
}

fn field_snapshot<F: Field>(field: &F, mesh: &Mesh2D, zs: &[f64], hash: &str) -> Result<String> {
    let mut values = Vec::with_capacity(zs.len() * mesh.node_count());
    for &z in zs {
        values.extend(field.nodal_slice(z)?);
    }
    field_vtk(mesh, zs, &values, "temperature", hash)
}

pub fn events_table(events: &[AdaptEvent]) -> CsvTable {
    let mut t = CsvTable::new(&["time_s", "changed", "status", "z_minus_m", "z_plus_m", "old_interfaces", "new_interfaces"]);
    let join = |v: &[f64]| v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(";");
    for e in events {
        let (zm, zp) = e.front.map_or((f64::NAN, f64::NAN), |f| (f.z_minus, f.z_plus));
        t.push(vec![
            fmt_f64(e.time),
            (e.changed as u8).to_string(),
            e.status.to_string().replace(',', ";"),
            fmt_f64(zm),
            fmt_f64(zp),
            join(&e.old_interfaces),
            join(&e.new_interfaces),
        ]);
    }
    t
}

fn snapshot_times(cfg: &BenchmarkConfig) -> Vec<f64> {
    let mut t = cfg.profile_times.clone();
    t.push(cfg.t_end);
    t
}

/// Transient run of the configured benchmark with either solver.
pub fn run_benchmark(cfg: &BenchmarkConfig, solver: SolverKind) -> Result<RunArtifacts> {
    run_with_schedule(cfg, solver, cfg.adapt_schedule.clone())
}

fn run_with_schedule(cfg: &BenchmarkConfig, solver: SolverKind, schedule: AdaptSchedule) -> Result<RunArtifacts> {
    let hash = cfg.hash();
    let t0 = Instant::now();
    let su = setup(cfg, cfg.refinement_level)?;
    let t_mesh = t0.elapsed().as_secs_f64();
    let loc = su.mesh2d.locate_point(su.hot_spot[0], su.hot_spot[1])?;
    let zs_profile = uniform_samples(cfg.length, cfg.profile_samples);
    let zs_vtk = uniform_samples(cfg.length, cfg.vtk_z_samples);
    let wanted = snapshot_times(cfg);

    let t1 = Instant::now();
    let (times, values, profiles, vtk, events, dim, nnz, t_solve) = match solver {
        SolverKind::Q3d => {
            let problem = su.problem(cfg)?;
            let mesh1d = SpectralMesh1D::new(cfg.initial_interfaces(), cfg.se_degree)?;
            let mut adapt = cfg.adapt_options();
            adapt.schedule = schedule;
            adapt.line = Some(su.quench_line());
            let opts = TransientOptions {
                dt: cfg.dt,
                t_end: cfg.t_end,
                theta_0: cfg.theta_0,
                solver: cfg.linear_solver,
                probes: su.probes(),
                snapshot_times: wanted.clone(),
                adapt,
            };
            let r = solve_transient(&problem, &mesh1d, &opts)?;
            let t_solve = t1.elapsed().as_secs_f64();
            let snaps: Vec<(f64, &SpectralSolution)> = r
                .snapshots
                .iter()
                .filter(|s| cfg.profile_times.iter().any(|&t| (t - s.time).abs() <= 1e-9 * cfg.dt))
                .map(|s| (s.time, s))
                .collect();
            let profiles = profile_table(&snaps, &loc, &zs_profile)?;
            let vtk = field_snapshot(&r.final_solution, &su.mesh2d, &zs_vtk, &hash)?;
            (r.times, r.probe_values, profiles, vtk, Some(r.events), r.system_dim, r.nnz, t_solve)
        }
        SolverKind::Ref3d => {
            let mesh = extrude(su.mesh2d.clone(), cfg.length, cfg.oracle_layers)?;
            let system = assemble_3d(&mesh, &su.fields, &cfg.excitation.profile(), cfg.theta_d)?;
            let opts = Transient3DOptions {
                dt: cfg.dt,
                t_end: cfg.t_end,
                theta_0: cfg.theta_0,
                solver: cfg.linear_solver,
                probes: su.probes(),
                snapshot_times: wanted.clone(),
            };
            let r = solve_3d_transient(&system, &opts)?;
            let t_solve = t1.elapsed().as_secs_f64();
            let snaps: Vec<(f64, &NodalSolution3D)> = r
                .snapshots
                .iter()
                .filter(|s| cfg.profile_times.iter().any(|&t| (t - s.time).abs() <= 1e-9 * cfg.dt))
                .map(|s| (s.time, s))
                .collect();
            let profiles = profile_table(&snaps, &loc, &zs_profile)?;
            let vtk = field_snapshot(&r.final_solution, &su.mesh2d, &zs_vtk, &hash)?;
            (r.times, r.probe_values, profiles, vtk, None, system.dim(), system.stiffness.nnz(), t_solve)
        }
    };
    let t_output = t1.elapsed().as_secs_f64() - t_solve;
    let event_json: Vec<serde_json::Value> = events
        .iter()
        .flatten()
        .map(|e| {
            json!({
                "time_s": e.time,
                "changed": e.changed,
                "status": e.status.to_string(),
                "old_interfaces": e.old_interfaces,
                "new_interfaces": e.new_interfaces,
            })
        })
        .collect();
    let metadata = json!({
        "solver": solver.name(),
        "config_sha256": hash,
        "refinement_level": cfg.refinement_level,
        "triangles": su.mesh2d.triangle_count(),
        "fe_nodes": su.mesh2d.node_count(),
        "system_dimension": dim,
        "nonzeros": nnz,
        "steps": times.len() - 1,
        "wall_clock_s": { "mesh": t_mesh, "solve": t_solve, "output": t_output },
        "adaptation_events": event_json,
        "final_hot_spot_K": values.last().map(|v| v[0]),
    });
    Ok(RunArtifacts {
        solver,
        config_hash: hash,
        hot_spot: values.iter().map(|v| v[0]).collect(),
        probes: probe_table(&times, &values),
        profiles,
        events: events.as_deref().map(events_table),
        vtk,
        metadata,
        times,
    })
}

/// Comparison of the Q3D runs with and without adaptation against the 3D
/// reference.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub table: CsvTable,
    pub config_hash: String,
    /// Relative hot-spot differences at `t_end`.
    pub final_difference: f64,
    pub final_difference_adapted: f64,
    /// Difference between a `COARSE_ORACLE_LAYERS` reference and the reference.
    pub oracle_self_difference: f64,
    /// The two Q3D runs agree exactly before the first adaptation.
    pub identical_before_adaptation: bool,
    pub adaptation_time: Option<f64>,
}

impl ValidationReport {
    pub fn within_limit(&self) -> bool {
        self.final_difference <= VALIDATION_LIMIT
    }

    pub fn within_adapted_limit(&self) -> bool {
        self.final_difference_adapted <= VALIDATION_LIMIT_ADAPTED
    }

    pub fn adaptation_helps(&self) -> bool {
        self.final_difference_adapted <= self.final_difference
    }

    pub fn passed(&self) -> bool {
        self.within_limit() && self.within_adapted_limit() && self.adaptation_helps()
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "config_sha256": self.config_hash,
            "relative_difference": self.final_difference,
            "relative_difference_adapted": self.final_difference_adapted,
            "limit": VALIDATION_LIMIT,
            "limit_adapted": VALIDATION_LIMIT_ADAPTED,
            "adapted_not_worse": self.adaptation_helps(),
            "coarse_oracle_difference": self.oracle_self_difference,
            "identical_before_adaptation": self.identical_before_adaptation,
            "adaptation_time_s": self.adaptation_time,
            "passed": self.passed(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.table.write(&dir.join("validation.csv"), &self.config_hash)?;
        let text = serde_json::to_string_pretty(&self.summary()).expect("summary is plain JSON");
        write_text(&dir.join("validation_summary.json"), &(text + "\n"))
    }
}

pub fn run_validation(cfg: &BenchmarkConfig) -> Result<ValidationReport> {
    let plain = run_with_schedule(cfg, SolverKind::Q3d, AdaptSchedule::Never)?;
    let adaptive_schedule = match cfg.adapt_schedule {
        AdaptSchedule::Never => AdaptSchedule::HalfTime,
        ref s => s.clone(),
    };
    let adapted = run_with_schedule(cfg, SolverKind::Q3d, adaptive_schedule)?;
    let reference = run_with_schedule(cfg, SolverKind::Ref3d, AdaptSchedule::Never)?;
    let mut coarse_cfg = cfg.clone();
    coarse_cfg.oracle_layers = COARSE_ORACLE_LAYERS;
    coarse_cfg.profile_times.clear();
    coarse_cfg.vtk_z_samples = 2;
    let coarse = run_with_schedule(&coarse_cfg, SolverKind::Ref3d, AdaptSchedule::Never)?;

    let td = cfg.theta_d;
    let mut table = CsvTable::new(&[
        "time_s",
        "theta_q3d_K",
        "theta_q3d_adapted_K",
        "theta_ref3d_K",
        "reldiff_q3d",
        "reldiff_q3d_adapted",
    ]);
    for i in 0..reference.times.len() {
        let (a, b, r) = (plain.hot_spot[i], adapted.hot_spot[i], reference.hot_spot[i]);
        table.push_numbers(&[reference.times[i], a, b, r, relative_difference(a, r, td), relative_difference(b, r, td)]);
    }
    let last = reference.times.len() - 1;
    let adaptation_time = adapted.metadata["adaptation_events"]
        .as_array()
        .and_then(|ev| ev.iter().find(|e| e["changed"] == true))
        .and_then(|e| e["time_s"].as_f64());
    let cutoff = adaptation_time.unwrap_or(f64::INFINITY);
    let identical_before_adaptation = reference
        .times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t <= cutoff + 1e-9 * cfg.dt)
        .all(|(i, _)| plain.hot_spot[i] == adapted.hot_spot[i] || reference.times[i] == cutoff);
    Ok(ValidationReport {
        table,
        config_hash: cfg.hash(),
        final_difference: relative_difference(plain.hot_spot[last], reference.hot_spot[last], td),
        final_difference_adapted: relative_difference(adapted.hot_spot[last], reference.hot_spot[last], td),
        oracle_self_difference: relative_difference(coarse.hot_spot[last], reference.hot_spot[last], td),
        identical_before_adaptation,
        adaptation_time,
    })
}

/// Steady-state comparison of one transversal level.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepLevel {
    pub level: u32,
    pub triangles: usize,
    pub fe_nodes: usize,
    pub q3d_dim: usize,
    pub q3d_hot_spot: f64,
    pub q3d_error: f64,
    /// Extrapolated reference hot spot of this level.
    pub reference_hot_spot: f64,
    /// `(layers, dimension, hot spot, error)` for every 3D run.
    pub ref3d_runs: Vec<(usize, usize, f64, f64)>,
    /// Smallest 3D run whose error is within the match tolerance of the
    /// Q3D error; the largest run if none is.
    pub matched_layers: usize,
    pub matched_dim: usize,
    pub matched_error: f64,
    pub matched: bool,
    /// Error of the 3D run at `oracle_layers` against the finest level.
    pub error_vs_finest: f64,
}

impl SweepLevel {
    pub fn dim_ratio(&self) -> f64 {
        self.q3d_dim as f64 / self.matched_dim as f64
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub levels: Vec<SweepLevel>,
    pub config_hash: String,
}

impl SweepReport {
    pub fn ratios_within_limit(&self) -> bool {
        self.levels.iter().all(|l| l.dim_ratio() <= SWEEP_RATIO_LIMIT)
    }

    /// 3D reference error against the finest level shrinks with refinement.
    pub fn reference_converges(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].error_vs_finest < w[0].error_vs_finest)
    }

    pub fn runs_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["solver", "level", "triangles", "fe_nodes", "layers_or_modes", "dimension", "theta_hotspot_K", "rel_error"]);
        for l in &self.levels {
            t.push(vec![
                "q3d".into(),
                l.level.to_string(),
                l.triangles.to_string(),
                l.fe_nodes.to_string(),
                (l.q3d_dim / l.fe_nodes).to_string(),
                l.q3d_dim.to_string(),
                fmt_f64(l.q3d_hot_spot),
                fmt_f64(l.q3d_error),
            ]);
            for &(layers, dim, hot, err) in &l.ref3d_runs {
                t.push(vec![
                    "ref3d".into(),
                    l.level.to_string(),
                    l.triangles.to_string(),
                    l.fe_nodes.to_string(),
                    layers.to_string(),
                    dim.to_string(),
                    fmt_f64(hot),
                    fmt_f64(err),
                ]);
            }
        }
        t
    }

    pub fn summary_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "level",
            "triangles",
            "q3d_dimension",
            "q3d_rel_error",
            "ref3d_matched_layers",
            "ref3d_matched_dimension",
            "ref3d_matched_rel_error",
            "dimension_ratio",
            "matched",
            "ref3d_rel_error_vs_finest_level",
        ]);
        for l in &self.levels {
            t.push(vec![
                l.level.to_string(),
                l.triangles.to_string(),
                l.q3d_dim.to_string(),
                fmt_f64(l.q3d_error),
                l.matched_layers.to_string(),
                l.matched_dim.to_string(),
                fmt_f64(l.matched_error),
                fmt_f64(l.dim_ratio()),
                (l.matched as u8).to_string(),
                fmt_f64(l.error_vs_finest),
            ]);
        }
        t
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.runs_table().write(&dir.join("sweep_runs.csv"), &self.config_hash)?;
        self.summary_table().write(&dir.join("sweep_summary.csv"), &self.config_hash)
    }
}

/// 3D layer counts tried for matching: fractions of `oracle_layers`.
pub fn sweep_layer_candidates(oracle_layers: usize) -> Vec<usize> {
    let mut c: Vec<usize> = [16, 8, 4, 2].iter().map(|d| oracle_layers / d).chain([3 * oracle_layers / 4, oracle_layers]).filter(|&m| m >= 1).collect();
    c.dedup();
    c
}

/// Steady Q3D and 3D runs on each transversal level. Errors are measured
/// against a Richardson extrapolation of the 3D runs at `oracle_layers` and
/// twice that on the same level.
pub fn run_efficiency_sweep(cfg: &BenchmarkConfig) -> Result<SweepReport> {
    let mut levels_in = cfg.sweep_levels.clone();
    levels_in.sort_unstable();
    levels_in.dedup();
    if levels_in.len() < 2 {
        return Err(Error::value("sweep_levels", "need at least two distinct levels"));
    }
    let td = cfg.theta_d;
    let interfaces = source_bracket_interfaces(
        cfg.excitation.z_q,
        cfg.excitation.sigma,
        cfg.se_elements,
        cfg.length,
        cfg.min_element_fraction,
    );
    let mut levels = Vec::new();
    let mut oracle_values = Vec::new();
    for &level in &levels_in {
        let su = setup(cfg, level)?;
        let [x, y, z] = su.hot_spot;
        let problem = su.problem(cfg)?;
        let mesh1d = SpectralMesh1D::new(interfaces.clone(), cfg.se_degree)?;
        let system = problem.assemble(&mesh1d)?;
        let q3d_hot = solve_steady(&problem, &system, cfg.linear_solver)?.evaluate(x, y, z)?;

        let ref_hot = |layers: usize| -> Result<(usize, f64)> {
            let mesh = extrude(su.mesh2d.clone(), cfg.length, layers)?;
            let sys = assemble_3d(&mesh, &su.fields, &cfg.excitation.profile(), td)?;
            Ok((sys.dim(), solve_3d_steady(&sys, cfg.linear_solver)?.evaluate(x, y, z)?))
        };
        let r = cfg.oracle_layers;
        let (_, fine) = ref_hot(2 * r)?;
        let mut runs = Vec::new();
        let mut at_r = f64::NAN;
        for m in sweep_layer_candidates(r) {
            let (dim, hot) = ref_hot(m)?;
            if m == r {
                at_r = hot;
            }
            runs.push((m, dim, hot));
        }
        let reference = fine + (fine - at_r) / 3.0;
        let q3d_error = relative_difference(q3d_hot, reference, td);
        let runs: Vec<(usize, usize, f64, f64)> =
            runs.into_iter().map(|(m, d, h)| (m, d, h, relative_difference(h, reference, td))).collect();
        let hit = runs.iter().find(|r| r.3 <= SWEEP_ERROR_MATCH * q3d_error);
        let chosen = hit.unwrap_or_else(|| runs.last().unwrap());
        oracle_values.push(at_r);
        levels.push(SweepLevel {
            level,
            triangles: su.mesh2d.triangle_count(),
            fe_nodes: su.mesh2d.node_count(),
            q3d_dim: system.dim(),
            q3d_hot_spot: q3d_hot,
            q3d_error,
            reference_hot_spot: reference,
            matched_layers: chosen.0,
            matched_dim: chosen.1,
            matched_error: chosen.3,
            matched: hit.is_some(),
            ref3d_runs: runs,
            error_vs_finest: f64::NAN,
        });
    }
    let finest = levels.last().unwrap().reference_hot_spot;
    for (l, v) in levels.iter_mut().zip(oracle_values) {
        l.error_vs_finest = relative_difference(v, finest, td);
    }
    Ok(SweepReport { levels, config_hash: cfg.hash() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> BenchmarkConfig {
        BenchmarkConfig::parse("refinement_level = 0\noracle_layers = 40\nt_end = 1e-3\nprofile_times = 5e-4\nvtk_z_samples = 5\nprofile_samples = 11").unwrap()
    }

    #[test]
    fn relative_difference_conventions() {
        assert_eq!(relative_difference(2.0, 2.0, 2.0), 0.0);
        assert!((relative_difference(3.1, 3.0, 2.0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_run_is_initial_state() {
        let mut cfg = quick();
        cfg.t_end = 0.0;
        cfg.profile_times = vec![0.0];
        for solver in [SolverKind::Q3d, SolverKind::Ref3d] {
            let run = run_benchmark(&cfg, solver).unwrap();
            assert_eq!(run.probes.rows.len(), 1);
            assert_eq!(run.probes.rows[0][1], fmt_f64(2.0));
            assert_eq!(run.probes.rows[0][2], fmt_f64(2.0));
        }
    }

    #[test]
    fn runs_are_deterministic_and_monotone() {
        let cfg = quick();
        let a = run_benchmark(&cfg, SolverKind::Q3d).unwrap();
        let b = run_benchmark(&cfg, SolverKind::Q3d).unwrap();
        assert_eq!(a.probes.render("h"), b.probes.render("h"));
        assert_eq!(a.profiles.render("h"), b.profiles.render("h"));
        assert_eq!(a.vtk, b.vtk);
        assert!(a.hot_spot.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(a.profiles.rows.len(), 11);
        let events = a.events.as_ref().unwrap();
        assert_eq!(events.rows.len(), 1);
    }

    #[test]
    fn artifacts_are_written() {
        let cfg = quick();
        let dir = tempfile::tempdir().unwrap();
        run_benchmark(&cfg, SolverKind::Ref3d).unwrap().write(dir.path(), &cfg).unwrap();
        for f in ["probes_ref3d.csv", "profiles_ref3d.csv", "field_ref3d.vtk", "metadata_ref3d.json", "config_resolved.txt"] {
            let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
            assert!(text.contains(&cfg.hash()), "{f}");
        }
        let echo = std::fs::read_to_string(dir.path().join("config_resolved.txt")).unwrap();
        assert_eq!(BenchmarkConfig::parse(&echo).unwrap(), cfg);
    }

    #[test]
    fn layer_candidates() {
        assert_eq!(sweep_layer_candidates(400), vec![25, 50, 100, 200, 300, 400]);
        assert_eq!(sweep_layer_candidates(2), vec![1, 2]);
    }

    #[test]
    fn sweep_needs_two_levels() {
        let mut cfg = quick();
        cfg.sweep_levels = vec![0, 0];
        assert!(run_efficiency_sweep(&cfg).is_err());
    }
}
