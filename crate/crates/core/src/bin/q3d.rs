use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use q3d::benchmark::{run_benchmark, run_efficiency_sweep, run_validation, SolverKind};
use q3d::config::BenchmarkConfig;
use q3d::geometry::{build_benchmark_cross_section, triangulate_structured};
use q3d::output::{mesh_vtk, write_text};
use q3d::Error;

#[derive(Parser, Debug)]
#[command(name = "q3d", version, about = "Quasi-3D thermal solver for stacked superconducting cables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Config file (`key = value` lines); defaults are used when absent.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set dt=1e-4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Solver {
    Q3d,
    Ref3d,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transient benchmark run with one solver.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Solver::Q3d)]
        solver: Solver,
    },
    /// Q3D with and without adaptation against the 3D reference.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Steady-state dimension/error sweep over refinement levels.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Write the cross-section mesh as legacy VTK.
    MeshExport {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(Error),
    Run(Error),
    Threshold(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConfigParse { .. } | Error::ConfigValue { .. } | Error::Geometry(_) => Failure::Config(e),
            other => Failure::Run(other),
        }
    }
}

fn load(common: &Common) -> Result<BenchmarkConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => BenchmarkConfig::from_file(path).map_err(Failure::Config)?,
        None => BenchmarkConfig::default(),
    };
    for kv in &common.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            Failure::Config(Error::ConfigParse { line: 0, message: format!("`--set {kv}` is not KEY=VALUE") })
        })?;
        cfg.set(k.trim(), v.trim()).map_err(Failure::Config)?;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate().map_err(Failure::Config)?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { common, solver } => {
            let cfg = load(&common)?;
            let kind = match solver {
                Solver::Q3d => SolverKind::Q3d,
                Solver::Ref3d => SolverKind::Ref3d,
            };
            let run = run_benchmark(&cfg, kind)?;
            run.write(&cfg.output_dir, &cfg)?;
            if let Some(last) = run.hot_spot.last() {
                println!("{}: hot spot {last:.6} K at t = {} s", kind.name(), cfg.t_end);
            }
            println!("outputs in {}", cfg.output_dir.display());
        }
        Command::Validate { common } => {
            let cfg = load(&common)?;
            let report = run_validation(&cfg)?;
            report.write(&cfg.output_dir)?;
            println!("relative difference without adaptation: {:.4e}", report.final_difference);
            println!("relative difference with adaptation:    {:.4e}", report.final_difference_adapted);
            println!("coarse reference difference:            {:.4e}", report.oracle_self_difference);
            if !report.passed() {
                return Err(Failure::Threshold("validation thresholds not met".into()));
            }
        }
        Command::Sweep { common } => {
            let cfg = load(&common)?;
            let report = run_efficiency_sweep(&cfg)?;
            report.write(&cfg.output_dir)?;
            for l in &report.levels {
                println!(
                    "level {}: q3d dim {} err {:.3e}; ref3d M_z {} dim {} err {:.3e}; ratio {:.4}",
                    l.level,
                    l.q3d_dim,
                    l.q3d_error,
                    l.matched_layers,
                    l.matched_dim,
                    l.matched_error,
                    l.dim_ratio()
                );
            }
        }
        Command::MeshExport { common } => {
            let cfg = load(&common)?;
            let geometry = build_benchmark_cross_section(&cfg.geometry)?;
            let mesh = triangulate_structured(&geometry, cfg.refinement_level);
            let path = cfg.output_dir.join("mesh.vtk");
            write_text(&path, &mesh_vtk(&mesh, &cfg.hash()))?;
            println!("{} triangles, {} nodes -> {}", mesh.triangle_count(), mesh.node_count(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Threshold(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}
