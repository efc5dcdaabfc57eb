//! Coupled quasi-3D system: Kronecker assembly, boundary conditions and
//! steady / backward-Euler solves.
//!
//! Unknowns are temperature rises `u = θ - θ_D` in spectral space, indexed
//! mode-major: `flat = global_mode · J + fe_node`. With that ordering
//!
//! ```text
//! K = M_se ⊗ K_fe + K_se ⊗ M_fe(λ)
//! M = M_se ⊗ M_fe(C_V)
//! q = q_se ⊗ q_fe
//! ```
//!
//! The end modes at `z = 0` and `z = ℓ_z` are nodal, so the isothermal ends
//! are imposed by dropping the first and last `J` unknowns.

use std::ops::Range;
use std::sync::Arc;

use crate::adaptivity::{adapt_and_reassemble, AdaptEvent, AdaptOptions};
use crate::error::{Error, Result};
use crate::fem2d::{assemble_fe_operators, FeFields, FeOperators};
use crate::geometry::{Mesh2D, PointLocation};
use crate::solver::{Factorization, LinearSolver};
use crate::sparse::{kron, kron_vec, SparseMatrix};
use crate::spectral::{assemble_se_global, assemble_se_load, ModalBasis, SeOperators, SpectralMesh1D};

/// Longitudinal source profile `q^ℓ(z)` (dimensionless factor).
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Gaussian quench heat source `q̂ exp(-(z - z_q)² / σ²)` in the quenched cable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Excitation {
    /// Amplitude in W/m³.
    pub q_hat: f64,
    /// Width in m.
    pub sigma: f64,
    /// Quench location in m.
    pub z_q: f64,
}

impl Default for Excitation {
    fn default() -> Self {
        Excitation { q_hat: 1e6, sigma: 0.05, z_q: 0.33 }
    }
}

impl Excitation {
    pub fn longitudinal(&self, z: f64) -> f64 {
        let d = (z - self.z_q) / self.sigma;
        (-d * d).exp()
    }

    pub fn profile(&self) -> Profile {
        let e = *self;
        Arc::new(move |z| e.longitudinal(z))
    }
}

/// Cross-section operators plus everything needed to rebuild the coupled
/// system on a new longitudinal mesh.
#[derive(Clone)]
pub struct Q3dProblem {
    pub mesh2d: Arc<Mesh2D>,
    pub fe: FeOperators,
    profile: Profile,
    pub length: f64,
    pub theta_d: f64,
}

impl std::fmt::Debug for Q3dProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Q3dProblem")
            .field("fe_nodes", &self.fe.node_count())
            .field("length", &self.length)
            .field("theta_d", &self.theta_d)
            .finish()
    }
}

impl Q3dProblem {
    pub fn new(mesh2d: Arc<Mesh2D>, fields: &FeFields, profile: Profile, length: f64, theta_d: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::SpectralMesh(format!("length must be positive, got {length}")));
        }
        let fe = assemble_fe_operators(&mesh2d, fields)?;
        Ok(Q3dProblem { mesh2d, fe, profile, length, theta_d })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Assembles the longitudinal factors on `mesh1d` and the coupled system.
    pub fn assemble(&self, mesh1d: &SpectralMesh1D) -> Result<Q3dSystem> {
        if (mesh1d.length() - self.length).abs() > 1e-12 * self.length {
            return Err(Error::DimensionMismatch(format!(
                "spectral mesh spans {} but the model is {} long",
                mesh1d.length(),
                self.length
            )));
        }
        let se = assemble_se_global(mesh1d)?;
        let se_load = assemble_se_load(mesh1d, |z| (self.profile)(z))?;
        assemble_q3d(&self.fe, &se, &se_load, mesh1d, self.theta_d)
    }
}

/// Assembled quasi-3D operators before boundary conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct Q3dSystem {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    pub load: Vec<f64>,
    pub mesh1d: SpectralMesh1D,
    pub fe_nodes: usize,
    pub theta_d: f64,
}

/// Builds the Kronecker-product operators from cross-section and
/// longitudinal factors.
pub fn assemble_q3d(
    fe: &FeOperators,
    se: &SeOperators,
    se_load: &[f64],
    mesh1d: &SpectralMesh1D,
    theta_d: f64,
) -> Result<Q3dSystem> {
    let j = fe.node_count();
    let dz = se.dim();
    if se_load.len() != dz || mesh1d.dim() != dz {
        return Err(Error::DimensionMismatch(format!(
            "longitudinal operators of size {dz}, load of length {}, mesh of dimension {}",
            se_load.len(),
            mesh1d.dim()
        )));
    }
    for (name, m) in [("K_fe", &fe.stiffness), ("M_fe(λ)", &fe.mass_lambda), ("M_fe(C_V)", &fe.mass_cv)] {
        if m.nrows() != j || m.ncols() != j {
            return Err(Error::DimensionMismatch(format!("{name} is {}x{}, expected {j}x{j}", m.nrows(), m.ncols())));
        }
    }
    let stiffness = kron(&se.mass, &fe.stiffness).linear_combination(1.0, &kron(&se.stiffness, &fe.mass_lambda), 1.0)?;
    let mass = kron(&se.mass, &fe.mass_cv);
    let load = kron_vec(se_load, &fe.load);
    Ok(Q3dSystem { stiffness, mass, load, mesh1d: mesh1d.clone(), fe_nodes: j, theta_d })
}

impl Q3dSystem {
    pub fn dim(&self) -> usize {
        self.load.len()
    }

    pub fn z_dim(&self) -> usize {
        self.mesh1d.dim()
    }

    pub fn flat_index(&self, global_mode: usize, node: usize) -> usize {
        global_mode * self.fe_nodes + node
    }

    /// Flat index of local mode `mode` of element `element` at `node`.
    pub fn flat_index_local(&self, element: usize, mode: usize, node: usize) -> usize {
        self.flat_index(self.mesh1d.offset(element) + mode, node)
    }

    /// `(global_mode, node)` of a flat index.
    pub fn split_index(&self, flat: usize) -> (usize, usize) {
        (flat / self.fe_nodes, flat % self.fe_nodes)
    }

    /// Unknowns left after removing the two end-mode layers.
    pub fn free_range(&self) -> Range<usize> {
        self.fe_nodes..self.fe_nodes * (self.z_dim() - 1)
    }

    /// Eliminates the isothermal end layers (zero rise).
    pub fn apply_dirichlet(&self) -> ConstrainedSystem {
        let free = self.free_range();
        ConstrainedSystem {
            stiffness: self.stiffness.principal_submatrix(free.clone()),
            mass: self.mass.principal_submatrix(free.clone()),
            load: self.load[free.clone()].to_vec(),
            free: free.collect(),
            full_dim: self.dim(),
        }
    }

    /// Initial coefficients for a uniform rise `rise` away from the ends.
    pub fn uniform_rise(&self, rise: f64) -> Vec<f64> {
        let mut u = vec![0.0; self.dim()];
        if rise != 0.0 {
            for k in 1..self.mesh1d.element_count() {
                let mode = self.mesh1d.offset(k);
                for node in 0..self.fe_nodes {
                    u[self.flat_index(mode, node)] = rise;
                }
            }
        }
        u
    }
}

/// Symmetric system restricted to the free unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedSystem {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    pub load: Vec<f64>,
    /// Full-system index of each free unknown, ascending.
    pub free: Vec<usize>,
    pub full_dim: usize,
}

impl ConstrainedSystem {
    pub fn dim(&self) -> usize {
        self.load.len()
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Full vector with zero rise on the constrained unknowns.
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.full_dim];
        for (&i, &v) in self.free.iter().zip(free_values) {
            full[i] = v;
        }
        full
    }

    /// Solves `K u = q`; returns the full-length rise vector.
    pub fn solve_steady(&self, solver: LinearSolver) -> Result<Vec<f64>> {
        let u = Factorization::new(self.stiffness.clone(), solver)?.solve(&self.load)?;
        Ok(self.expand(&u))
    }

    pub fn backward_euler(&self, dt: f64, solver: LinearSolver) -> Result<BackwardEuler> {
        if !(dt > 0.0) {
            return Err(Error::Solver { reason: format!("time step must be positive, got {dt}"), history: Vec::new() });
        }
        let lhs = self.mass.linear_combination(1.0, &self.stiffness, dt)?;
        Ok(BackwardEuler {
            factor: Factorization::new(lhs, solver)?,
            mass: self.mass.clone(),
            load_dt: self.load.iter().map(|q| dt * q).collect(),
            dt,
        })
    }
}

/// `(M + dt K) u_{n+1} = M u_n + dt q` with the left-hand side factored once.
#[derive(Debug)]
pub struct BackwardEuler {
    factor: Factorization,
    mass: SparseMatrix,
    load_dt: Vec<f64>,
    dt: f64,
}

impl BackwardEuler {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances the free unknowns by one step.
    pub fn step(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = self.mass.mul_vec(u);
        rhs.iter_mut().zip(&self.load_dt).for_each(|(r, q)| *r += q);
        self.factor.solve(&rhs)
    }
}

/// Q3D degrees of freedom at one instant.
#[derive(Clone, Debug)]
pub struct SpectralSolution {
    /// Temperature-rise coefficients, mode-major.
    pub coeffs: Vec<f64>,
    pub mesh1d: SpectralMesh1D,
    pub mesh2d: Arc<Mesh2D>,
    pub theta_d: f64,
    pub time: f64,
}

impl SpectralSolution {
    pub fn fe_nodes(&self) -> usize {
        self.mesh2d.node_count()
    }

    /// Rise along the line of FE node `node` at `z`.
    pub fn node_rise(&self, node: usize, z: f64) -> Result<f64> {
        let (k, xi) = self.mesh1d.locate(z)?;
        let basis = ModalBasis::new(self.mesh1d.degree(k))?;
        let off = self.mesh1d.offset(k);
        let j = self.fe_nodes();
        Ok(basis.values(xi).iter().enumerate().map(|(p, phi)| phi * self.coeffs[(off + p) * j + node]).sum())
    }

    /// Temperature at a located cross-section point and axial position.
    pub fn evaluate_located(&self, loc: &PointLocation, z: f64) -> Result<f64> {
        let tri = self.mesh2d.triangles[loc.triangle];
        let mut rise = 0.0;
        for i in 0..3 {
            if loc.bary[i] != 0.0 {
                rise += loc.bary[i] * self.node_rise(tri[i], z)?;
            }
        }
        Ok(self.theta_d + rise)
    }

    /// Temperature in K at `(x, y, z)`.
    pub fn evaluate(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        let loc = self.mesh2d.locate_point(x, y)?;
        self.evaluate_located(&loc, z)
    }

    /// Nodal temperatures of the whole cross-section at `z`.
    pub fn slice(&self, z: f64) -> Result<Vec<f64>> {
        (0..self.fe_nodes()).map(|n| Ok(self.theta_d + self.node_rise(n, z)?)).collect()
    }
}

/// Steady solution of the constrained system.
pub fn solve_steady(problem: &Q3dProblem, system: &Q3dSystem, solver: LinearSolver) -> Result<SpectralSolution> {
    let coeffs = system.apply_dirichlet().solve_steady(solver)?;
    Ok(SpectralSolution {
        coeffs,
        mesh1d: system.mesh1d.clone(),
        mesh2d: problem.mesh2d.clone(),
        theta_d: system.theta_d,
        time: f64::INFINITY,
    })
}

/// Number of steps of size `dt` that reach `t_end`.
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Solver { reason: format!("invalid time span {t_end} / step {dt}"), history: Vec::new() });
    }
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(Error::Solver {
            reason: format!("t_end = {t_end} is not a multiple of dt = {dt}"),
            history: Vec::new(),
        });
    }
    Ok(n as usize)
}

/// Settings of a transient run.
#[derive(Clone, Debug)]
pub struct TransientOptions {
    pub dt: f64,
    pub t_end: f64,
    pub theta_0: f64,
    pub solver: LinearSolver,
    /// Points `(x, y, z)` recorded after every step.
    pub probes: Vec<[f64; 3]>,
    /// Times at which the full solution is kept.
    pub snapshot_times: Vec<f64>,
    pub adapt: AdaptOptions,
}

#[derive(Clone, Debug)]
pub struct TransientResult {
    pub times: Vec<f64>,
    /// `probe_values[step][probe]` in K.
    pub probe_values: Vec<Vec<f64>>,
    pub snapshots: Vec<SpectralSolution>,
    pub final_solution: SpectralSolution,
    pub events: Vec<AdaptEvent>,
    pub system_dim: usize,
    pub nnz: usize,
}

pub(crate) fn is_due(target: f64, t_prev: f64, t_now: f64, dt: f64) -> bool {
    let eps = 1e-9 * dt;
    t_prev + eps < target && target <= t_now + eps
}

/// Backward-Euler march from a uniform initial temperature, with optional
/// longitudinal mesh adaptation between steps.
pub fn solve_transient(problem: &Q3dProblem, initial_mesh: &SpectralMesh1D, opts: &TransientOptions) -> Result<TransientResult> {
    let n_steps = step_count(opts.t_end, opts.dt)?;
    let mut system = problem.assemble(initial_mesh)?;
    let mut constrained = system.apply_dirichlet();
    let mut stepper = constrained.backward_euler(opts.dt, opts.solver)?;
    let mut u = constrained.restrict(&system.uniform_rise(opts.theta_0 - problem.theta_d));

    let locations: Vec<PointLocation> =
        opts.probes.iter().map(|p| problem.mesh2d.locate_point(p[0], p[1])).collect::<Result<_>>()?;
    let wrap = |coeffs: Vec<f64>, mesh1d: &SpectralMesh1D, time: f64| SpectralSolution {
        coeffs,
        mesh1d: mesh1d.clone(),
        mesh2d: problem.mesh2d.clone(),
        theta_d: problem.theta_d,
        time,
    };
    let record = |sol: &SpectralSolution| -> Result<Vec<f64>> {
        locations.iter().zip(&opts.probes).map(|(loc, p)| sol.evaluate_located(loc, p[2])).collect()
    };

    let mut current = wrap(constrained.expand(&u), &system.mesh1d, 0.0);
    let mut times = vec![0.0];
    let mut probe_values = vec![record(&current)?];
    let mut snapshots = Vec::new();
    let mut events = Vec::new();
    if opts.snapshot_times.iter().any(|&t| t.abs() <= 1e-9 * opts.dt) {
        snapshots.push(current.clone());
    }

    for step in 1..=n_steps {
        let t_prev = (step - 1) as f64 * opts.dt;
        let t = step as f64 * opts.dt;
        u = stepper.step(&u)?;
        current = wrap(constrained.expand(&u), &system.mesh1d, t);

        if opts.adapt.schedule.is_due(step, t_prev, t, opts.dt, opts.t_end) {
            let (new_system, new_solution, event) = adapt_and_reassemble(problem, &system, &current, &opts.adapt)?;
            if event.changed {
                system = new_system;
                constrained = system.apply_dirichlet();
                stepper = constrained.backward_euler(opts.dt, opts.solver)?;
                u = constrained.restrict(&new_solution.coeffs);
                current = new_solution;
            }
            events.push(event);
        }

        times.push(t);
        probe_values.push(record(&current)?);
        if opts.snapshot_times.iter().any(|&ts| is_due(ts, t_prev, t, opts.dt)) {
            snapshots.push(current.clone());
        }
    }

    Ok(TransientResult {
        times,
        probe_values,
        snapshots,
        final_solution: current,
        events,
        system_dim: system.dim(),
        nnz: system.stiffness.nnz(),
    })
}
