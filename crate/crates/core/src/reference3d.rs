//! Full 3D finite elements on the extruded cross-section.
//!
//! Every triangle is extruded into a stack of linear prisms. Element
//! matrices are assembled prism by prism from the triangle and interval
//! matrices, and nodes are numbered layer-major (`layer · J + node`). The
//! solver serves as the reference for the quasi-3D path.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem2d::{element_mass, element_stiffness, FeFields};
use crate::geometry::{Mesh2D, PointLocation};
use crate::spectral::gauss_legendre;
use crate::solver::LinearSolver;
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::system::{is_due, step_count, ConstrainedSystem, Profile};

/// Cross-section mesh extruded over a uniform z-grid.
#[derive(Clone, Debug)]
pub struct PrismMesh3D {
    pub mesh2d: Arc<Mesh2D>,
    z: Vec<f64>,
}

/// Uniform extrusion into `layers` slabs over `[0, length]`.
pub fn extrude(mesh2d: Arc<Mesh2D>, length: f64, layers: usize) -> Result<PrismMesh3D> {
    if layers == 0 || !(length > 0.0) {
        return Err(Error::SpectralMesh(format!("cannot extrude over {length} m with {layers} layers")));
    }
    let z = (0..=layers).map(|l| if l == layers { length } else { length * l as f64 / layers as f64 }).collect();
    Ok(PrismMesh3D { mesh2d, z })
}

impl PrismMesh3D {
    pub fn layers(&self) -> usize {
        self.z.len() - 1
    }

    pub fn z_grid(&self) -> &[f64] {
        &self.z
    }

    pub fn length(&self) -> f64 {
        *self.z.last().unwrap()
    }

    pub fn node_count(&self) -> usize {
        self.mesh2d.node_count() * self.z.len()
    }

    pub fn cell_count(&self) -> usize {
        self.mesh2d.triangle_count() * self.layers()
    }

    pub fn node_index(&self, layer: usize, node: usize) -> usize {
        layer * self.mesh2d.node_count() + node
    }

    pub fn prism_volume(&self, triangle: usize, layer: usize) -> f64 {
        self.mesh2d.signed_area(triangle).abs() * (self.z[layer + 1] - self.z[layer])
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.mesh2d.triangle_count())
            .flat_map(|t| (0..self.layers()).map(move |l| (t, l)))
            .map(|(t, l)| self.prism_volume(t, l))
            .sum()
    }

    /// Slab containing `z` and the local coordinate in `[0, 1]`.
    pub fn locate_z(&self, z: f64) -> Result<(usize, f64)> {
        let length = self.length();
        if !(z >= 0.0 && z <= length) {
            return Err(Error::OutsideInterval { z, length });
        }
        let l = self.z[1..].partition_point(|&b| b < z).min(self.layers() - 1);
        let s = ((z - self.z[l]) / (self.z[l + 1] - self.z[l])).clamp(0.0, 1.0);
        Ok((l, s))
    }
}

pub type PrismMatrix = [[f64; 6]; 6];

/// Stiffness and capacity matrices of one prism (triangle `p` times
/// `[z0, z1]`). Local node `a·3 + i` is triangle vertex `i` on the bottom
/// (`a = 0`) or top (`a = 1`) face.
pub fn prism_matrices(p: &[[f64; 2]; 3], z0: f64, z1: f64, lambda: f64, c_v: f64) -> Result<(PrismMatrix, PrismMatrix)> {
    let h = z1 - z0;
    if !(h > 0.0) {
        return Err(Error::SpectralMesh(format!("empty slab [{z0}, {z1}]")));
    }
    let kt = element_stiffness(p, lambda)?;
    let mt_lambda = element_mass(p, lambda)?;
    let mt_cv = element_mass(p, c_v)?;
    let m1 = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
    let k1 = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
    let mut k = [[0.0; 6]; 6];
    let mut m = [[0.0; 6]; 6];
    for a in 0..2 {
        for b in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    k[a * 3 + i][b * 3 + j] = m1[a][b] * kt[i][j] + k1[a][b] * mt_lambda[i][j];
                    m[a * 3 + i][b * 3 + j] = m1[a][b] * mt_cv[i][j];
                }
            }
        }
    }
    Ok((k, m))
}

/// `∫ g(z) ℓ_a(z) dz` over `[z0, z1]` for the two linear hats, 3-point Gauss.
fn slab_load(z0: f64, z1: f64, g: &dyn Fn(f64) -> f64) -> [f64; 2] {
    let (x, w) = gauss_legendre(3);
    let h = z1 - z0;
    let mut out = [0.0; 2];
    for (xi, wi) in x.iter().zip(&w) {
        let s = 0.5 * (xi + 1.0);
        let gz = g(z0 + s * h) * wi * 0.5 * h;
        out[0] += gz * (1.0 - s);
        out[1] += gz * s;
    }
    out
}

/// Assembled 3D operators before boundary conditions.
#[derive(Clone, Debug)]
pub struct System3D {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    pub load: Vec<f64>,
    pub mesh: PrismMesh3D,
    pub theta_d: f64,
}

pub fn assemble_3d(mesh: &PrismMesh3D, fields: &FeFields, profile: &Profile, theta_d: f64) -> Result<System3D> {
    let m2 = &mesh.mesh2d;
    let n = mesh.node_count();
    let cap = 36 * mesh.cell_count();
    let mut k = TripletBuilder::with_capacity(n, n, cap);
    let mut m = TripletBuilder::with_capacity(n, n, cap);
    let mut load = vec![0.0; n];
    let g = |z: f64| profile(z);
    for (t, tri) in m2.triangles.iter().enumerate() {
        let p = m2.triangle_points(t);
        let region = m2.regions[t];
        let (lambda, c_v, q) = (fields.lambda.get(region)?, fields.c_v.get(region)?, fields.source.get(region)?);
        let tri_share = q * m2.signed_area(t).abs() / 3.0;
        for l in 0..mesh.layers() {
            let (z0, z1) = (mesh.z[l], mesh.z[l + 1]);
            let (ke, me) = prism_matrices(&p, z0, z1, lambda, c_v)?;
            let idx: Vec<usize> = (0..2).flat_map(|a| tri.iter().map(move |&v| (a, v))).map(|(a, v)| mesh.node_index(l + a, v)).collect();
            for a in 0..6 {
                for b in 0..6 {
                    k.push(idx[a], idx[b], ke[a][b]);
                    m.push(idx[a], idx[b], me[a][b]);
                }
            }
            if tri_share != 0.0 {
                let zl = slab_load(z0, z1, &g);
                for a in 0..2 {
                    for &v in tri {
                        load[mesh.node_index(l + a, v)] += tri_share * zl[a];
                    }
                }
            }
        }
    }
    Ok(System3D { stiffness: k.build(true), mass: m.build(true), load, mesh: mesh.clone(), theta_d })
}

impl System3D {
    pub fn dim(&self) -> usize {
        self.load.len()
    }

    /// Eliminates the end layers (zero rise).
    pub fn apply_dirichlet(&self) -> ConstrainedSystem {
        let j = self.mesh.mesh2d.node_count();
        let free = j..j * self.mesh.layers();
        ConstrainedSystem {
            stiffness: self.stiffness.principal_submatrix(free.clone()),
            mass: self.mass.principal_submatrix(free.clone()),
            load: self.load[free.clone()].to_vec(),
            free: free.collect(),
            full_dim: self.dim(),
        }
    }

    /// Initial nodal rise, `rise` everywhere except the end layers.
    pub fn uniform_rise(&self, rise: f64) -> Vec<f64> {
        let j = self.mesh.mesh2d.node_count();
        let mut u = vec![rise; self.dim()];
        u[..j].fill(0.0);
        u[self.dim() - j..].fill(0.0);
        u
    }
}

/// Nodal 3D temperature field.
#[derive(Clone, Debug)]
pub struct NodalSolution3D {
    /// Nodal rise, layer-major.
    pub values: Vec<f64>,
    pub mesh: PrismMesh3D,
    pub theta_d: f64,
    pub time: f64,
}

impl NodalSolution3D {
    pub fn evaluate_located(&self, loc: &PointLocation, z: f64) -> Result<f64> {
        let (l, s) = self.mesh.locate_z(z)?;
        let tri = self.mesh.mesh2d.triangles[loc.triangle];
        let mut rise = 0.0;
        for i in 0..3 {
            let lo = self.values[self.mesh.node_index(l, tri[i])];
            let hi = self.values[self.mesh.node_index(l + 1, tri[i])];
            rise += loc.bary[i] * ((1.0 - s) * lo + s * hi);
        }
        Ok(self.theta_d + rise)
    }

    pub fn evaluate(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        let loc = self.mesh.mesh2d.locate_point(x, y)?;
        self.evaluate_located(&loc, z)
    }

    /// Nodal temperatures of the cross-section at `z`.
    pub fn slice(&self, z: f64) -> Result<Vec<f64>> {
        let (l, s) = self.mesh.locate_z(z)?;
        let j = self.mesh.mesh2d.node_count();
        Ok((0..j)
            .map(|n| self.theta_d + (1.0 - s) * self.values[l * j + n] + s * self.values[(l + 1) * j + n])
            .collect())
    }
}

pub fn solve_3d_steady(system: &System3D, solver: LinearSolver) -> Result<NodalSolution3D> {
    let values = system.apply_dirichlet().solve_steady(solver)?;
    Ok(NodalSolution3D { values, mesh: system.mesh.clone(), theta_d: system.theta_d, time: f64::INFINITY })
}

#[derive(Clone, Debug)]
pub struct Transient3DOptions {
    pub dt: f64,
    pub t_end: f64,
    pub theta_0: f64,
    pub solver: LinearSolver,
    pub probes: Vec<[f64; 3]>,
    pub snapshot_times: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Transient3DResult {
    pub times: Vec<f64>,
    pub probe_values: Vec<Vec<f64>>,
    pub snapshots: Vec<NodalSolution3D>,
    pub final_solution: NodalSolution3D,
}

pub fn solve_3d_transient(system: &System3D, opts: &Transient3DOptions) -> Result<Transient3DResult> {
    let n_steps = step_count(opts.t_end, opts.dt)?;
    let constrained = system.apply_dirichlet();
    let stepper = constrained.backward_euler(opts.dt, opts.solver)?;
    let mut u = constrained.restrict(&system.uniform_rise(opts.theta_0 - system.theta_d));
    let m2 = &system.mesh.mesh2d;
    let locations: Vec<PointLocation> = opts.probes.iter().map(|p| m2.locate_point(p[0], p[1])).collect::<Result<_>>()?;
    let wrap = |u: &[f64], time: f64| NodalSolution3D {
        values: constrained.expand(u),
        mesh: system.mesh.clone(),
        theta_d: system.theta_d,
        time,
    };
    let record = |sol: &NodalSolution3D| -> Result<Vec<f64>> {
        locations.iter().zip(&opts.probes).map(|(loc, p)| sol.evaluate_located(loc, p[2])).collect()
    };
    let mut current = wrap(&u, 0.0);
    let mut times = vec![0.0];
    let mut probe_values = vec![record(&current)?];
    let mut snapshots = Vec::new();
    if opts.snapshot_times.iter().any(|&t| t.abs() <= 1e-9 * opts.dt) {
        snapshots.push(current.clone());
    }
    for step in 1..=n_steps {
        let t_prev = (step - 1) as f64 * opts.dt;
        let t = step as f64 * opts.dt;
        u = stepper.step(&u)?;
        current = wrap(&u, t);
        times.push(t);
        probe_values.push(record(&current)?);
        if opts.snapshot_times.iter().any(|&ts| is_due(ts, t_prev, t, opts.dt)) {
            snapshots.push(current.clone());
        }
    }
    Ok(Transient3DResult { times, probe_values, snapshots, final_solution: current })
}
