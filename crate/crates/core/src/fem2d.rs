//! Linear nodal finite elements on the triangulated cross-section.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{signed_area, CrossSectionSpec, Mesh2D, Region};
use crate::sparse::{SparseMatrix, TripletBuilder};

pub type ElementMatrix = [[f64; 3]; 3];

fn checked_area(p: &[[f64; 2]; 3]) -> Result<f64> {
    let area = signed_area(p).abs();
    let scale = (0..3)
        .flat_map(|i| [(p[(i + 1) % 3][0] - p[i][0]).abs(), (p[(i + 1) % 3][1] - p[i][1]).abs()])
        .fold(0.0f64, f64::max);
    if !(area > 1e-14 * scale * scale) {
        return Err(Error::DegenerateTriangle { area });
    }
    Ok(area)
}

/// `λ ∫ ∇N_j·∇N_i` over one triangle.
pub fn element_stiffness(p: &[[f64; 2]; 3], lambda: f64) -> Result<ElementMatrix> {
    let area = checked_area(p)?;
    // gradients of the barycentric coordinates times 2·area
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let scale = lambda / (4.0 * area);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = scale * (b[i] * b[j] + c[i] * c[j]);
        }
    }
    Ok(k)
}

/// `α ∫ N_j N_i` over one triangle, exact for constant `α`.
pub fn element_mass(p: &[[f64; 2]; 3], alpha: f64) -> Result<ElementMatrix> {
    let area = checked_area(p)?;
    let off = alpha * area / 12.0;
    let mut m = [[off; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 2.0 * off;
    }
    Ok(m)
}

/// Piecewise-constant coefficient, one value per region tag.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionField(BTreeMap<Region, f64>);

impl RegionField {
    pub fn new() -> Self {
        RegionField(BTreeMap::new())
    }

    pub fn with(mut self, region: Region, value: f64) -> Self {
        self.0.insert(region, value);
        self
    }

    pub fn get(&self, region: Region) -> Result<f64> {
        self.0.get(&region).copied().ok_or_else(|| Error::MissingCoefficient(region.to_string()))
    }

    /// `cable` on every cable, `insulation` elsewhere.
    pub fn by_material(n_cables: usize, cable: f64, insulation: f64) -> Self {
        let mut field = RegionField::new().with(Region::Insulation, insulation);
        for i in 1..=n_cables {
            field = field.with(Region::Cable(i), cable);
        }
        field
    }

    /// `value` on `support`, zero on the other regions of the stack.
    pub fn indicator(n_cables: usize, support: Region, value: f64) -> Self {
        let mut field = RegionField::by_material(n_cables, 0.0, 0.0);
        field.0.insert(support, value);
        field
    }
}

/// Conductivity, heat capacity and transversal source density.
#[derive(Clone, Debug, PartialEq)]
pub struct FeFields {
    pub lambda: RegionField,
    pub c_v: RegionField,
    pub source: RegionField,
}

impl FeFields {
    /// Materials of `spec` with a uniform source density `q_hat` in the
    /// quenched (leftmost) cable.
    pub fn for_stack(spec: &CrossSectionSpec, q_hat: f64) -> Self {
        FeFields {
            lambda: RegionField::by_material(spec.n_cables, spec.cable.lambda, spec.insulation.lambda),
            c_v: RegionField::by_material(spec.n_cables, spec.cable.c_v, spec.insulation.c_v),
            source: RegionField::indicator(spec.n_cables, Region::Cable(1), q_hat),
        }
    }
}

/// Global cross-section operators.
#[derive(Clone, Debug)]
pub struct FeOperators {
    /// `∫ λ ∇N_j·∇N_i`
    pub stiffness: SparseMatrix,
    /// `∫ λ N_j N_i`, couples with the longitudinal stiffness.
    pub mass_lambda: SparseMatrix,
    /// `∫ C_V N_j N_i`
    pub mass_cv: SparseMatrix,
    /// `∫ q^t N_i`
    pub load: Vec<f64>,
}

impl FeOperators {
    pub fn node_count(&self) -> usize {
        self.load.len()
    }
}

pub fn assemble_fe_operators(mesh: &Mesh2D, fields: &FeFields) -> Result<FeOperators> {
    let n = mesh.node_count();
    let cap = 9 * mesh.triangle_count();
    let mut k = TripletBuilder::with_capacity(n, n, cap);
    let mut ml = TripletBuilder::with_capacity(n, n, cap);
    let mut mc = TripletBuilder::with_capacity(n, n, cap);
    let mut load = vec![0.0; n];

    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.triangle_points(t);
        let region = mesh.regions[t];
        let lambda = fields.lambda.get(region)?;
        let c_v = fields.c_v.get(region)?;
        let q = fields.source.get(region)?;
        let ke = element_stiffness(&p, lambda)?;
        let mle = element_mass(&p, lambda)?;
        let mce = element_mass(&p, c_v)?;
        let share = q * signed_area(&p).abs() / 3.0;
        for i in 0..3 {
            load[tri[i]] += share;
            for j in 0..3 {
                k.push(tri[i], tri[j], ke[i][j]);
                ml.push(tri[i], tri[j], mle[i][j]);
                mc.push(tri[i], tri[j], mce[i][j]);
            }
        }
    }

    Ok(FeOperators { stiffness: k.build(true), mass_lambda: ml.build(true), mass_cv: mc.build(true), load })
}
