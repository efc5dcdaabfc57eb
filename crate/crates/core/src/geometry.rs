//! Cable-stack cross-section geometry and its structured triangulation.
//!
//! The cross-section is a tensor grid of strips: horizontally an alternating
//! pattern of insulation and cable strips (`I C I C ... C I`, one shared
//! insulation strip between neighbouring cables), vertically an insulation
//! strip, the cable interior and another insulation strip. Every grid cell
//! carries a [`Region`] tag. The origin sits at the lower-left corner.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Homogenized thermal properties of one material.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialProps {
    /// Thermal conductivity in W/m/K.
    pub lambda: f64,
    /// Volumetric heat capacity in J/m³/K.
    pub c_v: f64,
}

impl MaterialProps {
    pub const BENCHMARK_CABLE: MaterialProps = MaterialProps { lambda: 235.6, c_v: 314.1 };
    pub const GLASS_FIBRE: MaterialProps = MaterialProps { lambda: 0.01, c_v: 750.0 };

    pub fn validate(&self, what: &str) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Geometry(format!("{what}: conductivity must be positive")));
        }
        if !(self.c_v > 0.0 && self.c_v.is_finite()) {
            return Err(Error::Geometry(format!("{what}: heat capacity must be positive")));
        }
        Ok(())
    }
}

/// Parameters of a stack of rectangular cables wrapped in insulation.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSectionSpec {
    pub cable_width: f64,
    pub cable_height: f64,
    pub insulation_thickness: f64,
    pub n_cables: usize,
    pub cable: MaterialProps,
    pub insulation: MaterialProps,
}

impl Default for CrossSectionSpec {
    /// Three Rutherford cables of 1.5 mm × 15 mm with 0.1 mm glass fibre.
    fn default() -> Self {
        CrossSectionSpec {
            cable_width: 1.5e-3,
            cable_height: 15e-3,
            insulation_thickness: 0.1e-3,
            n_cables: 3,
            cable: MaterialProps::BENCHMARK_CABLE,
            insulation: MaterialProps::GLASS_FIBRE,
        }
    }
}

impl CrossSectionSpec {
    pub fn total_width(&self) -> f64 {
        self.n_cables as f64 * self.cable_width
            + (self.n_cables + 1) as f64 * self.insulation_thickness
    }

    pub fn total_height(&self) -> f64 {
        self.cable_height + 2.0 * self.insulation_thickness
    }

    /// Zero insulation thickness is accepted and removes the insulation strips.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Geometry(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.cable_width, "cable_width")?;
        positive(self.cable_height, "cable_height")?;
        if !(self.insulation_thickness >= 0.0 && self.insulation_thickness.is_finite()) {
            return Err(Error::Geometry(format!(
                "insulation_thickness must be non-negative, got {}",
                self.insulation_thickness
            )));
        }
        if self.n_cables == 0 {
            return Err(Error::Geometry("n_cables must be at least 1".into()));
        }
        self.cable.validate("cable")?;
        self.insulation.validate("insulation")
    }
}

/// Material region tag of a cell or triangle. Cables are numbered from 1,
/// left to right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Cable(usize),
    Insulation,
}

impl Region {
    /// Integer tag used in VTK output: the cable number, or 0 for insulation.
    pub fn tag(self) -> i32 {
        match self {
            Region::Cable(i) => i as i32,
            Region::Insulation => 0,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Cable(i) => write!(f, "cable {i}"),
            Region::Insulation => write!(f, "insulation"),
        }
    }
}

/// Axis-aligned sub-rectangle of the layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionRect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub region: Region,
}

impl RegionRect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn centroid(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }
}

/// Rectangle decomposition of a cross-section as a tensor grid of strips.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry2D {
    x_edges: Vec<f64>,
    y_edges: Vec<f64>,
    /// Row-major over strips: `regions[iy * nx + ix]`.
    regions: Vec<Region>,
    /// Target cell size at refinement level 0.
    base_cell: f64,
}

impl Geometry2D {
    /// A single rectangle with one region and one cell at level 0.
    pub fn rectangle(width: f64, height: f64, region: Region) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::Geometry(format!("rectangle {width} x {height} is not positive")));
        }
        Ok(Geometry2D {
            x_edges: vec![0.0, width],
            y_edges: vec![0.0, height],
            regions: vec![region],
            base_cell: width.max(height),
        })
    }

    pub fn width(&self) -> f64 {
        *self.x_edges.last().unwrap()
    }

    pub fn height(&self) -> f64 {
        *self.y_edges.last().unwrap()
    }

    fn strip_counts(&self) -> (usize, usize) {
        (self.x_edges.len() - 1, self.y_edges.len() - 1)
    }

    pub fn rects(&self) -> Vec<RegionRect> {
        let (nx, ny) = self.strip_counts();
        let mut out = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                out.push(RegionRect {
                    x0: self.x_edges[ix],
                    x1: self.x_edges[ix + 1],
                    y0: self.y_edges[iy],
                    y1: self.y_edges[iy + 1],
                    region: self.regions[iy * nx + ix],
                });
            }
        }
        out
    }

    /// The rectangle occupied by `region`, if it is a single rectangle.
    pub fn region_rect(&self, region: Region) -> Option<RegionRect> {
        let mut found = self.rects().into_iter().filter(|r| r.region == region);
        let first = found.next()?;
        found.next().is_none().then_some(first)
    }

    pub fn region_area(&self, region: Region) -> f64 {
        self.rects().iter().filter(|r| r.region == region).map(RegionRect::area).sum()
    }

    /// Support of the quench heat source: the leftmost cable.
    pub fn quench_region(&self) -> Region {
        Region::Cable(1)
    }
}

/// Builds the `I C I C ... C I` stack layout described by `spec`.
pub fn build_benchmark_cross_section(spec: &CrossSectionSpec) -> Result<Geometry2D> {
    spec.validate()?;
    let t = spec.insulation_thickness;
    let has_insulation = t > 0.0;

    let mut x_edges = vec![0.0];
    let mut x_kinds = Vec::new();
    let mut x = 0.0;
    let mut push = |edges: &mut Vec<f64>, kinds: &mut Vec<Option<usize>>, w: f64, kind| {
        x += w;
        edges.push(x);
        kinds.push(kind);
    };
    for cable in 1..=spec.n_cables {
        if has_insulation {
            push(&mut x_edges, &mut x_kinds, t, None);
        }
        push(&mut x_edges, &mut x_kinds, spec.cable_width, Some(cable));
    }
    if has_insulation {
        push(&mut x_edges, &mut x_kinds, t, None);
    }

    let (y_edges, y_interior) = if has_insulation {
        let h = spec.cable_height;
        (vec![0.0, t, t + h, 2.0 * t + h], vec![false, true, false])
    } else {
        (vec![0.0, spec.cable_height], vec![true])
    };

    let mut regions = Vec::with_capacity(x_kinds.len() * y_interior.len());
    for &interior in &y_interior {
        for kind in &x_kinds {
            regions.push(match (interior, kind) {
                (true, Some(c)) => Region::Cable(*c),
                _ => Region::Insulation,
            });
        }
    }

    Ok(Geometry2D { x_edges, y_edges, regions, base_cell: 0.5 * spec.cable_height })
}

/// Triangulated cross-section with per-triangle region tags.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh2D {
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    /// Edges on the outer hull (adiabatic boundary).
    pub hull_edges: Vec<[usize; 2]>,
    width: f64,
    height: f64,
}

/// Containing triangle and barycentric coordinates of a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLocation {
    pub triangle: usize,
    pub bary: [f64; 3],
}

fn strip_cells(len: f64, base_cell: f64, level: u32) -> usize {
    let base = ((len / base_cell) - 1e-9).ceil().max(1.0) as usize;
    base << level
}

fn subdivide(edges: &[f64], base_cell: f64, level: u32) -> (Vec<f64>, Vec<usize>) {
    let mut coords = vec![edges[0]];
    let mut strip_of_cell = Vec::new();
    for (s, w) in edges.windows(2).enumerate() {
        let n = strip_cells(w[1] - w[0], base_cell, level);
        for i in 1..=n {
            coords.push(if i == n { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / n as f64 });
            strip_of_cell.push(s);
        }
    }
    (coords, strip_of_cell)
}

/// Splits every strip of `geometry` into `2^level` times its base number of
/// cells and every quadrilateral cell into two triangles.
///
/// Cells below the horizontal mid-line are cut along the rising diagonal and
/// cells above it along the falling one, so the mesh is mirror-symmetric
/// about `y = height / 2` whenever the mid-line is a grid line.
pub fn triangulate_structured(geometry: &Geometry2D, refinement_level: u32) -> Mesh2D {
    let (xs, x_strip) = subdivide(&geometry.x_edges, geometry.base_cell, refinement_level);
    let (ys, y_strip) = subdivide(&geometry.y_edges, geometry.base_cell, refinement_level);
    let (nsx, _) = geometry.strip_counts();
    let ncx = xs.len() - 1;
    let ncy = ys.len() - 1;
    let row = ncx + 1;

    let mut nodes = Vec::with_capacity(row * (ncy + 1));
    for &y in &ys {
        for &x in &xs {
            nodes.push([x, y]);
        }
    }

    let mid = 0.5 * geometry.height();
    let mut triangles = Vec::with_capacity(2 * ncx * ncy);
    let mut regions = Vec::with_capacity(2 * ncx * ncy);
    for iy in 0..ncy {
        let lower = 0.5 * (ys[iy] + ys[iy + 1]) < mid;
        for ix in 0..ncx {
            let bl = iy * row + ix;
            let br = bl + 1;
            let tl = bl + row;
            let tr = tl + 1;
            let region = geometry.regions[y_strip[iy] * nsx + x_strip[ix]];
            if lower {
                triangles.push([bl, br, tr]);
                triangles.push([bl, tr, tl]);
            } else {
                triangles.push([bl, br, tl]);
                triangles.push([br, tr, tl]);
            }
            regions.push(region);
            regions.push(region);
        }
    }

    let mut mesh = Mesh2D {
        nodes,
        triangles,
        regions,
        hull_edges: Vec::new(),
        width: geometry.width(),
        height: geometry.height(),
    };
    mesh.hull_edges = mesh.boundary_edges();
    mesh
}

impl Mesh2D {
    /// Builds a mesh from raw parts; the bounding box starts at the origin.
    pub fn from_parts(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, regions: Vec<Region>) -> Result<Self> {
        if regions.len() != triangles.len() {
            return Err(Error::Geometry("one region tag per triangle required".into()));
        }
        if triangles.iter().flatten().any(|&i| i >= nodes.len()) {
            return Err(Error::Geometry("triangle references a missing node".into()));
        }
        let width = nodes.iter().fold(0.0f64, |m, p| m.max(p[0]));
        let height = nodes.iter().fold(0.0f64, |m, p| m.max(p[1]));
        let mut mesh = Mesh2D { nodes, triangles, regions, hull_edges: Vec::new(), width, height };
        mesh.hull_edges = mesh.boundary_edges();
        Ok(mesh)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        signed_area(&self.triangle_points(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangle_count()).map(|t| self.signed_area(t)).sum()
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.triangle_count())
            .filter(|&t| self.regions[t] == region)
            .map(|t| self.signed_area(t))
            .sum()
    }

    /// Distinct region tags in ascending order.
    pub fn region_tags(&self) -> Vec<Region> {
        let mut tags = self.regions.clone();
        tags.sort();
        tags.dedup();
        tags
    }

    fn edge_counts(&self) -> HashMap<[usize; 2], usize> {
        let mut counts = HashMap::new();
        for tri in &self.triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                *counts.entry([a.min(b), a.max(b)]).or_insert(0) += 1;
            }
        }
        counts
    }

    fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<_> = self
            .edge_counts()
            .into_iter()
            .filter_map(|(e, n)| (n == 1).then_some(e))
            .collect();
        edges.sort();
        edges
    }

    /// Checks orientation, conformity and that the boundary is the hull.
    pub fn check_valid(&self) -> Result<()> {
        for t in 0..self.triangle_count() {
            let area = self.signed_area(t);
            if !(area > 0.0) {
                return Err(Error::Geometry(format!("triangle {t} has signed area {area:e}")));
            }
        }
        let tol = 1e-12 * self.width.max(self.height);
        let on_hull = |p: [f64; 2]| {
            p[0].abs() <= tol
                || p[1].abs() <= tol
                || (p[0] - self.width).abs() <= tol
                || (p[1] - self.height).abs() <= tol
        };
        for (edge, count) in self.edge_counts() {
            match count {
                2 => {}
                1 if on_hull(self.nodes[edge[0]]) && on_hull(self.nodes[edge[1]]) => {}
                _ => {
                    return Err(Error::Geometry(format!(
                        "edge {edge:?} shared by {count} triangles"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Finds the triangle containing `(x, y)`. Points on shared edges go to
    /// the lowest triangle index.
    pub fn locate_point(&self, x: f64, y: f64) -> Result<PointLocation> {
        let tol = 1e-12;
        let slack = tol * self.width.max(self.height);
        if !(x >= -slack && x <= self.width + slack && y >= -slack && y <= self.height + slack) {
            return Err(Error::OutsideDomain { x, y });
        }
        for t in 0..self.triangle_count() {
            let bary = barycentric(&self.triangle_points(t), [x, y]);
            if bary.iter().all(|&b| b >= -tol) {
                let clamped = bary.map(|b| b.clamp(0.0, 1.0));
                let sum: f64 = clamped.iter().sum();
                return Ok(PointLocation { triangle: t, bary: clamped.map(|b| b / sum) });
            }
        }
        Err(Error::OutsideDomain { x, y })
    }

    /// Interpolates nodal values at a located point.
    pub fn interpolate(&self, loc: &PointLocation, values: &[f64]) -> f64 {
        let tri = self.triangles[loc.triangle];
        (0..3).map(|i| loc.bary[i] * values[tri[i]]).sum()
    }
}

pub(crate) fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn barycentric(p: &[[f64; 2]; 3], q: [f64; 2]) -> [f64; 3] {
    let area = signed_area(p);
    let sub = |a: [f64; 2], b: [f64; 2]| signed_area(&[a, b, q]) / area;
    let l0 = sub(p[1], p[2]);
    let l1 = sub(p[2], p[0]);
    [l0, l1, 1.0 - l0 - l1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benchmark_geometry() -> Geometry2D {
        build_benchmark_cross_section(&CrossSectionSpec::default()).unwrap()
    }

    #[test]
    fn benchmark_bounding_box() {
        let spec = CrossSectionSpec::default();
        assert!((spec.total_width() - 4.9e-3).abs() < 1e-15);
        assert!((spec.total_height() - 15.2e-3).abs() < 1e-15);
        let g = benchmark_geometry();
        assert!((g.width() - 4.9e-3).abs() < 1e-15);
        assert!((g.height() - 15.2e-3).abs() < 1e-15);
    }

    #[test]
    fn benchmark_layout_pattern() {
        let g = benchmark_geometry();
        let rects = g.rects();
        assert_eq!(rects.len(), 21);
        let middle_row: Vec<_> = rects[7..14].iter().map(|r| r.region).collect();
        use Region::*;
        assert_eq!(
            middle_row,
            vec![Insulation, Cable(1), Insulation, Cable(2), Insulation, Cable(3), Insulation]
        );
        assert!(rects[..7].iter().chain(&rects[14..]).all(|r| r.region == Insulation));
        let c1 = g.region_rect(Cable(1)).unwrap();
        assert!((c1.area() - 22.5e-6).abs() < 1e-18);
        assert!((c1.x0 - 0.1e-3).abs() < 1e-18 && (c1.x1 - 1.6e-3).abs() < 1e-18);
        assert_eq!(g.quench_region(), Cable(1));
    }

    #[test]
    fn degenerate_single_cable() {
        let spec = CrossSectionSpec { n_cables: 1, insulation_thickness: 0.0, ..Default::default() };
        let g = build_benchmark_cross_section(&spec).unwrap();
        let rects = g.rects();
        assert_eq!(rects.len(), 1);
        assert_eq!(rects[0].region, Region::Cable(1));
        let mesh = triangulate_structured(&g, 0);
        assert!(mesh.regions.iter().all(|&r| r == Region::Cable(1)));
    }

    #[test]
    fn rejects_non_positive_dimensions() {
        for spec in [
            CrossSectionSpec { cable_width: 0.0, ..Default::default() },
            CrossSectionSpec { cable_height: -1.0, ..Default::default() },
            CrossSectionSpec { insulation_thickness: -1e-4, ..Default::default() },
            CrossSectionSpec { n_cables: 0, ..Default::default() },
        ] {
            assert!(matches!(build_benchmark_cross_section(&spec), Err(Error::Geometry(_))));
        }
    }

    #[test]
    fn unit_square_single_cell() {
        let g = Geometry2D::rectangle(1.0, 1.0, Region::Cable(1)).unwrap();
        let mesh = triangulate_structured(&g, 0);
        assert_eq!(mesh.triangle_count(), 2);
        assert_eq!(mesh.node_count(), 4);
        mesh.check_valid().unwrap();
        assert_eq!(mesh.hull_edges.len(), 4);
    }

    #[test]
    fn area_and_region_areas_preserved() {
        let g = benchmark_geometry();
        for level in 0..4 {
            let mesh = triangulate_structured(&g, level);
            mesh.check_valid().unwrap();
            let total = g.width() * g.height();
            assert!((mesh.total_area() - total).abs() <= 1e-12 * total);
            for region in mesh.region_tags() {
                let exact = g.region_area(region);
                assert!((mesh.region_area(region) - exact).abs() <= 1e-12 * exact, "{region}");
            }
        }
    }

    #[test]
    fn refinement_strictly_increases_triangles() {
        let g = benchmark_geometry();
        let counts: Vec<_> = (0..4).map(|l| triangulate_structured(&g, l).triangle_count()).collect();
        assert_eq!(counts, vec![56, 224, 896, 3584]);
        let again: Vec<_> = (0..4).map(|l| triangulate_structured(&g, l).triangle_count()).collect();
        assert_eq!(counts, again);
    }

    #[test]
    fn node_set_mirror_symmetric() {
        let g = benchmark_geometry();
        let mesh = triangulate_structured(&g, 2);
        let h = g.height();
        for p in &mesh.nodes {
            let mirrored = [p[0], h - p[1]];
            assert!(mesh
                .nodes
                .iter()
                .any(|q| (q[0] - mirrored[0]).abs() < 1e-15 && (q[1] - mirrored[1]).abs() < 1e-15));
        }
    }

    #[test]
    fn locate_centroid_and_vertex() {
        let mesh = triangulate_structured(&benchmark_geometry(), 1);
        for t in [0, 17, mesh.triangle_count() - 1] {
            let p = mesh.triangle_points(t);
            let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            let loc = mesh.locate_point(c[0], c[1]).unwrap();
            assert_eq!(loc.triangle, t);
            for b in loc.bary {
                assert!((b - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        let node = mesh.nodes[20];
        let loc = mesh.locate_point(node[0], node[1]).unwrap();
        assert!(mesh.triangles[loc.triangle].contains(&20));
        assert!(loc.bary.iter().any(|&b| (b - 1.0).abs() < 1e-12));
    }

    #[test]
    fn locate_outside_is_error() {
        let mesh = triangulate_structured(&benchmark_geometry(), 0);
        assert!(matches!(mesh.locate_point(-1e-3, 1e-3), Err(Error::OutsideDomain { .. })));
        assert!(matches!(mesh.locate_point(1e-3, 1.0), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn shared_edge_resolves_to_lowest_index() {
        let g = Geometry2D::rectangle(1.0, 1.0, Region::Cable(1)).unwrap();
        let mesh = triangulate_structured(&g, 0);
        // point on the diagonal shared by both triangles
        let loc = mesh.locate_point(0.5, 0.5).unwrap();
        assert_eq!(loc.triangle, 0);
    }

    proptest::proptest! {
        #[test]
        fn barycentric_round_trip(fx in 0.0f64..1.0, fy in 0.0f64..1.0) {
            let mesh = triangulate_structured(&benchmark_geometry(), 1);
            let (x, y) = (fx * mesh.width(), fy * mesh.height());
            let loc = mesh.locate_point(x, y).unwrap();
            let p = mesh.triangle_points(loc.triangle);
            let rx: f64 = (0..3).map(|i| loc.bary[i] * p[i][0]).sum();
            let ry: f64 = (0..3).map(|i| loc.bary[i] * p[i][1]).sum();
            proptest::prop_assert!((rx - x).abs() <= 1e-12 * mesh.width());
            proptest::prop_assert!((ry - y).abs() <= 1e-12 * mesh.height());
            proptest::prop_assert!(loc.bary.iter().all(|&b| (0.0..=1.0).contains(&b)));
        }
    }
}
