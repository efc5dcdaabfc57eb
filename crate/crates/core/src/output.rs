//! CSV and legacy-VTK writers.
//!
//! Numbers are written as `{:.16e}` (17 significant digits) with `\n` line
//! endings, so identical runs produce identical files. Every file starts
//! with a comment carrying the config hash.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Mesh2D;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table of preformatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| fmt_f64(x)).collect());
    }

    pub fn render(&self, config_hash: &str) -> String {
        let mut out = format!("# config_sha256={config_hash}\n");
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path, config_hash: &str) -> Result<()> {
        write_text(path, &self.render(config_hash))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn vtk_header(title: &str, config_hash: &str) -> String {
    format!("# vtk DataFile Version 3.0\n{title} config_sha256={config_hash}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
}

/// Cross-section triangles with their region tag as cell data.
pub fn mesh_vtk(mesh: &Mesh2D, config_hash: &str) -> String {
    let mut out = vtk_header("cross-section mesh", config_hash);
    let _ = writeln!(out, "POINTS {} double", mesh.node_count());
    for p in &mesh.nodes {
        let _ = writeln!(out, "{} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(0.0));
    }
    let nt = mesh.triangle_count();
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "CELL_DATA {nt}\nSCALARS region int 1\nLOOKUP_TABLE default");
    for r in &mesh.regions {
        let _ = writeln!(out, "{}", r.tag());
    }
    out
}

/// Nodal field on the cross-section nodes times `z_samples`, as wedges.
/// `values` is layer-major: `values[layer · J + node]`.
pub fn field_vtk(mesh: &Mesh2D, z_samples: &[f64], values: &[f64], name: &str, config_hash: &str) -> Result<String> {
    let j = mesh.node_count();
    let nz = z_samples.len();
    if values.len() != j * nz || nz < 2 {
        return Err(Error::DimensionMismatch(format!(
            "field of length {} for {j} nodes and {nz} z-samples",
            values.len()
        )));
    }
    let mut out = vtk_header(name, config_hash);
    let _ = writeln!(out, "POINTS {} double", j * nz);
    for &z in z_samples {
        for p in &mesh.nodes {
            let _ = writeln!(out, "{} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(z));
        }
    }
    let nc = mesh.triangle_count() * (nz - 1);
    let _ = writeln!(out, "CELLS {nc} {}", 7 * nc);
    for l in 0..nz - 1 {
        for t in &mesh.triangles {
            let (b, u) = (l * j, (l + 1) * j);
            let _ = writeln!(out, "6 {} {} {} {} {} {}", b + t[0], b + t[1], b + t[2], u + t[0], u + t[1], u + t[2]);
        }
    }
    let _ = writeln!(out, "CELL_TYPES {nc}");
    for _ in 0..nc {
        out.push_str("13\n");
    }
    let _ = writeln!(out, "POINT_DATA {}\nSCALARS {name} double 1\nLOOKUP_TABLE default", j * nz);
    for v in values {
        let _ = writeln!(out, "{}", fmt_f64(*v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_benchmark_cross_section, triangulate_structured, CrossSectionSpec};

    #[test]
    fn number_format_has_17_digits() {
        assert_eq!(fmt_f64(2.0), "2.0000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        let x = 1.0 / 3.0;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push_numbers(&[1.0, -0.5]);
        t.push(vec!["x".into(), "y".into()]);
        let text = t.render("abc");
        assert_eq!(text, "# config_sha256=abc\na,b\n1.0000000000000000e0,-5.0000000000000000e-1\nx,y\n");
    }

    #[test]
    fn csv_write_creates_directories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        CsvTable::new(&["t"]).write(&path, "h").unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), "# config_sha256=h\nt\n");
    }

    #[test]
    fn vtk_counts() {
        let mesh = triangulate_structured(&build_benchmark_cross_section(&CrossSectionSpec::default()).unwrap(), 0);
        let text = mesh_vtk(&mesh, "h");
        assert!(text.contains(&format!("POINTS {} double", mesh.node_count())));
        assert!(text.contains(&format!("CELL_DATA {}", mesh.triangle_count())));
        let zs = [0.0, 0.5, 1.0];
        let values = vec![2.0; 3 * mesh.node_count()];
        let field = field_vtk(&mesh, &zs, &values, "temperature", "h").unwrap();
        let nc = 2 * mesh.triangle_count();
        assert!(field.contains(&format!("CELLS {nc} {}", 7 * nc)));
        assert_eq!(field.lines().filter(|l| *l == "13").count(), nc);
        assert!(field_vtk(&mesh, &zs, &values[1..], "temperature", "h").is_err());
    }
}
