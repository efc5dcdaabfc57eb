//! Longitudinal spectral elements with a modified Lobatto (modal) basis.
//!
//! On the reference interval `[-1, 1]` an element of degree `N` carries
//! `N + 1` modes, numbered from 0 here:
//!
//! * mode 0: `(1 - ξ) / 2`, nodal at the left end,
//! * mode `m` in `1..N`: `(1 - ξ²) / 4 · LO_{m-1}(ξ)`, vanishing at both ends,
//! * mode `N`: `(1 + ξ) / 2`, nodal at the right end,
//!
//! with `LO_q = P'_{q+1}` the Lobatto polynomials. Neighbouring elements
//! share their nodal end modes, which gives a C⁰ global basis of dimension
//! `Σ N_k + 1`.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Dense row-major matrix used for small element-level operators.
pub type Dense = Vec<Vec<f64>>;

/// Legendre polynomial `P_n(x)` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_pair(n, x).0
}

/// `(P_n(x), P'_n(x))`, with `P'_{k+1} = P'_{k-1} + (2k + 1) P_k`.
pub fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Lobatto polynomial `LO_q(ξ) = P'_{q+1}(ξ)`.
pub fn lobatto_poly(q: usize, xi: f64) -> f64 {
    legendre_pair(q + 1, xi).1
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Gauss–Lobatto–Legendre nodes and weights for `degree + 1` points,
/// endpoints included, nodes ascending.
pub fn gauss_lobatto_legendre(degree: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(degree >= 1, "GLL rule needs degree >= 1");
    let n = degree;
    let nf = n as f64;
    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    for (i, node) in nodes.iter_mut().enumerate().take(n).skip(1) {
        // interior nodes are the roots of P'_N
        let mut x = -(std::f64::consts::PI * i as f64 / nf).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let ddp = (2.0 * x * dp - nf * (nf + 1.0) * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        *node = x;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let p = legendre(n, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    (nodes, weights)
}

/// Role of a mode within an element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKind {
    LeftBoundary,
    Interior,
    RightBoundary,
}

/// Modified Lobatto basis of a fixed degree on `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModalBasis {
    degree: usize,
}

impl ModalBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::SpectralMesh("polynomial degree must be at least 1".into()));
        }
        Ok(ModalBasis { degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn mode_count(&self) -> usize {
        self.degree + 1
    }

    pub fn kind(&self, mode: usize) -> Result<ModeKind> {
        match mode {
            0 => Ok(ModeKind::LeftBoundary),
            m if m == self.degree => Ok(ModeKind::RightBoundary),
            m if m < self.degree => Ok(ModeKind::Interior),
            m => Err(Error::ModeOutOfRange { mode: m, degree: self.degree }),
        }
    }

    pub fn value(&self, mode: usize, xi: f64) -> Result<f64> {
        Ok(match self.kind(mode)? {
            ModeKind::LeftBoundary => 0.5 * (1.0 - xi),
            ModeKind::RightBoundary => 0.5 * (1.0 + xi),
            ModeKind::Interior => 0.25 * (1.0 - xi * xi) * lobatto_poly(mode - 1, xi),
        })
    }

    /// `dφ/dξ`. For interior modes `d/dξ [(1 - ξ²) P'_m] = -m (m + 1) P_m`.
    pub fn derivative(&self, mode: usize, xi: f64) -> Result<f64> {
        Ok(match self.kind(mode)? {
            ModeKind::LeftBoundary => -0.5,
            ModeKind::RightBoundary => 0.5,
            ModeKind::Interior => {
                let m = mode as f64;
                -0.25 * m * (m + 1.0) * legendre(mode, xi)
            }
        })
    }

    pub fn values(&self, xi: f64) -> Vec<f64> {
        (0..=self.degree).map(|m| self.value(m, xi).unwrap()).collect()
    }

    pub fn derivatives(&self, xi: f64) -> Vec<f64> {
        (0..=self.degree).map(|m| self.derivative(m, xi).unwrap()).collect()
    }
}

/// Value of mode `mode` (0-based) of the degree-`degree` basis at `xi`.
pub fn modified_lobatto(mode: usize, xi: f64, degree: usize) -> Result<f64> {
    ModalBasis::new(degree)?.value(mode, xi)
}

/// Map between modal coefficients and values at the GLL points.
#[derive(Clone, Debug)]
pub struct VandermondeTransform {
    basis: ModalBasis,
    nodes: Vec<f64>,
    /// `v[i][m] = φ_m(ξ_i)`
    v: Dense,
    /// Inverse of the interior-point / interior-mode block.
    interior_inv: Dense,
}

impl VandermondeTransform {
    pub fn new(degree: usize) -> Result<Self> {
        let basis = ModalBasis::new(degree)?;
        let (nodes, _) = gauss_lobatto_legendre(degree);
        let v: Dense = nodes.iter().map(|&x| basis.values(x)).collect();
        let ni = degree - 1;
        let interior_inv = if ni == 0 {
            Vec::new()
        } else {
            let block = Mat::<f64>::from_fn(ni, ni, |i, j| v[i + 1][j + 1]);
            let inv = block.partial_piv_lu().inverse();
            (0..ni).map(|i| (0..ni).map(|j| inv[(i, j)]).collect()).collect()
        };
        Ok(VandermondeTransform { basis, nodes, v, interior_inv })
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn matrix(&self) -> &Dense {
        &self.v
    }

    /// Values at the GLL points from modal coefficients.
    pub fn backward(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.nodes.len(), "coefficient count must be degree + 1");
        self.v.iter().map(|row| row.iter().zip(coeffs).map(|(a, b)| a * b).sum()).collect()
    }

    /// Modal coefficients from values at the GLL points. The end
    /// coefficients are copied from the end values, exactly.
    pub fn forward(&self, values: &[f64]) -> Vec<f64> {
        let n = self.degree();
        assert_eq!(values.len(), n + 1, "value count must be degree + 1");
        let (left, right) = (values[0], values[n]);
        let rhs: Vec<f64> = (1..n)
            .map(|i| values[i] - left * self.v[i][0] - right * self.v[i][n])
            .collect();
        let mut coeffs = vec![0.0; n + 1];
        coeffs[0] = left;
        coeffs[n] = right;
        for (k, row) in self.interior_inv.iter().enumerate() {
            coeffs[k + 1] = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        }
        coeffs
    }

    /// Dense inverse of the Vandermonde matrix, column by column.
    pub fn inverse(&self) -> Dense {
        let n = self.nodes.len();
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                self.forward(&e)
            })
            .collect();
        (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
    }
}

/// Longitudinal element partition `0 = z_0 < z_1 < ... < z_K = ℓ_z` with a
/// polynomial degree per element.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMesh1D {
    interfaces: Vec<f64>,
    degrees: Vec<usize>,
}

impl SpectralMesh1D {
    pub fn new(interfaces: Vec<f64>, degree: usize) -> Result<Self> {
        let k = interfaces.len().saturating_sub(1);
        Self::with_degrees(interfaces, vec![degree; k])
    }

    pub fn with_degrees(interfaces: Vec<f64>, degrees: Vec<usize>) -> Result<Self> {
        if interfaces.len() < 2 {
            return Err(Error::SpectralMesh("need at least one element".into()));
        }
        if interfaces[0] != 0.0 {
            return Err(Error::SpectralMesh(format!("first interface must be 0, got {}", interfaces[0])));
        }
        if let Some(w) = interfaces.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::SpectralMesh(format!("interfaces not increasing at {} -> {}", w[0], w[1])));
        }
        if degrees.len() + 1 != interfaces.len() {
            return Err(Error::SpectralMesh("one degree per element required".into()));
        }
        if degrees.contains(&0) {
            return Err(Error::SpectralMesh("polynomial degree must be at least 1".into()));
        }
        Ok(SpectralMesh1D { interfaces, degrees })
    }

    pub fn uniform(length: f64, elements: usize, degree: usize) -> Result<Self> {
        if elements == 0 || !(length > 0.0) {
            return Err(Error::SpectralMesh(format!("cannot split {length} into {elements} elements")));
        }
        let interfaces = (0..=elements)
            .map(|k| if k == elements { length } else { length * k as f64 / elements as f64 })
            .collect();
        Self::new(interfaces, degree)
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn element_count(&self) -> usize {
        self.degrees.len()
    }

    pub fn length(&self) -> f64 {
        *self.interfaces.last().unwrap()
    }

    pub fn element(&self, k: usize) -> (f64, f64) {
        (self.interfaces[k], self.interfaces[k + 1])
    }

    pub fn degree(&self, k: usize) -> usize {
        self.degrees[k]
    }

    /// Global index of the left end mode of element `k`.
    pub fn offset(&self, k: usize) -> usize {
        self.degrees[..k].iter().sum()
    }

    /// Global longitudinal dimension `Σ N_k + 1`.
    pub fn dim(&self) -> usize {
        self.degrees.iter().sum::<usize>() + 1
    }

    /// Element and reference coordinate of `z`. Points on an interface
    /// belong to the element on their left.
    pub fn locate(&self, z: f64) -> Result<(usize, f64)> {
        let length = self.length();
        if !(z >= 0.0 && z <= length) {
            return Err(Error::OutsideInterval { z, length });
        }
        let k = self.interfaces[1..].partition_point(|&b| b < z).min(self.element_count() - 1);
        let (z0, z1) = self.element(k);
        let xi = (2.0 * (z - z0) / (z1 - z0) - 1.0).clamp(-1.0, 1.0);
        Ok((k, xi))
    }

    /// Physical coordinates of the GLL points of element `k`.
    pub fn gll_points(&self, k: usize) -> Vec<f64> {
        let (z0, z1) = self.element(k);
        gauss_lobatto_legendre(self.degrees[k])
            .0
            .iter()
            .map(|&xi| match xi {
                -1.0 => z0,
                1.0 => z1,
                x => z0 + 0.5 * (x + 1.0) * (z1 - z0),
            })
            .collect()
    }
}

/// Element stiffness and mass of one spectral element.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementMatrices {
    pub stiffness: Dense,
    pub mass: Dense,
}

/// `∫ φ'_p φ'_q dξ` and `∫ φ_p φ_q dξ` on the reference interval, with
/// entries that vanish by orthogonality set to exact zeros.
pub fn reference_matrices(degree: usize) -> Result<ElementMatrices> {
    let basis = ModalBasis::new(degree)?;
    let n = degree + 1;
    let (nodes, weights) = gauss_legendre(degree + 2);
    let mut stiffness = vec![vec![0.0; n]; n];
    let mut mass = vec![vec![0.0; n]; n];
    for (&x, &w) in nodes.iter().zip(&weights) {
        let phi = basis.values(x);
        let dphi = basis.derivatives(x);
        for p in 0..n {
            for q in p..n {
                stiffness[p][q] += w * dphi[p] * dphi[q];
                mass[p][q] += w * phi[p] * phi[q];
            }
        }
    }
    for p in 0..n {
        for q in 0..p {
            stiffness[p][q] = stiffness[q][p];
            mass[p][q] = mass[q][p];
        }
    }
    for m in [&mut stiffness, &mut mass] {
        let tol = 1e-13 * m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        m.iter_mut().flatten().filter(|v| v.abs() <= tol).for_each(|v| *v = 0.0);
    }
    Ok(ElementMatrices { stiffness, mass })
}

/// Element matrices on `[z0, z1]`: mass scaled by `ℓ/2`, stiffness by `2/ℓ`.
pub fn se_element_matrices(z0: f64, z1: f64, degree: usize) -> Result<ElementMatrices> {
    let len = z1 - z0;
    if !(len > 0.0) {
        return Err(Error::SpectralMesh(format!("element [{z0}, {z1}] has non-positive length")));
    }
    let reference = reference_matrices(degree)?;
    let scale = |m: Dense, s: f64| m.into_iter().map(|r| r.into_iter().map(|v| v * s).collect()).collect();
    Ok(ElementMatrices {
        stiffness: scale(reference.stiffness, 2.0 / len),
        mass: scale(reference.mass, 0.5 * len),
    })
}

/// Load `∫ (I q) φ_p dz` where `I q` interpolates `q` at the GLL points.
pub fn se_load(z0: f64, z1: f64, degree: usize, q: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let mats = se_element_matrices(z0, z1, degree)?;
    let transform = VandermondeTransform::new(degree)?;
    let values: Vec<f64> = transform.nodes().iter().map(|&xi| q(z0 + 0.5 * (xi + 1.0) * (z1 - z0))).collect();
    let coeffs = transform.forward(&values);
    Ok(mats.mass.iter().map(|row| row.iter().zip(&coeffs).map(|(a, b)| a * b).sum()).collect())
}

/// Globally assembled longitudinal operators.
#[derive(Clone, Debug)]
pub struct SeOperators {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
}

impl SeOperators {
    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }
}

/// Places element blocks along the diagonal, overlapping the shared end
/// modes of neighbouring elements.
pub fn assemble_se_global(mesh: &SpectralMesh1D) -> Result<SeOperators> {
    let dim = mesh.dim();
    let mut k = TripletBuilder::new(dim, dim);
    let mut m = TripletBuilder::new(dim, dim);
    for e in 0..mesh.element_count() {
        let (z0, z1) = mesh.element(e);
        let mats = se_element_matrices(z0, z1, mesh.degree(e))?;
        let off = mesh.offset(e);
        for (p, (krow, mrow)) in mats.stiffness.iter().zip(&mats.mass).enumerate() {
            for q in 0..krow.len() {
                if krow[q] != 0.0 {
                    k.push(off + p, off + q, krow[q]);
                }
                if mrow[q] != 0.0 {
                    m.push(off + p, off + q, mrow[q]);
                }
            }
        }
    }
    Ok(SeOperators { stiffness: k.build(true), mass: m.build(true) })
}

/// Global load vector for the longitudinal source profile `q`.
pub fn assemble_se_load(mesh: &SpectralMesh1D, q: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let mut load = vec![0.0; mesh.dim()];
    for e in 0..mesh.element_count() {
        let (z0, z1) = mesh.element(e);
        let off = mesh.offset(e);
        for (p, v) in se_load(z0, z1, mesh.degree(e), &q)?.into_iter().enumerate() {
            load[off + p] += v;
        }
    }
    Ok(load)
}

/// Global modal coefficients of a continuous field from per-element
/// coefficient vectors (shared end modes are taken from the left element).
pub fn gather_global(mesh: &SpectralMesh1D, local: &[Vec<f64>]) -> Vec<f64> {
    let mut global = vec![0.0; mesh.dim()];
    for (e, c) in local.iter().enumerate() {
        let off = mesh.offset(e);
        for (p, &v) in c.iter().enumerate() {
            if e == 0 || p > 0 {
                global[off + p] = v;
            }
        }
    }
    global
}

/// Evaluates a global modal coefficient vector at `z`.
pub fn evaluate_global(mesh: &SpectralMesh1D, coeffs: &[f64], z: f64) -> Result<f64> {
    let (k, xi) = mesh.locate(z)?;
    let basis = ModalBasis::new(mesh.degree(k))?;
    let off = mesh.offset(k);
    Ok(basis.values(xi).iter().enumerate().map(|(p, phi)| phi * coeffs[off + p]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    // ---- independent polynomial-algebra oracle in exact rational arithmetic ----

    #[derive(Clone, Copy, Debug, PartialEq)]
    struct Q(i128, i128);

    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 { a.abs() } else { gcd(b, a % b) }
    }

    impl Q {
        fn new(n: i128, d: i128) -> Q {
            let g = gcd(n, d).max(1) * d.signum();
            Q(n / g, d / g)
        }
        fn int(n: i128) -> Q {
            Q(n, 1)
        }
        fn add(self, o: Q) -> Q {
            Q::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
        }
        fn mul(self, o: Q) -> Q {
            Q::new(self.0 * o.0, self.1 * o.1)
        }
        fn to_f64(self) -> f64 {
            self.0 as f64 / self.1 as f64
        }
    }

    fn poly_mul(a: &[Q], b: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::int(0); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] = out[i + j].add(x.mul(*y));
            }
        }
        out
    }

    fn poly_deriv(a: &[Q]) -> Vec<Q> {
        if a.len() <= 1 {
            return vec![Q::int(0)];
        }
        a.iter().enumerate().skip(1).map(|(k, c)| c.mul(Q::int(k as i128))).collect()
    }

    fn poly_integral_ref(a: &[Q]) -> f64 {
        a.iter()
            .enumerate()
            .filter(|(k, _)| k % 2 == 0)
            .fold(Q::int(0), |acc, (k, c)| acc.add(c.mul(Q::new(2, k as i128 + 1))))
            .to_f64()
    }

    fn poly_eval(a: &[Q], x: f64) -> f64 {
        a.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64())
    }

    fn legendre_coeffs(n: usize) -> Vec<Q> {
        let mut p0 = vec![Q::int(1)];
        let mut p1 = vec![Q::int(0), Q::int(1)];
        if n == 0 {
            return p0;
        }
        for k in 1..n {
            let k = k as i128;
            let mut next = vec![Q::int(0); k as usize + 2];
            for (i, c) in p1.iter().enumerate() {
                next[i + 1] = next[i + 1].add(c.mul(Q::new(2 * k + 1, k + 1)));
            }
            for (i, c) in p0.iter().enumerate() {
                next[i] = next[i].add(c.mul(Q::new(-k, k + 1)));
            }
            p0 = p1;
            p1 = next;
        }
        p1
    }

    fn mode_coeffs(mode: usize, degree: usize) -> Vec<Q> {
        if mode == 0 {
            vec![Q::new(1, 2), Q::new(-1, 2)]
        } else if mode == degree {
            vec![Q::new(1, 2), Q::new(1, 2)]
        } else {
            poly_mul(&[Q::new(1, 4), Q::int(0), Q::new(-1, 4)], &poly_deriv(&legendre_coeffs(mode)))
        }
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn lobatto_low_orders() {
        for xi in [-1.0, -0.3, 0.0, 0.5, 1.0] {
            assert_eq!(lobatto_poly(0, xi), 1.0);
            assert!((lobatto_poly(1, xi) - 3.0 * xi).abs() < 1e-15);
        }
        assert!((lobatto_poly(2, 0.5) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn lobatto_matches_differentiated_legendre_coefficients() {
        for q in 0..12 {
            let d = poly_deriv(&legendre_coeffs(q + 1));
            for xi in [-1.0, -0.77, -0.2, 0.1, 0.6, 1.0] {
                let expected = poly_eval(&d, xi);
                assert!((lobatto_poly(q, xi) - expected).abs() <= 1e-11 * (1.0 + expected.abs()), "q={q}");
            }
        }
    }

    #[test]
    fn gauss_rules_integrate_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                assert!((integral - exact).abs() < 1e-13, "GL n={n} deg={deg}");
            }
        }
        for n in 1..12 {
            let (x, w) = gauss_lobatto_legendre(n);
            assert_eq!((x[0], x[n]), (-1.0, 1.0));
            for deg in 0..2 * n {
                let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                assert!((integral - exact).abs() < 1e-13, "GLL n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn modified_lobatto_endpoints() {
        for degree in 1..10 {
            let b = ModalBasis::new(degree).unwrap();
            assert_eq!(b.value(0, -1.0).unwrap(), 1.0);
            assert_eq!(b.value(0, 1.0).unwrap(), 0.0);
            assert_eq!(b.value(degree, -1.0).unwrap(), 0.0);
            assert_eq!(b.value(degree, 1.0).unwrap(), 1.0);
            for m in 1..degree {
                assert_eq!(b.value(m, -1.0).unwrap(), 0.0);
                assert_eq!(b.value(m, 1.0).unwrap(), 0.0);
                assert_eq!(b.kind(m).unwrap(), ModeKind::Interior);
            }
            assert!(matches!(b.value(degree + 1, 0.0), Err(Error::ModeOutOfRange { .. })));
        }
        assert_eq!(modified_lobatto(1, 0.0, 4).unwrap(), 0.25);
        assert!(ModalBasis::new(0).is_err());
    }

    #[test]
    fn derivatives_match_polynomial_oracle() {
        let degree = 9;
        let b = ModalBasis::new(degree).unwrap();
        for m in 0..=degree {
            let c = mode_coeffs(m, degree);
            let dc = poly_deriv(&c);
            for xi in [-1.0, -0.4, 0.3, 0.95, 1.0] {
                assert!((b.value(m, xi).unwrap() - poly_eval(&c, xi)).abs() < 1e-12);
                assert!((b.derivative(m, xi).unwrap() - poly_eval(&dc, xi)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn reference_element_analytic_values() {
        let m = se_element_matrices(-1.0, 1.0, 5).unwrap();
        assert!((m.mass[0][0] - 2.0 / 3.0).abs() <= 1e-13);
        assert!((m.stiffness[0][0] - 0.5).abs() <= 1e-13);
    }

    #[test]
    fn reference_matrices_match_symbolic_integration() {
        for degree in 1..=10 {
            let mats = reference_matrices(degree).unwrap();
            for p in 0..=degree {
                for q in 0..=degree {
                    let cp = mode_coeffs(p, degree);
                    let cq = mode_coeffs(q, degree);
                    let m = poly_integral_ref(&poly_mul(&cp, &cq));
                    let k = poly_integral_ref(&poly_mul(&poly_deriv(&cp), &poly_deriv(&cq)));
                    assert!((mats.mass[p][q] - m).abs() <= 1e-13, "M N={degree} [{p},{q}]");
                    assert!((mats.stiffness[p][q] - k).abs() <= 1e-13 * (1.0 + k.abs()), "K N={degree} [{p},{q}]");
                }
            }
        }
    }

    #[test]
    fn element_matrix_structure() {
        let m = se_element_matrices(0.2, 0.45, 8).unwrap();
        let n = 9;
        for p in 0..n {
            for q in 0..n {
                assert_eq!(m.mass[p][q], m.mass[q][p]);
                assert_eq!(m.stiffness[p][q], m.stiffness[q][p]);
            }
        }
        let mut constant = vec![0.0; n];
        constant[0] = 1.0;
        constant[n - 1] = 1.0;
        for row in &m.stiffness {
            let r: f64 = row.iter().zip(&constant).map(|(a, b)| a * b).sum();
            assert!(r.abs() <= 1e-13 * 100.0);
        }
        // mass positive definite: Cholesky succeeds
        let mut a = m.mass.clone();
        for j in 0..n {
            let d = a[j][j] - (0..j).map(|k| a[j][k] * a[j][k]).sum::<f64>();
            assert!(d > 0.0);
            a[j][j] = d.sqrt();
            for i in j + 1..n {
                a[i][j] = (a[i][j] - (0..j).map(|k| a[i][k] * a[j][k]).sum::<f64>()) / a[j][j];
            }
        }
    }

    #[test]
    fn interior_couplings_are_banded() {
        let mats = reference_matrices(12).unwrap();
        for p in 1usize..12 {
            for q in 1..12 {
                if p.abs_diff(q) > 2 {
                    assert_eq!(mats.mass[p][q], 0.0, "mass [{p},{q}]");
                }
                if p != q {
                    assert_eq!(mats.stiffness[p][q], 0.0, "stiffness [{p},{q}]");
                }
            }
        }
    }

    #[test]
    fn jacobian_scaling() {
        let a = se_element_matrices(0.0, 0.1, 6).unwrap();
        let b = se_element_matrices(0.0, 0.2, 6).unwrap();
        for p in 0..7 {
            for q in 0..7 {
                assert_eq!(b.mass[p][q], 2.0 * a.mass[p][q]);
                assert_eq!(b.stiffness[p][q], 0.5 * a.stiffness[p][q]);
            }
        }
    }

    #[test]
    fn vandermonde_round_trips() {
        for degree in 1..=12 {
            let t = VandermondeTransform::new(degree).unwrap();
            let coeffs: Vec<f64> = (0..=degree).map(|i| ((i * 7 + 3) as f64).sin()).collect();
            let back = t.forward(&t.backward(&coeffs));
            for (a, b) in coeffs.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-12, "degree {degree}");
            }
            let v = t.matrix();
            let vi = t.inverse();
            for i in 0..=degree {
                for j in 0..=degree {
                    let prod: f64 = (0..=degree).map(|k| v[i][k] * vi[k][j]).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((prod - expected).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn forward_transform_of_basic_fields() {
        let t = VandermondeTransform::new(7).unwrap();
        let ones = t.forward(&[1.0; 8]);
        assert_eq!(ones[0], 1.0);
        assert_eq!(ones[7], 1.0);
        assert!(ones[1..7].iter().all(|c| c.abs() < 1e-14));
        let left: Vec<f64> = t.nodes().iter().map(|x| 0.5 * (1.0 - x)).collect();
        let c = t.forward(&left);
        assert_eq!(c[0], 1.0);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-14));
        // boundary coefficients equal end values exactly
        let vals: Vec<f64> = t.nodes().iter().map(|x| (3.0 * x).exp()).collect();
        let c = t.forward(&vals);
        assert_eq!(c[0], vals[0]);
        assert_eq!(c[7], vals[7]);
    }

    #[test]
    fn constant_load() {
        let (z0, z1) = (0.3, 0.55);
        let load = se_load(z0, z1, 6, |_| 1.0).unwrap();
        // pairing with the constant function gives the element length
        assert!((load[0] + load[6] - (z1 - z0)).abs() < 1e-14);
        // entry-wise against quadrature of ∫ φ_p dz
        let basis = ModalBasis::new(6).unwrap();
        for (p, l) in load.iter().enumerate() {
            let f = |z: f64| basis.value(p, 2.0 * (z - z0) / (z1 - z0) - 1.0).unwrap();
            let oracle = adaptive_simpson(&f, z0, z1, 1e-15);
            assert!((l - oracle).abs() < 1e-13, "p={p}");
        }
    }

    #[test]
    fn polynomial_load_is_exact() {
        let (z0, z1) = (0.1, 0.4);
        let degree = 6;
        let q = |z: f64| 1.0 - 3.0 * z + 40.0 * z.powi(4) - 100.0 * z.powi(6);
        let load = se_load(z0, z1, degree, q).unwrap();
        let basis = ModalBasis::new(degree).unwrap();
        for (p, l) in load.iter().enumerate() {
            let f = |z: f64| q(z) * basis.value(p, 2.0 * (z - z0) / (z1 - z0) - 1.0).unwrap();
            let oracle = adaptive_simpson(&f, z0, z1, 1e-16);
            assert!((l - oracle).abs() < 1e-12, "p={p}: {l} vs {oracle}");
        }
    }

    #[test]
    fn gaussian_load_matches_adaptive_quadrature() {
        let g = |z: f64| (-(z - 0.33f64).powi(2) / 0.05f64.powi(2)).exp();
        // element of width 2σ centred on the source
        let (z0, z1) = (0.28, 0.38);
        let exact = adaptive_simpson(&g, z0, z1, 1e-14);
        for degree in [8, 10, 12] {
            let load = se_load(z0, z1, degree, g).unwrap();
            let paired = load[0] + load[degree];
            assert!((paired - exact).abs() <= 1e-6 * exact, "N={degree} {paired} vs {exact}");
        }
    }

    #[test]
    fn interpolation_converges_spectrally() {
        let (z0, z1) = (0.0, 1.0);
        let mut errors = Vec::new();
        for degree in [2, 4, 6, 8, 10] {
            let t = VandermondeTransform::new(degree).unwrap();
            let vals: Vec<f64> = t.nodes().iter().map(|&x| (z0 + 0.5 * (x + 1.0) * (z1 - z0)).exp()).collect();
            let c = t.forward(&vals);
            let basis = ModalBasis::new(degree).unwrap();
            let err = (0..=1000)
                .map(|i| {
                    let xi = -1.0 + 2.0 * i as f64 / 1000.0;
                    let approx: f64 = basis.values(xi).iter().zip(&c).map(|(a, b)| a * b).sum();
                    (approx - (0.5 * (xi + 1.0)).exp()).abs()
                })
                .fold(0.0f64, f64::max);
            errors.push(err);
        }
        for w in errors.windows(2) {
            assert!(w[1] * 2.0 <= w[0], "{errors:?}");
        }
    }

    #[test]
    fn mesh_validation_and_locate() {
        assert!(SpectralMesh1D::new(vec![0.0], 3).is_err());
        assert!(SpectralMesh1D::new(vec![0.0, 0.5, 0.5, 1.0], 3).is_err());
        assert!(SpectralMesh1D::new(vec![0.1, 1.0], 3).is_err());
        assert!(SpectralMesh1D::new(vec![0.0, 1.0], 0).is_err());
        let m = SpectralMesh1D::new(vec![0.0, 0.2, 0.5, 1.0], 4).unwrap();
        assert_eq!(m.dim(), 13);
        assert_eq!(m.offset(2), 8);
        assert_eq!(m.locate(0.0).unwrap(), (0, -1.0));
        assert_eq!(m.locate(0.2).unwrap(), (0, 1.0));
        assert_eq!(m.locate(1.0).unwrap(), (2, 1.0));
        assert!(m.locate(1.5).is_err());
        let (k, xi) = m.locate(0.35).unwrap();
        assert_eq!(k, 1);
        assert!(xi.abs() < 1e-15);
    }

    #[test]
    fn single_element_global_equals_element() {
        let mesh = SpectralMesh1D::new(vec![0.0, 0.7], 5).unwrap();
        let ops = assemble_se_global(&mesh).unwrap();
        let e = se_element_matrices(0.0, 0.7, 5).unwrap();
        assert_eq!(ops.mass.to_dense(), e.mass);
        assert_eq!(ops.stiffness.to_dense(), e.stiffness);
    }

    #[test]
    fn linear_elements_reproduce_hat_function_fem() {
        let mesh = SpectralMesh1D::new(vec![0.0, 0.4, 1.0], 1).unwrap();
        let ops = assemble_se_global(&mesh).unwrap();
        assert_eq!(ops.dim(), 3);
        let (h1, h2) = (0.4, 0.6);
        let k = [[1.0 / h1, -1.0 / h1, 0.0], [-1.0 / h1, 1.0 / h1 + 1.0 / h2, -1.0 / h2], [0.0, -1.0 / h2, 1.0 / h2]];
        let m = [
            [h1 / 3.0, h1 / 6.0, 0.0],
            [h1 / 6.0, h1 / 3.0 + h2 / 3.0, h2 / 6.0],
            [0.0, h2 / 6.0, h2 / 3.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((ops.stiffness.get(i, j) - k[i][j]).abs() < 1e-14);
                assert!((ops.mass.get(i, j) - m[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn global_stiffness_has_constant_null_space() {
        let mesh = SpectralMesh1D::new(vec![0.0, 0.13, 0.23, 0.43, 0.53, 1.0], 8).unwrap();
        let ops = assemble_se_global(&mesh).unwrap();
        let mut ones = vec![0.0; mesh.dim()];
        for e in 0..=mesh.element_count() {
            ones[8 * e] = 1.0;
        }
        let r = ops.stiffness.mul_vec(&ones);
        assert!(r.iter().all(|v| v.abs() <= 1e-13 * ops.stiffness.max_abs()));
        assert!(ops.stiffness.asymmetry() == 0.0 && ops.mass.asymmetry() == 0.0);
    }
}
