//! Moving the spectral-element interfaces along with the quench fronts.
//!
//! At a checkpoint the temperature along the quenched cable is sampled, the
//! heated zone `[z⁻, z⁺]` is located, new interfaces are placed around it and
//! the solution is interpolated onto the new mesh (evaluation at the new GLL
//! points followed by a forward transform). Element count and degrees are
//! kept, so the system size does not change.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{Mesh2D, Region};
use crate::spectral::{ModalBasis, SpectralMesh1D, VandermondeTransform};
use crate::system::{is_due, Q3dProblem, Q3dSystem, SpectralSolution};

/// Heated zone of the quenched cable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontEstimate {
    pub z_minus: f64,
    pub z_plus: f64,
    /// `|∂θ/∂z|` at the left and right front in K/m.
    pub slope_minus: f64,
    pub slope_plus: f64,
    /// Largest sampled rise in K.
    pub peak_rise: f64,
}

/// When to check the solution during a transient.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum AdaptSchedule {
    Never,
    /// Once, at `t_end / 2`.
    #[default]
    HalfTime,
    AtTimes(Vec<f64>),
    EverySteps(usize),
}

impl AdaptSchedule {
    /// Whether a checkpoint falls in `(t_prev, t_now]`.
    pub fn is_due(&self, step: usize, t_prev: f64, t_now: f64, dt: f64, t_end: f64) -> bool {
        match self {
            AdaptSchedule::Never => false,
            AdaptSchedule::HalfTime => is_due(0.5 * t_end, t_prev, t_now, dt),
            AdaptSchedule::AtTimes(times) => times.iter().any(|&t| is_due(t, t_prev, t_now, dt)),
            AdaptSchedule::EverySteps(n) => *n > 0 && step.is_multiple_of(*n),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptOptions {
    pub schedule: AdaptSchedule,
    /// Fraction of the peak rise that marks the front.
    pub threshold: f64,
    /// Number of uniform samples along the cable axis.
    pub samples: usize,
    /// Padding on each side of the heated zone, relative to its width.
    pub margin: f64,
    /// Smallest admissible element, relative to the model length.
    pub min_element_fraction: f64,
    /// Sampling line `(x, y)`; the quenched cable's centroid if `None`.
    pub line: Option<[f64; 2]>,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        AdaptOptions {
            schedule: AdaptSchedule::HalfTime,
            threshold: 0.05,
            samples: 1001,
            margin: 0.0,
            min_element_fraction: 1e-3,
            line: None,
        }
    }
}

/// Area-weighted centroid of the triangles tagged `region`.
pub fn region_centroid(mesh: &Mesh2D, region: Region) -> Option<[f64; 2]> {
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for t in (0..mesh.triangle_count()).filter(|&t| mesh.regions[t] == region) {
        let p = mesh.triangle_points(t);
        let area = mesh.signed_area(t).abs();
        a += area;
        cx += area * (p[0][0] + p[1][0] + p[2][0]) / 3.0;
        cy += area * (p[0][1] + p[1][1] + p[2][1]) / 3.0;
    }
    (a > 0.0).then(|| [cx / a, cy / a])
}

/// Locates the heated zone along the line `(x, y)`. Returns `None` when the
/// sampled rise has no positive peak.
pub fn detect_quench_fronts(solution: &SpectralSolution, line: [f64; 2], samples: usize, threshold: f64) -> Result<Option<FrontEstimate>> {
    if samples < 2 {
        return Err(Error::value("front_samples", format!("need at least 2 samples, got {samples}")));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::value("front_threshold", format!("must lie in (0, 1], got {threshold}")));
    }
    let length = solution.mesh1d.length();
    let loc = solution.mesh2d.locate_point(line[0], line[1])?;
    let zs: Vec<f64> =
        (0..samples).map(|i| if i + 1 == samples { length } else { length * i as f64 / (samples - 1) as f64 }).collect();
    let rise: Vec<f64> =
        zs.iter().map(|&z| Ok(solution.evaluate_located(&loc, z)? - solution.theta_d)).collect::<Result<_>>()?;
    let peak = rise.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Ok(None);
    }
    let cut = threshold * peak;
    let first = rise.iter().position(|&r| r >= cut).unwrap();
    let last = rise.iter().rposition(|&r| r >= cut).unwrap();
    let slope = |i: usize| {
        let (a, b) = (i.saturating_sub(1), (i + 1).min(samples - 1));
        ((rise[b] - rise[a]) / (zs[b] - zs[a])).abs()
    };
    Ok(Some(FrontEstimate {
        z_minus: zs[first],
        z_plus: zs[last],
        slope_minus: slope(first),
        slope_plus: slope(last),
        peak_rise: peak,
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProposalStatus {
    /// Interfaces at both fronts.
    Bracketed,
    /// A front lies within the minimum element length of a model end.
    OpenBracket,
    NoFront,
    /// The bracketing mesh violated the minimum element length.
    UniformFallback(String),
}

impl fmt::Display for ProposalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProposalStatus::Bracketed => f.write_str("bracketed"),
            ProposalStatus::OpenBracket => f.write_str("open-bracket"),
            ProposalStatus::NoFront => f.write_str("no-front"),
            ProposalStatus::UniformFallback(why) => write!(f, "uniform-fallback ({why})"),
        }
    }
}

fn uniform_interfaces(length: f64, elements: usize) -> Vec<f64> {
    (0..=elements).map(|k| if k == elements { length } else { length * k as f64 / elements as f64 }).collect()
}

/// Splits `count` elements over segments in proportion to their lengths,
/// at least one each (largest remainder, ties to the earlier segment).
fn share_by_length(lengths: &[f64], count: usize) -> Vec<usize> {
    let mut given = vec![1usize; lengths.len()];
    let spare = count - lengths.len();
    if spare == 0 {
        return given;
    }
    let total: f64 = lengths.iter().sum();
    let shares: Vec<f64> = lengths.iter().map(|l| spare as f64 * l / total).collect();
    let mut left = spare;
    for (g, s) in given.iter_mut().zip(&shares) {
        let whole = s.floor() as usize;
        *g += whole;
        left -= whole;
    }
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().take(left) {
        given[i] += 1;
    }
    given
}

/// Interface positions for `elements` elements on `[0, length]` with
/// interfaces at the fronts (widened by `margin` times the zone width).
/// Half of the elements, at least one, split the heated zone uniformly; the
/// others cover the cold outer regions in proportion to their length.
pub fn propose_interfaces(
    front: Option<&FrontEstimate>,
    elements: usize,
    length: f64,
    margin: f64,
    min_element_fraction: f64,
) -> Result<(Vec<f64>, ProposalStatus)> {
    if elements < 3 {
        return Err(Error::SpectralMesh(format!("adaptation needs at least 3 elements, got {elements}")));
    }
    let Some(front) = front else {
        return Ok((uniform_interfaces(length, elements), ProposalStatus::NoFront));
    };
    let min_len = min_element_fraction * length;
    let pad = margin * (front.z_plus - front.z_minus).max(0.0);
    let mut lo = (front.z_minus - pad).clamp(0.0, length);
    let mut hi = (front.z_plus + pad).clamp(0.0, length);
    let mut status = ProposalStatus::Bracketed;
    if lo < min_len {
        lo = 0.0;
        status = ProposalStatus::OpenBracket;
    }
    if hi > length - min_len {
        hi = length;
        status = ProposalStatus::OpenBracket;
    }
    let outer: Vec<(f64, f64)> = [(0.0, lo), (hi, length)].into_iter().filter(|(a, b)| b > a).collect();
    let core_count = if outer.is_empty() { elements } else { (elements / 2).max(1).min(elements - outer.len()) };
    if !(hi - lo >= core_count as f64 * min_len * (1.0 - 1e-12)) {
        return Ok((
            uniform_interfaces(length, elements),
            ProposalStatus::UniformFallback(format!("heated zone [{lo}, {hi}] too short for {core_count} elements")),
        ));
    }
    let outer_counts = share_by_length(&outer.iter().map(|(a, b)| b - a).collect::<Vec<_>>(), elements - core_count);

    let mut segments: Vec<(f64, f64, usize)> = Vec::new();
    let mut oc = outer.iter().zip(&outer_counts);
    if lo > 0.0 {
        let ((a, b), &n) = oc.next().unwrap();
        segments.push((*a, *b, n));
    }
    segments.push((lo, hi, core_count));
    if let Some(((a, b), &n)) = oc.next() {
        segments.push((*a, *b, n));
    }
    let mut interfaces = vec![0.0];
    for (a, b, n) in segments {
        for i in 1..n {
            interfaces.push(a + (b - a) * i as f64 / n as f64);
        }
        interfaces.push(b);
    }
    *interfaces.last_mut().unwrap() = length;
    if let Some(w) = interfaces.windows(2).find(|w| w[1] - w[0] < min_len * (1.0 - 1e-12)) {
        return Ok((
            uniform_interfaces(length, elements),
            ProposalStatus::UniformFallback(format!("element [{}, {}] below minimum length {min_len}", w[0], w[1])),
        ));
    }
    Ok((interfaces, status))
}

/// Interfaces at `z_q ± 2σ` and, when there are enough elements, at
/// `z_q ± 4σ`; remaining elements split the outer regions by length.
pub fn source_bracket_interfaces(z_q: f64, sigma: f64, elements: usize, length: f64, min_element_fraction: f64) -> Vec<f64> {
    let min_len = min_element_fraction * length;
    let inside = |z: &f64| *z >= min_len && *z <= length - min_len;
    let mut breaks: Vec<f64> = [z_q - 4.0 * sigma, z_q - 2.0 * sigma, z_q + 2.0 * sigma, z_q + 4.0 * sigma]
        .into_iter()
        .filter(inside)
        .collect();
    if breaks.len() + 1 > elements {
        breaks = [z_q - 2.0 * sigma, z_q + 2.0 * sigma].into_iter().filter(inside).collect();
    }
    if breaks.len() + 1 > elements || breaks.windows(2).any(|w| w[1] - w[0] < min_len) {
        return uniform_interfaces(length, elements);
    }
    let mut edges = vec![0.0];
    edges.extend(&breaks);
    edges.push(length);
    let nseg = edges.len() - 1;
    let outer: Vec<usize> = if nseg == 1 { vec![0] } else { vec![0, nseg - 1] };
    let extra = share_by_length(&outer.iter().map(|&s| edges[s + 1] - edges[s]).collect::<Vec<_>>(), elements - nseg + outer.len());
    let mut interfaces = vec![0.0];
    for s in 0..nseg {
        let n = outer.iter().position(|&o| o == s).map_or(1, |i| extra[i]);
        let (a, b) = (edges[s], edges[s + 1]);
        for i in 1..n {
            interfaces.push(a + (b - a) * i as f64 / n as f64);
        }
        interfaces.push(b);
    }
    *interfaces.last_mut().unwrap() = length;
    if interfaces.windows(2).any(|w| w[1] - w[0] < min_len * (1.0 - 1e-12)) {
        return uniform_interfaces(length, elements);
    }
    interfaces
}

/// Interpolates per-node line functions onto `mesh1d`: `values(z)` returns
/// the rise of all `fe_nodes` lines at `z`.
pub fn interpolate_lines(mesh1d: &SpectralMesh1D, fe_nodes: usize, mut values: impl FnMut(f64) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let j = fe_nodes;
    let mut coeffs = vec![0.0; mesh1d.dim() * j];
    for k in 0..mesh1d.element_count() {
        let n = mesh1d.degree(k);
        let transform = VandermondeTransform::new(n)?;
        let samples: Vec<Vec<f64>> = mesh1d.gll_points(k).iter().map(|&z| values(z)).collect::<Result<_>>()?;
        let off = mesh1d.offset(k);
        let mut line = vec![0.0; n + 1];
        for node in 0..j {
            for (p, s) in samples.iter().enumerate() {
                line[p] = s[node];
            }
            for (p, c) in transform.forward(&line).into_iter().enumerate() {
                coeffs[(off + p) * j + node] = c;
            }
        }
    }
    Ok(coeffs)
}

/// Rise of all node lines at `z`.
fn line_values(solution: &SpectralSolution, basis_cache: &mut Vec<Option<ModalBasis>>, z: f64) -> Result<Vec<f64>> {
    let mesh = &solution.mesh1d;
    let (k, xi) = mesh.locate(z)?;
    let n = mesh.degree(k);
    if basis_cache.len() <= n {
        basis_cache.resize(n + 1, None);
    }
    if basis_cache[n].is_none() {
        basis_cache[n] = Some(ModalBasis::new(n)?);
    }
    let phi = basis_cache[n].as_ref().unwrap().values(xi);
    let j = solution.fe_nodes();
    let off = mesh.offset(k);
    let mut out = vec![0.0; j];
    for (p, w) in phi.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let slab = &solution.coeffs[(off + p) * j..(off + p + 1) * j];
        out.iter_mut().zip(slab).for_each(|(o, c)| *o += w * c);
    }
    Ok(out)
}

/// Interpolates `solution` onto `new_mesh`.
pub fn remap_solution(solution: &SpectralSolution, new_mesh: &SpectralMesh1D) -> Result<SpectralSolution> {
    let old = &solution.mesh1d;
    if (old.length() - new_mesh.length()).abs() > 1e-12 * old.length() {
        return Err(Error::DimensionMismatch(format!(
            "cannot remap from length {} to length {}",
            old.length(),
            new_mesh.length()
        )));
    }
    let mut cache = Vec::new();
    let coeffs = interpolate_lines(new_mesh, solution.fe_nodes(), |z| line_values(solution, &mut cache, z))?;
    Ok(SpectralSolution { coeffs, mesh1d: new_mesh.clone(), ..solution.clone() })
}

/// One adaptation checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptEvent {
    pub time: f64,
    pub old_interfaces: Vec<f64>,
    pub new_interfaces: Vec<f64>,
    pub front: Option<FrontEstimate>,
    pub status: ProposalStatus,
    pub changed: bool,
}

/// Detects the fronts, moves the interfaces, remaps the solution and
/// reassembles the coupled system on the new mesh.
pub fn adapt_and_reassemble(
    problem: &Q3dProblem,
    system: &Q3dSystem,
    solution: &SpectralSolution,
    opts: &AdaptOptions,
) -> Result<(Q3dSystem, SpectralSolution, AdaptEvent)> {
    let line = match opts.line {
        Some(l) => l,
        None => region_centroid(&problem.mesh2d, Region::Cable(1))
            .ok_or_else(|| Error::Geometry("no quenched cable in the cross-section".into()))?,
    };
    let old_mesh = &system.mesh1d;
    let front = detect_quench_fronts(solution, line, opts.samples, opts.threshold)?;
    let (interfaces, status) = match front {
        None => (old_mesh.interfaces().to_vec(), ProposalStatus::NoFront),
        Some(ref f) => propose_interfaces(
            Some(f),
            old_mesh.element_count(),
            old_mesh.length(),
            opts.margin,
            opts.min_element_fraction,
        )?,
    };
    let changed = interfaces != old_mesh.interfaces();
    let event = AdaptEvent {
        time: solution.time,
        old_interfaces: old_mesh.interfaces().to_vec(),
        new_interfaces: interfaces.clone(),
        front,
        status,
        changed,
    };
    if !changed {
        return Ok((system.clone(), solution.clone(), event));
    }
    let new_mesh = SpectralMesh1D::with_degrees(interfaces, old_mesh.degrees().to_vec())?;
    let remapped = remap_solution(solution, &new_mesh)?;
    let new_system = problem.assemble(&new_mesh)?;
    Ok((new_system, remapped, event))
}
