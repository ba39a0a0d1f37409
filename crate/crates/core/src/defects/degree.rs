//! Topological charges of cells from sphere-valued lifts.
//!
//! Each plaquette carries the signed solid angle swept by the image of its
//! boundary, computed once on an eight-triangle fan and oriented along the
//! positive normal axis. A cell's degree is the outward flux through its six
//! faces over `4π`, so degrees over any block of cells add up to the degree
//! of the block boundary exactly.

use crate::error::{Error, Result};
use crate::fields::DirectorField;
use crate::grid::GridSpec;
use crate::lifting::{lift_region, Holonomy};
use crate::manifolds::QuotientTarget;
use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

/// Residual beyond which a cell's degree is not trusted.
pub const ROUNDING_TOLERANCE: f64 = 0.1;

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Signed solid angle of the geodesic triangle `(a, b, c)` of unit vectors.
pub fn solid_angle(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let num = dot(a, &cross(b, c));
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

fn normalized_sum(vs: &[[f64; 3]]) -> Option<[f64; 3]> {
    let mut s = [0.0; 3];
    for v in vs {
        for k in 0..3 {
            s[k] += v[k];
        }
    }
    let r = dot(&s, &s).sqrt();
    (r > 1e-9).then(|| [s[0] / r, s[1] / r, s[2] / r])
}

/// Solid angle swept by a quadrilateral traversed in the given order, or
/// `None` when two adjacent corners are antipodal.
pub(crate) fn quad_solid_angle(c: [[f64; 3]; 4]) -> Option<f64> {
    let mid: Vec<[f64; 3]> = (0..4).map(|i| normalized_sum(&[c[i], c[(i + 1) % 4]])).collect::<Option<_>>()?;
    let o = normalized_sum(&c)?;
    let mut s = 0.0;
    for i in 0..4 {
        s += solid_angle(&o, &c[i], &mid[i]);
        s += solid_angle(&o, &mid[i], &c[(i + 1) % 4]);
    }
    Some(s)
}

fn vec3(v: &[f64]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

/// Flux of plaquette `(base, plane)` along its positive normal axis.
fn plaquette_flux(grid: &GridSpec, base: usize, plane: usize, value: &impl Fn(usize) -> [f64; 3]) -> Option<f64> {
    let nodes = grid.plaquette_nodes(base, plane);
    let c = nodes.map(value);
    Some(GridSpec::plane_orientation(plane) as f64 * quad_solid_angle(c)?)
}

/// `(face plaquette base, plane, outward sign)` for the six faces of a cell.
fn faces(grid: &GridSpec, base: usize) -> [(usize, usize, f64); 6] {
    let mut out = [(0, 0, 0.0); 6];
    for plane in 0..3 {
        let k = GridSpec::normal_axis(plane);
        out[2 * plane] = (base, plane, -1.0);
        out[2 * plane + 1] = (base + grid.stride(k), plane, 1.0);
    }
    out
}

fn rounded(flux: f64, cell: usize) -> Result<(i32, f64)> {
    let deg = flux / (4.0 * PI);
    let r = deg.round();
    let residual = (deg - r).abs();
    if residual > ROUNDING_TOLERANCE || !deg.is_finite() {
        return Err(Error::UnderResolvedCell { cell, residual });
    }
    Ok((r as i32, residual))
}

fn cell_flux(grid: &GridSpec, base: usize, value: &impl Fn(usize) -> [f64; 3]) -> Option<f64> {
    let mut s = 0.0;
    for (b, plane, sign) in faces(grid, base) {
        s += sign * plaquette_flux(grid, b, plane, value)?;
    }
    Some(s)
}

fn require_sphere(field: &DirectorField) -> Result<()> {
    let t = field.target();
    if t.group().order() != 1 || t.ambient_dim() != 3 {
        return Err(Error::Invalid(format!("degrees need a field valued in S2, got {}", t.name())));
    }
    if field.grid().dims() != 3 {
        return Err(Error::Invalid("degrees are defined on three-dimensional grids".into()));
    }
    Ok(())
}

/// Degree of an `S²`-valued field over the boundary of the cell with base
/// node `base`, and its rounding residual.
pub fn cell_degree(field: &DirectorField, base: usize) -> Result<(i32, f64)> {
    require_sphere(field)?;
    let grid = field.grid();
    if !grid.is_cell_base(base) {
        return Err(Error::Invalid(format!("node {base} is not a cell base")));
    }
    let value = |i: usize| vec3(field.value(i));
    rounded(cell_flux(grid, base, &value).unwrap_or(f64::NAN), base)
}

/// Degree of an `S²`-valued field over the boundary of the node box
/// `lo..=hi` (per-axis node coordinates), not rounded.
pub fn box_degree(field: &DirectorField, lo: [usize; 3], hi: [usize; 3]) -> Result<f64> {
    require_sphere(field)?;
    let grid = field.grid();
    let n = grid.n();
    if (0..3).any(|a| lo[a] >= hi[a] || hi[a] >= n[a]) {
        return Err(Error::Invalid(format!("box {lo:?}..={hi:?} is empty or leaves the grid")));
    }
    let value = |i: usize| vec3(field.value(i));
    let mut s = 0.0;
    for plane in 0..3 {
        let (a, b) = crate::grid::PLANES[plane];
        let k = GridSpec::normal_axis(plane);
        for (layer, sign) in [(lo[k], -1.0), (hi[k], 1.0)] {
            for i in lo[a]..hi[a] {
                for j in lo[b]..hi[b] {
                    let mut c = [0; 3];
                    c[a] = i;
                    c[b] = j;
                    c[k] = layer;
                    let f = plaquette_flux(grid, grid.index(c), plane, &value)
                        .ok_or(Error::UnderResolvedCell { cell: grid.index(c), residual: f64::NAN })?;
                    s += sign * f;
                }
            }
        }
    }
    Ok(s / (4.0 * PI))
}

/// Charge of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Charge {
    pub cell: usize,
    pub center: [f64; 3],
    pub degree: i32,
    pub residual: f64,
    /// Index of the liftable cell component the degree was computed in.
    pub component: usize,
    /// Whether signs are comparable across the component (one lift for all
    /// of it) or only within the cell.
    pub gauge_consistent: bool,
}

/// Per-cell outcome for every active cell of a field.
#[derive(Debug, Clone)]
pub(crate) enum CellCharge {
    Degree(Charge),
    /// The cell has an obstructed or unresolved face.
    NotLiftable,
    UnderResolved { residual: f64 },
}

/// Cells whose faces all have resolved, trivial holonomy.
fn clean_cells(field: &DirectorField, active: &[usize]) -> Vec<bool> {
    let grid = field.grid();
    let target = field.target();
    let identity = Holonomy::Element(target.group().identity());
    let mut face_ok: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    let mut ok = vec![false; grid.node_count()];
    for &c in active {
        ok[c] = faces(grid, c).iter().all(|&(b, plane, _)| {
            *face_ok.entry((b, plane)).or_insert_with(|| crate::lifting::plaquette_holonomy(field, b, plane) == identity)
        });
    }
    ok
}

pub(crate) fn all_cell_charges(field: &DirectorField) -> Result<BTreeMap<usize, CellCharge>> {
    let grid = field.grid();
    if grid.dims() != 3 || field.target().ambient_dim() != 3 {
        return Err(Error::Invalid(format!(
            "charges need a three-dimensional grid and a target covered by S2, got {}D and {}",
            grid.dims(),
            field.target().name()
        )));
    }
    let active = field.domain().cells;
    let clean = clean_cells(field, &active);
    let mut out = BTreeMap::new();
    let mut seen = vec![false; grid.node_count()];
    let mut component = 0;
    for &start in &active {
        if seen[start] {
            continue;
        }
        if !clean[start] {
            out.insert(start, CellCharge::NotLiftable);
            seen[start] = true;
            continue;
        }
        // Face-adjacent clean cells form one component.
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(c) = queue.pop_front() {
            members.push(c);
            for k in 0..3 {
                for nb in [grid.neighbor(c, k, false), grid.neighbor(c, k, true)].into_iter().flatten() {
                    if clean[nb] && !seen[nb] {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
        }
        members.sort_unstable();
        let mut nodes: Vec<usize> =
            members.iter().flat_map(|&c| (0..8).map(move |k| c + grid.corner_offset(k))).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let lifted = if field.target().group().order() == 1 {
            None
        } else {
            lift_region(field, &nodes, nodes[0], field.value(nodes[0])).ok()
        };
        let consistent = field.target().group().order() == 1 || lifted.is_some();
        let mut cache: BTreeMap<(usize, usize), Option<f64>> = BTreeMap::new();
        let mut entries = Vec::with_capacity(members.len());
        for &c in &members {
            let flux = if consistent {
                let value = |i: usize| vec3(lifted.as_ref().map_or(field.value(i), |l| l.value(i).expect("in region")));
                let mut s = Some(0.0);
                for (b, plane, sign) in faces(grid, c) {
                    let f = *cache.entry((b, plane)).or_insert_with(|| plaquette_flux(grid, b, plane, &value));
                    s = s.zip(f).map(|(s, f)| s + sign * f);
                }
                s
            } else {
                local_flux(grid, field.target(), field, c)
            };
            let entry = match flux.map(|f| rounded(f, c)) {
                Some(Ok((degree, residual))) => CellCharge::Degree(Charge {
                    cell: c,
                    center: grid.cell_center(c),
                    degree,
                    residual,
                    component,
                    gauge_consistent: consistent,
                }),
                Some(Err(Error::UnderResolvedCell { residual, .. })) => CellCharge::UnderResolved { residual },
                _ => CellCharge::UnderResolved { residual: f64::NAN },
            };
            entries.push((c, entry));
        }
        // With a nontrivial group, the orientation of the lift is a gauge
        // choice: orient each component (each cell, without a global lift)
        // so that its first nonzero charge is positive.
        if field.target().group().order() > 1 {
            let mut flip = false;
            let mut decided = false;
            for (_, e) in entries.iter_mut() {
                if let CellCharge::Degree(ch) = e {
                    if !consistent {
                        flip = ch.degree < 0;
                    } else if !decided && ch.degree != 0 {
                        flip = ch.degree < 0;
                        decided = true;
                    }
                    if flip {
                        ch.degree = -ch.degree;
                    }
                }
            }
        }
        out.extend(entries);
        component += 1;
    }
    Ok(out)
}

/// Flux of a cell from the lift of its corners nearest to corner 0.
fn local_flux(grid: &GridSpec, target: &QuotientTarget, field: &DirectorField, base: usize) -> Option<f64> {
    let reference = field.value(base);
    let mut lifted = BTreeMap::new();
    for k in 0..8 {
        let i = base + grid.corner_offset(k);
        let (_, g, _) = target.nearest_lift(field.value(i), reference);
        lifted.insert(i, vec3(&target.group().element(g).apply_vec(field.value(i))));
    }
    cell_flux(grid, base, &|i| lifted[&i])
}

/// Nonzero cell degrees, one lift per liftable component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargeMap {
    pub charges: Vec<Charge>,
    /// Active cells with an obstructed or unresolved face.
    pub not_liftable: Vec<usize>,
    /// Sum of all computed degrees.
    pub total: i64,
}

/// Cell degrees of a field whose covering sphere is `S²`. Fails with
/// `UnderResolvedCell` if any liftable cell rounds badly.
pub fn jacobian_charges(field: &DirectorField) -> Result<ChargeMap> {
    let all = all_cell_charges(field)?;
    let mut charges = Vec::new();
    let mut not_liftable = Vec::new();
    let mut total = 0i64;
    for (cell, c) in all {
        match c {
            CellCharge::Degree(ch) => {
                total += ch.degree as i64;
                if ch.degree != 0 {
                    charges.push(ch);
                }
            }
            CellCharge::NotLiftable => not_liftable.push(cell),
            CellCharge::UnderResolved { residual } => return Err(Error::UnderResolvedCell { cell, residual }),
        }
    }
    Ok(ChargeMap { charges, not_liftable, total })
}
