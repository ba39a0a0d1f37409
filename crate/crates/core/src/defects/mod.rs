//! Defect analysis: scaled densities, cell charges, almost-monotonicity and
//! the split of the high-density set into line and point parts.

pub mod degree;
pub mod density;
pub mod monotonicity;

pub use degree::{box_degree, cell_degree, jacobian_charges, solid_angle, Charge, ChargeMap};
pub use density::{
    default_threshold, disclination_density, dyadic_radii, hedgehog_density, scaled_density, singular_set_estimate,
    CellDensity, DensityProfile,
};
pub use monotonicity::{monotonicity_check, MonotonicityReport};

use crate::elastic::ElasticModulus;
use crate::error::{Error, Result};
use crate::fields::DirectorField;
use crate::lifting::Polyline;
use degree::CellCharge;
use density::CellEnergies;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellClass {
    Line,
    Point,
    Unclassified,
}

/// A cell above the density threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularCell {
    pub cell: usize,
    pub center: [f64; 3],
    pub density: f64,
    pub class: CellClass,
    /// 26-connected cluster of singular cells this one belongs to.
    pub cluster: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointDefect {
    pub cell: usize,
    pub center: [f64; 3],
    pub degree: i32,
    pub residual: f64,
    pub gauge_consistent: bool,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectReport {
    pub threshold: f64,
    /// Radius of the density used for thresholding (`2h`).
    pub density_radius: f64,
    pub lines: Vec<Polyline>,
    /// Counting-norm length of the obstruction chain.
    pub line_length: f64,
    pub cycle_violations: usize,
    /// Plaquettes whose holonomy could not be resolved.
    pub unresolved_plaquettes: usize,
    pub points: Vec<PointDefect>,
    /// Nonzero charges below the threshold, left out of the point part.
    pub weak_charges: usize,
    pub singular_cells: Vec<SingularCell>,
    /// Density profiles on dyadic radii at each point defect.
    pub profiles: Vec<DensityProfile>,
}

impl DefectReport {
    pub fn is_empty(&self) -> bool {
        self.lines.is_empty() && self.points.is_empty() && self.singular_cells.is_empty()
    }

    pub fn unclassified(&self) -> impl Iterator<Item = &SingularCell> {
        self.singular_cells.iter().filter(|c| c.class == CellClass::Unclassified)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassifyOptions {
    /// Density threshold; [`default_threshold`] when absent.
    pub threshold: Option<f64>,
}

/// Splits the high-density cells of `field` into line, point and
/// unclassified parts.
pub fn classify_defects(field: &DirectorField, modulus: &ElasticModulus, opts: &ClassifyOptions) -> Result<DefectReport> {
    let grid = field.grid();
    let p = modulus.p();
    let theta = opts.threshold.unwrap_or_else(|| default_threshold(p));
    if !(theta > 0.0) {
        return Err(Error::Invalid(format!("density threshold {theta} must be positive")));
    }
    let (chain, unresolved) = crate::lifting::chain_with_unresolved(grid, field.target(), field.values());
    let cells = CellEnergies::new(field, modulus);
    let densities = density::cell_densities(&cells, p);
    let slot: BTreeMap<usize, usize> = cells.cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    // Cells pierced by the dual line (2D: the support plaquettes themselves).
    let mut pierced = BTreeSet::new();
    for &id in chain.support() {
        let (base, plane) = grid.plaquette_parts(id);
        if grid.dims() == 2 {
            pierced.insert(base);
        } else {
            let k = crate::grid::GridSpec::normal_axis(plane);
            pierced.insert(base);
            if let Some(b) = grid.neighbor(base, k, false) {
                pierced.insert(b);
            }
        }
    }
    pierced.retain(|c| slot.contains_key(c));

    let charges = if grid.dims() == 3 && field.target().ambient_dim() == 3 {
        degree::all_cell_charges(field)?
    } else {
        BTreeMap::new()
    };

    let high: Vec<usize> = (0..cells.cells.len()).filter(|&i| densities[i] > theta).collect();
    let is_high: BTreeSet<usize> = high.iter().map(|&i| cells.cells[i]).collect();
    let charge_of = |c: usize| match charges.get(&c) {
        Some(CellCharge::Degree(ch)) if ch.degree != 0 => Some(*ch),
        _ => None,
    };

    // 26-connected clusters of high cells.
    let mut cluster_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &high {
        let start = cells.cells[i];
        if cluster_of.contains_key(&start) {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![];
        let mut queue = VecDeque::from([start]);
        cluster_of.insert(start, id);
        while let Some(c) = queue.pop_front() {
            members.push(c);
            for nb in neighbors26(grid, c) {
                if is_high.contains(&nb) && !cluster_of.contains_key(&nb) {
                    cluster_of.insert(nb, id);
                    queue.push_back(nb);
                }
            }
        }
        clusters.push(members);
    }
    let cluster_class: Vec<CellClass> = clusters
        .iter()
        .map(|m| {
            if m.iter().any(|c| pierced.contains(c)) {
                CellClass::Line
            } else if m.iter().any(|&c| charge_of(c).is_some()) {
                CellClass::Point
            } else {
                CellClass::Unclassified
            }
        })
        .collect();

    let mut singular_cells = Vec::with_capacity(high.len());
    let mut points = Vec::new();
    for &i in &high {
        let c = cells.cells[i];
        let cluster = cluster_of[&c];
        let class = if pierced.contains(&c) {
            CellClass::Line
        } else if charge_of(c).is_some() {
            CellClass::Point
        } else {
            cluster_class[cluster]
        };
        if let Some(ch) = charge_of(c) {
            points.push(PointDefect {
                cell: c,
                center: ch.center,
                degree: ch.degree,
                residual: ch.residual,
                gauge_consistent: ch.gauge_consistent,
                density: densities[i],
            });
        }
        singular_cells.push(SingularCell { cell: c, center: cells.centers[i], density: densities[i], class, cluster });
    }
    let weak_charges = charges
        .iter()
        .filter(|(c, ch)| matches!(ch, CellCharge::Degree(x) if x.degree != 0) && !is_high.contains(c))
        .count();
    let profiles = points
        .iter()
        .filter_map(|pt| {
            let radii = dyadic_radii(grid, &pt.center);
            (!radii.is_empty()).then(|| density::profile(&cells, p, pt.center, &radii))
        })
        .collect();
    Ok(DefectReport {
        threshold: theta,
        density_radius: 2.0 * grid.h(),
        lines: chain.polylines(),
        line_length: chain.length(),
        cycle_violations: chain.cycle_violations(field.target()).len(),
        unresolved_plaquettes: unresolved.len(),
        points,
        weak_charges,
        singular_cells,
        profiles,
    })
}

fn neighbors26(grid: &crate::grid::GridSpec, c: usize) -> Vec<usize> {
    let co = grid.coords(c);
    let n = grid.n();
    let dims = grid.dims();
    let mut out = Vec::new();
    for dz in if dims == 3 { -1i64..=1 } else { 0..=0 } {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                let v = [co[0] as i64 + dx, co[1] as i64 + dy, co[2] as i64 + dz];
                if (0..3).all(|a| v[a] >= 0 && v[a] < n[a] as i64) {
                    out.push(grid.index([v[0] as usize, v[1] as usize, v[2] as usize]));
                }
            }
        }
    }
    out
}
