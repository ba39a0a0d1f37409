//! Scaled energy density `ρ^{p-d} E(B_ρ(x₀))` and the singular-set estimate.
//!
//! Ball energies use soft inclusion: a cell whose centre lies at distance
//! `r` from `x₀` contributes with weight `clamp((ρ - r)/h + 1/2, 0, 1)`,
//! which is continuous in `ρ` and sheds the staircase of hard cut-offs.

use crate::elastic::{ElasticModulus, ModulusFunction};
use crate::error::{Error, Result};
use crate::fields::DirectorField;
use crate::grid::GridSpec;
use serde::Serialize;
use std::f64::consts::PI;

/// `2^{p/2} 4π / (3 - p)`: scaled density of the three-dimensional hedgehog.
pub fn hedgehog_density(p: f64) -> f64 {
    2f64.powf(p / 2.0) * 4.0 * PI / (3.0 - p)
}

/// Scaled density on the axis of a straight `±1/2` line defect in three
/// dimensions: `2^{-p} (2π/(2-p)) ∫_{-1}^{1} (1 - z²)^{(2-p)/2} dz`.
pub fn disclination_density(p: f64) -> f64 {
    // z = sin θ turns the integrand into cos^{3-p} θ on (-π/2, π/2).
    let n = 20_000;
    let step = PI / n as f64;
    let f = |th: f64| th.cos().max(0.0).powf(3.0 - p);
    let mut s = f(-PI / 2.0) + f(PI / 2.0);
    for i in 1..n {
        let th = -PI / 2.0 + i as f64 * step;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(th);
    }
    let integral = s * step / 3.0;
    2f64.powf(-p) * 2.0 * PI / (2.0 - p) * integral
}

/// Default singular-set threshold: half the smallest built-in defect density.
pub fn default_threshold(p: f64) -> f64 {
    0.5 * disclination_density(p).min(hedgehog_density(p))
}

#[inline]
pub(crate) fn soft_weight(rho: f64, dist: f64, h: f64) -> f64 {
    ((rho - dist) / h + 0.5).clamp(0.0, 1.0)
}

/// Per-cell gradient norms and the energy and `ψ` they carry.
#[derive(Debug, Clone)]
pub(crate) struct CellEnergies {
    pub grid: GridSpec,
    pub cells: Vec<usize>,
    pub centers: Vec<[f64; 3]>,
    pub t: Vec<f64>,
    /// `h^d φ(t)`.
    pub energy: Vec<f64>,
    /// `h^d ψ(t)`.
    pub psi: Vec<f64>,
}

impl CellEnergies {
    pub fn new(field: &DirectorField, modulus: &ElasticModulus) -> Self {
        let grid = field.grid().clone();
        let vol = grid.cell_volume();
        let (cells, t): (Vec<usize>, Vec<f64>) = crate::minimizer::cell_gradient_norms(field).into_iter().unzip();
        let centers = cells.iter().map(|&c| grid.cell_center(c)).collect();
        let energy = t.iter().map(|&t| vol * modulus.phi(t)).collect();
        let psi = t.iter().map(|&t| vol * modulus.psi(t)).collect();
        CellEnergies { grid, cells, centers, t, energy, psi }
    }

    pub fn distance(&self, i: usize, x0: &[f64; 3]) -> f64 {
        let c = &self.centers[i];
        (0..self.grid.dims()).map(|a| (c[a] - x0[a]).powi(2)).sum::<f64>().sqrt()
    }

    /// Soft-ball sums of energy and `ψ`.
    pub fn ball(&self, x0: &[f64; 3], rho: f64) -> (f64, f64) {
        let h = self.grid.h();
        let mut e = 0.0;
        let mut s = 0.0;
        for i in 0..self.cells.len() {
            let w = soft_weight(rho, self.distance(i, x0), h);
            if w > 0.0 {
                e += w * self.energy[i];
                s += w * self.psi[i];
            }
        }
        (e, s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityProfile {
    pub center: [f64; 3],
    /// Decreasing radii.
    pub radii: Vec<f64>,
    /// `ρ^{p-d} E(B_ρ)` per radius.
    pub values: Vec<f64>,
    /// Minimum over the radii, the discrete stand-in for the lower limit.
    pub liminf: f64,
}

/// Radii `4h·2^k` not exceeding the distance from `x0` to the boundary, largest first.
pub fn dyadic_radii(grid: &GridSpec, x0: &[f64; 3]) -> Vec<f64> {
    let max = grid.distance_to_boundary(x0) * (1.0 + 1e-12);
    let mut r = Vec::new();
    let mut rho = 4.0 * grid.h();
    while rho <= max {
        r.push(rho);
        rho *= 2.0;
    }
    r.reverse();
    r
}

pub(crate) fn check_radius(grid: &GridSpec, x0: &[f64; 3], rho: f64) -> Result<()> {
    let min = 2.0 * grid.h();
    if rho < min * (1.0 - 1e-12) {
        return Err(Error::SubGridRadius { radius: rho, min });
    }
    let max = grid.distance_to_boundary(x0);
    if rho > max * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::Invalid(format!("radius {rho} exceeds the distance {max} from {x0:?} to the boundary")));
    }
    Ok(())
}

/// Scaled density at `x0` for each radius in `radii` (strictly decreasing,
/// each in `[2h, dist(x0, ∂Ω)]`).
pub fn scaled_density(field: &DirectorField, modulus: &ElasticModulus, x0: [f64; 3], radii: &[f64]) -> Result<DensityProfile> {
    if radii.is_empty() {
        return Err(Error::Invalid("no radii given".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("radii must be strictly decreasing".into()));
    }
    let grid = field.grid();
    for &r in radii {
        check_radius(grid, &x0, r)?;
    }
    let cells = CellEnergies::new(field, modulus);
    Ok(profile(&cells, modulus.p(), x0, radii))
}

pub(crate) fn profile(cells: &CellEnergies, p: f64, x0: [f64; 3], radii: &[f64]) -> DensityProfile {
    let d = cells.grid.dims() as f64;
    let values: Vec<f64> = radii.iter().map(|&r| r.powf(p - d) * cells.ball(&x0, r).0).collect();
    let liminf = values.iter().copied().fold(f64::INFINITY, f64::min);
    DensityProfile { center: x0, radii: radii.to_vec(), values, liminf }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellDensity {
    pub cell: usize,
    pub center: [f64; 3],
    pub density: f64,
}

/// Scaled density at radius `2h` about every active cell centre.
pub(crate) fn cell_densities(cells: &CellEnergies, p: f64) -> Vec<f64> {
    let grid = &cells.grid;
    let h = grid.h();
    let dims = grid.dims();
    let rho = 2.0 * h;
    let mut slot = vec![u32::MAX; grid.node_count()];
    for (i, &c) in cells.cells.iter().enumerate() {
        slot[c] = i as u32;
    }
    // Cell centres are lattice points, so the weights form a fixed stencil.
    let reach = 3i64;
    let mut stencil = Vec::new();
    for dz in if dims == 3 { -reach..=reach } else { 0..=0 } {
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let dist = h * ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                let w = soft_weight(rho, dist, h);
                if w > 0.0 {
                    stencil.push(([dx, dy, dz], w));
                }
            }
        }
    }
    let n = grid.n();
    let scale = rho.powf(p - dims as f64);
    cells
        .cells
        .iter()
        .map(|&c| {
            let co = grid.coords(c);
            let mut e = 0.0;
            for (off, w) in &stencil {
                let mut idx = [0usize; 3];
                let mut ok = true;
                for a in 0..3 {
                    let v = co[a] as i64 + off[a];
                    if v < 0 || v >= n[a] as i64 {
                        ok = false;
                        break;
                    }
                    idx[a] = v as usize;
                }
                if !ok {
                    continue;
                }
                let s = slot[grid.index(idx)];
                if s != u32::MAX {
                    e += w * cells.energy[s as usize];
                }
            }
            scale * e
        })
        .collect()
}

/// Cells whose scaled density at the smallest admissible radius `2h`
/// exceeds `threshold` (default [`default_threshold`]).
pub fn singular_set_estimate(
    field: &DirectorField,
    modulus: &ElasticModulus,
    threshold: Option<f64>,
) -> Result<Vec<CellDensity>> {
    let theta = threshold.unwrap_or_else(|| default_threshold(modulus.p()));
    if !(theta > 0.0) {
        return Err(Error::Invalid(format!("density threshold {theta} must be positive")));
    }
    let cells = CellEnergies::new(field, modulus);
    let dens = cell_densities(&cells, modulus.p());
    Ok(cells
        .cells
        .iter()
        .zip(&dens)
        .enumerate()
        .filter(|(_, (_, &d))| d > theta)
        .map(|(i, (&cell, &density))| CellDensity { cell, center: cells.centers[i], density })
        .collect())
}
