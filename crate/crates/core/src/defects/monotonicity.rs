//! Almost-monotonicity of the scaled energy about a centre `x₀`.
//!
//! For a stationary field,
//! `R^{p-d}E(B_R) - r^{p-d}E(B_r) + ∫_r^R ξ^{p-d-1} ∫_{B_ξ} ψ dξ
//!   = ∫_{B_R \ B_r} |x-x₀|^{p-d} (φ'(t)/t) |∂_ν u|²`
//! with `ν` the outward radial direction. Both sides are evaluated here with
//! the same soft ball weights.

use super::density::{check_radius, soft_weight, CellEnergies};
use crate::elastic::ElasticModulus;
use crate::error::{Error, Result};
use crate::fields::DirectorField;
use crate::minimizer::aligned_cell;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub center: [f64; 3],
    pub r: f64,
    pub big_r: f64,
    /// Scaled-energy increment plus the `ψ` correction.
    pub lhs: f64,
    /// Weighted radial-derivative integral over the annulus.
    pub rhs: f64,
    pub residual: f64,
    /// `∫_r^R ξ^{p-d-1} Ψ(ξ) dξ`.
    pub psi_correction: f64,
    /// `M ω_d (R^p - r^p) / p`.
    pub psi_bound: f64,
    pub rhs_nonnegative: bool,
    /// `(ξ, ξ^{p-d}E(B_ξ) + ∫_r^ξ ...)` on the quadrature radii.
    pub profile: Vec<(f64, f64)>,
}

/// Volume of the unit ball in `d` dimensions (`d` = 2 or 3).
fn unit_ball_volume(d: usize) -> f64 {
    if d == 2 {
        PI
    } else {
        4.0 * PI / 3.0
    }
}

/// Tolerance on the sign of the right-hand side.
pub const RHS_TOLERANCE: f64 = 1e-8;

pub fn monotonicity_check(
    field: &DirectorField,
    modulus: &ElasticModulus,
    x0: [f64; 3],
    r: f64,
    big_r: f64,
) -> Result<MonotonicityReport> {
    modulus.ensure_admissible()?;
    if !(r < big_r) {
        return Err(Error::Invalid(format!("inner radius {r} must be below the outer radius {big_r}")));
    }
    let grid = field.grid();
    check_radius(grid, &x0, r)?;
    check_radius(grid, &x0, big_r)?;
    let h = grid.h();
    let d = grid.dims();
    let p = modulus.p();
    let cells = CellEnergies::new(field, modulus);

    let steps = ((big_r - r) / h).round().max(1.0) as usize;
    let radii: Vec<f64> = (0..=steps).map(|i| r + (big_r - r) * i as f64 / steps as f64).collect();
    let balls: Vec<(f64, f64)> = radii.iter().map(|&xi| cells.ball(&x0, xi)).collect();
    let mut profile = Vec::with_capacity(radii.len());
    let mut correction = 0.0;
    let integrand = |i: usize| radii[i].powf(p - d as f64 - 1.0) * balls[i].1;
    for i in 0..radii.len() {
        if i > 0 {
            correction += 0.5 * (radii[i] - radii[i - 1]) * (integrand(i - 1) + integrand(i));
        }
        profile.push((radii[i], radii[i].powf(p - d as f64) * balls[i].0 + correction));
    }
    let lhs = profile[steps].1 - profile[0].1;

    let m = field.component_count();
    let mut rhs = 0.0;
    for (i, &base) in cells.cells.iter().enumerate() {
        let dist = cells.distance(i, &x0);
        let w = soft_weight(big_r, dist, h) - soft_weight(r, dist, h);
        if w <= 0.0 || dist == 0.0 {
            continue;
        }
        let t = cells.t[i];
        if t == 0.0 {
            continue;
        }
        let v = aligned_cell(field, base);
        let half = (1usize << (d - 1)) as f64;
        let c = &cells.centers[i];
        let mut radial = [0.0; 8];
        for k in 0..d {
            let nu = (c[k] - x0[k]) / dist;
            for corner in (0..grid.corner_count()).filter(|corner| corner >> k & 1 == 0) {
                for j in 0..m {
                    radial[j] += nu * (v[corner | 1 << k][j] - v[corner][j]) / (half * h);
                }
            }
        }
        let dn2: f64 = radial[..m].iter().map(|x| x * x).sum();
        rhs += w * grid.cell_volume() * dist.powf(p - d as f64) * modulus.weight(t) * dn2;
    }
    let psi_bound = modulus.psi_bound() * unit_ball_volume(d) * (big_r.powf(p) - r.powf(p)) / p;
    Ok(MonotonicityReport {
        center: x0,
        r,
        big_r,
        lhs,
        rhs,
        residual: lhs - rhs,
        psi_correction: correction,
        psi_bound,
        rhs_nonnegative: rhs >= -RHS_TOLERANCE,
        profile,
    })
}
