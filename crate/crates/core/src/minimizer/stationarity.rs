//! Discrete residuals of the outer (target-valued) and inner (domain
//! reparametrisation) Euler–Lagrange equations.
//!
//! Outer: the tangent-projected energy gradient, summed in absolute value
//! over nodes. Inner: the divergence of the stress
//! `T_jk = (φ'(t)/t) ∂_j u·∂_k u - φ(t) δ_jk`, taken cellwise and
//! differentiated to nodes from the surrounding cells.

use super::energy::{project_tangent, EnergyModel, Metric};
use crate::elastic::{ElasticModulus, ModulusFunction};
use crate::error::{Error, Result};
use crate::fields::{DirectorField, SingularLocus};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityReport {
    /// L¹ norm of the outer residual.
    pub outer: f64,
    /// L¹ norm of the stress divergence.
    pub inner: f64,
    /// Nodes that entered both sums.
    pub nodes: usize,
    pub exclusion_radius: f64,
}

/// Corner values of a cell, each replaced by the lift closest to corner 0.
pub(crate) fn aligned_cell(field: &DirectorField, base: usize) -> [[f64; 8]; 8] {
    let grid = field.grid();
    let target = field.target();
    let m = field.component_count();
    let mut out = [[0.0; 8]; 8];
    let reference = field.value(base);
    out[0][..m].copy_from_slice(reference);
    for c in 1..grid.corner_count() {
        let v = field.value(base + grid.corner_offset(c));
        let (_, g, _) = target.nearest_lift(v, reference);
        target.group().element(g).apply(v, &mut out[c][..m]);
    }
    out
}

/// Per-cell stress tensor (row-major 3×3, unused rows zero in 2D).
fn cell_stress(field: &DirectorField, modulus: &ElasticModulus, base: usize, delta: f64) -> [f64; 9] {
    let grid = field.grid();
    let dims = grid.dims();
    let h = grid.h();
    let m = field.component_count();
    let half = (1 << (dims - 1)) as f64;
    let target = field.target();
    let v = aligned_cell(field, base);
    let mut diag = [0.0; 3];
    let mut grad = [[0.0; 8]; 3];
    for k in 0..dims {
        for c in (0..grid.corner_count()).filter(|c| c >> k & 1 == 0) {
            let a = base + grid.corner_offset(c);
            let b = a + grid.stride(k);
            let (d2, _, _) = target.nearest_lift(field.value(a), field.value(b));
            diag[k] += d2 / (half * h * h);
            for i in 0..m {
                grad[k][i] += (v[c | 1 << k][i] - v[c][i]) / (half * h);
            }
        }
    }
    let t = diag.iter().sum::<f64>().sqrt();
    let w = modulus.weight(t.max(delta));
    let phi = modulus.phi(t);
    let mut s = [0.0; 9];
    for j in 0..dims {
        for k in 0..dims {
            let sjk = if j == k { diag[j] } else { (0..m).map(|i| grad[j][i] * grad[k][i]).sum() };
            s[j * 3 + k] = w * sjk - if j == k { phi } else { 0.0 };
        }
    }
    s
}

/// Outer and inner residuals over free nodes at distance at least
/// `exclusion_radius` (itself at least `3h`) from every singular locus.
pub fn stationarity_residual(
    field: &DirectorField,
    modulus: &ElasticModulus,
    loci: &[SingularLocus],
    exclusion_radius: f64,
) -> Result<StationarityReport> {
    modulus.ensure_admissible()?;
    let grid = field.grid();
    let h = grid.h();
    if exclusion_radius < 3.0 * h * (1.0 - 1e-12) {
        return Err(Error::SubGridRadius { radius: exclusion_radius, min: 3.0 * h });
    }
    let delta = 1e-8 / h;
    let m = field.component_count();
    let mut model =
        EnergyModel::new(grid, Metric::Orbit(field.target().clone()), m, modulus.raw(), delta, field.boundary());
    let mut g = vec![0.0; field.values().len()];
    model.energy_and_gradient(field.values(), &mut g);
    project_tangent(field.values(), &mut g, m);

    let n = grid.node_count();
    let dims = grid.dims();
    let active = {
        let mut a = vec![false; n];
        for &c in &model.cells {
            a[c] = true;
        }
        a
    };
    // Cells around node i: base = i - Σ_{a in A} e_a for subsets A of axes.
    let incident = |i: usize| -> Option<Vec<(usize, usize)>> {
        let c = grid.coords(i);
        let mut out = Vec::with_capacity(1 << dims);
        for mask in 0..(1usize << dims) {
            let mut base = i;
            for a in 0..dims {
                if mask >> a & 1 == 1 {
                    if c[a] == 0 {
                        return None;
                    }
                    base -= grid.stride(a);
                }
            }
            if !active[base] {
                return None;
            }
            out.push((mask, base));
        }
        Some(out)
    };
    let mut stress: Vec<Option<[f64; 9]>> = vec![None; n];
    let mut outer = 0.0;
    let mut inner = 0.0;
    let mut nodes = 0;
    for i in 0..n {
        if !model.free[i] {
            continue;
        }
        let x = grid.position(i);
        if loci.iter().any(|l| l.distance(&x) < exclusion_radius) {
            continue;
        }
        let Some(cells) = incident(i) else { continue };
        nodes += 1;
        outer += g[i * m..(i + 1) * m].iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut div = [0.0; 3];
        for (mask, base) in cells {
            let s = *stress[base].get_or_insert_with(|| cell_stress(field, modulus, base, delta));
            for j in 0..dims {
                let sign = if mask >> j & 1 == 1 { -1.0 } else { 1.0 };
                for k in 0..dims {
                    div[k] += sign * s[j * 3 + k] / ((1 << (dims - 1)) as f64 * h);
                }
            }
        }
        inner += grid.cell_volume() * div.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    Ok(StationarityReport { outer, inner, nodes, exclusion_radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{generate, FieldKind, GeneratorParams};
    use crate::grid::{DomainShape, GridSpec};
    use crate::manifolds::QuotientTarget;

    #[test]
    fn constant_field_is_stationary() {
        let g = GridSpec::centered(2, 16, 1.0, DomainShape::Box).unwrap();
        let f = DirectorField::constant(g, QuotientTarget::sphere(2), &[0.0, 1.0, 0.0]).unwrap();
        let m = ElasticModulus::power_regularized(1.5, 0.0).unwrap();
        let r = stationarity_residual(&f, &m, &[], 0.5).unwrap();
        assert_eq!((r.outer, r.inner), (0.0, 0.0));
        assert!(r.nodes > 0);
    }

    #[test]
    fn exclusion_below_three_cells_is_rejected() {
        let g = GridSpec::centered(2, 16, 1.0, DomainShape::Box).unwrap();
        let gen = generate(&FieldKind::Vortex2d, &GeneratorParams::default(), &g, &QuotientTarget::sphere(2)).unwrap();
        let m = ElasticModulus::power_regularized(1.5, 0.0).unwrap();
        assert!(matches!(
            stationarity_residual(&gen.field, &m, &gen.loci, g.h()),
            Err(Error::SubGridRadius { .. })
        ));
    }
}
