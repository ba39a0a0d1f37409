//! Node-based fields of orbit representatives, their Dirichlet data, and the
//! degree-zero homogeneous extension used to seed ball problems.

mod generate;

pub use generate::{default_center, generate, FieldKind, Generated, GeneratorParams, SingularLocus};

use crate::error::{Error, Result};
use crate::grid::{Domain, DomainShape, GridSpec};
use crate::manifolds::{norm, QTensor, QuotientTarget};
use rayon::prelude::*;

/// A grid of unit vectors in `R^{q+1}`, each the canonical representative of
/// its orbit, plus a per-node Dirichlet mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField {
    grid: GridSpec,
    target: QuotientTarget,
    values: Vec<f64>,
    boundary: Vec<bool>,
}

impl DirectorField {
    /// Builds a field with the domain's natural boundary mask.
    pub fn new(grid: GridSpec, target: QuotientTarget, values: Vec<f64>) -> Result<Self> {
        let boundary = Domain::new(&grid).boundary;
        Self::with_boundary(grid, target, values, boundary)
    }

    /// Builds a field with an explicit mask. Vectors must be unit to 1e-9;
    /// they are canonicalised on entry.
    pub fn with_boundary(grid: GridSpec, target: QuotientTarget, mut values: Vec<f64>, boundary: Vec<bool>) -> Result<Self> {
        let m = target.ambient_dim();
        let n = grid.node_count();
        if values.len() != n * m {
            return Err(Error::Invalid(format!("expected {} components, got {}", n * m, values.len())));
        }
        if boundary.len() != n {
            return Err(Error::Invalid("boundary mask length differs from node count".into()));
        }
        for (i, v) in values.chunks_exact_mut(m).enumerate() {
            let r = norm(v);
            if !((r - 1.0).abs() <= 1e-9) {
                return Err(Error::Invalid(format!("node {i} has norm {r}, not a unit vector")));
            }
            target.canonicalize(v);
        }
        Ok(DirectorField { grid, target, values, boundary })
    }

    /// Samples `f` at every node position. `f` may return non-unit vectors;
    /// they are normalised.
    pub fn from_fn<F>(grid: GridSpec, target: QuotientTarget, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> Vec<f64> + Sync,
    {
        let m = target.ambient_dim();
        let rows: Vec<Result<Vec<f64>>> = (0..grid.node_count())
            .into_par_iter()
            .map(|i| {
                let v = f(grid.position(i));
                let r = norm(&v);
                if v.len() != m || !(r >= 1e-12) || !r.is_finite() {
                    return Err(Error::Normalization { norm: r });
                }
                Ok(v.iter().map(|x| x / r).collect())
            })
            .collect();
        let mut values = Vec::with_capacity(grid.node_count() * m);
        for r in rows {
            values.extend(r?);
        }
        Self::new(grid, target, values)
    }

    pub fn constant(grid: GridSpec, target: QuotientTarget, direction: &[f64]) -> Result<Self> {
        let r = norm(direction);
        if !(r >= 1e-6) {
            return Err(Error::Normalization { norm: r });
        }
        let unit: Vec<f64> = direction.iter().map(|x| x / r).collect();
        let n = grid.node_count();
        Self::new(grid, target, unit.repeat(n))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn target(&self) -> &QuotientTarget {
        &self.target
    }

    /// Flat node-major storage, `ambient_dim` components per node.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    pub fn component_count(&self) -> usize {
        self.target.ambient_dim()
    }

    #[inline]
    pub fn value(&self, idx: usize) -> &[f64] {
        let m = self.target.ambient_dim();
        &self.values[idx * m..(idx + 1) * m]
    }

    pub fn domain(&self) -> Domain {
        Domain::new(&self.grid)
    }

    /// Replaces one node value (normalised, canonicalised).
    pub fn set_value(&mut self, idx: usize, v: &[f64]) -> Result<()> {
        let m = self.target.ambient_dim();
        let r = norm(v);
        if v.len() != m || !(r >= 1e-6) {
            return Err(Error::Normalization { norm: r });
        }
        let slot = &mut self.values[idx * m..(idx + 1) * m];
        for (s, x) in slot.iter_mut().zip(v) {
            *s = x / r;
        }
        self.target.canonicalize(slot);
        Ok(())
    }

    /// Copies raw representatives into the free nodes and canonicalises them.
    /// Boundary nodes are left untouched.
    pub(crate) fn store_free_values(&mut self, raw: &[f64]) {
        let m = self.target.ambient_dim();
        for i in 0..self.grid.node_count() {
            if self.boundary[i] {
                continue;
            }
            let slot = &mut self.values[i * m..(i + 1) * m];
            slot.copy_from_slice(&raw[i * m..(i + 1) * m]);
            self.target.canonicalize(slot);
        }
    }

    /// The same representatives read in another target with the same
    /// ambient space (for instance a sphere-valued field seen in `RP2`).
    pub fn with_target(&self, target: QuotientTarget) -> Result<Self> {
        if target.ambient_dim() != self.target.ambient_dim() {
            return Err(Error::Invalid("targets have different ambient dimensions".into()));
        }
        Self::with_boundary(self.grid.clone(), target, self.values.clone(), self.boundary.clone())
    }

    /// Q-tensor of every node (projective-plane targets only).
    pub fn q_tensors(&self) -> Result<Vec<QTensor>> {
        if self.target.ambient_dim() != 3 {
            return Err(Error::Invalid("Q-tensors need a three-component director".into()));
        }
        (0..self.grid.node_count()).map(|i| QTensor::from_director(self.value(i))).collect()
    }
}

/// Nodal Dirichlet data: boundary node indices and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub grid: GridSpec,
    pub target: QuotientTarget,
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
}

/// The values of `field` on its boundary mask.
pub fn restrict_boundary(field: &DirectorField) -> BoundaryData {
    let nodes: Vec<usize> = (0..field.grid.node_count()).filter(|&i| field.boundary[i]).collect();
    let values = nodes.iter().flat_map(|&i| field.value(i).to_vec()).collect();
    BoundaryData { grid: field.grid.clone(), target: field.target.clone(), nodes, values }
}

/// Extends ball boundary data to every node by `u(x) = u_b(x̂)`, where `x̂`
/// is the boundary node whose direction from the center is closest in angle
/// to that of `x`. The center node takes the value of the first boundary node.
pub fn homogeneous_extension(data: &BoundaryData) -> Result<DirectorField> {
    let grid = &data.grid;
    if grid.shape() != DomainShape::Ball {
        return Err(Error::UnsupportedDomain("homogeneous extension needs a ball-shaped grid".into()));
    }
    if data.nodes.is_empty() {
        return Err(Error::Invalid("no boundary data".into()));
    }
    let m = data.target.ambient_dim();
    let c = grid.center();
    let dims = grid.dims();
    let unit_dir = |x: [f64; 3]| -> Option<[f64; 3]> {
        let mut d = [0.0; 3];
        for a in 0..dims {
            d[a] = x[a] - c[a];
        }
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        (r > 1e-12 * grid.h()).then(|| [d[0] / r, d[1] / r, d[2] / r])
    };
    let bdirs: Vec<[f64; 3]> = data
        .nodes
        .iter()
        .map(|&i| unit_dir(grid.position(i)).unwrap_or([1.0, 0.0, 0.0]))
        .collect();
    let mut is_boundary = vec![None; grid.node_count()];
    for (k, &i) in data.nodes.iter().enumerate() {
        is_boundary[i] = Some(k);
    }
    let source: Vec<usize> = (0..grid.node_count())
        .into_par_iter()
        .map(|i| {
            if let Some(k) = is_boundary[i] {
                return k;
            }
            match unit_dir(grid.position(i)) {
                None => 0,
                Some(d) => {
                    let mut best = (f64::NEG_INFINITY, 0usize);
                    for (k, b) in bdirs.iter().enumerate() {
                        let s = d[0] * b[0] + d[1] * b[1] + d[2] * b[2];
                        if s > best.0 {
                            best = (s, k);
                        }
                    }
                    best.1
                }
            }
        })
        .collect();
    let mut values = Vec::with_capacity(grid.node_count() * m);
    for k in source {
        values.extend_from_slice(&data.values[k * m..(k + 1) * m]);
    }
    let mut boundary = vec![false; grid.node_count()];
    for &i in &data.nodes {
        boundary[i] = true;
    }
    DirectorField::with_boundary(grid.clone(), data.target.clone(), values, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainShape;

    #[test]
    fn non_unit_values_are_rejected() {
        let g = GridSpec::centered(2, 8, 1.0, DomainShape::Box).unwrap();
        let v = vec![0.5; 64 * 3];
        assert!(DirectorField::new(g, QuotientTarget::rp2(), v).is_err());
    }

    #[test]
    fn storage_is_canonical() {
        let g = GridSpec::centered(2, 8, 1.0, DomainShape::Box).unwrap();
        let f = DirectorField::constant(g, QuotientTarget::rp2(), &[0.0, -1.0, 0.0]).unwrap();
        assert_eq!(f.value(5), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn constant_boundary_extends_to_constant_field() {
        let g = GridSpec::centered(3, 11, 1.0, DomainShape::Ball).unwrap();
        let f = DirectorField::constant(g, QuotientTarget::rp2(), &[0.0, 0.6, 0.8]).unwrap();
        let ext = homogeneous_extension(&restrict_boundary(&f)).unwrap();
        let dom = f.domain();
        for i in 0..f.grid().node_count() {
            if dom.inside[i] {
                assert_eq!(ext.value(i), f.value(i));
            }
        }
    }

    #[test]
    fn extension_needs_a_ball() {
        let g = GridSpec::centered(3, 8, 1.0, DomainShape::Box).unwrap();
        let f = DirectorField::constant(g, QuotientTarget::rp2(), &[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(homogeneous_extension(&restrict_boundary(&f)), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn restriction_inverts_extension_on_random_data() {
        let g = GridSpec::centered(3, 12, 1.0, DomainShape::Ball).unwrap();
        let p = GeneratorParams { seed: 9, ..Default::default() };
        let f = generate(&FieldKind::Random, &p, &g, &QuotientTarget::rp2()).unwrap().field;
        let data = restrict_boundary(&f);
        assert_eq!(restrict_boundary(&homogeneous_extension(&data).unwrap()), data);
    }

    #[test]
    fn hedgehog_extension_is_a_quantised_hedgehog() {
        let g = GridSpec::centered(3, 16, 1.0, DomainShape::Ball).unwrap();
        let t = QuotientTarget::sphere(2);
        let f = generate(&FieldKind::Hedgehog, &GeneratorParams::default(), &g, &t).unwrap().field;
        let data = restrict_boundary(&f);
        let ext = homogeneous_extension(&data).unwrap();
        assert_eq!(restrict_boundary(&ext), data);
        let dom = f.domain();
        for i in (0..g.node_count()).filter(|&i| dom.inside[i]) {
            let d: f64 = f.value(i).iter().zip(ext.value(i)).map(|(a, b)| a * b).sum();
            // Angular quantisation by the boundary node spacing.
            assert!(d > 0.9, "node {i}: cos = {d}");
        }
    }
}
