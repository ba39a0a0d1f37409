//! Uniform 2D/3D node grids, domain masks, and the cell and plaquette
//! indexing shared by the energy, lifting and defect code.
//!
//! Nodes are stored row-major with the last axis fastest:
//! `index = (i * n1 + j) * n2 + k`, and `n2 = 1` for planar grids.
//! A cell is named by its lowest-index corner; a plaquette by its base node
//! and one of the coordinate planes `(0,1)`, `(0,2)`, `(1,2)`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainShape {
    Box,
    Ball,
}

impl DomainShape {
    pub fn name(&self) -> &'static str {
        match self {
            DomainShape::Box => "box",
            DomainShape::Ball => "ball",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(DomainShape::Box),
            "ball" => Ok(DomainShape::Ball),
            other => Err(Error::Invalid(format!("unknown domain shape `{other}` (expected box or ball)"))),
        }
    }
}

/// Coordinate planes; the normal axis of plane `i` is `2 - i`.
pub const PLANES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dims: usize,
    n: [usize; 3],
    h: f64,
    origin: [f64; 3],
    shape: DomainShape,
}

impl GridSpec {
    pub fn new(dims: usize, n: &[usize], h: f64, origin: &[f64], shape: DomainShape) -> Result<Self> {
        if dims != 2 && dims != 3 {
            return Err(Error::Invalid(format!("grid dimension must be 2 or 3, got {dims}")));
        }
        if n.len() != dims || origin.len() != dims {
            return Err(Error::Invalid(format!("grid needs {dims} node counts and origin coordinates")));
        }
        if let Some(bad) = n.iter().find(|&&k| k < 8) {
            return Err(Error::Invalid(format!("at least 8 nodes per axis required, got {bad}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Invalid(format!("grid spacing must be positive, got {h}")));
        }
        let mut nn = [1usize; 3];
        let mut o = [0.0; 3];
        nn[..dims].copy_from_slice(n);
        o[..dims].copy_from_slice(origin);
        let g = GridSpec { dims, n: nn, h, origin: o, shape };
        if shape == DomainShape::Ball && !(0..g.node_count()).any(|i| g.in_domain(i)) {
            return Err(Error::Invalid("ball domain contains no nodes".into()));
        }
        Ok(g)
    }

    /// `n` nodes per axis covering `[-half_width, half_width]^dims`.
    pub fn centered(dims: usize, n: usize, half_width: f64, shape: DomainShape) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid("at least 8 nodes per axis required".into()));
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        Self::new(dims, &vec![n; dims], h, &vec![-half_width; dims], shape)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }
    /// Node counts per axis; trailing entries are 1 on planar grids.
    pub fn n(&self) -> [usize; 3] {
        self.n
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }
    pub fn shape(&self) -> DomainShape {
        self.shape
    }
    pub fn node_count(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }
    pub fn max_nodes_per_axis(&self) -> usize {
        self.n[..self.dims].iter().copied().max().unwrap()
    }

    /// `h^dims`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dims as i32)
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n[1] * self.n[2],
            1 => self.n[2],
            _ => 1,
        }
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[0] * self.n[1] + c[1]) * self.n[2] + c[2]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.n[2];
        let r = idx / self.n[2];
        [r / self.n[1], r % self.n[1], k]
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dims {
            x[a] = self.origin[a] + c[a] as f64 * self.h;
        }
        x
    }

    /// Geometric center of the node box.
    pub fn center(&self) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dims {
            x[a] = self.origin[a] + 0.5 * (self.n[a] - 1) as f64 * self.h;
        }
        x
    }

    /// Radius of the inscribed ball.
    pub fn ball_radius(&self) -> f64 {
        (0..self.dims).map(|a| 0.5 * (self.n[a] - 1) as f64 * self.h).fold(f64::INFINITY, f64::min)
    }

    /// Whether a point lies in the continuous domain (up to rounding).
    pub fn contains_point(&self, x: &[f64; 3]) -> bool {
        match self.shape {
            DomainShape::Box => (0..self.dims).all(|a| {
                let lo = self.origin[a] - 1e-12 * self.h;
                let hi = self.origin[a] + (self.n[a] - 1) as f64 * self.h + 1e-12 * self.h;
                x[a] >= lo && x[a] <= hi
            }),
            DomainShape::Ball => {
                let c = self.center();
                let r2: f64 = (0..self.dims).map(|a| (x[a] - c[a]).powi(2)).sum();
                r2.sqrt() <= self.ball_radius() * (1.0 + 1e-12)
            }
        }
    }

    #[inline]
    pub fn in_domain(&self, idx: usize) -> bool {
        self.shape == DomainShape::Box || self.contains_point(&self.position(idx))
    }

    /// Distance from a point to the boundary of the continuous domain (negative outside).
    pub fn distance_to_boundary(&self, x: &[f64; 3]) -> f64 {
        match self.shape {
            DomainShape::Box => (0..self.dims)
                .map(|a| {
                    let lo = x[a] - self.origin[a];
                    let hi = self.origin[a] + (self.n[a] - 1) as f64 * self.h - x[a];
                    lo.min(hi)
                })
                .fold(f64::INFINITY, f64::min),
            DomainShape::Ball => {
                let c = self.center();
                let r: f64 = (0..self.dims).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>().sqrt();
                self.ball_radius() - r
            }
        }
    }

    /// Neighbour of `idx` one step along `axis` (`forward` or backward), if on the grid.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let c = self.coords(idx);
        if forward {
            (c[axis] + 1 < self.n[axis]).then(|| idx + self.stride(axis))
        } else {
            (c[axis] > 0).then(|| idx - self.stride(axis))
        }
    }

    /// Whether `idx` can serve as the base corner of a cell.
    #[inline]
    pub fn is_cell_base(&self, idx: usize) -> bool {
        let c = self.coords(idx);
        (0..self.dims).all(|a| c[a] + 1 < self.n[a])
    }

    pub fn corner_count(&self) -> usize {
        1 << self.dims
    }

    /// Offset of corner `c` (bit `a` = step along axis `a`) from the cell base.
    #[inline]
    pub fn corner_offset(&self, c: usize) -> usize {
        (0..self.dims).filter(|a| c >> a & 1 == 1).map(|a| self.stride(a)).sum()
    }

    pub fn cell_center(&self, base: usize) -> [f64; 3] {
        let mut x = self.position(base);
        for v in x.iter_mut().take(self.dims) {
            *v += 0.5 * self.h;
        }
        x
    }

    /// Number of coordinate planes (1 in 2D, 3 in 3D).
    pub fn plane_count(&self) -> usize {
        if self.dims == 2 {
            1
        } else {
            3
        }
    }

    #[inline]
    pub fn plaquette_id(&self, base: usize, plane: usize) -> usize {
        base * self.plane_count() + plane
    }

    #[inline]
    pub fn plaquette_parts(&self, id: usize) -> (usize, usize) {
        (id / self.plane_count(), id % self.plane_count())
    }

    /// Whether the plaquette fits on the grid.
    pub fn plaquette_exists(&self, base: usize, plane: usize) -> bool {
        let (a, b) = PLANES[plane];
        let c = self.coords(base);
        c[a] + 1 < self.n[a] && c[b] + 1 < self.n[b]
    }

    /// Corners in counter-clockwise order in the `(a, b)` plane.
    pub fn plaquette_nodes(&self, base: usize, plane: usize) -> [usize; 4] {
        let (a, b) = PLANES[plane];
        let (sa, sb) = (self.stride(a), self.stride(b));
        [base, base + sa, base + sa + sb, base + sb]
    }

    pub fn plaquette_center(&self, base: usize, plane: usize) -> [f64; 3] {
        let (a, b) = PLANES[plane];
        let mut x = self.position(base);
        x[a] += 0.5 * self.h;
        x[b] += 0.5 * self.h;
        x
    }

    /// Sign of `e_a × e_b` against the positive normal axis of `plane`.
    pub fn plane_orientation(plane: usize) -> i32 {
        if plane == 1 {
            -1
        } else {
            1
        }
    }

    pub fn normal_axis(plane: usize) -> usize {
        2 - plane
    }
}

/// Precomputed masks for a grid: domain membership, Dirichlet boundary and
/// active cells (all corners in the domain).
#[derive(Debug, Clone)]
pub struct Domain {
    pub inside: Vec<bool>,
    pub boundary: Vec<bool>,
    pub cells: Vec<usize>,
}

impl Domain {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.node_count();
        let inside: Vec<bool> = (0..n).map(|i| grid.in_domain(i)).collect();
        let boundary = (0..n)
            .map(|i| {
                inside[i]
                    && (0..grid.dims()).any(|a| {
                        [true, false].iter().any(|&f| match grid.neighbor(i, a, f) {
                            Some(j) => !inside[j],
                            None => true,
                        })
                    })
            })
            .collect();
        let cells = (0..n)
            .filter(|&i| {
                grid.is_cell_base(i) && (0..grid.corner_count()).all(|c| inside[i + grid.corner_offset(c)])
            })
            .collect();
        Domain { inside, boundary, cells }
    }

    /// Dense lookup from node index to "is an active cell base".
    pub fn cell_mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &c in &self.cells {
            m[c] = true;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trips() {
        let g = GridSpec::new(3, &[9, 10, 11], 0.1, &[0.0, 0.0, 0.0], DomainShape::Box).unwrap();
        for idx in [0, 17, 500, g.node_count() - 1] {
            assert_eq!(g.index(g.coords(idx)), idx);
        }
        assert_eq!(g.stride(0), 110);
        assert_eq!(g.stride(2), 1);
        let p = GridSpec::new(2, &[8, 12], 0.5, &[-1.0, -2.0], DomainShape::Box).unwrap();
        assert_eq!(p.n(), [8, 12, 1]);
        assert_eq!(p.position(p.index([1, 2, 0])), [-0.5, -1.0, 0.0]);
    }

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(GridSpec::new(3, &[7, 8, 8], 0.1, &[0.0; 3], DomainShape::Box).is_err());
        assert!(GridSpec::new(2, &[8, 8], 0.0, &[0.0; 2], DomainShape::Box).is_err());
        assert!(GridSpec::new(4, &[8; 4], 0.1, &[0.0; 4], DomainShape::Box).is_err());
    }

    #[test]
    fn box_boundary_is_the_outer_shell() {
        let g = GridSpec::centered(3, 8, 1.0, DomainShape::Box).unwrap();
        let d = Domain::new(&g);
        let count = d.boundary.iter().filter(|&&b| b).count();
        assert_eq!(count, 8 * 8 * 8 - 6 * 6 * 6);
        assert_eq!(d.cells.len(), 7 * 7 * 7);
    }

    #[test]
    fn ball_mask_is_symmetric_and_has_a_boundary_layer() {
        let g = GridSpec::centered(3, 17, 1.0, DomainShape::Ball).unwrap();
        let d = Domain::new(&g);
        assert!(d.boundary.iter().any(|&b| b));
        for i in 0..g.node_count() {
            let c = g.coords(i);
            let m = g.index([16 - c[0], 16 - c[1], 16 - c[2]]);
            assert_eq!(d.inside[i], d.inside[m]);
        }
        assert!(d.inside[g.index([8, 8, 0])]);
        assert!(!d.inside[g.index([0, 0, 0])]);
    }

    #[test]
    fn plaquette_ids_round_trip() {
        let g = GridSpec::centered(3, 8, 1.0, DomainShape::Box).unwrap();
        let id = g.plaquette_id(123, 2);
        assert_eq!(g.plaquette_parts(id), (123, 2));
        let nodes = g.plaquette_nodes(0, 0);
        assert_eq!(nodes, [0, g.stride(0), g.stride(0) + g.stride(1), g.stride(1)]);
    }
}
