//! Discrete orientability: deck-group transports along grid edges, their
//! holonomy around plaquettes, the dual obstruction chain, and lifting of a
//! field to the covering sphere where that chain vanishes.
//!
//! Conventions. The transport of edge `a → b` is the deck element `g` with
//! `g(n_a)` nearest to `n_b`. A plaquette's holonomy is the element carrying
//! a lift continued once around its counter-clockwise boundary back onto the
//! starting lift. Chain coefficients orient every plaquette positively about
//! its normal axis, so a support plaquette is a dual segment along that axis.

use crate::error::{Error, Result};
use crate::fields::DirectorField;
use crate::grid::{Domain, GridSpec};
use crate::manifolds::QuotientTarget;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};

/// Outcome of comparing the two ends of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    Resolved(usize),
    /// The nearest lift is too far, or not separated enough from the runner-up.
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Holonomy {
    Element(usize),
    Unresolved { edge: (usize, usize) },
}

fn classify(target: &QuotientTarget, a: &[f64], b: &[f64]) -> Transport {
    let (tau, tau_margin) = target.resolution_thresholds();
    let (d2, g, second) = target.nearest_lift(a, b);
    if d2 < tau * tau && second > tau_margin * tau_margin {
        Transport::Resolved(g)
    } else {
        Transport::Unresolved
    }
}

/// Transport along the edge joining adjacent nodes `a` and `b`.
pub fn edge_transport(field: &DirectorField, a: usize, b: usize) -> Transport {
    debug_assert!(
        (0..field.grid().dims()).any(|k| a.abs_diff(b) == field.grid().stride(k)),
        "nodes {a} and {b} are not adjacent"
    );
    classify(field.target(), field.value(a), field.value(b))
}

fn holonomy_of(target: &QuotientTarget, values: &[f64], m: usize, nodes: [usize; 4]) -> Holonomy {
    let group = target.group();
    let mut acc = group.identity();
    for i in 0..4 {
        let (a, b) = (nodes[i], nodes[(i + 1) % 4]);
        match classify(target, &values[a * m..(a + 1) * m], &values[b * m..(b + 1) * m]) {
            Transport::Resolved(g) => acc = group.compose(g, acc),
            Transport::Unresolved => return Holonomy::Unresolved { edge: (a, b) },
        }
    }
    Holonomy::Element(group.inverse(acc))
}

/// Holonomy around the plaquette with base node `base` in coordinate plane
/// `plane`, traversed counter-clockwise in that plane.
pub fn plaquette_holonomy(field: &DirectorField, base: usize, plane: usize) -> Holonomy {
    let grid = field.grid();
    assert!(grid.plaquette_exists(base, plane), "plaquette ({base}, {plane}) leaves the grid");
    holonomy_of(field.target(), field.values(), field.component_count(), grid.plaquette_nodes(base, plane))
}

/// One dual segment of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSegment {
    pub plaquette: usize,
    pub from: [f64; 3],
    pub to: [f64; 3],
    pub element: usize,
}

/// A connected run of support plaquettes, traced through cube centres.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub vertices: Vec<[f64; 3]>,
    pub plaquettes: Vec<usize>,
    pub closed: bool,
    /// Ends that stop at the domain boundary (0, 1 or 2).
    pub boundary_ends: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum DualVertex {
    Cube(usize),
    Stub(usize),
}

/// Plaquette holonomies of a field as a chain on the dual complex.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionChain {
    grid: GridSpec,
    identity: usize,
    coefficients: Vec<usize>,
    support: Vec<usize>,
    cubes: Vec<usize>,
}

impl ObstructionChain {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Coefficient of plaquette `id`; the identity off the domain.
    pub fn coefficient(&self, id: usize) -> usize {
        self.coefficients[id]
    }

    /// Plaquettes with a non-identity coefficient, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Counting-norm mass: `h` per support plaquette.
    pub fn length(&self) -> f64 {
        self.support.len() as f64 * self.grid.h()
    }

    /// Active cubes whose outward face coefficients do not compose to the identity.
    pub fn cycle_violations(&self, target: &QuotientTarget) -> Vec<usize> {
        if self.grid.dims() != 3 {
            return Vec::new();
        }
        let group = target.group();
        self.cubes
            .iter()
            .copied()
            .filter(|&base| {
                let mut acc = group.identity();
                for plane in 0..3 {
                    let k = GridSpec::normal_axis(plane);
                    let bottom = self.coefficients[self.grid.plaquette_id(base, plane)];
                    let top = self.coefficients[self.grid.plaquette_id(base + self.grid.stride(k), plane)];
                    acc = group.compose(top, group.compose(group.inverse(bottom), acc));
                }
                acc != self.identity
            })
            .collect()
    }

    fn endpoints(&self, id: usize) -> (DualVertex, DualVertex) {
        let (base, plane) = self.grid.plaquette_parts(id);
        let k = GridSpec::normal_axis(plane);
        let active = |b: usize| self.cubes.binary_search(&b).is_ok();
        let lower = match self.grid.neighbor(base, k, false) {
            Some(b) if active(b) => DualVertex::Cube(b),
            _ => DualVertex::Stub(id),
        };
        let upper = if active(base) { DualVertex::Cube(base) } else { DualVertex::Stub(id) };
        (lower, upper)
    }

    fn vertex_position(&self, v: DualVertex) -> [f64; 3] {
        match v {
            DualVertex::Cube(b) => self.grid.cell_center(b),
            DualVertex::Stub(id) => {
                let (base, plane) = self.grid.plaquette_parts(id);
                self.grid.plaquette_center(base, plane)
            }
        }
    }

    /// Support plaquettes as dual segments, oriented along the normal axis.
    /// In two dimensions each segment degenerates to the plaquette centre.
    pub fn segments(&self) -> Vec<DualSegment> {
        self.support
            .iter()
            .map(|&id| {
                let (from, to) = if self.grid.dims() == 3 {
                    let (a, b) = self.endpoints(id);
                    (self.vertex_position(a), self.vertex_position(b))
                } else {
                    let (base, plane) = self.grid.plaquette_parts(id);
                    let c = self.grid.plaquette_center(base, plane);
                    (c, c)
                };
                DualSegment { plaquette: id, from, to, element: self.coefficients[id] }
            })
            .collect()
    }

    /// Greedy decomposition of the support into dual polylines. In two
    /// dimensions every support plaquette is a single-vertex polyline.
    pub fn polylines(&self) -> Vec<Polyline> {
        if self.grid.dims() != 3 {
            return self
                .segments()
                .into_iter()
                .map(|s| Polyline { vertices: vec![s.from], plaquettes: vec![s.plaquette], closed: false, boundary_ends: 0 })
                .collect();
        }
        let mut adj: BTreeMap<DualVertex, Vec<usize>> = BTreeMap::new();
        let mut ends = BTreeMap::new();
        for &id in &self.support {
            let (a, b) = self.endpoints(id);
            adj.entry(a).or_default().push(id);
            adj.entry(b).or_default().push(id);
            ends.insert(id, (a, b));
        }
        let mut used = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        let walk = |start: DualVertex, used: &mut std::collections::BTreeSet<usize>| -> Polyline {
            let mut v = start;
            let mut vertices = vec![self.vertex_position(v)];
            let mut plaquettes = Vec::new();
            while let Some(&id) = adj[&v].iter().find(|id| !used.contains(*id)) {
                used.insert(id);
                plaquettes.push(id);
                let (a, b) = ends[&id];
                v = if a == v { b } else { a };
                vertices.push(self.vertex_position(v));
            }
            let closed = v == start && !plaquettes.is_empty();
            let boundary_ends = [start, v].iter().filter(|x| matches!(x, DualVertex::Stub(_))).count();
            Polyline { vertices, plaquettes, closed, boundary_ends }
        };
        let odd: Vec<DualVertex> = adj.iter().filter(|(_, e)| e.len() % 2 == 1).map(|(v, _)| *v).collect();
        for v in odd {
            while adj[&v].iter().any(|id| !used.contains(id)) {
                out.push(walk(v, &mut used));
            }
        }
        for &id in &self.support {
            if !used.contains(&id) {
                out.push(walk(ends[&id].0, &mut used));
            }
        }
        out
    }
}

/// Resolved transports for every edge inside the domain, or the list of
/// unresolved ones.
fn check_edges(grid: &GridSpec, target: &QuotientTarget, values: &[f64], inside: &[bool]) -> Result<()> {
    let m = target.ambient_dim();
    let n = grid.node_count();
    let bad: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            (0..grid.dims())
                .filter_map(move |k| {
                    let b = grid.neighbor(a, k, true)?;
                    (inside[a] && inside[b]).then_some((a, b))
                })
                .filter(|&(a, b)| {
                    classify(target, &values[a * m..(a + 1) * m], &values[b * m..(b + 1) * m]) == Transport::Unresolved
                })
        })
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::InsufficientResolution { edges: bad })
    }
}

pub(crate) fn chain_from_values(grid: &GridSpec, target: &QuotientTarget, values: &[f64]) -> Result<ObstructionChain> {
    let domain = Domain::new(grid);
    check_edges(grid, target, values, &domain.inside)?;
    Ok(build_chain(grid, target, values, domain).0)
}

/// The chain over all resolved plaquettes, plus the ids of unresolved ones
/// (which get the identity coefficient).
pub(crate) fn chain_with_unresolved(grid: &GridSpec, target: &QuotientTarget, values: &[f64]) -> (ObstructionChain, Vec<usize>) {
    build_chain(grid, target, values, Domain::new(grid))
}

fn build_chain(grid: &GridSpec, target: &QuotientTarget, values: &[f64], domain: Domain) -> (ObstructionChain, Vec<usize>) {
    let m = target.ambient_dim();
    let group = target.group();
    let identity = group.identity();
    let planes = grid.plane_count();
    let coefficients: Vec<Option<usize>> = (0..grid.node_count() * planes)
        .into_par_iter()
        .map(|id| {
            let (base, plane) = grid.plaquette_parts(id);
            if !grid.plaquette_exists(base, plane) {
                return Some(identity);
            }
            let nodes = grid.plaquette_nodes(base, plane);
            if !nodes.iter().all(|&i| domain.inside[i]) {
                return Some(identity);
            }
            match holonomy_of(target, values, m, nodes) {
                Holonomy::Element(g) if GridSpec::plane_orientation(plane) < 0 => Some(group.inverse(g)),
                Holonomy::Element(g) => Some(g),
                Holonomy::Unresolved { .. } => None,
            }
        })
        .collect();
    let unresolved = (0..coefficients.len()).filter(|&i| coefficients[i].is_none()).collect();
    let coefficients: Vec<usize> = coefficients.into_iter().map(|c| c.unwrap_or(identity)).collect();
    let support = (0..coefficients.len()).filter(|&i| coefficients[i] != identity).collect();
    (ObstructionChain { grid: grid.clone(), identity, coefficients, support, cubes: domain.cells }, unresolved)
}

/// The obstruction chain of `field` over its domain.
pub fn obstruction_chain(field: &DirectorField) -> Result<ObstructionChain> {
    chain_from_values(field.grid(), field.target(), field.values())
}

/// A covering-sphere field on a node set.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedRegion {
    grid: GridSpec,
    m: usize,
    mask: Vec<bool>,
    values: Vec<f64>,
}

impl LiftedRegion {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn value(&self, i: usize) -> Option<&[f64]> {
        self.mask[i].then(|| &self.values[i * self.m..(i + 1) * self.m])
    }

    /// Dense values, zero off the region.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// The lift as a sphere-valued field; requires the region to cover every node.
    pub fn to_sphere_field(&self, boundary: Vec<bool>) -> Result<DirectorField> {
        if !self.mask.iter().all(|&b| b) {
            return Err(Error::Invalid("lift does not cover the whole grid".into()));
        }
        DirectorField::with_boundary(self.grid.clone(), QuotientTarget::sphere(self.m - 1), self.values.clone(), boundary)
    }
}

fn plaquette_label(grid: &GridSpec, base: usize, plane: usize) -> String {
    format!("plaquette {} (node {:?}, plane {:?})", grid.plaquette_id(base, plane), grid.coords(base), crate::grid::PLANES[plane])
}

/// Lifts `field` on `region` by propagation along a breadth-first tree from
/// `seed`, whose lift `seed_lift` must lie in the seed node's orbit.
pub fn lift_region(field: &DirectorField, region: &[usize], seed: usize, seed_lift: &[f64]) -> Result<LiftedRegion> {
    let grid = field.grid();
    let target = field.target();
    let group = target.group();
    let m = field.component_count();
    let n = grid.node_count();
    let mut mask = vec![false; n];
    for &i in region {
        if i >= n {
            return Err(Error::Invalid(format!("region node {i} is off the grid")));
        }
        mask[i] = true;
    }
    if !mask.get(seed).copied().unwrap_or(false) {
        return Err(Error::Invalid(format!("seed node {seed} is not in the region")));
    }
    if seed_lift.len() != m {
        return Err(Error::Invalid(format!("seed lift has {} components, expected {m}", seed_lift.len())));
    }
    let (d2, g_seed, _) = target.nearest_lift(field.value(seed), seed_lift);
    if d2 > 1e-20 {
        return Err(Error::Invalid("seed lift is not in the orbit of the seed value".into()));
    }
    check_edges(grid, target, field.values(), &mask)?;
    let planes = grid.plane_count();
    for id in 0..n * planes {
        let (base, plane) = grid.plaquette_parts(id);
        if !grid.plaquette_exists(base, plane) {
            continue;
        }
        let nodes = grid.plaquette_nodes(base, plane);
        if !nodes.iter().all(|&i| mask[i]) {
            continue;
        }
        if holonomy_of(target, field.values(), m, nodes) != Holonomy::Element(group.identity()) {
            return Err(Error::NonOrientable(plaquette_label(grid, base, plane)));
        }
    }

    let mut elem = vec![usize::MAX; n];
    let mut values = vec![0.0; n * m];
    elem[seed] = g_seed;
    let mut queue = VecDeque::from([seed]);
    let neighbors = |i: usize| {
        (0..grid.dims()).flat_map(move |k| [grid.neighbor(i, k, false), grid.neighbor(i, k, true)]).flatten()
    };
    while let Some(a) = queue.pop_front() {
        group.element(elem[a]).apply(field.value(a), &mut values[a * m..(a + 1) * m]);
        for b in neighbors(a) {
            if !mask[b] || elem[b] != usize::MAX {
                continue;
            }
            let (_, g, _) = target.nearest_lift(field.value(b), &values[a * m..(a + 1) * m]);
            elem[b] = g;
            queue.push_back(b);
        }
    }
    if let Some(i) = (0..n).find(|&i| mask[i] && elem[i] == usize::MAX) {
        return Err(Error::Invalid(format!("region is not edge-connected (node {i} unreachable from {seed})")));
    }
    // A region with holes can carry holonomy that no single plaquette sees.
    for a in 0..n {
        if !mask[a] {
            continue;
        }
        for k in 0..grid.dims() {
            let Some(b) = grid.neighbor(a, k, true) else { continue };
            if !mask[b] {
                continue;
            }
            let (_, g, _) = target.nearest_lift(field.value(b), &values[a * m..(a + 1) * m]);
            if g != elem[b] {
                return Err(Error::NonOrientable(format!("edge ({a}, {b}) closes a loop with nontrivial holonomy")));
            }
        }
    }
    Ok(LiftedRegion { grid: grid.clone(), m, mask, values })
}
