//! Cell-based discrete energy and its exact gradient.
//!
//! In every active cell, `|∇u|² = Σ_k mean_{edges ∥ k} d_e² / h²`, where
//! `d_e` is the distance between the orbits at the two ends of edge `e`, and
//! the energy is `Σ_cells h^d φ(|∇u|)`. Averaging squared edge distances
//! (rather than squaring averaged differences) keeps every edge in the
//! stencil, so there are no zero-energy checkerboard modes.

use crate::elastic::{ModulusFunction, PowerRegularized};
use crate::grid::{Domain, GridSpec};
use crate::manifolds::QuotientTarget;
use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Sum with a fixed reduction tree, independent of the thread count.
pub(crate) fn det_sum(v: &[f64]) -> f64 {
    let partial: Vec<f64> = v.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    partial.iter().sum()
}

/// How edge lengths are measured.
#[derive(Debug, Clone)]
pub(crate) enum Metric {
    /// Chordal distance between orbits.
    Orbit(QuotientTarget),
    /// Scaled squared Euclidean distance `scale * |a - b|²`.
    Euclidean(f64),
}

pub(crate) struct EnergyModel {
    pub grid: GridSpec,
    metric: Metric,
    phi: PowerRegularized,
    delta: f64,
    m: usize,
    pub cells: Vec<usize>,
    pub free: Vec<bool>,
    half: usize,
    edges: Vec<(u32, u32, u8)>,
    cell_slots: Vec<u32>,
    d2: Vec<f64>,
    g: Vec<u8>,
    t: Vec<f64>,
    w: Vec<f64>,
}

impl EnergyModel {
    pub fn new(grid: &GridSpec, metric: Metric, m: usize, phi: PowerRegularized, delta: f64, boundary: &[bool]) -> Self {
        let domain = Domain::new(grid);
        let n = grid.node_count();
        let dims = grid.dims();
        let half = 1usize << (dims - 1);
        let mut slot_of = vec![u32::MAX; dims * n];
        let mut edges = Vec::new();
        let mut cell_slots = Vec::with_capacity(domain.cells.len() * dims * half);
        for &base in &domain.cells {
            for k in 0..dims {
                for c in (0..grid.corner_count()).filter(|c| c >> k & 1 == 0) {
                    let a = base + grid.corner_offset(c);
                    let key = k * n + a;
                    if slot_of[key] == u32::MAX {
                        slot_of[key] = edges.len() as u32;
                        edges.push((a as u32, (a + grid.stride(k)) as u32, k as u8));
                    }
                    cell_slots.push(slot_of[key]);
                }
            }
        }
        let free = (0..n).map(|i| domain.inside[i] && !boundary[i]).collect();
        let ne = edges.len();
        let nc = domain.cells.len();
        EnergyModel {
            grid: grid.clone(),
            metric,
            phi,
            delta,
            m,
            cells: domain.cells,
            free,
            half,
            edges,
            cell_slots,
            d2: vec![0.0; ne],
            g: vec![0; ne],
            t: vec![0.0; nc],
            w: vec![0.0; ne],
        }
    }

    fn edge_pass(&mut self, x: &[f64]) {
        let m = self.m;
        let metric = &self.metric;
        let out: Vec<(f64, u8)> = self
            .edges
            .par_iter()
            .map(|&(a, b, _)| {
                let (a, b) = (a as usize, b as usize);
                let ua = &x[a * m..(a + 1) * m];
                let ub = &x[b * m..(b + 1) * m];
                match metric {
                    Metric::Orbit(t) => {
                        let (d2, g, _) = t.nearest_lift(ua, ub);
                        (d2, g as u8)
                    }
                    Metric::Euclidean(scale) => (scale * crate::manifolds::dist2(ua, ub), 0),
                }
            })
            .collect();
        for (i, (d, g)) in out.into_iter().enumerate() {
            self.d2[i] = d;
            self.g[i] = g;
        }
        let per = self.grid.dims() * self.half;
        let inv = 1.0 / (self.half as f64 * self.grid.h() * self.grid.h());
        let d2 = &self.d2;
        let slots = &self.cell_slots;
        self.t.par_iter_mut().enumerate().for_each(|(c, t)| {
            let s: f64 = slots[c * per..(c + 1) * per].iter().map(|&e| d2[e as usize]).sum();
            *t = (s * inv).sqrt();
        });
    }

    /// Per-cell `|∇u|` of the last evaluation.
    pub fn cell_gradient(&self) -> &[f64] {
        &self.t
    }

    pub fn energy(&mut self, x: &[f64]) -> f64 {
        self.edge_pass(x);
        let phi = self.phi;
        let e: Vec<f64> = self.t.par_iter().map(|&t| phi.phi(t)).collect();
        self.grid.cell_volume() * det_sum(&e)
    }

    /// Energy and its gradient with respect to the node vectors (ambient,
    /// not yet projected; boundary and exterior nodes are zeroed).
    pub fn energy_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let energy = self.energy(x);
        let h = self.grid.h();
        let dims = self.grid.dims();
        // dE/d(d_e²) summed over the cells sharing e.
        let scale = h.powi(dims as i32 - 2) / (2.0 * self.half as f64);
        self.w.iter_mut().for_each(|w| *w = 0.0);
        let per = dims * self.half;
        for (c, &t) in self.t.iter().enumerate() {
            let wc = scale * self.phi.weight(t.max(self.delta));
            for &e in &self.cell_slots[c * per..(c + 1) * per] {
                self.w[e as usize] += wc;
            }
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let m = self.m;
        let mut buf = [0.0f64; 16];
        for (e, &(a, b, _)) in self.edges.iter().enumerate() {
            let w2 = 2.0 * self.w[e];
            let (a, b) = (a as usize, b as usize);
            let (elem, w2) = match &self.metric {
                Metric::Orbit(t) => (Some(t.group().element(self.g[e] as usize)), w2),
                Metric::Euclidean(scale) => (None, w2 * scale),
            };
            match elem.filter(|g| g.as_scalar() != Some(1.0)) {
                None => {
                    for i in 0..m {
                        let d = x[a * m + i] - x[b * m + i];
                        grad[a * m + i] += w2 * d;
                        grad[b * m + i] -= w2 * d;
                    }
                }
                Some(g) => {
                    // d_e² = |g u_a - u_b|²
                    let (ga, gtb) = buf.split_at_mut(8);
                    g.apply(&x[a * m..(a + 1) * m], &mut ga[..m]);
                    g.apply_inverse(&x[b * m..(b + 1) * m], &mut gtb[..m]);
                    for i in 0..m {
                        grad[a * m + i] += w2 * (x[a * m + i] - gtb[i]);
                        grad[b * m + i] += w2 * (x[b * m + i] - ga[i]);
                    }
                }
            }
        }
        for (i, free) in self.free.iter().enumerate() {
            if !free {
                grad[i * m..(i + 1) * m].iter_mut().for_each(|g| *g = 0.0);
            }
        }
        energy
    }
}

/// Removes the normal component at every node.
pub(crate) fn project_tangent(x: &[f64], grad: &mut [f64], m: usize) {
    grad.par_chunks_mut(m).zip(x.par_chunks(m)).for_each(|(g, u)| {
        let c: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
        for (gi, ui) in g.iter_mut().zip(u) {
            *gi -= c * ui;
        }
    });
}
