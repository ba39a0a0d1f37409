//! Armijo backtracking descent with Barzilai–Borwein trial steps.

use super::{Status, TraceRow};

pub(crate) trait Objective {
    fn value(&mut self, x: &[f64]) -> f64;
    /// Value and the descent-relevant gradient (tangent, zero on fixed nodes).
    fn value_and_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64;
    /// `out = x` moved by `-alpha * g`.
    fn step(&self, x: &[f64], g: &[f64], alpha: f64, out: &mut [f64]);
    /// Components per node, used to cap per-node displacements.
    fn block(&self) -> usize;
}

pub(crate) struct DescentSettings {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub initial_step: Option<f64>,
    pub max_displacement: f64,
}

pub(crate) struct DescentOutcome {
    pub x: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub status: Status,
    pub iterations: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub initial_step: f64,
}

const MAX_BACKTRACKS: usize = 60;

fn max_block_norm(g: &[f64], block: usize) -> f64 {
    g.chunks(block).map(|c| c.iter().map(|x| x * x).sum::<f64>()).fold(0.0, f64::max).sqrt()
}

pub(crate) fn descend<O: Objective>(obj: &mut O, x0: Vec<f64>, s: &DescentSettings) -> DescentOutcome {
    let block = obj.block();
    let mut x = x0;
    let mut g = vec![0.0; x.len()];
    let mut trial = vec![0.0; x.len()];
    let mut g_new = vec![0.0; x.len()];
    let mut energy = obj.value_and_grad(&x, &mut g);
    let mut gnorm = super::energy::det_sum(&g.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
    let gmax = max_block_norm(&g, block);
    let initial_step = s.initial_step.unwrap_or(if gmax > 0.0 { 0.1 / gmax } else { 1.0 });
    let mut alpha = initial_step;
    let mut trace = vec![TraceRow { iter: 0, energy, grad_norm: gnorm, step: 0.0 }];
    let mut status = Status::Unconverged;
    let mut iterations = 0;
    for it in 1..=s.max_iters {
        iterations = it;
        if gnorm <= s.grad_tol {
            status = Status::Converged;
            break;
        }
        let gmax = max_block_norm(&g, block);
        if gmax > 0.0 {
            alpha = alpha.min(s.max_displacement / gmax);
        }
        let slope = gnorm * gnorm;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            obj.step(&x, &g, alpha, &mut trial);
            let e = obj.value(&trial);
            // Strict decrease: at the floating-point floor the sufficient
            // decrease term rounds away and equal energies would pass.
            if e <= energy - s.armijo_c * alpha * slope && e < energy {
                accepted = Some(e);
                break;
            }
            alpha *= s.backtrack;
        }
        let Some(_) = accepted else {
            status = Status::Stalled;
            break;
        };
        let e_new = obj.value_and_grad(&trial, &mut g_new);
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..x.len() {
            let sx = trial[i] - x[i];
            ss += sx * sx;
            sy += sx * (g_new[i] - g[i]);
        }
        let used = alpha;
        alpha = if sy > 0.0 { ss / sy } else { 2.0 * alpha };
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        energy = e_new;
        gnorm = super::energy::det_sum(&g.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
        trace.push(TraceRow { iter: it, energy, grad_norm: gnorm, step: used });
        if it == s.max_iters && gnorm <= s.grad_tol {
            status = Status::Converged;
        }
    }
    DescentOutcome { x, trace, status, iterations, energy, grad_norm: gnorm, initial_step }
}
