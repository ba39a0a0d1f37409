//! Unconstrained Q-tensor relaxation: `Σ h^d [φ(|∇Q|/√2) + ε^-2 f(Q)]` with
//! `f(Q)` the squared Frobenius distance from `Q` to the embedded projective
//! plane.
//!
//! The `1/√2` undoes `|∇Q|² = 2|∇n|²` on the manifold, so on-manifold fields
//! get the director energy back. Per edge, `|Q_a - Q_b|²/2 = 1 - (n_a·n_b)²`
//! never exceeds the orbit distance `2 - 2|n_a·n_b|`, which makes the
//! constrained minimiser an admissible competitor with no larger energy.

use super::descent::{descend, Objective};
use super::energy::{det_sum, EnergyModel, Metric};
use super::{MinimizeOptions, ResolvedOptions, Status, TraceRow};
use crate::elastic::ElasticModulus;
use crate::error::{Error, Result};
use crate::fields::DirectorField;
use crate::grid::GridSpec;
use crate::manifolds::{project_to_target, QTensor};
use nalgebra::Matrix3;
use rayon::prelude::*;

/// The confining potential. Only the squared distance to the manifold is built in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Potential {
    #[default]
    ManifoldDistance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedOptions {
    pub epsilon: f64,
    pub potential: Potential,
    pub base: MinimizeOptions,
}

impl PenalizedOptions {
    pub fn new(epsilon: f64) -> Self {
        PenalizedOptions { epsilon, potential: Potential::ManifoldDistance, base: MinimizeOptions::default() }
    }
}

/// A grid of symmetric traceless matrices with a Dirichlet mask.
#[derive(Debug, Clone, PartialEq)]
pub struct QField {
    pub grid: GridSpec,
    pub boundary: Vec<bool>,
    pub values: Vec<Matrix3<f64>>,
}

impl QField {
    /// `n nᵀ - I/3` at every node of a projective-plane field.
    pub fn from_director_field(field: &DirectorField) -> Result<Self> {
        if !field.target().is_rp2() {
            return Err(Error::Invalid("Q-tensor relaxation is defined for the RP2 target only".into()));
        }
        let values = field.q_tensors()?.into_iter().map(|q| *q.matrix()).collect();
        Ok(QField { grid: field.grid().clone(), boundary: field.boundary().to_vec(), values })
    }

    /// Nearest-point projection of every node onto the projective plane.
    pub fn project(&self) -> Result<DirectorField> {
        let mut dirs = Vec::with_capacity(3 * self.values.len());
        for q in &self.values {
            let p = project_to_target(q)?;
            dirs.extend_from_slice(p.director.as_slice());
        }
        DirectorField::with_boundary(self.grid.clone(), crate::manifolds::QuotientTarget::rp2(), dirs, self.boundary.clone())
    }

    fn flat(&self) -> Vec<f64> {
        self.values.iter().flat_map(|q| q.as_slice().to_vec()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PenalizedResult {
    pub q_field: QField,
    pub projected: DirectorField,
    /// Total penalised energy.
    pub energy: f64,
    pub elastic_energy: f64,
    /// `ε^-2 Σ h^d f(Q)`.
    pub penalty_energy: f64,
    pub trace: Vec<TraceRow>,
    pub status: Status,
    pub iterations: usize,
    pub options: ResolvedOptions,
}

struct Penalized {
    model: EnergyModel,
    inside: Vec<bool>,
    weight: f64,
}

impl Penalized {
    fn penalty(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let parts: Vec<(f64, [f64; 9])> = x
            .par_chunks(9)
            .zip(self.inside.par_iter())
            .map(|(q, &inside)| {
                if !inside {
                    return (0.0, [0.0; 9]);
                }
                let m = Matrix3::from_column_slice(q);
                let sym = (m + m.transpose()) * 0.5;
                let p = project_to_target(&sym).expect("symmetric");
                let diff = sym - p.q.matrix();
                let mut d = [0.0; 9];
                d.copy_from_slice(diff.as_slice());
                (diff.norm_squared(), d)
            })
            .collect();
        if let Some(g) = grad {
            for (i, (_, d)) in parts.iter().enumerate() {
                if self.model.free[i] {
                    for k in 0..9 {
                        g[i * 9 + k] += 2.0 * self.weight * d[k];
                    }
                }
            }
        }
        let vals: Vec<f64> = parts.iter().map(|p| p.0).collect();
        self.weight * det_sum(&vals)
    }
}

impl Objective for Penalized {
    fn value(&mut self, x: &[f64]) -> f64 {
        self.model.energy(x) + self.penalty(x, None)
    }

    fn value_and_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        let e = self.model.energy_and_gradient(x, g);
        e + self.penalty(x, Some(g))
    }

    fn step(&self, x: &[f64], g: &[f64], alpha: f64, out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] = x[i] - alpha * g[i];
        }
    }

    fn block(&self) -> usize {
        9
    }
}

/// Gradient descent on the penalised functional, starting from `initial`.
pub fn minimize_penalized(initial: &QField, modulus: &ElasticModulus, opts: &PenalizedOptions) -> Result<PenalizedResult> {
    modulus.ensure_admissible()?;
    opts.base.validate()?;
    if !(opts.epsilon > 0.0) {
        return Err(Error::Config(vec![format!("penalized.epsilon = {} must be positive", opts.epsilon)]));
    }
    for q in &initial.values {
        QTensor::from_matrix(*q)?;
    }
    if !initial.boundary.iter().any(|&b| b) {
        return Err(Error::Invalid("minimisation needs Dirichlet data (empty boundary mask)".into()));
    }
    let grid = &initial.grid;
    let n = grid.max_nodes_per_axis();
    let delta = opts.base.delta_grad.unwrap_or(1e-8 / grid.h());
    let settings = super::descent::DescentSettings {
        max_iters: opts.base.max_iters.unwrap_or(50 * n * n),
        grad_tol: opts.base.grad_tol.unwrap_or(1e-6 * grid.cell_volume()),
        armijo_c: opts.base.armijo_c,
        backtrack: opts.base.backtrack,
        initial_step: opts.base.initial_step,
        max_displacement: 0.5,
    };
    let model = EnergyModel::new(grid, Metric::Euclidean(0.5), 9, modulus.raw(), delta, &initial.boundary);
    let inside = crate::grid::Domain::new(grid).inside;
    let weight = grid.cell_volume() / (opts.epsilon * opts.epsilon);
    let mut obj = Penalized { model, inside, weight };
    let out = descend(&mut obj, initial.flat(), &settings);
    let values: Vec<Matrix3<f64>> = out
        .x
        .chunks(9)
        .map(|c| {
            let m = Matrix3::from_column_slice(c);
            (m + m.transpose()) * 0.5
        })
        .collect();
    let q_field = QField { grid: grid.clone(), boundary: initial.boundary.clone(), values };
    let flat = q_field.flat();
    let elastic_energy = obj.model.energy(&flat);
    let penalty_energy = obj.penalty(&flat, None);
    let projected = q_field.project()?;
    Ok(PenalizedResult {
        q_field,
        projected,
        energy: elastic_energy + penalty_energy,
        elastic_energy,
        penalty_energy,
        trace: out.trace,
        status: out.status,
        iterations: out.iterations,
        options: ResolvedOptions {
            max_iters: settings.max_iters,
            grad_tol: settings.grad_tol,
            armijo_c: settings.armijo_c,
            backtrack: settings.backtrack,
            initial_step: out.initial_step,
            delta_grad: delta,
            seed: opts.base.seed,
            perturbation: 0.0,
        },
    })
}
