//! Discrete elastic energy, its gradient, projected-gradient minimisation
//! under the pointwise target constraint, a penalised Q-tensor relaxation,
//! and Euler–Lagrange residual diagnostics.

mod descent;
pub(crate) mod energy;
mod penalized;
mod stationarity;

pub use penalized::{minimize_penalized, PenalizedOptions, PenalizedResult, Potential, QField};
pub use stationarity::{stationarity_residual, StationarityReport};
#[allow(unused_imports)]
pub(crate) use stationarity::aligned_cell;

use crate::elastic::ElasticModulus;
use crate::error::{Error, Result};
use crate::fields::DirectorField;
use descent::{descend, DescentSettings, Objective};
use energy::{project_tangent, EnergyModel, Metric};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Solver options; `None` entries take grid-aware defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    /// Default `50 * (nodes per axis)²`.
    pub max_iters: Option<usize>,
    /// Threshold on the Euclidean norm of the projected gradient; default `1e-6 h^d`.
    pub grad_tol: Option<f64>,
    pub armijo_c: f64,
    pub backtrack: f64,
    /// Default: the step that moves the fastest node by 0.1.
    pub initial_step: Option<f64>,
    /// Floor on `|∇u|` inside `φ'(t)/t`; default `1e-8 / h`.
    pub delta_grad: Option<f64>,
    pub seed: u64,
    /// Amplitude of a seeded random tangent kick applied to free nodes
    /// before descent (0 = none). Lets the solver leave symmetric critical points.
    pub perturbation: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iters: None,
            grad_tol: None,
            armijo_c: 1e-4,
            backtrack: 0.5,
            initial_step: None,
            delta_grad: None,
            seed: 0,
            perturbation: 0.0,
        }
    }
}

/// Options after defaults are filled in; echoed in run metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub delta_grad: f64,
    pub seed: u64,
    pub perturbation: f64,
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            errs.push(format!("opts.armijo_c = {} must lie in (0, 1)", self.armijo_c));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            errs.push(format!("opts.backtrack = {} must lie in (0, 1)", self.backtrack));
        }
        if self.max_iters == Some(0) {
            errs.push("opts.max_iters must be at least 1".into());
        }
        if let Some(d) = self.delta_grad {
            if !(d >= 0.0) {
                errs.push(format!("opts.delta_grad = {d} must be nonnegative"));
            }
        }
        if let Some(t) = self.grad_tol {
            if !(t >= 0.0) {
                errs.push(format!("opts.grad_tol = {t} must be nonnegative"));
            }
        }
        if let Some(s) = self.initial_step {
            if !(s > 0.0) {
                errs.push(format!("opts.initial_step = {s} must be positive"));
            }
        }
        if !(self.perturbation >= 0.0) {
            errs.push(format!("opts.perturb = {} must be nonnegative", self.perturbation));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    fn settings(&self, field: &DirectorField) -> (DescentSettings, f64) {
        let g = field.grid();
        let n = g.max_nodes_per_axis();
        let settings = DescentSettings {
            max_iters: self.max_iters.unwrap_or(50 * n * n),
            grad_tol: self.grad_tol.unwrap_or(1e-6 * g.cell_volume()),
            armijo_c: self.armijo_c,
            backtrack: self.backtrack,
            initial_step: self.initial_step,
            max_displacement: 0.5,
        };
        (settings, self.delta_grad.unwrap_or(1e-8 / g.h()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Converged,
    Unconverged,
    Stalled,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Unconverged => "unconverged",
            Status::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub field: DirectorField,
    pub trace: Vec<TraceRow>,
    pub status: Status,
    pub iterations: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub options: ResolvedOptions,
}

fn model_for(field: &DirectorField, modulus: &ElasticModulus, delta: f64) -> EnergyModel {
    EnergyModel::new(
        field.grid(),
        Metric::Orbit(field.target().clone()),
        field.component_count(),
        modulus.raw(),
        delta,
        field.boundary(),
    )
}

/// `Σ_cells h^d φ(|∇u|_cell)`.
pub fn discrete_energy(field: &DirectorField, modulus: &ElasticModulus) -> Result<f64> {
    modulus.ensure_admissible()?;
    Ok(model_for(field, modulus, 0.0).energy(field.values()))
}

/// Gradient of [`discrete_energy`] with respect to the node representatives,
/// projected onto the tangent spaces and zero on fixed nodes.
pub fn energy_gradient(field: &DirectorField, modulus: &ElasticModulus, delta_grad: Option<f64>) -> Result<Vec<f64>> {
    modulus.ensure_admissible()?;
    let delta = delta_grad.unwrap_or(1e-8 / field.grid().h());
    let mut model = model_for(field, modulus, delta);
    let mut g = vec![0.0; field.values().len()];
    model.energy_and_gradient(field.values(), &mut g);
    project_tangent(field.values(), &mut g, field.component_count());
    Ok(g)
}

/// `|∇u|` on every active cell, keyed by cell base node.
pub fn cell_gradient_norms(field: &DirectorField) -> Vec<(usize, f64)> {
    let raw = crate::elastic::PowerRegularized { p: 1.5, b: 0.0 };
    let mut model =
        EnergyModel::new(field.grid(), Metric::Orbit(field.target().clone()), field.component_count(), raw, 0.0, field.boundary());
    model.energy(field.values());
    model.cells.iter().copied().zip(model.cell_gradient().iter().copied()).collect()
}

struct Constrained {
    model: EnergyModel,
    m: usize,
}

impl Objective for Constrained {
    fn value(&mut self, x: &[f64]) -> f64 {
        self.model.energy(x)
    }

    fn value_and_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        let e = self.model.energy_and_gradient(x, g);
        project_tangent(x, g, self.m);
        e
    }

    fn step(&self, x: &[f64], g: &[f64], alpha: f64, out: &mut [f64]) {
        let m = self.m;
        for (i, free) in self.model.free.iter().enumerate() {
            let (u, d, o) = (&x[i * m..(i + 1) * m], &g[i * m..(i + 1) * m], &mut out[i * m..(i + 1) * m]);
            if !free {
                o.copy_from_slice(u);
                continue;
            }
            // Tangent steps never reach the cut point: |u - a d| >= 1.
            let mut r = 0.0;
            for k in 0..m {
                o[k] = u[k] - alpha * d[k];
                r += o[k] * o[k];
            }
            let r = r.sqrt();
            o.iter_mut().for_each(|v| *v /= r);
        }
    }

    fn block(&self) -> usize {
        self.m
    }
}

/// Projected gradient descent on the discrete energy with Dirichlet data
/// taken from the field's boundary mask.
pub fn minimize(field: &DirectorField, modulus: &ElasticModulus, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    modulus.ensure_admissible()?;
    opts.validate()?;
    if !field.boundary().iter().any(|&b| b) {
        return Err(Error::Invalid("minimisation needs Dirichlet data (empty boundary mask)".into()));
    }
    let (settings, delta) = opts.settings(field);
    let m = field.component_count();
    let model = model_for(field, modulus, delta);
    // The working copy is not re-canonicalised inside the loop, so the
    // step-difference pairs used for the step size stay consistent.
    let mut x = field.values().to_vec();
    if opts.perturbation > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for (i, free) in model.free.iter().enumerate() {
            let kick: Vec<f64> = (0..m).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); opts.perturbation * z }).collect();
            if !free {
                continue;
            }
            let u = &mut x[i * m..(i + 1) * m];
            let c: f64 = kick.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
            for k in 0..m {
                u[k] += kick[k] - c * u[k];
            }
            let r = crate::manifolds::norm(u);
            u.iter_mut().for_each(|v| *v /= r);
        }
    }
    let mut obj = Constrained { model, m };
    let out = descend(&mut obj, x, &settings);
    let mut result_field = field.clone();
    result_field.store_free_values(&out.x);
    Ok(MinimizeResult {
        field: result_field,
        trace: out.trace,
        status: out.status,
        iterations: out.iterations,
        energy: out.energy,
        grad_norm: out.grad_norm,
        options: ResolvedOptions {
            max_iters: settings.max_iters,
            grad_tol: settings.grad_tol,
            armijo_c: settings.armijo_c,
            backtrack: settings.backtrack,
            initial_step: out.initial_step,
            delta_grad: delta,
            seed: opts.seed,
            perturbation: opts.perturbation,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{generate, FieldKind, GeneratorParams};
    use crate::grid::{DomainShape, GridSpec};
    use crate::manifolds::{retract, QuotientTarget};
    use rand::Rng;

    fn modulus() -> ElasticModulus {
        ElasticModulus::power_regularized(1.5, 1.0).unwrap()
    }

    #[test]
    fn constant_field_has_zero_energy_and_gradient() {
        let g = GridSpec::centered(3, 10, 1.0, DomainShape::Box).unwrap();
        let f = DirectorField::constant(g, QuotientTarget::rp2(), &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(discrete_energy(&f, &modulus()).unwrap(), 0.0);
        assert!(energy_gradient(&f, &modulus(), None).unwrap().iter().all(|&x| x == 0.0));
        let r = minimize(&f, &modulus(), &MinimizeOptions::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.field, f);
    }

    #[test]
    fn energy_is_invariant_under_global_deck_action() {
        let g = GridSpec::centered(3, 9, 1.0, DomainShape::Box).unwrap();
        let t = QuotientTarget::s3_mod_z4();
        let f = generate(&FieldKind::Random, &GeneratorParams { seed: 3, ..Default::default() }, &g, &t).unwrap().field;
        let e0 = discrete_energy(&f, &modulus()).unwrap();
        let gen = t.group().element(1);
        let moved: Vec<f64> = f.values().chunks(4).flat_map(|v| gen.apply_vec(v)).collect();
        // Bypass canonicalisation by measuring the raw representatives.
        let mut model = model_for(&f, &modulus(), 0.0);
        assert_eq!(model.energy(&moved), e0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = GridSpec::centered(3, 8, 1.0, DomainShape::Box).unwrap();
        let t = QuotientTarget::rp2();
        let f = generate(&FieldKind::SmoothRandom, &GeneratorParams { seed: 1, ..Default::default() }, &g, &t).unwrap().field;
        let m = modulus();
        let grad = energy_gradient(&f, &m, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = 1e-5;
        let mut model = model_for(&f, &m, 0.0);
        for _ in 0..5 {
            let mut plus = f.values().to_vec();
            let mut minus = f.values().to_vec();
            let mut dd = 0.0;
            for i in 0..g.node_count() {
                if f.boundary()[i] {
                    continue;
                }
                let u = f.value(i);
                let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let wt = crate::manifolds::tangent_project(u, &w);
                dd += (0..3).map(|k| grad[i * 3 + k] * wt[k]).sum::<f64>();
                let vp = retract(u, &wt.iter().map(|x| s * x).collect::<Vec<_>>()).unwrap();
                let vm = retract(u, &wt.iter().map(|x| -s * x).collect::<Vec<_>>()).unwrap();
                plus[i * 3..i * 3 + 3].copy_from_slice(&vp);
                minus[i * 3..i * 3 + 3].copy_from_slice(&vm);
            }
            let fd = (model.energy(&plus) - model.energy(&minus)) / (2.0 * s);
            assert!((fd - dd).abs() <= 1e-4 * dd.abs(), "fd {fd} vs {dd}");
        }
    }

    #[test]
    fn descent_is_monotone_and_keeps_boundary() {
        let g = GridSpec::centered(3, 10, 1.0, DomainShape::Ball).unwrap();
        let t = QuotientTarget::rp2();
        let f = generate(&FieldKind::Random, &GeneratorParams { seed: 8, ..Default::default() }, &g, &t).unwrap().field;
        let opts = MinimizeOptions { max_iters: Some(60), ..Default::default() };
        let r = minimize(&f, &modulus(), &opts).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy);
        }
        for i in 0..g.node_count() {
            if f.boundary()[i] {
                assert_eq!(r.field.value(i), f.value(i));
            }
        }
        assert!(r.energy < r.trace[0].energy);
    }

    #[test]
    fn bad_options_are_reported_together() {
        let o = MinimizeOptions { armijo_c: 1.5, backtrack: 0.0, ..Default::default() };
        match o.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
