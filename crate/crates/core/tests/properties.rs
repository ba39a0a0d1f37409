//! Structural invariants checked on randomised inputs.

use defectoscope::defects::{classify_defects, singular_set_estimate, ClassifyOptions};
use defectoscope::elastic::ElasticModulus;
use defectoscope::fields::{generate, DirectorField, FieldKind, GeneratorParams};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::lifting::{lift_region, obstruction_chain};
use defectoscope::manifolds::QuotientTarget;
use defectoscope::minimizer::{discrete_energy, minimize, minimize_penalized, MinimizeOptions, PenalizedOptions, QField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn modulus() -> ElasticModulus {
    ElasticModulus::power_regularized(1.5, 0.0).unwrap()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn target_strategy() -> impl Strategy<Value = QuotientTarget> {
    prop_oneof![
        Just(QuotientTarget::rp2()),
        Just(QuotientTarget::s3_mod_z4()),
        Just(QuotientTarget::sphere(2)),
        Just(QuotientTarget::sphere(3)),
    ]
}

/// Replaces every node by a random member of its orbit.
fn scramble(field: &DirectorField, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let group = field.target().group();
    field
        .values()
        .chunks(field.component_count())
        .flat_map(|v| group.element(rng.gen_range(0..group.order())).apply_vec(v))
        .collect()
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn generated_fields_are_unit_canonical_and_deterministic(seed in 0u64..10_000, target in target_strategy()) {
        let g = GridSpec::centered(3, 9, 1.0, DomainShape::Ball).unwrap();
        let params = GeneratorParams { seed, ..Default::default() };
        for kind in [FieldKind::Random, FieldKind::SmoothRandom] {
            let a = generate(&kind, &params, &g, &target).unwrap().field;
            let b = generate(&kind, &params, &g, &target).unwrap().field;
            prop_assert_eq!(a.values(), b.values());
            for v in a.values().chunks(a.component_count()) {
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((norm - 1.0).abs() < 1e-12);
                let mut c = v.to_vec();
                target.canonicalize(&mut c);
                prop_assert_eq!(&c[..], v);
            }
        }
    }

    #[test]
    fn descent_never_increases_the_energy(seed in 0u64..10_000) {
        let g = GridSpec::centered(3, 8, 1.0, DomainShape::Ball).unwrap();
        let f = generate(&FieldKind::Random, &GeneratorParams { seed, ..Default::default() }, &g, &QuotientTarget::rp2())
            .unwrap()
            .field;
        let r = minimize(&f, &modulus(), &MinimizeOptions { max_iters: Some(60), ..Default::default() }).unwrap();
        for w in r.trace.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy, "{} -> {}", w[0].energy, w[1].energy);
        }
        prop_assert_eq!(r.field.boundary(), f.boundary());
        for i in (0..g.node_count()).filter(|&i| f.boundary()[i]) {
            prop_assert_eq!(r.field.value(i), f.value(i));
        }
    }

    #[test]
    fn minimisation_commutes_with_deck_gauge(seed in 0u64..10_000, target in target_strategy()) {
        let g = GridSpec::centered(3, 8, 1.0, DomainShape::Ball).unwrap();
        let f = generate(&FieldKind::SmoothRandom, &GeneratorParams { seed, ..Default::default() }, &g, &target)
            .unwrap()
            .field;
        let moved = DirectorField::with_boundary(g.clone(), target.clone(), scramble(&f, seed ^ 1), f.boundary().to_vec())
            .unwrap();
        let opts = MinimizeOptions { max_iters: Some(25), ..Default::default() };
        let a = minimize(&f, &modulus(), &opts).unwrap();
        let b = minimize(&moved, &modulus(), &opts).unwrap();
        prop_assert_eq!(a.field.values(), b.field.values());
        prop_assert_eq!(a.energy.to_bits(), b.energy.to_bits());
    }

    #[test]
    fn lifts_cover_the_field_and_do_not_depend_on_the_tree(seed in 0u64..10_000, root in 0usize..1000) {
        let g = GridSpec::centered(3, 10, 1.0, DomainShape::Box).unwrap();
        let target = QuotientTarget::rp2();
        let f = generate(&FieldKind::SmoothRandom, &GeneratorParams { seed, ..Default::default() }, &g, &target)
            .unwrap()
            .field;
        prop_assume!(obstruction_chain(&f).unwrap().is_empty());
        let region: Vec<usize> = (0..g.node_count()).collect();
        let a = lift_region(&f, &region, 0, f.value(0)).unwrap();
        for &i in &region {
            let mut v = a.value(i).unwrap().to_vec();
            target.canonicalize(&mut v);
            prop_assert_eq!(&v[..], f.value(i));
        }
        let b = lift_region(&f, &region, root, a.value(root).unwrap()).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn chain_is_invariant_under_global_deck_elements(seed in 0u64..10_000, charge in prop_oneof![Just(0.5), Just(-0.5)]) {
        let g = GridSpec::centered(3, 10, 1.0, DomainShape::Box).unwrap();
        let f = generate(&FieldKind::Disclination { charge }, &GeneratorParams { seed, ..Default::default() }, &g, &QuotientTarget::rp2())
            .unwrap()
            .field;
        let flipped: Vec<f64> = f.values().iter().map(|x| -x).collect();
        let moved = DirectorField::with_boundary(g, QuotientTarget::rp2(), flipped, f.boundary().to_vec()).unwrap();
        let (a, b) = (obstruction_chain(&f).unwrap(), obstruction_chain(&moved).unwrap());
        prop_assert_eq!(a.support(), b.support());
        prop_assert!(!a.is_empty());
    }

    #[test]
    fn every_high_density_cell_is_classified_once(seed in 0u64..10_000) {
        let g = GridSpec::centered(3, 10, 1.0, DomainShape::Ball).unwrap();
        let f = generate(&FieldKind::Random, &GeneratorParams { seed, ..Default::default() }, &g, &QuotientTarget::rp2())
            .unwrap()
            .field;
        let report = classify_defects(&f, &modulus(), &ClassifyOptions::default()).unwrap();
        let cells: BTreeSet<usize> = report.singular_cells.iter().map(|c| c.cell).collect();
        prop_assert_eq!(cells.len(), report.singular_cells.len());
        let expected: BTreeSet<usize> = singular_set_estimate(&f, &modulus(), None).unwrap().iter().map(|c| c.cell).collect();
        prop_assert_eq!(cells, expected);
    }
}

proptest! {
    #![proptest_config(config(4))]

    #[test]
    fn penalised_minimum_lies_below_the_constrained_one(epsilon in 0.05f64..0.5) {
        let g = GridSpec::centered(3, 10, 1.0, DomainShape::Ball).unwrap();
        let start = generate(&FieldKind::Hedgehog, &GeneratorParams::default(), &g, &QuotientTarget::rp2()).unwrap().field;
        let constrained = minimize(&start, &modulus(), &MinimizeOptions::default()).unwrap();
        let relaxed = minimize_penalized(&QField::from_director_field(&start).unwrap(), &modulus(), &PenalizedOptions::new(epsilon))
            .unwrap();
        prop_assert!(relaxed.energy <= constrained.energy, "{} > {}", relaxed.energy, constrained.energy);
        prop_assert!(relaxed.penalty_energy >= 0.0);
    }
}

/// The Q-tensor and director energies agree to first order in `h`.
#[test]
fn q_tensor_energy_matches_the_director_energy() {
    let gap = |n: usize| {
        let g = GridSpec::centered(3, n, 1.0, DomainShape::Ball).unwrap();
        let f = generate(&FieldKind::SmoothRandom, &GeneratorParams { seed: 4, ..Default::default() }, &g, &QuotientTarget::rp2())
            .unwrap()
            .field;
        let mut opts = PenalizedOptions::new(0.1);
        opts.base.max_iters = Some(1);
        let r = minimize_penalized(&QField::from_director_field(&f).unwrap(), &modulus(), &opts).unwrap();
        let e = discrete_energy(&f, &modulus()).unwrap();
        ((r.trace[0].energy - e) / e).abs()
    };
    let (coarse, fine) = (gap(10), gap(19));
    assert!(fine < 0.6 * coarse, "{coarse} -> {fine}");
}

/// The dual line of a straight disclination stays within one coarse cell
/// when the grid is refined.
#[test]
fn disclination_line_is_stable_under_refinement() {
    let axis_offset = |n: usize| {
        let g = GridSpec::centered(3, n, 1.0, DomainShape::Box).unwrap();
        let f = generate(&FieldKind::Disclination { charge: 0.5 }, &GeneratorParams::default(), &g, &QuotientTarget::rp2())
            .unwrap()
            .field;
        let lines = obstruction_chain(&f).unwrap().polylines();
        assert_eq!(lines.len(), 1);
        let v = &lines[0].vertices;
        let mean = |a: usize| v.iter().map(|x| x[a]).sum::<f64>() / v.len() as f64;
        (mean(0), mean(1), g.h())
    };
    let (x0, y0, h) = axis_offset(12);
    let (x1, y1, _) = axis_offset(23);
    assert!(((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt() <= h);
}
