//! Projects smooth `S²`-valued fields to the projective plane and lifts them
//! back; the lift agrees with the original up to one global sign. A field
//! with a disclination instead reports where the lift is obstructed.

use defectoscope::fields::{generate, FieldKind, GeneratorParams};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::lifting::{lift_region, obstruction_chain};
use defectoscope::manifolds::QuotientTarget;

fn main() -> defectoscope::Result<()> {
    let g = GridSpec::centered(3, 16, 1.0, DomainShape::Box)?;
    let region: Vec<usize> = (0..g.node_count()).collect();
    for seed in 0..5 {
        let params = GeneratorParams { seed, ..Default::default() };
        let v = generate(&FieldKind::SmoothRandom, &params, &g, &QuotientTarget::sphere(2))?.field;
        let u = v.with_target(QuotientTarget::rp2())?;
        let lift = lift_region(&u, &region, 0, u.value(0))?;
        let sign = if lift.values()[..3].iter().zip(v.value(0)).all(|(a, b)| a == b) { 1.0 } else { -1.0 };
        let exact = lift.values().iter().zip(v.values()).all(|(a, b)| *a == sign * b);
        println!("seed {seed}: lift matches the original with sign {sign:+}: {exact}");
    }

    let d = generate(&FieldKind::Disclination { charge: 0.5 }, &GeneratorParams::default(), &g, &QuotientTarget::rp2())?.field;
    match lift_region(&d, &region, 0, d.value(0)) {
        Ok(_) => println!("disclination lifted (unexpected)"),
        Err(e) => println!("disclination: {e}"),
    }
    let chain = obstruction_chain(&d)?;
    println!("its chain has {} plaquettes forming {} line(s)", chain.support().len(), chain.polylines().len());
    Ok(())
}
