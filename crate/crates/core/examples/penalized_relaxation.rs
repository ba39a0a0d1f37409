//! Relaxes the Q-tensor energy with a penalty `dist²/ε²` to the projective
//! plane for decreasing `ε` and compares with the constrained minimum.

use defectoscope::elastic::ElasticModulus;
use defectoscope::fields::{generate, FieldKind, GeneratorParams};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::manifolds::QuotientTarget;
use defectoscope::minimizer::{minimize, minimize_penalized, MinimizeOptions, PenalizedOptions, QField};

fn main() -> defectoscope::Result<()> {
    let g = GridSpec::centered(3, 12, 1.0, DomainShape::Ball)?;
    let m = ElasticModulus::power_regularized(1.5, 0.0)?;
    let start = generate(&FieldKind::Hedgehog, &GeneratorParams::default(), &g, &QuotientTarget::rp2())?.field;
    let constrained = minimize(&start, &m, &MinimizeOptions::default())?;
    println!("constrained minimum {:.6}", constrained.energy);
    let q0 = QField::from_director_field(&start)?;
    for eps in [0.4, 0.2, 0.1, 0.05] {
        let r = minimize_penalized(&q0, &m, &PenalizedOptions::new(eps))?;
        println!(
            "eps {eps:<5} energy {:.6} (elastic {:.6}, penalty {:.2e}) {}",
            r.energy,
            r.elastic_energy,
            r.penalty_energy,
            r.status.label()
        );
    }
    Ok(())
}
