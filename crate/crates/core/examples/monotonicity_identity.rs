//! Evaluates both sides of the almost-monotonicity identity for the
//! minimised hedgehog at a few centres.

use defectoscope::defects::monotonicity_check;
use defectoscope::elastic::ElasticModulus;
use defectoscope::fields::{default_center, generate, FieldKind, GeneratorParams};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::manifolds::QuotientTarget;
use defectoscope::minimizer::{minimize, MinimizeOptions};

fn main() -> defectoscope::Result<()> {
    let g = GridSpec::centered(3, 24, 1.0, DomainShape::Ball)?;
    let m = ElasticModulus::power_regularized(1.5, 1.0)?;
    let start = generate(&FieldKind::Hedgehog, &GeneratorParams::default(), &g, &QuotientTarget::rp2())?.field;
    let field = minimize(&start, &m, &MinimizeOptions::default())?.field;
    let c = default_center(&g);
    println!("{:>22} {:>10} {:>10} {:>10} {:>10}", "center", "lhs", "rhs", "residual", "psi term");
    for offset in [[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, -0.15, 0.05]] {
        let x0 = [c[0] + offset[0], c[1] + offset[1], c[2] + offset[2]];
        let r = monotonicity_check(&field, &m, x0, 0.2, 0.6)?;
        println!(
            "({:>6.3},{:>6.3},{:>6.3}) {:>10.4} {:>10.4} {:>10.2e} {:>10.2e}",
            x0[0], x0[1], x0[2], r.lhs, r.rhs, r.residual, r.psi_correction
        );
        assert!(r.psi_correction.abs() <= r.psi_bound);
    }
    Ok(())
}
