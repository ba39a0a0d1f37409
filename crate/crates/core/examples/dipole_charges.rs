//! Point charges of dipole chains: each pair contributes `+1` and `-1` at
//! cells a distance `π / 2^j` apart, and the total charge vanishes.

use defectoscope::defects::{box_degree, jacobian_charges};
use defectoscope::fields::{generate, FieldKind, GeneratorParams};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::manifolds::QuotientTarget;

fn main() -> defectoscope::Result<()> {
    let g = GridSpec::centered(3, 56, 1.6, DomainShape::Box)?;
    for pairs in 1..=3 {
        let f = generate(&FieldKind::DipoleChain { pairs }, &GeneratorParams::default(), &g, &QuotientTarget::sphere(2))?;
        let charges = jacobian_charges(&f.field)?;
        println!("dipole-chain({pairs}): total charge {}", charges.total);
        for c in &charges.charges {
            println!("  degree {:+} at ({:.3}, {:.3}, {:.3})", c.degree, c.center[0], c.center[1], c.center[2]);
        }
        let n = g.n();
        let whole = box_degree(&f.field, [0; 3], [n[0] - 1, n[1] - 1, n[2] - 1])?;
        println!("  boundary degree of the whole box {whole:.2e}");
    }
    Ok(())
}
