//! Discrete energy of the planar vortex `x/|x|` on disks of increasing
//! resolution, against the continuum value `4π` for `p = 3/2`, together with
//! the stationarity residuals away from the core.

use defectoscope::elastic::ElasticModulus;
use defectoscope::fields::{generate, FieldKind, GeneratorParams};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::manifolds::QuotientTarget;
use defectoscope::minimizer::{discrete_energy, stationarity_residual};
use std::f64::consts::PI;

fn main() -> defectoscope::Result<()> {
    let m = ElasticModulus::power_regularized(1.5, 0.0)?;
    let exact = 4.0 * PI;
    println!("{:>5} {:>12} {:>10} {:>10} {:>10}", "n", "energy", "rel err", "outer", "inner");
    for n in [32, 64, 128, 256] {
        let g = GridSpec::centered(2, n, 1.0, DomainShape::Ball)?;
        let v = generate(&FieldKind::Vortex2d, &GeneratorParams::default(), &g, &QuotientTarget::sphere(2))?;
        let e = discrete_energy(&v.field, &m)?;
        let s = stationarity_residual(&v.field, &m, &v.loci, 0.1_f64.max(3.0 * g.h()))?;
        println!("{n:>5} {e:>12.6} {:>10.4} {:>10.3e} {:>10.3e}", e / exact - 1.0, s.outer, s.inner);
    }
    Ok(())
}
