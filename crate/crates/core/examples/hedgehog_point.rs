//! The radial hedgehog in a ball: after minimisation the holonomy chain is
//! empty and a single cell carries degree one. Prints the scaled energy
//! density on dyadic radii against the analytic hedgehog constant.

use defectoscope::defects::{classify_defects, hedgehog_density, ClassifyOptions};
use defectoscope::elastic::ElasticModulus;
use defectoscope::fields::{generate, FieldKind, GeneratorParams};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::manifolds::QuotientTarget;
use defectoscope::minimizer::{minimize, MinimizeOptions};

fn main() -> defectoscope::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(Ok(24), |s| s.parse()).expect("grid size");
    let p = 1.5;
    let g = GridSpec::centered(3, n, 1.0, DomainShape::Ball)?;
    let m = ElasticModulus::power_regularized(p, 0.0)?;
    let start = generate(&FieldKind::Hedgehog, &GeneratorParams::default(), &g, &QuotientTarget::rp2())?.field;
    let r = minimize(&start, &m, &MinimizeOptions::default())?;
    println!("minimiser: {} after {} iterations", r.status.label(), r.iterations);

    let report = classify_defects(&r.field, &m, &ClassifyOptions::default())?;
    println!("lines: {}", report.lines.len());
    for pt in &report.points {
        println!("point defect at {:?}, degree {}", pt.center, pt.degree);
    }
    let c = hedgehog_density(p);
    for prof in &report.profiles {
        for (rho, v) in prof.radii.iter().zip(&prof.values) {
            println!("  radius {rho:.4}: density {v:.4} ({:.3} of the constant)", v / c);
        }
        println!("  liminf {:.4}, constant {c:.4}", prof.liminf);
    }
    Ok(())
}
