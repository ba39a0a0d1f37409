//! Minimises a nematic field in a ball with a half-integer disclination on
//! the boundary and reads off the line defect from the holonomy chain.
//! Writes `disclination.vtk` and `disclination_defects.vtk` to the working
//! directory.

use defectoscope::defects::{classify_defects, ClassifyOptions};
use defectoscope::elastic::ElasticModulus;
use defectoscope::fields::{generate, FieldKind, GeneratorParams};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::io;
use defectoscope::lifting::obstruction_chain;
use defectoscope::manifolds::QuotientTarget;
use defectoscope::minimizer::{minimize, MinimizeOptions};
use std::path::Path;

fn main() -> defectoscope::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(Ok(24), |s| s.parse()).expect("grid size");
    let g = GridSpec::centered(3, n, 1.0, DomainShape::Ball)?;
    let m = ElasticModulus::power_regularized(1.5, 0.0)?;
    let start = generate(&FieldKind::Disclination { charge: 0.5 }, &GeneratorParams::default(), &g, &QuotientTarget::rp2())?.field;
    let r = minimize(&start, &m, &MinimizeOptions::default())?;
    println!("minimiser: {} after {} iterations, energy {:.6}", r.status.label(), r.iterations, r.energy);

    let chain = obstruction_chain(&r.field)?;
    println!("obstruction chain: {} plaquettes, cycle violations {}", chain.support().len(), chain.cycle_violations(r.field.target()).len());
    let report = classify_defects(&r.field, &m, &ClassifyOptions::default())?;
    for (i, line) in report.lines.iter().enumerate() {
        println!(
            "line {i}: {} vertices, closed {}, ends on the boundary: {}",
            line.vertices.len(),
            line.closed,
            line.boundary_ends
        );
    }
    println!("point defects: {}, singular cells: {}", report.points.len(), report.singular_cells.len());

    io::write_field_vtk(io::create(Path::new("disclination.vtk"))?, &r.field)?;
    io::write_defects_vtk(io::create(Path::new("disclination_defects.vtk"))?, &report)?;
    Ok(())
}
