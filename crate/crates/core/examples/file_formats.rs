//! Writes a field, its obstruction chain, a solver trace and a defect report
//! in every supported format to a scratch directory and reads the DFSC file
//! back.

use defectoscope::defects::{classify_defects, ClassifyOptions};
use defectoscope::elastic::ElasticModulus;
use defectoscope::fields::{generate, FieldKind, GeneratorParams};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::io;
use defectoscope::lifting::obstruction_chain;
use defectoscope::manifolds::QuotientTarget;
use defectoscope::minimizer::{minimize, MinimizeOptions};

fn main() -> defectoscope::Result<()> {
    let dir = std::env::temp_dir().join("defectoscope-formats");
    std::fs::create_dir_all(&dir)?;
    let g = GridSpec::centered(3, 12, 1.0, DomainShape::Box)?;
    let m = ElasticModulus::power_regularized(1.5, 0.0)?;
    let start = generate(&FieldKind::Disclination { charge: 0.5 }, &GeneratorParams::default(), &g, &QuotientTarget::rp2())?.field;
    let opts = MinimizeOptions { max_iters: Some(200), ..Default::default() };
    let r = minimize(&start, &m, &opts)?;

    let dfsc = dir.join("field.dfsc");
    io::save_dfsc(&dfsc, &r.field, Some(r.status))?;
    let back = io::load_dfsc(&dfsc)?;
    println!("DFSC round trip equal: {}, status {:?}", back.field == r.field, back.status);

    io::write_field_vtk(io::create(&dir.join("field.vtk"))?, &r.field)?;
    io::write_field_csv(io::create(&dir.join("field.csv"))?, &r.field)?;
    io::write_trace_csv(io::create(&dir.join("trace.csv"))?, &r.trace)?;
    io::write_chain_csv(io::create(&dir.join("chain.csv"))?, &obstruction_chain(&r.field)?)?;
    let report = classify_defects(&r.field, &m, &ClassifyOptions::default())?;
    io::write_json(io::create(&dir.join("report.json"))?, &report)?;
    io::write_defects_vtk(io::create(&dir.join("defects.vtk"))?, &report)?;
    for e in std::fs::read_dir(&dir)? {
        let e = e?;
        println!("{:>10} bytes  {}", e.metadata()?.len(), e.path().display());
    }
    Ok(())
}
