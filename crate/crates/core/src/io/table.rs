//! CSV tables with a header row.

use crate::error::{Error, Result};
use crate::fields::DirectorField;
use crate::lifting::ObstructionChain;
use crate::minimizer::TraceRow;
use std::io::Write;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Columns `iter,energy,grad_norm,step`.
pub fn write_trace_csv<W: Write>(w: W, trace: &[TraceRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in trace {
        out.serialize(row).map_err(csv_err)?;
    }
    if trace.is_empty() {
        out.write_record(["iter", "energy", "grad_norm", "step"]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per support plaquette: id, plane, dual endpoints and the
/// coefficient's deck element.
pub fn write_chain_csv<W: Write>(w: W, chain: &ObstructionChain) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["plaquette", "plane", "from_x", "from_y", "from_z", "to_x", "to_y", "to_z", "element"])
        .map_err(csv_err)?;
    for s in chain.segments() {
        let (_, plane) = chain.grid().plaquette_parts(s.plaquette);
        let mut rec = vec![s.plaquette.to_string(), plane.to_string()];
        rec.extend(s.from.iter().chain(&s.to).map(|x| x.to_string()));
        rec.push(s.element.to_string());
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per node: position, components `c0..` and the Dirichlet flag.
pub fn write_field_csv<W: Write>(w: W, field: &DirectorField) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let m = field.component_count();
    let mut header: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
    header.extend((0..m).map(|j| format!("c{j}")));
    header.push("boundary".into());
    out.write_record(&header).map_err(csv_err)?;
    let grid = field.grid();
    for i in 0..grid.node_count() {
        let mut rec: Vec<String> = grid.position(i).iter().map(|x| x.to_string()).collect();
        rec.extend(field.value(i).iter().map(|x| x.to_string()));
        rec.push((field.boundary()[i] as u8).to_string());
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
