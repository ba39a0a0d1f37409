//! Legacy ASCII VTK: structured points for fields, polydata for defects.
//!
//! VTK orders points with x fastest, the reverse of the node layout, so
//! writers walk the grid with the first axis innermost.

use crate::defects::DefectReport;
use crate::error::Result;
use crate::fields::DirectorField;
use crate::grid::GridSpec;
use crate::minimizer::QField;
use nalgebra::Matrix3;
use std::io::Write;

fn vtk_order(grid: &GridSpec) -> impl Iterator<Item = usize> + '_ {
    let n = grid.n();
    (0..n[2]).flat_map(move |k| (0..n[1]).flat_map(move |j| (0..n[0]).map(move |i| grid.index([i, j, k]))))
}

fn header<W: Write>(w: &mut W, grid: &GridSpec, title: &str) -> Result<()> {
    let n = grid.n();
    let o = grid.origin();
    let h = grid.h();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", n[0], n[1], n[2])?;
    writeln!(w, "ORIGIN {:e} {:e} {:e}", o[0], o[1], o[2])?;
    writeln!(w, "SPACING {h:e} {h:e} {h:e}")?;
    writeln!(w, "POINT_DATA {}", grid.node_count())?;
    Ok(())
}

fn tensors<W: Write>(w: &mut W, grid: &GridSpec, q: &[Matrix3<f64>]) -> Result<()> {
    writeln!(w, "TENSORS Q double")?;
    for i in vtk_order(grid) {
        let m = &q[i];
        for r in 0..3 {
            writeln!(w, "{:e} {:e} {:e}", m[(r, 0)], m[(r, 1)], m[(r, 2)])?;
        }
    }
    Ok(())
}

fn boundary<W: Write>(w: &mut W, grid: &GridSpec, mask: &[bool]) -> Result<()> {
    writeln!(w, "SCALARS boundary int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for i in vtk_order(grid) {
        writeln!(w, "{}", mask[i] as u8)?;
    }
    Ok(())
}

/// Director as `VECTORS director` (a 4-component `SCALARS` array for
/// targets in `R^4`), the Q-tensor where defined, and the Dirichlet mask.
pub fn write_field_vtk<W: Write>(mut w: W, field: &DirectorField) -> Result<()> {
    let grid = field.grid();
    header(&mut w, grid, &format!("director field, target {}", field.target().name()))?;
    let m = field.component_count();
    if m == 3 {
        writeln!(w, "VECTORS director double")?;
    } else {
        writeln!(w, "SCALARS director double {m}")?;
        writeln!(w, "LOOKUP_TABLE default")?;
    }
    for i in vtk_order(grid) {
        let line: Vec<String> = field.value(i).iter().map(|x| format!("{x:e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    if let Ok(q) = field.q_tensors() {
        let q: Vec<Matrix3<f64>> = q.iter().map(|t| *t.matrix()).collect();
        tensors(&mut w, grid, &q)?;
    }
    boundary(&mut w, grid, field.boundary())?;
    w.flush()?;
    Ok(())
}

/// Matrix-valued fields from the penalized solver.
pub fn write_q_field_vtk<W: Write>(mut w: W, field: &QField) -> Result<()> {
    header(&mut w, &field.grid, "Q-tensor field")?;
    tensors(&mut w, &field.grid, &field.values)?;
    boundary(&mut w, &field.grid, &field.boundary)?;
    w.flush()?;
    Ok(())
}

/// Line defects as polylines and point defects as vertices, with a cell
/// scalar `degree` (0 on lines).
pub fn write_defects_vtk<W: Write>(mut w: W, report: &DefectReport) -> Result<()> {
    let line_points: usize = report.lines.iter().map(|l| l.vertices.len()).sum();
    let total = line_points + report.points.len();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "defect set")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {total} double")?;
    for x in report.lines.iter().flat_map(|l| &l.vertices).chain(report.points.iter().map(|p| &p.center)) {
        writeln!(w, "{:e} {:e} {:e}", x[0], x[1], x[2])?;
    }
    if !report.points.is_empty() {
        writeln!(w, "VERTICES {} {}", report.points.len(), 2 * report.points.len())?;
        for k in 0..report.points.len() {
            writeln!(w, "1 {}", line_points + k)?;
        }
    }
    if !report.lines.is_empty() {
        let size: usize = report.lines.iter().map(|l| l.vertices.len() + 1 + l.closed as usize).sum();
        writeln!(w, "LINES {} {size}", report.lines.len())?;
        let mut start = 0;
        for l in &report.lines {
            let len = l.vertices.len();
            let mut ids: Vec<usize> = (start..start + len).collect();
            if l.closed {
                ids.push(start);
            }
            let ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
            writeln!(w, "{} {}", ids.len(), ids.join(" "))?;
            start += len;
        }
    }
    let cells = report.points.len() + report.lines.len();
    if cells > 0 {
        writeln!(w, "CELL_DATA {cells}")?;
        writeln!(w, "SCALARS degree int 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for p in &report.points {
            writeln!(w, "{}", p.degree)?;
        }
        for _ in &report.lines {
            writeln!(w, "0")?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainShape;
    use crate::manifolds::QuotientTarget;

    #[test]
    fn points_are_written_first_axis_fastest() {
        let g = GridSpec::new(2, &[8, 9], 1.0, &[0.0, 0.0], DomainShape::Box).unwrap();
        let order: Vec<usize> = vtk_order(&g).take(3).collect();
        assert_eq!(order, vec![g.index([0, 0, 0]), g.index([1, 0, 0]), g.index([2, 0, 0])]);
        assert_eq!(vtk_order(&g).count(), 72);
    }

    #[test]
    fn four_component_targets_use_a_scalar_array() {
        let g = GridSpec::centered(2, 8, 1.0, DomainShape::Box).unwrap();
        let f = DirectorField::constant(g, QuotientTarget::s3_mod_z4(), &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_field_vtk(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("SCALARS director double 4"));
        assert!(!text.contains("TENSORS"));
    }
}
