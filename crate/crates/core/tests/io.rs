//! Output files read back by independent parsers.

use defectoscope::defects::{classify_defects, ClassifyOptions};
use defectoscope::elastic::ElasticModulus;
use defectoscope::fields::{generate, DirectorField, FieldKind, GeneratorParams};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::io::{write_defects_vtk, write_field_vtk, write_json};
use defectoscope::manifolds::QuotientTarget;
use vtkio::model::{Attribute, DataSet, Vtk};

fn parse_vtk(bytes: Vec<u8>) -> Vtk {
    Vtk::parse_legacy_be(bytes.as_slice()).expect("legacy VTK parses")
}

#[test]
fn constant_field_vtk_has_one_director_vector_per_node() {
    let g = GridSpec::centered(3, 8, 1.0, DomainShape::Box).unwrap();
    let f = DirectorField::constant(g, QuotientTarget::rp2(), &[0.0, 0.6, 0.8]).unwrap();
    let mut buf = Vec::new();
    write_field_vtk(&mut buf, &f).unwrap();
    let vtk = parse_vtk(buf);
    let DataSet::ImageData { extent, pieces, .. } = vtk.data else { panic!("expected structured points") };
    assert_eq!(extent.into_dims(), [8, 8, 8]);
    let vtkio::model::Piece::Inline(piece) = &pieces[0] else { panic!("inline piece") };
    let vectors: Vec<_> = piece
        .data
        .point
        .iter()
        .filter_map(|a| match a {
            Attribute::DataArray(d) if d.name == "director" => Some(d),
            _ => None,
        })
        .collect();
    assert_eq!(vectors.len(), 1);
    let values: Vec<f64> = vectors[0].data.clone().cast_into().unwrap();
    assert_eq!(values.len(), 3 * 512);
    assert!(values.chunks(3).all(|v| v == [0.0, 0.6, 0.8]));
}

#[test]
fn disclination_report_serialises_its_line() {
    let g = GridSpec::centered(3, 12, 1.0, DomainShape::Box).unwrap();
    let f = generate(&FieldKind::Disclination { charge: 0.5 }, &GeneratorParams::default(), &g, &QuotientTarget::rp2())
        .unwrap()
        .field;
    let m = ElasticModulus::power_regularized(1.5, 0.0).unwrap();
    let report = classify_defects(&f, &m, &ClassifyOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_json(&mut buf, &report).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    let lines = v["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 1);
    assert!(lines[0]["vertices"].as_array().unwrap().len() >= 12);
    assert_eq!(v["points"].as_array().unwrap().len(), 0);

    let mut vtk = Vec::new();
    write_defects_vtk(&mut vtk, &report).unwrap();
    let DataSet::PolyData { pieces, .. } = parse_vtk(vtk).data else { panic!("expected polydata") };
    let vtkio::model::Piece::Inline(piece) = &pieces[0] else { panic!("inline piece") };
    assert_eq!(piece.lines.as_ref().map(|l| l.num_cells()), Some(1));
}
