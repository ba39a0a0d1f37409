//! File formats: the binary DFSC field format, legacy ASCII VTK, CSV tables
//! and JSON documents.

mod dfsc;
mod json;
mod table;
mod vtk;

pub use dfsc::{load_dfsc, read_dfsc, save_dfsc, write_dfsc, FieldFile, DFSC_MAGIC, DFSC_VERSION};
pub use json::{to_json_string, write_json};
pub use table::{write_chain_csv, write_field_csv, write_trace_csv};
pub use vtk::{write_defects_vtk, write_field_vtk, write_q_field_vtk};

use crate::error::{Error, Result};
use std::path::Path;

/// Output formats selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Dfsc,
    Vtk,
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dfsc" => Ok(Format::Dfsc),
            "vtk" => Ok(Format::Vtk),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Format(format!("unknown format `{other}` (expected dfsc, vtk, csv or json)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Format::Dfsc => "dfsc",
            Format::Vtk => "vtk",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// Format implied by a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension().and_then(|e| e.to_str()).and_then(|e| Format::parse(&e.to_ascii_lowercase()).ok())
    }
}

/// Creates `path` behind a buffered writer.
pub fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(f))
}
