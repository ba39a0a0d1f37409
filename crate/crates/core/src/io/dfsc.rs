//! DFSC binary fields.
//!
//! Layout, all integers and floats little-endian:
//!
//! | item | encoding |
//! |---|---|
//! | magic | `b"DFSC"` |
//! | version | `u32` (= 1) |
//! | target name | `u32` byte length, then UTF-8 |
//! | `q` | `u32` |
//! | dims | `u32` |
//! | nodes per axis | `dims × u32` |
//! | spacing `h` | `f64` |
//! | node vectors | `nodes × (q+1) × f64`, row-major, last axis fastest |
//!
//! followed by an optional trailer: origin (`dims × f64`), domain shape
//! (`u8`: 0 box, 1 ball), solver status (`u8`: 0 none, 1 converged,
//! 2 unconverged, 3 stalled) and the Dirichlet mask (`nodes × u8`). Files
//! without a trailer get a zero origin, a box domain and its natural mask.

use crate::error::{Error, Result};
use crate::fields::DirectorField;
use crate::grid::{Domain, DomainShape, GridSpec};
use crate::manifolds::QuotientTarget;
use crate::minimizer::Status;
use std::io::{Read, Write};
use std::path::Path;

pub const DFSC_MAGIC: [u8; 4] = *b"DFSC";
pub const DFSC_VERSION: u32 = 1;

/// A field together with the solver status it was saved with.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub field: DirectorField,
    pub status: Option<Status>,
}

fn status_code(s: Option<Status>) -> u8 {
    match s {
        None => 0,
        Some(Status::Converged) => 1,
        Some(Status::Unconverged) => 2,
        Some(Status::Stalled) => 3,
    }
}

pub fn write_dfsc<W: Write>(mut w: W, field: &DirectorField, status: Option<Status>) -> Result<()> {
    let grid = field.grid();
    let target = field.target();
    let dims = grid.dims();
    let mut buf = Vec::with_capacity(64 + field.values().len() * 8 + grid.node_count());
    buf.extend_from_slice(&DFSC_MAGIC);
    buf.extend_from_slice(&DFSC_VERSION.to_le_bytes());
    let name = target.name().as_bytes();
    buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
    buf.extend_from_slice(name);
    buf.extend_from_slice(&(target.q() as u32).to_le_bytes());
    buf.extend_from_slice(&(dims as u32).to_le_bytes());
    for &n in &grid.n()[..dims] {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    buf.extend_from_slice(&grid.h().to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for o in &grid.origin()[..dims] {
        buf.extend_from_slice(&o.to_le_bytes());
    }
    buf.push(match grid.shape() {
        DomainShape::Box => 0,
        DomainShape::Ball => 1,
    });
    buf.push(status_code(status));
    buf.extend(field.boundary().iter().map(|&b| b as u8));
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated DFSC file while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub fn read_dfsc<R: Read>(mut r: R) -> Result<FieldFile> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if c.take(4, "magic")? != DFSC_MAGIC {
        return Err(Error::Format("not a DFSC file (bad magic)".into()));
    }
    let version = c.u32("version")?;
    if version != DFSC_VERSION {
        return Err(Error::Format(format!("unsupported DFSC version {version}")));
    }
    let len = c.u32("target name length")? as usize;
    let name = std::str::from_utf8(c.take(len, "target name")?)
        .map_err(|_| Error::Format("target name is not UTF-8".into()))?
        .to_string();
    let target = QuotientTarget::by_name(&name)?;
    let q = c.u32("q")? as usize;
    if q != target.q() {
        return Err(Error::Format(format!("target {name} has q = {}, file says {q}", target.q())));
    }
    let dims = c.u32("dims")? as usize;
    if dims != 2 && dims != 3 {
        return Err(Error::Format(format!("unsupported dimension {dims}")));
    }
    let n: Vec<usize> = (0..dims).map(|_| c.u32("node counts").map(|v| v as usize)).collect::<Result<_>>()?;
    let h = c.f64("spacing")?;
    let nodes = n.iter().try_fold(1usize, |a, &b| a.checked_mul(b)).ok_or_else(|| Error::Format("node count overflows".into()))?;
    let count = nodes.checked_mul(q + 1).ok_or_else(|| Error::Format("value count overflows".into()))?;
    if c.remaining() / 8 < count {
        return Err(Error::Format(format!("truncated DFSC file: expected {count} node components")));
    }
    let values: Vec<f64> = (0..count).map(|_| c.f64("node vectors")).collect::<Result<_>>()?;

    let (grid, status, boundary) = if c.remaining() == 0 {
        let grid = GridSpec::new(dims, &n, h, &vec![0.0; dims], DomainShape::Box)?;
        let boundary = Domain::new(&grid).boundary;
        (grid, None, boundary)
    } else {
        let origin: Vec<f64> = (0..dims).map(|_| c.f64("origin")).collect::<Result<_>>()?;
        let shape = match c.take(1, "domain shape")?[0] {
            0 => DomainShape::Box,
            1 => DomainShape::Ball,
            s => return Err(Error::Format(format!("bad domain shape code {s}"))),
        };
        let status = match c.take(1, "status")?[0] {
            0 => None,
            1 => Some(Status::Converged),
            2 => Some(Status::Unconverged),
            3 => Some(Status::Stalled),
            s => return Err(Error::Format(format!("bad status code {s}"))),
        };
        let mask = c.take(nodes, "boundary mask")?;
        if let Some(b) = mask.iter().find(|&&b| b > 1) {
            return Err(Error::Format(format!("bad boundary flag {b}")));
        }
        let grid = GridSpec::new(dims, &n, h, &origin, shape)?;
        (grid, status, mask.iter().map(|&b| b == 1).collect())
    };
    if c.remaining() != 0 {
        return Err(Error::Format(format!("{} trailing bytes after DFSC payload", c.remaining())));
    }
    let field = DirectorField::with_boundary(grid, target, values, boundary)?;
    Ok(FieldFile { field, status })
}

pub fn save_dfsc(path: &Path, field: &DirectorField, status: Option<Status>) -> Result<()> {
    write_dfsc(super::create(path)?, field, status)
}

pub fn load_dfsc(path: &Path) -> Result<FieldFile> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_dfsc(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{generate, FieldKind, GeneratorParams};
    use proptest::prelude::*;

    fn roundtrip(field: &DirectorField, status: Option<Status>) -> FieldFile {
        let mut buf = Vec::new();
        write_dfsc(&mut buf, field, status).unwrap();
        read_dfsc(buf.as_slice()).unwrap()
    }

    #[test]
    fn header_layout() {
        let g = GridSpec::new(2, &[8, 9], 0.25, &[1.0, -2.0], DomainShape::Box).unwrap();
        let f = DirectorField::constant(g, QuotientTarget::rp2(), &[0.0, 0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_dfsc(&mut buf, &f, None).unwrap();
        assert_eq!(&buf[..4], b"DFSC");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        assert_eq!(&buf[12..15], b"RP2");
        assert_eq!(u32::from_le_bytes(buf[15..19].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[19..23].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[23..27].try_into().unwrap()), 8);
        assert_eq!(u32::from_le_bytes(buf[27..31].try_into().unwrap()), 9);
        assert_eq!(f64::from_le_bytes(buf[31..39].try_into().unwrap()), 0.25);
        assert_eq!(buf.len(), 39 + 72 * 3 * 8 + 2 * 8 + 2 + 72);
    }

    #[test]
    fn status_and_geometry_survive() {
        let g = GridSpec::new(3, &[8, 8, 10], 0.1, &[0.5, 0.0, -0.3], DomainShape::Ball).unwrap();
        let f = generate(&FieldKind::Hedgehog, &GeneratorParams::default(), &g, &QuotientTarget::sphere(2)).unwrap().field;
        for s in [None, Some(Status::Converged), Some(Status::Unconverged), Some(Status::Stalled)] {
            let back = roundtrip(&f, s);
            assert_eq!(back.status, s);
            assert_eq!(back.field, f);
        }
    }

    #[test]
    fn legacy_files_without_trailer_load() {
        let g = GridSpec::new(2, &[8, 8], 0.5, &[0.0, 0.0], DomainShape::Box).unwrap();
        let f = DirectorField::constant(g.clone(), QuotientTarget::s3_mod_z4(), &[0.5, 0.5, 0.5, 0.5]).unwrap();
        let mut buf = Vec::new();
        write_dfsc(&mut buf, &f, None).unwrap();
        buf.truncate(buf.len() - (2 * 8 + 2 + 64));
        assert_eq!(read_dfsc(buf.as_slice()).unwrap().field, f);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let g = GridSpec::centered(2, 8, 1.0, DomainShape::Box).unwrap();
        let f = DirectorField::constant(g, QuotientTarget::rp2(), &[1.0, 0.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_dfsc(&mut buf, &f, None).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_dfsc(bad.as_slice()), Err(Error::Format(_))));
        assert!(matches!(read_dfsc(&buf[..100]), Err(Error::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_dfsc(long.as_slice()), Err(Error::Format(_))));
        let mut wrong_q = buf;
        wrong_q[15] = 3;
        assert!(read_dfsc(wrong_q.as_slice()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn random_fields_roundtrip_bit_exactly(seed in any::<u64>(), target in 0usize..4, dims in 2usize..4) {
            let target = [QuotientTarget::rp2(), QuotientTarget::s3_mod_z4(), QuotientTarget::sphere(2), QuotientTarget::sphere(3)][target].clone();
            let g = GridSpec::centered(dims, 8, 1.0, DomainShape::Ball).unwrap();
            let params = GeneratorParams { seed, ..Default::default() };
            let f = generate(&FieldKind::Random, &params, &g, &target).unwrap().field;
            let back = roundtrip(&f, Some(Status::Converged)).field;
            let bits = |f: &DirectorField| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&f));
            prop_assert_eq!(back, f);
        }
    }
}
