//! Cochain snapshot files: a small binary header (complex, degree, grid,
//! time) followed by the little-endian f64 coefficient array in the
//! documented entity order (component-major, then i + nx·(j + ny·k)), plus
//! a JSON sidecar with the same header for external tooling.

use crate::complex::{Cochain, ComplexId, GridSpec};
use crate::error::{CoreError, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"DEMAXSN\0";
const VERSION: u32 = 1;

/// The snapshot header, shared verbatim between the binary file and the
/// `.json` sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub complex: ComplexId,
    pub degree: usize,
    pub n: [usize; 3],
    pub h: [f64; 3],
    pub time: f64,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    os.into()
}

/// Writes the cochain and its JSON sidecar (`<path>.json`).
pub fn write_snapshot(path: &Path, c: &Cochain, time: f64) -> Result<()> {
    let header = SnapshotHeader {
        complex: c.complex,
        degree: c.degree,
        n: c.grid.n,
        h: c.grid.h,
        time,
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_u32::<LittleEndian>(VERSION)?;
    f.write_u32::<LittleEndian>(match c.complex {
        ComplexId::Primal => 0,
        ComplexId::Dual => 1,
    })?;
    f.write_u32::<LittleEndian>(c.degree as u32)?;
    for a in 0..3 {
        f.write_u64::<LittleEndian>(c.grid.n[a] as u64)?;
    }
    for a in 0..3 {
        f.write_f64::<LittleEndian>(c.grid.h[a])?;
    }
    f.write_f64::<LittleEndian>(time)?;
    f.write_u64::<LittleEndian>(c.values.len() as u64)?;
    for v in &c.values {
        f.write_f64::<LittleEndian>(*v)?;
    }
    f.flush()?;

    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Reads a snapshot back; validates magic, version, and value count.
pub fn read_snapshot(path: &Path) -> Result<(Cochain, f64)> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CoreError::BadSnapshot("bad magic bytes".into()));
    }
    let version = f.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(CoreError::BadSnapshot(format!("unsupported version {version}")));
    }
    let complex = match f.read_u32::<LittleEndian>()? {
        0 => ComplexId::Primal,
        1 => ComplexId::Dual,
        other => return Err(CoreError::BadSnapshot(format!("bad complex id {other}"))),
    };
    let degree = f.read_u32::<LittleEndian>()? as usize;
    if degree > 3 {
        return Err(CoreError::BadSnapshot(format!("bad degree {degree}")));
    }
    let mut n = [0usize; 3];
    for v in &mut n {
        *v = f.read_u64::<LittleEndian>()? as usize;
    }
    let mut h = [0.0f64; 3];
    for v in &mut h {
        *v = f.read_f64::<LittleEndian>()?;
    }
    let time = f.read_f64::<LittleEndian>()?;
    let grid = GridSpec::new(n, h)?;
    let count = f.read_u64::<LittleEndian>()? as usize;
    if count != grid.entity_count(degree) {
        return Err(CoreError::BadSnapshot(format!(
            "value count {count} does not match grid (expected {})",
            grid.entity_count(degree)
        )));
    }
    let mut values = vec![0.0f64; count];
    for v in &mut values {
        *v = f.read_f64::<LittleEndian>()?;
    }
    Ok((Cochain::from_values(grid, complex, degree, values)?, time))
}
