//! Bit-exact field snapshots: 64-byte header (magic "GKDV0001", n as u64,
//! L and t as f64, flags as u64, 24 reserved bytes), then n little-endian
//! (re, im) f64 pairs.

use std::fs;
use std::io::{self, Read};
use std::path::Path;
use std::sync::Arc;

use gkdv_core::{Field, SpectralGrid};
use num_complex::Complex64;

pub const MAGIC: &[u8; 8] = b"GKDV0001";
pub const FLAG_REAL: u64 = 1;

pub fn write_snapshot(path: &Path, field: &Field, t: f64) -> io::Result<()> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(64 + 16 * field.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(grid.len() as u64).to_le_bytes());
    buf.extend_from_slice(&grid.half_length().to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    let flags: u64 = if field.is_real() { FLAG_REAL } else { 0 };
    buf.extend_from_slice(&flags.to_le_bytes());
    buf.extend_from_slice(&[0u8; 24]);
    debug_assert_eq!(buf.len(), 64);
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    crate::out::write_atomic(path, &buf)
}

pub struct Snapshot {
    pub field: Field,
    // kept for restart tooling; the run dispatch only needs the field
    #[allow(dead_code)]
    pub t: f64,
    #[allow(dead_code)]
    pub flags: u64,
}

pub fn read_snapshot(path: &Path) -> io::Result<Snapshot> {
    let mut file = fs::File::open(path)?;
    let mut header = [0u8; 64];
    file.read_exact(&mut header)?;
    if &header[0..8] != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad snapshot magic"));
    }
    let n = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let t = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let flags = u64::from_le_bytes(header[32..40].try_into().unwrap());
    let mut body = vec![0u8; 16 * n];
    file.read_exact(&mut body)?;
    let mut values = Vec::with_capacity(n);
    for chunk in body.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    let grid: Arc<SpectralGrid> = SpectralGrid::new(n, l)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let field = Field::from_values(&grid, values, flags & FLAG_REAL != 0)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    Ok(Snapshot { field, t, flags })
}
