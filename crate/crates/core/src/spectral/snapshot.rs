//! Binary field snapshots: magic `KP3F`, little-endian header and
//! interleaved `(re, im)` binary64 coefficients in k_x-major order.

use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

use super::field::SpectralField;
use super::grid::GridSpec;
use crate::error::{KpError, Result};

pub const MAGIC: &[u8; 4] = b"KP3F";
pub const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(mut w: W, u: &SpectralField) -> Result<()> {
    let g = &u.grid;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for n in g.dims() {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    for l in g.lengths() {
        w.write_all(&l.to_le_bytes())?;
    }
    w.write_all(&[u.real_flag as u8])?;
    let mut buf = Vec::with_capacity(16 * u.coeff.len());
    for c in &u.coeff {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| KpError::Format(format!("truncated snapshot header: {e}")))?;
    Ok(b)
}

/// Reads a snapshot. The dealias flag is not part of the format and is
/// supplied by the caller.
pub fn read_snapshot<R: Read>(mut r: R, dealias: bool) -> Result<SpectralField> {
    if &take::<4, _>(&mut r)? != MAGIC {
        return Err(KpError::Format("bad magic, expected KP3F".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(KpError::Format(format!("unsupported snapshot version {version}")));
    }
    let mut modes = [0usize; 3];
    for m in modes.iter_mut() {
        *m = u32::from_le_bytes(take(&mut r)?) as usize;
    }
    let mut lengths = [0f64; 3];
    for l in lengths.iter_mut() {
        *l = f64::from_le_bytes(take(&mut r)?);
    }
    let real_flag = match take::<1, _>(&mut r)?[0] {
        0 => false,
        1 => true,
        b => return Err(KpError::Format(format!("real_flag byte must be 0 or 1, got {b}"))),
    };
    let grid = GridSpec::new(modes, lengths, dealias)?;
    let mut raw = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut raw)
        .map_err(|e| KpError::Format(format!("truncated coefficient block: {e}")))?;
    let coeff = raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(KpError::Format(format!("{} trailing bytes after coefficients", rest.len())));
    }
    Ok(SpectralField { grid, coeff, real_flag })
}

pub fn save(path: &Path, u: &SpectralField) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_snapshot(&mut w, u)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path, dealias: bool) -> Result<SpectralField> {
    let f = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(f), dealias)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_bit_exact() {
        let g = GridSpec::new([8, 8, 8], [1.0, 2.0, 3.0], false).unwrap();
        let mut u = SpectralField::zeros(&g, false);
        u.set_mode([1, 0, 0], Complex64::new(0.5, -2.0)).unwrap();
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &u).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 12 + 24 + 1 + 16 * 512);
        assert_eq!(&bytes[..4], b"KP3F");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &8u32.to_le_bytes());
        assert_eq!(&bytes[20..28], &1.0f64.to_le_bytes());
        assert_eq!(bytes[44], 0);
        // mode (1,0,0) sits at linear index 64.
        let off = 45 + 16 * 64;
        assert_eq!(&bytes[off..off + 8], &0.5f64.to_le_bytes());
        assert_eq!(&bytes[off + 8..off + 16], &(-2.0f64).to_le_bytes());
        let back = read_snapshot(&bytes[..], false).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(read_snapshot(&b"KP3X"[..], false).is_err());
        let g = GridSpec::new([8, 8, 8], [1.0; 3], false).unwrap();
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &SpectralField::zeros(&g, true)).unwrap();
        assert!(read_snapshot(&bytes[..bytes.len() - 1], false).is_err());
        bytes.push(0);
        assert!(read_snapshot(&bytes[..], false).is_err());
    }
}
