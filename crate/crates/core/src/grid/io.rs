//! Flat binary field format.
//!
//! A 16-byte header (`PUCF`, then `dim`, `res` and the domain tag as
//! little-endian `u32`; tag 0 is the torus, 1 the cube) followed by the
//! values as little-endian `f64` in row-major order.

use std::io::{Read, Write};

use super::{Domain, Grid, ScalarField};
use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 4] = b"PUCF";

pub fn write_field<W: Write>(u: &ScalarField, mut out: W) -> Result<()> {
    let g = u.grid();
    let tag: u32 = match g.domain() {
        Domain::Torus => 0,
        Domain::Box => 1,
    };
    let mut buf = Vec::with_capacity(16 + 8 * u.len());
    buf.extend_from_slice(FIELD_MAGIC);
    buf.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.res() as u32).to_le_bytes());
    buf.extend_from_slice(&tag.to_le_bytes());
    for v in u.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut input: R) -> Result<ScalarField> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if &header[..4] != FIELD_MAGIC {
        return Err(Error::Format("missing PUCF magic".into()));
    }
    let word = |k: usize| u32::from_le_bytes(header[4 * k..4 * k + 4].try_into().unwrap()) as usize;
    let (dim, res, tag) = (word(1), word(2), word(3));
    let grid = match tag {
        0 => Grid::torus(dim, res)?,
        1 => Grid::unit_box(dim, res)?,
        t => return Err(Error::Format(format!("unknown domain tag {t}"))),
    };
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "expected {} value bytes, found {}",
            8 * grid.len(),
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScalarField::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;

    #[test]
    fn round_trip() {
        let g = Grid::unit_box(2, 8).unwrap();
        let u = sample(&g, |x| x[0] - 3.0 * x[1] + 0.1).unwrap();
        let mut buf = Vec::new();
        write_field(&u, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 8 * 64);
        assert_eq!(&buf[..4], b"PUCF");
        assert_eq!(read_field(buf.as_slice()).unwrap(), u);
    }

    #[test]
    fn rejects_truncated_and_foreign() {
        let g = Grid::torus(1, 8).unwrap();
        let mut buf = Vec::new();
        write_field(&ScalarField::constant(g, 1.0), &mut buf).unwrap();
        assert!(read_field(&buf[..buf.len() - 1]).is_err());
        buf[0] = b'X';
        assert!(matches!(read_field(buf.as_slice()), Err(Error::Format(_))));
    }
}
