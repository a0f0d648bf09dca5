//! Binary matrix dump: a 32-byte little-endian header followed by row-major complex doubles.
//!
//! Header layout: magic `b"WBEM"` (4 bytes), rows `u32`, cols `u32`, operator tag `u32`
//! (1 = V, 2 = K, 3 = K', 4 = W, 0 = other), `Re s` `f64`, `Im s` `f64`.

use crate::C64;
use faer::Mat;
use std::io::{self, Read, Write};

pub const DUMP_MAGIC: [u8; 4] = *b"WBEM";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DumpHeader {
    pub rows: u32,
    pub cols: u32,
    pub tag: u32,
    pub s: C64,
}

pub fn write_matrix_dump<W: Write>(out: &mut W, m: &Mat<C64>, tag: u32, s: C64) -> io::Result<()> {
    let too_big = |n: usize| u32::try_from(n).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "matrix too large"));
    out.write_all(&DUMP_MAGIC)?;
    out.write_all(&too_big(m.nrows())?.to_le_bytes())?;
    out.write_all(&too_big(m.ncols())?.to_le_bytes())?;
    out.write_all(&tag.to_le_bytes())?;
    out.write_all(&s.re.to_le_bytes())?;
    out.write_all(&s.im.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * m.ncols());
    for i in 0..m.nrows() {
        buf.clear();
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_matrix_dump<R: Read>(input: &mut R) -> io::Result<(DumpHeader, Mat<C64>)> {
    let mut head = [0u8; 32];
    input.read_exact(&mut head)?;
    if head[0..4] != DUMP_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad matrix dump magic"));
    }
    let u = |k: usize| u32::from_le_bytes(head[k..k + 4].try_into().expect("4 bytes"));
    let f = |k: usize| f64::from_le_bytes(head[k..k + 8].try_into().expect("8 bytes"));
    let header = DumpHeader { rows: u(4), cols: u(8), tag: u(12), s: C64::new(f(16), f(24)) };
    let (r, c) = (header.rows as usize, header.cols as usize);
    let mut data = vec![0u8; 16 * r * c];
    input.read_exact(&mut data)?;
    let m = Mat::from_fn(r, c, |i, j| {
        let k = 16 * (i * c + j);
        C64::new(
            f64::from_le_bytes(data[k..k + 8].try_into().expect("8 bytes")),
            f64::from_le_bytes(data[k + 8..k + 16].try_into().expect("8 bytes")),
        )
    });
    Ok((header, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip() {
        let m = Mat::from_fn(3, 2, |i, j| C64::new(i as f64 + 0.5, -(j as f64) * 1e-300));
        let mut buf = Vec::new();
        write_matrix_dump(&mut buf, &m, 2, C64::new(1.0, -2.0)).unwrap();
        assert_eq!(buf.len(), 32 + 16 * 6);
        let (h, back) = read_matrix_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(h, DumpHeader { rows: 3, cols: 2, tag: 2, s: C64::new(1.0, -2.0) });
        assert_eq!(back, m);
        buf[0] = b'X';
        assert!(read_matrix_dump(&mut buf.as_slice()).is_err());
    }
}
