//! Flat binary field format and CSV export.
//!
//! Layout: 16-byte header (`b"BPFD"`, `u32 nx`, `u32 ny`, `u32 dtype`) followed by the
//! row-major values, all little-endian. `dtype` is 0 for `f64` and 1 for complex128
//! stored as interleaved `(re, im)` pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{ComplexField, RealField};
use crate::error::{Error, Result};
use crate::spectral::GridSpec;

const MAGIC: &[u8; 4] = b"BPFD";
const DTYPE_REAL64: u32 = 0;
const DTYPE_COMPLEX128: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Real(RealField),
    Complex(ComplexField),
}

impl FieldData {
    pub fn grid(&self) -> &GridSpec {
        match self {
            Self::Real(f) => f.grid(),
            Self::Complex(f) => f.grid(),
        }
    }

    pub fn into_complex(self) -> ComplexField {
        match self {
            Self::Real(f) => f.to_complex(),
            Self::Complex(f) => f,
        }
    }

    /// Real field; complex data is accepted only if every imaginary part is zero.
    pub fn into_real(self) -> Result<RealField> {
        match self {
            Self::Real(f) => Ok(f),
            Self::Complex(f) => {
                if f.data().iter().any(|v| v.im != 0.0) {
                    return Err(Error::Format("expected a real field, found complex data".into()));
                }
                Ok(f.real_part())
            }
        }
    }
}

pub fn write_field<W: Write>(mut w: W, field: &FieldData) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(grid.nx as u32).to_le_bytes())?;
    w.write_all(&(grid.ny as u32).to_le_bytes())?;
    match field {
        FieldData::Real(f) => {
            w.write_all(&DTYPE_REAL64.to_le_bytes())?;
            for v in f.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        FieldData::Complex(f) => {
            w.write_all(&DTYPE_COMPLEX128.to_le_bytes())?;
            for v in f.data() {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a field and attaches `grid`, whose shape must match the header.
pub fn read_field<R: Read>(mut r: R, grid: &GridSpec) -> Result<FieldData> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let nx = read_u32(&mut r)? as usize;
    let ny = read_u32(&mut r)? as usize;
    if nx != grid.nx || ny != grid.ny {
        return Err(crate::error::mismatch(format!("{}x{}", grid.nx, grid.ny), format!("{nx}x{ny}")));
    }
    let n = nx * ny;
    match read_u32(&mut r)? {
        DTYPE_REAL64 => {
            let data = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
            Ok(FieldData::Real(RealField::from_vec(*grid, data)?))
        }
        DTYPE_COMPLEX128 => {
            let data = (0..n)
                .map(|_| Ok(Complex64::new(read_f64(&mut r)?, read_f64(&mut r)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(FieldData::Complex(ComplexField::from_vec(*grid, data)?))
        }
        other => Err(Error::Format(format!("unknown dtype {other}"))),
    }
}

pub fn write_field_file(path: impl AsRef<Path>, field: &FieldData) -> Result<()> {
    write_field(BufWriter::new(File::create(path)?), field)
}

pub fn read_field_file(path: impl AsRef<Path>, grid: &GridSpec) -> Result<FieldData> {
    read_field(BufReader::new(File::open(path)?), grid)
}

/// CSV with columns `i,j,x,y,value`.
pub fn write_real_csv<W: Write>(mut w: W, field: &RealField) -> Result<()> {
    let g = field.grid();
    writeln!(w, "i,j,x,y,value")?;
    for i in 0..g.nx {
        for j in 0..g.ny {
            writeln!(w, "{i},{j},{},{},{:e}", g.x(i), g.y(j), field.get(i, j))?;
        }
    }
    Ok(())
}

/// CSV with columns `i,j,x,y,re,im`.
pub fn write_complex_csv<W: Write>(mut w: W, field: &ComplexField) -> Result<()> {
    let g = field.grid();
    writeln!(w, "i,j,x,y,re,im")?;
    for i in 0..g.nx {
        for j in 0..g.ny {
            let v = field.get(i, j);
            writeln!(w, "{i},{j},{},{},{:e},{:e}", g.x(i), g.y(j), v.re, v.im)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::RngState;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_round_trip(seed in any::<u64>(), nx in 4usize..12, ny in 4usize..12) {
            let g = GridSpec::periodic(nx, ny, 1.0, 2.0).unwrap();
            let c = ComplexField::random_normal(&g, &mut RngState::new(seed));
            let mut buf = Vec::new();
            write_field(&mut buf, &FieldData::Complex(c.clone())).unwrap();
            prop_assert_eq!(buf.len(), 16 + 16 * nx * ny);
            prop_assert_eq!(read_field(&buf[..], &g).unwrap(), FieldData::Complex(c.clone()));

            let r = c.real_part();
            let mut buf = Vec::new();
            write_field(&mut buf, &FieldData::Real(r.clone())).unwrap();
            prop_assert_eq!(buf.len(), 16 + 8 * nx * ny);
            prop_assert_eq!(read_field(&buf[..], &g).unwrap(), FieldData::Real(r));
        }
    }

    #[test]
    fn header_layout() {
        let g = GridSpec::periodic(4, 5, 1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &FieldData::Real(RealField::zeros(&g))).unwrap();
        assert_eq!(&buf[..4], b"BPFD");
        assert_eq!(&buf[4..8], &4u32.to_le_bytes());
        assert_eq!(&buf[8..12], &5u32.to_le_bytes());
        assert_eq!(&buf[12..16], &0u32.to_le_bytes());
    }

    #[test]
    fn rejects_bad_input() {
        let g = GridSpec::periodic(4, 4, 1.0, 1.0).unwrap();
        assert!(read_field(&b"XXXX\0\0\0\0"[..], &g).is_err());
        let mut buf = Vec::new();
        write_field(&mut buf, &FieldData::Real(RealField::zeros(&g))).unwrap();
        let other = GridSpec::periodic(8, 4, 1.0, 1.0).unwrap();
        assert!(read_field(&buf[..], &other).is_err());
        assert!(read_field(&buf[..20], &g).is_err());
    }
}
