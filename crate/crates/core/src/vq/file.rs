//! `CQVQ` codebook files.
//!
//! Little-endian layout: magic `CQVQ`, `u8` version (1), `u16` dimension,
//! `u32` entry count, `count * dim` IEEE-754 `f32` values, then the `u32`
//! CRC32 of the float payload.

use std::io::{Read, Write};

use super::Codebook;
use crate::error::{Error, Result};

pub const CODEBOOK_MAGIC: &[u8; 4] = b"CQVQ";
pub const CODEBOOK_VERSION: u8 = 1;

pub fn write_codebook<W: Write>(cb: &Codebook, mut out: W) -> Result<()> {
    let dim = u16::try_from(cb.dim())
        .map_err(|_| Error::InvalidParameter(format!("dimension {} too large", cb.dim())))?;
    let size = u32::try_from(cb.len())
        .map_err(|_| Error::InvalidParameter(format!("{} entries too many", cb.len())))?;
    let payload: Vec<u8> = cb.raw().iter().flat_map(|v| v.to_le_bytes()).collect();

    out.write_all(CODEBOOK_MAGIC)?;
    out.write_all(&[CODEBOOK_VERSION])?;
    out.write_all(&dim.to_le_bytes())?;
    out.write_all(&size.to_le_bytes())?;
    out.write_all(&payload)?;
    out.write_all(&crc32fast::hash(&payload).to_le_bytes())?;
    Ok(())
}

fn read_exact_or<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<()> {
    input.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated("codebook")
        } else {
            Error::Io(e)
        }
    })
}

pub fn read_codebook<R: Read>(mut input: R) -> Result<Codebook> {
    let mut header = [0u8; 11];
    read_exact_or(&mut input, &mut header)?;
    if &header[..4] != CODEBOOK_MAGIC {
        return Err(Error::BadMagic { expected: "CQVQ" });
    }
    if header[4] != CODEBOOK_VERSION {
        return Err(Error::UnsupportedVersion {
            what: "codebook",
            version: header[4],
        });
    }
    let dim = u16::from_le_bytes([header[5], header[6]]) as usize;
    let size = u32::from_le_bytes([header[7], header[8], header[9], header[10]]) as usize;
    let count = dim
        .checked_mul(size)
        .filter(|&n| n > 0 && n <= (1 << 26))
        .ok_or_else(|| Error::InvalidParameter(format!("codebook shape {size}x{dim}")))?;

    let mut payload = vec![0u8; count * 4];
    read_exact_or(&mut input, &mut payload)?;
    let mut crc = [0u8; 4];
    read_exact_or(&mut input, &mut crc)?;
    let stored = u32::from_le_bytes(crc);
    let computed = crc32fast::hash(&payload);
    if stored != computed {
        return Err(Error::CrcMismatch { stored, computed });
    }
    let values = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Codebook::new(dim, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_layout() {
        let cb = Codebook::new(2, vec![1.0, -0.5, 0.25, 2.0]).unwrap();
        let mut bytes = Vec::new();
        write_codebook(&cb, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 1 + 2 + 4 + 16 + 4);
        assert_eq!(&bytes[..11], b"CQVQ\x01\x02\x00\x02\x00\x00\x00");
        assert_eq!(&bytes[11..15], &1.0f32.to_le_bytes());
    }

    #[test]
    fn corruption_detected() {
        let cb = Codebook::new(1, vec![0.5; 8]).unwrap();
        let mut bytes = Vec::new();
        write_codebook(&cb, &mut bytes).unwrap();
        bytes[15] ^= 0x40;
        assert!(matches!(read_codebook(&bytes[..]), Err(Error::CrcMismatch { .. })));
        assert!(matches!(read_codebook(&bytes[..20]), Err(Error::Truncated(_))));
        bytes[0] = b'X';
        assert!(matches!(read_codebook(&bytes[..]), Err(Error::BadMagic { .. })));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(dim in 1usize..12, rows in 1usize..40, seed in any::<u32>()) {
            let values: Vec<f32> = (0..dim * rows)
                .map(|i| f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add(i as u32 * 40503) & 0xbf7f_ffff))
                .collect();
            let cb = Codebook::new(dim, values).unwrap();
            let mut bytes = Vec::new();
            write_codebook(&cb, &mut bytes).unwrap();
            let back = read_codebook(&bytes[..]).unwrap();
            prop_assert_eq!(back.dim(), cb.dim());
            let a: Vec<u32> = back.raw().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = cb.raw().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
