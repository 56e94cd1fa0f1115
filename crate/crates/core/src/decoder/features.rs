//! 23-value conditioning frames and the `CQFT` feature file.
//!
//! Frame layout: `lsp[0..10]`, energy in dB (`x_e`), pitch `wo` in
//! radians/sample, voicing (0 or 1), normalized `lpc[0..10]`.
//!
//! File layout (little-endian): magic `CQFT`, `u32` frame count, `u16`
//! dimension (23), then `count * 23` `f32` values row-major.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::DecodedFrame;
use crate::analysis::{check_lsp_order, lsp_to_lpc, LPC_ORDER};
use crate::error::{Error, Result};

pub const FEATURE_DIM: usize = 2 * LPC_ORDER + 3;
pub const FEATURES_MAGIC: &[u8; 4] = b"CQFT";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningFrame {
    pub lsp: [f64; LPC_ORDER],
    pub energy_db: f64,
    /// Not gated by voicing; the consumer multiplies by the voicing flag.
    pub pitch: f64,
    pub voicing: f64,
    pub lpc: [f64; LPC_ORDER],
}

impl ConditioningFrame {
    pub fn from_decoded(frame: &DecodedFrame) -> Result<Self> {
        check_lsp_order(&frame.lsp)?;
        Ok(Self {
            lsp: frame.lsp,
            energy_db: frame.pitch_energy.x_e,
            pitch: frame.wo(),
            voicing: if frame.voiced { 1.0 } else { 0.0 },
            lpc: normalize_lpc(&lsp_to_lpc(&frame.lsp)?),
        })
    }

    pub fn is_voiced(&self) -> bool {
        self.voicing > 0.5
    }

    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        out[..LPC_ORDER].copy_from_slice(&self.lsp);
        out[LPC_ORDER] = self.energy_db;
        out[LPC_ORDER + 1] = self.pitch;
        out[LPC_ORDER + 2] = self.voicing;
        out[LPC_ORDER + 3..].copy_from_slice(&self.lpc);
        out
    }

    pub fn from_array(values: &[f64; FEATURE_DIM]) -> Self {
        let mut lsp = [0.0; LPC_ORDER];
        let mut lpc = [0.0; LPC_ORDER];
        lsp.copy_from_slice(&values[..LPC_ORDER]);
        lpc.copy_from_slice(&values[LPC_ORDER + 3..]);
        Self {
            lsp,
            energy_db: values[LPC_ORDER],
            pitch: values[LPC_ORDER + 1],
            voicing: values[LPC_ORDER + 2],
            lpc,
        }
    }
}

/// Scales `a` by `1 / max(1, max |a_i|)` so every component is in [-1, 1].
pub fn normalize_lpc(a: &[f64; LPC_ORDER]) -> [f64; LPC_ORDER] {
    let peak = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.map(|v| v / peak)
}

pub fn assemble_conditioning(frames: &[DecodedFrame]) -> Result<Vec<ConditioningFrame>> {
    frames.iter().map(ConditioningFrame::from_decoded).collect()
}

pub fn write_features<W: Write>(frames: &[ConditioningFrame], mut out: W) -> Result<()> {
    let count = u32::try_from(frames.len())
        .map_err(|_| Error::InvalidParameter("too many feature frames".into()))?;
    out.write_all(FEATURES_MAGIC)?;
    out.write_all(&count.to_le_bytes())?;
    out.write_all(&(FEATURE_DIM as u16).to_le_bytes())?;
    let mut payload = Vec::with_capacity(frames.len() * FEATURE_DIM * 4);
    for f in frames {
        for v in f.to_array() {
            payload.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out.write_all(&payload)?;
    Ok(())
}

/// Reads a feature file as `f32` rows.
pub fn read_features<R: Read>(mut input: R) -> Result<Vec<[f32; FEATURE_DIM]>> {
    let truncated = |e: std::io::Error| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated("feature file")
        } else {
            Error::Io(e)
        }
    };
    let mut header = [0u8; 10];
    input.read_exact(&mut header).map_err(truncated)?;
    if &header[..4] != FEATURES_MAGIC {
        return Err(Error::BadMagic { expected: "CQFT" });
    }
    let count = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
    let dim = u16::from_le_bytes([header[8], header[9]]) as usize;
    if dim != FEATURE_DIM {
        return Err(Error::DimensionMismatch {
            expected: FEATURE_DIM,
            actual: dim,
        });
    }
    let mut rows = Vec::with_capacity(count.min(1 << 20));
    let mut buf = [0u8; FEATURE_DIM * 4];
    for _ in 0..count {
        input.read_exact(&mut buf).map_err(truncated)?;
        let mut row = [0f32; FEATURE_DIM];
        for (v, b) in row.iter_mut().zip(buf.chunks_exact(4)) {
            *v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        }
        rows.push(row);
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::InvalidParameter("trailing bytes after feature frames".into()));
    }
    Ok(rows)
}
