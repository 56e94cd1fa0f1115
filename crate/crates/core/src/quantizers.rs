//! LSP and joint pitch/energy quantizers in fine (27/16-bit) and coarse
//! (23/12-bit) modes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{FrameParams, LPC_ORDER, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::vq::{
    predictive_dequantize, predictive_quantize, quantize_two_stage_split, split_reconstruct,
    Codebook, PredictiveState, PredictorConfig, SplitIndices,
};

/// Lowest pitch of the tracker range; `x_p = 0` maps here.
pub const LOWEST_F0_HZ: f64 = 50.0;
/// Additive floor inside the energy logarithm.
pub const ENERGY_FLOOR: f64 = 1e-4;
pub const PITCH_PREDICTION: f64 = 0.8;
pub const ENERGY_PREDICTION: f64 = 0.9;
/// Per-dimension error weights `(x_p, x_e)` for the joint pitch/energy
/// search and training.
pub const PITCH_ENERGY_WEIGHTS: [f64; 2] = [30.0, 1.0];
/// Minimum spacing between decoded LSPs, 50 Hz expressed in radians.
pub const MIN_LSP_GAP: f64 = 2.0 * PI * 50.0 / SAMPLE_RATE;

/// Pitch transform: `x_p = log2((wo / π) · (4000 / 50))`.
pub fn transform_pitch(wo: f64) -> Result<f64> {
    if !(wo > 0.0) {
        return Err(Error::InvalidParameter(format!("pitch {wo} must be > 0")));
    }
    Ok(((wo / PI) * (SAMPLE_RATE / 2.0 / LOWEST_F0_HZ)).log2())
}

pub fn inverse_transform_pitch(x_p: f64) -> f64 {
    PI * x_p.exp2() * LOWEST_F0_HZ / (SAMPLE_RATE / 2.0)
}

/// Energy transform: `x_e = 10 · log10(e + 1e-4)`.
pub fn transform_energy(e: f64) -> Result<f64> {
    if !(e >= 0.0) {
        return Err(Error::InvalidParameter(format!("energy {e} must be >= 0")));
    }
    Ok(10.0 * (e + ENERGY_FLOOR).log10())
}

pub fn inverse_transform_energy(x_e: f64) -> f64 {
    (10f64.powf(x_e / 10.0) - ENERGY_FLOOR).max(0.0)
}

/// One pitch/energy sample point in the transformed domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchEnergyVector {
    pub x_p: f64,
    pub x_e: f64,
}

impl PitchEnergyVector {
    pub fn from_params(p: &FrameParams) -> Result<Self> {
        Ok(Self {
            x_p: transform_pitch(p.wo)?.clamp(0.0, 3.0),
            x_e: transform_energy(p.energy)?,
        })
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.x_p, self.x_e]
    }

    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        Self {
            x_p: self.x_p + t * (other.x_p - self.x_p),
            x_e: self.x_e + t * (other.x_e - self.x_e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LspMode {
    /// 9 + 9 + 9 bits.
    Fine27,
    /// 9 + 7 + 7 bits.
    Coarse23,
}

impl LspMode {
    pub fn bits(self) -> u32 {
        match self {
            LspMode::Fine27 => 27,
            LspMode::Coarse23 => 23,
        }
    }

    pub fn field_widths(self) -> [u32; 3] {
        match self {
            LspMode::Fine27 => [9, 9, 9],
            LspMode::Coarse23 => [9, 7, 7],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PitchEnergyMode {
    /// Two 8-bit indices into a 256-entry book.
    Fine16,
    /// Two 6-bit indices into a 64-entry book.
    Coarse12,
}

impl PitchEnergyMode {
    pub fn bits(self) -> u32 {
        2 * self.index_bits()
    }

    pub fn index_bits(self) -> u32 {
        match self {
            PitchEnergyMode::Fine16 => 8,
            PitchEnergyMode::Coarse12 => 6,
        }
    }

    pub fn book_size(self) -> usize {
        1 << self.index_bits()
    }
}

/// Bit-allocation profile: which LSP and pitch/energy quantizer a codec
/// version uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantizerProfile {
    pub lsp: LspMode,
    pub pitch_energy: PitchEnergyMode,
}

impl QuantizerProfile {
    pub fn lsp_bits(&self) -> u32 {
        self.lsp.bits()
    }

    pub fn pe_bits(&self) -> u32 {
        self.pitch_energy.bits()
    }
}

/// All trained codebooks needed by every profile.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSet {
    pub lsp_stage1: Codebook,
    pub lsp_odd_fine: Codebook,
    pub lsp_even_fine: Codebook,
    pub lsp_odd_coarse: Codebook,
    pub lsp_even_coarse: Codebook,
    pub pe_fine: Codebook,
    pub pe_coarse: Codebook,
}

/// File names used when a [`CodebookSet`] is stored in a directory.
pub const CODEBOOK_FILES: [&str; 7] = [
    "lsp_stage1.cqvq",
    "lsp_odd_512.cqvq",
    "lsp_even_512.cqvq",
    "lsp_odd_128.cqvq",
    "lsp_even_128.cqvq",
    "pitch_energy_256.cqvq",
    "pitch_energy_64.cqvq",
];

impl CodebookSet {
    pub fn books(&self) -> [&Codebook; 7] {
        [
            &self.lsp_stage1,
            &self.lsp_odd_fine,
            &self.lsp_even_fine,
            &self.lsp_odd_coarse,
            &self.lsp_even_coarse,
            &self.pe_fine,
            &self.pe_coarse,
        ]
    }

    pub fn from_books(books: [Codebook; 7]) -> Result<Self> {
        let [lsp_stage1, lsp_odd_fine, lsp_even_fine, lsp_odd_coarse, lsp_even_coarse, pe_fine, pe_coarse] =
            books;
        let set = Self {
            lsp_stage1,
            lsp_odd_fine,
            lsp_even_fine,
            lsp_odd_coarse,
            lsp_even_coarse,
            pe_fine,
            pe_coarse,
        };
        set.validate()?;
        Ok(set)
    }

    /// Checks the shipped shapes: 512x10, 512x5 (x2), 128x5 (x2), 256x2, 64x2.
    pub fn validate(&self) -> Result<()> {
        let expected = [(512, 10), (512, 5), (512, 5), (128, 5), (128, 5), (256, 2), (64, 2)];
        for ((cb, (size, dim)), name) in self.books().iter().zip(expected).zip(CODEBOOK_FILES) {
            if cb.len() != size || cb.dim() != dim {
                return Err(Error::InvalidParameter(format!(
                    "{name}: expected {size}x{dim}, got {}x{}",
                    cb.len(),
                    cb.dim()
                )));
            }
        }
        Ok(())
    }

    /// A structurally valid set of random books: sorted LSP vectors in
    /// stage 1, small residuals in stage 2 and plausible pitch/energy
    /// residuals. Useful where trained books are not needed.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut book = |size: usize, dim: usize, f: &mut dyn FnMut(&mut ChaCha8Rng, usize) -> f32| {
            let values = (0..size * dim).map(|i| f(&mut rng, i % dim)).collect();
            Codebook::new(dim, values).expect("non-empty book")
        };
        let mut lsp_rows = Vec::with_capacity(512 * LPC_ORDER);
        let mut stage1 = book(512, LPC_ORDER, &mut |r, _| r.random_range(0.05f32..3.09));
        for row in stage1.entries() {
            let mut v = row.to_vec();
            v.sort_by(f32::total_cmp);
            lsp_rows.extend(v);
        }
        stage1 = Codebook::new(LPC_ORDER, lsp_rows).expect("stage-1 shape");
        let mut residual = |size| book(size, 5, &mut |r, _| r.random_range(-0.08f32..0.08));
        let (odd_fine, even_fine) = (residual(512), residual(512));
        let (odd_coarse, even_coarse) = (residual(128), residual(128));
        let mut pe = |size| {
            book(size, 2, &mut |r, d| {
                if d == 0 {
                    r.random_range(-0.4f32..0.8)
                } else {
                    r.random_range(-12.0f32..6.0)
                }
            })
        };
        let (pe_fine, pe_coarse) = (pe(256), pe(64));
        Self {
            lsp_stage1: stage1,
            lsp_odd_fine: odd_fine,
            lsp_even_fine: even_fine,
            lsp_odd_coarse: odd_coarse,
            lsp_even_coarse: even_coarse,
            pe_fine,
            pe_coarse,
        }
    }

    pub fn lsp_split(&self, mode: LspMode) -> (&Codebook, &Codebook) {
        match mode {
            LspMode::Fine27 => (&self.lsp_odd_fine, &self.lsp_even_fine),
            LspMode::Coarse23 => (&self.lsp_odd_coarse, &self.lsp_even_coarse),
        }
    }

    pub fn pitch_energy(&self, mode: PitchEnergyMode) -> &Codebook {
        match mode {
            PitchEnergyMode::Fine16 => &self.pe_fine,
            PitchEnergyMode::Coarse12 => &self.pe_coarse,
        }
    }
}

/// Sorts and spreads LSPs so consecutive values are at least
/// [`MIN_LSP_GAP`] apart and inside (0, π).
pub fn enforce_lsp_stability(lsp: &mut [f64; LPC_ORDER]) {
    lsp.sort_by(f64::total_cmp);
    // symmetric push-apart passes
    for _ in 0..10 {
        let mut moved = false;
        for i in 1..LPC_ORDER {
            let gap = lsp[i] - lsp[i - 1];
            if gap < MIN_LSP_GAP {
                let mid = 0.5 * (lsp[i] + lsp[i - 1]);
                lsp[i - 1] = mid - 0.5 * MIN_LSP_GAP;
                lsp[i] = mid + 0.5 * MIN_LSP_GAP;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    // guarantee the bounds and spacing whatever the passes left behind
    let mut floor = MIN_LSP_GAP;
    for w in lsp.iter_mut() {
        if !(*w >= floor) {
            *w = floor;
        }
        floor = *w + MIN_LSP_GAP;
    }
    let mut ceiling = PI - MIN_LSP_GAP;
    for w in lsp.iter_mut().rev() {
        if *w > ceiling {
            *w = ceiling;
        }
        ceiling = *w - MIN_LSP_GAP;
    }
}

/// Indices of one LSP anchor.
pub type LspIndices = [u16; 3];

#[derive(Debug, Clone, Copy)]
pub struct LspQuantizer<'a> {
    books: &'a CodebookSet,
    mode: LspMode,
}

impl<'a> LspQuantizer<'a> {
    pub fn new(books: &'a CodebookSet, mode: LspMode) -> Self {
        Self { books, mode }
    }

    pub fn mode(&self) -> LspMode {
        self.mode
    }

    pub fn quantize(&self, lsp: &[f64; LPC_ORDER]) -> Result<(LspIndices, [f64; LPC_ORDER])> {
        crate::analysis::check_lsp_order(lsp)?;
        let (odd, even) = self.books.lsp_split(self.mode);
        let (idx, _) = quantize_two_stage_split(&self.books.lsp_stage1, odd, even, lsp)?;
        let indices = [idx.stage1 as u16, idx.odd as u16, idx.even as u16];
        Ok((indices, self.dequantize(indices)?))
    }

    /// Reconstruction with stability enforcement.
    pub fn dequantize(&self, indices: LspIndices) -> Result<[f64; LPC_ORDER]> {
        let (odd, even) = self.books.lsp_split(self.mode);
        let idx = SplitIndices {
            stage1: indices[0] as usize,
            odd: indices[1] as usize,
            even: indices[2] as usize,
        };
        for (i, (cb, width)) in [&self.books.lsp_stage1, odd, even]
            .iter()
            .zip(self.mode.field_widths())
            .enumerate()
        {
            if indices[i] as usize >= cb.len() || (indices[i] as u32) >> width != 0 {
                return Err(Error::FieldOverflow {
                    field: "lsp",
                    value: indices[i] as u32,
                    width,
                });
            }
        }
        let raw = split_reconstruct(&self.books.lsp_stage1, odd, even, idx);
        let mut lsp = [0.0; LPC_ORDER];
        lsp.copy_from_slice(&raw);
        enforce_lsp_stability(&mut lsp);
        Ok(lsp)
    }
}

pub fn pitch_energy_predictor() -> PredictorConfig {
    PredictorConfig::new(vec![PITCH_PREDICTION, ENERGY_PREDICTION])
        .expect("shipped prediction coefficients are in range")
}

/// Joint predictive quantizer for the two pitch/energy sample points of a
/// packet (frames 0 and 2).
#[derive(Debug, Clone)]
pub struct PitchEnergyQuantizer<'a> {
    book: &'a Codebook,
    mode: PitchEnergyMode,
    predictor: PredictorConfig,
}

impl<'a> PitchEnergyQuantizer<'a> {
    pub fn new(books: &'a CodebookSet, mode: PitchEnergyMode) -> Self {
        Self {
            book: books.pitch_energy(mode),
            mode,
            predictor: pitch_energy_predictor(),
        }
    }

    pub fn mode(&self) -> PitchEnergyMode {
        self.mode
    }

    pub fn new_state() -> PredictiveState {
        PredictiveState::new(2)
    }

    pub fn quantize_packet(
        &self,
        samples: &[PitchEnergyVector; 2],
        state: &mut PredictiveState,
    ) -> Result<([u16; 2], [PitchEnergyVector; 2])> {
        let mut indices = [0u16; 2];
        let mut recon = [PitchEnergyVector { x_p: 0.0, x_e: 0.0 }; 2];
        for (k, s) in samples.iter().enumerate() {
            let (i, rec) = predictive_quantize(
                self.book,
                &self.predictor,
                state,
                &s.as_array(),
                Some(&PITCH_ENERGY_WEIGHTS),
            )?;
            indices[k] = i as u16;
            recon[k] = PitchEnergyVector {
                x_p: rec[0],
                x_e: rec[1],
            };
        }
        Ok((indices, recon))
    }

    pub fn dequantize_packet(
        &self,
        indices: [u16; 2],
        state: &mut PredictiveState,
    ) -> Result<[PitchEnergyVector; 2]> {
        let mut recon = [PitchEnergyVector { x_p: 0.0, x_e: 0.0 }; 2];
        for (k, &i) in indices.iter().enumerate() {
            if (i as u32) >> self.mode.index_bits() != 0 {
                return Err(Error::FieldOverflow {
                    field: "pitch_energy",
                    value: i as u32,
                    width: self.mode.index_bits(),
                });
            }
            let rec = predictive_dequantize(self.book, &self.predictor, state, i as usize)?;
            recon[k] = PitchEnergyVector {
                x_p: rec[0],
                x_e: rec[1],
            };
        }
        Ok(recon)
    }
}
