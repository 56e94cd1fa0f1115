//! De-quantization, interpolation to the 100 Hz frame rate, conditioning
//! features and fallback LPC synthesis.

mod features;
mod synth;

pub use features::{
    assemble_conditioning, normalize_lpc, read_features, write_features, ConditioningFrame,
    FEATURES_MAGIC, FEATURE_DIM,
};
pub use synth::{synthesize_fallback, FallbackSynth};

use serde::{Deserialize, Serialize};

use crate::analysis::LPC_ORDER;
use crate::bitstream::{CodecVersion, Packet, FRAMES_PER_PACKET};
use crate::error::Result;
use crate::quantizers::{
    inverse_transform_energy, inverse_transform_pitch, CodebookSet, LspQuantizer,
    PitchEnergyQuantizer, PitchEnergyVector,
};
use crate::vq::PredictiveState;

/// Parameters carried by one packet after de-quantization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketParams {
    /// LSP anchor for frame 0.
    pub lsp: [f64; LPC_ORDER],
    /// Pitch/energy at frames 0 and 2.
    pub pitch_energy: [PitchEnergyVector; 2],
    pub voicing: [bool; FRAMES_PER_PACKET],
}

/// Per-frame parameters after interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedFrame {
    pub lsp: [f64; LPC_ORDER],
    pub pitch_energy: PitchEnergyVector,
    pub voiced: bool,
}

impl DecodedFrame {
    pub fn wo(&self) -> f64 {
        inverse_transform_pitch(self.pitch_energy.x_p)
    }

    pub fn energy(&self) -> f64 {
        inverse_transform_energy(self.pitch_energy.x_e)
    }
}

/// Stateful packet de-quantizer. Its predictive state advances exactly like
/// the encoder's.
#[derive(Debug, Clone)]
pub struct Dequantizer<'a> {
    version: CodecVersion,
    lsp: LspQuantizer<'a>,
    pitch_energy: PitchEnergyQuantizer<'a>,
    state: PredictiveState,
}

impl<'a> Dequantizer<'a> {
    pub fn new(books: &'a CodebookSet, version: CodecVersion) -> Self {
        let profile = version.profile();
        Self {
            version,
            lsp: LspQuantizer::new(books, profile.lsp),
            pitch_energy: PitchEnergyQuantizer::new(books, profile.pitch_energy),
            state: PitchEnergyQuantizer::new_state(),
        }
    }

    pub fn version(&self) -> CodecVersion {
        self.version
    }

    pub fn state(&self) -> &PredictiveState {
        &self.state
    }

    pub fn dequantize_packet(&mut self, packet: &Packet) -> Result<PacketParams> {
        let lsp = self.lsp.dequantize(packet.lsp)?;
        let pitch_energy = self
            .pitch_energy
            .dequantize_packet(packet.pitch_energy, &mut self.state)?;
        Ok(PacketParams {
            lsp,
            pitch_energy,
            voicing: packet.voicing,
        })
    }
}

/// The three LSP vectors between two anchors, at 1/4, 2/4 and 3/4.
pub fn interpolate_lsp(
    prev: &[f64; LPC_ORDER],
    next: &[f64; LPC_ORDER],
) -> [[f64; LPC_ORDER]; FRAMES_PER_PACKET - 1] {
    let mut out = [[0.0; LPC_ORDER]; FRAMES_PER_PACKET - 1];
    for (k, frame) in out.iter_mut().enumerate() {
        let t = (k + 1) as f64 / FRAMES_PER_PACKET as f64;
        for i in 0..LPC_ORDER {
            frame[i] = prev[i] + t * (next[i] - prev[i]);
        }
    }
    out
}

/// Midpoint in the (log pitch, dB energy) domain.
pub fn interpolate_pitch_energy(prev: &PitchEnergyVector, next: &PitchEnergyVector) -> PitchEnergyVector {
    prev.lerp(next, 0.5)
}

/// Expands packets into `4 * packets.len()` frames. The final packet holds
/// its own anchor and second sample point since there is nothing to
/// interpolate towards.
pub fn expand_packets(packets: &[PacketParams]) -> Vec<DecodedFrame> {
    let mut frames = Vec::with_capacity(packets.len() * FRAMES_PER_PACKET);
    for (k, p) in packets.iter().enumerate() {
        let (next_lsp, next_pe) = match packets.get(k + 1) {
            Some(n) => (n.lsp, n.pitch_energy[0]),
            None => (p.lsp, p.pitch_energy[1]),
        };
        let between = interpolate_lsp(&p.lsp, &next_lsp);
        let lsp = [p.lsp, between[0], between[1], between[2]];
        let [pe0, pe2] = p.pitch_energy;
        let pe = [
            pe0,
            interpolate_pitch_energy(&pe0, &pe2),
            pe2,
            interpolate_pitch_energy(&pe2, &next_pe),
        ];
        for f in 0..FRAMES_PER_PACKET {
            frames.push(DecodedFrame {
                lsp: lsp[f],
                pitch_energy: pe[f],
                voiced: p.voicing[f],
            });
        }
    }
    frames
}

/// De-quantizes a packet stream and expands it to per-frame parameters.
pub fn decode_frames(books: &CodebookSet, version: CodecVersion, packets: &[Packet]) -> Result<Vec<DecodedFrame>> {
    let mut deq = Dequantizer::new(books, version);
    let params = packets
        .iter()
        .map(|p| deq.dequantize_packet(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(expand_packets(&params))
}
