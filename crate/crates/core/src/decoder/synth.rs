//! Fallback LPC synthesis at 8 kHz.
//!
//! Each frame excites `1/A(z)` with a unit pulse train (voiced) or unit
//! variance uniform noise (unvoiced). The gain `g` is chosen so the frame's
//! output `z + g·s` has the target mean-square energy, where `z` is the
//! zero-input response left over from the previous frame and `s` the
//! zero-state response to the excitation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ConditioningFrame;
use crate::analysis::{lsp_to_lpc, FRAME_LEN, LPC_ORDER};
use crate::error::Result;
use crate::quantizers::inverse_transform_energy;

const NOISE_HALF_WIDTH: f64 = 1.732_050_807_568_877_2; // sqrt(3)

#[derive(Debug, Clone)]
pub struct FallbackSynth {
    /// Past outputs, most recent first.
    memory: [f64; LPC_ORDER],
    /// Fraction of a pitch period elapsed since the last pulse.
    phase: f64,
    /// Part of a pulse that spills into the next sample.
    carry: f64,
    rng: ChaCha8Rng,
}

fn filter(a: &[f64; LPC_ORDER], memory: &mut [f64; LPC_ORDER], x: &[f64; FRAME_LEN]) -> [f64; FRAME_LEN] {
    let mut y = [0.0; FRAME_LEN];
    for n in 0..FRAME_LEN {
        let fb: f64 = a.iter().zip(memory.iter()).map(|(a, m)| a * m).sum();
        y[n] = x[n] - fb;
        memory.copy_within(0..LPC_ORDER - 1, 1);
        memory[0] = y[n];
    }
    y
}

impl FallbackSynth {
    pub fn new(seed: u64) -> Self {
        Self {
            memory: [0.0; LPC_ORDER],
            // start with a pulse on the first voiced sample
            phase: 1.0,
            carry: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn excitation(&mut self, frame: &ConditioningFrame) -> [f64; FRAME_LEN] {
        let mut x = [0.0; FRAME_LEN];
        if frame.is_voiced() {
            let step = frame.pitch / (2.0 * std::f64::consts::PI);
            for n in 0..FRAME_LEN {
                x[n] += std::mem::take(&mut self.carry);
                let next = self.phase + step;
                if next >= 1.0 - 1e-6 {
                    // pulse falls a fraction `delta` of the way to sample n+1;
                    // split it linearly between the two samples
                    let delta = ((1.0 - self.phase) / step).clamp(0.0, 1.0);
                    x[n] += 1.0 - delta;
                    self.carry = delta;
                    self.phase = next - 1.0;
                } else {
                    self.phase = next;
                }
            }
        } else {
            self.carry = 0.0;
            for v in x.iter_mut() {
                *v = self.rng.random_range(-NOISE_HALF_WIDTH..NOISE_HALF_WIDTH);
            }
        }
        x
    }

    pub fn synthesize_frame(&mut self, frame: &ConditioningFrame) -> Result<[f64; FRAME_LEN]> {
        let a = lsp_to_lpc(&frame.lsp)?;
        let excitation = self.excitation(frame);

        let zir = filter(&a, &mut self.memory.clone(), &[0.0; FRAME_LEN]);
        let zsr = filter(&a, &mut [0.0; LPC_ORDER], &excitation);
        let ss: f64 = zsr.iter().map(|v| v * v).sum();
        let zs: f64 = zir.iter().zip(&zsr).map(|(z, s)| z * s).sum();
        let zz: f64 = zir.iter().map(|v| v * v).sum();
        let target = FRAME_LEN as f64 * inverse_transform_energy(frame.energy_db);

        // g²·ss + 2g·zs + zz = target, taking the non-negative root; when the
        // ringing alone overshoots, use the gain that minimizes output energy
        let gain = if ss <= 0.0 {
            0.0
        } else {
            let disc = zs * zs - ss * (zz - target);
            if disc >= 0.0 {
                ((-zs + disc.sqrt()) / ss).max(0.0)
            } else {
                (-zs / ss).max(0.0)
            }
        };
        let scaled = excitation.map(|v| gain * v);
        Ok(filter(&a, &mut self.memory, &scaled))
    }
}

/// Synthesizes `80 * frames.len()` samples.
pub fn synthesize_fallback(frames: &[ConditioningFrame], seed: u64) -> Result<Vec<f64>> {
    let mut synth = FallbackSynth::new(seed);
    let mut out = Vec::with_capacity(frames.len() * FRAME_LEN);
    for f in frames {
        out.extend_from_slice(&synth.synthesize_frame(f)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::flat_lsp;
    use crate::decoder::DecodedFrame;
    use crate::quantizers::{transform_pitch, PitchEnergyVector};
    use std::f64::consts::PI;

    fn stream(f0: f64, x_e: f64, voiced: bool, lsp: [f64; LPC_ORDER], n: usize) -> Vec<ConditioningFrame> {
        let x_p = transform_pitch(2.0 * PI * f0 / 8000.0).unwrap();
        let d = DecodedFrame {
            lsp,
            pitch_energy: PitchEnergyVector { x_p, x_e },
            voiced,
        };
        vec![ConditioningFrame::from_decoded(&d).unwrap(); n]
    }

    fn formant_lsp() -> [f64; LPC_ORDER] {
        [0.15, 0.25, 0.6, 0.75, 1.2, 1.3, 1.9, 2.1, 2.6, 2.8]
    }

    fn frame_db(x: &[f64]) -> f64 {
        10.0 * (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).log10()
    }

    #[test]
    fn silence_stays_near_silent() {
        let out = synthesize_fallback(&stream(100.0, -40.0, false, flat_lsp(), 50), 1).unwrap();
        assert_eq!(out.len(), 4000);
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn voiced_100hz_autocorrelation_peaks_at_80() {
        let out = synthesize_fallback(&stream(100.0, -10.0, true, formant_lsp(), 40), 1).unwrap();
        let seg = &out[800..];
        let r = |k: usize| seg.iter().zip(&seg[k..]).map(|(a, b)| a * b).sum::<f64>();
        let best = (20..=160).max_by(|&a, &b| r(a).total_cmp(&r(b))).unwrap();
        assert_eq!(best, 80);
    }

    #[test]
    fn frame_energy_tracks_target() {
        for (voiced, lsp) in [(true, formant_lsp()), (false, formant_lsp()), (true, flat_lsp())] {
            for target in [-30.0, -12.0, 0.0] {
                let out = synthesize_fallback(&stream(130.0, target, voiced, lsp, 30), 7).unwrap();
                for f in out.chunks(FRAME_LEN).skip(1) {
                    let db = frame_db(f);
                    assert!((db - target).abs() < 3.0, "voiced={voiced} target={target} got {db}");
                }
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let s = stream(100.0, -10.0, false, formant_lsp(), 10);
        assert_eq!(synthesize_fallback(&s, 3).unwrap(), synthesize_fallback(&s, 3).unwrap());
        assert_ne!(synthesize_fallback(&s, 3).unwrap(), synthesize_fallback(&s, 4).unwrap());
    }
}
