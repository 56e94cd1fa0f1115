//! Frame-level analysis of 8 kHz speech: LPC/LSP envelope, pitch, energy
//! and a one-bit voicing decision at 100 frames per second.

pub mod lpc;
pub mod lsp;
pub mod pitch;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lpc::{lpc_analyze, LpcAnalysis};
pub use lsp::{check_lsp_order, lpc_to_lsp, lsp_to_lpc};
pub use pitch::{PitchEstimate, PitchTracker};

pub const SAMPLE_RATE: f64 = 8000.0;
/// 10 ms at 8 kHz.
pub const FRAME_LEN: usize = 80;
pub const LPC_ORDER: usize = 10;
pub const FRAMES_PER_SECOND: usize = 100;

const VOICING_THRESHOLD: f64 = 0.5;
const VOICING_MIN_ENERGY: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioFrame {
    pub samples: [f64; FRAME_LEN],
}

impl AudioFrame {
    pub fn silence() -> Self {
        Self {
            samples: [0.0; FRAME_LEN],
        }
    }
}

/// Parametric description of one 10 ms frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameParams {
    /// Line spectrum pairs in radians, strictly increasing in (0, π).
    pub lsp: [f64; LPC_ORDER],
    /// Pitch in radians per sample.
    pub wo: f64,
    /// Mean squared sample value.
    pub energy: f64,
    pub voiced: bool,
}

/// Splits `pcm` into consecutive 80-sample frames, zero-padding the tail.
pub fn frame_signal(pcm: &[f64]) -> Result<Vec<AudioFrame>> {
    if pcm.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(pcm
        .chunks(FRAME_LEN)
        .map(|chunk| {
            let mut frame = AudioFrame::silence();
            frame.samples[..chunk.len()].copy_from_slice(chunk);
            frame
        })
        .collect())
}

pub fn compute_energy(frame: &AudioFrame) -> f64 {
    frame.samples.iter().map(|x| x * x).sum::<f64>() / FRAME_LEN as f64
}

/// Voiced when the tracker's normalized autocorrelation peak exceeds 0.5 and
/// the frame is not silent.
pub fn classify_voicing(frame: &AudioFrame, pitch_confidence: f64) -> bool {
    pitch_confidence > VOICING_THRESHOLD && compute_energy(frame) > VOICING_MIN_ENERGY
}

/// LSPs of the flat filter `A(z) = 1`, used for silent frames.
pub fn flat_lsp() -> [f64; LPC_ORDER] {
    let mut lsp = [0.0; LPC_ORDER];
    for (k, w) in lsp.iter_mut().enumerate() {
        *w = (k + 1) as f64 * std::f64::consts::PI / (LPC_ORDER + 1) as f64;
    }
    lsp
}

/// Streaming analyzer. One per input stream; holds the LPC look-back and the
/// pitch tracker state.
#[derive(Debug, Clone)]
pub struct Analyzer {
    previous: [f64; FRAME_LEN],
    tracker: PitchTracker,
    frame_index: usize,
}

impl Default for Analyzer {
    fn default() -> Self {
        Self::new()
    }
}

impl Analyzer {
    pub fn new() -> Self {
        Self {
            previous: [0.0; FRAME_LEN],
            tracker: PitchTracker::new(),
            frame_index: 0,
        }
    }

    pub fn analyze(&mut self, frame: &AudioFrame) -> Result<FrameParams> {
        let index = self.frame_index;
        self.frame_index += 1;

        let mut segment = [0.0; 2 * FRAME_LEN];
        segment[..FRAME_LEN].copy_from_slice(&self.previous);
        segment[FRAME_LEN..].copy_from_slice(&frame.samples);
        self.previous = frame.samples;

        let lpc = lpc_analyze(&segment, LPC_ORDER)?;
        let lsp = if lpc.silent {
            flat_lsp()
        } else {
            lpc_to_lsp(&lpc.coeffs, index)?
        };
        let pitch = self.tracker.estimate(frame);
        Ok(FrameParams {
            lsp,
            wo: pitch.wo,
            energy: compute_energy(frame),
            voiced: classify_voicing(frame, pitch.confidence),
        })
    }

    pub fn analyze_signal(pcm: &[f64]) -> Result<Vec<FrameParams>> {
        let mut analyzer = Self::new();
        frame_signal(pcm)?
            .iter()
            .map(|f| analyzer.analyze(f))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn framing_exact_multiple() {
        let frames = frame_signal(&[0.5; 160]).unwrap();
        assert_eq!(frames.len(), 2);
        assert!(frames.iter().all(|f| f.samples.iter().all(|&x| x == 0.5)));
    }

    #[test]
    fn framing_pads_tail() {
        let pcm: Vec<f64> = (0..100).map(|i| i as f64 / 100.0 + 0.01).collect();
        let frames = frame_signal(&pcm).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(&frames[1].samples[..20], &pcm[80..]);
        assert_eq!(frames[1].samples[20..].iter().filter(|&&x| x == 0.0).count(), 60);
    }

    #[test]
    fn framing_silence_and_empty() {
        let frames = frame_signal(&[0.0; 80]).unwrap();
        assert_eq!(frames, vec![AudioFrame::silence()]);
        assert!(matches!(frame_signal(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn energy_examples() {
        assert_eq!(compute_energy(&AudioFrame::silence()), 0.0);
        let ones = AudioFrame { samples: [1.0; FRAME_LEN] };
        assert_eq!(compute_energy(&ones), 1.0);
        // 500 Hz completes exactly 5 periods in 80 samples
        let mut s = AudioFrame::silence();
        for (n, v) in s.samples.iter_mut().enumerate() {
            *v = 0.5 * (2.0 * PI * 500.0 * n as f64 / SAMPLE_RATE).sin();
        }
        assert!((compute_energy(&s) - 0.125).abs() < 1e-12);
    }

    #[test]
    fn voicing_pulse_noise_silence() {
        let pulses: Vec<f64> = (0..4000).map(|n| if n % 64 == 0 { 0.8 } else { 0.0 }).collect();
        let params = Analyzer::analyze_signal(&pulses).unwrap();
        assert!(params[10..].iter().all(|p| p.voiced));

        let silence = Analyzer::analyze_signal(&[0.0; 800]).unwrap();
        assert!(silence.iter().all(|p| !p.voiced));
        assert!(silence.iter().all(|p| p.lsp == flat_lsp()));

        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise: Vec<f64> = (0..8000).map(|_| rng.random_range(-0.5..0.5)).collect();
            let params = Analyzer::analyze_signal(&noise).unwrap();
            let voiced = params[4..].iter().filter(|p| p.voiced).count();
            assert_eq!(voiced, 0, "seed {seed}: {voiced} noise frames voiced");
            for p in &params {
                assert!(p.wo >= pitch::min_wo() && p.wo <= pitch::max_wo());
            }
        }
    }

    #[test]
    fn analysis_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pcm: Vec<f64> = (0..2400)
            .map(|n| 0.3 * (n as f64 * 0.07).sin() + rng.random_range(-0.05..0.05))
            .collect();
        let a = Analyzer::analyze_signal(&pcm).unwrap();
        let b = Analyzer::analyze_signal(&pcm).unwrap();
        assert_eq!(a, b);
        for p in &a {
            check_lsp_order(&p.lsp).unwrap();
        }
    }
}
