//! Objective quantizer and codec measurements.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{lsp_to_lpc, FrameParams, LPC_ORDER};
use crate::bitstream::CodecVersion;
use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::quantizers::{
    CodebookSet, LspQuantizer, PitchEnergyQuantizer, PitchEnergyVector, QuantizerProfile,
};

pub const SD_GRID: usize = 256;
/// Frames at or below this energy are left out of the spectral statistics.
pub const SILENCE_ENERGY: f64 = 1e-6;

/// `10 log10 |A(e^{jω})|^2`.
fn log_power_db(a: &[f64; LPC_ORDER], w: f64) -> f64 {
    let (mut re, mut im) = (1.0, 0.0);
    for (i, c) in a.iter().enumerate() {
        let k = (i + 1) as f64 * w;
        re += c * k.cos();
        im -= c * k.sin();
    }
    10.0 * (re * re + im * im).log10()
}

/// All-pole envelope `-10 log10 |A|²` in dB at the `SD_GRID` bin centres.
pub fn envelope_db(a: &[f64; LPC_ORDER]) -> Vec<f64> {
    (0..SD_GRID)
        .map(|k| -log_power_db(a, (k as f64 + 0.5) * PI / SD_GRID as f64))
        .collect()
}

/// RMS difference in dB between the all-pole envelopes `1/|A_ref|²` and
/// `1/|A_q|²`, sampled at the 256 bin centres `(k + 0.5)π/256`.
pub fn spectral_distortion(lpc_ref: &[f64; LPC_ORDER], lpc_quant: &[f64; LPC_ORDER]) -> f64 {
    let sum: f64 = (0..SD_GRID)
        .map(|k| {
            let w = (k as f64 + 0.5) * PI / SD_GRID as f64;
            let d = log_power_db(lpc_quant, w) - log_power_db(lpc_ref, w);
            d * d
        })
        .sum();
    (sum / SD_GRID as f64).sqrt()
}

pub fn lsp_spectral_distortion(lsp_ref: &[f64; LPC_ORDER], lsp_quant: &[f64; LPC_ORDER]) -> Result<f64> {
    Ok(spectral_distortion(&lsp_to_lpc(lsp_ref)?, &lsp_to_lpc(lsp_quant)?))
}

/// Outlier fields are percentages of evaluated frames (0 to 100).
/// `rmse_xp` covers voiced frames only; `rmse_xe` covers all frames.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistortionReport {
    pub frames: usize,
    pub mean_sd_db: f64,
    pub outlier_pct_2db: f64,
    pub outlier_pct_4db: f64,
    pub rmse_xp: f64,
    pub rmse_xe: f64,
}

impl DistortionReport {
    /// `key=value` lines in a fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "frames={}", self.frames);
        for (k, v) in [
            ("mean_sd_db", self.mean_sd_db),
            ("outlier_pct_2db", self.outlier_pct_2db),
            ("outlier_pct_4db", self.outlier_pct_4db),
            ("rmse_xp", self.rmse_xp),
            ("rmse_xe", self.rmse_xe),
        ] {
            let _ = writeln!(s, "{k}={v:.6}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Reconstructed parameters for one frame, aligned with the source frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizedFrame {
    pub lsp: [f64; LPC_ORDER],
    pub pitch_energy: PitchEnergyVector,
}

/// Anything that maps an utterance's frame parameters to reconstructions,
/// one output per input frame.
pub trait FrameQuantizer: Sync {
    fn quantize_utterance(&self, frames: &[FrameParams]) -> Result<Vec<QuantizedFrame>>;
}

pub struct IdentityQuantizer;

impl FrameQuantizer for IdentityQuantizer {
    fn quantize_utterance(&self, frames: &[FrameParams]) -> Result<Vec<QuantizedFrame>> {
        frames
            .iter()
            .map(|f| {
                Ok(QuantizedFrame {
                    lsp: f.lsp,
                    pitch_energy: PitchEnergyVector::from_params(f)?,
                })
            })
            .collect()
    }
}

/// Applies a profile's quantizers to every frame: the LSP quantizer per
/// frame and the predictive pitch/energy quantizer on consecutive frame
/// pairs.
pub struct ProfileQuantizer<'a> {
    pub books: &'a CodebookSet,
    pub profile: QuantizerProfile,
}

impl FrameQuantizer for ProfileQuantizer<'_> {
    fn quantize_utterance(&self, frames: &[FrameParams]) -> Result<Vec<QuantizedFrame>> {
        let lspq = LspQuantizer::new(self.books, self.profile.lsp);
        let peq = PitchEnergyQuantizer::new(self.books, self.profile.pitch_energy);
        let mut state = PitchEnergyQuantizer::new_state();
        let mut out = Vec::with_capacity(frames.len());
        for pair in frames.chunks(2) {
            let a = PitchEnergyVector::from_params(&pair[0])?;
            let b = match pair.get(1) {
                Some(f) => PitchEnergyVector::from_params(f)?,
                None => a,
            };
            let (_, rec) = peq.quantize_packet(&[a, b], &mut state)?;
            for (f, pe) in pair.iter().zip(rec) {
                out.push(QuantizedFrame {
                    lsp: lspq.quantize(&f.lsp)?.1,
                    pitch_energy: pe,
                });
            }
        }
        Ok(out)
    }
}

/// Full encode and decode at a codec version, including the decoder's
/// interpolation. The trailing padding frames are dropped.
pub struct CodecQuantizer<'a> {
    pub books: &'a CodebookSet,
    pub version: CodecVersion,
}

impl FrameQuantizer for CodecQuantizer<'_> {
    fn quantize_utterance(&self, frames: &[FrameParams]) -> Result<Vec<QuantizedFrame>> {
        let encoded = Encoder::new(self.books, self.version).encode_frames(frames)?;
        let decoded = Decoder::new(self.books, self.version).decode_frames(&encoded.packets)?;
        Ok(decoded
            .into_iter()
            .take(frames.len())
            .map(|d| QuantizedFrame {
                lsp: d.lsp,
                pitch_energy: d.pitch_energy,
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    sd_frames: usize,
    sd_sum: f64,
    over_2: usize,
    over_4: usize,
    xp_frames: usize,
    xp_sq: f64,
    xe_frames: usize,
    xe_sq: f64,
}

impl Accumulator {
    fn merge(mut self, o: &Accumulator) -> Self {
        self.sd_frames += o.sd_frames;
        self.sd_sum += o.sd_sum;
        self.over_2 += o.over_2;
        self.over_4 += o.over_4;
        self.xp_frames += o.xp_frames;
        self.xp_sq += o.xp_sq;
        self.xe_frames += o.xe_frames;
        self.xe_sq += o.xe_sq;
        self
    }

    fn report(&self) -> DistortionReport {
        let mean = |sum: f64, n: usize| if n == 0 { 0.0 } else { sum / n as f64 };
        DistortionReport {
            frames: self.sd_frames,
            mean_sd_db: mean(self.sd_sum, self.sd_frames),
            outlier_pct_2db: 100.0 * mean(self.over_2 as f64, self.sd_frames),
            outlier_pct_4db: 100.0 * mean(self.over_4 as f64, self.sd_frames),
            rmse_xp: mean(self.xp_sq, self.xp_frames).sqrt(),
            rmse_xe: mean(self.xe_sq, self.xe_frames).sqrt(),
        }
    }
}

fn evaluate_utterance(q: &dyn FrameQuantizer, frames: &[FrameParams]) -> Result<Accumulator> {
    let rec = q.quantize_utterance(frames)?;
    if rec.len() != frames.len() {
        return Err(Error::DimensionMismatch {
            expected: frames.len(),
            actual: rec.len(),
        });
    }
    let mut acc = Accumulator::default();
    for (f, r) in frames.iter().zip(&rec) {
        if f.energy <= SILENCE_ENERGY {
            continue;
        }
        let sd = lsp_spectral_distortion(&f.lsp, &r.lsp)?;
        acc.sd_frames += 1;
        acc.sd_sum += sd;
        acc.over_2 += (sd > 2.0) as usize;
        acc.over_4 += (sd > 4.0) as usize;
        let src = PitchEnergyVector::from_params(f)?;
        if f.voiced {
            acc.xp_frames += 1;
            acc.xp_sq += (src.x_p - r.pitch_energy.x_p).powi(2);
        }
        acc.xe_frames += 1;
        acc.xe_sq += (src.x_e - r.pitch_energy.x_e).powi(2);
    }
    Ok(acc)
}

/// Evaluates a quantizer over a corpus of analysed utterances. Silent
/// frames are skipped. Per-utterance results are merged in corpus order, so
/// the report does not depend on thread scheduling.
pub fn evaluate_quantizer(q: &dyn FrameQuantizer, corpus: &[Vec<FrameParams>]) -> Result<DistortionReport> {
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<Accumulator>> = {
        use rayon::prelude::*;
        corpus.par_iter().map(|u| evaluate_utterance(q, u)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<Accumulator>> = corpus.iter().map(|u| evaluate_utterance(q, u)).collect();

    let mut total = Accumulator::default();
    for p in parts {
        total = total.merge(&p?);
    }
    Ok(total.report())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_pole(c: f64) -> [f64; LPC_ORDER] {
        let mut a = [0.0; LPC_ORDER];
        a[0] = c;
        a
    }

    #[test]
    fn identical_filters_have_zero_distortion() {
        let a = [0.3, -0.2, 0.1, 0.05, 0.0, 0.0, 0.01, 0.0, 0.0, 0.0];
        assert_eq!(spectral_distortion(&a, &a), 0.0);
    }

    #[test]
    fn symmetric() {
        let (a, b) = (one_pole(-0.9), one_pole(0.4));
        assert_eq!(spectral_distortion(&a, &b), spectral_distortion(&b, &a));
    }

    #[test]
    fn flat_versus_one_pole_closed_form() {
        // 10 log10 |1 + c e^{-jw}|^2 = 10 log10(1 + c^2 + 2c cos w)
        let c = 0.5;
        let expected: f64 = (0..SD_GRID)
            .map(|k| {
                let w = (k as f64 + 0.5) * PI / SD_GRID as f64;
                (10.0 * (1.0 + c * c + 2.0 * c * w.cos()).log10()).powi(2)
            })
            .sum::<f64>()
            / SD_GRID as f64;
        let sd = spectral_distortion(&[0.0; LPC_ORDER], &one_pole(c));
        assert!((sd - expected.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn one_pole_envelope_peaks_at_dc() {
        // 1 / |1 - 0.9 e^{-jw}|^2 is largest at w = 0 and smallest at pi
        let env = envelope_db(&one_pole(-0.9));
        assert_eq!(env.len(), SD_GRID);
        assert!(env.windows(2).all(|w| w[1] < w[0]));
        let w0 = 0.5 * PI / SD_GRID as f64;
        let expect = -10.0 * (1.81 - 1.8 * w0.cos()).log10();
        assert!((env[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn report_text_is_stable() {
        let r = DistortionReport {
            frames: 3,
            mean_sd_db: 1.5,
            outlier_pct_2db: 33.333333333,
            outlier_pct_4db: 0.0,
            rmse_xp: 0.25,
            rmse_xe: 2.0,
        };
        assert_eq!(
            r.to_text(),
            "frames=3\nmean_sd_db=1.500000\noutlier_pct_2db=33.333333\noutlier_pct_4db=0.000000\nrmse_xp=0.250000\nrmse_xe=2.000000\n"
        );
        let back: DistortionReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn identity_report_is_zero() {
        let frames = vec![
            FrameParams {
                lsp: crate::analysis::flat_lsp().map(|w| w * 0.9),
                wo: 0.1,
                energy: 0.01,
                voiced: true,
            };
            20
        ];
        let r = evaluate_quantizer(&IdentityQuantizer, &[frames.clone(), frames]).unwrap();
        assert_eq!(r.frames, 40);
        assert_eq!(
            (r.mean_sd_db, r.outlier_pct_2db, r.outlier_pct_4db, r.rmse_xp, r.rmse_xe),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
    }
}
