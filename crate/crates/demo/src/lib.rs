//! WebAssembly bindings for the browser demo.
//!
//! Three operations: an LBG training run on 2-D toy data, a full
//! encode/decode of a synthetic utterance, and an LSP envelope explorer.
//! Results cross the boundary as JSON strings and `Float32Array`s.

use std::sync::OnceLock;

use cqnv::analysis::{Analyzer, LPC_ORDER};
use cqnv::bitstream::{write_stream, CodecVersion};
use cqnv::codec::{Decoder, Encoder};
use cqnv::corpus::generate_utterance;
use cqnv::decoder::expand_packets;
use cqnv::metrics::{envelope_db, lsp_spectral_distortion};
use cqnv::quantizers::{enforce_lsp_stability, transform_energy, transform_pitch, CodebookSet, LspQuantizer};
use cqnv::vq::{lbg_train, read_codebook, LbgConfig, TrainingSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const BOOK_BYTES: [&[u8]; 7] = [
    include_bytes!("../../../codebooks/lsp_stage1.cqvq"),
    include_bytes!("../../../codebooks/lsp_odd_512.cqvq"),
    include_bytes!("../../../codebooks/lsp_even_512.cqvq"),
    include_bytes!("../../../codebooks/lsp_odd_128.cqvq"),
    include_bytes!("../../../codebooks/lsp_even_128.cqvq"),
    include_bytes!("../../../codebooks/pitch_energy_256.cqvq"),
    include_bytes!("../../../codebooks/pitch_energy_64.cqvq"),
];

/// The pretrained codebooks compiled into the module.
pub fn embedded_books() -> &'static CodebookSet {
    static BOOKS: OnceLock<CodebookSet> = OnceLock::new();
    BOOKS.get_or_init(|| {
        let books = BOOK_BYTES.map(|b| read_codebook(b).expect("embedded codebook"));
        CodebookSet::from_books(books).expect("embedded codebook set")
    })
}

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn parse_version(name: &str) -> Result<CodecVersion, String> {
    name.parse::<CodecVersion>().map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct LbgStep {
    pub size: usize,
    pub iteration: usize,
    pub distortion: f64,
}

#[derive(Debug, Serialize)]
pub struct LbgDemo {
    pub data: Vec<[f64; 2]>,
    pub codebook: Vec<[f32; 2]>,
    pub log: Vec<LbgStep>,
    pub final_distortion: f64,
}

/// Trains a `size`-entry codebook on `points` samples from a random
/// mixture of `clusters` Gaussian blobs in the unit square.
pub fn lbg_demo(points: usize, clusters: usize, size: usize, seed: u64) -> Result<LbgDemo, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<[f64; 2]> = (0..clusters.max(1))
        .map(|_| [rng.random_range(0.15..0.85), rng.random_range(0.15..0.85)])
        .collect();
    let mut gauss = || {
        // Box-Muller
        let (u, v): (f64, f64) = (rng.random_range(f64::EPSILON..1.0), rng.random());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    };
    let data: Vec<[f64; 2]> = (0..points)
        .map(|i| {
            let c = centres[i % centres.len()];
            [c[0] + 0.05 * gauss(), c[1] + 0.05 * gauss()]
        })
        .collect();
    let rows: Vec<Vec<f64>> = data.iter().map(|p| p.to_vec()).collect();
    let set = TrainingSet::from_rows(&rows).map_err(|e| e.to_string())?;
    let out = lbg_train(&set, &LbgConfig::new(size)).map_err(|e| e.to_string())?;
    Ok(LbgDemo {
        codebook: out.codebook.entries().map(|e| [e[0], e[1]]).collect(),
        log: out
            .log
            .iter()
            .map(|r| LbgStep {
                size: r.size,
                iteration: r.iteration,
                distortion: r.distortion,
            })
            .collect(),
        final_distortion: out.final_distortion,
        data,
    })
}

#[wasm_bindgen(js_name = lbgDemo)]
pub fn lbg_demo_js(points: usize, clusters: usize, size: usize, seed: u64) -> Result<String, JsError> {
    let demo = lbg_demo(points, clusters, size, seed).map_err(err)?;
    serde_json::to_string(&demo).map_err(err)
}

#[derive(Debug, Serialize)]
pub struct FrameTrack {
    pub x_p_in: f64,
    pub x_p_out: f64,
    pub x_e_in: f64,
    pub x_e_out: f64,
    pub voiced_in: bool,
    pub voiced_out: bool,
    pub sd_db: f64,
}

#[derive(Debug, Serialize)]
pub struct CodecSummary {
    pub version: String,
    pub bitrate_bps: u32,
    pub packets: usize,
    pub stream_bytes: usize,
    pub input_samples: usize,
    pub output_samples: usize,
    pub mean_sd_db: f64,
    pub frames: Vec<FrameTrack>,
}

/// One encode/decode run of a synthetic utterance.
#[wasm_bindgen]
pub struct CodecRun {
    input: Vec<f64>,
    output: Vec<f64>,
    summary: CodecSummary,
}

impl CodecRun {
    pub fn run(version: CodecVersion, seconds: f64, seed: u64) -> Result<Self, String> {
        let books = embedded_books();
        let input = generate_utterance(&mut ChaCha8Rng::seed_from_u64(seed), seconds.clamp(0.5, 10.0));
        let analysis = Analyzer::analyze_signal(&input).map_err(|e| e.to_string())?;
        let enc = Encoder::new(books, version).encode_pcm(&input).map_err(|e| e.to_string())?;
        let stream = write_stream(version, &enc.packets).map_err(|e| e.to_string())?;
        let output = Decoder::new(books, version)
            .decode_pcm(&enc.packets, seed)
            .map_err(|e| e.to_string())?;
        let decoded = expand_packets(&enc.local);

        let mut frames = Vec::with_capacity(analysis.len());
        for (a, d) in analysis.iter().zip(&decoded) {
            frames.push(FrameTrack {
                x_p_in: transform_pitch(a.wo).map_err(|e| e.to_string())?,
                x_p_out: d.pitch_energy.x_p,
                x_e_in: transform_energy(a.energy).map_err(|e| e.to_string())?,
                x_e_out: d.pitch_energy.x_e,
                voiced_in: a.voiced,
                voiced_out: d.voiced,
                sd_db: lsp_spectral_distortion(&a.lsp, &d.lsp).map_err(|e| e.to_string())?,
            });
        }
        let speech: Vec<f64> = analysis
            .iter()
            .zip(&frames)
            .filter(|(a, _)| a.energy > cqnv::metrics::SILENCE_ENERGY)
            .map(|(_, f)| f.sd_db)
            .collect();
        let mean_sd_db = speech.iter().sum::<f64>() / speech.len().max(1) as f64;
        let summary = CodecSummary {
            version: version.name().to_string(),
            bitrate_bps: version.bitrate_bps(),
            packets: enc.packets.len(),
            stream_bytes: stream.len(),
            input_samples: input.len(),
            output_samples: output.len(),
            mean_sd_db,
            frames,
        };
        Ok(Self { input, output, summary })
    }

    pub fn summary(&self) -> &CodecSummary {
        &self.summary
    }

    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

#[wasm_bindgen]
impl CodecRun {
    #[wasm_bindgen(constructor)]
    pub fn new(version: &str, seconds: f64, seed: u64) -> Result<CodecRun, JsError> {
        Self::run(parse_version(version).map_err(err)?, seconds, seed).map_err(err)
    }

    #[wasm_bindgen(js_name = summaryJson)]
    pub fn summary_json(&self) -> Result<String, JsError> {
        serde_json::to_string(&self.summary).map_err(err)
    }

    #[wasm_bindgen(js_name = inputAudio)]
    pub fn input_audio(&self) -> Vec<f32> {
        self.input.iter().map(|&v| v as f32).collect()
    }

    #[wasm_bindgen(js_name = outputAudio)]
    pub fn output_audio(&self) -> Vec<f32> {
        self.output.iter().map(|&v| v as f32).collect()
    }
}

#[derive(Debug, Serialize)]
pub struct LspView {
    pub lsp: [f64; LPC_ORDER],
    pub quantized: [f64; LPC_ORDER],
    pub indices: [u16; 3],
    pub envelope_db: Vec<f64>,
    pub quantized_envelope_db: Vec<f64>,
    pub sd_db: f64,
}

/// Envelope of an LSP vector before and after quantization at `version`.
/// Out-of-order or crowded input is first pushed apart into a valid set.
pub fn lsp_view(lsp: &[f64], version: CodecVersion) -> Result<LspView, String> {
    let mut lsp: [f64; LPC_ORDER] = lsp
        .try_into()
        .map_err(|_| format!("expected {LPC_ORDER} LSPs, got {}", lsp.len()))?;
    if lsp.iter().any(|v| !v.is_finite()) {
        return Err("LSPs must be finite".into());
    }
    lsp.sort_by(f64::total_cmp);
    enforce_lsp_stability(&mut lsp);
    let q = LspQuantizer::new(embedded_books(), version.profile().lsp);
    let (indices, quantized) = q.quantize(&lsp).map_err(|e| e.to_string())?;
    let a = cqnv::analysis::lsp_to_lpc(&lsp).map_err(|e| e.to_string())?;
    let aq = cqnv::analysis::lsp_to_lpc(&quantized).map_err(|e| e.to_string())?;
    Ok(LspView {
        lsp,
        quantized,
        indices,
        envelope_db: envelope_db(&a),
        quantized_envelope_db: envelope_db(&aq),
        sd_db: lsp_spectral_distortion(&lsp, &quantized).map_err(|e| e.to_string())?,
    })
}

#[wasm_bindgen(js_name = lspView)]
pub fn lsp_view_js(lsp: &[f64], version: &str) -> Result<String, JsError> {
    let view = lsp_view(lsp, parse_version(version).map_err(err)?).map_err(err)?;
    serde_json::to_string(&view).map_err(err)
}
