//! Encoder and decoder pipelines, codebook training and codebook-set storage.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{frame_signal, flat_lsp, Analyzer, AudioFrame, FrameParams};
use crate::bitstream::{CodecVersion, Packet, FRAMES_PER_PACKET};
use crate::decoder::{
    assemble_conditioning, expand_packets, synthesize_fallback, ConditioningFrame, DecodedFrame,
    Dequantizer, PacketParams,
};
use crate::error::{Error, Result};
use crate::metrics::SILENCE_ENERGY;
use crate::quantizers::{
    pitch_energy_predictor, CodebookSet, LspMode, LspQuantizer, PitchEnergyMode,
    PitchEnergyQuantizer, PitchEnergyVector, CODEBOOK_FILES, PITCH_ENERGY_WEIGHTS,
};
use crate::vq::{lbg_train, odd_order, even_order, read_codebook, write_codebook, LbgConfig, LbgOutcome, TrainingSet};

/// Encoder output: the packets plus the encoder's own reconstructions.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub packets: Vec<Packet>,
    pub local: Vec<PacketParams>,
}

#[derive(Debug, Clone)]
pub struct Encoder<'a> {
    books: &'a CodebookSet,
    version: CodecVersion,
}

/// Parameters used to pad an utterance to a whole packet.
fn padding_frame(last: &FrameParams) -> FrameParams {
    FrameParams {
        lsp: flat_lsp(),
        wo: last.wo,
        energy: 0.0,
        voiced: false,
    }
}

impl<'a> Encoder<'a> {
    pub fn new(books: &'a CodebookSet, version: CodecVersion) -> Self {
        Self { books, version }
    }

    /// Encodes per-frame parameters, padding to a multiple of four frames.
    pub fn encode_frames(&self, frames: &[FrameParams]) -> Result<Encoded> {
        let last = frames.last().ok_or(Error::EmptyInput)?;
        let mut frames = frames.to_vec();
        while !frames.len().is_multiple_of(FRAMES_PER_PACKET) {
            frames.push(padding_frame(last));
        }
        let profile = self.version.profile();
        let lspq = LspQuantizer::new(self.books, profile.lsp);
        let peq = PitchEnergyQuantizer::new(self.books, profile.pitch_energy);
        let mut state = PitchEnergyQuantizer::new_state();

        let mut packets = Vec::with_capacity(frames.len() / FRAMES_PER_PACKET);
        let mut local = Vec::with_capacity(packets.capacity());
        for group in frames.chunks_exact(FRAMES_PER_PACKET) {
            let (lsp_idx, lsp) = lspq.quantize(&group[0].lsp)?;
            let samples = [
                PitchEnergyVector::from_params(&group[0])?,
                PitchEnergyVector::from_params(&group[2])?,
            ];
            let (pe_idx, pitch_energy) = peq.quantize_packet(&samples, &mut state)?;
            let voicing = [group[0].voiced, group[1].voiced, group[2].voiced, group[3].voiced];
            packets.push(Packet {
                lsp: lsp_idx,
                pitch_energy: pe_idx,
                voicing,
                spare: false,
            });
            local.push(PacketParams {
                lsp,
                pitch_energy,
                voicing,
            });
        }
        Ok(Encoded { packets, local })
    }

    /// Analyses and encodes 8 kHz PCM in [-1, 1]. The tail is padded with
    /// silence to a whole packet.
    pub fn encode_pcm(&self, pcm: &[f64]) -> Result<Encoded> {
        let mut audio = frame_signal(pcm)?;
        while audio.len() % FRAMES_PER_PACKET != 0 {
            audio.push(AudioFrame::silence());
        }
        let mut analyzer = Analyzer::new();
        let params = audio
            .iter()
            .map(|f| analyzer.analyze(f))
            .collect::<Result<Vec<_>>>()?;
        self.encode_frames(&params)
    }
}

#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    books: &'a CodebookSet,
    version: CodecVersion,
}

impl<'a> Decoder<'a> {
    pub fn new(books: &'a CodebookSet, version: CodecVersion) -> Self {
        Self { books, version }
    }

    pub fn dequantize(&self, packets: &[Packet]) -> Result<Vec<PacketParams>> {
        let mut deq = Dequantizer::new(self.books, self.version);
        packets.iter().map(|p| deq.dequantize_packet(p)).collect()
    }

    pub fn decode_frames(&self, packets: &[Packet]) -> Result<Vec<DecodedFrame>> {
        Ok(expand_packets(&self.dequantize(packets)?))
    }

    pub fn decode_features(&self, packets: &[Packet]) -> Result<Vec<ConditioningFrame>> {
        assemble_conditioning(&self.decode_frames(packets)?)
    }

    pub fn decode_pcm(&self, packets: &[Packet], seed: u64) -> Result<Vec<f64>> {
        synthesize_fallback(&self.decode_features(packets)?, seed)
    }
}

/// Per-vector training weights for the pitch/energy book.
pub const WEIGHT_STATIONARY_VOICED: f64 = 4.0;
pub const WEIGHT_VOICED: f64 = 2.0;
pub const WEIGHT_OTHER: f64 = 1.0;
/// Relative pitch change below which a voiced sample counts as stationary.
pub const STATIONARY_PITCH_CHANGE: f64 = 0.05;

/// Weight for a pitch/energy sample given the previous sample point.
pub fn sample_weight(current: &FrameParams, previous: Option<&FrameParams>) -> f64 {
    if !current.voiced {
        return WEIGHT_OTHER;
    }
    match previous {
        Some(p) if p.voiced && (current.wo / p.wo - 1.0).abs() < STATIONARY_PITCH_CHANGE => {
            WEIGHT_STATIONARY_VOICED
        }
        _ => WEIGHT_VOICED,
    }
}

/// LSP vectors of every non-silent frame.
pub fn lsp_training_set(corpus: &[Vec<FrameParams>]) -> Result<TrainingSet> {
    let mut set = TrainingSet::new(10);
    for f in corpus.iter().flatten().filter(|f| f.energy > SILENCE_ENERGY) {
        set.push(&f.lsp)?;
    }
    Ok(set)
}

/// Odd- and even-order stage-2 training sets: residuals after stage 1.
pub fn lsp_residual_sets(corpus: &[Vec<FrameParams>], stage1: &crate::vq::Codebook) -> Result<(TrainingSet, TrainingSet)> {
    let mut odd = TrainingSet::new(5);
    let mut even = TrainingSet::new(5);
    for f in corpus.iter().flatten().filter(|f| f.energy > SILENCE_ENERGY) {
        let (i, _) = stage1.nearest(&f.lsp, None)?;
        let residual: Vec<f64> = f
            .lsp
            .iter()
            .zip(stage1.entry(i))
            .map(|(x, &c)| x - c as f64)
            .collect();
        odd.push(&odd_order(&residual))?;
        even.push(&even_order(&residual))?;
    }
    Ok((odd, even))
}

/// Open-loop prediction residuals at the pitch/energy sample points (even
/// frames), weighted by stationarity.
pub fn pitch_energy_training_set(corpus: &[Vec<FrameParams>]) -> Result<TrainingSet> {
    let coeffs = pitch_energy_predictor().coeffs;
    let mut set = TrainingSet::new(2);
    for utterance in corpus {
        let mut prev: Option<(&FrameParams, PitchEnergyVector)> = None;
        for f in utterance.iter().step_by(2) {
            let x = PitchEnergyVector::from_params(f)?;
            let (pred_p, pred_e) = match prev {
                Some((_, p)) => (coeffs[0] * p.x_p, coeffs[1] * p.x_e),
                None => (0.0, 0.0),
            };
            let w = sample_weight(f, prev.map(|(p, _)| p));
            set.push_weighted(&[x.x_p - pred_p, x.x_e - pred_e], w)?;
            prev = Some((f, x));
        }
    }
    Ok(set)
}

/// LBG settings shared by all books; only the target size differs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOptions {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub perturbation: f64,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        let d = LbgConfig::new(1);
        Self {
            max_iterations: d.max_iterations,
            rel_tolerance: d.rel_tolerance,
            perturbation: d.perturbation,
        }
    }
}

impl TrainingOptions {
    pub fn config(&self, size: usize) -> LbgConfig {
        LbgConfig {
            max_iterations: self.max_iterations,
            rel_tolerance: self.rel_tolerance,
            perturbation: self.perturbation,
            ..LbgConfig::new(size)
        }
    }
}

/// Training result for one book, keyed by its file name.
#[derive(Debug, Clone)]
pub struct TrainedBook {
    pub name: &'static str,
    pub vectors: usize,
    pub outcome: LbgOutcome,
}

pub fn train_lsp_stage1(corpus: &[Vec<FrameParams>], opts: &TrainingOptions) -> Result<TrainedBook> {
    let set = lsp_training_set(corpus)?;
    Ok(TrainedBook {
        name: CODEBOOK_FILES[0],
        vectors: set.len(),
        outcome: lbg_train(&set, &opts.config(512))?,
    })
}

/// Trains the odd/even residual books of one LSP mode.
pub fn train_lsp_split(
    corpus: &[Vec<FrameParams>],
    stage1: &crate::vq::Codebook,
    mode: LspMode,
    opts: &TrainingOptions,
) -> Result<[TrainedBook; 2]> {
    let (odd, even) = lsp_residual_sets(corpus, stage1)?;
    let (size, names) = match mode {
        LspMode::Fine27 => (512, [CODEBOOK_FILES[1], CODEBOOK_FILES[2]]),
        LspMode::Coarse23 => (128, [CODEBOOK_FILES[3], CODEBOOK_FILES[4]]),
    };
    let train = |set: &TrainingSet, name| -> Result<TrainedBook> {
        Ok(TrainedBook {
            name,
            vectors: set.len(),
            outcome: lbg_train(set, &opts.config(size))?,
        })
    };
    Ok([train(&odd, names[0])?, train(&even, names[1])?])
}

pub fn train_pitch_energy(
    corpus: &[Vec<FrameParams>],
    mode: PitchEnergyMode,
    opts: &TrainingOptions,
) -> Result<TrainedBook> {
    let set = pitch_energy_training_set(corpus)?;
    let name = match mode {
        PitchEnergyMode::Fine16 => CODEBOOK_FILES[5],
        PitchEnergyMode::Coarse12 => CODEBOOK_FILES[6],
    };
    Ok(TrainedBook {
        name,
        vectors: set.len(),
        outcome: lbg_train(
            &set,
            &LbgConfig {
                dim_weights: Some(PITCH_ENERGY_WEIGHTS.to_vec()),
                ..opts.config(mode.book_size())
            },
        )?,
    })
}

/// Trains all seven books, returned in [`CODEBOOK_FILES`] order.
pub fn train_all(corpus: &[Vec<FrameParams>], opts: &TrainingOptions) -> Result<(CodebookSet, Vec<TrainedBook>)> {
    let stage1 = train_lsp_stage1(corpus, opts)?;
    let [of, ef] = train_lsp_split(corpus, &stage1.outcome.codebook, LspMode::Fine27, opts)?;
    let [oc, ec] = train_lsp_split(corpus, &stage1.outcome.codebook, LspMode::Coarse23, opts)?;
    let pf = train_pitch_energy(corpus, PitchEnergyMode::Fine16, opts)?;
    let pc = train_pitch_energy(corpus, PitchEnergyMode::Coarse12, opts)?;
    let trained = vec![stage1, of, ef, oc, ec, pf, pc];
    let books: [crate::vq::Codebook; 7] = std::array::from_fn(|i| trained[i].outcome.codebook.clone());
    Ok((CodebookSet::from_books(books)?, trained))
}

/// Writes one book as `dir/name`.
pub fn save_codebook(dir: &Path, name: &str, cb: &crate::vq::Codebook) -> Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    write_codebook(cb, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn save_codebook_set(dir: &Path, set: &CodebookSet) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (cb, name) in set.books().into_iter().zip(CODEBOOK_FILES) {
        save_codebook(dir, name, cb)?;
    }
    Ok(())
}

pub fn load_codebook_set(dir: &Path) -> Result<CodebookSet> {
    let mut books = Vec::with_capacity(CODEBOOK_FILES.len());
    for name in CODEBOOK_FILES {
        books.push(read_codebook(BufReader::new(File::open(dir.join(name))?))?);
    }
    let books: [crate::vq::Codebook; 7] = books.try_into().expect("seven books");
    CodebookSet::from_books(books)
}

/// One line of a training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLogLine {
    pub book: String,
    pub size: usize,
    pub iteration: usize,
    pub distortion: f64,
}

pub fn training_log(books: &[TrainedBook]) -> Vec<TrainingLogLine> {
    books
        .iter()
        .flat_map(|b| {
            b.outcome.log.iter().map(|r| TrainingLogLine {
                book: b.name.to_string(),
                size: r.size,
                iteration: r.iteration,
                distortion: r.distortion,
            })
        })
        .collect()
}
