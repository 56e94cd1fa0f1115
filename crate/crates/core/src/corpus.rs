//! Deterministic synthetic speech-like corpus.
//!
//! Utterances are sequences of voiced, unvoiced and silent segments. Voiced
//! segments run a gliding pulse train with spectral tilt through three
//! formant resonators whose targets move across the segment; unvoiced
//! segments filter white noise through a high resonator. Everything is
//! driven by a seeded ChaCha8 generator.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{Analyzer, FrameParams, SAMPLE_RATE};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub utterances: usize,
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub seed: u64,
}

impl CorpusConfig {
    pub fn new(utterances: usize, seed: u64) -> Self {
        Self {
            utterances,
            min_seconds: 1.5,
            max_seconds: 3.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new() -> Self {
        Self { y1: 0.0, y2: 0.0 }
    }

    /// Unity-DC-gain two-pole section at `freq` Hz with bandwidth `bw` Hz.
    fn step(&mut self, x: f64, freq: f64, bw: f64) -> f64 {
        let r = (-PI * bw / SAMPLE_RATE).exp();
        let c1 = 2.0 * r * (2.0 * PI * freq / SAMPLE_RATE).cos();
        let c2 = -r * r;
        let gain = 1.0 - c1 - c2;
        let y = gain * x + c1 * self.y1 + c2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Voiced,
    Unvoiced,
    Silence,
}

fn vowel(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        rng.random_range(280.0..800.0),
        rng.random_range(850.0..2300.0),
        rng.random_range(2400.0..3300.0),
    ]
}

/// One utterance of `seconds` at 8 kHz, peak-normalized to 0.6.
pub fn generate_utterance(rng: &mut ChaCha8Rng, seconds: f64) -> Vec<f64> {
    let total = (seconds * SAMPLE_RATE) as usize;
    let mut out = Vec::with_capacity(total);
    let speaker_f0: f64 = rng.random_range(85.0..240.0);
    let mut formants = [Resonator::new(); 3];
    let mut tilt = 0.0;
    let mut phase = 0.0;
    let mut from = vowel(rng);

    // brief lead-in silence
    out.resize(rng.random_range(200..800), 0.0);
    while out.len() < total {
        let kind = match rng.random_range(0..10) {
            0..=5 => Segment::Voiced,
            6..=7 => Segment::Unvoiced,
            _ => Segment::Silence,
        };
        let len = match kind {
            Segment::Voiced => rng.random_range(1600..4000),
            Segment::Unvoiced => rng.random_range(500..1400),
            Segment::Silence => rng.random_range(400..1600),
        }
        .min(total - out.len());
        let to = vowel(rng);
        let f0_start: f64 = speaker_f0 * rng.random_range(0.85..1.15);
        let f0_end: f64 = f0_start * rng.random_range(0.8..1.25);
        let level = rng.random_range(0.3..1.0);
        let noise_centre = rng.random_range(2000.0..3500.0);

        for n in 0..len {
            let t = n as f64 / len as f64;
            // raised-cosine onset and offset of 10 ms
            let ramp = 80.0f64.min(len as f64 / 2.0);
            let edge = (n as f64).min((len - n) as f64);
            let env = if edge < ramp { 0.5 - 0.5 * (PI * edge / ramp).cos() } else { 1.0 };
            let sample = match kind {
                Segment::Voiced => {
                    let f0 = f0_start * (f0_end / f0_start).powf(t);
                    phase += f0 / SAMPLE_RATE;
                    let mut pulse = 0.0;
                    if phase >= 1.0 {
                        phase -= 1.0;
                        pulse = 1.0;
                    }
                    tilt = 0.9 * tilt + pulse;
                    let mut y = tilt + 0.02 * rng.random_range(-1.0..1.0);
                    for (k, res) in formants.iter_mut().enumerate() {
                        let f = from[k] + t * (to[k] - from[k]);
                        y = res.step(y, f, 60.0 + 40.0 * k as f64);
                    }
                    level * env * y
                }
                Segment::Unvoiced => {
                    let x = rng.random_range(-1.0..1.0);
                    let y = formants[2].step(x, noise_centre, 900.0);
                    0.4 * level * env * (y - 0.5 * x)
                }
                Segment::Silence => 1e-4 * rng.random_range(-1.0..1.0),
            };
            out.push(sample);
        }
        if let Segment::Voiced = kind {
            from = to;
        }
    }
    out.truncate(total);
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v *= 0.6 / peak);
    }
    out
}

pub fn generate_corpus(cfg: &CorpusConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.utterances)
        .map(|_| {
            let seconds = if cfg.max_seconds > cfg.min_seconds {
                rng.random_range(cfg.min_seconds..cfg.max_seconds)
            } else {
                cfg.min_seconds
            };
            generate_utterance(&mut rng, seconds)
        })
        .collect()
}

/// Runs the analyzer over each utterance; output order follows the input.
pub fn analyze_corpus(corpus: &[Vec<f64>]) -> Result<Vec<Vec<FrameParams>>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        corpus.par_iter().map(|u| Analyzer::analyze_signal(u)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        corpus.iter().map(|u| Analyzer::analyze_signal(u)).collect()
    }
}
