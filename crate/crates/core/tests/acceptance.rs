//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p cqnv-core --test acceptance`. Exits non-zero if
//! any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use cqnv::analysis::{lpc_to_lsp, lsp_to_lpc, Analyzer, LPC_ORDER};
use cqnv::bitstream::{pack, read_stream, unpack, write_stream, CodecVersion, Packet};
use cqnv::codec::{train_all, Decoder, Encoder, TrainingOptions};
use cqnv::corpus::{analyze_corpus, generate_corpus, generate_utterance, CorpusConfig};
use cqnv::decoder::{expand_packets, Dequantizer};
use cqnv::metrics::{evaluate_quantizer, ProfileQuantizer};
use cqnv::quantizers::{
    inverse_transform_energy, inverse_transform_pitch, transform_energy, transform_pitch,
    CodebookSet, LspMode, PitchEnergyMode, QuantizerProfile,
};
use cqnv::vq::{lbg_train, Codebook, LbgConfig, LbgRecord, TrainingSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_packet(rng: &mut ChaCha8Rng, v: CodecVersion) -> Packet {
    let [a, b, c] = v.lsp_widths();
    let pe = v.pe_width();
    Packet {
        lsp: [
            rng.random_range(0..1u16 << a),
            rng.random_range(0..1u16 << b),
            rng.random_range(0..1u16 << c),
        ],
        pitch_energy: [rng.random_range(0..1u16 << pe), rng.random_range(0..1u16 << pe)],
        voicing: [rng.random(), rng.random(), rng.random(), rng.random()],
        spare: false,
    }
}

fn bit_allocation() -> Outcome {
    let expected = [
        (CodecVersion::Codec2_1200, 48, 1200),
        (CodecVersion::CqnvV1, 44, 1100),
        (CodecVersion::CqnvV2, 44, 1100),
        (CodecVersion::CqnvV3, 40, 1000),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut notes = Vec::new();
    let mut ok = true;
    for (v, bits, bps) in expected {
        let packed = pack(v, &random_packet(&mut rng, v)).unwrap();
        let profile = v.profile();
        let field_sum: u32 = v.lsp_widths().iter().sum::<u32>() + 2 * v.pe_width() + 4 + 1;
        ok &= packed.len == bits && v.packet_bits() == bits && field_sum == bits;
        ok &= v.bitrate_bps() == bps && bits * 25 == bps;
        ok &= (profile.lsp_bits() + profile.pe_bits() + 5) == bits;
        for n in [0usize, 1, 7, 25, 250, 1001] {
            let packets: Vec<Packet> = (0..n).map(|_| random_packet(&mut rng, v)).collect();
            let bytes = write_stream(v, &packets).unwrap();
            let payload_bits = n * bits as usize;
            let expect = 10 + payload_bits.div_ceil(8) + 4;
            ok &= bytes.len() == expect;
            ok &= (bytes.len() - 14) * 8 - payload_bits < 8;
        }
        notes.push(format!("{v}={}b/{}bps", packed.len, v.bitrate_bps()));
    }
    outcome(ok, notes.join(" "))
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ok = true;
    let mut mismatches = 0;
    for v in CodecVersion::ALL {
        let packets: Vec<Packet> = (0..10_000).map(|_| random_packet(&mut rng, v)).collect();
        for p in &packets {
            let back = unpack(v, pack(v, p).unwrap()).unwrap();
            mismatches += (back != *p) as usize;
        }
        let bytes = write_stream(v, &packets).unwrap();
        let (v2, back) = read_stream(&bytes).unwrap();
        ok &= v2 == v && back == packets && write_stream(v, &back).unwrap() == bytes;
        // flip single bits across header, payload and trailer
        for _ in 0..200 {
            let mut bad = bytes.clone();
            let pos = rng.random_range(0..bad.len());
            bad[pos] ^= 1 << rng.random_range(0..8);
            ok &= read_stream(&bad).is_err();
        }
    }
    ok &= mismatches == 0;
    outcome(ok, format!("40000 packets, {mismatches} mismatches, 800 corruptions"))
}

/// Independent exhaustive scan: plain loop, strict `<` keeps the first
/// (lowest) index among ties.
fn scan(cb: &Codebook, x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for i in 0..cb.len() {
        let mut d = 0.0;
        for (j, xv) in x.iter().enumerate() {
            let e = xv - f64::from(cb.raw()[i * cb.dim() + j]);
            d += e * e;
        }
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn vq_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    let shapes = [(512, 10), (512, 5), (256, 2), (128, 5), (64, 2)];
    for (size, dim) in shapes {
        // coarse value grid so exact ties occur
        let values: Vec<f32> = (0..size * dim)
            .map(|_| rng.random_range(-8i32..8) as f32 * 0.25)
            .collect();
        let cb = Codebook::new(dim, values).unwrap();
        for q in 0..10_000 {
            let x: Vec<f64> = if q % 5 == 0 {
                let i = rng.random_range(0..size);
                cb.entry(i).iter().map(|&v| f64::from(v)).collect()
            } else {
                (0..dim).map(|_| rng.random_range(-2.5..2.5)).collect()
            };
            let (i, _) = cqnv::vq::nearest_code(&cb, &x, None).unwrap();
            mismatches += (i != scan(&cb, &x)) as usize;
        }
    }
    outcome(mismatches == 0, format!("5 shapes x 10000 queries, {mismatches} mismatches"))
}

/// Non-increasing within each codebook size, and each size ends no higher
/// than the one before it.
fn non_increasing_per_level(log: &[LbgRecord]) -> bool {
    let within = log
        .windows(2)
        .all(|w| w[0].size != w[1].size || w[1].distortion <= w[0].distortion);
    let finals: Vec<f64> = log
        .windows(2)
        .filter(|w| w[0].size != w[1].size)
        .map(|w| w[0].distortion)
        .chain(log.last().map(|r| r.distortion))
        .collect();
    within && finals.windows(2).all(|w| w[1] <= w[0])
}

fn lbg_properties() -> Outcome {
    let mut ok = true;
    let toy = TrainingSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
    let out = lbg_train(&toy, &LbgConfig::new(1)).unwrap();
    let toy_ok = (out.codebook.entry(0)[0] as f64 - 0.5).abs() < 1e-9
        && (out.final_distortion - 0.25).abs() < 1e-9;
    ok &= toy_ok;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let k = 64;
    // codewords are stored as f32, so zero distortion needs f32-exact points
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|i| vec![i as f64, f64::from(rng.random_range(-1.0f32..1.0)), (i * i % 7) as f64])
        .collect();
    let distinct = lbg_train(&TrainingSet::from_rows(&rows).unwrap(), &LbgConfig::new(k)).unwrap();
    ok &= distinct.final_distortion == 0.0;

    let mut runs = 0;
    for (n, dim, size) in [(2000, 2, 64), (3000, 5, 128), (1500, 10, 64), (800, 2, 256)] {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0f64..1.0).powi(3)).collect())
            .collect();
        let out = lbg_train(&TrainingSet::from_rows(&rows).unwrap(), &LbgConfig::new(size)).unwrap();
        ok &= non_increasing_per_level(&out.log);
        runs += 1;
    }
    outcome(
        ok,
        format!(
            "toy codeword {:.3} distortion {:.9}; distinct-points {}; {runs} random runs monotone",
            out.codebook.entry(0)[0],
            out.final_distortion,
            distinct.final_distortion
        ),
    )
}

fn state_sync() -> Outcome {
    let books = CodebookSet::random(5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;
    for v in [CodecVersion::CqnvV3, CodecVersion::Codec2_1200] {
        let frames: Vec<cqnv::analysis::FrameParams> = (0..40_000)
            .map(|_| {
                let mut lsp: [f64; LPC_ORDER] = std::array::from_fn(|_| rng.random_range(0.05..3.1));
                lsp.sort_by(f64::total_cmp);
                cqnv::analysis::FrameParams {
                    lsp,
                    wo: inverse_transform_pitch(rng.random_range(0.0..3.0)),
                    energy: 10f64.powf(rng.random_range(-6.0..0.5)),
                    voiced: rng.random(),
                }
            })
            .filter(|f| f.lsp.windows(2).all(|w| w[1] > w[0]))
            .collect();
        let frames = &frames[..frames.len() / 4 * 4];
        let enc = Encoder::new(&books, v).encode_frames(frames).unwrap();
        let mut deq = Dequantizer::new(&books, v);
        for (p, local) in enc.packets.iter().zip(&enc.local) {
            let d = deq.dequantize_packet(p).unwrap();
            let same = d.lsp.iter().zip(&local.lsp).all(|(a, b)| a.to_bits() == b.to_bits())
                && d.pitch_energy.iter().zip(&local.pitch_energy).all(|(a, b)| {
                    a.x_p.to_bits() == b.x_p.to_bits() && a.x_e.to_bits() == b.x_e.to_bits()
                })
                && d.voicing == local.voicing;
            ok &= same;
        }
        ok &= enc.packets.len() >= 9_900;
    }
    outcome(ok, "2 versions x ~10000 packets, bit-exact, coefficients 0.8/0.9")
}

fn transforms() -> Outcome {
    let wo = |f0: f64| 2.0 * PI * f0 / 8000.0;
    let mut ok = true;
    for (f0, xp) in [(50.0, 0.0), (100.0, 1.0), (400.0, 3.0)] {
        ok &= (transform_pitch(wo(f0)).unwrap() - xp).abs() < 1e-12;
    }
    ok &= (transform_energy(0.0).unwrap() + 40.0).abs() < 1e-12;
    ok &= transform_energy(0.9999).unwrap().abs() < 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let xp = rng.random_range(0.0..3.0);
        worst = worst.max((transform_pitch(inverse_transform_pitch(xp)).unwrap() - xp).abs());
        let e = 10f64.powf(rng.random_range(-3.0..2.0));
        worst = worst.max((inverse_transform_energy(transform_energy(e).unwrap()) - e).abs() / e.max(1.0));
    }
    ok &= worst < 1e-10;
    outcome(ok, format!("closed forms exact, worst round-trip error {worst:.1e}"))
}

fn random_stable_lpc(rng: &mut ChaCha8Rng) -> [f64; LPC_ORDER] {
    // step-up recursion from reflection coefficients in (-0.95, 0.95)
    let mut a = [0.0; LPC_ORDER];
    for m in 0..LPC_ORDER {
        let k: f64 = rng.random_range(-0.95..0.95);
        let prev = a;
        for i in 0..m {
            a[i] = prev[i] + k * prev[m - 1 - i];
        }
        a[m] = k;
    }
    a
}

fn lsp_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut ordered = true;
    for i in 0..1000 {
        let a = random_stable_lpc(&mut rng);
        let lsp = lpc_to_lsp(&a, i).unwrap();
        ordered &= lsp[0] > 0.0 && lsp[9] < PI && lsp.windows(2).all(|w| w[1] > w[0]);
        let back = lsp_to_lpc(&lsp).unwrap();
        for (x, y) in a.iter().zip(&back) {
            worst = worst.max((x - y).abs());
        }
    }
    let mut frames_checked = 0;
    for seed in 0..4 {
        let books = CodebookSet::random(100 + seed);
        for v in CodecVersion::ALL {
            let packets: Vec<Packet> = (0..1000).map(|_| random_packet(&mut rng, v)).collect();
            for f in Decoder::new(&books, v).decode_frames(&packets).unwrap() {
                ordered &= f.lsp[0] > 0.0 && f.lsp[9] < PI && f.lsp.windows(2).all(|w| w[1] > w[0]);
                frames_checked += 1;
            }
        }
    }
    outcome(
        worst < 1e-4 && ordered,
        format!("max round-trip error {worst:.2e}; {frames_checked} decoded frames strictly increasing"),
    )
}

fn end_to_end() -> Outcome {
    let started = Instant::now();
    let train = analyze_corpus(&generate_corpus(&CorpusConfig::new(100, 1))).unwrap();
    let held_out = analyze_corpus(&generate_corpus(&CorpusConfig::new(100, 2))).unwrap();
    let (books, trained) = train_all(&train, &TrainingOptions::default()).unwrap();
    let training_monotone = trained.iter().all(|b| non_increasing_per_level(&b.outcome.log));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pcm = generate_utterance(&mut rng, 10.0);
    let v = CodecVersion::CqnvV3;
    let enc = Encoder::new(&books, v).encode_pcm(&pcm).unwrap();
    let bytes = write_stream(v, &enc.packets).unwrap();
    let (_, packets) = read_stream(&bytes).unwrap();
    let out = Decoder::new(&books, v).decode_pcm(&packets, 42).unwrap();
    let duration_ok = out.len().abs_diff(pcm.len()) <= 80;

    // pitch of the synthesized audio against the transmitted pitch, on voiced
    // frames whose two neighbours on each side are voiced as well
    let local = expand_packets(&enc.local);
    let re = Analyzer::analyze_signal(&out).unwrap();
    let mut errors: Vec<f64> = (2..local.len().saturating_sub(2))
        .filter(|&i| (i - 2..=i + 2).all(|k| local[k].voiced))
        .map(|i| (transform_pitch(re[i].wo).unwrap() - local[i].pitch_energy.x_p).abs())
        .collect();
    errors.sort_by(f64::total_cmp);
    let step = 3.0 / PitchEnergyMode::Coarse12.book_size() as f64;
    let median = errors.get(errors.len() / 2).copied().unwrap_or(f64::INFINITY);
    let pitch_ok = errors.len() >= 100 && median <= step;

    let sd = |lsp| {
        let profile = QuantizerProfile {
            lsp,
            pitch_energy: PitchEnergyMode::Coarse12,
        };
        evaluate_quantizer(&ProfileQuantizer { books: &books, profile }, &held_out)
            .unwrap()
            .mean_sd_db
    };
    let (sd23, sd27) = (sd(LspMode::Coarse23), sd(LspMode::Fine27));
    let elapsed = started.elapsed().as_secs_f64();
    outcome(
        duration_ok && pitch_ok && sd23 >= sd27 && training_monotone && elapsed < 300.0,
        format!(
            "duration {}/{} samples; pitch median |dx_p| {median:.4} <= step {step:.4} over {} frames; \
             SD 23-bit {sd23:.3} dB >= 27-bit {sd27:.3} dB on {} held-out utterances; {elapsed:.0}s",
            out.len(),
            pcm.len(),
            errors.len(),
            held_out.len()
        ),
    )
}

fn main() {
    // (name, check, time limit in seconds)
    let criteria: [(&str, fn() -> Outcome, f64); 8] = [
        ("bit allocation exactness", bit_allocation, 1.0),
        ("round-trip integrity", round_trip, 10.0),
        ("vq oracle equivalence", vq_oracle, 10.0),
        ("lbg properties", lbg_properties, 30.0),
        ("predictive state sync", state_sync, 10.0),
        ("transform correctness", transforms, 1.0),
        ("lsp pipeline", lsp_pipeline, 30.0),
        ("end-to-end desk run", end_to_end, 300.0),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let t = Instant::now();
        let r = run();
        let secs = t.elapsed().as_secs_f64();
        let pass = r.pass && secs < limit;
        failed += (!pass) as usize;
        println!(
            "{} {name} ({secs:.1}s, limit {limit:.0}s): {}",
            if pass { "PASS" } else { "FAIL" },
            r.detail
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
