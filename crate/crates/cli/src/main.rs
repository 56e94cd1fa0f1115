//! `cqnv`: train codebooks, encode/decode speech, export vocoder features.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/CRC error, 3 I/O error.

mod wav;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cqnv::analysis::FrameParams;
use cqnv::bitstream::{read_stream, write_stream, CodecVersion, PACKET_MS};
use cqnv::codec::{
    load_codebook_set, save_codebook, train_lsp_split, train_lsp_stage1, train_pitch_energy, Decoder, Encoder,
    TrainedBook, TrainingOptions,
};
use cqnv::corpus::{analyze_corpus, generate_corpus, CorpusConfig};
use cqnv::decoder::write_features;
use cqnv::metrics::{evaluate_quantizer, CodecQuantizer, DistortionReport, FrameQuantizer, ProfileQuantizer};
use cqnv::quantizers::{CodebookSet, LspMode, PitchEnergyMode, CODEBOOK_FILES};

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Io(m) => m,
        }
    }
}

impl From<cqnv::Error> for CliError {
    fn from(e: cqnv::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "cqnv", about = "Low-bitrate parametric speech codec", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Codec version.
    #[arg(long = "version", default_value = "v3", value_parser = parse_version)]
    version: CodecVersion,
    /// Directory holding the seven .cqvq codebooks.
    #[arg(long, default_value = "codebooks")]
    codebooks: PathBuf,
    /// Seed for every random choice (synthesis noise, corpus generation).
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Which {
    Lsp1,
    LspSplit,
    PitchEnergy,
    All,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum EvalPath {
    /// Per-frame quantization, no packet interpolation.
    Quantizer,
    /// Full encode and decode including interpolation.
    Codec,
}

#[derive(Subcommand)]
enum Command {
    /// Train codebooks from a directory of 8 kHz mono WAV files.
    Train {
        corpus_dir: PathBuf,
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        which: Which,
        /// LBG iteration cap per codebook size.
        #[arg(long, default_value_t = 100)]
        max_iterations: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Encode a WAV file into a packet stream.
    Encode {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Decode a packet stream to WAV with the built-in LPC synthesizer.
    Decode {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Export the per-frame vocoder conditioning features of a stream.
    Features {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the distortion of two versions over a WAV corpus.
    Eval {
        corpus_dir: PathBuf,
        #[arg(long, value_parser = parse_version, default_value = "v1")]
        profile_a: CodecVersion,
        #[arg(long, value_parser = parse_version, default_value = "v3")]
        profile_b: CodecVersion,
        #[arg(long, value_enum, default_value = "quantizer")]
        path: EvalPath,
        /// Also print a JSON dump of both reports.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic speech-like WAV corpus.
    GenCorpus {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Print the header summary of a packet stream.
    Info {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_version(s: &str) -> Result<CodecVersion, String> {
    s.parse::<CodecVersion>().map_err(|e| e.to_string())
}

fn wav_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!("no .wav files in {}", dir.display())));
    }
    Ok(files)
}

fn analyze_dir(dir: &Path) -> CliResult<Vec<Vec<FrameParams>>> {
    let audio = wav_files(dir)?
        .iter()
        .map(|p| wav::read(p))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(analyze_corpus(&audio)?)
}

fn load_books(dir: &Path) -> CliResult<CodebookSet> {
    load_codebook_set(dir).map_err(|e| match e {
        cqnv::Error::Io(io) => CliError::Io(format!("codebooks in {}: {io}", dir.display())),
        other => other.into(),
    })
}

fn read_container(path: &Path) -> CliResult<(CodecVersion, Vec<cqnv::bitstream::Packet>)> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    read_stream(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn cmd_train(corpus_dir: &Path, out_dir: &Path, which: Which, max_iterations: usize) -> CliResult<()> {
    let corpus = analyze_dir(corpus_dir)?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let opts = TrainingOptions {
        max_iterations,
        ..TrainingOptions::default()
    };

    let mut trained: Vec<TrainedBook> = Vec::new();
    if matches!(which, Which::Lsp1 | Which::All) {
        trained.push(train_lsp_stage1(&corpus, &opts)?);
    }
    if matches!(which, Which::LspSplit | Which::All) {
        // the residual books need the first stage: freshly trained or on disk
        let stage1 = match trained.first() {
            Some(b) => b.outcome.codebook.clone(),
            None => {
                let path = out_dir.join(CODEBOOK_FILES[0]);
                let file = File::open(&path).map_err(|e| io_err(&path, e))?;
                cqnv::vq::read_codebook(std::io::BufReader::new(file))?
            }
        };
        for mode in [LspMode::Fine27, LspMode::Coarse23] {
            trained.extend(train_lsp_split(&corpus, &stage1, mode, &opts)?);
        }
    }
    if matches!(which, Which::PitchEnergy | Which::All) {
        for mode in [PitchEnergyMode::Fine16, PitchEnergyMode::Coarse12] {
            trained.push(train_pitch_energy(&corpus, mode, &opts)?);
        }
    }

    let mut log = String::new();
    for b in &trained {
        let cb = &b.outcome.codebook;
        save_codebook(out_dir, b.name, cb)?;
        for r in &b.outcome.log {
            writeln!(log, "book={} size={} iteration={} distortion={:.9e}", b.name, r.size, r.iteration, r.distortion)
                .expect("string write");
        }
        println!(
            "{}: {} x {} from {} vectors, distortion {:.6e}",
            b.name,
            cb.len(),
            cb.dim(),
            b.vectors,
            b.outcome.final_distortion
        );
    }
    write_file(&out_dir.join("training_log.txt"), log.as_bytes())?;
    Ok(())
}

fn cmd_encode(input: &Path, output: &Path, common: &Common) -> CliResult<()> {
    let pcm = wav::read(input)?;
    let books = load_books(&common.codebooks)?;
    let enc = Encoder::new(&books, common.version).encode_pcm(&pcm)?;
    let bytes = write_stream(common.version, &enc.packets)?;
    write_file(output, &bytes)?;
    println!(
        "{}: {} packets, {} bytes at {} bps",
        output.display(),
        enc.packets.len(),
        bytes.len(),
        common.version.bitrate_bps()
    );
    Ok(())
}

fn cmd_decode(input: &Path, output: &Path, common: &Common) -> CliResult<()> {
    let (version, packets) = read_container(input)?;
    let books = load_books(&common.codebooks)?;
    let pcm = Decoder::new(&books, version).decode_pcm(&packets, common.seed)?;
    wav::write(output, &pcm)?;
    println!("{}: {} samples", output.display(), pcm.len());
    Ok(())
}

fn cmd_features(input: &Path, output: &Path, common: &Common) -> CliResult<()> {
    let (version, packets) = read_container(input)?;
    let books = load_books(&common.codebooks)?;
    let frames = Decoder::new(&books, version).decode_features(&packets)?;
    let file = File::create(output).map_err(|e| io_err(output, e))?;
    let mut out = BufWriter::new(file);
    write_features(&frames, &mut out)?;
    out.flush().map_err(|e| io_err(output, e))?;
    println!("{}: {} frames", output.display(), frames.len());
    Ok(())
}

fn cmd_eval(corpus_dir: &Path, a: CodecVersion, b: CodecVersion, path: EvalPath, json: bool, common: &Common) -> CliResult<()> {
    let corpus = analyze_dir(corpus_dir)?;
    let books = load_books(&common.codebooks)?;
    let report = |v: CodecVersion| -> CliResult<DistortionReport> {
        let q: Box<dyn FrameQuantizer + '_> = match path {
            EvalPath::Quantizer => Box::new(ProfileQuantizer {
                books: &books,
                profile: v.profile(),
            }),
            EvalPath::Codec => Box::new(CodecQuantizer { books: &books, version: v }),
        };
        Ok(evaluate_quantizer(q.as_ref(), &corpus)?)
    };
    let (ra, rb) = (report(a)?, report(b)?);
    for (tag, v, r) in [("a", a, &ra), ("b", b, &rb)] {
        println!("{tag}.version={v}");
        for line in r.to_text().lines() {
            println!("{tag}.{line}");
        }
    }
    println!("delta.mean_sd_db={:.6}", rb.mean_sd_db - ra.mean_sd_db);
    if json {
        println!("{{\"a\":{},\"b\":{}}}", ra.to_json(), rb.to_json());
    }
    Ok(())
}

fn cmd_gen_corpus(out_dir: &Path, count: usize, common: &Common) -> CliResult<()> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    for (i, pcm) in generate_corpus(&CorpusConfig::new(count, common.seed)).iter().enumerate() {
        wav::write(&out_dir.join(format!("utt{i:04}.wav")), pcm)?;
    }
    println!("{}: {count} utterances", out_dir.display());
    Ok(())
}

fn cmd_info(input: &Path) -> CliResult<()> {
    let (version, packets) = read_container(input)?;
    println!("version={version}");
    println!("packets={}", packets.len());
    println!("packet_bits={}", version.packet_bits());
    println!("bitrate_bps={}", version.bitrate_bps());
    println!("duration_s={:.3}", packets.len() as f64 * PACKET_MS as f64 / 1000.0);
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train {
            corpus_dir,
            out_dir,
            which,
            max_iterations,
            ..
        } => {
            if max_iterations == 0 {
                return Err(CliError::Usage("--max-iterations must be positive".into()));
            }
            cmd_train(&corpus_dir, &out_dir, which, max_iterations)
        }
        Command::Encode { input, output, common } => cmd_encode(&input, &output, &common),
        Command::Decode { input, output, common } => cmd_decode(&input, &output, &common),
        Command::Features { input, output, common } => cmd_features(&input, &output, &common),
        Command::Eval {
            corpus_dir,
            profile_a,
            profile_b,
            path,
            json,
            common,
        } => cmd_eval(&corpus_dir, profile_a, profile_b, path, json, &common),
        Command::GenCorpus { out_dir, count, common } => cmd_gen_corpus(&out_dir, count, &common),
        Command::Info { input, .. } => cmd_info(&input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
