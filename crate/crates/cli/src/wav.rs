//! 8 kHz mono PCM16 WAV input and output.

use std::path::Path;

use crate::CliError;

pub const RATE: u32 = cqnv::analysis::SAMPLE_RATE as u32;

fn spec() -> hound::WavSpec {
    hound::WavSpec {
        channels: 1,
        sample_rate: RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    }
}

fn convert(path: &Path, e: hound::Error) -> CliError {
    match e {
        hound::Error::IoError(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}

/// Reads samples scaled to [-1, 1). Anything but 8 kHz mono PCM16 is rejected.
pub fn read(path: &Path) -> Result<Vec<f64>, CliError> {
    let reader = hound::WavReader::open(path).map_err(|e| convert(path, e))?;
    let s = reader.spec();
    if s.sample_rate != RATE || s.channels != 1 || s.bits_per_sample != 16 || s.sample_format != hound::SampleFormat::Int {
        return Err(CliError::Data(format!(
            "{}: expected 8000 Hz mono 16-bit PCM, got {} Hz, {} channel(s), {}-bit {:?}",
            path.display(),
            s.sample_rate,
            s.channels,
            s.bits_per_sample,
            s.sample_format
        )));
    }
    reader
        .into_samples::<i16>()
        .map(|r| r.map(|v| f64::from(v) / 32768.0).map_err(|e| convert(path, e)))
        .collect()
}

pub fn write(path: &Path, pcm: &[f64]) -> Result<(), CliError> {
    let mut w = hound::WavWriter::create(path, spec()).map_err(|e| convert(path, e))?;
    for &v in pcm {
        let s = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(s).map_err(|e| convert(path, e))?;
    }
    w.finalize().map_err(|e| convert(path, e))
}
