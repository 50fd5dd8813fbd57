use std::path::Path;

use super::{AudioBuffer, EngineError};

/// Scales by 32767 with rounding half away from zero, saturating at ±1.
pub fn to_pcm16(x: f64) -> i16 {
    (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

/// 16-bit mono PCM RIFF/WAVE with the canonical 44-byte header.
pub fn write_wav(buf: &AudioBuffer, path: &Path) -> Result<(), EngineError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buf.rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let err = |e: hound::Error| EngineError::Wav(e.to_string());
    let mut w = hound::WavWriter::create(path, spec).map_err(err)?;
    let mut w16 = w.get_i16_writer(buf.samples.len() as u32);
    for &x in &buf.samples {
        w16.write_sample(to_pcm16(x));
    }
    w16.flush().map_err(err)?;
    w.finalize().map_err(err)
}

/// Reads 16-bit PCM; multichannel input is averaged to mono.
pub fn read_wav(path: &Path) -> Result<AudioBuffer, EngineError> {
    let err = |e: hound::Error| EngineError::Wav(e.to_string());
    let mut r = hound::WavReader::open(path).map_err(err)?;
    let spec = r.spec();
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(EngineError::Wav(format!(
            "expected 16-bit PCM, got {} bit {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let ch = spec.channels.max(1) as usize;
    let raw: Vec<i16> = r.samples::<i16>().collect::<Result<_, _>>().map_err(err)?;
    let samples = raw
        .chunks(ch)
        .map(|c| c.iter().map(|&s| s as f64).sum::<f64>() / (ch as f64 * 32767.0))
        .collect();
    Ok(AudioBuffer {
        samples,
        rate: spec.sample_rate,
    })
}
