//! Mono WAV input and 16-bit PCM output.

use std::path::Path;

use spkid_core::AudioSignal;

use crate::error::{Error, Result};

/// Reads a mono WAV (8 or 16 kHz; integer or float samples) into an
/// unprepared signal scaled to [-1, 1].
pub fn read_wav(path: &Path) -> Result<AudioSignal> {
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedAudio {
            path: path.to_path_buf(),
            message: format!("expected mono audio, found {} channels", spec.channels),
        });
    }
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(wav_err)?,
        hound::SampleFormat::Int => {
            let scale = f64::from(1u32 << (spec.bits_per_sample - 1));
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<Result<_, _>>()
                .map_err(wav_err)?
        }
    };
    AudioSignal::new(samples, spec.sample_rate).map_err(|e| Error::UnsupportedAudio {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes `samples` (expected in [-1, 1), clipped otherwise) as 16-bit PCM.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate_hz: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    // same full-scale factor as `read_wav`
    let scale = -f64::from(i16::MIN);
    for &s in samples {
        let v = (s * scale)
            .round()
            .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16;
        writer.write_sample(v).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}
