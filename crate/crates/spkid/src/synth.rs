//! Synthetic speakers: white noise through an order-10 all-pole filter, with
//! `tanh(g x)` waveshaping for some speakers.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spkid_core::derive_seed;
use spkid_core::frontend::{LPC_ORDER, SAMPLE_RATE_HZ};
use spkid_core::AudioSignal;

use crate::config::{parse_value, read_key_values, Entry};
use crate::corpus::{Corpus, SpeakerData, Utterance};
use crate::error::{Error, Result};
use crate::wav::write_wav;

/// Samples discarded while the filter state settles.
const BURN_IN: usize = 500;
/// Peak amplitude of written utterances.
const OUTPUT_PEAK: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticSpec {
    pub num_speakers: usize,
    /// The last this many speakers get waveshaping.
    pub nonlinear_speakers: usize,
    pub train_utterances: usize,
    pub test_utterances: usize,
    pub min_secs: f64,
    pub max_secs: f64,
    pub pole_radius_min: f64,
    pub pole_radius_max: f64,
    pub gain_min: f64,
    pub gain_max: f64,
    /// Additive white noise, relative to the clean signal's RMS.
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_speakers: 10,
            nonlinear_speakers: 5,
            train_utterances: 5,
            test_utterances: 5,
            min_secs: 1.0,
            max_secs: 3.0,
            pole_radius_min: 0.6,
            pole_radius_max: 0.95,
            gain_min: 1.0,
            gain_max: 3.0,
            noise_level: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// Defaults overridden by the keys present in `entries`.
    pub fn from_entries(entries: &[Entry]) -> Result<Self> {
        let mut s = Self::default();
        for e in entries {
            match e.key.as_str() {
                "num-speakers" => s.num_speakers = parse_value(e)?,
                "nonlinear-speakers" => s.nonlinear_speakers = parse_value(e)?,
                "train-utterances" => s.train_utterances = parse_value(e)?,
                "test-utterances" => s.test_utterances = parse_value(e)?,
                "min-secs" => s.min_secs = parse_value(e)?,
                "max-secs" => s.max_secs = parse_value(e)?,
                "pole-radius-min" => s.pole_radius_min = parse_value(e)?,
                "pole-radius-max" => s.pole_radius_max = parse_value(e)?,
                "gain-min" => s.gain_min = parse_value(e)?,
                "gain-max" => s.gain_max = parse_value(e)?,
                "noise-level" => s.noise_level = parse_value(e)?,
                "seed" => s.seed = parse_value(e)?,
                other => {
                    return Err(Error::Spec {
                        line: e.line,
                        message: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_entries(&read_key_values(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.into()));
        if self.num_speakers == 0 {
            return bad("num_speakers must be positive");
        }
        if self.nonlinear_speakers > self.num_speakers {
            return bad("nonlinear_speakers exceeds num_speakers");
        }
        if self.train_utterances == 0 || self.test_utterances == 0 {
            return bad("each speaker needs train and test utterances");
        }
        if !(self.min_secs > 0.0 && self.min_secs <= self.max_secs && self.max_secs.is_finite()) {
            return bad("need 0 < min_secs <= max_secs");
        }
        if !(0.0 <= self.pole_radius_min && self.pole_radius_min <= self.pole_radius_max) {
            return bad("need 0 <= pole_radius_min <= pole_radius_max");
        }
        if self.pole_radius_max.is_nan() || self.pole_radius_max >= 1.0 {
            return bad("pole_radius_max must be below 1 for a stable filter");
        }
        if !(0.0 < self.gain_min && self.gain_min <= self.gain_max && self.gain_max.is_finite()) {
            return bad("need 0 < gain_min <= gain_max");
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return bad("noise_level must be non-negative");
        }
        Ok(())
    }
}

/// One synthetic speaker's generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerGenerator {
    pub id: String,
    /// Prediction coefficients, `x[n] = sum_k lpc[k-1] x[n-k] + w[n]`.
    pub lpc: [f64; LPC_ORDER],
    /// `Some(g)` for speakers shaped by `tanh(g x)`.
    pub shaping_gain: Option<f64>,
}

impl SpeakerGenerator {
    fn random(id: String, spec: &SyntheticSpec, nonlinear: bool, rng: &mut impl Rng) -> Self {
        // A(z) = prod over conjugate pairs of (1 - 2 r cos(t) z^-1 + r^2 z^-2)
        let mut poly = vec![1.0];
        for _ in 0..LPC_ORDER / 2 {
            let r = rng.gen_range(spec.pole_radius_min..=spec.pole_radius_max);
            let t = rng.gen_range(0.05..std::f64::consts::PI - 0.05);
            let quad = [1.0, -2.0 * r * t.cos(), r * r];
            let mut next = vec![0.0; poly.len() + 2];
            for (i, p) in poly.iter().enumerate() {
                for (j, q) in quad.iter().enumerate() {
                    next[i + j] += p * q;
                }
            }
            poly = next;
        }
        let lpc = std::array::from_fn(|k| -poly[k + 1]);
        let shaping_gain = nonlinear.then(|| rng.gen_range(spec.gain_min..=spec.gain_max));
        Self {
            id,
            lpc,
            shaping_gain,
        }
    }

    /// Unprepared 8 kHz utterance of `len` samples.
    pub fn utterance(&self, len: usize, noise_level: f64, rng: &mut impl Rng) -> AudioSignal {
        let p = LPC_ORDER;
        let mut x = vec![0.0; len + BURN_IN + p];
        for t in p..x.len() {
            let w: f64 = rng.sample(StandardNormal);
            x[t] = w + (1..=p).map(|k| self.lpc[k - 1] * x[t - k]).sum::<f64>();
        }
        let mut y = x.split_off(BURN_IN + p);
        let rms = |v: &[f64]| (v.iter().map(|s| s * s).sum::<f64>() / v.len().max(1) as f64).sqrt();
        let r = rms(&y);
        if r > 0.0 {
            y.iter_mut().for_each(|v| *v /= r);
        }
        if let Some(g) = self.shaping_gain {
            y.iter_mut().for_each(|v| *v = (g * *v).tanh());
        }
        if noise_level > 0.0 {
            let level = noise_level * rms(&y);
            for v in &mut y {
                let n: f64 = rng.sample(StandardNormal);
                *v += level * n;
            }
        }
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            y.iter_mut().for_each(|v| *v *= OUTPUT_PEAK / peak);
        }
        AudioSignal::new(y, SAMPLE_RATE_HZ).expect("supported rate")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpeaker {
    pub generator: SpeakerGenerator,
    /// Unprepared signals.
    pub train: Vec<AudioSignal>,
    pub test: Vec<AudioSignal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    pub speakers: Vec<SyntheticSpeaker>,
}

/// Deterministic in `spec.seed`: speaker `i` and each of its utterances
/// draw from their own derived streams.
pub fn synthesize(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let width = spec.num_speakers.saturating_sub(1).to_string().len().max(2);
    let linear_count = spec.num_speakers - spec.nonlinear_speakers;
    let speakers = (0..spec.num_speakers)
        .map(|i| {
            let speaker_seed = derive_seed(spec.seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(speaker_seed);
            let id = format!("spk{i:0width$}");
            let generator = SpeakerGenerator::random(id, spec, i >= linear_count, &mut rng);
            let mut utt = |j: usize| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(speaker_seed, 1 + j as u64));
                let secs = rng.gen_range(spec.min_secs..=spec.max_secs);
                let len = (secs * f64::from(SAMPLE_RATE_HZ)).round() as usize;
                generator.utterance(len, spec.noise_level, &mut rng)
            };
            let train = (0..spec.train_utterances).map(&mut utt).collect();
            let test = (spec.train_utterances..spec.train_utterances + spec.test_utterances)
                .map(&mut utt)
                .collect();
            SyntheticSpeaker {
                generator,
                train,
                test,
            }
        })
        .collect();
    Ok(SyntheticCorpus {
        spec: spec.clone(),
        speakers,
    })
}

fn utterance_name(id: &str, split: &str, j: usize) -> String {
    format!("{id}/{split}/{j:02}.wav")
}

impl SyntheticCorpus {
    /// Prepared corpus.
    pub fn to_corpus(&self) -> Result<Corpus> {
        let speakers = self
            .speakers
            .iter()
            .map(|s| {
                let id = &s.generator.id;
                let split = |name: &str, sigs: &[AudioSignal]| {
                    sigs.iter()
                        .enumerate()
                        .map(|(j, sig)| Utterance::new(utterance_name(id, name, j), sig.clone()))
                        .collect::<Result<Vec<_>>>()
                };
                Ok(SpeakerData {
                    id: id.clone(),
                    train: split("train", &s.train)?,
                    test: split("test", &s.test)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(speakers)
    }

    /// Writes the corpus in the layout [`crate::load_corpus`] reads.
    pub fn write(&self, root: &Path) -> Result<()> {
        for s in &self.speakers {
            for (split, sigs) in [("train", &s.train), ("test", &s.test)] {
                let dir = root.join(&s.generator.id).join(split);
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                for (j, sig) in sigs.iter().enumerate() {
                    let path = root.join(utterance_name(&s.generator.id, split, j));
                    write_wav(&path, sig.samples(), sig.sample_rate_hz())?;
                }
            }
        }
        Ok(())
    }
}

/// Prepared synthetic corpus for `spec`.
pub fn synth_corpus(spec: &SyntheticSpec) -> Result<Corpus> {
    synthesize(spec)?.to_corpus()
}
