//! Speech front end: decimation to 8 kHz, pre-emphasis, Hamming-windowed
//! framing and LPC-cepstrum (LPCC) features.
//!
//! Frames are 240 samples (30 ms at 8 kHz) with a hop of 80 samples, so that
//! adjacent frames overlap by two thirds. LPC analysis runs at order 10 by the
//! autocorrelation method and the cepstral recursion is carried to order 12.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;

pub const SAMPLE_RATE_HZ: u32 = 8000;
pub const FRAME_LEN: usize = 240;
pub const FRAME_HOP: usize = 80;
pub const LPC_ORDER: usize = 10;
pub const CEPSTRUM_ORDER: usize = 12;
pub const PRE_EMPHASIS: f64 = 0.95;
pub const DECIMATION_TAPS: usize = 63;
pub const DECIMATION_CUTOFF_HZ: f64 = 3400.0;

// ---------------------------------------------------------------------------
// Signals
// ---------------------------------------------------------------------------

/// Mono audio with samples nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
    prepared: bool,
}

impl AudioSignal {
    /// Wraps raw input audio. Only 8 kHz and 16 kHz are accepted.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz != 8000 && sample_rate_hz != 16000 {
            return Err(Error::UnsupportedSampleRate(sample_rate_hz));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            prepared: false,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    /// True once [`prepare`] has produced this signal.
    pub fn is_prepared(&self) -> bool {
        self.prepared
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// Brings a raw signal to the analysis domain: 8 kHz, pre-emphasized with
/// `1 - 0.95 z^-1`, and peak-normalized to [-1, 1].
///
/// Pre-emphasis is not idempotent, so preparing an already prepared signal is
/// rejected with [`Error::AlreadyPrepared`].
pub fn prepare(signal: &AudioSignal) -> Result<AudioSignal> {
    if signal.prepared {
        return Err(Error::AlreadyPrepared);
    }
    let resampled = match signal.sample_rate_hz {
        8000 => signal.samples.clone(),
        16000 => decimate_by_two(&signal.samples),
        other => return Err(Error::UnsupportedSampleRate(other)),
    };
    let mut samples = pre_emphasize(&resampled);
    peak_normalize(&mut samples);
    Ok(AudioSignal {
        samples,
        sample_rate_hz: SAMPLE_RATE_HZ,
        prepared: true,
    })
}

/// `y[n] = x[n] - 0.95 x[n-1]`, with `y[0] = x[0]`.
pub fn pre_emphasize(x: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    let mut prev = 0.0;
    for &s in x {
        y.push(s - PRE_EMPHASIS * prev);
        prev = s;
    }
    y
}

/// Scales so that the largest magnitude is 1. All-zero input is left alone.
pub fn peak_normalize(x: &mut [f64]) {
    let peak = x.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    if peak > 0.0 {
        for s in x.iter_mut() {
            *s /= peak;
        }
    }
}

/// Low-pass FIR used before dropping every other sample: a 63-tap
/// Hamming-windowed sinc with a 3.4 kHz cutoff at 16 kHz, unity DC gain.
pub fn decimation_taps() -> Vec<f64> {
    let fc = DECIMATION_CUTOFF_HZ / 16000.0;
    let mid = (DECIMATION_TAPS - 1) as f64 / 2.0;
    let window = hamming_window(DECIMATION_TAPS);
    let mut h: Vec<f64> = (0..DECIMATION_TAPS)
        .map(|n| {
            let t = n as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                math::sin(2.0 * PI * fc * t) / (PI * t)
            };
            sinc * window[n]
        })
        .collect();
    let gain: f64 = h.iter().sum();
    for c in &mut h {
        *c /= gain;
    }
    h
}

/// Anti-alias filters and keeps even-indexed samples. The filter is applied
/// centred (zero group delay) with zero padding at both ends.
pub fn decimate_by_two(x: &[f64]) -> Vec<f64> {
    let h = decimation_taps();
    let half = (h.len() / 2) as isize;
    let n = x.len() as isize;
    (0..x.len().div_ceil(2))
        .map(|m| {
            let centre = 2 * m as isize;
            h.iter()
                .enumerate()
                .filter_map(|(k, &c)| {
                    let idx = centre + half - k as isize;
                    (0..n).contains(&idx).then(|| c * x[idx as usize])
                })
                .sum()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Framing
// ---------------------------------------------------------------------------

/// `w[n] = 0.54 - 0.46 cos(2 pi n / (L - 1))`.
pub fn hamming_window(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * math::cos(2.0 * PI * n as f64 / denom))
        .collect()
}

/// One 240-sample analysis frame. Keeps the unwindowed samples because
/// residual scoring filters the raw waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    raw: Vec<f64>,
    windowed: Vec<f64>,
    start_index: usize,
}

impl Frame {
    pub fn from_raw(raw: &[f64], start_index: usize) -> Result<Self> {
        if raw.len() != FRAME_LEN {
            return Err(Error::InvalidArgument(
                "frame must hold exactly 240 samples",
            ));
        }
        Ok(Self::with_window(
            raw,
            start_index,
            &hamming_window(FRAME_LEN),
        ))
    }

    fn with_window(raw: &[f64], start_index: usize, window: &[f64]) -> Self {
        let windowed = raw.iter().zip(window).map(|(s, w)| s * w).collect();
        Self {
            raw: raw.to_vec(),
            windowed,
            start_index,
        }
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn windowed(&self) -> &[f64] {
        &self.windowed
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    /// True when every raw sample is exactly zero.
    pub fn is_silent(&self) -> bool {
        self.raw.iter().all(|&s| s == 0.0)
    }
}

/// Splits a prepared 8 kHz signal into frames. A trailing partial frame is
/// dropped; signals shorter than one frame give no frames.
pub fn frames(signal: &AudioSignal) -> Result<Vec<Frame>> {
    if !signal.prepared || signal.sample_rate_hz != SAMPLE_RATE_HZ {
        return Err(Error::NotPrepared);
    }
    Ok(frame_samples(&signal.samples))
}

/// Framing on a bare sample slice, without the prepared-signal check.
pub fn frame_samples(samples: &[f64]) -> Vec<Frame> {
    if samples.len() < FRAME_LEN {
        return Vec::new();
    }
    let window = hamming_window(FRAME_LEN);
    (0..=(samples.len() - FRAME_LEN) / FRAME_HOP)
        .map(|i| {
            let start = i * FRAME_HOP;
            Frame::with_window(&samples[start..start + FRAME_LEN], start, &window)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// LPC analysis
// ---------------------------------------------------------------------------

/// `r[k] = sum_n x[n] x[n+k]` for `k = 0..=max_lag`.
pub fn autocorrelate(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= x.len() {
        return Err(Error::InvalidArgument(
            "max_lag must be shorter than the signal",
        ));
    }
    Ok((0..=max_lag)
        .map(|k| x[k..].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect())
}

/// Result of a Levinson-Durbin recursion.
///
/// `lpc[k-1]` is `a_k` in the predictor `x^[n] = sum_k a_k x[n-k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcAnalysis {
    pub lpc: Vec<f64>,
    pub reflection: Vec<f64>,
    pub pred_error: f64,
}

/// Solves the normal equations of the autocorrelation method.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<LpcAnalysis> {
    if order + 1 > r.len() {
        return Err(Error::InvalidArgument(
            "order exceeds available autocorrelation lags",
        ));
    }
    if !(r[0] > 0.0) {
        return Err(Error::DegenerateFrame);
    }
    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut reflection = Vec::with_capacity(order);
    let mut err = r[0];
    for i in 1..=order {
        let acc = r[i] - (1..i).map(|j| a[j - 1] * r[i - j]).sum::<f64>();
        let k = acc / err;
        if !(k.abs() < 1.0) {
            return Err(Error::Singular {
                order: i,
                reflection: k,
            });
        }
        prev[..i - 1].copy_from_slice(&a[..i - 1]);
        for j in 1..i {
            a[j - 1] = prev[j - 1] - k * prev[i - j - 1];
        }
        a[i - 1] = k;
        reflection.push(k);
        err *= 1.0 - k * k;
        if !(err > 0.0) {
            return Err(Error::Singular {
                order: i,
                reflection: k,
            });
        }
    }
    Ok(LpcAnalysis {
        lpc: a,
        reflection,
        pred_error: err,
    })
}

/// Step-down recursion from predictor coefficients to reflection
/// coefficients. Fails if the model is unstable.
pub fn lpc_to_reflection(lpc: &[f64]) -> Result<Vec<f64>> {
    let mut a = lpc.to_vec();
    let mut reflection = vec![0.0; lpc.len()];
    for i in (1..=lpc.len()).rev() {
        let k = a[i - 1];
        if !(k.abs() < 1.0) {
            return Err(Error::UnstableModel {
                order: i,
                reflection: k,
            });
        }
        reflection[i - 1] = k;
        let scale = 1.0 - k * k;
        let prev: Vec<f64> = (1..i)
            .map(|j| (a[j - 1] + k * a[i - j - 1]) / scale)
            .collect();
        a[..i - 1].copy_from_slice(&prev);
    }
    Ok(reflection)
}

/// Cepstrum of the all-pole model `1 / (1 - sum_k a_k z^-k)`, coefficients
/// `c_1..c_order`:
///
/// `c_n = a_n + sum_{k=1}^{n-1} (k/n) c_k a_{n-k}`, with `a_n = 0` past the
/// LPC order.
pub fn lpc_to_cepstrum(lpc: &[f64], order: usize) -> Result<Vec<f64>> {
    lpc_to_reflection(lpc)?;
    let coeff = |n: usize| if n <= lpc.len() { lpc[n - 1] } else { 0.0 };
    let mut c: Vec<f64> = Vec::with_capacity(order);
    for n in 1..=order {
        let tail: f64 = (1..n)
            .map(|k| (k as f64 / n as f64) * c[k - 1] * coeff(n - k))
            .sum();
        c.push(coeff(n) + tail);
    }
    Ok(c)
}

/// A 12-dimensional LPC-cepstrum feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct LpccVector(pub [f64; CEPSTRUM_ORDER]);

impl LpccVector {
    pub const ZERO: LpccVector = LpccVector([0.0; CEPSTRUM_ORDER]);

    pub fn from_slice(c: &[f64]) -> Result<Self> {
        let arr: [f64; CEPSTRUM_ORDER] = c
            .try_into()
            .map_err(|_| Error::InvalidArgument("LPCC vector must have 12 coefficients"))?;
        if arr.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("LPCC coefficients must be finite"));
        }
        Ok(Self(arr))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl core::ops::Index<usize> for LpccVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Order-10 LPC analysis of the windowed frame followed by the order-12
/// cepstral recursion.
pub fn analyze_frame(frame: &Frame) -> Result<LpccVector> {
    let r = autocorrelate(frame.windowed(), LPC_ORDER)?;
    let lpc = levinson_durbin(&r, LPC_ORDER)?;
    LpccVector::from_slice(&lpc_to_cepstrum(&lpc.lpc, CEPSTRUM_ORDER)?)
}

/// Frames of one utterance paired with their LPCC vectors.
#[derive(Debug, Clone, Default)]
pub struct SentenceFeatures {
    pub frames: Vec<Frame>,
    pub lpcc: Vec<LpccVector>,
    /// Frames dropped because they have no usable LPC model (silence, or a
    /// numerically singular autocorrelation).
    pub skipped: usize,
}

impl SentenceFeatures {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Appends another sentence's frames; frame offsets are kept as they were.
    pub fn extend(&mut self, other: SentenceFeatures) {
        self.frames.extend(other.frames);
        self.lpcc.extend(other.lpcc);
        self.skipped += other.skipped;
    }
}

/// Frames a prepared signal and computes LPCC for each frame. Degenerate
/// frames are skipped and counted: they contribute neither to codebook
/// training nor to recognition scores.
pub fn extract_features(signal: &AudioSignal) -> Result<SentenceFeatures> {
    let mut out = SentenceFeatures::default();
    for frame in frames(signal)? {
        match analyze_frame(&frame) {
            Ok(v) => {
                out.frames.push(frame);
                out.lpcc.push(v);
            }
            Err(Error::DegenerateFrame | Error::Singular { .. } | Error::UnstableModel { .. }) => {
                out.skipped += 1
            }
            Err(e) => return Err(e),
        }
    }
    if out.skipped > 0 {
        log::debug!("skipped {} degenerate frames", out.skipped);
    }
    Ok(out)
}
