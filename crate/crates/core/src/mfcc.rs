//! 13-coefficient MFCC baseline pooled to mean and standard deviation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::Waveform;
use crate::fft;

/// Floor added to mel energies before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum MfccError {
    #[error("signal of {len} samples is shorter than the {window}-sample window")]
    SignalTooShort { len: usize, window: usize },
    #[error("need at least 2 frames for statistics, got {0}")]
    TooFewFrames(usize),
    #[error("invalid MFCC config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub n_coeffs: usize,
    pub win_ms: f64,
    pub hop_ms: f64,
    pub n_fft: usize,
    pub n_mels: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self { n_coeffs: 13, win_ms: 20.0, hop_ms: 10.0, n_fft: 512, n_mels: 26, fmin_hz: 0.0, fmax_hz: 8000.0 }
    }
}

impl MfccConfig {
    pub fn window_samples(&self, sample_rate_hz: u32) -> usize {
        (self.win_ms * sample_rate_hz as f64 / 1000.0).round() as usize
    }

    pub fn hop_samples(&self, sample_rate_hz: u32) -> usize {
        (self.hop_ms * sample_rate_hz as f64 / 1000.0).round() as usize
    }

    /// Length of the pooled utterance vector.
    pub fn stats_dim(&self) -> usize {
        2 * self.n_coeffs
    }

    pub fn validate(&self, sample_rate_hz: u32) -> Result<(), MfccError> {
        let bad = |m: String| Err(MfccError::InvalidConfig(m));
        if self.n_coeffs == 0 || self.n_coeffs > self.n_mels {
            return bad(format!("n_coeffs={} must be in 1..=n_mels={}", self.n_coeffs, self.n_mels));
        }
        let win = self.window_samples(sample_rate_hz);
        if win == 0 || win > self.n_fft {
            return bad(format!("window of {win} samples must be in 1..=n_fft={}", self.n_fft));
        }
        if self.hop_samples(sample_rate_hz) == 0 {
            return bad("hop must be at least one sample".into());
        }
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < self.fmax_hz) {
            return bad(format!("need 0 <= fmin_hz < fmax_hz, got {}..{}", self.fmin_hz, self.fmax_hz));
        }
        if self.fmax_hz > sample_rate_hz as f64 / 2.0 {
            return bad(format!("fmax_hz={} is above Nyquist", self.fmax_hz));
        }
        Ok(())
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters (`n_mels` rows × `n_fft/2 + 1` bins), peaks uniform in mel, unit peak height.
pub fn mel_filterbank(cfg: &MfccConfig, sample_rate_hz: u32) -> Vec<Vec<f64>> {
    let n_bins = cfg.n_fft / 2 + 1;
    let lo = hz_to_mel(cfg.fmin_hz);
    let hi = hz_to_mel(cfg.fmax_hz);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate_hz as f64 / cfg.n_fft as f64;
    (0..cfg.n_mels)
        .map(|m| {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let rise = (f - left) / (center - left);
                    let fall = (right - f) / (right - center);
                    rise.min(fall).max(0.0)
                })
                .collect()
        })
        .collect()
}

fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Orthonormal DCT-II basis rows `0..n_out` for length-`n` inputs.
fn dct_basis(n: usize, n_out: usize) -> Vec<Vec<f64>> {
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            (0..n)
                .map(|i| scale * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                .collect()
        })
        .collect()
}

/// Number of frames for a signal of `len` samples.
pub fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    if len < window {
        0
    } else {
        1 + (len - window) / hop
    }
}

/// Reusable MFCC extractor: precomputed window, mel matrix and DCT basis.
#[derive(Debug, Clone)]
pub struct MfccExtractor {
    cfg: MfccConfig,
    sample_rate_hz: u32,
    window: Vec<f64>,
    hop: usize,
    mel: Vec<Vec<f64>>,
    dct: Vec<Vec<f64>>,
}

impl MfccExtractor {
    pub fn new(cfg: MfccConfig, sample_rate_hz: u32) -> Result<Self, MfccError> {
        cfg.validate(sample_rate_hz)?;
        let window = hamming(cfg.window_samples(sample_rate_hz));
        let hop = cfg.hop_samples(sample_rate_hz);
        let mel = mel_filterbank(&cfg, sample_rate_hz);
        let dct = dct_basis(cfg.n_mels, cfg.n_coeffs);
        Ok(Self { cfg, sample_rate_hz, window, hop, mel, dct })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    /// One row of `n_coeffs` cepstral coefficients per frame.
    pub fn frames(&self, x: &Waveform) -> Result<Vec<Vec<f64>>, MfccError> {
        assert_eq!(x.sample_rate_hz(), self.sample_rate_hz, "sample rate mismatch");
        let samples = x.samples();
        let win = self.window.len();
        let n_frames = frame_count(samples.len(), win, self.hop);
        if n_frames == 0 {
            return Err(MfccError::SignalTooShort { len: samples.len(), window: win });
        }
        let n_fft = self.cfg.n_fft;
        let r2c = fft::real_forward(n_fft);
        let mut input = vec![0.0; n_fft];
        let mut spectrum = r2c.make_output_vec();
        let mut power = vec![0.0; n_fft / 2 + 1];
        let mut log_mel = vec![0.0; self.cfg.n_mels];

        let mut out = Vec::with_capacity(n_frames);
        for i in 0..n_frames {
            let frame = &samples[i * self.hop..i * self.hop + win];
            input.iter_mut().for_each(|v| *v = 0.0);
            for (dst, (s, w)) in input.iter_mut().zip(frame.iter().zip(&self.window)) {
                *dst = s * w;
            }
            r2c.process(&mut input, &mut spectrum).expect("buffer sizes come from the plan");
            for (p, z) in power.iter_mut().zip(&spectrum) {
                *p = z.norm_sqr();
            }
            cepstrum_from_power(&power, &self.mel, &self.dct, &mut log_mel, &mut out);
        }
        Ok(out)
    }

    /// 26-dim (for 13 coefficients) mean + std utterance vector.
    pub fn utterance_vector(&self, x: &Waveform) -> Result<Vec<f64>, MfccError> {
        mfcc_stats(&self.frames(x)?)
    }
}

fn cepstrum_from_power(
    power: &[f64],
    mel: &[Vec<f64>],
    dct: &[Vec<f64>],
    log_mel: &mut [f64],
    out: &mut Vec<Vec<f64>>,
) {
    for (lm, filter) in log_mel.iter_mut().zip(mel) {
        let energy: f64 = filter.iter().zip(power).map(|(w, p)| w * p).sum();
        *lm = (energy + LOG_FLOOR).ln();
    }
    out.push(dct.iter().map(|row| row.iter().zip(log_mel.iter()).map(|(a, b)| a * b).sum()).collect());
}

/// MFCC frames of `x`: Hamming window, |DFT|², mel energies, `ln(E + 1e-10)`, orthonormal DCT-II.
pub fn mfcc_frames(x: &Waveform, cfg: &MfccConfig) -> Result<Vec<Vec<f64>>, MfccError> {
    MfccExtractor::new(cfg.clone(), x.sample_rate_hz())?.frames(x)
}

/// Per-coefficient mean followed by per-coefficient population standard deviation.
pub fn mfcc_stats(frames: &[Vec<f64>]) -> Result<Vec<f64>, MfccError> {
    if frames.len() < 2 {
        return Err(MfccError::TooFewFrames(frames.len()));
    }
    let dim = frames[0].len();
    let n = frames.len() as f64;
    let mut mean = vec![0.0; dim];
    for f in frames {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for f in frames {
        for ((s, v), m) in var.iter_mut().zip(f).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt());
    Ok(mean.iter().copied().chain(std).collect())
}
