//! Two-layer time scattering, frequency scattering along log-λ, and pooling.
//!
//! All convolutions are circular at length `n_fft = next_pow2(n)`. The input is
//! first center-cropped or padded to `n` samples and then zero-padded
//! symmetrically into the transform buffer. Low-pass averaged outputs are
//! sampled every `hop = T/2` samples, giving `n_fft / hop` frames per path.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{fix_length, Waveform};
use crate::fft;
use crate::filterbank::{build_morlet_bank, FilterBank, FilterBankError, FilterBankSpec, Region};

/// Sample rate every scattering input must have.
pub const SAMPLE_RATE_HZ: u32 = 16000;

#[derive(Debug, Error)]
pub enum ScatteringError {
    #[error("signal length {got} does not match transform length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("expected {expected} Hz input, got {got} Hz")]
    SampleRateMismatch { expected: u32, got: u32 },
    #[error("frequency axis too short: {0} layer-1 bins")]
    AxisTooShort(usize),
    #[error("invalid scattering config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    FilterBank(#[from] FilterBankError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScatteringConfig {
    /// Layer-1 wavelets per octave.
    pub q1: u32,
    /// Layer-2 wavelets per octave.
    pub q2: u32,
    /// Averaging scale in samples.
    pub t: usize,
    /// Signal length in samples after cropping or padding.
    pub n: usize,
    pub freq_scattering: bool,
    /// Maximal frequency-axis wavelet length, in log-λ bins.
    pub f_wavelet_len: usize,
    pub log_compress: bool,
    pub log_eps: f64,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        Self {
            q1: 5,
            q2: 1,
            t: 16384,
            n: 51000,
            freq_scattering: false,
            f_wavelet_len: 32,
            log_compress: false,
            log_eps: 1e-7,
        }
    }
}

impl ScatteringConfig {
    pub fn n_fft(&self) -> usize {
        self.n.max(1).next_power_of_two()
    }

    pub fn hop(&self) -> usize {
        self.t / 2
    }

    pub fn validate(&self) -> Result<(), ScatteringError> {
        let bad = |m: String| Err(ScatteringError::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.t < 2 || !self.t.is_power_of_two() {
            return bad(format!("t={} must be a power of two >= 2", self.t));
        }
        if self.t > self.n_fft() {
            return bad(format!("t={} exceeds next_pow2(n)={}", self.t, self.n_fft()));
        }
        if self.q1 == 0 || self.q2 == 0 {
            return bad("q1 and q2 must be positive".into());
        }
        if self.freq_scattering && (self.f_wavelet_len < 2 || !self.f_wavelet_len.is_power_of_two())
        {
            return bad(format!("f_wavelet_len={} must be a power of two >= 2", self.f_wavelet_len));
        }
        if self.log_compress && !(self.log_eps > 0.0 && self.log_eps.is_finite()) {
            return bad("log_eps must be a small positive number".into());
        }
        Ok(())
    }
}

/// Identifies one scattering coefficient sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScatteringPath {
    Order0,
    Order1 { lambda1: usize },
    Order2 { lambda1: usize, lambda2: usize },
    /// Frequency-axis wavelet `freq_wavelet` applied to the S1 frame, read at layer-1 bin `lambda1`.
    Frequency { freq_wavelet: usize, lambda1: usize },
}

impl ScatteringPath {
    pub fn order(&self) -> u8 {
        match self {
            ScatteringPath::Order0 => 0,
            ScatteringPath::Order1 { .. } | ScatteringPath::Frequency { .. } => 1,
            ScatteringPath::Order2 { .. } => 2,
        }
    }

    pub fn lambda1(&self) -> Option<usize> {
        match *self {
            ScatteringPath::Order0 => None,
            ScatteringPath::Order1 { lambda1 }
            | ScatteringPath::Order2 { lambda1, .. }
            | ScatteringPath::Frequency { lambda1, .. } => Some(lambda1),
        }
    }

    pub fn lambda2(&self) -> Option<usize> {
        match *self {
            ScatteringPath::Order2 { lambda2, .. } => Some(lambda2),
            _ => None,
        }
    }

    pub fn is_frequency(&self) -> bool {
        matches!(self, ScatteringPath::Frequency { .. })
    }
}

/// Framed scattering coefficients plus the pooled utterance vector.
///
/// `paths[i]` names `frames[i]`; paths are stored in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringFeatures {
    pub paths: Vec<ScatteringPath>,
    pub frames: Vec<Vec<f64>>,
    pub utterance_vector: Vec<f64>,
}

impl ScatteringFeatures {
    fn from_frames(paths: Vec<ScatteringPath>, frames: Vec<Vec<f64>>) -> Self {
        let mut out = Self { paths, frames, utterance_vector: Vec::new() };
        out.utterance_vector = pool_utterance(&out);
        out
    }

    pub fn n_frames(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    pub fn get(&self, path: &ScatteringPath) -> Option<&[f64]> {
        self.paths.iter().position(|p| p == path).map(|i| self.frames[i].as_slice())
    }

    /// Pooled values of the paths accepted by `keep`, in canonical order.
    pub fn pooled_subset(&self, keep: impl Fn(&ScatteringPath) -> bool) -> Vec<f64> {
        self.paths
            .iter()
            .zip(&self.utterance_vector)
            .filter(|(p, _)| keep(p))
            .map(|(_, v)| *v)
            .collect()
    }

    /// Euclidean norm over every frame of every path.
    pub fn frame_norm(&self) -> f64 {
        self.frames.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Low-pass `φ` restricted to its numerically nonzero bins, for folded averaging.
#[derive(Debug, Clone)]
struct Averager {
    n_fft: usize,
    hop: usize,
    /// (signed bin, gain)
    taps: Vec<(isize, f64)>,
}

impl Averager {
    fn new(lowpass: &[f64], hop: usize) -> Self {
        let n = lowpass.len();
        let taps = lowpass
            .iter()
            .enumerate()
            .filter(|(_, &g)| g > 1e-18)
            .map(|(k, &g)| (if 2 * k <= n { k as isize } else { k as isize - n as isize }, g))
            .collect();
        Self { n_fft: n, hop, taps }
    }

    /// Samples `u * φ` every `hop` samples, given the full spectrum of `u`.
    ///
    /// Sampling in time folds the spectrum onto `n_fft / hop` bins.
    fn frames(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let n = self.n_fft;
        let frames = n / self.hop;
        let mut folded = vec![Complex64::new(0.0, 0.0); frames];
        for &(k, g) in &self.taps {
            let bin = k.rem_euclid(n as isize) as usize;
            folded[k.rem_euclid(frames as isize) as usize] += spectrum[bin] * g;
        }
        (0..frames)
            .map(|m| {
                let mut acc = 0.0;
                for (r, z) in folded.iter().enumerate() {
                    let angle = 2.0 * std::f64::consts::PI * ((r * m) % frames) as f64 / frames as f64;
                    acc += z.re * angle.cos() - z.im * angle.sin();
                }
                (acc / n as f64).max(0.0)
            })
            .collect()
    }
}

/// `|IFFT(spectrum · ψ)|` at full resolution.
fn filtered_modulus(spectrum: &[Complex64], filter: &crate::filterbank::Filter) -> Vec<f64> {
    let n = spectrum.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let (start, gains) = filter.support();
    for (i, &g) in gains.iter().enumerate() {
        buf[start + i] = spectrum[start + i] * g;
    }
    fft::inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|z| z.norm_sqr().sqrt() * scale).collect()
}

/// Layer-1 scalogram `U1[λ1] = |x * ψ_λ1|` for every filter of `bank`.
pub fn wavelet_modulus(x: &[f64], bank: &FilterBank) -> Result<Vec<Vec<f64>>, ScatteringError> {
    if x.len() != bank.n_fft() {
        return Err(ScatteringError::LengthMismatch { expected: bank.n_fft(), got: x.len() });
    }
    let spectrum = fft::real_spectrum(x);
    Ok(bank.filters().iter().map(|f| filtered_modulus(&spectrum, f)).collect())
}

/// Whether `(λ1, λ2)` carries envelope energy: `λ2 < bandwidth(λ1)`.
pub fn admissible(bank1: &FilterBank, lambda1: usize, bank2: &FilterBank, lambda2: usize) -> bool {
    bank2.filters()[lambda2].center < bank1.filters()[lambda1].bandwidth
}

/// Layer-2 modulation spectrogram `||x * ψ_λ1| * ψ_λ2|` for admissible pairs only.
pub fn scatter_layer2(
    u1: &[Vec<f64>],
    bank2: &FilterBank,
    bank1: &FilterBank,
) -> Vec<(ScatteringPath, Vec<f64>)> {
    let mut out = Vec::new();
    for (lambda1, u) in u1.iter().enumerate() {
        let spectrum = fft::real_spectrum(u);
        for (lambda2, f2) in bank2.filters().iter().enumerate() {
            if admissible(bank1, lambda1, bank2, lambda2) {
                out.push((
                    ScatteringPath::Order2 { lambda1, lambda2 },
                    filtered_modulus(&spectrum, f2),
                ));
            }
        }
    }
    out
}

/// Convolves each sequence with `φ` and keeps every `hop`-th sample.
pub fn lowpass_average(u: &[Vec<f64>], lowpass: &[f64], hop: usize) -> Vec<Vec<f64>> {
    assert!(hop > 0 && lowpass.len() % hop == 0, "hop must divide n_fft");
    let averager = Averager::new(lowpass, hop);
    u.iter()
        .map(|seq| {
            assert_eq!(seq.len(), lowpass.len(), "sequence length must equal n_fft");
            averager.frames(&fft::real_spectrum(seq))
        })
        .collect()
}

/// Per-path mean over frames, in path order.
pub fn pool_utterance(features: &ScatteringFeatures) -> Vec<f64> {
    features
        .frames
        .iter()
        .map(|f| if f.is_empty() { 0.0 } else { f.iter().sum::<f64>() / f.len() as f64 })
        .collect()
}

/// Prebuilt filter banks for one [`ScatteringConfig`]; cheap to share between threads.
#[derive(Debug, Clone)]
pub struct ScatteringNetwork {
    cfg: ScatteringConfig,
    bank1: FilterBank,
    bank2: FilterBank,
    freq_bank: Option<FilterBank>,
    averager: Averager,
}

impl ScatteringNetwork {
    pub fn new(cfg: ScatteringConfig) -> Result<Self, ScatteringError> {
        cfg.validate()?;
        let n_fft = cfg.n_fft();
        let bank1 = build_morlet_bank(FilterBankSpec::new(cfg.q1, cfg.t, n_fft)?)?;
        let bank2 = build_morlet_bank(FilterBankSpec::new(cfg.q2, cfg.t, n_fft)?)?;
        let freq_bank = if cfg.freq_scattering {
            let bins = bank1.geometric_count();
            if bins < 2 {
                return Err(ScatteringError::AxisTooShort(bins));
            }
            if cfg.f_wavelet_len > bins {
                return Err(ScatteringError::InvalidConfig(format!(
                    "f_wavelet_len={} exceeds the {} layer-1 bins",
                    cfg.f_wavelet_len, bins
                )));
            }
            let n_axis = (2 * bins).next_power_of_two().max(cfg.f_wavelet_len);
            Some(build_morlet_bank(FilterBankSpec::new(1, cfg.f_wavelet_len, n_axis)?)?)
        } else {
            None
        };
        let averager = Averager::new(bank1.lowpass(), cfg.hop());
        Ok(Self { cfg, bank1, bank2, freq_bank, averager })
    }

    pub fn config(&self) -> &ScatteringConfig {
        &self.cfg
    }

    pub fn bank1(&self) -> &FilterBank {
        &self.bank1
    }

    pub fn bank2(&self) -> &FilterBank {
        &self.bank2
    }

    pub fn freq_bank(&self) -> Option<&FilterBank> {
        self.freq_bank.as_ref()
    }

    /// Crops/pads to `n` and centers the signal in an `n_fft` buffer.
    pub fn pad(&self, x: &Waveform) -> Result<Vec<f64>, ScatteringError> {
        if x.sample_rate_hz() != SAMPLE_RATE_HZ {
            return Err(ScatteringError::SampleRateMismatch {
                expected: SAMPLE_RATE_HZ,
                got: x.sample_rate_hz(),
            });
        }
        let fixed = fix_length(x, self.cfg.n);
        let n_fft = self.cfg.n_fft();
        let offset = (n_fft - self.cfg.n) / 2;
        let mut buf = vec![0.0; n_fft];
        buf[offset..offset + self.cfg.n].copy_from_slice(fixed.samples());
        Ok(buf)
    }

    /// Time scattering (orders 0, 1, 2), plus frequency scattering when enabled.
    pub fn transform(&self, x: &Waveform) -> Result<ScatteringFeatures, ScatteringError> {
        let buf = self.pad(x)?;
        let time = self.time_scattering_padded(&buf)?;
        if self.cfg.freq_scattering {
            self.frequency_scattering(&time)
        } else {
            Ok(time)
        }
    }

    /// Time scattering of an already padded `n_fft` buffer.
    pub fn time_scattering_padded(&self, buf: &[f64]) -> Result<ScatteringFeatures, ScatteringError> {
        let n_fft = self.cfg.n_fft();
        if buf.len() != n_fft {
            return Err(ScatteringError::LengthMismatch { expected: n_fft, got: buf.len() });
        }
        let spectrum = fft::real_spectrum(buf);
        let mut order1 = Vec::with_capacity(self.bank1.len());
        let mut order2 = Vec::new();
        for (lambda1, f1) in self.bank1.filters().iter().enumerate() {
            let u1 = filtered_modulus(&spectrum, f1);
            let u1_spectrum = fft::real_spectrum(&u1);
            order1.push((ScatteringPath::Order1 { lambda1 }, self.averager.frames(&u1_spectrum)));
            for (lambda2, f2) in self.bank2.filters().iter().enumerate() {
                if !admissible(&self.bank1, lambda1, &self.bank2, lambda2) {
                    continue;
                }
                let u2 = filtered_modulus(&u1_spectrum, f2);
                let frames = self.averager.frames(&fft::real_spectrum(&u2));
                order2.push((ScatteringPath::Order2 { lambda1, lambda2 }, frames));
            }
        }

        let mut paths = vec![ScatteringPath::Order0];
        let mut frames = vec![self.averager.frames(&spectrum)];
        for (p, f) in order1.into_iter().chain(order2) {
            paths.push(p);
            frames.push(f);
        }
        if self.cfg.log_compress {
            let eps = self.cfg.log_eps;
            frames.iter_mut().flatten().for_each(|v| *v = (*v + eps).ln());
        }
        Ok(ScatteringFeatures::from_frames(paths, frames))
    }

    /// Appends frequency-scattering paths computed from the S1 frames of `time`.
    ///
    /// Each frame's geometric-region S1 values, ordered by increasing log λ1,
    /// are decomposed by a Q=1 Morlet bank whose largest wavelet spans
    /// `f_wavelet_len` bins. Moduli are not averaged.
    pub fn frequency_scattering(
        &self,
        time: &ScatteringFeatures,
    ) -> Result<ScatteringFeatures, ScatteringError> {
        let bank = self.freq_bank.as_ref().ok_or_else(|| {
            ScatteringError::InvalidConfig("frequency scattering is disabled".into())
        })?;
        // Ascending frequency = descending filter index.
        let axis: Vec<usize> = (0..self.bank1.len())
            .rev()
            .filter(|&i| self.bank1.filters()[i].region == Region::Geometric)
            .collect();
        if axis.len() < 2 {
            return Err(ScatteringError::AxisTooShort(axis.len()));
        }
        let s1: Vec<&[f64]> = axis
            .iter()
            .map(|&lambda1| {
                time.get(&ScatteringPath::Order1 { lambda1 }).ok_or_else(|| {
                    ScatteringError::InvalidConfig(format!("missing S1 path for λ1={lambda1}"))
                })
            })
            .collect::<Result<_, _>>()?;
        let n_frames = time.n_frames();
        let n_axis = bank.n_fft();

        // values[j][b][m]: wavelet j, axis position b, frame m
        let mut values = vec![vec![vec![0.0; n_frames]; axis.len()]; bank.len()];
        let mut signal = vec![0.0; n_axis];
        for m in 0..n_frames {
            signal.iter_mut().for_each(|v| *v = 0.0);
            for (b, seq) in s1.iter().enumerate() {
                signal[b] = seq[m];
            }
            let spectrum = fft::real_spectrum(&signal);
            for (j, f) in bank.filters().iter().enumerate() {
                let modulus = filtered_modulus(&spectrum, f);
                for b in 0..axis.len() {
                    values[j][b][m] = modulus[b];
                }
            }
        }

        let mut paths = time.paths.clone();
        let mut frames = time.frames.clone();
        for (j, per_bin) in values.into_iter().enumerate() {
            for (b, seq) in per_bin.into_iter().enumerate() {
                paths.push(ScatteringPath::Frequency { freq_wavelet: j, lambda1: axis[b] });
                frames.push(seq);
            }
        }
        Ok(ScatteringFeatures::from_frames(paths, frames))
    }
}

/// One-shot time scattering (with frequency scattering if `cfg` enables it).
pub fn time_scattering(x: &Waveform, cfg: &ScatteringConfig) -> Result<ScatteringFeatures, ScatteringError> {
    ScatteringNetwork::new(cfg.clone())?.transform(x)
}

/// One-shot frequency scattering over already computed time features.
pub fn frequency_scattering(
    s_time: &ScatteringFeatures,
    cfg: &ScatteringConfig,
) -> Result<ScatteringFeatures, ScatteringError> {
    let cfg = ScatteringConfig { freq_scattering: true, ..cfg.clone() };
    ScatteringNetwork::new(cfg)?.frequency_scattering(s_time)
}
