//! Audio input: WAV decoding, band-limited resampling and length normalisation.

use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("unsupported encoding in {path}: {detail}")]
    UnsupportedEncoding { path: String, detail: String },
    #[error("corrupt WAV header in {path}: {detail}")]
    CorruptHeader { path: String, detail: String },
    #[error("io error reading {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("invalid waveform: {0}")]
    InvalidWaveform(&'static str),
}

/// A mono, fixed-rate, finite-valued signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        if sample_rate_hz == 0 {
            return Err(AudioError::InvalidWaveform("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(AudioError::InvalidWaveform("waveform must hold at least one sample"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(AudioError::InvalidWaveform("samples must be finite"));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
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

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Codec tag of the `fmt ` chunk (sub-format for WAVE_FORMAT_EXTENSIBLE).
///
/// hound reports some valid non-PCM headers as malformed, so the tag is
/// checked here first. `None` means the file is not parseable RIFF/WAVE.
fn peek_format_tag(path: &Path) -> io::Result<Option<u16>> {
    use std::io::Read;
    let mut f = std::fs::File::open(path)?;
    let mut head = [0u8; 12];
    if f.read_exact(&mut head).is_err() || &head[0..4] != b"RIFF" || &head[8..12] != b"WAVE" {
        return Ok(None);
    }
    loop {
        let mut chunk = [0u8; 8];
        if f.read_exact(&mut chunk).is_err() {
            return Ok(None);
        }
        let len = u32::from_le_bytes([chunk[4], chunk[5], chunk[6], chunk[7]]) as u64;
        if &chunk[0..4] != b"fmt " {
            io::copy(&mut (&mut f).take(len + (len & 1)), &mut io::sink())?;
            continue;
        }
        let mut body = vec![0u8; len.min(64) as usize];
        if f.read_exact(&mut body).is_err() || body.len() < 2 {
            return Ok(None);
        }
        let tag = u16::from_le_bytes([body[0], body[1]]);
        if tag == FORMAT_EXTENSIBLE && body.len() >= 26 {
            return Ok(Some(u16::from_le_bytes([body[24], body[25]])));
        }
        return Ok(Some(tag));
    }
}

/// Decodes a PCM16 or float32 RIFF/WAVE file, averaging all channels to mono.
///
/// Integer samples are scaled by 1/32768.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Waveform, AudioError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    if let Ok(Some(tag)) = peek_format_tag(path) {
        if !matches!(tag, FORMAT_PCM | FORMAT_FLOAT) {
            return Err(AudioError::UnsupportedEncoding {
                path: name,
                detail: format!("format tag 0x{tag:04x}"),
            });
        }
    }
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) if io.kind() == io::ErrorKind::NotFound => {
            AudioError::FileNotFound(name.clone())
        }
        hound::Error::IoError(io) => AudioError::Io { path: name.clone(), source: io },
        hound::Error::Unsupported => AudioError::UnsupportedEncoding {
            path: name.clone(),
            detail: "codec is not PCM16 or IEEE float32".into(),
        },
        other => AudioError::CorruptHeader { path: name.clone(), detail: other.to_string() },
    })?;

    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(AudioError::CorruptHeader { path: name, detail: "zero channels".into() });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>(),
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>(),
        (format, bits) => {
            return Err(AudioError::UnsupportedEncoding {
                path: name,
                detail: format!("{format:?} {bits}-bit samples"),
            })
        }
    }
    .map_err(|e| AudioError::CorruptHeader { path: name.clone(), detail: e.to_string() })?;

    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if mono.iter().any(|s| !s.is_finite()) {
        return Err(AudioError::CorruptHeader { path: name, detail: "non-finite sample".into() });
    }
    Waveform::new(mono, spec.sample_rate)
        .map_err(|_| AudioError::CorruptHeader { path: name, detail: "no audio frames".into() })
}

/// Writes a mono PCM16 WAV. Samples are clamped to [-1, 1).
pub fn write_wav_pcm16(path: impl AsRef<Path>, w: &Waveform) -> Result<(), AudioError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let to_io = |e: hound::Error| match e {
        hound::Error::IoError(source) => AudioError::Io { path: name.clone(), source },
        other => AudioError::Io {
            path: name.clone(),
            source: io::Error::other(other.to_string()),
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(to_io)?;
    for &s in &w.samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(to_io)?;
    }
    writer.finalize().map_err(to_io)
}

// Kaiser beta for ~100 dB stopband attenuation.
const KAISER_ATTENUATION_DB: f64 = 100.0;
const PASS_EDGE: f64 = 0.45;
const STOP_EDGE: f64 = 0.5;
const MAX_CACHED_PHASES: usize = 4096;

fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

struct SincKernel {
    /// Cutoff in cycles per input sample.
    cutoff: f64,
    half_width: f64,
    beta: f64,
    i0_beta: f64,
}

impl SincKernel {
    fn new(ratio: f64) -> Self {
        let scale = ratio.min(1.0);
        let cutoff = 0.5 * (PASS_EDGE + STOP_EDGE) * scale;
        let transition = (STOP_EDGE - PASS_EDGE) * scale;
        let a = KAISER_ATTENUATION_DB;
        let beta = 0.1102 * (a - 8.7);
        let taps = (a - 7.95) / (14.36 * transition);
        Self { cutoff, half_width: (taps / 2.0).ceil(), beta, i0_beta: bessel_i0(beta) }
    }

    fn eval(&self, dt: f64) -> f64 {
        let u = dt / self.half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(self.beta * (1.0 - u * u).sqrt()) / self.i0_beta;
        let arg = 2.0 * self.cutoff * dt;
        let sinc = if arg == 0.0 {
            1.0
        } else {
            (std::f64::consts::PI * arg).sin() / (std::f64::consts::PI * arg)
        };
        2.0 * self.cutoff * sinc * window
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Band-limited resampling with a Kaiser-windowed sinc kernel.
///
/// Output sample `n` sits at input position `n * source / target`; the output
/// length is `round(len * target / source)`. Same-rate input is returned as is.
pub fn resample(w: &Waveform, target_hz: u32) -> Waveform {
    assert!(target_hz > 0, "target rate must be positive");
    let source_hz = w.sample_rate_hz;
    if source_hz == target_hz {
        return w.clone();
    }
    let len = w.samples.len();
    let out_len = ((len as f64 * target_hz as f64 / source_hz as f64).round() as usize).max(1);
    let kernel = SincKernel::new(target_hz as f64 / source_hz as f64);
    let reach = kernel.half_width as i64;

    let g = gcd(source_hz as u64, target_hz as u64);
    let (src, tgt) = (source_hz as u64 / g, target_hz as u64 / g);
    let phases = tgt as usize;
    let taps = (2 * reach + 1) as usize;

    // Output n sits at input position base + phase / tgt; both are integer.
    let table: Option<Vec<f64>> = (phases <= MAX_CACHED_PHASES).then(|| {
        let mut table = Vec::with_capacity(phases * taps);
        for p in 0..phases {
            let frac = p as f64 / tgt as f64;
            for j in -reach..=reach {
                table.push(kernel.eval(frac - j as f64));
            }
        }
        table
    });

    let x = &w.samples;
    let out = (0..out_len as u64)
        .map(|n| {
            let pos = n * src;
            let base = (pos / tgt) as i64;
            let phase = (pos % tgt) as usize;
            let frac = phase as f64 / tgt as f64;
            let mut acc = 0.0;
            for j in -reach..=reach {
                let k = base + j;
                if k < 0 || k >= len as i64 {
                    continue;
                }
                let h = match &table {
                    Some(t) => t[phase * taps + (j + reach) as usize],
                    None => kernel.eval(frac - j as f64),
                };
                acc += x[k as usize] * h;
            }
            acc
        })
        .collect();
    Waveform { samples: out, sample_rate_hz: target_hz }
}

/// Center-crops or symmetrically zero-pads to exactly `n_samples`.
///
/// When padding an odd number of samples the extra zero goes on the right.
pub fn fix_length(w: &Waveform, n_samples: usize) -> Waveform {
    assert!(n_samples > 0, "target length must be positive");
    let len = w.samples.len();
    let samples = if len >= n_samples {
        let start = (len - n_samples) / 2;
        w.samples[start..start + n_samples].to_vec()
    } else {
        let left = (n_samples - len) / 2;
        let mut out = vec![0.0; n_samples];
        out[left..left + len].copy_from_slice(&w.samples);
        out
    };
    Waveform { samples, sample_rate_hz: w.sample_rate_hz }
}
