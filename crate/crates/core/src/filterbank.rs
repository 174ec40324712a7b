//! Frequency-domain Morlet filter banks.
//!
//! Frequencies are normalized (cycles per sample, Nyquist = 0.5). Band-pass
//! filters are analytic: their response is zero on DC and on negative
//! frequencies. Center frequencies follow `λ = λ_max · 2^(-k/Q)` down to
//! `Q/T`, after which constant-bandwidth filters continue at spacing `1/T`
//! down to `0.5/T`, where `φ` takes over. The low-pass `φ` is a Gaussian of time-domain standard
//! deviation proportional to `T`, with unit gain at DC.

use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FilterBankError {
    #[error("invalid filter bank spec: {0}")]
    InvalidSpec(String),
}

/// Time-domain standard deviation of `φ` as a fraction of `T`.
pub const LOWPASS_SIGMA_FRACTION: f64 = 0.2;

/// Lowest linear-region center frequency, in units of `1/T`.
pub const LINEAR_FLOOR: f64 = 0.5;

// Responses below this are dropped from the stored support.
const SUPPORT_FLOOR: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterBankSpec {
    /// Wavelets per octave.
    pub q: u32,
    /// Averaging scale in samples (power of two).
    pub t: usize,
    /// Transform length (power of two, at least `t`).
    pub n_fft: usize,
}

impl FilterBankSpec {
    pub fn new(q: u32, t: usize, n_fft: usize) -> Result<Self, FilterBankError> {
        let spec = Self { q, t, n_fft };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FilterBankError> {
        if self.q == 0 {
            return Err(FilterBankError::InvalidSpec("q must be at least 1".into()));
        }
        if !self.t.is_power_of_two() {
            return Err(FilterBankError::InvalidSpec(format!("t={} is not a power of two", self.t)));
        }
        if !self.n_fft.is_power_of_two() {
            return Err(FilterBankError::InvalidSpec(format!(
                "n_fft={} is not a power of two",
                self.n_fft
            )));
        }
        if self.t > self.n_fft {
            return Err(FilterBankError::InvalidSpec(format!(
                "t={} exceeds n_fft={}",
                self.t, self.n_fft
            )));
        }
        Ok(())
    }

    /// Ratio between consecutive geometric center frequencies, `2^(-1/Q)`.
    pub fn ratio(&self) -> f64 {
        (-1.0 / self.q as f64).exp2()
    }

    /// Lower edge of the geometric region, `Q/T`.
    pub fn geometric_floor(&self) -> f64 {
        self.q as f64 / self.t as f64
    }

    /// Highest center frequency: the top filter's half-power point sits on Nyquist.
    pub fn max_center(&self) -> f64 {
        (1.0 + self.ratio()) / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Geometric,
    Linear,
}

impl Region {
    pub fn tag(self) -> &'static str {
        match self {
            Region::Geometric => "geo",
            Region::Linear => "lin",
        }
    }
}

/// One analytic Morlet band-pass filter.
#[derive(Debug, Clone)]
pub struct Filter {
    /// Center frequency λ (cycles/sample).
    pub center: f64,
    /// Half-power bandwidth (cycles/sample).
    pub bandwidth: f64,
    /// Gaussian standard deviation in frequency (cycles/sample).
    pub sigma: f64,
    pub region: Region,
    start: usize,
    gains: Vec<f64>,
}

impl Filter {
    /// Gain at DFT bin `k` (zero outside the stored support).
    pub fn gain(&self, k: usize) -> f64 {
        k.checked_sub(self.start)
            .and_then(|i| self.gains.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// First bin of the nonzero support and the gains from there on.
    pub fn support(&self) -> (usize, &[f64]) {
        (self.start, &self.gains)
    }

    /// Dense response over all `n_fft` bins.
    pub fn response(&self, n_fft: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_fft];
        out[self.start..self.start + self.gains.len()].copy_from_slice(&self.gains);
        out
    }

    pub fn peak(&self) -> f64 {
        self.gains.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct FilterBank {
    filters: Vec<Filter>,
    lowpass: Vec<f64>,
    spec: FilterBankSpec,
}

/// Signed normalized frequency of DFT bin `k`.
pub fn bin_frequency(k: usize, n_fft: usize) -> f64 {
    if 2 * k <= n_fft {
        k as f64 / n_fft as f64
    } else {
        k as f64 / n_fft as f64 - 1.0
    }
}

fn gaussian_lowpass(spec: &FilterBankSpec) -> Vec<f64> {
    let sigma_t = LOWPASS_SIGMA_FRACTION * spec.t as f64;
    let sigma_f = 1.0 / (2.0 * PI * sigma_t);
    (0..spec.n_fft)
        .map(|k| {
            let f = bin_frequency(k, spec.n_fft);
            (-f * f / (2.0 * sigma_f * sigma_f)).exp()
        })
        .collect()
}

fn morlet(center: f64, sigma: f64, bandwidth: f64, region: Region, n_fft: usize) -> Filter {
    let kappa = (-center * center / (2.0 * sigma * sigma)).exp();
    let nyquist = n_fft / 2;
    let dense: Vec<f64> = (1..=nyquist)
        .map(|k| {
            let f = k as f64 / n_fft as f64;
            let bump = (-(f - center).powi(2) / (2.0 * sigma * sigma)).exp();
            let correction = kappa * (-f * f / (2.0 * sigma * sigma)).exp();
            (bump - correction).max(0.0)
        })
        .collect();
    let first = dense.iter().position(|&g| g > SUPPORT_FLOOR).unwrap_or(0);
    let last = dense.iter().rposition(|&g| g > SUPPORT_FLOOR).unwrap_or(0);
    Filter {
        center,
        bandwidth,
        sigma,
        region,
        start: first + 1,
        gains: dense[first..=last].to_vec(),
    }
}

/// Builds the Morlet bank and normalizes it so the Littlewood–Paley sum peaks at 1.
pub fn build_morlet_bank(spec: FilterBankSpec) -> Result<FilterBank, FilterBankError> {
    spec.validate()?;
    let r = spec.ratio();
    let floor = spec.geometric_floor();
    let lambda_max = spec.max_center();
    if lambda_max < floor {
        return Err(FilterBankError::InvalidSpec(format!(
            "geometric region is empty: max center {lambda_max} < Q/T = {floor}"
        )));
    }
    let t = spec.t as f64;
    let sqrt_ln2 = LN_2.sqrt();
    // Neighbours cross at their half-power points.
    let geo_sigma_per_hz = (1.0 - r) / ((1.0 + r) * sqrt_ln2);
    let lin_sigma = 1.0 / (2.0 * t * sqrt_ln2);

    let mut filters = Vec::new();
    let mut k = 0;
    loop {
        let center = lambda_max * (-(k as f64) / spec.q as f64).exp2();
        if center < floor * (1.0 - 1e-12) {
            break;
        }
        let sigma = geo_sigma_per_hz * center;
        filters.push(morlet(center, sigma, 2.0 * sigma * sqrt_ln2, Region::Geometric, spec.n_fft));
        k += 1;
    }
    let geo_last = filters.last().map(|f| f.center).unwrap_or(lambda_max);
    let mut j = 1;
    loop {
        let center = geo_last - j as f64 / t;
        if center < (LINEAR_FLOOR - 1e-9) / t {
            break;
        }
        filters.push(morlet(center, lin_sigma, 1.0 / t, Region::Linear, spec.n_fft));
        j += 1;
    }

    let lowpass = gaussian_lowpass(&spec);
    let mut bank = FilterBank { filters, lowpass, spec };
    bank.normalize();
    Ok(bank)
}

impl FilterBank {
    /// A bank holding only the low-pass filter.
    pub fn lowpass_only(spec: FilterBankSpec) -> Result<Self, FilterBankError> {
        spec.validate()?;
        Ok(Self { filters: Vec::new(), lowpass: gaussian_lowpass(&spec), spec })
    }

    pub fn spec(&self) -> &FilterBankSpec {
        &self.spec
    }

    pub fn n_fft(&self) -> usize {
        self.spec.n_fft
    }

    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    /// Number of filters in the constant-Q region.
    pub fn geometric_count(&self) -> usize {
        self.filters.iter().filter(|f| f.region == Region::Geometric).count()
    }

    /// Scale band-pass gains so that `max_ω LP(ω) = 1` while `φ` keeps unit DC gain.
    fn normalize(&mut self) {
        let wavelet_part = self.wavelet_energy();
        let mut scale_sq = f64::INFINITY;
        for (k, &w) in wavelet_part.iter().enumerate() {
            if w > 0.0 {
                let room = (1.0 - self.lowpass[k] * self.lowpass[k]).max(0.0);
                scale_sq = scale_sq.min(room / w);
            }
        }
        if !scale_sq.is_finite() {
            return;
        }
        let scale = scale_sq.sqrt();
        for f in &mut self.filters {
            f.gains.iter_mut().for_each(|g| *g *= scale);
        }
    }

    /// `½ Σ_λ (|ψ_λ(ω)|² + |ψ_λ(−ω)|²)` for every bin.
    fn wavelet_energy(&self) -> Vec<f64> {
        let n = self.spec.n_fft;
        let mut acc = vec![0.0; n];
        for f in &self.filters {
            for (i, g) in f.gains.iter().enumerate() {
                let k = f.start + i;
                let e = 0.5 * g * g;
                acc[k] += e;
                acc[(n - k) % n] += e;
            }
        }
        acc
    }

    /// Littlewood–Paley sum `|φ(ω)|² + ½ Σ_λ (|ψ_λ(ω)|² + |ψ_λ(−ω)|²)` per bin.
    pub fn littlewood_paley_sum(&self) -> Vec<f64> {
        let mut lp = self.wavelet_energy();
        for (v, p) in lp.iter_mut().zip(&self.lowpass) {
            *v += p * p;
        }
        lp
    }

    /// Renders one CSV row per filter: `index,center_freq_hz,bandwidth_hz,region`.
    pub fn to_csv(&self, sample_rate_hz: u32) -> String {
        let sr = sample_rate_hz as f64;
        let mut out = String::from("index,center_freq_hz,bandwidth_hz,region\n");
        for (i, f) in self.filters.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{}",
                i,
                f.center * sr,
                f.bandwidth * sr,
                f.region.tag()
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpBounds {
    pub min: f64,
    pub max: f64,
}

/// Min and max of the Littlewood–Paley sum over all DFT bins.
pub fn littlewood_paley_bounds(bank: &FilterBank) -> LpBounds {
    bounds_of(bank.littlewood_paley_sum().into_iter())
}

/// Min and max of the Littlewood–Paley sum over bins with `lo ≤ |ω| ≤ hi`.
pub fn littlewood_paley_bounds_in(bank: &FilterBank, lo: f64, hi: f64) -> LpBounds {
    let n = bank.n_fft();
    let lp = bank.littlewood_paley_sum();
    bounds_of(lp.into_iter().enumerate().filter_map(|(k, v)| {
        let f = bin_frequency(k, n).abs();
        (f >= lo && f <= hi).then_some(v)
    }))
}

fn bounds_of(values: impl Iterator<Item = f64>) -> LpBounds {
    values.fold(LpBounds { min: f64::INFINITY, max: f64::NEG_INFINITY }, |b, v| LpBounds {
        min: b.min.min(v),
        max: b.max.max(v),
    })
}
