//! Utterance-level feature extraction over a manifest, and the `SCATFEAT v1` file format.
//!
//! A feature file is plain text:
//!
//! ```text
//! #SCATFEAT v1 kind=mfcc dim=26 config_hash=<sha256 hex>
//! utt01,spk1,anger,1.2345678901234567e0,...
//! ```
//!
//! Rows are sorted by utterance id and floats carry 17 significant digits,
//! so values survive a write/read cycle exactly.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audio::{fix_length, load_wav, resample, Waveform};
use crate::eval::{DatasetManifest, ManifestRow};
use crate::mfcc::{MfccConfig, MfccExtractor};
use crate::scattering::{ScatteringConfig, ScatteringNetwork, ScatteringPath, SAMPLE_RATE_HZ};

pub const FORMAT_TAG: &str = "#SCATFEAT v1";

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("unknown feature kind {0:?}")]
    UnknownKind(String),
    #[error("bad feature file header: {0}")]
    Header(String),
    #[error("feature file line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{} utterance(s) failed: {}", failures.len(), list_failures(failures))]
    Extraction { failures: Vec<RowFailure> },
    #[error("config hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },
    #[error(transparent)]
    Scattering(#[from] crate::scattering::ScatteringError),
    #[error(transparent)]
    Mfcc(#[from] crate::mfcc::MfccError),
}

fn list_failures(failures: &[RowFailure]) -> String {
    failures.iter().map(|f| format!("{} ({})", f.utterance_id, f.detail)).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowFailure {
    pub utterance_id: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    /// Pooled time scattering, orders 0, 1 and 2.
    Scatnet,
    /// Time scattering plus frequency scattering of the layer-1 frames.
    FScatnet,
    Mfcc,
    /// Orders 0 and 1 of time scattering only.
    ScatLayer1,
    /// Order 2 of time scattering only.
    ScatLayer2,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] =
        [Self::Scatnet, Self::FScatnet, Self::Mfcc, Self::ScatLayer1, Self::ScatLayer2];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Scatnet => "scatnet",
            Self::FScatnet => "f-scatnet",
            Self::Mfcc => "mfcc",
            Self::ScatLayer1 => "scat-layer1",
            Self::ScatLayer2 => "scat-layer2",
        }
    }

    pub fn is_scattering(self) -> bool {
        self != Self::Mfcc
    }

    /// Which pooled scattering paths this kind keeps.
    pub fn keeps(self, path: &ScatteringPath) -> bool {
        match self {
            Self::Scatnet => !path.is_frequency(),
            Self::FScatnet => true,
            Self::Mfcc => false,
            Self::ScatLayer1 => !path.is_frequency() && path.order() <= 1,
            Self::ScatLayer2 => path.order() == 2,
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| FeatureError::UnknownKind(s.to_owned()))
    }
}

/// Everything that determines an utterance vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    pub scattering: ScatteringConfig,
    pub mfcc: MfccConfig,
}

impl FeatureConfig {
    pub fn new(kind: FeatureKind) -> Self {
        Self { kind, scattering: ScatteringConfig::default(), mfcc: MfccConfig::default() }
    }

    /// Scattering config with frequency scattering switched on exactly for `f-scatnet`.
    pub fn effective_scattering(&self) -> ScatteringConfig {
        ScatteringConfig { freq_scattering: self.kind == FeatureKind::FScatnet, ..self.scattering.clone() }
    }

    /// SHA-256 over the canonical JSON of the settings that affect this kind.
    ///
    /// MFCC ignores the scattering settings except the crop length `n`.
    pub fn config_hash(&self) -> String {
        let canonical = if self.kind.is_scattering() {
            let mut s = self.effective_scattering();
            if !s.freq_scattering {
                s.f_wavelet_len = ScatteringConfig::default().f_wavelet_len;
            }
            if !s.log_compress {
                s.log_eps = ScatteringConfig::default().log_eps;
            }
            serde_json::json!({
                "kind": self.kind,
                "sample_rate_hz": SAMPLE_RATE_HZ,
                "scattering": s,
            })
        } else {
            serde_json::json!({
                "kind": self.kind,
                "sample_rate_hz": SAMPLE_RATE_HZ,
                "n": self.scattering.n,
                "mfcc": self.mfcc,
            })
        };
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        format!("{digest:x}")
    }
}

enum Engine {
    Scattering(ScatteringNetwork),
    Mfcc(MfccExtractor),
}

/// Prepared extractor; shareable across threads.
pub struct FeatureExtractor {
    cfg: FeatureConfig,
    engine: Engine,
}

impl FeatureExtractor {
    pub fn new(cfg: FeatureConfig) -> Result<Self, FeatureError> {
        let engine = if cfg.kind.is_scattering() {
            Engine::Scattering(ScatteringNetwork::new(cfg.effective_scattering())?)
        } else {
            if cfg.scattering.n == 0 {
                return Err(crate::scattering::ScatteringError::InvalidConfig("n must be positive".into()).into());
            }
            Engine::Mfcc(MfccExtractor::new(cfg.mfcc.clone(), SAMPLE_RATE_HZ)?)
        };
        Ok(Self { cfg, engine })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    /// Utterance vector of `w`, resampled to 16 kHz and cropped or padded to `n` first.
    pub fn extract(&self, w: &Waveform) -> Result<Vec<f64>, FeatureError> {
        let w = resample(w, SAMPLE_RATE_HZ);
        match &self.engine {
            Engine::Scattering(net) => {
                let s = net.transform(&w)?;
                Ok(s.pooled_subset(|p| self.cfg.kind.keeps(p)))
            }
            Engine::Mfcc(m) => Ok(m.utterance_vector(&fix_length(&w, self.cfg.scattering.n))?),
        }
    }

    pub fn extract_file(&self, path: &Path) -> Result<Vec<f64>, String> {
        let w = load_wav(path).map_err(|e| e.to_string())?;
        self.extract(&w).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub utterance_id: String,
    pub speaker_id: String,
    pub label: String,
    pub values: Vec<f64>,
}

/// Utterance vectors for a dataset, sorted by utterance id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub kind: FeatureKind,
    pub config_hash: String,
    pub dim: usize,
    pub rows: Vec<FeatureRow>,
}

impl FeatureSet {
    pub fn new(kind: FeatureKind, config_hash: String, mut rows: Vec<FeatureRow>) -> Result<Self, FeatureError> {
        rows.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
        let dim = rows.first().map_or(0, |r| r.values.len());
        for (i, r) in rows.iter().enumerate() {
            if r.values.len() != dim {
                return Err(FeatureError::Parse {
                    line: i + 2,
                    detail: format!("{} has {} values, expected {dim}", r.utterance_id, r.values.len()),
                });
            }
            if i > 0 && rows[i - 1].utterance_id == r.utterance_id {
                return Err(FeatureError::Parse {
                    line: i + 2,
                    detail: format!("duplicate utterance_id {}", r.utterance_id),
                });
            }
        }
        Ok(Self { kind, config_hash, dim, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn header(&self) -> String {
        format!("{FORMAT_TAG} kind={} dim={} config_hash={}", self.kind, self.dim, self.config_hash)
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.utterance_id, r.speaker_id, r.label);
            for v in &r.values {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| FeatureError::Header("empty file".into()))?;
        let rest = header
            .strip_prefix(FORMAT_TAG)
            .ok_or_else(|| FeatureError::Header(format!("expected {FORMAT_TAG:?} prefix")))?;
        let (mut kind, mut dim, mut hash) = (None, None, None);
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("kind", v)) => kind = Some(v.parse::<FeatureKind>()?),
                Some(("dim", v)) => {
                    dim = Some(v.parse::<usize>().map_err(|e| FeatureError::Header(format!("dim: {e}")))?)
                }
                Some(("config_hash", v)) => hash = Some(v.to_owned()),
                _ => return Err(FeatureError::Header(format!("unexpected field {field:?}"))),
            }
        }
        let missing = |n: &str| FeatureError::Header(format!("missing {n}"));
        let kind = kind.ok_or_else(|| missing("kind"))?;
        let dim = dim.ok_or_else(|| missing("dim"))?;
        let hash = hash.ok_or_else(|| missing("config_hash"))?;

        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = |name: &str| {
                parts.next().map(str::to_owned).ok_or_else(|| FeatureError::Parse {
                    line: line_no,
                    detail: format!("missing {name}"),
                })
            };
            let (utterance_id, speaker_id, label) = (next("utterance_id")?, next("speaker_id")?, next("label")?);
            let values = parts
                .map(|v| {
                    v.parse::<f64>().map_err(|e| FeatureError::Parse { line: line_no, detail: format!("{v:?}: {e}") })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != dim {
                return Err(FeatureError::Parse {
                    line: line_no,
                    detail: format!("{} values, header says dim={dim}", values.len()),
                });
            }
            rows.push(FeatureRow { utterance_id, speaker_id, label, values });
        }
        let mut set = Self::new(kind, hash, rows)?;
        set.dim = dim;
        Ok(set)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), FeatureError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text())
            .map_err(|source| FeatureError::Io { path: path.display().to_string(), source })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| FeatureError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Fails unless the file was produced with `expected` settings.
    pub fn check_hash(&self, expected: &str) -> Result<(), FeatureError> {
        if self.config_hash != expected {
            return Err(FeatureError::HashMismatch {
                expected: expected.to_owned(),
                found: self.config_hash.clone(),
            });
        }
        Ok(())
    }
}

/// Extracts every manifest row in parallel; any failing row fails the whole call,
/// listing all failed utterance ids.
pub fn extract_manifest(manifest: &DatasetManifest, cfg: &FeatureConfig) -> Result<FeatureSet, FeatureError> {
    let extractor = FeatureExtractor::new(cfg.clone())?;
    extract_rows(&manifest.rows, &extractor, |r| extractor.extract_file(&r.path))
}

/// Same as [`extract_manifest`] with in-memory audio, looked up by utterance id.
pub fn extract_waveforms(
    manifest: &DatasetManifest,
    cfg: &FeatureConfig,
    audio: impl Fn(&ManifestRow) -> Waveform + Sync,
) -> Result<FeatureSet, FeatureError> {
    let extractor = FeatureExtractor::new(cfg.clone())?;
    extract_rows(&manifest.rows, &extractor, |r| extractor.extract(&audio(r)).map_err(|e| e.to_string()))
}

fn extract_rows(
    rows: &[ManifestRow],
    extractor: &FeatureExtractor,
    f: impl Fn(&ManifestRow) -> Result<Vec<f64>, String> + Sync,
) -> Result<FeatureSet, FeatureError> {
    let results: Vec<Result<FeatureRow, RowFailure>> = rows
        .par_iter()
        .map(|r| {
            f(r).map(|values| FeatureRow {
                utterance_id: r.utterance_id.clone(),
                speaker_id: r.speaker_id.clone(),
                label: r.label.clone(),
                values,
            })
            .map_err(|detail| RowFailure { utterance_id: r.utterance_id.clone(), detail })
        })
        .collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => ok.push(row),
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        failures.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
        return Err(FeatureError::Extraction { failures });
    }
    let cfg = extractor.config();
    FeatureSet::new(cfg.kind, cfg.config_hash(), ok)
}

/// On-disk feature files named by config hash and manifest digest.
#[derive(Debug, Clone)]
pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, manifest: &DatasetManifest, cfg: &FeatureConfig) -> PathBuf {
        let listing = serde_json::to_string(&manifest.rows).expect("manifest serializes");
        let data = format!("{:x}", Sha256::digest(listing.as_bytes()));
        let hash = cfg.config_hash();
        self.dir.join(format!("{}-{}-{}.scatfeat", cfg.kind, &hash[..16], &data[..16]))
    }

    /// Reads the cached file if present, otherwise extracts and stores it.
    pub fn get_or_extract(&self, manifest: &DatasetManifest, cfg: &FeatureConfig) -> Result<FeatureSet, FeatureError> {
        let path = self.path_for(manifest, cfg);
        if path.exists() {
            let set = FeatureSet::read(&path)?;
            set.check_hash(&cfg.config_hash())?;
            return Ok(set);
        }
        let set = extract_manifest(manifest, cfg)?;
        std::fs::create_dir_all(&self.dir)
            .map_err(|source| FeatureError::Io { path: self.dir.display().to_string(), source })?;
        set.write(&path)?;
        Ok(set)
    }
}
