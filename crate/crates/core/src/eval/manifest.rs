use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EvalError;

pub const MANIFEST_HEADER: [&str; 4] = ["utterance_id", "path", "speaker_id", "label"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub utterance_id: String,
    pub path: PathBuf,
    pub speaker_id: String,
    pub label: String,
}

/// Utterance list with unique ids. Relative paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    pub fn new(rows: Vec<ManifestRow>) -> Result<Self, EvalError> {
        let mut seen = HashSet::new();
        for (i, r) in rows.iter().enumerate() {
            for (name, v) in [("utterance_id", &r.utterance_id), ("speaker_id", &r.speaker_id), ("label", &r.label)] {
                if v.is_empty() {
                    return Err(EvalError::Manifest { line: i + 2, detail: format!("empty {name}") });
                }
                if v.contains([',', '\n', '\r']) {
                    return Err(EvalError::Manifest {
                        line: i + 2,
                        detail: format!("{name} {v:?} contains a comma or newline"),
                    });
                }
            }
            if !seen.insert(r.utterance_id.as_str()) {
                return Err(EvalError::Manifest {
                    line: i + 2,
                    detail: format!("duplicate utterance_id {:?}", r.utterance_id),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| EvalError::Io { path: path.display().to_string(), source })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base)
    }

    /// Parses manifest CSV text; relative WAV paths are joined onto `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, EvalError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| EvalError::Manifest { line: 1, detail: e.to_string() })?;
        if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
            return Err(EvalError::Manifest {
                line: 1,
                detail: format!("header must be {}", MANIFEST_HEADER.join(",")),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| EvalError::Manifest { line, detail: e.to_string() })?;
            let path = PathBuf::from(&rec[1]);
            rows.push(ManifestRow {
                utterance_id: rec[0].to_owned(),
                path: if path.is_absolute() { path } else { base_dir.join(path) },
                speaker_id: rec[2].to_owned(),
                label: rec[3].to_owned(),
            });
        }
        Self::new(rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted distinct speaker ids.
    pub fn speakers(&self) -> Vec<String> {
        sorted_unique(self.rows.iter().map(|r| r.speaker_id.as_str()))
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<String> {
        sorted_unique(self.rows.iter().map(|r| r.label.as_str()))
    }

    /// Problems that do not stop a run but weaken it.
    pub fn warnings(&self) -> Vec<String> {
        label_speaker_warnings(self.rows.iter().map(|r| (r.speaker_id.as_str(), r.label.as_str())))
    }
}

pub(crate) fn sorted_unique<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    it.collect::<BTreeSet<_>>().into_iter().map(str::to_owned).collect()
}

pub(crate) fn label_speaker_warnings<'a>(rows: impl Iterator<Item = (&'a str, &'a str)>) -> Vec<String> {
    let mut speakers_per_label: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut all_speakers = BTreeSet::new();
    for (speaker, label) in rows {
        speakers_per_label.entry(label).or_default().insert(speaker);
        all_speakers.insert(speaker);
    }
    let mut out = Vec::new();
    if all_speakers.len() < 3 {
        out.push(format!(
            "only {} speaker(s); leave-one-speaker-out needs at least 3",
            all_speakers.len()
        ));
    }
    for (label, speakers) in speakers_per_label {
        if speakers.len() < 2 {
            out.push(format!("label {label:?} appears for only {} speaker", speakers.len()));
        }
    }
    out
}
