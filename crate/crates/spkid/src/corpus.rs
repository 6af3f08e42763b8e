//! Speaker corpora: `root/<speaker_id>/{train,test}/*.wav`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use spkid_core::frontend::{extract_features, prepare};
use spkid_core::{AudioSignal, SentenceFeatures};

use crate::error::{Error, Result};
use crate::wav::read_wav;

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub name: String,
    /// Prepared: 8 kHz, pre-emphasized, peak-normalized.
    pub signal: AudioSignal,
}

impl Utterance {
    /// Prepares `raw` unless it already is.
    pub fn new(name: impl Into<String>, raw: AudioSignal) -> Result<Self> {
        let name = name.into();
        let signal = if raw.is_prepared() {
            raw
        } else {
            prepare(&raw).map_err(|e| Error::core(&name, e))?
        };
        Ok(Self { name, signal })
    }

    pub fn features(&self) -> Result<SentenceFeatures> {
        extract_features(&self.signal).map_err(|e| Error::core(&self.name, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerData {
    pub id: String,
    pub train: Vec<Utterance>,
    pub test: Vec<Utterance>,
}

/// Speakers sorted by id. Every speaker has at least one training and one
/// test utterance; ids are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    speakers: Vec<SpeakerData>,
}

impl Corpus {
    pub fn new(mut speakers: Vec<SpeakerData>) -> Result<Self> {
        if speakers.is_empty() {
            return Err(Error::Corpus("no speakers".into()));
        }
        speakers.sort_by(|a, b| a.id.cmp(&b.id));
        let mut seen = BTreeSet::new();
        for s in &speakers {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Corpus(format!("duplicate speaker id {:?}", s.id)));
            }
            if s.train.is_empty() || s.test.is_empty() {
                return Err(Error::Corpus(format!(
                    "speaker {:?} needs at least one train and one test utterance",
                    s.id
                )));
            }
        }
        Ok(Self { speakers })
    }

    pub fn speakers(&self) -> &[SpeakerData] {
        &self.speakers
    }

    pub fn len(&self) -> usize {
        self.speakers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speakers.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.speakers.iter().map(|s| s.id.as_str()).collect()
    }

    /// Total number of test utterances.
    pub fn test_count(&self) -> usize {
        self.speakers.iter().map(|s| s.test.len()).sum()
    }
}

fn wav_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_wav = path
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("wav"));
        if path.is_file() && is_wav {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn load_split(speaker_dir: &Path, split: &str) -> Result<Vec<Utterance>> {
    let dir = speaker_dir.join(split);
    if !dir.is_dir() {
        return Err(Error::Corpus(format!(
            "missing directory {}",
            dir.display()
        )));
    }
    let files = wav_files(&dir)?;
    if files.is_empty() {
        return Err(Error::Corpus(format!("no .wav files in {}", dir.display())));
    }
    files
        .iter()
        .map(|path| {
            let name = path
                .strip_prefix(speaker_dir.parent().unwrap_or(speaker_dir))
                .unwrap_or(path)
                .display()
                .to_string();
            Utterance::new(name, read_wav(path)?)
        })
        .collect()
}

/// Loads and prepares every utterance under `root`, which must contain one
/// directory per speaker, each with `train/` and `test/` subdirectories of
/// `.wav` files.
pub fn load_corpus(root: &Path) -> Result<Corpus> {
    let mut speaker_dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.is_dir() {
            speaker_dirs.push(path);
        }
    }
    if speaker_dirs.is_empty() {
        return Err(Error::Corpus(format!(
            "{} has no speaker directories; expected <root>/<speaker_id>/{{train,test}}/*.wav",
            root.display()
        )));
    }
    speaker_dirs.sort();
    let speakers = speaker_dirs
        .iter()
        .map(|dir| {
            let id = dir
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| {
                    Error::Corpus(format!("non UTF-8 directory name {}", dir.display()))
                })?
                .to_string();
            Ok(SpeakerData {
                train: load_split(dir, "train")?,
                test: load_split(dir, "test")?,
                id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(speakers)
}
