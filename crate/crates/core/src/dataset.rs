//! Dataset ingestion, domain records and the patient-level split.
//!
//! The on-disk layout mirrors MURA: `<root>/<patient>/<study>_<label>/<image>.png`
//! where `<label>` is `negative` or `positive`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{Array2, Array3, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Negative => "negative",
            Label::Positive => "positive",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negative" => Ok(Label::Negative),
            "positive" => Ok(Label::Positive),
            other => Err(Error::Parse(format!("unknown label {other:?}"))),
        }
    }
}

/// Identity and provenance of one image, without pixel data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub image_id: String,
    pub patient_id: String,
    pub study_id: String,
    pub label: Label,
    pub source_path: PathBuf,
    /// Channel count found in the file; 3 means grayscale conversion on load.
    pub channels: usize,
}

impl RecordMeta {
    pub fn needs_grayscale(&self) -> bool {
        self.channels == 3
    }

    /// Decodes the image and reduces it to a single channel.
    pub fn load(&self) -> Result<ImageRecord> {
        let raw = io::read_png(&self.source_path)?;
        let pixels = to_grayscale(&raw)?;
        ImageRecord::new(self.clone(), pixels)
    }
}

/// A single-channel image with intensities in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub meta: RecordMeta,
    pub pixels: Array2<f32>,
}

impl ImageRecord {
    pub fn new(meta: RecordMeta, pixels: Array2<f32>) -> Result<Self> {
        let (h, w) = pixels.dim();
        if h == 0 || w == 0 {
            return Err(Error::InvalidImage(format!("{}: empty image", meta.image_id)));
        }
        if pixels.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidImage(format!("{}: intensities outside [0,1]", meta.image_id)));
        }
        Ok(Self { meta, pixels })
    }
}

/// Reduces a `(height, width, channels)` array to one channel by averaging.
/// Single-channel input passes through unchanged.
pub fn to_grayscale(pixels: &Array3<f32>) -> Result<Array2<f32>> {
    match pixels.dim().2 {
        1 => Ok(pixels.index_axis(Axis(2), 0).to_owned()),
        3 => Ok(pixels.map_axis(Axis(2), |px| (px[0] + px[1] + px[2]) / 3.0)),
        n => Err(Error::ChannelCount(n)),
    }
}

#[derive(Debug, Clone, Default)]
pub struct DatasetIndex {
    pub records: Vec<RecordMeta>,
    pub patients: BTreeSet<String>,
    /// Patients with at least one positive study.
    pub positive_patients: BTreeSet<String>,
    /// Files that were found but could not be indexed, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

impl DatasetIndex {
    /// Builds the index, checking that labels agree within each study.
    pub fn from_records(mut records: Vec<RecordMeta>) -> Result<Self> {
        records.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        let mut study_labels: BTreeMap<&str, Label> = BTreeMap::new();
        for r in &records {
            if let Some(prev) = study_labels.insert(&r.study_id, r.label) {
                if prev != r.label {
                    return Err(Error::InconsistentStudy(r.study_id.clone()));
                }
            }
        }
        let patients = records.iter().map(|r| r.patient_id.clone()).collect();
        let positive_patients = records.iter().filter(|r| r.label.is_positive()).map(|r| r.patient_id.clone()).collect();
        Ok(Self { records, patients, positive_patients, skipped: Vec::new() })
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_images(&self) -> usize {
        self.records.len()
    }

    pub fn num_patients(&self) -> usize {
        self.patients.len()
    }

    pub fn num_studies(&self) -> usize {
        self.records.iter().map(|r| r.study_id.as_str()).collect::<BTreeSet<_>>().len()
    }

    pub fn num_positive_studies(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.label.is_positive())
            .map(|r| r.study_id.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn num_positive_images(&self) -> usize {
        self.records.iter().filter(|r| r.label.is_positive()).count()
    }

    pub fn negative_patients(&self) -> impl Iterator<Item = &String> {
        self.patients.difference(&self.positive_patients)
    }
}

/// Scans `<root>/<patient>/<study>_<label>/*.png`. Unreadable files and
/// unsupported channel layouts are logged, recorded in `skipped` and left out.
pub fn ingest_dataset(root: &Path) -> Result<DatasetIndex> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for entry in walkdir::WalkDir::new(root).min_depth(3).max_depth(3).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                log::warn!("skipping unreadable entry: {e}");
                skipped.push((e.path().map(Path::to_path_buf).unwrap_or_default(), e.to_string()));
                continue;
            }
        };
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) != Some("png".into()) {
            continue;
        }
        match index_file(root, path) {
            Ok(meta) => records.push(meta),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                skipped.push((path.to_path_buf(), e.to_string()));
            }
        }
    }
    if records.is_empty() {
        return Err(Error::NoImages(root.to_path_buf()));
    }
    let mut index = DatasetIndex::from_records(records)?;
    index.skipped = skipped;
    Ok(index)
}

fn index_file(root: &Path, path: &Path) -> Result<RecordMeta> {
    let rel = path.strip_prefix(root).map_err(|e| Error::Parse(e.to_string()))?;
    let parts: Vec<&str> = rel.iter().filter_map(|p| p.to_str()).collect();
    let [patient, study_dir, file] = parts[..] else {
        return Err(Error::Parse(format!("unexpected layout {}", rel.display())));
    };
    let (study, label) = study_dir
        .rsplit_once('_')
        .ok_or_else(|| Error::Parse(format!("study directory {study_dir:?} lacks a _<label> suffix")))?;
    let label: Label = label.parse()?;
    let channels = io::probe_channels(path)?;
    if channels != 1 && channels != 3 {
        return Err(Error::ChannelCount(channels));
    }
    let stem = file.rsplit_once('.').map_or(file, |(s, _)| s);
    Ok(RecordMeta {
        image_id: format!("{patient}_{study}_{stem}"),
        patient_id: patient.to_string(),
        study_id: format!("{patient}/{study}"),
        label,
        source_path: path.to_path_buf(),
        channels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

impl fmt::Display for SplitPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitPart::Train => "train",
            SplitPart::Validation => "validation",
            SplitPart::Test => "test",
        })
    }
}

impl FromStr for SplitPart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitPart::Train),
            "validation" => Ok(SplitPart::Validation),
            "test" => Ok(SplitPart::Test),
            other => Err(Error::Parse(format!("unknown split part {other:?}"))),
        }
    }
}

/// Patient → split part, together with the seed that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub mapping: BTreeMap<String, SplitPart>,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn part_of(&self, patient_id: &str) -> Option<SplitPart> {
        self.mapping.get(patient_id).copied()
    }

    pub fn patients_in(&self, part: SplitPart) -> impl Iterator<Item = &str> {
        self.mapping.iter().filter(move |(_, p)| **p == part).map(|(k, _)| k.as_str())
    }

    pub fn count(&self, part: SplitPart) -> usize {
        self.patients_in(part).count()
    }

    /// Text manifest: a `# seed=<n>` line, a header, then one `patient_id,split` row per patient.
    pub fn to_manifest(&self) -> String {
        let mut out = format!("# seed={}\npatient_id,split\n", self.seed);
        for (patient, part) in &self.mapping {
            out.push_str(&format!("{patient},{part}\n"));
        }
        out
    }

    pub fn from_manifest(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let seed = lines
            .next()
            .and_then(|l| l.strip_prefix("# seed="))
            .ok_or_else(|| Error::Parse("missing '# seed=' line".into()))?
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        if lines.next().map(str::trim) != Some("patient_id,split") {
            return Err(Error::Parse("missing 'patient_id,split' header".into()));
        }
        let mut mapping = BTreeMap::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (patient, part) = line.rsplit_once(',').ok_or_else(|| Error::Parse(format!("bad row {line:?}")))?;
            if mapping.insert(patient.to_string(), part.trim().parse()?).is_some() {
                return Err(Error::Parse(format!("patient {patient} listed twice")));
            }
        }
        Ok(Self { mapping, seed })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_manifest())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_manifest(&std::fs::read_to_string(path)?)
    }
}

/// Patient-level split: positive patients are shuffled and dealt alternately to
/// validation and test (validation first, so it gets the odd one out); each part
/// then receives as many randomly drawn negative patients as it has positives.
/// All remaining negative patients form the training part.
pub fn patient_split(index: &DatasetIndex, seed: u64) -> Result<SplitAssignment> {
    if index.is_empty() {
        return Err(Error::NoImages(PathBuf::new()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positives: Vec<&String> = index.positive_patients.iter().collect();
    let mut negatives: Vec<&String> = index.negative_patients().collect();
    if negatives.len() < positives.len() {
        return Err(Error::NotEnoughNegatives { negative: negatives.len(), positive: positives.len() });
    }
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);

    let mut mapping = BTreeMap::new();
    let (mut n_val, mut n_test) = (0, 0);
    for (i, p) in positives.into_iter().enumerate() {
        let part = if i % 2 == 0 {
            n_val += 1;
            SplitPart::Validation
        } else {
            n_test += 1;
            SplitPart::Test
        };
        mapping.insert(p.clone(), part);
    }
    for (i, p) in negatives.into_iter().enumerate() {
        let part = if i < n_val {
            SplitPart::Validation
        } else if i < n_val + n_test {
            SplitPart::Test
        } else {
            SplitPart::Train
        };
        mapping.insert(p.clone(), part);
    }
    Ok(SplitAssignment { mapping, seed })
}
