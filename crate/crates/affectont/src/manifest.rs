//! Stimulus manifest parsing and per-keyword statistics.
//!
//! A manifest is the CSV index of an annotated stimulus database: one row per
//! media file, carrying its identifier, resource filename, free-text keyword
//! and the mean pleasure/arousal ratings.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Affect coordinates in the quantitative-dimensional model, both axes in [1, 9].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffectPoint {
    pub pleasure: f64,
    pub arousal: f64,
}

impl AffectPoint {
    pub fn new(pleasure: f64, arousal: f64) -> Result<Self, ManifestError> {
        for (axis, v) in [("pleasure", pleasure), ("arousal", arousal)] {
            if !(1.0..=9.0).contains(&v) {
                return Err(ManifestError::AffectOutOfRange {
                    row: 0,
                    axis,
                    value: v,
                });
            }
        }
        Ok(AffectPoint { pleasure, arousal })
    }

    pub fn distance(&self, other: &AffectPoint) -> f64 {
        let dp = self.pleasure - other.pleasure;
        let da = self.arousal - other.arousal;
        (dp * dp + da * da).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Image,
    Sound,
    Video,
}

impl fmt::Display for MediaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MediaKind::Image => write!(f, "image"),
            MediaKind::Sound => write!(f, "sound"),
            MediaKind::Video => write!(f, "video"),
        }
    }
}

/// One annotated media item from a manifest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub id: String,
    pub resource: String,
    pub media_kind: MediaKind,
    pub affect: AffectPoint,
    pub raw_keyword: String,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: missing header line `id,resource,keyword,pleasure,arousal`")]
    MissingHeader { row: usize },
    #[error("row {row}: non-numeric {axis} value `{value}`")]
    NonNumericAffect {
        row: usize,
        axis: &'static str,
        value: String,
    },
    #[error("row {row}: {axis} value {value} outside [1, 9]")]
    AffectOutOfRange {
        row: usize,
        axis: &'static str,
        value: f64,
    },
    #[error("row {row}: duplicate stimulus id `{id}`")]
    DuplicateId { row: usize, id: String },
    #[error("row {row}: empty field `{field}`")]
    EmptyField { row: usize, field: &'static str },
    #[error("row {row}: unknown resource extension for `{resource}`")]
    UnknownExtension { row: usize, resource: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("multiple manifest errors:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Multiple(Vec<ManifestError>),
}

/// Classify a resource filename by extension.
pub fn media_kind_for(resource: &str) -> Option<MediaKind> {
    let ext = resource.rsplit('.').next()?.to_ascii_lowercase();
    match ext.as_str() {
        "jpg" | "jpeg" | "png" | "bmp" => Some(MediaKind::Image),
        "wav" | "mp3" | "ogg" => Some(MediaKind::Sound),
        "mp4" | "avi" | "mkv" => Some(MediaKind::Video),
        _ => None,
    }
}

/// Absolute URI for a stimulus resource, resolved against `base_path`.
pub fn resolve_resource(resource: &str, base_path: &Path) -> String {
    if resource.contains("://") {
        return resource.to_string();
    }
    let joined = base_path.join(resource);
    format!("file://{}", joined.display())
}

const HEADER: [&str; 5] = ["id", "resource", "keyword", "pleasure", "arousal"];

/// Parse a manifest CSV. Fail-fast on the first error unless `lenient`, which
/// collects every error into [`ManifestError::Multiple`].
pub fn parse_manifest<R: Read>(
    source: R,
    base_path: &Path,
    lenient: bool,
) -> Result<Vec<Stimulus>, ManifestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);

    let mut stimuli = Vec::new();
    let mut errors = Vec::new();
    let mut seen_ids: HashMap<String, usize> = HashMap::new();
    let mut warned_extra = false;

    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        if idx == 0 {
            let got: Vec<&str> = record.iter().map(|f| f.trim()).collect();
            if got.len() < 5 || !got[..5].eq(&HEADER) {
                return Err(ManifestError::MissingHeader { row });
            }
            continue;
        }
        if record.len() == 1 && record[0].trim().is_empty() {
            continue; // blank line
        }
        match parse_row(&record, row, base_path, &mut seen_ids, &mut warned_extra) {
            Ok(stim) => stimuli.push(stim),
            Err(e) if lenient => errors.push(e),
            Err(e) => return Err(e),
        }
    }

    if errors.is_empty() {
        Ok(stimuli)
    } else if errors.len() == 1 {
        Err(errors.pop().unwrap())
    } else {
        Err(ManifestError::Multiple(errors))
    }
}

fn parse_row(
    record: &csv::StringRecord,
    row: usize,
    base_path: &Path,
    seen_ids: &mut HashMap<String, usize>,
    warned_extra: &mut bool,
) -> Result<Stimulus, ManifestError> {
    if record.len() < 5 {
        return Err(ManifestError::ColumnCount {
            row,
            expected: 5,
            found: record.len(),
        });
    }
    if record.len() > 5 && !*warned_extra {
        eprintln!(
            "warning: row {row} has {} columns; trailing columns ignored",
            record.len()
        );
        *warned_extra = true;
    }

    let id = record[0].trim();
    let resource = record[1].trim();
    let keyword = record[2].trim();
    if id.is_empty() {
        return Err(ManifestError::EmptyField { row, field: "id" });
    }
    if resource.is_empty() {
        return Err(ManifestError::EmptyField {
            row,
            field: "resource",
        });
    }
    if keyword.is_empty() {
        return Err(ManifestError::EmptyField {
            row,
            field: "keyword",
        });
    }
    if seen_ids.insert(id.to_string(), row).is_some() {
        return Err(ManifestError::DuplicateId {
            row,
            id: id.to_string(),
        });
    }

    let mut affect = [0.0f64; 2];
    for (slot, (axis, col)) in affect
        .iter_mut()
        .zip([("pleasure", 3usize), ("arousal", 4usize)])
    {
        let raw = record[col].trim();
        let v: f64 = raw.parse().map_err(|_| ManifestError::NonNumericAffect {
            row,
            axis,
            value: raw.to_string(),
        })?;
        if !(1.0..=9.0).contains(&v) {
            return Err(ManifestError::AffectOutOfRange { row, axis, value: v });
        }
        *slot = v;
    }

    let media_kind = media_kind_for(resource).ok_or_else(|| ManifestError::UnknownExtension {
        row,
        resource: resource.to_string(),
    })?;

    Ok(Stimulus {
        id: id.to_string(),
        resource: resolve_resource(resource, base_path),
        media_kind,
        affect: AffectPoint {
            pleasure: affect[0],
            arousal: affect[1],
        },
        raw_keyword: keyword.to_string(),
    })
}

/// Render a stimulus list back into manifest CSV form.
pub fn serialize_manifest(stimuli: &[Stimulus]) -> String {
    let mut out = String::from("id,resource,keyword,pleasure,arousal\n");
    for s in stimuli {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.id, s.resource, s.raw_keyword, s.affect.pleasure, s.affect.arousal
        ));
    }
    out
}

/// Descriptive statistics of the keyword-per-stimulus distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestStats {
    pub num_stimuli: usize,
    pub num_keywords: usize,
    pub max_per_keyword: usize,
    /// Buckets: 10+, 6-10, 4-5, 2-3, 1 stimuli per keyword.
    pub histogram: Histogram,
    pub mean_per_keyword: f64,
    pub mode_per_keyword: usize,
    pub median_per_keyword: f64,
    pub stddev_per_keyword: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Histogram {
    pub ten_plus: usize,
    pub six_to_ten: usize,
    pub four_to_five: usize,
    pub two_to_three: usize,
    pub one: usize,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.ten_plus + self.six_to_ten + self.four_to_five + self.two_to_three + self.one
    }
}

/// Compute keyword statistics over exact (case-sensitive) raw keyword equality.
pub fn compute_stats(stimuli: &[Stimulus]) -> ManifestStats {
    let mut per_keyword: HashMap<&str, usize> = HashMap::new();
    for s in stimuli {
        *per_keyword.entry(s.raw_keyword.as_str()).or_insert(0) += 1;
    }

    let mut counts: Vec<usize> = per_keyword.values().copied().collect();
    counts.sort_unstable();
    let n = counts.len();
    if n == 0 {
        return ManifestStats {
            num_stimuli: 0,
            num_keywords: 0,
            max_per_keyword: 0,
            histogram: Histogram::default(),
            mean_per_keyword: 0.0,
            mode_per_keyword: 0,
            median_per_keyword: 0.0,
            stddev_per_keyword: 0.0,
        };
    }

    let mut histogram = Histogram::default();
    for &c in &counts {
        match c {
            0 => {}
            1 => histogram.one += 1,
            2..=3 => histogram.two_to_three += 1,
            4..=5 => histogram.four_to_five += 1,
            6..=10 => histogram.six_to_ten += 1,
            _ => histogram.ten_plus += 1,
        }
    }

    let mean = stimuli.len() as f64 / n as f64;
    let median = if n % 2 == 1 {
        counts[n / 2] as f64
    } else {
        (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
    };

    let mut freq: HashMap<usize, usize> = HashMap::new();
    for &c in &counts {
        *freq.entry(c).or_insert(0) += 1;
    }
    // Smallest count wins ties, so heavy-tailed distributions report mode 1.
    let mode = freq
        .iter()
        .map(|(&c, &f)| (f, std::cmp::Reverse(c)))
        .max()
        .map(|(_, std::cmp::Reverse(c))| c)
        .unwrap_or(0);

    // Sample standard deviation (n - 1 divisor); 0 for a single keyword.
    let stddev = if n > 1 {
        let ss: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };

    ManifestStats {
        num_stimuli: stimuli.len(),
        num_keywords: n,
        max_per_keyword: *counts.last().unwrap(),
        histogram,
        mean_per_keyword: mean,
        mode_per_keyword: mode,
        median_per_keyword: median,
        stddev_per_keyword: stddev,
    }
}

impl ManifestStats {
    /// Plain-text table with one row per statistic.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let rows: Vec<(&str, String)> = vec![
            ("Num. of stim.", self.num_stimuli.to_string()),
            ("Num. of keywords", self.num_keywords.to_string()),
            ("Max. stim. per 1 keyword", self.max_per_keyword.to_string()),
            (
                "Num. of keywords with 10+ stim.",
                self.histogram.ten_plus.to_string(),
            ),
            (
                "Num. of keywords with 6-10 stim.",
                self.histogram.six_to_ten.to_string(),
            ),
            (
                "Num. of keywords with 4-5 stim.",
                self.histogram.four_to_five.to_string(),
            ),
            (
                "Num. of keywords with 2-3 stim.",
                self.histogram.two_to_three.to_string(),
            ),
            (
                "Num. of keywords with 1 stim.",
                self.histogram.one.to_string(),
            ),
            (
                "Avg. num. of stim. per 1 keyword",
                format!("{:.3}", self.mean_per_keyword),
            ),
            (
                "Mode of stim. per 1 keyword",
                self.mode_per_keyword.to_string(),
            ),
            (
                "Median of stim. per 1 keyword",
                format!("{}", self.median_per_keyword),
            ),
            ("Std.dev.", format!("{:.3}", self.stddev_per_keyword)),
        ];
        let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        for (label, value) in rows {
            out.push_str(&format!("{label:width$}  {value}\n"));
        }
        out
    }
}
