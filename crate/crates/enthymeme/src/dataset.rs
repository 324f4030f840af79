//! Dataset loading, augmentation with generated premise chains, and
//! binarization into entailment / non-entailment instances.
//!
//! Three input formats are read:
//!
//! * `arct`: the ARCT tab-separated layout with columns `#id`, `warrant0`,
//!   `warrant1`, `correctLabelW0orW1`, `reason` (premise) and `claim`.
//! * `anli`: JSON lines with `obs1` (premise), `obs2` (claim), `hyp1`,
//!   `hyp2` and `label` (1 or 2, the plausible hypothesis).
//! * `jsonl`: the native format, one item per line:
//!
//! ```json
//! {"schema": 1, "id": "x", "premise": "...", "claim": "...",
//!  "helpful": {"original": ["..."], "1": ["..."], "2": ["...", "..."]},
//!  "unhelpful": {"original": ["..."]},
//!  "amr": {"<sentence>": "<penman>"}}
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use enthymeme_core::BinaryLabel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::providers::{ChainKind, GenerationRequest, PremiseGenerator};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Arct,
    Anli,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Arct,
    Anli,
    Jsonl,
}

impl FromStr for Format {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, DatasetError> {
        match s {
            "arct" => Ok(Format::Arct),
            "anli" => Ok(Format::Anli),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(DatasetError::UnknownFormat(other.to_string())),
        }
    }
}

/// Which implicit premises accompany the explicit premise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StepType {
    /// No implicit premise.
    None,
    /// The dataset's own single helpful / unhelpful premise.
    Original,
    One,
    Two,
    Three,
}

impl StepType {
    pub const ALL: [StepType; 5] = [StepType::None, StepType::Original, StepType::One, StepType::Two, StepType::Three];

    /// Key of the chain in an item's helpful/unhelpful maps.
    pub fn key(self) -> Option<&'static str> {
        match self {
            StepType::None => None,
            StepType::Original => Some("original"),
            StepType::One => Some("1"),
            StepType::Two => Some("2"),
            StepType::Three => Some("3"),
        }
    }

    /// Number of sentences a chain of this type holds.
    pub fn sentences(self) -> usize {
        match self {
            StepType::None => 0,
            StepType::Original | StepType::One => 1,
            StepType::Two => 2,
            StepType::Three => 3,
        }
    }

    pub fn generated_steps(self) -> Option<u8> {
        match self {
            StepType::One => Some(1),
            StepType::Two => Some(2),
            StepType::Three => Some(3),
            _ => None,
        }
    }

    pub fn from_steps(steps: u8) -> Option<Self> {
        match steps {
            1 => Some(StepType::One),
            2 => Some(StepType::Two),
            3 => Some(StepType::Three),
            _ => None,
        }
    }
}

impl fmt::Display for StepType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepType::None => "none",
            StepType::Original => "original",
            StepType::One => "1",
            StepType::Two => "2",
            StepType::Three => "3",
        })
    }
}

impl FromStr for StepType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(StepType::None),
            "original" => Ok(StepType::Original),
            "1" => Ok(StepType::One),
            "2" => Ok(StepType::Two),
            "3" => Ok(StepType::Three),
            other => Err(format!("unknown step type {other:?} (expected none, original, 1, 2 or 3)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetItem {
    #[serde(default = "schema_version")]
    pub schema: u32,
    pub id: String,
    pub premise: String,
    pub claim: String,
    /// Chains keyed by `original`, `1`, `2` or `3`.
    #[serde(default)]
    pub helpful: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub unhelpful: BTreeMap<String, Vec<String>>,
    #[serde(default = "custom_source")]
    pub source: Source,
    /// Pre-parsed PENMAN per sentence.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub amr: BTreeMap<String, String>,
    /// Why augmentation failed, if it did. Flagged items are excluded from
    /// runs and reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged: Option<String>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn custom_source() -> Source {
    Source::Custom
}

impl DatasetItem {
    pub fn new(id: impl Into<String>, premise: impl Into<String>, claim: impl Into<String>, source: Source) -> Self {
        DatasetItem {
            schema: SCHEMA_VERSION,
            id: id.into(),
            premise: premise.into(),
            claim: claim.into(),
            helpful: BTreeMap::new(),
            unhelpful: BTreeMap::new(),
            source,
            amr: BTreeMap::new(),
            flagged: None,
        }
    }

    fn with_original(mut self, helpful: String, unhelpful: String) -> Self {
        self.helpful.insert("original".into(), vec![helpful]);
        self.unhelpful.insert("original".into(), vec![unhelpful]);
        self
    }

    /// Every rule the item breaks, empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema != SCHEMA_VERSION {
            out.push(format!("unsupported schema {}", self.schema));
        }
        if self.id.trim().is_empty() {
            out.push("empty id".into());
        }
        if self.premise.trim().is_empty() {
            out.push("empty premise".into());
        }
        if self.claim.trim().is_empty() {
            out.push("empty claim".into());
        }
        for (side, chains) in [("helpful", &self.helpful), ("unhelpful", &self.unhelpful)] {
            for (key, chain) in chains {
                let Ok(step) = key.parse::<StepType>() else {
                    out.push(format!("{side} has unknown key {key:?}"));
                    continue;
                };
                if step == StepType::None || chain.len() != step.sentences() {
                    out.push(format!("{side}[{key}] has {} sentences, expected {}", chain.len(), step.sentences()));
                }
                if chain.iter().any(|s| s.trim().is_empty()) {
                    out.push(format!("{side}[{key}] contains an empty sentence"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaViolation {
    /// 1-based line number in the input file.
    pub line: usize,
    pub id: Option<String>,
    pub message: String,
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "line {} ({id}): {}", self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("unknown dataset format {0:?} (expected arct, anli or jsonl)")]
    UnknownFormat(String),
    #[error("reading {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{id}: no {side} chain for step type {step}")]
    MissingSteps { id: String, side: ChainKind, step: StepType },
}

/// Valid items plus the per-line problems that kept others out.
#[derive(Debug, Clone, Default)]
pub struct LoadedDataset {
    pub items: Vec<DatasetItem>,
    pub violations: Vec<SchemaViolation>,
}

pub fn load_dataset(path: &Path, format: Format) -> Result<LoadedDataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_dataset(&text, format))
}

pub fn parse_dataset(text: &str, format: Format) -> LoadedDataset {
    let mut out = LoadedDataset::default();
    let parsed: Vec<(usize, Result<DatasetItem, (Option<String>, String)>)> = match format {
        Format::Arct => parse_arct(text),
        Format::Anli => json_lines(text).map(|(line, v)| (line, v.and_then(anli_item))).collect(),
        Format::Jsonl => json_lines(text)
            .map(|(line, v)| {
                let item = v.and_then(|v| {
                    let id = v.get("id").and_then(|i| i.as_str()).map(String::from);
                    serde_json::from_value::<DatasetItem>(v).map_err(|e| (id, e.to_string()))
                });
                (line, item)
            })
            .collect(),
    };
    for (line, result) in parsed {
        match result {
            Ok(item) => {
                let problems = item.violations();
                if problems.is_empty() {
                    out.items.push(item);
                } else {
                    out.violations.extend(problems.into_iter().map(|message| SchemaViolation {
                        line,
                        id: Some(item.id.clone()),
                        message,
                    }));
                }
            }
            Err((id, message)) => out.violations.push(SchemaViolation { line, id, message }),
        }
    }
    out
}

type LineResult<T> = Result<T, (Option<String>, String)>;

fn json_lines(text: &str) -> impl Iterator<Item = (usize, LineResult<serde_json::Value>)> + '_ {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, serde_json::from_str(l).map_err(|e| (None, e.to_string()))))
}

fn anli_item(v: serde_json::Value) -> LineResult<DatasetItem> {
    let id = v
        .get("id")
        .or_else(|| v.get("story_id"))
        .and_then(|i| i.as_str().map(String::from).or_else(|| i.as_u64().map(|n| n.to_string())));
    let field = |name: &str| -> LineResult<String> {
        v.get(name)
            .and_then(|x| x.as_str())
            .map(String::from)
            .ok_or_else(|| (id.clone(), format!("missing {name}")))
    };
    let label = v
        .get("label")
        .and_then(|l| l.as_u64().or_else(|| l.as_str().and_then(|s| s.trim().parse().ok())))
        .ok_or_else(|| (id.clone(), "missing label".to_string()))?;
    let (hyp1, hyp2) = (field("hyp1")?, field("hyp2")?);
    let (helpful, unhelpful) = match label {
        1 => (hyp1, hyp2),
        2 => (hyp2, hyp1),
        other => return Err((id, format!("label must be 1 or 2, got {other}"))),
    };
    let id = id.clone().ok_or((None, "missing id".to_string()))?;
    Ok(DatasetItem::new(id, field("obs1")?, field("obs2")?, Source::Anli).with_original(helpful, unhelpful))
}

fn parse_arct(text: &str) -> Vec<(usize, LineResult<DatasetItem>)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = match reader.headers() {
        Ok(h) => h.iter().map(|s| s.trim_start_matches('#').to_string()).collect(),
        Err(e) => return vec![(1, Err((None, e.to_string())))],
    };
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id), Some(w0), Some(w1), Some(label), Some(reason), Some(claim)) = (
        col("id"),
        col("warrant0"),
        col("warrant1"),
        col("correctLabelW0orW1"),
        col("reason"),
        col("claim"),
    ) else {
        return vec![(1, Err((None, "header lacks an ARCT column".to_string())))];
    };
    reader
        .records()
        .map(|record| {
            let line = record.as_ref().ok().and_then(|r| r.position()).map_or(0, |p| p.line() as usize);
            let item = record.map_err(|e| (None, e.to_string())).and_then(|r| {
                let get = |i: usize| r.get(i).map(str::to_string);
                let item_id = get(id);
                let missing = |what: &str| (item_id.clone(), format!("missing {what}"));
                let (w0, w1) = (get(w0).ok_or_else(|| missing("warrant0"))?, get(w1).ok_or_else(|| missing("warrant1"))?);
                let (helpful, unhelpful) = match get(label).as_deref().map(str::trim) {
                    Some("0") => (w0, w1),
                    Some("1") => (w1, w0),
                    _ => return Err(missing("correctLabelW0orW1")),
                };
                Ok(DatasetItem::new(
                    item_id.clone().ok_or_else(|| missing("id"))?,
                    get(reason).ok_or_else(|| missing("reason"))?,
                    get(claim).ok_or_else(|| missing("claim"))?,
                    Source::Arct,
                )
                .with_original(helpful, unhelpful))
            });
            (line, item)
        })
        .collect()
}

pub fn write_jsonl(items: &[DatasetItem], mut out: impl Write) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Fills the helpful and unhelpful chains for each of `steps`. An item
/// whose generation fails keeps what it had and is flagged with the error.
pub fn augment(items: &[DatasetItem], generator: &dyn PremiseGenerator, steps: &[u8]) -> Vec<DatasetItem> {
    items
        .par_iter()
        .map(|item| {
            let mut item = item.clone();
            for &s in steps {
                for kind in [ChainKind::Helpful, ChainKind::Unhelpful] {
                    let chains = match kind {
                        ChainKind::Helpful => &item.helpful,
                        ChainKind::Unhelpful => &item.unhelpful,
                    };
                    if chains.contains_key(&s.to_string()) {
                        continue;
                    }
                    let result = GenerationRequest::new(item.premise.clone(), item.claim.clone(), s, kind)
                        .and_then(|req| generator.generate(&req));
                    match result {
                        Ok(sentences) => {
                            let chains = match kind {
                                ChainKind::Helpful => &mut item.helpful,
                                ChainKind::Unhelpful => &mut item.unhelpful,
                            };
                            chains.insert(s.to_string(), sentences);
                        }
                        Err(e) => {
                            log::warn!("{}: {kind} chain with {s} steps failed: {e}", item.id);
                            item.flagged.get_or_insert_with(|| format!("{kind} chain with {s} steps: {e}"));
                        }
                    }
                }
            }
            item
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryInstance {
    /// Item id with an `h` (helpful) or `u` (unhelpful) suffix.
    pub id: String,
    pub premise: String,
    pub implicit: Vec<String>,
    pub claim: String,
    pub gold: BinaryLabel,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub amr: BTreeMap<String, String>,
}

/// The helpful-side instance (gold entailment) and, unless `step` is
/// `None`, the unhelpful-side instance (gold non-entailment).
pub fn binarize(item: &DatasetItem, step: StepType) -> Result<Vec<BinaryInstance>, DatasetError> {
    let make = |suffix: &str, implicit: Vec<String>, gold| BinaryInstance {
        id: format!("{}/{suffix}", item.id),
        premise: item.premise.clone(),
        implicit,
        claim: item.claim.clone(),
        gold,
        amr: item.amr.clone(),
    };
    let Some(key) = step.key() else {
        return Ok(vec![make("none", Vec::new(), BinaryLabel::Entailment)]);
    };
    let chain = |side: ChainKind| {
        let chains = match side {
            ChainKind::Helpful => &item.helpful,
            ChainKind::Unhelpful => &item.unhelpful,
        };
        chains.get(key).cloned().ok_or(DatasetError::MissingSteps {
            id: item.id.clone(),
            side,
            step,
        })
    };
    Ok(vec![
        make("h", chain(ChainKind::Helpful)?, BinaryLabel::Entailment),
        make("u", chain(ChainKind::Unhelpful)?, BinaryLabel::NonEntailment),
    ])
}
