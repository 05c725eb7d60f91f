//! Text normalization, language filtering, stopword removal, 100-character
//! segmentation, and assembly of the per-group gendered document pairs.
//!
//! Normalization lowercases, deletes apostrophes in place (`ma'am` ->
//! `maam`), and turns every other punctuation or symbol character into a
//! token boundary. Digits stay. Segmentation packs stopword-free tokens
//! greedily into windows whose space-joined length stays within the limit;
//! tokens are never split, so a lone over-long token forms its own segment.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::lexicon::{Gender, GenderLexicon};

/// Segment window size used throughout the measurement pipeline.
pub const DEFAULT_SEGMENT_CHARS: usize = 100;

/// The pinned English stopword list shipped with the crate: the 179-entry
/// list of a widely used English NLP toolkit minus the six gendered
/// pronouns (he, she, him, her, his, hers), which the keyword table claims.
pub const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Error)]
pub enum TextprepError {
    #[error("cannot read {path} for document '{doc_id}': {source}")]
    UnreadableDocument {
        doc_id: String,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest line {line}: {reason}")]
    MalformedManifest { line: usize, reason: String },
    #[error("manifest line {line}: duplicate doc_id '{doc_id}'")]
    DuplicateDocId { line: usize, doc_id: String },
    #[error("manifest is empty")]
    EmptyManifest,
}

/// Whether stopwords are still present in a token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    /// Stage A: normalized, stopwords retained.
    WithStopwords,
    /// Stage B: stopwords removed.
    StopwordsRemoved,
}

/// An ordered list of normalized tokens from one source document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub doc_id: String,
    pub stage: Stage,
    pub tokens: Vec<String>,
}

/// A packed window of stage-B tokens, at most `max_chars` once space-joined
/// (except for a single over-long token), tagged with the genders whose
/// keywords it contains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub joined_len: usize,
    pub genders: BTreeSet<Gender>,
}

/// The female-context / male-context segment pair for one group.
///
/// A segment carrying keywords of both genders appears in both lists; a
/// segment carrying neither appears in neither.
#[derive(Debug, Clone, Serialize)]
pub struct GenderedDocuments {
    pub group_id: String,
    pub female_segments: Vec<Segment>,
    pub male_segments: Vec<Segment>,
}

impl GenderedDocuments {
    fn empty(group_id: &str) -> Self {
        Self {
            group_id: group_id.to_string(),
            female_segments: Vec::new(),
            male_segments: Vec::new(),
        }
    }

    pub fn segments_for(&self, gender: Gender) -> &[Segment] {
        match gender {
            Gender::Female => &self.female_segments,
            Gender::Male => &self.male_segments,
        }
    }

    /// All segment tokens of one gendered document, flattened.
    pub fn tokens_for(&self, gender: Gender) -> impl Iterator<Item = &str> {
        self.segments_for(gender)
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
    }
}

/// One manifest record: tab-separated `doc_id  country  group  path`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusManifestEntry {
    pub doc_id: String,
    pub country: String,
    pub group: String,
    pub path: PathBuf,
}

/// Lowercase, delete apostrophes in place, break on everything else that is
/// not alphanumeric. Stage A: stopwords retained.
pub fn normalize(raw: &str, doc_id: &str) -> TokenStream {
    TokenStream {
        doc_id: doc_id.to_string(),
        stage: Stage::WithStopwords,
        tokens: normalize_text(raw),
    }
}

pub(crate) fn normalize_text(raw: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in raw.chars() {
        if ch == '\'' || ch == '\u{2019}' {
            continue; // apostrophes vanish without creating a boundary
        }
        if ch.is_alphanumeric() {
            for lower in ch.to_lowercase() {
                current.push(lower);
            }
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Normalized stopword set. Any surface form claimed by the gender lexicon
/// is excluded so keyword tokens survive stage B.
#[derive(Debug, Clone)]
pub struct StopwordList {
    set: HashSet<String>,
}

impl StopwordList {
    /// The bundled list, checked against the built-in lexicon.
    pub fn builtin() -> &'static StopwordList {
        static INSTANCE: OnceLock<StopwordList> = OnceLock::new();
        INSTANCE.get_or_init(|| StopwordList::parse(BUILTIN_STOPWORDS, GenderLexicon::builtin()))
    }

    /// Parse a one-token-per-line list. Lines starting with `#` and blank
    /// lines are skipped; entries go through the corpus normalization, so
    /// `don't` in a source list matches the normalized token `dont`.
    pub fn parse(text: &str, lexicon: &GenderLexicon) -> StopwordList {
        let mut set = HashSet::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            for token in normalize_text(line) {
                if lexicon.match_token(&token).is_none() {
                    set.insert(token);
                }
            }
        }
        StopwordList { set }
    }

    pub fn from_path(path: &Path, lexicon: &GenderLexicon) -> Result<StopwordList, TextprepError> {
        let text = fs::read_to_string(path).map_err(|source| TextprepError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(StopwordList::parse(&text, lexicon))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.set.contains(token)
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

/// Remove stopwords, preserving order. Stage A in, stage B out.
pub fn drop_stopwords(stream: &TokenStream, stopwords: &StopwordList) -> TokenStream {
    debug_assert_eq!(stream.stage, Stage::WithStopwords);
    TokenStream {
        doc_id: stream.doc_id.clone(),
        stage: Stage::StopwordsRemoved,
        tokens: stream
            .tokens
            .iter()
            .filter(|t| !stopwords.contains(t))
            .cloned()
            .collect(),
    }
}

/// Decides, per paragraph, whether text enters the pipeline.
pub trait LanguageFilter {
    fn accept(&self, paragraph: &str) -> bool;
}

/// Default heuristic: accept a paragraph when at least `threshold` of its
/// stage-A tokens are stopwords or gender keywords. Paragraphs shorter than
/// `min_tokens` are always accepted.
pub struct StopwordRatioFilter<'a> {
    stopwords: &'a StopwordList,
    lexicon: &'a GenderLexicon,
    pub threshold: f64,
    pub min_tokens: usize,
}

impl<'a> StopwordRatioFilter<'a> {
    pub fn new(stopwords: &'a StopwordList, lexicon: &'a GenderLexicon) -> Self {
        Self {
            stopwords,
            lexicon,
            threshold: 0.2,
            min_tokens: 3,
        }
    }
}

impl LanguageFilter for StopwordRatioFilter<'_> {
    fn accept(&self, paragraph: &str) -> bool {
        let tokens = normalize_text(paragraph);
        if tokens.len() < self.min_tokens {
            return true;
        }
        let hits = tokens
            .iter()
            .filter(|t| self.stopwords.contains(t) || self.lexicon.match_token(t).is_some())
            .count();
        hits as f64 >= self.threshold * tokens.len() as f64
    }
}

/// Pass-through mode (`--no-lang-filter`).
pub struct AcceptAll;

impl LanguageFilter for AcceptAll {
    fn accept(&self, _paragraph: &str) -> bool {
        true
    }
}

/// Convenience wrapper for the default heuristic.
pub fn english_filter(
    paragraph: &str,
    stopwords: &StopwordList,
    lexicon: &GenderLexicon,
) -> bool {
    StopwordRatioFilter::new(stopwords, lexicon).accept(paragraph)
}

/// Greedy non-overlapping packing of a stage-B stream into segments whose
/// space-joined character count stays within `max_chars`. Tokens are never
/// split; a single token longer than the limit becomes its own segment.
/// Genders are left unassigned.
pub fn segment(stream: &TokenStream, max_chars: usize) -> Vec<Segment> {
    assert!(max_chars >= 1, "max_chars must be at least 1");
    let mut segments = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut joined_len = 0usize;
    for token in &stream.tokens {
        let tlen = token.chars().count();
        let candidate = if tokens.is_empty() {
            tlen
        } else {
            joined_len + 1 + tlen
        };
        if tokens.is_empty() || candidate <= max_chars {
            tokens.push(token.clone());
            joined_len = candidate;
        } else {
            segments.push(Segment {
                doc_id: stream.doc_id.clone(),
                tokens: std::mem::take(&mut tokens),
                joined_len,
                genders: BTreeSet::new(),
            });
            tokens.push(token.clone());
            joined_len = tlen;
        }
    }
    if !tokens.is_empty() {
        segments.push(Segment {
            doc_id: stream.doc_id.clone(),
            tokens,
            joined_len,
            genders: BTreeSet::new(),
        });
    }
    segments
}

/// Tag a segment with every gender whose keyword occurs among its tokens.
pub fn assign_genders(mut segment: Segment, lexicon: &GenderLexicon) -> Segment {
    segment.genders = segment
        .tokens
        .iter()
        .filter_map(|t| lexicon.match_token(t))
        .map(|(gender, _)| gender)
        .collect();
    segment
}

/// Load a corpus manifest: `doc_id<TAB>country<TAB>group<TAB>path` per line,
/// `#` comments allowed. Relative paths resolve against the manifest's own
/// directory.
pub fn load_manifest(path: &Path) -> Result<Vec<CorpusManifestEntry>, TextprepError> {
    let text = fs::read_to_string(path).map_err(|source| TextprepError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(TextprepError::MalformedManifest {
                line: line_no,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let doc_id = fields[0].trim().to_string();
        if doc_id.is_empty() {
            return Err(TextprepError::MalformedManifest {
                line: line_no,
                reason: "empty doc_id".into(),
            });
        }
        if !seen.insert(doc_id.clone()) {
            return Err(TextprepError::DuplicateDocId {
                line: line_no,
                doc_id,
            });
        }
        let group = fields[2].trim().to_string();
        if group.eq_ignore_ascii_case(OVERALL_GROUP) {
            return Err(TextprepError::MalformedManifest {
                line: line_no,
                reason: format!("group label '{group}' is reserved for the aggregate"),
            });
        }
        let raw_path = Path::new(fields[3].trim());
        let path = if raw_path.is_absolute() {
            raw_path.to_path_buf()
        } else {
            base.join(raw_path)
        };
        entries.push(CorpusManifestEntry {
            doc_id,
            country: fields[1].trim().to_string(),
            group,
            path,
        });
    }
    Ok(entries)
}

/// Label of the synthetic aggregate over all manifest entries.
pub const OVERALL_GROUP: &str = "overall";

/// One group's worth of prepared material: the gendered document pair plus
/// the stage-A streams the firstness scan needs.
#[derive(Debug, Clone)]
pub struct PreparedGroup {
    pub documents: GenderedDocuments,
    pub streams: Vec<TokenStream>,
}

impl PreparedGroup {
    fn new(group_id: &str) -> Self {
        Self {
            documents: GenderedDocuments::empty(group_id),
            streams: Vec::new(),
        }
    }
}

/// The full prepared corpus: per-group material in alphabetical group
/// order, the overall aggregate, and non-fatal warnings.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub groups: BTreeMap<String, PreparedGroup>,
    pub overall: PreparedGroup,
    pub warnings: Vec<String>,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::WithStopwords => write!(f, "A"),
            Stage::StopwordsRemoved => write!(f, "B"),
        }
    }
}

/// Assemble the per-group and overall gendered documents from a manifest.
///
/// Deterministic: documents are processed in manifest order, segments keep
/// stream order, and groups are keyed alphabetically.
pub fn build_documents(
    entries: &[CorpusManifestEntry],
    lexicon: &GenderLexicon,
    stopwords: &StopwordList,
    filter: &dyn LanguageFilter,
    segment_chars: usize,
) -> Result<PreparedCorpus, TextprepError> {
    if entries.is_empty() {
        return Err(TextprepError::EmptyManifest);
    }
    let mut groups: BTreeMap<String, PreparedGroup> = BTreeMap::new();
    let mut overall = PreparedGroup::new(OVERALL_GROUP);
    let mut warnings = Vec::new();

    for entry in entries {
        let bytes = fs::read(&entry.path).map_err(|source| TextprepError::UnreadableDocument {
            doc_id: entry.doc_id.clone(),
            path: entry.path.clone(),
            source,
        })?;
        let text = String::from_utf8_lossy(&bytes);
        let replaced = text.matches('\u{FFFD}').count();
        if replaced > 0 {
            warnings.push(format!(
                "{}: replaced {replaced} invalid UTF-8 sequence(s)",
                entry.doc_id
            ));
        }

        let mut kept = String::new();
        let mut rejected = 0usize;
        for paragraph in split_paragraphs(&text) {
            if filter.accept(paragraph) {
                kept.push_str(paragraph);
                kept.push('\n');
            } else {
                rejected += 1;
            }
        }
        if rejected > 0 {
            warnings.push(format!(
                "{}: language filter rejected {rejected} paragraph(s)",
                entry.doc_id
            ));
        }

        let stream_a = normalize(&kept, &entry.doc_id);
        let stream_b = drop_stopwords(&stream_a, stopwords);
        let segments: Vec<Segment> = segment(&stream_b, segment_chars)
            .into_iter()
            .map(|s| assign_genders(s, lexicon))
            .collect();

        let group = groups
            .entry(entry.group.clone())
            .or_insert_with(|| PreparedGroup::new(&entry.group));
        for seg in &segments {
            for gender in &seg.genders {
                match gender {
                    Gender::Female => {
                        group.documents.female_segments.push(seg.clone());
                        overall.documents.female_segments.push(seg.clone());
                    }
                    Gender::Male => {
                        group.documents.male_segments.push(seg.clone());
                        overall.documents.male_segments.push(seg.clone());
                    }
                }
            }
        }
        group.streams.push(stream_a.clone());
        overall.streams.push(stream_a);
    }

    Ok(PreparedCorpus {
        groups,
        overall,
        warnings,
    })
}

/// Blank-line delimited paragraphs.
fn split_paragraphs(text: &str) -> impl Iterator<Item = &str> {
    text.split("\n\n")
        .flat_map(|chunk| chunk.split("\r\n\r\n"))
        .map(str::trim)
        .filter(|p| !p.is_empty())
}
