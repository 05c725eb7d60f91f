//! Two-document TF-IDF over the gendered documents: Porter-stemmed term
//! counting, scoring, top-k selection, keyword stripping, and cross-list
//! deduplication.
//!
//! TF is count/total within one document. The literal IDF `ln(N/(1+df))`
//! degenerates at N=2 (unique terms score exactly 0, shared terms go
//! negative), so the default is the smoothed variant
//! `ln((1+N)/(1+df)) + 1`, which preserves a meaningful ranking; the
//! literal form stays available behind [`IdfMode::Literal`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::lexicon::{Gender, GenderLexicon};
use crate::porter;
use crate::textprep::GenderedDocuments;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TfidfError {
    #[error("both gendered documents are empty; nothing to rank")]
    EmptyCorpus,
    #[error("term '{0}' is not present in the document")]
    TermAbsent(String),
}

/// IDF flavor. `Smoothed` is the default; `Literal` reproduces the bare
/// formula including its N=2 degeneracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IdfMode {
    Literal,
    #[default]
    Smoothed,
}

impl FromStr for IdfMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "literal" => Ok(IdfMode::Literal),
            "smoothed" => Ok(IdfMode::Smoothed),
            other => Err(format!("unknown idf mode {other:?} (literal|smoothed)")),
        }
    }
}

impl fmt::Display for IdfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdfMode::Literal => write!(f, "literal"),
            IdfMode::Smoothed => write!(f, "smoothed"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TfidfConfig {
    pub top_k: usize,
    pub idf_mode: IdfMode,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        Self {
            top_k: 300,
            idf_mode: IdfMode::Smoothed,
        }
    }
}

/// Stemmed term counts for one gendered document.
#[derive(Debug, Clone, Default)]
pub struct TermDocument {
    counts: BTreeMap<String, u64>,
    total_terms: u64,
}

impl TermDocument {
    pub fn add(&mut self, stem: String) {
        *self.counts.entry(stem).or_insert(0) += 1;
        self.total_terms += 1;
    }

    pub fn count(&self, term: &str) -> u64 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn total_terms(&self) -> u64 {
        self.total_terms
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(t, c)| (t.as_str(), *c))
    }

    pub fn is_empty(&self) -> bool {
        self.total_terms == 0
    }
}

/// The two-document corpus (N = 2): female context and male context.
#[derive(Debug, Clone)]
pub struct TfidfCorpus {
    pub female: TermDocument,
    pub male: TermDocument,
}

impl TfidfCorpus {
    pub const N_DOCS: u32 = 2;

    pub fn document(&self, gender: Gender) -> &TermDocument {
        match gender {
            Gender::Female => &self.female,
            Gender::Male => &self.male,
        }
    }

    /// Document frequency of a term: 0, 1, or 2.
    pub fn df(&self, term: &str) -> u32 {
        u32::from(self.female.count(term) > 0) + u32::from(self.male.count(term) > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedTerm {
    pub stem: String,
    pub score: f64,
}

/// A post-processed keyword list: scores non-increasing, ties broken by
/// ascending stem, no duplicates.
#[derive(Debug, Clone, Serialize)]
pub struct RankedTermList {
    pub context: Gender,
    pub entries: Vec<RankedTerm>,
}

impl RankedTermList {
    pub fn stems(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.stem.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Stem every token of each gendered document and count it.
pub fn build_term_documents(documents: &GenderedDocuments) -> Result<TfidfCorpus, TfidfError> {
    let mut corpus = TfidfCorpus {
        female: TermDocument::default(),
        male: TermDocument::default(),
    };
    for token in documents.tokens_for(Gender::Female) {
        corpus.female.add(porter::stem(token));
    }
    for token in documents.tokens_for(Gender::Male) {
        corpus.male.add(porter::stem(token));
    }
    if corpus.female.is_empty() && corpus.male.is_empty() {
        return Err(TfidfError::EmptyCorpus);
    }
    Ok(corpus)
}

fn idf(mode: IdfMode, df: u32) -> f64 {
    let n = f64::from(TfidfCorpus::N_DOCS);
    let df = f64::from(df);
    match mode {
        IdfMode::Literal => (n / (1.0 + df)).ln(),
        IdfMode::Smoothed => ((1.0 + n) / (1.0 + df)).ln() + 1.0,
    }
}

/// TF-IDF of one term that is present in `doc`.
pub fn tfidf_score(
    term: &str,
    doc: &TermDocument,
    corpus: &TfidfCorpus,
    config: &TfidfConfig,
) -> Result<f64, TfidfError> {
    let count = doc.count(term);
    if count == 0 {
        return Err(TfidfError::TermAbsent(term.to_string()));
    }
    let tf = count as f64 / doc.total_terms() as f64;
    Ok(tf * idf(config.idf_mode, corpus.df(term)))
}

/// Score every term of `doc`, sort by (score desc, stem asc), keep `top_k`.
pub fn top_terms(
    doc: &TermDocument,
    corpus: &TfidfCorpus,
    context: Gender,
    config: &TfidfConfig,
) -> RankedTermList {
    let mut entries: Vec<RankedTerm> = doc
        .terms()
        .map(|(term, count)| {
            let tf = count as f64 / doc.total_terms() as f64;
            RankedTerm {
                stem: term.to_string(),
                score: tf * idf(config.idf_mode, corpus.df(term)),
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("finite scores")
            .then_with(|| a.stem.cmp(&b.stem))
    });
    entries.truncate(config.top_k);
    RankedTermList { context, entries }
}

/// Remove entries whose stem equals the Porter stem of any lexicon surface
/// form. Order is preserved; only whole-stem matches count.
pub fn strip_keywords(list: RankedTermList, lexicon: &GenderLexicon) -> RankedTermList {
    let keyword_stems: std::collections::HashSet<String> =
        lexicon.all_forms().map(porter::stem).collect();
    RankedTermList {
        context: list.context,
        entries: list
            .entries
            .into_iter()
            .filter(|e| !keyword_stems.contains(&e.stem))
            .collect(),
    }
}

/// Remove stems present in both lists from both lists.
pub fn dedupe_lists(
    list_f: RankedTermList,
    list_m: RankedTermList,
) -> (RankedTermList, RankedTermList) {
    let f_stems: std::collections::HashSet<&str> = list_f.stems().collect();
    let m_stems: std::collections::HashSet<&str> = list_m.stems().collect();
    let shared: std::collections::HashSet<String> = f_stems
        .intersection(&m_stems)
        .map(|s| s.to_string())
        .collect();
    let keep = |list: RankedTermList| RankedTermList {
        context: list.context,
        entries: list
            .entries
            .into_iter()
            .filter(|e| !shared.contains(&e.stem))
            .collect(),
    };
    (keep(list_f), keep(list_m))
}

/// The full list pipeline in the pinned order: build, rank top-k, strip
/// gendered keywords, then dedupe across the pair. Final lists may hold
/// fewer than `top_k` entries.
pub fn gendered_term_lists(
    documents: &GenderedDocuments,
    lexicon: &GenderLexicon,
    config: &TfidfConfig,
) -> Result<(RankedTermList, RankedTermList), TfidfError> {
    let corpus = build_term_documents(documents)?;
    let list_f = top_terms(&corpus.female, &corpus, Gender::Female, config);
    let list_m = top_terms(&corpus.male, &corpus, Gender::Male, config);
    let list_f = strip_keywords(list_f, lexicon);
    let list_m = strip_keywords(list_m, lexicon);
    Ok(dedupe_lists(list_f, list_m))
}
