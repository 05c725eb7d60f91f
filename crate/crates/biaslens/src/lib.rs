//! Corpus gender-bias measurement over plain-text corpora.
//!
//! The pipeline mirrors a fixed sequence of indicators computed per corpus
//! group and overall:
//!
//! 1. **Counts** — text is normalized, stopword-filtered, packed into
//!    100-character segments, and each segment containing a gendered keyword
//!    is filed into a female-context and/or male-context document
//!    ([`textprep`]). Segment counts per gender are tested against a fair
//!    coin ([`stats`]).
//! 2. **Firstness** — when opposite-gender keywords of the same lexicon level
//!    appear adjacently (or with exactly one stopword between), the earlier
//!    gender scores a firstness event ([`bias_metrics`]).
//! 3. **TF-IDF keywords** — Porter-stemmed two-document TF-IDF produces a
//!    ranked keyword list per gender context ([`tfidf`], [`porter`]).
//! 4. **Name tallies** — gendered given names found in the ranked lists are
//!    cross-tabulated by context gender and name gender ([`bias_metrics`]).
//! 5. **Embedding distances** — cosine distances from probe keywords to the
//!    centroid of each gendered list in a GloVe-format vector space
//!    ([`embed`]).
//! 6. **LLM recognition** — a chat model is asked to attribute the two lists
//!    to their gender contexts; accuracy is scored over repeated independent
//!    trials ([`llm`]).
//!
//! [`report`] ties the stages together behind a declarative config and emits
//! JSON/CSV/markdown reports. All stages are deterministic: identical inputs
//! produce byte-identical outputs.

pub mod bias_metrics;
pub mod embed;
pub mod lexicon;
pub mod llm;
pub mod porter;
pub mod report;
pub mod stats;
pub mod textprep;
pub mod tfidf;

pub use lexicon::{Gender, GenderLexicon, NameLexicon};
pub use report::{AnalysisReport, RunConfig};
pub use stats::{CountPair, SignificanceResult};
pub use textprep::{GenderedDocuments, PreparedCorpus, Segment, StopwordList, TokenStream};
pub use tfidf::{IdfMode, RankedTermList, TfidfConfig};
