//! Declarative run configuration, pipeline orchestration across groups, and
//! emission of machine-readable and human-readable reports.
//!
//! Reruns with identical inputs produce byte-identical outputs: group rows
//! are ordered (overall first, then alphabetical), maps are sorted, no
//! timestamps are written, and every floating-point value is printed with
//! the same shortest-round-trip formatting in every format.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::bias_metrics::{
    count_names, count_report, firstness_report, CountReportRow, FirstnessReportRow,
    NameCountMatrix,
};
use crate::embed::{
    keyword_distance_table, DistanceMode, DistanceTable, EmbeddingSpace, EmbedError,
    DEFAULT_PROBE_KEYWORDS,
};
use crate::lexicon::{GenderLexicon, LexiconError, NameLexicon};
use crate::llm::{
    build_prompt, run_trials, ChatClient, HttpChatClient, LlmError, RecognitionScore,
    ReplayClient, TrialRecord, DEFAULT_TRIALS,
};
use crate::stats::SignificanceResult;
use crate::textprep::{
    build_documents, load_manifest, AcceptAll, PreparedCorpus, StopwordList,
    StopwordRatioFilter, TextprepError,
};
use crate::tfidf::{gendered_term_lists, IdfMode, RankedTermList, TfidfConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: {reason}")]
    BadValue { line: usize, reason: String },
    #[error("config: missing required key '{key}'")]
    MissingKey { key: &'static str },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("textprep: {0}")]
    Textprep(#[from] TextprepError),
    #[error("lexicon: {0}")]
    Lexicon(#[from] LexiconError),
    #[error("embed: {0}")]
    Embed(#[from] EmbedError),
    #[error("llm: {0}")]
    Llm(#[from] LlmError),
    #[error("emit: cannot write {path}: {source}")]
    Emit {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// How the recognition probe talks to a model.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    #[default]
    Off,
    Live,
    Replay(PathBuf),
}

impl FromStr for LlmMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("off") {
            return Ok(LlmMode::Off);
        }
        if s.eq_ignore_ascii_case("live") {
            return Ok(LlmMode::Live);
        }
        if let Some(dir) = s.strip_prefix("replay:") {
            if dir.is_empty() {
                return Err("replay mode needs a directory: replay:<dir>".into());
            }
            return Ok(LlmMode::Replay(PathBuf::from(dir)));
        }
        Err(format!("unknown llm mode {s:?} (off|live|replay:<dir>)"))
    }
}

/// Everything a run needs, with defaults matching the measurement pipeline:
/// 100-character segments, top 300 terms, smoothed IDF, no continuity
/// correction, alpha 0.01.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    pub segment_chars: usize,
    pub top_k: usize,
    pub idf_mode: IdfMode,
    pub continuity: bool,
    pub alpha: f64,
    pub stopwords: Option<PathBuf>,
    pub names: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub probe_keywords: Vec<String>,
    pub distance_mode: DistanceMode,
    pub llm: LlmMode,
    pub llm_trials: usize,
    pub lang_filter: bool,
}

impl RunConfig {
    pub fn new(manifest: PathBuf, output_dir: PathBuf) -> RunConfig {
        RunConfig {
            manifest,
            output_dir,
            segment_chars: 100,
            top_k: 300,
            idf_mode: IdfMode::Smoothed,
            continuity: false,
            alpha: 0.01,
            stopwords: None,
            names: None,
            embeddings: None,
            probe_keywords: DEFAULT_PROBE_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            distance_mode: DistanceMode::Centroid,
            llm: LlmMode::Off,
            llm_trials: DEFAULT_TRIALS,
            lang_filter: true,
        }
    }

    /// Parse the key-value config file. Unknown keys fail fast; unset keys
    /// take defaults. Relative paths resolve against the config file's
    /// directory.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
        let mut manifest: Option<PathBuf> = None;
        let mut output_dir: Option<PathBuf> = None;
        let mut config = RunConfig::new(PathBuf::new(), PathBuf::new());

        let resolve = |raw: &str| -> PathBuf {
            let p = Path::new(raw);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };

        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::BadValue {
                    line: line_no,
                    reason: format!("expected 'key = value', found {line:?}"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |reason: String| ConfigError::BadValue {
                line: line_no,
                reason,
            };
            match key {
                "manifest" => manifest = Some(resolve(value)),
                "output_dir" => output_dir = Some(resolve(value)),
                "segment_chars" => {
                    config.segment_chars = value
                        .parse()
                        .map_err(|_| bad(format!("segment_chars: {value:?} is not an integer")))?
                }
                "top_k" => {
                    config.top_k = value
                        .parse()
                        .map_err(|_| bad(format!("top_k: {value:?} is not an integer")))?
                }
                "idf_mode" => {
                    config.idf_mode = value.parse().map_err(|e| bad(format!("idf_mode: {e}")))?
                }
                "continuity" => {
                    config.continuity =
                        parse_bool(value).ok_or_else(|| bad(format!("continuity: {value:?}")))?
                }
                "alpha" => {
                    config.alpha = value
                        .parse()
                        .map_err(|_| bad(format!("alpha: {value:?} is not a number")))?
                }
                "stopwords" => config.stopwords = Some(resolve(value)),
                "names" => config.names = Some(resolve(value)),
                "embeddings" => config.embeddings = Some(resolve(value)),
                "keywords" => {
                    config.probe_keywords = value
                        .split(',')
                        .map(|k| k.trim().to_lowercase())
                        .filter(|k| !k.is_empty())
                        .collect()
                }
                "distance_mode" => {
                    config.distance_mode =
                        value.parse().map_err(|e| bad(format!("distance_mode: {e}")))?
                }
                "llm" => {
                    config.llm = {
                        let mode: LlmMode =
                            value.parse().map_err(|e| bad(format!("llm: {e}")))?;
                        match mode {
                            LlmMode::Replay(dir) => LlmMode::Replay(resolve(dir.to_str().unwrap_or(""))),
                            other => other,
                        }
                    }
                }
                "llm_trials" => {
                    config.llm_trials = value
                        .parse()
                        .map_err(|_| bad(format!("llm_trials: {value:?} is not an integer")))?
                }
                "lang_filter" => {
                    config.lang_filter =
                        parse_bool(value).ok_or_else(|| bad(format!("lang_filter: {value:?}")))?
                }
                other => {
                    return Err(ConfigError::UnknownKey {
                        line: line_no,
                        key: other.to_string(),
                    })
                }
            }
        }

        config.manifest = manifest.ok_or(ConfigError::MissingKey { key: "manifest" })?;
        config.output_dir = output_dir.ok_or(ConfigError::MissingKey { key: "output_dir" })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.segment_chars == 0 {
            return Err(ConfigError::Invalid("segment_chars must be positive".into()));
        }
        if self.top_k == 0 {
            return Err(ConfigError::Invalid("top_k must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConfigError::Invalid("alpha must lie in (0, 1)".into()));
        }
        if self.llm_trials == 0 {
            return Err(ConfigError::Invalid("llm_trials must be positive".into()));
        }
        Ok(())
    }
}

fn parse_bool(value: &str) -> Option<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Some(true),
        "off" | "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// Ranked lists for one group.
#[derive(Debug, Clone, Serialize)]
pub struct GroupTerms {
    pub group: String,
    pub female: RankedTermList,
    pub male: RankedTermList,
}

/// Name matrix for one group.
#[derive(Debug, Clone, Serialize)]
pub struct GroupNames {
    pub group: String,
    pub matrix: NameCountMatrix,
}

/// Recognition outcome for one group.
#[derive(Debug, Clone, Serialize)]
pub struct GroupRecognition {
    pub group: String,
    pub prompt: String,
    pub score: RecognitionScore,
    pub trials: Vec<TrialRecord>,
}

/// The full structured report. Ordering is deterministic everywhere:
/// overall first, then groups alphabetically.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub config: RunConfig,
    pub counts: Vec<CountReportRow>,
    pub firstness: Vec<FirstnessReportRow>,
    pub terms: Vec<GroupTerms>,
    pub names: Vec<GroupNames>,
    pub distances: Option<DistanceTable>,
    pub recognition: Option<Vec<GroupRecognition>>,
    pub warnings: Vec<String>,
}

/// Loaded resources plus the prepared corpus; the individual CLI stages
/// start from here.
pub struct PipelineContext {
    pub lexicon: &'static GenderLexicon,
    pub stopwords: StopwordList,
    pub names: NameLexicon,
    pub corpus: PreparedCorpus,
}

/// Load lexicons and stopwords per the config and assemble the corpus.
pub fn prepare_corpus(config: &RunConfig) -> Result<PipelineContext, PipelineError> {
    let lexicon = GenderLexicon::builtin();
    let stopwords = match &config.stopwords {
        Some(path) => StopwordList::from_path(path, lexicon)?,
        None => StopwordList::builtin().clone(),
    };
    let names = match &config.names {
        Some(path) => NameLexicon::from_path(path)?,
        None => NameLexicon::builtin(),
    };
    let entries = load_manifest(&config.manifest)?;
    let corpus = if config.lang_filter {
        let filter = StopwordRatioFilter::new(&stopwords, lexicon);
        build_documents(&entries, lexicon, &stopwords, &filter, config.segment_chars)?
    } else {
        build_documents(&entries, lexicon, &stopwords, &AcceptAll, config.segment_chars)?
    };
    Ok(PipelineContext {
        lexicon,
        stopwords,
        names,
        corpus,
    })
}

/// Group labels in report order: overall first, then alphabetical.
fn group_labels(corpus: &PreparedCorpus) -> Vec<String> {
    let mut labels = vec![corpus.overall.documents.group_id.clone()];
    labels.extend(corpus.groups.keys().cloned());
    labels
}

fn prepared_for<'c>(
    corpus: &'c PreparedCorpus,
    label: &str,
) -> &'c crate::textprep::PreparedGroup {
    if label == corpus.overall.documents.group_id {
        &corpus.overall
    } else {
        &corpus.groups[label]
    }
}

/// Ranked lists per group. Groups whose gendered documents are both empty
/// are skipped with a warning.
pub fn term_lists_per_group(
    context: &PipelineContext,
    tfidf_config: &TfidfConfig,
    warnings: &mut Vec<String>,
) -> Vec<GroupTerms> {
    let mut out = Vec::new();
    for label in group_labels(&context.corpus) {
        let prepared = prepared_for(&context.corpus, &label);
        match gendered_term_lists(&prepared.documents, context.lexicon, tfidf_config) {
            Ok((female, male)) => out.push(GroupTerms {
                group: label,
                female,
                male,
            }),
            Err(err) => warnings.push(format!("group '{label}': tf-idf skipped: {err}")),
        }
    }
    out
}

/// Construct the chat client for the configured mode; `group` selects the
/// per-group fixture subdirectory in replay mode.
fn make_client(mode: &LlmMode, group: &str) -> Result<Box<dyn ChatClient>, LlmError> {
    match mode {
        LlmMode::Off => unreachable!("caller checks for Off"),
        LlmMode::Live => Ok(Box::new(HttpChatClient::from_env()?)),
        LlmMode::Replay(dir) => Ok(Box::new(ReplayClient::new(dir.join(group)))),
    }
}

/// Execute the full pipeline per the config. Degradable stages (tf-idf on
/// an empty group, out-of-vocabulary terms, unparseable trials, untestable
/// groups) become warnings, not errors.
pub fn run_pipeline(config: &RunConfig) -> Result<AnalysisReport, PipelineError> {
    let context = prepare_corpus(config)?;
    let mut warnings = context.corpus.warnings.clone();

    let counts = count_report(&context.corpus, config.continuity);
    for row in &counts {
        if row.result.is_none() {
            warnings.push(format!(
                "group '{}': no gendered segments; count row untestable",
                row.group
            ));
        }
    }

    let firstness = firstness_report(
        &context.corpus,
        context.lexicon,
        &context.stopwords,
        config.continuity,
    );
    for row in &firstness {
        if row.result.is_none() {
            warnings.push(format!(
                "group '{}': no firstness events; firstness row untestable",
                row.group
            ));
        }
    }

    let tfidf_config = TfidfConfig {
        top_k: config.top_k,
        idf_mode: config.idf_mode,
    };
    let terms = term_lists_per_group(&context, &tfidf_config, &mut warnings);

    let names = terms
        .iter()
        .map(|t| GroupNames {
            group: t.group.clone(),
            matrix: count_names(&t.female, &t.male, &context.names),
        })
        .collect();

    let overall_label = context.corpus.overall.documents.group_id.clone();
    let overall_terms = terms.iter().find(|t| t.group == overall_label);

    let distances = match (&config.embeddings, overall_terms) {
        (Some(path), Some(overall)) => {
            let (space, load) = EmbeddingSpace::load(path)?;
            if load.duplicates > 0 {
                warnings.push(format!(
                    "embeddings: {} duplicate token(s), last occurrence wins",
                    load.duplicates
                ));
            }
            match keyword_distance_table(
                &overall.female,
                &overall.male,
                &config.probe_keywords,
                &space,
                config.distance_mode,
            ) {
                Ok(table) => {
                    if !table.skipped_keywords.is_empty() {
                        warnings.push(format!(
                            "embeddings: probe keyword(s) out of vocabulary: {}",
                            table.skipped_keywords.join(", ")
                        ));
                    }
                    if !table.female_oov.is_empty() || !table.male_oov.is_empty() {
                        warnings.push(format!(
                            "embeddings: {} female-list and {} male-list term(s) out of vocabulary",
                            table.female_oov.len(),
                            table.male_oov.len()
                        ));
                    }
                    Some(table)
                }
                Err(err) => {
                    warnings.push(format!("embeddings: distance table skipped: {err}"));
                    None
                }
            }
        }
        (Some(_), None) => {
            warnings.push("embeddings: no overall term lists; distance table skipped".into());
            None
        }
        (None, _) => None,
    };

    let recognition = if config.llm == LlmMode::Off {
        None
    } else {
        let mut rows = Vec::new();
        for group_terms in &terms {
            let bundle = match build_prompt(&group_terms.male, &group_terms.female, &context.names)
            {
                Ok(b) => b,
                Err(err) => {
                    warnings.push(format!(
                        "group '{}': recognition skipped: {err}",
                        group_terms.group
                    ));
                    continue;
                }
            };
            let mut client = match make_client(&config.llm, &group_terms.group) {
                Ok(c) => c,
                Err(err) => return Err(PipelineError::Llm(err)),
            };
            match run_trials(client.as_mut(), &bundle, config.llm_trials) {
                Ok((trials, score)) => {
                    for trial in &trials {
                        if trial.outcome == crate::llm::TrialOutcome::Unparseable {
                            warnings.push(format!(
                                "group '{}': trial {} unparseable, excluded from denominator",
                                group_terms.group, trial.trial_index
                            ));
                        }
                    }
                    rows.push(GroupRecognition {
                        group: group_terms.group.clone(),
                        prompt: bundle.text.clone(),
                        score,
                        trials,
                    });
                }
                Err(err) => warnings.push(format!(
                    "group '{}': recognition failed: {err}",
                    group_terms.group
                )),
            }
        }
        Some(rows)
    };

    Ok(AnalysisReport {
        config: config.clone(),
        counts,
        firstness,
        terms,
        names,
        distances,
        recognition,
        warnings,
    })
}

/// Output formats for [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(format!("unknown format {other:?} (json|csv|md)")),
        }
    }
}

/// Shortest round-trip float formatting, shared by every output format so
/// printed values never drift between them.
fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

/// 12-significant-digit scientific formatting for term scores.
fn fmt_score(value: f64) -> String {
    format!("{value:.11e}")
}

fn p_cells(result: &Option<SignificanceResult>) -> (String, String) {
    match result {
        Some(r) => (fmt_f64(r.p_exact), fmt_f64(r.p_normal)),
        None => (String::new(), String::new()),
    }
}

/// Write the report into `dir` in the requested formats and return the
/// created paths. Identical reports yield byte-identical files.
pub fn emit(
    report: &AnalysisReport,
    dir: &Path,
    formats: &[Format],
) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Emit {
        path: dir.to_path_buf(),
        source,
    })?;
    let write = |name: &str, contents: &str| -> Result<PathBuf, PipelineError> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| PipelineError::Emit {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    };

    let mut written = Vec::new();

    if formats.contains(&Format::Json) {
        let mut json = serde_json::to_string_pretty(report).expect("report serializes");
        json.push('\n');
        written.push(write("report.json", &json)?);
    }

    if formats.contains(&Format::Csv) {
        written.push(write("counts.csv", &counts_csv(&report.counts))?);
        written.push(write("firstness.csv", &firstness_csv(&report.firstness))?);
        written.push(write("names.csv", &names_csv(&report.names))?);
        let overall = report.terms.first();
        if let Some(overall) = overall {
            written.push(write("terms_female.csv", &terms_csv(&overall.female))?);
            written.push(write("terms_male.csv", &terms_csv(&overall.male))?);
        }
        if let Some(distances) = &report.distances {
            written.push(write("distances.csv", &distances_csv(distances))?);
        }
    }

    if formats.contains(&Format::Markdown) {
        written.push(write("report.md", &markdown(report))?);
    }

    if let Some(recognition) = &report.recognition {
        for row in recognition {
            let base = dir.join("llm_transcripts").join(&row.group);
            fs::create_dir_all(&base).map_err(|source| PipelineError::Emit {
                path: base.clone(),
                source,
            })?;
            let prompt_path = base.join("prompt.txt");
            fs::write(&prompt_path, &row.prompt).map_err(|source| PipelineError::Emit {
                path: prompt_path.clone(),
                source,
            })?;
            written.push(prompt_path);
            for trial in &row.trials {
                if let Some(raw) = &trial.raw_response {
                    let path = base.join(format!("trial_{}.txt", trial.trial_index));
                    fs::write(&path, raw).map_err(|source| PipelineError::Emit {
                        path: path.clone(),
                        source,
                    })?;
                    written.push(path);
                }
            }
        }
    }

    Ok(written)
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn counts_csv(rows: &[CountReportRow]) -> String {
    let mut out = String::from("group,female_count,male_count,p_exact,p_normal\n");
    for row in rows {
        let (pe, pn) = p_cells(&row.result);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_escape(&row.group),
            row.female_count,
            row.male_count,
            pe,
            pn
        );
    }
    out
}

fn firstness_csv(rows: &[FirstnessReportRow]) -> String {
    let mut out = String::from("group,female_first,male_first,p_exact,p_normal\n");
    for row in rows {
        let (pe, pn) = p_cells(&row.result);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_escape(&row.group),
            row.female_first,
            row.male_first,
            pe,
            pn
        );
    }
    out
}

fn names_csv(rows: &[GroupNames]) -> String {
    let mut out = String::from("group,ff,fm,mm,mf\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_escape(&row.group),
            row.matrix.ff,
            row.matrix.fm,
            row.matrix.mm,
            row.matrix.mf
        );
    }
    out
}

fn terms_csv(list: &RankedTermList) -> String {
    let mut out = String::from("rank,stem,score\n");
    for (rank, entry) in list.entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            rank + 1,
            csv_escape(&entry.stem),
            fmt_score(entry.score)
        );
    }
    out
}

fn distances_csv(table: &DistanceTable) -> String {
    let mut out = String::from(
        "keyword,d_female,d_male,difference,closer_to,d_female_2dp,d_male_2dp,difference_2dp\n",
    );
    for row in &table.rows {
        let closer = match row.closer_to {
            crate::embed::CloserTo::Female => "female",
            crate::embed::CloserTo::Male => "male",
            crate::embed::CloserTo::Tie => "tie",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.2},{:.2},{:.2}",
            csv_escape(&row.keyword),
            fmt_f64(row.d_female),
            fmt_f64(row.d_male),
            fmt_f64(row.difference),
            closer,
            row.d_female,
            row.d_male,
            row.difference
        );
    }
    for keyword in &table.skipped_keywords {
        let _ = writeln!(out, "{},,,,oov,,,", csv_escape(keyword));
    }
    out
}

fn markdown(report: &AnalysisReport) -> String {
    let alpha = report.config.alpha;
    let mut md = String::new();
    let _ = writeln!(md, "# Corpus gender-bias report\n");
    let _ = writeln!(
        md,
        "Segments of {} characters, top {} terms, {} idf, alpha = {}. \
         p_exact is the two-tailed exact binomial test (double the larger tail); \
         p_normal is the two-tailed normal z-test{}.\n",
        report.config.segment_chars,
        report.config.top_k,
        report.config.idf_mode,
        fmt_f64(alpha),
        if report.config.continuity {
            " with continuity correction"
        } else {
            ""
        }
    );

    let _ = writeln!(md, "## Counts\n");
    let _ = writeln!(md, "| group | female | male | z | p_exact | p_normal | sig |");
    let _ = writeln!(md, "|---|---|---|---|---|---|---|");
    for row in &report.counts {
        match &row.result {
            Some(r) => {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} | {}{} | {} | {} |",
                    row.group,
                    row.female_count,
                    row.male_count,
                    fmt_f64(r.z),
                    fmt_f64(r.p_exact),
                    if r.exact_fallback { " (normal fallback)" } else { "" },
                    fmt_f64(r.p_normal),
                    if r.p_exact < alpha { "yes" } else { "no" }
                );
            }
            None => {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | — | — | — | untestable |",
                    row.group, row.female_count, row.male_count
                );
            }
        }
    }

    let _ = writeln!(md, "\n## Firstness\n");
    let _ = writeln!(md, "| group | female first | male first | p_exact | p_normal | sig |");
    let _ = writeln!(md, "|---|---|---|---|---|---|");
    for row in &report.firstness {
        match &row.result {
            Some(r) => {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} | {} | {} |",
                    row.group,
                    row.female_first,
                    row.male_first,
                    fmt_f64(r.p_exact),
                    fmt_f64(r.p_normal),
                    if r.p_exact < alpha { "yes" } else { "no" }
                );
            }
            None => {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | — | — | untestable |",
                    row.group, row.female_first, row.male_first
                );
            }
        }
    }

    let _ = writeln!(md, "\n## Top terms (first 20 per context)\n");
    for terms in &report.terms {
        let _ = writeln!(md, "### {}\n", terms.group);
        let preview = |list: &RankedTermList| -> String {
            list.entries
                .iter()
                .take(20)
                .map(|e| e.stem.clone())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(md, "- female ({} terms): {}", terms.female.len(), preview(&terms.female));
        let _ = writeln!(md, "- male ({} terms): {}\n", terms.male.len(), preview(&terms.male));
    }

    let _ = writeln!(md, "## Names in term lists\n");
    let _ = writeln!(md, "| group | FF | FM | MM | MF |");
    let _ = writeln!(md, "|---|---|---|---|---|");
    for row in &report.names {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} |",
            row.group, row.matrix.ff, row.matrix.fm, row.matrix.mm, row.matrix.mf
        );
    }

    if let Some(distances) = &report.distances {
        let _ = writeln!(md, "\n## Keyword distances to gendered clusters\n");
        let _ = writeln!(md, "| keyword | d_female | d_male | difference | closer to |");
        let _ = writeln!(md, "|---|---|---|---|---|");
        for row in &distances.rows {
            let closer = match row.closer_to {
                crate::embed::CloserTo::Female => "female",
                crate::embed::CloserTo::Male => "male",
                crate::embed::CloserTo::Tie => "tie",
            };
            let _ = writeln!(
                md,
                "| {} | {:.2} | {:.2} | {:.2} | {} |",
                row.keyword, row.d_female, row.d_male, row.difference, closer
            );
        }
        for keyword in &distances.skipped_keywords {
            let _ = writeln!(md, "| {keyword} | — | — | — | out of vocabulary |");
        }
    }

    if let Some(recognition) = &report.recognition {
        let _ = writeln!(md, "\n## LLM recognition\n");
        let _ = writeln!(md, "| group | trials | correct | accuracy |");
        let _ = writeln!(md, "|---|---|---|---|");
        for row in recognition {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {}% |",
                row.group, row.score.trials, row.score.correct, row.score.percent
            );
        }
    }

    if !report.warnings.is_empty() {
        let _ = writeln!(md, "\n## Warnings\n");
        for warning in &report.warnings {
            let _ = writeln!(md, "- {warning}");
        }
    }

    md
}
