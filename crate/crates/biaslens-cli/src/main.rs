//! `biaslens` — corpus gender-bias analysis from the command line.
//!
//! `analyze` runs the whole pipeline per the config file and writes the
//! report; the other subcommands run individual stages and print their
//! results, for debugging a corpus or a config.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use biaslens::bias_metrics::{count_names, count_report, detect_firstness, firstness_report};
use biaslens::embed::{keyword_distance_table, CloserTo, EmbeddingSpace};
use biaslens::llm::{build_prompt, run_trials, TrialOutcome};
use biaslens::report::{
    emit, prepare_corpus, run_pipeline, Format, LlmMode, PipelineContext, RunConfig,
};
use biaslens::tfidf::{gendered_term_lists, TfidfConfig};

#[derive(Parser)]
#[command(name = "biaslens", version, about = "Corpus gender-bias analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (key = value lines)
    #[arg(long)]
    config: PathBuf,

    /// Accept every paragraph instead of applying the language filter
    #[arg(long)]
    no_lang_filter: bool,

    /// Override the IDF flavor (literal|smoothed)
    #[arg(long)]
    idf_mode: Option<String>,

    /// Apply the continuity correction to the normal test
    #[arg(long)]
    continuity: bool,

    /// Override the LLM mode (off|live|replay:DIR)
    #[arg(long)]
    llm: Option<String>,
}

impl CommonArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut config = RunConfig::load(&self.config).context("stage: config")?;
        if self.no_lang_filter {
            config.lang_filter = false;
        }
        if let Some(mode) = &self.idf_mode {
            config.idf_mode = mode.parse().map_err(anyhow::Error::msg).context("stage: config")?;
        }
        if self.continuity {
            config.continuity = true;
        }
        if let Some(mode) = &self.llm {
            config.llm = mode.parse().map_err(anyhow::Error::msg).context("stage: config")?;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write reports to the output directory
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated output formats (json,csv,md)
        #[arg(long, default_value = "json,csv,md")]
        format: String,
    },
    /// Show segmentation per document
    Segment {
        #[command(flatten)]
        common: CommonArgs,
        /// Print every segment of this document instead of totals
        #[arg(long)]
        doc: Option<String>,
    },
    /// Gendered segment counts with significance
    Counts {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Firstness tallies with significance
    Firstness {
        #[command(flatten)]
        common: CommonArgs,
        /// Also list each detected event
        #[arg(long)]
        events: bool,
    },
    /// Ranked TF-IDF keyword lists
    Tfidf {
        #[command(flatten)]
        common: CommonArgs,
        /// Group label (defaults to overall)
        #[arg(long)]
        group: Option<String>,
        /// Show this many terms per context
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
    /// Gendered-name tallies over the keyword lists
    Names {
        #[command(flatten)]
        common: CommonArgs,
        /// Group label (defaults to all groups)
        #[arg(long)]
        group: Option<String>,
    },
    /// Keyword distances to the gendered clusters
    EmbedDist {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the LLM recognition probe for one group
    LlmTest {
        #[command(flatten)]
        common: CommonArgs,
        /// Group label (defaults to overall)
        #[arg(long)]
        group: Option<String>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Analyze { common, format } => analyze(&common, &format),
        Command::Segment { common, doc } => segment_cmd(&common, doc.as_deref()),
        Command::Counts { common } => counts_cmd(&common),
        Command::Firstness { common, events } => firstness_cmd(&common, events),
        Command::Tfidf { common, group, top } => tfidf_cmd(&common, group.as_deref(), top),
        Command::Names { common, group } => names_cmd(&common, group.as_deref()),
        Command::EmbedDist { common } => embed_cmd(&common),
        Command::LlmTest { common, group } => llm_cmd(&common, group.as_deref()),
    }
}

fn analyze(common: &CommonArgs, format: &str) -> Result<()> {
    let config = common.load()?;
    let formats: Vec<Format> = format
        .split(',')
        .filter(|f| !f.trim().is_empty())
        .map(|f| f.parse().map_err(anyhow::Error::msg))
        .collect::<Result<_>>()
        .context("stage: config")?;
    if formats.is_empty() {
        bail!("stage: config: no output formats selected");
    }
    let report = run_pipeline(&config).context("stage: pipeline")?;
    let files = emit(&report, &config.output_dir, &formats).context("stage: emit")?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    for file in files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn context_for(common: &CommonArgs) -> Result<(RunConfig, PipelineContext)> {
    let config = common.load()?;
    let context = prepare_corpus(&config).context("stage: textprep")?;
    Ok((config, context))
}

fn segment_cmd(common: &CommonArgs, doc: Option<&str>) -> Result<()> {
    let (_, context) = context_for(common)?;
    let docs = &context.corpus.overall.documents;
    match doc {
        Some(doc_id) => {
            let segments: Vec<_> = docs
                .female_segments
                .iter()
                .chain(docs.male_segments.iter())
                .filter(|s| s.doc_id == doc_id)
                .collect();
            if segments.is_empty() {
                bail!("stage: segment: no gendered segments for doc '{doc_id}'");
            }
            for seg in segments {
                let genders: Vec<&str> = seg.genders.iter().map(|g| g.label()).collect();
                println!(
                    "[{}] ({} chars) {}",
                    genders.join("+"),
                    seg.joined_len,
                    seg.tokens.join(" ")
                );
            }
        }
        None => {
            println!("{:<20} {:>8} {:>8}", "doc_id", "female", "male");
            let mut doc_ids: Vec<&str> = context
                .corpus
                .overall
                .streams
                .iter()
                .map(|s| s.doc_id.as_str())
                .collect();
            doc_ids.dedup();
            for doc_id in doc_ids {
                let female = docs.female_segments.iter().filter(|s| s.doc_id == doc_id).count();
                let male = docs.male_segments.iter().filter(|s| s.doc_id == doc_id).count();
                println!("{doc_id:<20} {female:>8} {male:>8}");
            }
        }
    }
    Ok(())
}

fn print_significance_table(
    header: (&str, &str),
    rows: impl Iterator<Item = (String, u64, u64, Option<biaslens::SignificanceResult>)>,
) {
    println!(
        "{:<16} {:>10} {:>10} {:>14} {:>14}",
        "group", header.0, header.1, "p_exact", "p_normal"
    );
    for (group, female, male, result) in rows {
        match result {
            Some(r) => println!(
                "{group:<16} {female:>10} {male:>10} {:>14.6e} {:>14.6e}",
                r.p_exact, r.p_normal
            ),
            None => println!("{group:<16} {female:>10} {male:>10} {:>14} {:>14}", "-", "-"),
        }
    }
}

fn counts_cmd(common: &CommonArgs) -> Result<()> {
    let (config, context) = context_for(common)?;
    let rows = count_report(&context.corpus, config.continuity);
    print_significance_table(
        ("female", "male"),
        rows.into_iter()
            .map(|r| (r.group, r.female_count, r.male_count, r.result)),
    );
    Ok(())
}

fn firstness_cmd(common: &CommonArgs, events: bool) -> Result<()> {
    let (config, context) = context_for(common)?;
    let rows = firstness_report(
        &context.corpus,
        context.lexicon,
        &context.stopwords,
        config.continuity,
    );
    print_significance_table(
        ("f-first", "m-first"),
        rows.into_iter()
            .map(|r| (r.group, r.female_first, r.male_first, r.result)),
    );
    if events {
        println!();
        for stream in &context.corpus.overall.streams {
            for event in detect_firstness(stream, context.lexicon, &context.stopwords) {
                println!(
                    "{}\t@{}\tlevel {}\t{} first\t{:?}",
                    event.doc_id,
                    event.token_index,
                    event.level_id,
                    event.first_gender,
                    event.gap
                );
            }
        }
    }
    Ok(())
}

fn lists_for_group(
    config: &RunConfig,
    context: &PipelineContext,
    group: Option<&str>,
) -> Result<(biaslens::RankedTermList, biaslens::RankedTermList)> {
    let group = group.unwrap_or(biaslens::textprep::OVERALL_GROUP);
    let prepared = if group == biaslens::textprep::OVERALL_GROUP {
        &context.corpus.overall
    } else {
        context
            .corpus
            .groups
            .get(group)
            .with_context(|| format!("stage: tfidf: unknown group '{group}'"))?
    };
    let tfidf_config = TfidfConfig {
        top_k: config.top_k,
        idf_mode: config.idf_mode,
    };
    gendered_term_lists(&prepared.documents, context.lexicon, &tfidf_config)
        .context("stage: tfidf")
}

fn tfidf_cmd(common: &CommonArgs, group: Option<&str>, top: usize) -> Result<()> {
    let (config, context) = context_for(common)?;
    let (female, male) = lists_for_group(&config, &context, group)?;
    for list in [&male, &female] {
        println!("{} context ({} terms):", list.context, list.len());
        for (rank, entry) in list.entries.iter().take(top).enumerate() {
            println!("  {:>3}. {:<24} {:.6e}", rank + 1, entry.stem, entry.score);
        }
        println!();
    }
    Ok(())
}

fn names_cmd(common: &CommonArgs, group: Option<&str>) -> Result<()> {
    let (config, context) = context_for(common)?;
    let groups: Vec<String> = match group {
        Some(g) => vec![g.to_string()],
        None => {
            let mut all = vec![biaslens::textprep::OVERALL_GROUP.to_string()];
            all.extend(context.corpus.groups.keys().cloned());
            all
        }
    };
    println!("{:<16} {:>4} {:>4} {:>4} {:>4}", "group", "FF", "FM", "MM", "MF");
    for label in groups {
        let (female, male) = lists_for_group(&config, &context, Some(&label))?;
        let matrix = count_names(&female, &male, &context.names);
        println!(
            "{label:<16} {:>4} {:>4} {:>4} {:>4}",
            matrix.ff, matrix.fm, matrix.mm, matrix.mf
        );
        for m in &matrix.matched_names {
            println!("    {} list: {} ({})", m.context, m.term, m.name_gender);
        }
    }
    Ok(())
}

fn embed_cmd(common: &CommonArgs) -> Result<()> {
    let (config, context) = context_for(common)?;
    let Some(path) = &config.embeddings else {
        bail!("stage: embed: config has no 'embeddings' path");
    };
    let (space, load) = EmbeddingSpace::load(path).context("stage: embed")?;
    if load.duplicates > 0 {
        eprintln!("warning: {} duplicate embedding token(s)", load.duplicates);
    }
    let (female, male) = lists_for_group(&config, &context, None)?;
    let table = keyword_distance_table(
        &female,
        &male,
        &config.probe_keywords,
        &space,
        config.distance_mode,
    )
    .context("stage: embed")?;
    println!(
        "{:<12} {:>10} {:>10} {:>12} {:>10}",
        "keyword", "d_female", "d_male", "difference", "closer_to"
    );
    for row in &table.rows {
        let closer = match row.closer_to {
            CloserTo::Female => "female",
            CloserTo::Male => "male",
            CloserTo::Tie => "tie",
        };
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>12.4} {:>10}",
            row.keyword, row.d_female, row.d_male, row.difference, closer
        );
    }
    for keyword in &table.skipped_keywords {
        println!("{keyword:<12} {:>10} {:>10} {:>12} {:>10}", "-", "-", "-", "oov");
    }
    Ok(())
}

fn llm_cmd(common: &CommonArgs, group: Option<&str>) -> Result<()> {
    let (config, context) = context_for(common)?;
    let group = group.unwrap_or(biaslens::textprep::OVERALL_GROUP);
    let (female, male) = lists_for_group(&config, &context, Some(group))?;
    let bundle = build_prompt(&male, &female, &context.names).context("stage: llm")?;
    let mut client: Box<dyn biaslens::llm::ChatClient> = match &config.llm {
        LlmMode::Off => bail!("stage: llm: config has llm = off (use --llm live|replay:<dir>)"),
        LlmMode::Live => Box::new(
            biaslens::llm::HttpChatClient::from_env().context("stage: llm")?,
        ),
        LlmMode::Replay(dir) => Box::new(biaslens::llm::ReplayClient::new(dir.join(group))),
    };
    let (trials, score) =
        run_trials(client.as_mut(), &bundle, config.llm_trials).context("stage: llm")?;
    println!("group: {group}");
    for trial in &trials {
        let outcome = match trial.outcome {
            TrialOutcome::Correct => "correct",
            TrialOutcome::Incorrect => "incorrect",
            TrialOutcome::Unparseable => "unparseable",
            TrialOutcome::TransportFailed => "transport-failed",
        };
        println!("  trial {}: {outcome}", trial.trial_index);
    }
    println!(
        "score: {}/{} parseable correct = {}%",
        score.correct, score.trials, score.percent
    );
    Ok(())
}
