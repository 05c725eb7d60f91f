//! The count indicator, firstness indicator, and TF-IDF-list name tallies,
//! each with attached significance results.
//!
//! Firstness runs on stage-A streams (stopwords still present): the
//! adjacency rule admits exactly one stopword between the two keywords,
//! which is only observable before stopword removal. The scan covers whole
//! documents rather than 100-character windows, so keyword pairs straddling
//! a would-be segment boundary still count.

use serde::Serialize;

use crate::lexicon::{Gender, GenderLexicon, NameLexicon};
use crate::porter;
use crate::stats::{significance, CountPair, SignificanceResult};
use crate::textprep::{PreparedCorpus, StopwordList, TokenStream};
use crate::tfidf::RankedTermList;

/// Segment counts for one group, with significance when testable.
#[derive(Debug, Clone, Serialize)]
pub struct CountReportRow {
    pub group: String,
    pub female_count: u64,
    pub male_count: u64,
    /// None when both counts are zero (untestable).
    pub result: Option<SignificanceResult>,
}

/// One detected firstness event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FirstnessEvent {
    pub doc_id: String,
    /// Position of the first keyword in the stage-A stream.
    pub token_index: usize,
    pub level_id: usize,
    pub first_gender: Gender,
    pub gap: Gap,
}

/// Distance between the two keywords of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gap {
    Adjacent,
    OneStopword,
}

/// Firstness tallies for one group.
#[derive(Debug, Clone, Serialize)]
pub struct FirstnessReportRow {
    pub group: String,
    pub female_first: u64,
    pub male_first: u64,
    pub result: Option<SignificanceResult>,
}

/// Name tallies over the two ranked lists. First letter is the context
/// gender, second the name gender: `fm` counts male names found in the
/// female-context list.
#[derive(Debug, Clone, Default, Serialize)]
pub struct NameCountMatrix {
    pub ff: u64,
    pub fm: u64,
    pub mm: u64,
    pub mf: u64,
    /// Provenance of every counted term, for manual audit.
    pub matched_names: Vec<NameMatch>,
    /// Name stems that map to both genders after stemming; excluded from
    /// the counts.
    pub ambiguous_stems: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NameMatch {
    pub term: String,
    pub context: Gender,
    pub name_gender: Gender,
}

/// One row per group plus the overall aggregate, in report order
/// (overall first, then groups alphabetically).
pub fn count_report(corpus: &PreparedCorpus, continuity: bool) -> Vec<CountReportRow> {
    let mut rows = Vec::with_capacity(corpus.groups.len() + 1);
    rows.push(count_row(
        &corpus.overall.documents.group_id,
        corpus.overall.documents.female_segments.len() as u64,
        corpus.overall.documents.male_segments.len() as u64,
        continuity,
    ));
    for (group, prepared) in &corpus.groups {
        rows.push(count_row(
            group,
            prepared.documents.female_segments.len() as u64,
            prepared.documents.male_segments.len() as u64,
            continuity,
        ));
    }
    rows
}

fn count_row(group: &str, female: u64, male: u64, continuity: bool) -> CountReportRow {
    CountReportRow {
        group: group.to_string(),
        female_count: female,
        male_count: male,
        result: significance(CountPair::new(female, male), continuity).ok(),
    }
}

/// Left-to-right scan for firstness events on a stage-A stream.
///
/// At token i matching (g, l), an event fires when token i+1 matches the
/// opposite gender at the same level, or token i+1 is a stopword and token
/// i+2 matches the opposite gender at the same level. After an event the
/// scan resumes after the second keyword, so overlapping triples count
/// once: `father mother son` is one male-first event.
pub fn detect_firstness(
    stream: &TokenStream,
    lexicon: &GenderLexicon,
    stopwords: &StopwordList,
) -> Vec<FirstnessEvent> {
    let tokens = &stream.tokens;
    let mut events = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let Some((gender, level)) = lexicon.match_token(&tokens[i]) else {
            i += 1;
            continue;
        };
        let adjacent = tokens
            .get(i + 1)
            .and_then(|t| lexicon.match_token(t))
            .filter(|&(g2, l2)| g2 == gender.opposite() && l2 == level);
        if adjacent.is_some() {
            events.push(FirstnessEvent {
                doc_id: stream.doc_id.clone(),
                token_index: i,
                level_id: level,
                first_gender: gender,
                gap: Gap::Adjacent,
            });
            i += 2;
            continue;
        }
        let gapped = tokens.get(i + 1).is_some_and(|t| stopwords.contains(t))
            && tokens
                .get(i + 2)
                .and_then(|t| lexicon.match_token(t))
                .is_some_and(|(g2, l2)| g2 == gender.opposite() && l2 == level);
        if gapped {
            events.push(FirstnessEvent {
                doc_id: stream.doc_id.clone(),
                token_index: i,
                level_id: level,
                first_gender: gender,
                gap: Gap::OneStopword,
            });
            i += 3;
            continue;
        }
        i += 1;
    }
    events
}

/// Firstness tallies per group plus overall, with exact binomial
/// significance attached where testable.
pub fn firstness_report(
    corpus: &PreparedCorpus,
    lexicon: &GenderLexicon,
    stopwords: &StopwordList,
    continuity: bool,
) -> Vec<FirstnessReportRow> {
    let tally = |streams: &[TokenStream], group: &str| {
        let mut female = 0u64;
        let mut male = 0u64;
        for stream in streams {
            for event in detect_firstness(stream, lexicon, stopwords) {
                match event.first_gender {
                    Gender::Female => female += 1,
                    Gender::Male => male += 1,
                }
            }
        }
        FirstnessReportRow {
            group: group.to_string(),
            female_first: female,
            male_first: male,
            result: significance(CountPair::new(female, male), continuity).ok(),
        }
    };
    let mut rows = Vec::with_capacity(corpus.groups.len() + 1);
    rows.push(tally(
        &corpus.overall.streams,
        &corpus.overall.documents.group_id,
    ));
    for (group, prepared) in &corpus.groups {
        rows.push(tally(&prepared.streams, group));
    }
    rows
}

/// Cross-tabulate gendered names found in the two ranked lists.
///
/// List terms are stems, so every lexicon name is stemmed with the same
/// stemmer before matching. A stem claimed by names of both genders is
/// ambiguous: it is excluded from the counts and surfaced for audit.
pub fn count_names(
    list_f: &RankedTermList,
    list_m: &RankedTermList,
    names: &NameLexicon,
) -> NameCountMatrix {
    use std::collections::BTreeMap;

    let mut stem_gender: BTreeMap<String, Option<Gender>> = BTreeMap::new();
    for (name, gender) in names.iter() {
        let stem = porter::stem(name);
        stem_gender
            .entry(stem)
            .and_modify(|slot| {
                if *slot != Some(gender) {
                    *slot = None; // conflict across genders
                }
            })
            .or_insert(Some(gender));
    }

    let mut matrix = NameCountMatrix {
        ambiguous_stems: stem_gender
            .iter()
            .filter(|(_, g)| g.is_none())
            .map(|(s, _)| s.clone())
            .collect(),
        ..NameCountMatrix::default()
    };

    let mut tally = |list: &RankedTermList, context: Gender| {
        for stem in list.stems() {
            let Some(Some(name_gender)) = stem_gender.get(stem).copied() else {
                continue;
            };
            match (context, name_gender) {
                (Gender::Female, Gender::Female) => matrix.ff += 1,
                (Gender::Female, Gender::Male) => matrix.fm += 1,
                (Gender::Male, Gender::Male) => matrix.mm += 1,
                (Gender::Male, Gender::Female) => matrix.mf += 1,
            }
            matrix.matched_names.push(NameMatch {
                term: stem.to_string(),
                context,
                name_gender,
            });
        }
    };
    tally(list_f, Gender::Female);
    tally(list_m, Gender::Male);
    matrix
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{normalize, Stage};
    use proptest::prelude::*;

    fn lex() -> &'static GenderLexicon {
        GenderLexicon::builtin()
    }

    fn stops() -> &'static StopwordList {
        StopwordList::builtin()
    }

    fn scan(text: &str) -> Vec<FirstnessEvent> {
        detect_firstness(&normalize(text, "d"), lex(), stops())
    }

    #[test]
    fn ladies_and_gentleman_is_female_first() {
        let events = scan("ladies and gentleman");
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].first_gender, Gender::Female);
        assert_eq!(events[0].gap, Gap::OneStopword);
    }

    #[test]
    fn boys_and_girls_is_male_first() {
        let events = scan("boys and girls");
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].first_gender, Gender::Male);
    }

    #[test]
    fn cross_level_pairs_do_not_fire() {
        assert!(scan("mother and son").is_empty());
    }

    #[test]
    fn same_gender_pairs_do_not_fire() {
        assert!(scan("king and prince").is_empty());
    }

    #[test]
    fn distance_beyond_one_does_not_fire() {
        assert!(scan("boys doing this girls").is_empty());
        assert!(scan("boys big strong girls").is_empty());
    }

    #[test]
    fn one_non_stopword_between_does_not_fire() {
        assert!(scan("boy meets girl").is_empty());
    }

    #[test]
    fn adjacent_pair_fires() {
        let events = scan("father mother");
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].gap, Gap::Adjacent);
        assert_eq!(events[0].first_gender, Gender::Male);
    }

    #[test]
    fn scan_resumes_after_second_keyword() {
        // one event, not two overlapping ones
        let events = scan("father mother son");
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].first_gender, Gender::Male);
        // the second keyword is consumed; the third can start a new pair
        let events = scan("father mother father mother");
        assert_eq!(events.len(), 2);
    }

    #[test]
    fn event_records_position_and_level() {
        let events = scan("yesterday the king and queen arrived");
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].token_index, 2);
        assert_eq!(events[0].level_id, lex().match_token("king").unwrap().1);
    }

    #[test]
    fn count_rows_follow_segment_lists() {
        use crate::textprep::{AcceptAll, build_documents, CorpusManifestEntry};
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("balanced.txt");
        std::fs::write(&path, "mother here. father there.").unwrap();
        let entries = vec![CorpusManifestEntry {
            doc_id: "b".into(),
            country: "x".into(),
            group: "g".into(),
            path,
        }];
        let corpus = build_documents(&entries, lex(), stops(), &AcceptAll, 6).unwrap();
        let rows = count_report(&corpus, false);
        assert_eq!(rows.len(), 2); // overall + g
        for row in &rows {
            assert_eq!(row.female_count, 1);
            assert_eq!(row.male_count, 1);
            let result = row.result.as_ref().expect("testable");
            assert_eq!(result.p_exact, 1.0, "balanced counts");
            assert_eq!(result.p_normal, 1.0);
        }
    }

    #[test]
    fn degenerate_rows_are_untestable() {
        let row = count_row("empty", 0, 0, false);
        assert!(row.result.is_none());
        let ok = count_row("ok", 5, 5, false);
        assert!(ok.result.is_some());
    }

    #[test]
    fn count_names_spec_examples() {
        let names = NameLexicon::parse("anna,f\njohn,m\nbob,m\n").unwrap();
        let mk = |ctx, stems: &[&str]| RankedTermList {
            context: ctx,
            entries: stems
                .iter()
                .map(|s| crate::tfidf::RankedTerm {
                    stem: porter::stem(s),
                    score: 1.0,
                })
                .collect(),
        };
        let m = count_names(
            &mk(Gender::Female, &["anna", "john", "tree"]),
            &mk(Gender::Male, &["bob"]),
            &names,
        );
        assert_eq!((m.ff, m.fm, m.mm, m.mf), (1, 1, 1, 0));
        assert_eq!(m.matched_names.len(), 3);

        let empty = count_names(
            &mk(Gender::Female, &[]),
            &mk(Gender::Male, &[]),
            &names,
        );
        assert_eq!((empty.ff, empty.fm, empty.mm, empty.mf), (0, 0, 0, 0));

        let maria = NameLexicon::parse("maria,f\n").unwrap();
        let cross = count_names(
            &mk(Gender::Female, &[]),
            &mk(Gender::Male, &["maria"]),
            &maria,
        );
        assert_eq!(cross.mf, 1);
    }

    #[test]
    fn count_names_ambiguous_stem_excluded() {
        // both stem to "sasha"
        let names = NameLexicon::parse("sasha,f\nsashas,m\n").unwrap();
        let list = RankedTermList {
            context: Gender::Female,
            entries: vec![crate::tfidf::RankedTerm {
                stem: "sasha".into(),
                score: 1.0,
            }],
        };
        let empty = RankedTermList {
            context: Gender::Male,
            entries: vec![],
        };
        let m = count_names(&list, &empty, &names);
        assert_eq!((m.ff, m.fm), (0, 0));
        assert_eq!(m.ambiguous_stems, vec!["sasha".to_string()]);
    }

    // Brute-force reference scanner: collect every candidate window, then
    // greedily keep non-overlapping ones left to right.
    pub(crate) fn brute_force_events(
        tokens: &[String],
        lexicon: &GenderLexicon,
        stopwords: &StopwordList,
    ) -> Vec<(usize, Gender)> {
        let mut candidates = Vec::new();
        for i in 0..tokens.len() {
            let Some((g, l)) = lexicon.match_token(&tokens[i]) else {
                continue;
            };
            let matches_pair = |j: usize| {
                tokens
                    .get(j)
                    .and_then(|t| lexicon.match_token(t))
                    .is_some_and(|(g2, l2)| g2 == g.opposite() && l2 == l)
            };
            if matches_pair(i + 1) {
                candidates.push((i, i + 1, g));
            } else if tokens.get(i + 1).is_some_and(|t| stopwords.contains(t))
                && matches_pair(i + 2)
            {
                candidates.push((i, i + 2, g));
            }
        }
        let mut taken = Vec::new();
        let mut next_free = 0usize;
        for (start, end, g) in candidates {
            if start >= next_free {
                taken.push((start, g));
                next_free = end + 1;
            }
        }
        taken
    }

    proptest! {
        /// The scanner agrees with the brute-force reference on random
        /// keyword/stopword/filler sequences, and never fires on
        /// same-gender or cross-level pairs.
        #[test]
        fn firstness_matches_brute_force(
            words in proptest::collection::vec(
                prop_oneof![
                    Just("father".to_string()),
                    Just("mother".to_string()),
                    Just("boy".to_string()),
                    Just("girls".to_string()),
                    Just("she".to_string()),
                    Just("him".to_string()),
                    Just("and".to_string()),
                    Just("the".to_string()),
                    Just("of".to_string()),
                    Just("tree".to_string()),
                    Just("running".to_string()),
                ],
                0..60,
            )
        ) {
            let stream = TokenStream {
                doc_id: "p".into(),
                stage: Stage::WithStopwords,
                tokens: words.clone(),
            };
            let got: Vec<(usize, Gender)> = detect_firstness(&stream, lex(), stops())
                .into_iter()
                .map(|e| (e.token_index, e.first_gender))
                .collect();
            let want = brute_force_events(&words, lex(), stops());
            prop_assert_eq!(got, want);
        }

        /// Inserting a filler token between keyword pairs already separated
        /// by a non-stopword keeps the event count unchanged: they were not
        /// events before and remain non-events.
        #[test]
        fn filler_insertion_invariance(insert_at in 1usize..3) {
            let mut words: Vec<String> =
                "father tree mother boy girls king queen".split_whitespace()
                    .map(String::from)
                    .collect();
            let stream = TokenStream {
                doc_id: "p".into(),
                stage: Stage::WithStopwords,
                tokens: words.clone(),
            };
            let before = detect_firstness(&stream, lex(), stops()).len();
            // father..mother stay separated by a filler either way
            words.insert(insert_at + 1, "stone".into());
            let stream = TokenStream {
                doc_id: "p".into(),
                stage: Stage::WithStopwords,
                tokens: words,
            };
            let after = detect_firstness(&stream, lex(), stops()).len();
            prop_assert_eq!(before, after);
            prop_assert_eq!(after, 2); // boy/girls and king/queen
        }
    }
}
