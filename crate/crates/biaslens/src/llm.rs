//! The LLM recognition probe: builds the fixed prompt from the two ranked
//! lists (names removed), submits it to a pluggable chat-completion client,
//! parses the gender-to-list attribution out of the reply, and scores
//! accuracy over repeated independent trials.
//!
//! The male-context list always goes first; correctness is judged on the
//! extracted mapping, not on surface wording, so a reply that calls the
//! first list "list 2" but genders it correctly still scores. Two clients
//! ship: a JSON-over-HTTP chat-completion client configured from
//! environment variables, and a file-based replay client used by all tests
//! (no live network access in the test suite).

use std::fmt;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::lexicon::{Gender, NameLexicon};
use crate::porter;
use crate::tfidf::RankedTermList;

/// Environment variables configuring the live client.
pub const ENV_ENDPOINT: &str = "BIASLENS_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "BIASLENS_LLM_MODEL";
pub const ENV_TOKEN: &str = "BIASLENS_LLM_TOKEN";

/// Default number of trials per probe.
pub const DEFAULT_TRIALS: usize = 3;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("the {0} list is empty after name removal; nothing to ask about")]
    EmptyList(Gender),
    #[error("no trial produced a parseable attribution")]
    NoParseableTrials,
    #[error("every trial failed in transport")]
    AllTrialsFailed,
    #[error("missing environment variable {0}")]
    MissingEnv(&'static str),
}

/// A transport-level failure for one trial; the run continues.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransportError(pub String);

impl fmt::Display for TransportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The assembled prompt. `names_removed` is always true: name stems are
/// stripped from both lists before substitution.
#[derive(Debug, Clone, Serialize)]
pub struct PromptBundle {
    pub text: String,
    pub names_removed: bool,
}

/// Build the probe prompt: the fixed template with the male-context list
/// substituted into the first bracket pair and the female-context list into
/// the second, each as comma-separated stems.
pub fn build_prompt(
    list_m: &RankedTermList,
    list_f: &RankedTermList,
    names: &NameLexicon,
) -> Result<PromptBundle, LlmError> {
    let name_stems: std::collections::HashSet<String> =
        names.iter().map(|(n, _)| porter::stem(n)).collect();
    let keep = |list: &RankedTermList| -> Vec<String> {
        list.stems()
            .filter(|s| !name_stems.contains(*s))
            .map(str::to_string)
            .collect()
    };
    let male = keep(list_m);
    let female = keep(list_f);
    if male.is_empty() {
        return Err(LlmError::EmptyList(Gender::Male));
    }
    if female.is_empty() {
        return Err(LlmError::EmptyList(Gender::Female));
    }
    let text = format!(
        "I did TF IDF to a corpus that consists of 2 documents. \
         One document is in a female context, and the other one is on male context. \
         Here are my two TF IDF list results. \
         Can you guess which one is for female context, which one is for male context? \
         [{}] [{}]",
        male.join(", "),
        female.join(", ")
    );
    Ok(PromptBundle {
        text,
        names_removed: true,
    })
}

/// What a reply says about one list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ListGender {
    Female,
    Male,
    Unknown,
}

impl From<Gender> for ListGender {
    fn from(g: Gender) -> Self {
        match g {
            Gender::Female => ListGender::Female,
            Gender::Male => ListGender::Male,
        }
    }
}

/// Extracted gender-to-list mapping. When both fields are known they
/// always differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Attribution {
    pub first_list: ListGender,
    pub second_list: ListGender,
}

impl Attribution {
    pub const UNKNOWN: Attribution = Attribution {
        first_list: ListGender::Unknown,
        second_list: ListGender::Unknown,
    };
}

/// Rule-based extraction: ordinal/list references ("first list", "list 2",
/// a bare "first") are collected per sentence, and each gender word pairs
/// with its nearest preceding reference (else the nearest following one)
/// within an eight-word window. Contradictory votes degrade to unknown; a
/// single confident side implies the complement for the other. Never fails
/// on arbitrary text.
pub fn parse_attribution(response: &str) -> Attribution {
    let lower = response.to_lowercase();
    let mut votes: [Option<(usize, Gender)>; 2] = [None, None]; // (distance, gender)

    for sentence in lower.split(['.', ';', '!', '?', '\n']) {
        let words: Vec<&str> = sentence
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        let mut refs: Vec<(usize, usize)> = Vec::new(); // (word position, list index)
        for (pos, pair) in words.windows(2).enumerate() {
            match (pair[0], pair[1]) {
                ("list" | "lists", "1" | "one") => refs.push((pos, 0)),
                ("list" | "lists", "2" | "two") => refs.push((pos, 1)),
                _ => {}
            }
        }
        for (pos, word) in words.iter().enumerate() {
            match *word {
                "first" | "1st" | "former" => refs.push((pos, 0)),
                "second" | "2nd" | "latter" => refs.push((pos, 1)),
                _ => {}
            }
        }
        if refs.is_empty() {
            continue;
        }
        for (pos, word) in words.iter().enumerate() {
            let gender = match *word {
                "female" | "females" | "feminine" | "femininity" | "woman" | "women" => {
                    Gender::Female
                }
                "male" | "males" | "masculine" | "masculinity" | "man" | "men" => Gender::Male,
                _ => continue,
            };
            let best = refs
                .iter()
                .filter(|(rp, _)| *rp <= pos && pos - rp <= 8)
                .max_by_key(|(rp, _)| *rp)
                .or_else(|| {
                    refs.iter()
                        .filter(|(rp, _)| *rp > pos && rp - pos <= 8)
                        .min_by_key(|(rp, _)| *rp)
                });
            if let Some(&(ref_pos, list_idx)) = best {
                let distance = ref_pos.abs_diff(pos);
                match votes[list_idx] {
                    Some((held, _)) if held <= distance => {}
                    _ => votes[list_idx] = Some((distance, gender)),
                }
            }
        }
    }

    let first = votes[0].map(|(_, g)| g);
    let second = votes[1].map(|(_, g)| g);
    match (first, second) {
        (Some(a), Some(b)) if a == b => Attribution::UNKNOWN,
        (Some(a), Some(b)) => Attribution {
            first_list: a.into(),
            second_list: b.into(),
        },
        (Some(a), None) => Attribution {
            first_list: a.into(),
            second_list: a.opposite().into(),
        },
        (None, Some(b)) => Attribution {
            first_list: b.opposite().into(),
            second_list: b.into(),
        },
        (None, None) => Attribution::UNKNOWN,
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialOutcome {
    Correct,
    Incorrect,
    Unparseable,
    TransportFailed,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub raw_response: Option<String>,
    pub attribution: Option<Attribution>,
    pub outcome: TrialOutcome,
    pub transport_error: Option<TransportError>,
}

/// Aggregate accuracy: `trials` counts parseable trials only, and
/// `percent = floor(100 * correct / trials)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RecognitionScore {
    pub trials: u32,
    pub correct: u32,
    pub percent: u32,
}

/// One independent chat completion per trial (no shared conversation).
pub trait ChatClient {
    fn complete(&mut self, prompt: &str, trial_index: usize) -> Result<String, TransportError>;
}

/// Replays canned responses from `trial_<n>.txt` files in a directory.
pub struct ReplayClient {
    dir: PathBuf,
}

impl ReplayClient {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl ChatClient for ReplayClient {
    fn complete(&mut self, _prompt: &str, trial_index: usize) -> Result<String, TransportError> {
        let path = self.dir.join(format!("trial_{trial_index}.txt"));
        fs::read_to_string(&path)
            .map_err(|e| TransportError(format!("fixture {}: {e}", path.display())))
    }
}

/// Live JSON-over-HTTP chat-completion client. Endpoint, model and
/// optional bearer token come from environment variables.
pub struct HttpChatClient {
    endpoint: String,
    model: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn from_env() -> Result<Self, LlmError> {
        let endpoint = std::env::var(ENV_ENDPOINT).map_err(|_| LlmError::MissingEnv(ENV_ENDPOINT))?;
        let model = std::env::var(ENV_MODEL).map_err(|_| LlmError::MissingEnv(ENV_MODEL))?;
        let token = std::env::var(ENV_TOKEN).ok();
        Ok(Self::new(endpoint, model, token))
    }

    pub fn new(endpoint: String, model: String, token: Option<String>) -> Self {
        Self {
            endpoint,
            model,
            token,
            agent: ureq::Agent::new_with_defaults(),
        }
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&mut self, prompt: &str, _trial_index: usize) -> Result<String, TransportError> {
        let payload = serde_json::json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
        })
        .to_string();
        let mut request = self
            .agent
            .post(&self.endpoint)
            .header("content-type", "application/json");
        if let Some(token) = &self.token {
            request = request.header("authorization", format!("Bearer {token}"));
        }
        let mut response = request
            .send(&payload)
            .map_err(|e| TransportError(e.to_string()))?;
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError(e.to_string()))?;
        let value: serde_json::Value =
            serde_json::from_str(&body).map_err(|e| TransportError(format!("bad JSON: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| TransportError("response has no choices[0].message.content".into()))
    }
}

/// Run `trials` independent conversations and score them.
///
/// The ground truth is fixed by the prompt order: first list male, second
/// female. Unparseable replies are kept in the records but excluded from
/// the score denominator. Transport failures are recorded and skipped; if
/// every trial fails in transport the whole run errors.
pub fn run_trials(
    client: &mut dyn ChatClient,
    bundle: &PromptBundle,
    trials: usize,
) -> Result<(Vec<TrialRecord>, RecognitionScore), LlmError> {
    let mut records = Vec::with_capacity(trials);
    let mut parseable = 0u32;
    let mut correct = 0u32;
    let mut transport_failures = 0usize;
    for trial_index in 1..=trials {
        match client.complete(&bundle.text, trial_index) {
            Ok(raw) => {
                let attribution = parse_attribution(&raw);
                let outcome = if attribution.first_list == ListGender::Unknown
                    || attribution.second_list == ListGender::Unknown
                {
                    TrialOutcome::Unparseable
                } else {
                    parseable += 1;
                    if attribution.first_list == ListGender::Male
                        && attribution.second_list == ListGender::Female
                    {
                        correct += 1;
                        TrialOutcome::Correct
                    } else {
                        TrialOutcome::Incorrect
                    }
                };
                records.push(TrialRecord {
                    trial_index,
                    raw_response: Some(raw),
                    attribution: Some(attribution),
                    outcome,
                    transport_error: None,
                });
            }
            Err(err) => {
                transport_failures += 1;
                records.push(TrialRecord {
                    trial_index,
                    raw_response: None,
                    attribution: None,
                    outcome: TrialOutcome::TransportFailed,
                    transport_error: Some(err),
                });
            }
        }
    }
    if trials > 0 && transport_failures == trials {
        return Err(LlmError::AllTrialsFailed);
    }
    if parseable == 0 {
        return Err(LlmError::NoParseableTrials);
    }
    let score = RecognitionScore {
        trials: parseable,
        correct,
        percent: 100 * correct / parseable,
    };
    Ok((records, score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfidf::RankedTerm;

    fn list(ctx: Gender, stems: &[&str]) -> RankedTermList {
        RankedTermList {
            context: ctx,
            entries: stems
                .iter()
                .map(|s| RankedTerm {
                    stem: s.to_string(),
                    score: 1.0,
                })
                .collect(),
        }
    }

    fn no_names() -> NameLexicon {
        NameLexicon::parse("").unwrap()
    }

    #[test]
    fn prompt_places_male_list_first() {
        let bundle = build_prompt(
            &list(Gender::Male, &["run", "build"]),
            &list(Gender::Female, &["cook", "sing"]),
            &no_names(),
        )
        .unwrap();
        assert!(bundle.names_removed);
        assert!(bundle
            .text
            .contains("Can you guess which one is for female context, which one is for male context?"));
        let male_pos = bundle.text.find("[run, build]").unwrap();
        let female_pos = bundle.text.find("[cook, sing]").unwrap();
        assert!(male_pos < female_pos);
    }

    #[test]
    fn prompt_is_byte_stable() {
        let mk = || {
            build_prompt(
                &list(Gender::Male, &["run"]),
                &list(Gender::Female, &["cook"]),
                &no_names(),
            )
            .unwrap()
            .text
        };
        assert_eq!(mk(), mk());
    }

    #[test]
    fn prompt_removes_name_stems() {
        let names = NameLexicon::parse("anna,f\n").unwrap();
        let bundle = build_prompt(
            &list(Gender::Male, &["run"]),
            &list(Gender::Female, &["anna", "cook"]),
            &names,
        )
        .unwrap();
        assert!(!bundle.text.contains("anna"));
        assert!(bundle.text.contains("[cook]"));
    }

    #[test]
    fn prompt_empty_list_is_error() {
        let err = build_prompt(
            &list(Gender::Male, &[]),
            &list(Gender::Female, &["cook"]),
            &no_names(),
        )
        .unwrap_err();
        assert!(matches!(err, LlmError::EmptyList(Gender::Male)));
    }

    #[test]
    fn parse_direct_phrasing() {
        let a = parse_attribution("The first list is male, the second is female.");
        assert_eq!(a.first_list, ListGender::Male);
        assert_eq!(a.second_list, ListGender::Female);
    }

    #[test]
    fn parse_order_independent() {
        let a = parse_attribution("List 2 reflects a female context; list 1 male.");
        assert_eq!(a.first_list, ListGender::Male);
        assert_eq!(a.second_list, ListGender::Female);
    }

    #[test]
    fn parse_no_signal() {
        assert_eq!(parse_attribution("Interesting lists!"), Attribution::UNKNOWN);
        assert_eq!(parse_attribution(""), Attribution::UNKNOWN);
    }

    #[test]
    fn parse_complements_single_side() {
        let a = parse_attribution("I think the second list is the female one.");
        assert_eq!(a.first_list, ListGender::Male);
        assert_eq!(a.second_list, ListGender::Female);
    }

    #[test]
    fn parse_never_assigns_same_gender_twice() {
        let a = parse_attribution("The first list is male and the second list is also male.");
        assert_eq!(a, Attribution::UNKNOWN);
    }

    #[test]
    fn parse_swapped_attribution_is_incorrect_not_unknown() {
        let a = parse_attribution("First list: female words. Second list: male words.");
        assert_eq!(a.first_list, ListGender::Female);
        assert_eq!(a.second_list, ListGender::Male);
    }

    struct Scripted(Vec<Result<String, TransportError>>);

    impl ChatClient for Scripted {
        fn complete(&mut self, _p: &str, _i: usize) -> Result<String, TransportError> {
            self.0.remove(0)
        }
    }

    fn bundle() -> PromptBundle {
        build_prompt(
            &list(Gender::Male, &["run"]),
            &list(Gender::Female, &["cook"]),
            &no_names(),
        )
        .unwrap()
    }

    #[test]
    fn two_of_three_scores_66() {
        let mut client = Scripted(vec![
            Ok("first list male, second female".into()),
            Ok("the first list is female, the second male".into()),
            Ok("list 1 is male; list 2 is female".into()),
        ]);
        let (records, score) = run_trials(&mut client, &bundle(), 3).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(score, RecognitionScore { trials: 3, correct: 2, percent: 66 });
    }

    #[test]
    fn three_of_three_scores_100() {
        let mut client = Scripted(vec![
            Ok("first list male, second female".into()),
            Ok("first list male, second female".into()),
            Ok("first list male, second female".into()),
        ]);
        let (_, score) = run_trials(&mut client, &bundle(), 3).unwrap();
        assert_eq!(score.percent, 100);
    }

    #[test]
    fn unparseable_excluded_from_denominator() {
        let mut client = Scripted(vec![
            Ok("first list male, second female".into()),
            Ok("fascinating!".into()),
            Ok("first list male, second female".into()),
        ]);
        let (records, score) = run_trials(&mut client, &bundle(), 3).unwrap();
        assert_eq!(records[1].outcome, TrialOutcome::Unparseable);
        assert_eq!(score, RecognitionScore { trials: 2, correct: 2, percent: 100 });
    }

    #[test]
    fn zero_parseable_is_error() {
        let mut client = Scripted(vec![Ok("hm".into()), Ok("hm".into()), Ok("hm".into())]);
        assert!(matches!(
            run_trials(&mut client, &bundle(), 3),
            Err(LlmError::NoParseableTrials)
        ));
    }

    #[test]
    fn transport_failures_recorded_and_survivable() {
        let mut client = Scripted(vec![
            Err(TransportError("boom".into())),
            Ok("first list male, second female".into()),
            Err(TransportError("boom".into())),
        ]);
        let (records, score) = run_trials(&mut client, &bundle(), 3).unwrap();
        assert_eq!(records[0].outcome, TrialOutcome::TransportFailed);
        assert_eq!(score.percent, 100);

        let mut all_fail = Scripted(vec![
            Err(TransportError("boom".into())),
            Err(TransportError("boom".into())),
            Err(TransportError("boom".into())),
        ]);
        assert!(matches!(
            run_trials(&mut all_fail, &bundle(), 3),
            Err(LlmError::AllTrialsFailed)
        ));
    }

    #[test]
    fn replay_client_reads_fixture_files() {
        let dir = tempfile::tempdir().unwrap();
        for i in 1..=2 {
            fs::write(
                dir.path().join(format!("trial_{i}.txt")),
                "first list male, second female",
            )
            .unwrap();
        }
        let mut client = ReplayClient::new(dir.path());
        let (records, score) = run_trials(&mut client, &bundle(), 2).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(score.percent, 100);

        // a missing fixture is a transport failure for that trial
        let mut client = ReplayClient::new(dir.path());
        let (records, _) = run_trials(&mut client, &bundle(), 3).unwrap();
        assert_eq!(records[2].outcome, TrialOutcome::TransportFailed);
    }
}
