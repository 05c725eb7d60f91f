//! The gendered keyword table, its normalization and plural expansion, and
//! the gendered first-name lexicon used for name counting.
//!
//! The keyword table pairs equivalent male/female terms in 21 levels
//! (father/mother, he/she, ...). Firstness only counts within a level, so
//! level identity is as important as gender. All surface forms pass the
//! same normalization as corpus text: `mr.` -> `mr`, `Ma'am` -> `maam`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::textprep::normalize_text;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("name lexicon line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("name lexicon: '{name}' is listed under both genders")]
    ConflictingName { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn opposite(self) -> Gender {
        match self {
            Gender::Female => Gender::Male,
            Gender::Male => Gender::Female,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One row of the keyword table: equivalent male and female surface forms.
#[derive(Debug, Clone, Serialize)]
pub struct KeywordLevel {
    pub level_id: usize,
    pub male_forms: BTreeSet<String>,
    pub female_forms: BTreeSet<String>,
}

/// The full keyword table plus an exact-match index over every form.
#[derive(Debug, Clone)]
pub struct GenderLexicon {
    levels: Vec<KeywordLevel>,
    form_index: HashMap<String, (Gender, usize)>,
}

/// Raw table rows: (male forms, female forms, expand regular plurals).
/// Pronoun and title rows are not expanded; nouns get their regular plural.
/// Words ending in `-man` pluralize irregularly and are skipped by the
/// expander, which also keeps `man/woman` from colliding with the distinct
/// `men/women` level.
const RAW_LEVELS: &[(&[&str], &[&str], bool)] = &[
    (&["men"], &["women"], false),
    (&["boy"], &["girl"], true),
    (&["male"], &["female"], true),
    (&["brother"], &["sister"], true),
    (&["father"], &["mother"], true),
    (&["son"], &["daughter"], true),
    (&["husband"], &["wife"], true),
    (&["king"], &["queen"], true),
    (&["prince"], &["princess"], true),
    (&["uncle"], &["aunt"], true),
    (&["nephew"], &["niece"], true),
    (&["he"], &["she"], false),
    (&["him"], &["her"], false),
    (&["his"], &["hers"], false),
    (&["gentleman"], &["lady"], true),
    (&["sir"], &["ma'am", "madam"], false),
    (&["mr."], &["mrs.", "ms.", "miss"], false),
    (&["hero"], &["heroine"], true),
    (&["lord"], &["dame"], true),
    (&["patriarch"], &["matriarch"], true),
    (&["man"], &["woman"], true),
];

/// Regular orthographic plural, or None for `-man` words whose plural is
/// irregular.
fn regular_plural(word: &str) -> Option<String> {
    if word.ends_with("man") {
        return None;
    }
    let bytes = word.as_bytes();
    let last = *bytes.last()?;
    if last == b'y' && bytes.len() >= 2 && !matches!(bytes[bytes.len() - 2], b'a' | b'e' | b'i' | b'o' | b'u') {
        return Some(format!("{}ies", &word[..word.len() - 1]));
    }
    if let Some(stem) = word.strip_suffix("fe") {
        return Some(format!("{stem}ves"));
    }
    if word.ends_with("ch") {
        // torches take -es, but the /k/ sound in -arch takes a bare -s
        if word.ends_with("arch") {
            return Some(format!("{word}s"));
        }
        return Some(format!("{word}es"));
    }
    if matches!(last, b's' | b'x' | b'z' | b'o') || word.ends_with("sh") {
        return Some(format!("{word}es"));
    }
    Some(format!("{word}s"))
}

fn normalize_form(raw: &str) -> String {
    let tokens = normalize_text(raw);
    assert_eq!(tokens.len(), 1, "lexicon form {raw:?} must normalize to one token");
    tokens.into_iter().next().unwrap()
}

impl GenderLexicon {
    /// The compiled-in 21-level table with plural variants expanded.
    pub fn builtin() -> &'static GenderLexicon {
        static INSTANCE: OnceLock<GenderLexicon> = OnceLock::new();
        INSTANCE.get_or_init(|| {
            let mut levels = Vec::with_capacity(RAW_LEVELS.len());
            for (level_id, (male, female, expand)) in RAW_LEVELS.iter().enumerate() {
                let expand_forms = |raw: &[&str]| -> BTreeSet<String> {
                    let mut forms = BTreeSet::new();
                    for f in raw {
                        let base = normalize_form(f);
                        if *expand {
                            if let Some(plural) = regular_plural(&base) {
                                forms.insert(plural);
                            }
                        }
                        forms.insert(base);
                    }
                    forms
                };
                levels.push(KeywordLevel {
                    level_id,
                    male_forms: expand_forms(male),
                    female_forms: expand_forms(female),
                });
            }
            GenderLexicon::from_levels(levels)
        })
    }

    fn from_levels(levels: Vec<KeywordLevel>) -> GenderLexicon {
        let mut form_index = HashMap::new();
        for level in &levels {
            for form in &level.male_forms {
                let prev = form_index.insert(form.clone(), (Gender::Male, level.level_id));
                assert!(prev.is_none(), "duplicate lexicon form {form:?}");
            }
            for form in &level.female_forms {
                let prev = form_index.insert(form.clone(), (Gender::Female, level.level_id));
                assert!(prev.is_none(), "duplicate lexicon form {form:?}");
            }
        }
        GenderLexicon { levels, form_index }
    }

    /// Exact whole-token lookup; `hero` matches the hero/heroine level, never
    /// the `he` level by prefix.
    pub fn match_token(&self, token: &str) -> Option<(Gender, usize)> {
        self.form_index.get(token).copied()
    }

    pub fn levels(&self) -> &[KeywordLevel] {
        &self.levels
    }

    pub fn level(&self, level_id: usize) -> Option<&KeywordLevel> {
        self.levels.get(level_id)
    }

    /// Every surface form in the table, in index order.
    pub fn all_forms(&self) -> impl Iterator<Item = &str> {
        self.levels.iter().flat_map(|l| {
            l.male_forms
                .iter()
                .chain(l.female_forms.iter())
                .map(String::as_str)
        })
    }
}

/// Normalized given name -> gender, loaded from CSV.
#[derive(Debug, Clone, Default)]
pub struct NameLexicon {
    entries: BTreeMap<String, Gender>,
}

/// The starter name list shipped with the crate; callers may load their own.
pub const BUILTIN_NAMES: &str = include_str!("../data/names_en.csv");

impl NameLexicon {
    /// Parse `name,gender` rows with gender in {f, m}. `#` comment lines and
    /// blank lines are skipped. Duplicate rows with conflicting gender are
    /// an error; identical duplicates are allowed.
    pub fn parse(text: &str) -> Result<NameLexicon, LexiconError> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 {
                return Err(LexiconError::MalformedRow {
                    line: line_no,
                    reason: format!("expected 2 columns, found {}", fields.len()),
                });
            }
            let gender = match fields[1].trim().to_ascii_lowercase().as_str() {
                "f" => Gender::Female,
                "m" => Gender::Male,
                other => {
                    return Err(LexiconError::MalformedRow {
                        line: line_no,
                        reason: format!("unknown gender tag {other:?} (expected f or m)"),
                    })
                }
            };
            let tokens = normalize_text(fields[0]);
            if tokens.len() != 1 {
                return Err(LexiconError::MalformedRow {
                    line: line_no,
                    reason: format!(
                        "name {:?} does not normalize to a single token",
                        fields[0].trim()
                    ),
                });
            }
            let name = tokens.into_iter().next().unwrap();
            if let Some(existing) = entries.insert(name.clone(), gender) {
                if existing != gender {
                    return Err(LexiconError::ConflictingName { name });
                }
            }
        }
        Ok(NameLexicon { entries })
    }

    pub fn from_path(path: &Path) -> Result<NameLexicon, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        NameLexicon::parse(&text)
    }

    /// The bundled starter list.
    pub fn builtin() -> NameLexicon {
        NameLexicon::parse(BUILTIN_NAMES).expect("bundled name lexicon parses")
    }

    pub fn gender_of(&self, name: &str) -> Option<Gender> {
        self.entries.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Gender)> {
        self.entries.iter().map(|(n, g)| (n.as_str(), *g))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> &'static GenderLexicon {
        GenderLexicon::builtin()
    }

    #[test]
    fn builtin_has_21_levels() {
        assert_eq!(lex().levels().len(), 21);
    }

    #[test]
    fn father_mother_level_present() {
        let (g, level) = lex().match_token("mother").unwrap();
        assert_eq!(g, Gender::Female);
        let (gm, lm) = lex().match_token("father").unwrap();
        assert_eq!(gm, Gender::Male);
        assert_eq!(level, lm);
    }

    #[test]
    fn title_variants_are_normalized_in() {
        let sir_level = lex().match_token("sir").unwrap().1;
        for form in ["maam", "madam"] {
            let (g, l) = lex().match_token(form).unwrap();
            assert_eq!((g, l), (Gender::Female, sir_level), "{form}");
        }
        let mr_level = lex().match_token("mr").unwrap().1;
        for form in ["mrs", "ms", "miss"] {
            let (g, l) = lex().match_token(form).unwrap();
            assert_eq!((g, l), (Gender::Female, mr_level), "{form}");
        }
    }

    #[test]
    fn exact_match_only() {
        assert_eq!(lex().match_token("zebra"), None);
        // "hero" resolves to its own level, not to "he" by prefix
        let (g, hero_level) = lex().match_token("hero").unwrap();
        assert_eq!(g, Gender::Male);
        let he_level = lex().match_token("he").unwrap().1;
        assert_ne!(hero_level, he_level);
        assert_eq!(lex().match_token("heroes").unwrap().1, hero_level);
    }

    #[test]
    fn plural_expansion_shares_levels() {
        for (singular, plural) in
            [("boy", "boys"), ("lady", "ladies"), ("wife", "wives"), ("hero", "heroes"),
             ("princess", "princesses"), ("patriarch", "patriarchs")]
        {
            let (gs, ls) = lex().match_token(singular).unwrap();
            let (gp, lp) = lex().match_token(plural).unwrap();
            assert_eq!((gs, ls), (gp, lp), "{singular}/{plural}");
        }
    }

    #[test]
    fn closed_class_rows_are_not_expanded() {
        for absent in ["hes", "shes", "sirs", "madams", "mads", "misses", "mans", "womans", "gentlemans"] {
            assert_eq!(lex().match_token(absent), None, "{absent}");
        }
    }

    #[test]
    fn men_and_man_are_distinct_levels() {
        let men = lex().match_token("men").unwrap().1;
        let man = lex().match_token("man").unwrap().1;
        assert_ne!(men, man);
        let women = lex().match_token("women").unwrap().1;
        let woman = lex().match_token("woman").unwrap().1;
        assert_eq!(men, women);
        assert_eq!(man, woman);
    }

    #[test]
    fn index_is_consistent_with_levels() {
        let mut total_forms = 0;
        for level in lex().levels() {
            assert!(!level.male_forms.is_empty());
            assert!(!level.female_forms.is_empty());
            for form in &level.male_forms {
                assert!(!form.is_empty());
                assert_eq!(
                    lex().match_token(form),
                    Some((Gender::Male, level.level_id))
                );
                assert_eq!(normalize_text(form), vec![form.clone()], "form already normalized");
                total_forms += 1;
            }
            for form in &level.female_forms {
                assert!(!form.is_empty());
                assert_eq!(
                    lex().match_token(form),
                    Some((Gender::Female, level.level_id))
                );
                assert_eq!(normalize_text(form), vec![form.clone()], "form already normalized");
                total_forms += 1;
            }
        }
        assert_eq!(total_forms, lex().all_forms().count());
        // bijective: the index holds exactly the level forms
        assert_eq!(total_forms, lex().form_index.len());
    }

    #[test]
    fn name_lexicon_parse() {
        let names = NameLexicon::parse("anna,f\njohn,m\n").unwrap();
        assert_eq!(names.len(), 2);
        assert_eq!(names.gender_of("anna"), Some(Gender::Female));
        assert_eq!(names.gender_of("john"), Some(Gender::Male));
    }

    #[test]
    fn name_lexicon_empty_is_fine() {
        assert!(NameLexicon::parse("").unwrap().is_empty());
        assert!(NameLexicon::parse("# just a comment\n").unwrap().is_empty());
    }

    #[test]
    fn name_lexicon_conflicts_error() {
        let err = NameLexicon::parse("kim,f\nkim,m\n").unwrap_err();
        assert!(matches!(err, LexiconError::ConflictingName { .. }));
        // identical duplicate is no conflict
        assert_eq!(NameLexicon::parse("kim,f\nkim,f\n").unwrap().len(), 1);
    }

    #[test]
    fn name_lexicon_malformed_rows() {
        assert!(matches!(
            NameLexicon::parse("anna,f,extra\n"),
            Err(LexiconError::MalformedRow { .. })
        ));
        assert!(matches!(
            NameLexicon::parse("anna,x\n"),
            Err(LexiconError::MalformedRow { .. })
        ));
        assert!(matches!(
            NameLexicon::parse("mary jane,f\n"),
            Err(LexiconError::MalformedRow { .. })
        ));
    }

    #[test]
    fn name_lexicon_normalizes_like_corpus() {
        let names = NameLexicon::parse("O'Brien,m\nAnaïs,f\n").unwrap();
        assert_eq!(names.gender_of("obrien"), Some(Gender::Male));
        assert_eq!(names.gender_of("anaïs"), Some(Gender::Female));
    }

    #[test]
    fn builtin_names_parse_and_look_sane() {
        let names = NameLexicon::builtin();
        assert!(names.len() >= 150, "starter lexicon has {} names", names.len());
        assert_eq!(names.gender_of("anna"), Some(Gender::Female));
        assert_eq!(names.gender_of("john"), Some(Gender::Male));
    }
}
