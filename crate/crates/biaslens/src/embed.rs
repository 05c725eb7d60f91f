//! GloVe-format vector loading, gendered-list cluster centroids, and cosine
//! distances from probe keywords to each cluster.
//!
//! The difference column is always `d_female - d_male`: negative means the
//! keyword sits closer to the female cluster, positive closer to the male
//! cluster. Out-of-vocabulary terms are tracked, never silently dropped.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::lexicon::Gender;
use crate::tfidf::RankedTermList;

/// Probe keywords used when the config names none.
pub const DEFAULT_PROBE_KEYWORDS: [&str; 9] = [
    "death",
    "food",
    "baby",
    "pretty",
    "love",
    "violence",
    "household",
    "doctor",
    "nurse",
];

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("vector file is empty")]
    EmptyFile,
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse {value:?} as a number")]
    BadNumber { line: usize, value: String },
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("vectors have different dimensions: {0} vs {1}")]
    MixedDimensions(usize, usize),
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
    #[error("every word of the {0} list is out of vocabulary")]
    AllOutOfVocabulary(String),
}

/// A token -> vector table of fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    dim: usize,
    table: HashMap<String, Vec<f32>>,
}

/// Load accounting: duplicate tokens are overwritten last-wins and counted.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub tokens: usize,
    pub duplicates: usize,
}

impl EmbeddingSpace {
    /// Parse GloVe text format: one token followed by `dim` decimal numbers
    /// per line, dimension inferred from the first line.
    pub fn from_reader<R: Read>(reader: R) -> Result<(EmbeddingSpace, LoadReport), EmbedError> {
        let reader = BufReader::new(reader);
        let mut table: HashMap<String, Vec<f32>> = HashMap::new();
        let mut dim: Option<usize> = None;
        let mut duplicates = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| EmbedError::Io {
                path: PathBuf::from("<reader>"),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts
                .next()
                .ok_or_else(|| EmbedError::BadLine {
                    line: line_no,
                    reason: "missing token".into(),
                })?
                .to_string();
            let mut vector = Vec::with_capacity(dim.unwrap_or(0));
            for part in parts {
                let value: f32 = part.parse().map_err(|_| EmbedError::BadNumber {
                    line: line_no,
                    value: part.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(EmbedError::BadNumber {
                        line: line_no,
                        value: part.to_string(),
                    });
                }
                vector.push(value);
            }
            if vector.is_empty() {
                return Err(EmbedError::BadLine {
                    line: line_no,
                    reason: "no vector components".into(),
                });
            }
            match dim {
                None => dim = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(EmbedError::DimensionMismatch {
                        line: line_no,
                        expected: d,
                        found: vector.len(),
                    })
                }
                Some(_) => {}
            }
            if table.insert(token, vector).is_some() {
                duplicates += 1;
            }
        }
        let dim = dim.ok_or(EmbedError::EmptyFile)?;
        let report = LoadReport {
            tokens: table.len(),
            duplicates,
        };
        Ok((EmbeddingSpace { dim, table }, report))
    }

    pub fn load(path: &Path) -> Result<(EmbeddingSpace, LoadReport), EmbedError> {
        let file = File::open(path).map_err(|source| EmbedError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.table.get(token).map(Vec::as_slice)
    }
}

/// 1 - cos(u, v), in [0, 2] up to rounding.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::MixedDimensions(u.len(), v.len()));
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    Ok(1.0 - dot / (nu.sqrt() * nv.sqrt()))
}

/// Centroid of a word list with out-of-vocabulary accounting.
#[derive(Debug, Clone, Serialize)]
pub struct CentroidReport {
    pub centroid: Vec<f64>,
    pub used: Vec<String>,
    pub skipped: Vec<String>,
}

/// Unweighted mean of the in-vocabulary word vectors. `label` names the
/// list in the all-OOV error.
pub fn cluster_centroid(
    words: &[String],
    space: &EmbeddingSpace,
    label: &str,
) -> Result<CentroidReport, EmbedError> {
    let mut centroid = vec![0.0f64; space.dim()];
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for word in words {
        match space.get(word) {
            Some(vector) => {
                for (acc, component) in centroid.iter_mut().zip(vector) {
                    *acc += f64::from(*component);
                }
                used.push(word.clone());
            }
            None => skipped.push(word.clone()),
        }
    }
    if used.is_empty() {
        return Err(EmbedError::AllOutOfVocabulary(label.to_string()));
    }
    let count = used.len() as f64;
    for component in &mut centroid {
        *component /= count;
    }
    Ok(CentroidReport {
        centroid,
        used,
        skipped,
    })
}

/// How keyword-to-list distance is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// Distance to the unweighted centroid of the list vectors.
    #[default]
    Centroid,
    /// Mean of the per-word cosine distances.
    MeanPairwise,
}

impl std::str::FromStr for DistanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "centroid" => Ok(DistanceMode::Centroid),
            "mean" | "mean-pairwise" => Ok(DistanceMode::MeanPairwise),
            other => Err(format!("unknown distance mode {other:?} (centroid|mean)")),
        }
    }
}

/// Which cluster a keyword sits closer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CloserTo {
    Female,
    Male,
    Tie,
}

/// One keyword row: `difference = d_female - d_male`, sign decides
/// `closer_to`.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterDistanceRow {
    pub keyword: String,
    pub d_female: f64,
    pub d_male: f64,
    pub difference: f64,
    pub closer_to: CloserTo,
}

/// The full distance table plus OOV accounting for both lists and the
/// keyword set.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceTable {
    pub mode: DistanceMode,
    pub rows: Vec<ClusterDistanceRow>,
    pub skipped_keywords: Vec<String>,
    pub female_oov: Vec<String>,
    pub male_oov: Vec<String>,
}

/// Distance of each probe keyword to the two gendered clusters.
pub fn keyword_distance_table(
    list_f: &RankedTermList,
    list_m: &RankedTermList,
    keywords: &[String],
    space: &EmbeddingSpace,
    mode: DistanceMode,
) -> Result<DistanceTable, EmbedError> {
    let f_words: Vec<String> = list_f.stems().map(str::to_string).collect();
    let m_words: Vec<String> = list_m.stems().map(str::to_string).collect();

    let to_f64 = |v: &[f32]| -> Vec<f64> { v.iter().map(|&x| f64::from(x)).collect() };

    // both centroids must be computable even in mean mode: the OOV
    // accounting and the all-OOV error come from here
    let centroid_f = cluster_centroid(&f_words, space, Gender::Female.label())?;
    let centroid_m = cluster_centroid(&m_words, space, Gender::Male.label())?;

    let distance_to_list =
        |kw: &[f64], centroid: &CentroidReport| -> Result<f64, EmbedError> {
            match mode {
                DistanceMode::Centroid => cosine_distance(kw, &centroid.centroid),
                DistanceMode::MeanPairwise => {
                    let mut total = 0.0;
                    for word in &centroid.used {
                        let vector = to_f64(space.get(word).expect("used words are in vocab"));
                        total += cosine_distance(kw, &vector)?;
                    }
                    Ok(total / centroid.used.len() as f64)
                }
            }
        };

    let mut rows = Vec::new();
    let mut skipped_keywords = Vec::new();
    for keyword in keywords {
        let Some(vector) = space.get(keyword) else {
            skipped_keywords.push(keyword.clone());
            continue;
        };
        let kw = to_f64(vector);
        let d_female = distance_to_list(&kw, &centroid_f)?;
        let d_male = distance_to_list(&kw, &centroid_m)?;
        let difference = d_female - d_male;
        let closer_to = if difference < 0.0 {
            CloserTo::Female
        } else if difference > 0.0 {
            CloserTo::Male
        } else {
            CloserTo::Tie
        };
        rows.push(ClusterDistanceRow {
            keyword: keyword.clone(),
            d_female,
            d_male,
            difference,
            closer_to,
        });
    }

    Ok(DistanceTable {
        mode,
        rows,
        skipped_keywords,
        female_oov: centroid_f.skipped,
        male_oov: centroid_m.skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfidf::RankedTerm;
    use proptest::prelude::*;

    fn space_from(text: &str) -> EmbeddingSpace {
        EmbeddingSpace::from_reader(text.as_bytes()).unwrap().0
    }

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

    #[test]
    fn loads_glove_text() {
        let (space, report) = EmbeddingSpace::from_reader(
            "cat 1.0 0.5 -0.25\ndog 0.0 1.0 2.5\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(space.dim(), 3);
        assert_eq!(space.len(), 2);
        assert_eq!(report.duplicates, 0);
        assert_eq!(space.get("cat").unwrap()[2], -0.25);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = EmbeddingSpace::from_reader("cat 1 2 3\ndog 1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            EmbedError::DimensionMismatch {
                line: 2,
                expected: 3,
                found: 2
            }
        ));
    }

    #[test]
    fn bad_number_and_empty_file_errors() {
        assert!(matches!(
            EmbeddingSpace::from_reader("cat 1 x 3\n".as_bytes()).unwrap_err(),
            EmbedError::BadNumber { line: 1, .. }
        ));
        assert!(matches!(
            EmbeddingSpace::from_reader("".as_bytes()).unwrap_err(),
            EmbedError::EmptyFile
        ));
    }

    #[test]
    fn duplicate_tokens_last_wins() {
        let (space, report) =
            EmbeddingSpace::from_reader("cat 1 0\ncat 0 1\n".as_bytes()).unwrap();
        assert_eq!(report.duplicates, 1);
        assert_eq!(space.get("cat").unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn cosine_axioms() {
        let u = vec![1.0, 2.0, 3.0];
        assert!(cosine_distance(&u, &u).unwrap().abs() < 1e-12);
        assert!((cosine_distance(&[1.0, 2.0], &[-2.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        let w: Vec<f64> = u.iter().map(|x| -x).collect();
        assert!((cosine_distance(&u, &w).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(EmbedError::ZeroNorm)
        ));
        assert!(matches!(
            cosine_distance(&[1.0], &[1.0, 0.0]),
            Err(EmbedError::MixedDimensions(1, 2))
        ));
    }

    #[test]
    fn centroid_cases() {
        let space = space_from("a 1 0\nb 0 1\nanti -1 0\n");
        let one = cluster_centroid(&["a".into()], &space, "t").unwrap();
        assert_eq!(one.centroid, vec![1.0, 0.0]);

        let mixed = cluster_centroid(&["a".into(), "zzz".into()], &space, "t").unwrap();
        assert_eq!(mixed.used, vec!["a"]);
        assert_eq!(mixed.skipped, vec!["zzz"]);

        // antipodal unit vectors average to zero; downstream cosine errors
        let zero = cluster_centroid(&["a".into(), "anti".into()], &space, "t").unwrap();
        assert_eq!(zero.centroid, vec![0.0, 0.0]);
        assert!(matches!(
            cosine_distance(&zero.centroid, &[1.0, 0.0]),
            Err(EmbedError::ZeroNorm)
        ));

        assert!(matches!(
            cluster_centroid(&["nope".into()], &space, "female"),
            Err(EmbedError::AllOutOfVocabulary(_))
        ));
    }

    /// Construct a keyword vector with exact cosine distances to the two
    /// unit-axis centroids.
    fn synthetic_space(d_female: f64, d_male: f64) -> EmbeddingSpace {
        let cf = 1.0 - d_female;
        let cm = 1.0 - d_male;
        let rest = (1.0 - cf * cf - cm * cm).sqrt();
        space_from(&format!(
            "fword 1 0 0\nmword 0 1 0\nprobe {cf} {cm} {rest}\n"
        ))
    }

    #[test]
    fn sign_convention_matches_reference_rows() {
        // death row: d_f 0.83, d_m 0.79 -> difference +0.04 -> male
        let space = synthetic_space(0.83, 0.79);
        let table = keyword_distance_table(
            &list(Gender::Female, &["fword"]),
            &list(Gender::Male, &["mword"]),
            &["probe".to_string()],
            &space,
            DistanceMode::Centroid,
        )
        .unwrap();
        let row = &table.rows[0];
        assert!((row.d_female - 0.83).abs() < 1e-6);
        assert!((row.d_male - 0.79).abs() < 1e-6);
        assert!((row.difference - 0.04).abs() < 1e-6);
        assert_eq!(row.closer_to, CloserTo::Male);

        // pretty row: d_f 0.76, d_m 0.81 -> difference -0.05 -> female
        let space = synthetic_space(0.76, 0.81);
        let table = keyword_distance_table(
            &list(Gender::Female, &["fword"]),
            &list(Gender::Male, &["mword"]),
            &["probe".to_string()],
            &space,
            DistanceMode::Centroid,
        )
        .unwrap();
        let row = &table.rows[0];
        assert!((row.difference + 0.05).abs() < 1e-6);
        assert_eq!(row.closer_to, CloserTo::Female);
    }

    #[test]
    fn equidistant_keyword_is_a_tie() {
        let space = space_from("f 1 0\nm 1 0\nprobe 0 1\n");
        let table = keyword_distance_table(
            &list(Gender::Female, &["f"]),
            &list(Gender::Male, &["m"]),
            &["probe".to_string()],
            &space,
            DistanceMode::Centroid,
        )
        .unwrap();
        assert_eq!(table.rows[0].closer_to, CloserTo::Tie);
        assert_eq!(table.rows[0].difference, 0.0);
    }

    #[test]
    fn oov_keywords_are_reported_not_dropped() {
        let space = space_from("f 1 0\nm 0 1\n");
        let table = keyword_distance_table(
            &list(Gender::Female, &["f"]),
            &list(Gender::Male, &["m"]),
            &["ghost".to_string()],
            &space,
            DistanceMode::Centroid,
        )
        .unwrap();
        assert!(table.rows.is_empty());
        assert_eq!(table.skipped_keywords, vec!["ghost"]);
    }

    #[test]
    fn mean_pairwise_mode_differs_from_centroid() {
        let space = space_from("f1 1 0\nf2 0 1\nm 1 1\nprobe 1 0\n");
        let lists = (
            list(Gender::Female, &["f1", "f2"]),
            list(Gender::Male, &["m"]),
        );
        let kw = vec!["probe".to_string()];
        let centroid =
            keyword_distance_table(&lists.0, &lists.1, &kw, &space, DistanceMode::Centroid)
                .unwrap();
        let mean =
            keyword_distance_table(&lists.0, &lists.1, &kw, &space, DistanceMode::MeanPairwise)
                .unwrap();
        // centroid of f1,f2 = (0.5, 0.5): distance 1 - 1/sqrt(2) ~ 0.293;
        // mean of per-word distances = (0 + 1)/2 = 0.5
        assert!((centroid.rows[0].d_female - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-9);
        assert!((mean.rows[0].d_female - 0.5).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn cosine_symmetry_and_scale_invariance(
            u in proptest::collection::vec(-10.0f64..10.0, 3),
            v in proptest::collection::vec(-10.0f64..10.0, 3),
            a in 0.1f64..50.0,
            b in 0.1f64..50.0,
        ) {
            prop_assume!(u.iter().any(|x| x.abs() > 1e-6));
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            let d1 = cosine_distance(&u, &v).unwrap();
            let d2 = cosine_distance(&v, &u).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
            let ua: Vec<f64> = u.iter().map(|x| a * x).collect();
            let vb: Vec<f64> = v.iter().map(|x| b * x).collect();
            let d3 = cosine_distance(&ua, &vb).unwrap();
            prop_assert!((d1 - d3).abs() < 1e-9);
            prop_assert!((-1e-9..=2.0 + 1e-9).contains(&d1));
        }

        #[test]
        fn centroid_is_permutation_invariant(
            mut words in proptest::collection::vec(0usize..4, 1..8)
        ) {
            let space = space_from("w0 1 0\nw1 0 1\nw2 1 1\nw3 -1 0\n");
            let names: Vec<String> = words.iter().map(|i| format!("w{i}")).collect();
            let c1 = cluster_centroid(&names, &space, "t").unwrap();
            words.reverse();
            let names_rev: Vec<String> = words.iter().map(|i| format!("w{i}")).collect();
            let c2 = cluster_centroid(&names_rev, &space, "t").unwrap();
            for (a, b) in c1.centroid.iter().zip(&c2.centroid) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
