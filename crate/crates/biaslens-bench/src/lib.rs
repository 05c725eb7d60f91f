//! Shared input generators for the pipeline benchmarks.

use biaslens::textprep::{Stage, TokenStream};

/// A deterministic pseudo-English word soup with gendered keywords and
/// stopwords sprinkled in, sized by token count.
pub fn synthetic_tokens(count: usize) -> Vec<String> {
    const WORDS: &[&str] = &[
        "the", "village", "mother", "and", "market", "father", "of", "harvest", "boys",
        "girls", "river", "lantern", "king", "queen", "carried", "baskets", "running",
        "carpenter", "evening", "she", "him", "story", "winter", "ladder", "stone",
    ];
    (0..count)
        .map(|i| WORDS[(i * 7 + i / 3) % WORDS.len()].to_string())
        .collect()
}

pub fn synthetic_stream(count: usize, stage: Stage) -> TokenStream {
    TokenStream {
        doc_id: "bench".into(),
        stage,
        tokens: synthetic_tokens(count),
    }
}

/// Raw text form of the same soup, for the normalization benchmarks.
pub fn synthetic_text(count: usize) -> String {
    synthetic_tokens(count).join(" ")
}
