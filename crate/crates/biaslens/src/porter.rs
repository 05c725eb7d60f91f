//! Porter stemmer.
//!
//! Implements the classic suffix-stripping algorithm, steps 1a through 5b,
//! in the form of the author's reference implementation: words of length
//! one or two are left alone, step 2 maps `-bli` to `-ble` (subsuming the
//! originally published `-abli` rule) and includes `-logi` -> `-log`. This
//! is the variant the published reference vocabulary was generated with.
//!
//! Only lowercase ASCII-alphabetic tokens are stemmed; anything else is
//! returned unchanged.

/// Stem a normalized token.
pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut w = word.as_bytes().to_vec();
    step_1a(&mut w);
    step_1b(&mut w);
    step_1c(&mut w);
    step_2(&mut w);
    step_3(&mut w);
    step_4(&mut w);
    step_5a(&mut w);
    step_5b(&mut w);
    String::from_utf8(w).expect("ascii in, ascii out")
}

fn is_cons(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_cons(w, i - 1),
        _ => true,
    }
}

/// The measure m of a word part: the number of vowel-consonant block pairs
/// in [C](VC)^m[V].
fn measure(w: &[u8]) -> usize {
    let n = w.len();
    let mut i = 0;
    let mut m = 0;
    while i < n && is_cons(w, i) {
        i += 1;
    }
    loop {
        while i < n && !is_cons(w, i) {
            i += 1;
        }
        if i >= n {
            return m;
        }
        while i < n && is_cons(w, i) {
            i += 1;
        }
        m += 1;
        if i >= n {
            return m;
        }
    }
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_cons(w, i))
}

/// *d: ends with a doubled consonant.
fn ends_double_cons(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_cons(w, n - 1)
}

/// *o: ends consonant-vowel-consonant where the final consonant is not
/// w, x, or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_cons(w, n - 3)
        && !is_cons(w, n - 2)
        && is_cons(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

// A suffix may consume the whole word (empty stem); the measure and vowel
// conditions then fail on their own, as in the reference implementation.
fn ends(w: &[u8], suffix: &[u8]) -> bool {
    w.ends_with(suffix)
}

fn step_1a(w: &mut Vec<u8>) {
    if w.ends_with(b"sses") || w.ends_with(b"ies") {
        w.truncate(w.len() - 2);
    } else if w.ends_with(b"ss") {
        // keep
    } else if w.ends_with(b"s") {
        w.truncate(w.len() - 1);
    }
}

fn step_1b(w: &mut Vec<u8>) {
    if ends(w, b"eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            w.truncate(w.len() - 1);
        }
        return;
    }
    let cut = if ends(w, b"ed") && has_vowel(&w[..w.len() - 2]) {
        2
    } else if ends(w, b"ing") && has_vowel(&w[..w.len() - 3]) {
        3
    } else {
        return;
    };
    w.truncate(w.len() - cut);
    if w.ends_with(b"at") || w.ends_with(b"bl") || w.ends_with(b"iz") {
        w.push(b'e');
    } else if ends_double_cons(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.truncate(w.len() - 1);
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step_1c(w: &mut [u8]) {
    let n = w.len();
    if n > 1 && w[n - 1] == b'y' && has_vowel(&w[..n - 1]) {
        w[n - 1] = b'i';
    }
}

/// Longest-suffix tables for steps 2-4. Within a step the longest matching
/// suffix is selected first; its condition then decides, and no shorter
/// suffix is retried.
const STEP2: &[(&[u8], &[u8])] = &[
    (b"ational", b"ate"),
    (b"ization", b"ize"),
    (b"iveness", b"ive"),
    (b"fulness", b"ful"),
    (b"ousness", b"ous"),
    (b"tional", b"tion"),
    (b"biliti", b"ble"),
    (b"entli", b"ent"),
    (b"ousli", b"ous"),
    (b"ation", b"ate"),
    (b"alism", b"al"),
    (b"aliti", b"al"),
    (b"iviti", b"ive"),
    (b"enci", b"ence"),
    (b"anci", b"ance"),
    (b"izer", b"ize"),
    (b"alli", b"al"),
    (b"ator", b"ate"),
    (b"logi", b"log"),
    (b"bli", b"ble"),
    (b"eli", b"e"),
];

const STEP3: &[(&[u8], &[u8])] = &[
    (b"icate", b"ic"),
    (b"ative", b""),
    (b"alize", b"al"),
    (b"iciti", b"ic"),
    (b"ical", b"ic"),
    (b"ful", b""),
    (b"ness", b""),
];

fn replace_suffix(w: &mut Vec<u8>, table: &[(&[u8], &[u8])]) {
    for (suffix, replacement) in table {
        if ends(w, suffix) {
            let stem_len = w.len() - suffix.len();
            if measure(&w[..stem_len]) > 0 {
                w.truncate(stem_len);
                w.extend_from_slice(replacement);
            }
            return; // longest match found; no shorter suffix is tried
        }
    }
}

fn step_2(w: &mut Vec<u8>) {
    replace_suffix(w, STEP2);
}

fn step_3(w: &mut Vec<u8>) {
    replace_suffix(w, STEP3);
}

const STEP4: &[&[u8]] = &[
    b"ement", b"ance", b"ence", b"able", b"ible", b"ment", b"ion", b"ant", b"ent", b"ism",
    b"ate", b"iti", b"ous", b"ive", b"ize", b"al", b"er", b"ic", b"ou",
];

fn step_4(w: &mut Vec<u8>) {
    for suffix in STEP4 {
        if !ends(w, suffix) {
            continue;
        }
        let stem_len = w.len() - suffix.len();
        if *suffix == b"ion" && (stem_len == 0 || !matches!(w[stem_len - 1], b's' | b't')) {
            continue; // the s/t guard is part of matching, keep scanning
        }
        if measure(&w[..stem_len]) > 1 {
            w.truncate(stem_len);
        }
        return;
    }
}

fn step_5a(w: &mut Vec<u8>) {
    let n = w.len();
    if n == 0 || w[n - 1] != b'e' {
        return;
    }
    let stem = &w[..n - 1];
    let m = measure(stem);
    if m > 1 || (m == 1 && !ends_cvc(stem)) {
        w.truncate(n - 1);
    }
}

fn step_5b(w: &mut Vec<u8>) {
    if w.ends_with(b"ll") && measure(w) > 1 {
        w.truncate(w.len() - 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(cases: &[(&str, &str)]) {
        for (word, want) in cases {
            assert_eq!(stem(word), *want, "stem({word:?})");
        }
    }

    #[test]
    fn short_and_non_alpha_tokens_pass_through() {
        check(&[("a", "a"), ("by", "by"), ("1984", "1984"), ("mr2", "mr2"), ("", "")]);
    }

    #[test]
    fn step_1a_plurals() {
        check(&[
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("ties", "ti"),
            ("caress", "caress"),
            ("cats", "cat"),
        ]);
    }

    #[test]
    fn step_1b_ed_ing() {
        check(&[
            ("feed", "feed"),
            ("agreed", "agre"),
            ("plastered", "plaster"),
            ("bled", "bled"),
            ("motoring", "motor"),
            ("sing", "sing"),
            ("conflated", "conflat"),
            ("troubled", "troubl"),
            ("sized", "size"),
            ("hopping", "hop"),
            ("tanned", "tan"),
            ("falling", "fall"),
            ("hissing", "hiss"),
            ("fizzed", "fizz"),
            ("failing", "fail"),
            ("filing", "file"),
        ]);
    }

    #[test]
    fn step_1c_y_to_i() {
        check(&[("happy", "happi"), ("sky", "sky"), ("dying", "dy")]);
    }

    #[test]
    fn later_steps_compose() {
        check(&[
            ("generalizations", "gener"),
            ("oscillators", "oscil"),
            ("relational", "relat"),
            ("rational", "ration"),
            ("digitizer", "digit"),
            ("conformably", "conform"),
            ("triplicate", "triplic"),
            ("formative", "form"),
            ("formalize", "formal"),
            ("electricity", "electr"),
            ("hopefulness", "hope"),
            ("revival", "reviv"),
            ("allowance", "allow"),
            ("inference", "infer"),
            ("adjustable", "adjust"),
            ("replacement", "replac"),
            ("dependent", "depend"),
            ("adoption", "adopt"),
            ("communism", "commun"),
            ("activate", "activ"),
            ("probate", "probat"),
            ("rate", "rate"),
            ("cease", "ceas"),
            ("controlling", "control"),
            ("rolling", "roll"),
            ("argument", "argument"),
            ("agreement", "agreement"),
            ("archaeology", "archaeolog"),
            ("abilities", "abil"),
            ("possibly", "possibl"),
        ]);
    }

    #[test]
    fn idempotent_on_common_stems() {
        for word in ["run", "mother", "women", "cook", "travel", "hous"] {
            let once = stem(word);
            assert_eq!(stem(&once), once, "stem not idempotent on {word:?}");
        }
    }
}
