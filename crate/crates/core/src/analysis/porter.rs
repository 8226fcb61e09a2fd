//! Porter stemmer, following the original 1980 algorithm.
//!
//! Words are reduced by the classic five-step suffix-stripping procedure.
//! Tokens that are not pure ASCII letters are returned unchanged; the
//! algorithm is defined over the English alphabet only.

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// Number of VC sequences in the [C](VC)^m[V] decomposition of `stem`.
fn measure(stem: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_cons = match stem.first() {
        Some(_) => is_consonant(stem, 0),
        None => return 0,
    };
    for i in 1..stem.len() {
        let cons = is_consonant(stem, i);
        if cons && !prev_cons {
            m += 1;
        }
        prev_cons = cons;
    }
    m
}

fn contains_vowel(stem: &[u8]) -> bool {
    (0..stem.len()).any(|i| !is_consonant(stem, i))
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// Stem ends consonant-vowel-consonant where the final consonant is not
/// w, x or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn ends_with(w: &[u8], suffix: &str) -> bool {
    w.ends_with(suffix.as_bytes())
}

fn truncate_suffix(w: &mut Vec<u8>, suffix: &str) {
    let keep = w.len() - suffix.len();
    w.truncate(keep);
}

/// Apply the first rule whose suffix matches; the measure condition is then
/// tested on the remaining stem. A matched suffix with a failed condition
/// ends the step without trying later rules.
fn apply_rules(w: &mut Vec<u8>, rules: &[(&str, &str)], min_measure: usize) {
    for (suffix, replacement) in rules {
        if ends_with(w, suffix) {
            let stem_len = w.len() - suffix.len();
            if measure(&w[..stem_len]) >= min_measure {
                w.truncate(stem_len);
                w.extend_from_slice(replacement.as_bytes());
            }
            return;
        }
    }
}

fn step1a(w: &mut Vec<u8>) {
    if ends_with(w, "sses") {
        truncate_suffix(w, "es");
    } else if ends_with(w, "ies") {
        truncate_suffix(w, "es");
    } else if ends_with(w, "ss") {
        // unchanged
    } else if ends_with(w, "s") {
        truncate_suffix(w, "s");
    }
}

fn step1b(w: &mut Vec<u8>) {
    if ends_with(w, "eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            truncate_suffix(w, "d");
        }
        return;
    }
    let stripped = if ends_with(w, "ed") && contains_vowel(&w[..w.len() - 2]) {
        truncate_suffix(w, "ed");
        true
    } else if ends_with(w, "ing") && contains_vowel(&w[..w.len() - 3]) {
        truncate_suffix(w, "ing");
        true
    } else {
        false
    };
    if !stripped {
        return;
    }
    if ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz") {
        w.push(b'e');
    } else if ends_double_consonant(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.pop();
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step1c(w: &mut Vec<u8>) {
    if ends_with(w, "y") && contains_vowel(&w[..w.len() - 1]) {
        let n = w.len();
        w[n - 1] = b'i';
    }
}

const STEP2_RULES: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("abli", "able"),
    ("alli", "al"),
    ("entli", "ent"),
    ("eli", "e"),
    ("ousli", "ous"),
    ("ization", "ize"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("biliti", "ble"),
];

const STEP3_RULES: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

const STEP4_SUFFIXES: &[&str] = &[
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
    "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
];

fn step4(w: &mut Vec<u8>) {
    for suffix in STEP4_SUFFIXES {
        if ends_with(w, suffix) {
            let stem_len = w.len() - suffix.len();
            if measure(&w[..stem_len]) > 1 {
                let stem = &w[..stem_len];
                if *suffix == "ion" && !matches!(stem.last(), Some(b's') | Some(b't')) {
                    return;
                }
                w.truncate(stem_len);
            }
            return;
        }
    }
}

fn step5a(w: &mut Vec<u8>) {
    if ends_with(w, "e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
}

fn step5b(w: &mut Vec<u8>) {
    if measure(w) > 1 && ends_double_consonant(w) && ends_with(w, "l") {
        w.pop();
    }
}

/// Stem a single token. Input is lowercased first; tokens containing
/// anything other than ASCII letters pass through unchanged.
pub fn stem(word: &str) -> String {
    let lower = word.to_lowercase();
    if lower.is_empty() || !lower.bytes().all(|b| b.is_ascii_lowercase()) {
        return lower;
    }
    let mut w = lower.into_bytes();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    apply_rules(&mut w, STEP2_RULES, 1);
    apply_rules(&mut w, STEP3_RULES, 1);
    step4(&mut w);
    step5a(&mut w);
    step5b(&mut w);
    String::from_utf8(w).expect("stemming preserves ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plurals_and_participles() {
        assert_eq!(stem("caresses"), "caress");
        assert_eq!(stem("ponies"), "poni");
        assert_eq!(stem("ties"), "ti");
        assert_eq!(stem("cats"), "cat");
        assert_eq!(stem("feed"), "feed");
        assert_eq!(stem("agreed"), "agre");
        assert_eq!(stem("motoring"), "motor");
        assert_eq!(stem("sing"), "sing");
        assert_eq!(stem("hopping"), "hop");
        assert_eq!(stem("falling"), "fall");
        assert_eq!(stem("hissing"), "hiss");
        assert_eq!(stem("filing"), "file");
    }

    #[test]
    fn spec_examples() {
        assert_eq!(stem("runner"), "runner");
        assert_eq!(stem("shoes"), "shoe");
        assert_eq!(stem("running"), "run");
        assert_eq!(stem("runs"), "run");
        assert_eq!(stem("RUN"), "run");
        assert_eq!(stem("editorial"), "editori");
        assert_eq!(stem("policy"), "polici");
        assert_eq!(stem("publisher"), "publish");
        assert_eq!(stem("funds"), "fund");
        assert_eq!(stem("ownership"), "ownership");
        assert_eq!(stem("sources"), "sourc");
    }

    #[test]
    fn longer_suffixes() {
        assert_eq!(stem("relational"), "relat");
        assert_eq!(stem("electricity"), "electr");
        assert_eq!(stem("hopefulness"), "hope");
        assert_eq!(stem("adoption"), "adopt");
        assert_eq!(stem("replacement"), "replac");
        assert_eq!(stem("dependent"), "depend");
    }

    #[test]
    fn non_alpha_tokens_pass_through() {
        assert_eq!(stem("2024"), "2024");
        assert_eq!(stem("don't"), "don't");
        assert_eq!(stem("café"), "café");
        assert_eq!(stem(""), "");
    }
}
