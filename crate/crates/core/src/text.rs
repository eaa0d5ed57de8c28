//! Text normalization shared by every classifier path.

use alloc::string::String;
use alloc::vec::Vec;

/// Punctuation stripped during cleaning. Apostrophes are handled separately
/// so contractions survive.
const STRIPPED: &[char] = &['.', ',', '?', '!', ';', ':', '"'];

/// Normalizes raw transcript text into cleaned form: lower-cased, sentence
/// punctuation stripped, apostrophes kept only inside words, and all
/// whitespace collapsed to single spaces with no leading/trailing space.
///
/// Idempotent: cleaning cleaned text is a no-op.
pub fn clean_text(raw: &str) -> String {
    let chars: Vec<char> = raw.chars().collect();
    let mut out = String::with_capacity(raw.len());
    for (i, &c) in chars.iter().enumerate() {
        if STRIPPED.contains(&c) {
            continue;
        }
        if c == '\'' {
            let prev_ok = i > 0 && chars[i - 1].is_alphanumeric();
            let next_ok = i + 1 < chars.len() && chars[i + 1].is_alphanumeric();
            if prev_ok && next_ok {
                out.push('\'');
            }
            continue;
        }
        if c.is_whitespace() {
            out.push(' ');
            continue;
        }
        for lower in c.to_lowercase() {
            out.push(lower);
        }
    }
    let words: Vec<&str> = out.split_whitespace().collect();
    words.join(" ")
}

/// Splits cleaned text on single spaces. Empty text yields no tokens.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split(' ').filter(|t| !t.is_empty()).collect()
}
