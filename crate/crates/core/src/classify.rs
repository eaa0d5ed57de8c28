//! The classifier contract: tokenization-backed vocabulary and encoding,
//! predictions, and the lexicon rule classifier.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::lexicon::CompiledLexicon;
use crate::text::{clean_text, tokenize};
use crate::{CueLabel, Error, Result};

/// Reserved padding id.
pub const PAD_ID: u32 = 0;
/// Reserved unknown-token id.
pub const UNK_ID: u32 = 1;

/// Default encoding window.
pub const DEFAULT_MAX_SEQUENCE_LENGTH: usize = 64;

/// Token-to-id map with reserved padding (0) and unknown (1) ids.
/// Ids are contiguous: token ids start at 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
    min_frequency: usize,
}

impl Vocabulary {
    /// Total id count, reserved ids included.
    pub fn len(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_frequency(&self) -> usize {
        self.min_frequency
    }

    /// Id for a token; unknown tokens map to [`UNK_ID`].
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    /// Token for an id >= 2.
    pub fn token(&self, id: u32) -> Option<&str> {
        if id < 2 {
            return None;
        }
        self.tokens.get(id as usize - 2).map(String::as_str)
    }

    /// Tokens in id order (id 2 first).
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Rebuilds a vocabulary from tokens already in id order.
    pub fn from_ordered_tokens(tokens: Vec<String>, min_frequency: usize) -> Result<Vocabulary> {
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32 + 2).is_some() {
                return Err(Error::validation(alloc::format!(
                    "duplicate vocabulary token {t:?}"
                )));
            }
        }
        Ok(Vocabulary {
            tokens,
            index,
            min_frequency,
        })
    }
}

/// Builds a vocabulary from a corpus: tokens occurring at least
/// `min_frequency` times get ids >= 2, assigned by descending frequency then
/// lexicographic order.
pub fn build_vocab(corpus: &Corpus, min_frequency: usize) -> Result<Vocabulary> {
    if corpus.examples.is_empty() {
        return Err(Error::validation("build_vocab requires a non-empty corpus"));
    }
    if min_frequency == 0 {
        return Err(Error::validation("min_frequency must be at least 1"));
    }
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for example in &corpus.examples {
        for token in tokenize(&example.text) {
            *freq.entry(token).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = freq
        .into_iter()
        .filter(|&(_, count)| count >= min_frequency)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let tokens: Vec<String> = ranked.into_iter().map(|(t, _)| t.to_string()).collect();
    Vocabulary::from_ordered_tokens(tokens, min_frequency)
}

/// A fixed-length encoded token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    /// Exactly `max_sequence_length` ids; positions >= `true_length` are
    /// padding.
    pub ids: Vec<u32>,
    pub true_length: usize,
}

/// Encodes tokens into a fixed window: the first min(len, max) ids followed
/// by padding.
pub fn encode(tokens: &[&str], vocab: &Vocabulary, max_sequence_length: usize) -> EncodedSequence {
    assert!(max_sequence_length >= 1, "max_sequence_length must be >= 1");
    let true_length = tokens.len().min(max_sequence_length);
    let mut ids = Vec::with_capacity(max_sequence_length);
    for token in &tokens[..true_length] {
        ids.push(vocab.id(token));
    }
    ids.resize(max_sequence_length, PAD_ID);
    EncodedSequence { ids, true_length }
}

/// A classifier verdict over one utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: CueLabel,
    /// Probabilities over (Guided, Directed, None) in fixed label order.
    pub probabilities: [f64; 3],
    /// Winning lexicon entry, rule classifier only.
    pub matched_entry: Option<String>,
}

/// Classifies by the top lexicon match: the label of the first match in
/// [`CompiledLexicon::match_utterance`] order, or None when nothing matches.
/// Probabilities are degenerate 0/1. Input is cleaned before matching (a
/// no-op on already-clean text).
pub fn rule_classify(lexicon: &CompiledLexicon, text: &str) -> Prediction {
    let cleaned = clean_text(text);
    let matches = lexicon.match_utterance(&cleaned);
    let (label, matched_entry) = match matches.first() {
        Some(top) => (top.label, Some(top.entry_id.clone())),
        None => (CueLabel::None, None),
    };
    let mut probabilities = [0.0; 3];
    probabilities[label.index()] = 1.0;
    Prediction {
        label,
        probabilities,
        matched_entry,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{GoldExample, SplitTag};
    use crate::lexicon::{compile_source, SEED_LEXICON};
    use crate::Discipline;
    use alloc::vec;

    fn corpus_of(texts: &[&str]) -> Corpus {
        Corpus::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| GoldExample {
                    example_id: alloc::format!("e{i}"),
                    text: t.to_string(),
                    label: CueLabel::None,
                    discipline: Discipline::OT,
                    session_id: "s".to_string(),
                })
                .collect(),
            SplitTag::Unsplit,
        )
        .unwrap()
    }

    #[test]
    fn vocab_applies_frequency_threshold() {
        let mut texts = vec!["you you"; 5];
        texts.push("you plan");
        texts.push("plan plan");
        let corpus = corpus_of(&texts);
        // "you" occurs 11 times, "plan" 3 times.
        let vocab = build_vocab(&corpus, 5).unwrap();
        assert_ne!(vocab.id("you"), UNK_ID);
        assert_eq!(vocab.id("plan"), UNK_ID);
    }

    #[test]
    fn vocab_with_min_frequency_one_keeps_everything() {
        let corpus = corpus_of(&["a b c", "b c d"]);
        let vocab = build_vocab(&corpus, 1).unwrap();
        for token in ["a", "b", "c", "d"] {
            assert!(vocab.id(token) >= 2, "{token} missing");
        }
        assert_eq!(vocab.len(), 6);
    }

    #[test]
    fn vocab_assignment_is_deterministic() {
        let corpus = corpus_of(&["b a", "a c", "c b a"]);
        let v1 = build_vocab(&corpus, 1).unwrap();
        let v2 = build_vocab(&corpus, 1).unwrap();
        assert_eq!(v1, v2);
        // "a" is most frequent, then b/c tie broken lexicographically.
        assert_eq!(v1.id("a"), 2);
        assert_eq!(v1.id("b"), 3);
        assert_eq!(v1.id("c"), 4);
    }

    #[test]
    fn vocab_rejects_empty_corpus() {
        let empty = Corpus::new(Vec::new(), SplitTag::Unsplit).unwrap();
        assert!(build_vocab(&empty, 1).is_err());
    }

    #[test]
    fn encode_pads_to_window() {
        let corpus = corpus_of(&["a b c"]);
        let vocab = build_vocab(&corpus, 1).unwrap();
        let enc = encode(&["a", "b", "c"], &vocab, 64);
        assert_eq!(enc.ids.len(), 64);
        assert_eq!(enc.true_length, 3);
        assert!(enc.ids[3..].iter().all(|&id| id == PAD_ID));
    }

    #[test]
    fn encode_truncates_long_input() {
        let corpus = corpus_of(&["a"]);
        let vocab = build_vocab(&corpus, 1).unwrap();
        let tokens = vec!["a"; 271];
        let enc = encode(&tokens, &vocab, 64);
        assert_eq!(enc.ids.len(), 64);
        assert_eq!(enc.true_length, 64);
    }

    #[test]
    fn encode_empty_is_all_padding() {
        let corpus = corpus_of(&["a"]);
        let vocab = build_vocab(&corpus, 1).unwrap();
        let enc = encode(&[], &vocab, 8);
        assert_eq!(enc.ids, vec![PAD_ID; 8]);
        assert_eq!(enc.true_length, 0);
    }

    #[test]
    fn rule_classifier_matches_coding_scheme_examples() {
        let lex = compile_source(SEED_LEXICON).unwrap();
        let cases = [
            ("do you want to write it out", CueLabel::Guided),
            ("can you say those words backwards", CueLabel::Directed),
            ("the weather is nice today", CueLabel::None),
            ("look better", CueLabel::None),
        ];
        for (text, expected) in cases {
            let p = rule_classify(&lex, text);
            assert_eq!(p.label, expected, "{text}");
            assert_eq!(p.probabilities[expected.index()], 1.0);
        }
        assert!(rule_classify(&lex, "the weather is nice today")
            .matched_entry
            .is_none());
        assert!(rule_classify(&lex, "look better").matched_entry.is_some());
    }
}
