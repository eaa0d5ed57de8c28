//! Gold corpora: construction from annotated transcripts, none-balancing,
//! deterministic splits, and length statistics.
//!
//! Corpus file format: one record per line,
//! `example_id<TAB>label<TAB>discipline<TAB>session_id<TAB>text`,
//! label in {GUIDED, DIRECTED, NONE}.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agreement::AnnotationSet;
use crate::text::{clean_text, tokenize};
use crate::transcript::Transcript;
use crate::{CueLabel, Discipline, Error, Result};

/// Which side of a split a corpus belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitTag {
    Train,
    Validation,
    Test,
    Unsplit,
}

/// A labeled, cleaned utterance with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldExample {
    pub example_id: String,
    /// Cleaned text (no leading/trailing/double spaces, lower-cased).
    pub text: String,
    pub label: CueLabel,
    pub discipline: Discipline,
    pub session_id: String,
}

/// A collection of gold examples with split identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub examples: Vec<GoldExample>,
    pub split_tag: SplitTag,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate example ids.
    pub fn new(examples: Vec<GoldExample>, split_tag: SplitTag) -> Result<Corpus> {
        let mut seen = BTreeSet::new();
        for e in &examples {
            if !seen.insert(e.example_id.as_str()) {
                return Err(Error::validation(format!(
                    "duplicate example_id {:?}",
                    e.example_id
                )));
            }
        }
        Ok(Corpus {
            examples,
            split_tag,
        })
    }

    pub fn label_count(&self, label: CueLabel) -> usize {
        self.examples.iter().filter(|e| e.label == label).count()
    }

    /// Parses corpus file content. The split tag is not stored in the file;
    /// callers assign it.
    pub fn parse(content: &str, split_tag: SplitTag) -> Result<Corpus> {
        let mut examples = Vec::new();
        for (no, line) in content.lines().enumerate() {
            let line_no = no + 1;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 5 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 5 tab-separated fields, found {}", fields.len()),
                ));
            }
            let label =
                CueLabel::from_str(fields[1]).map_err(|e| Error::parse(line_no, format!("{e}")))?;
            let discipline = Discipline::from_str(fields[2])
                .map_err(|e| Error::parse(line_no, format!("{e}")))?;
            examples.push(GoldExample {
                example_id: fields[0].to_string(),
                text: fields[4].to_string(),
                label,
                discipline,
                session_id: fields[3].to_string(),
            });
        }
        Corpus::new(examples, split_tag)
    }

    /// Renders the corpus into file form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.examples {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.example_id, e.label, e.discipline, e.session_id, e.text
            ));
        }
        out
    }
}

/// Result of [`build_gold_corpus`]: the annotated examples plus the pool of
/// unannotated utterances available for none-balancing.
#[derive(Debug, Clone)]
pub struct GoldBuild {
    pub corpus: Corpus,
    pub none_pool: Vec<GoldExample>,
}

/// Aggregates annotated cues from one or more transcripts into a single gold
/// corpus. One example is produced per annotation, its text the cleaned
/// annotated span. Utterances without any annotation become the none-pool
/// (whole cleaned utterance, labeled None); utterances that clean to empty
/// text are dropped from the pool.
pub fn build_gold_corpus(
    transcripts: &[Transcript],
    annotations: &[AnnotationSet],
) -> Result<GoldBuild> {
    let mut examples: Vec<GoldExample> = Vec::new();
    let mut annotated: BTreeSet<(String, usize)> = BTreeSet::new();
    for set in annotations {
        let transcript = transcripts
            .iter()
            .find(|t| t.session_id == set.doc_id)
            .ok_or_else(|| {
                Error::validation(format!(
                    "annotation set for unknown document {:?}",
                    set.doc_id
                ))
            })?;
        for ann in &set.annotations {
            let utterance = transcript
                .utterances
                .get(ann.utterance_index)
                .ok_or_else(|| {
                    Error::validation(format!(
                        "annotation in {}: utterance index {} out of range",
                        set.doc_id, ann.utterance_index
                    ))
                })?;
            let n_chars = utterance.text.chars().count();
            if ann.char_end > n_chars {
                return Err(Error::validation(format!(
                    "annotation in {} utterance {}: span [{}, {}) exceeds text length {}",
                    set.doc_id, ann.utterance_index, ann.char_start, ann.char_end, n_chars
                )));
            }
            let span_text: String = utterance
                .text
                .chars()
                .skip(ann.char_start)
                .take(ann.char_end - ann.char_start)
                .collect();
            annotated.insert((set.doc_id.clone(), ann.utterance_index));
            let example = GoldExample {
                example_id: format!(
                    "{}:{}:{}-{}",
                    set.doc_id, ann.utterance_index, ann.char_start, ann.char_end
                ),
                text: clean_text(&span_text),
                label: ann.label,
                discipline: transcript.discipline,
                session_id: set.doc_id.clone(),
            };
            match examples.iter().find(|e| e.example_id == example.example_id) {
                Some(existing) if existing.label != example.label => {
                    return Err(Error::validation(format!(
                        "conflicting labels for span {} ({} vs {}); merge a consensus first",
                        example.example_id, existing.label, example.label
                    )));
                }
                Some(_) => {} // identical duplicate from a second annotator
                None => examples.push(example),
            }
        }
    }

    let mut none_pool = Vec::new();
    for transcript in transcripts {
        for utterance in &transcript.utterances {
            if annotated.contains(&(transcript.session_id.clone(), utterance.index)) {
                continue;
            }
            let text = clean_text(&utterance.text);
            if text.is_empty() {
                continue;
            }
            none_pool.push(GoldExample {
                example_id: format!("{}:{}:none", transcript.session_id, utterance.index),
                text,
                label: CueLabel::None,
                discipline: transcript.discipline,
                session_id: transcript.session_id.clone(),
            });
        }
    }
    Ok(GoldBuild {
        corpus: Corpus::new(examples, SplitTag::Unsplit)?,
        none_pool,
    })
}

/// Emitted when the none-pool cannot cover the balancing target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceShortfall {
    pub requested: usize,
    pub available: usize,
}

/// Result of [`balance_with_none`].
#[derive(Debug, Clone)]
pub struct BalanceOutcome {
    pub corpus: Corpus,
    pub shortfall: Option<BalanceShortfall>,
}

/// Adds none examples to a cued corpus until the none count reaches
/// k = max(guided, directed). Sampling from the pool is uniform without
/// replacement and deterministic in the seed. A pool smaller than k is
/// consumed whole and reported as a shortfall.
pub fn balance_with_none(
    cued: &Corpus,
    none_pool: &[GoldExample],
    seed: u64,
) -> Result<BalanceOutcome> {
    if cued.examples.iter().any(|e| e.label == CueLabel::None) {
        return Err(Error::validation(
            "cued corpus must contain only guided/directed examples",
        ));
    }
    if let Some(bad) = none_pool.iter().find(|e| e.label != CueLabel::None) {
        return Err(Error::validation(format!(
            "none-pool candidate {} is labeled {}",
            bad.example_id, bad.label
        )));
    }
    let k = cued
        .label_count(CueLabel::Guided)
        .max(cued.label_count(CueLabel::Directed));
    let take = k.min(none_pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, none_pool.len(), take).into_vec();
    picked.sort_unstable();

    let mut examples = cued.examples.clone();
    examples.extend(picked.into_iter().map(|i| none_pool[i].clone()));
    let shortfall = (take < k).then_some(BalanceShortfall {
        requested: k,
        available: none_pool.len(),
    });
    Ok(BalanceOutcome {
        corpus: Corpus::new(examples, cued.split_tag)?,
        shortfall,
    })
}

/// Splits documents into train/validation, stratified per discipline:
/// round(n_d · fraction) documents of each discipline go to train. The
/// shuffle is deterministic in the seed and every document lands on exactly
/// one side.
pub fn split_corpus(
    docs: Vec<Transcript>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<Transcript>, Vec<Transcript>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::validation(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut docs: Vec<Option<Transcript>> = docs.into_iter().map(Some).collect();
    for discipline in Discipline::ALL {
        let mut indices: Vec<usize> = docs
            .iter()
            .enumerate()
            .filter(|(_, d)| d.as_ref().map(|t| t.discipline) == Some(discipline))
            .map(|(i, _)| i)
            .collect();
        indices.shuffle(&mut rng);
        let n_train = libm::round(indices.len() as f64 * train_fraction) as usize;
        for (pos, idx) in indices.into_iter().enumerate() {
            let doc = docs[idx].take().expect("document taken twice");
            if pos < n_train {
                train.push(doc);
            } else {
                validation.push(doc);
            }
        }
    }
    Ok((train, validation))
}

/// Example-level train/validation split of a corpus, stratified per label so
/// balanced corpora stay balanced. Deterministic in the seed.
pub fn split_examples(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::validation(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for label in CueLabel::ALL {
        let mut indices: Vec<usize> = corpus
            .examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == label)
            .map(|(i, _)| i)
            .collect();
        indices.shuffle(&mut rng);
        let n_train = libm::round(indices.len() as f64 * train_fraction) as usize;
        for (pos, idx) in indices.into_iter().enumerate() {
            let example = corpus.examples[idx].clone();
            if pos < n_train {
                train.push(example);
            } else {
                validation.push(example);
            }
        }
    }
    Ok((
        Corpus::new(train, SplitTag::Train)?,
        Corpus::new(validation, SplitTag::Validation)?,
    ))
}

/// Word-length statistics of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub count: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub mean_words: f64,
    /// Requested quantile -> word count, in request order.
    pub quantiles: Vec<(f64, usize)>,
}

/// Computes word-count statistics over cleaned text. Quantile q is the
/// smallest word count w such that at least ceil(q·count) examples have
/// word count <= w (inclusive empirical quantile).
pub fn length_stats(corpus: &Corpus, quantiles: &[f64]) -> Result<LengthStats> {
    if corpus.examples.is_empty() {
        return Err(Error::validation(
            "length_stats requires a non-empty corpus",
        ));
    }
    for &q in quantiles {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::validation(format!("quantile {q} outside [0, 1]")));
        }
    }
    let mut counts: Vec<usize> = corpus
        .examples
        .iter()
        .map(|e| tokenize(&e.text).len())
        .collect();
    counts.sort_unstable();
    let n = counts.len();
    let sum: usize = counts.iter().sum();
    let quantiles = quantiles
        .iter()
        .map(|&q| {
            let rank = libm::ceil(q * n as f64) as usize;
            (q, counts[rank.max(1) - 1])
        })
        .collect();
    Ok(LengthStats {
        count: n,
        min_words: counts[0],
        max_words: counts[n - 1],
        mean_words: sum as f64 / n as f64,
        quantiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agreement::Annotation;
    use alloc::vec;

    fn example(id: &str, label: CueLabel, text: &str) -> GoldExample {
        GoldExample {
            example_id: id.to_string(),
            text: text.to_string(),
            label,
            discipline: Discipline::OT,
            session_id: "s1".to_string(),
        }
    }

    fn transcript(session: &str, discipline: Discipline, texts: &[&str]) -> Transcript {
        Transcript {
            session_id: session.to_string(),
            discipline,
            utterances: texts
                .iter()
                .enumerate()
                .map(|(i, t)| crate::transcript::Utterance {
                    index: i,
                    text: t.to_string(),
                    speaker: None,
                    start_ms: None,
                    end_ms: None,
                })
                .collect(),
        }
    }

    fn annotations(doc: &str, spans: &[(usize, usize, usize, CueLabel)]) -> AnnotationSet {
        AnnotationSet {
            doc_id: doc.to_string(),
            annotator_id: "a".to_string(),
            annotations: spans
                .iter()
                .map(|&(u, s, e, label)| Annotation {
                    utterance_index: u,
                    char_start: s,
                    char_end: e,
                    label,
                })
                .collect(),
        }
    }

    #[test]
    fn build_collects_annotated_cues() {
        let t = transcript(
            "s1",
            Discipline::OT,
            &["What do you think went well?", "Try it this way.", "Okay."],
        );
        let ann = annotations(
            "s1",
            &[
                (0, 0, 28, CueLabel::Guided),
                (0, 0, 4, CueLabel::Guided),
                (1, 0, 16, CueLabel::Directed),
            ],
        );
        let build = build_gold_corpus(&[t], &[ann]).unwrap();
        assert_eq!(build.corpus.examples.len(), 3);
        assert_eq!(build.corpus.label_count(CueLabel::Guided), 2);
        assert_eq!(build.corpus.label_count(CueLabel::Directed), 1);
        // Only the fully unannotated utterance feeds the none pool.
        assert_eq!(build.none_pool.len(), 1);
        assert_eq!(build.none_pool[0].text, "okay");
    }

    #[test]
    fn build_rejects_out_of_range_span() {
        let t = transcript("s1", Discipline::PT, &["short"]);
        let ann = annotations("s1", &[(0, 0, 99, CueLabel::Guided)]);
        let err = build_gold_corpus(&[t], &[ann]).unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("exceeds text length"), "{msg}"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn build_with_no_annotations_yields_full_pool() {
        let t = transcript("s1", Discipline::SLP, &["one", "two"]);
        let build = build_gold_corpus(&[t], &[]).unwrap();
        assert!(build.corpus.examples.is_empty());
        assert_eq!(build.none_pool.len(), 2);
    }

    #[test]
    fn balance_uses_max_of_cue_counts() {
        let mut cued = Vec::new();
        for i in 0..5 {
            cued.push(example(&format!("g{i}"), CueLabel::Guided, "what is this"));
        }
        for i in 0..3 {
            cued.push(example(&format!("d{i}"), CueLabel::Directed, "do it now"));
        }
        let corpus = Corpus::new(cued, SplitTag::Unsplit).unwrap();
        let pool: Vec<GoldExample> = (0..100)
            .map(|i| example(&format!("n{i}"), CueLabel::None, "plain talk"))
            .collect();
        let out = balance_with_none(&corpus, &pool, 7).unwrap();
        assert_eq!(out.corpus.label_count(CueLabel::Guided), 5);
        assert_eq!(out.corpus.label_count(CueLabel::Directed), 3);
        assert_eq!(out.corpus.label_count(CueLabel::None), 5);
        assert!(out.shortfall.is_none());
    }

    #[test]
    fn balance_with_small_pool_warns() {
        let cued = Corpus::new(
            vec![
                example("g0", CueLabel::Guided, "a b"),
                example("g1", CueLabel::Guided, "a b"),
                example("g2", CueLabel::Guided, "a b"),
                example("g3", CueLabel::Guided, "a b"),
                example("d0", CueLabel::Directed, "c d"),
                example("d1", CueLabel::Directed, "c d"),
                example("d2", CueLabel::Directed, "c d"),
                example("d3", CueLabel::Directed, "c d"),
            ],
            SplitTag::Unsplit,
        )
        .unwrap();
        let pool = vec![
            example("n0", CueLabel::None, "x"),
            example("n1", CueLabel::None, "y"),
        ];
        let out = balance_with_none(&cued, &pool, 1).unwrap();
        assert_eq!(out.corpus.label_count(CueLabel::None), 2);
        assert_eq!(
            out.shortfall,
            Some(BalanceShortfall {
                requested: 4,
                available: 2
            })
        );
    }

    #[test]
    fn balance_is_deterministic_and_rejects_none_in_cued() {
        let cued = Corpus::new(
            vec![example("g0", CueLabel::Guided, "a")],
            SplitTag::Unsplit,
        )
        .unwrap();
        let pool: Vec<GoldExample> = (0..50)
            .map(|i| example(&format!("n{i}"), CueLabel::None, "t"))
            .collect();
        let a = balance_with_none(&cued, &pool, 42).unwrap();
        let b = balance_with_none(&cued, &pool, 42).unwrap();
        assert_eq!(a.corpus, b.corpus);

        let with_none =
            Corpus::new(vec![example("n", CueLabel::None, "a")], SplitTag::Unsplit).unwrap();
        assert!(balance_with_none(&with_none, &pool, 0).is_err());
    }

    #[test]
    fn split_is_stratified_seven_three() {
        let mut docs = Vec::new();
        for d in Discipline::ALL {
            for i in 0..10 {
                docs.push(transcript(&format!("{d}-{i}"), d, &["hello there"]));
            }
        }
        let (train, val) = split_corpus(docs, 0.7, 11).unwrap();
        for d in Discipline::ALL {
            assert_eq!(train.iter().filter(|t| t.discipline == d).count(), 7);
            assert_eq!(val.iter().filter(|t| t.discipline == d).count(), 3);
        }
    }

    #[test]
    fn split_of_nothing_is_empty() {
        let (train, val) = split_corpus(Vec::new(), 0.7, 0).unwrap();
        assert!(train.is_empty());
        assert!(val.is_empty());
    }

    #[test]
    fn split_is_deterministic() {
        let docs: Vec<Transcript> = (0..10)
            .map(|i| transcript(&format!("s{i}"), Discipline::PT, &["x"]))
            .collect();
        let (t1, v1) = split_corpus(docs.clone(), 0.7, 5).unwrap();
        let (t2, v2) = split_corpus(docs, 0.7, 5).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(v1, v2);
    }

    #[test]
    fn length_stats_singleton() {
        let corpus = Corpus::new(
            vec![example("e", CueLabel::None, "one two three four five")],
            SplitTag::Unsplit,
        )
        .unwrap();
        let stats = length_stats(&corpus, &[0.5, 1.0]).unwrap();
        assert_eq!(stats.min_words, 5);
        assert_eq!(stats.max_words, 5);
        assert!((stats.mean_words - 5.0).abs() < 1e-12);
        assert_eq!(stats.quantiles, vec![(0.5, 5), (1.0, 5)]);
    }

    #[test]
    fn quantile_one_is_max_and_stats_reject_empty() {
        let corpus = Corpus::new(
            (0..10)
                .map(|i| {
                    let words = vec!["w"; i + 1].join(" ");
                    example(&format!("e{i}"), CueLabel::None, &words)
                })
                .collect(),
            SplitTag::Unsplit,
        )
        .unwrap();
        let stats = length_stats(&corpus, &[1.0, 0.5]).unwrap();
        assert_eq!(stats.quantiles[0], (1.0, stats.max_words));
        assert_eq!(stats.quantiles[1], (0.5, 5));

        let empty = Corpus::new(Vec::new(), SplitTag::Unsplit).unwrap();
        assert!(length_stats(&empty, &[0.5]).is_err());
    }

    #[test]
    fn corpus_codec_round_trip_and_duplicate_detection() {
        let corpus = Corpus::new(
            vec![
                example("a", CueLabel::Guided, "what do you think"),
                example("b", CueLabel::None, "fine thanks"),
            ],
            SplitTag::Unsplit,
        )
        .unwrap();
        let rendered = corpus.render();
        assert_eq!(Corpus::parse(&rendered, SplitTag::Unsplit).unwrap(), corpus);

        let dup = "x\tGUIDED\tOT\ts\thello\nx\tNONE\tOT\ts\tbye\n";
        assert!(Corpus::parse(dup, SplitTag::Unsplit).is_err());
    }
}
