//! Cross-module invariants checked over randomized inputs.

use std::collections::BTreeMap;

use cuekit_core::agreement::krippendorff_alpha;
use cuekit_core::classify::{build_vocab, encode, PAD_ID};
use cuekit_core::corpus::{
    balance_with_none, length_stats, split_corpus, Corpus, GoldExample, SplitTag,
};
use cuekit_core::evaluate::{averaged_f1, per_class_prf, AverageMode, ConfusionMatrix};
use cuekit_core::text::{clean_text, tokenize};
use cuekit_core::transcript::{Transcript, Utterance};
use cuekit_core::{CueLabel, Discipline};
use proptest::prelude::*;

fn label_strategy() -> impl Strategy<Value = CueLabel> {
    prop::sample::select(&CueLabel::ALL)
}

fn example(id: String, label: CueLabel, text: String, discipline: Discipline) -> GoldExample {
    GoldExample {
        example_id: id,
        text,
        label,
        discipline,
        session_id: "prop".to_string(),
    }
}

fn word_strategy() -> impl Strategy<Value = String> {
    "[a-z]{1,6}"
}

fn sentence_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(word_strategy(), 1..12).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn clean_text_is_idempotent(raw in "\\PC{0,80}") {
        let once = clean_text(&raw);
        prop_assert_eq!(clean_text(&once), once);
    }

    #[test]
    fn cleaned_text_has_no_double_spaces_or_stripped_chars(raw in "\\PC{0,80}") {
        let cleaned = clean_text(&raw);
        prop_assert!(!cleaned.contains("  "));
        prop_assert!(!cleaned.starts_with(' ') && !cleaned.ends_with(' '));
        for c in ['.', ',', '?', '!', ';', ':', '"'] {
            prop_assert!(!cleaned.contains(c));
        }
    }

    #[test]
    fn balance_counts_follow_the_max_rule(
        n_guided in 0usize..20,
        n_directed in 0usize..20,
        pool_size in 0usize..40,
        seed in any::<u64>(),
    ) {
        let mut examples = Vec::new();
        for i in 0..n_guided {
            examples.push(example(format!("g{i}"), CueLabel::Guided, "a b".into(), Discipline::OT));
        }
        for i in 0..n_directed {
            examples.push(example(format!("d{i}"), CueLabel::Directed, "c d".into(), Discipline::PT));
        }
        let cued = Corpus::new(examples, SplitTag::Unsplit).unwrap();
        let pool: Vec<GoldExample> = (0..pool_size)
            .map(|i| example(format!("n{i}"), CueLabel::None, "e f".into(), Discipline::SLP))
            .collect();
        let out = balance_with_none(&cued, &pool, seed).unwrap();
        let k = n_guided.max(n_directed);
        prop_assert_eq!(out.corpus.label_count(CueLabel::None), k.min(pool_size));
        prop_assert_eq!(out.corpus.label_count(CueLabel::Guided), n_guided);
        prop_assert_eq!(out.corpus.label_count(CueLabel::Directed), n_directed);
        prop_assert_eq!(out.shortfall.is_some(), pool_size < k);
        // Equal cue counts and a sufficient pool leave all three equal.
        if n_guided == n_directed && pool_size >= k {
            prop_assert_eq!(out.corpus.label_count(CueLabel::None), n_guided);
        }
    }

    #[test]
    fn split_partitions_documents(
        counts in prop::collection::vec(0usize..12, 3),
        seed in any::<u64>(),
    ) {
        let mut docs = Vec::new();
        for (d_idx, &n) in counts.iter().enumerate() {
            for i in 0..n {
                docs.push(Transcript {
                    session_id: format!("{d_idx}-{i}"),
                    discipline: Discipline::ALL[d_idx],
                    utterances: vec![Utterance {
                        index: 0,
                        text: "hello".into(),
                        speaker: None,
                        start_ms: None,
                        end_ms: None,
                    }],
                });
            }
        }
        let all_ids: Vec<String> = docs.iter().map(|d| d.session_id.clone()).collect();
        let (train, val) = split_corpus(docs, 0.7, seed).unwrap();
        let mut seen: Vec<String> = train.iter().chain(val.iter()).map(|d| d.session_id.clone()).collect();
        seen.sort();
        let mut expected = all_ids;
        expected.sort();
        prop_assert_eq!(seen, expected);
        for (d_idx, &n) in counts.iter().enumerate() {
            let d = Discipline::ALL[d_idx];
            let in_train = train.iter().filter(|t| t.discipline == d).count();
            prop_assert_eq!(in_train, (n as f64 * 0.7).round() as usize);
        }
    }

    #[test]
    fn quantiles_are_monotone(
        sentences in prop::collection::vec(sentence_strategy(), 1..30),
        quantiles in prop::collection::vec(0.0f64..=1.0, 1..6),
    ) {
        let corpus = Corpus::new(
            sentences
                .into_iter()
                .enumerate()
                .map(|(i, s)| example(format!("e{i}"), CueLabel::None, s, Discipline::OT))
                .collect(),
            SplitTag::Unsplit,
        )
        .unwrap();
        let mut sorted_q = quantiles.clone();
        sorted_q.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let stats = length_stats(&corpus, &sorted_q).unwrap();
        for pair in stats.quantiles.windows(2) {
            prop_assert!(pair[0].1 <= pair[1].1, "quantiles not monotone: {:?}", stats.quantiles);
        }
        for &(_, wc) in &stats.quantiles {
            prop_assert!(stats.min_words <= wc && wc <= stats.max_words);
        }
    }

    #[test]
    fn encode_is_exact_length_and_recoverable(
        sentences in prop::collection::vec(sentence_strategy(), 1..10),
        max_len in 1usize..80,
    ) {
        let corpus = Corpus::new(
            sentences
                .iter()
                .enumerate()
                .map(|(i, s)| example(format!("e{i}"), CueLabel::None, s.clone(), Discipline::OT))
                .collect(),
            SplitTag::Unsplit,
        )
        .unwrap();
        let vocab = build_vocab(&corpus, 1).unwrap();
        for sentence in &sentences {
            let tokens = tokenize(sentence);
            let encoded = encode(&tokens, &vocab, max_len);
            prop_assert_eq!(encoded.ids.len(), max_len);
            prop_assert_eq!(encoded.true_length, tokens.len().min(max_len));
            prop_assert!(encoded.ids[encoded.true_length..].iter().all(|&id| id == PAD_ID));
            if tokens.len() <= max_len {
                // Un-truncated sequences decode back to their tokens.
                let decoded: Vec<&str> = encoded.ids[..encoded.true_length]
                    .iter()
                    .map(|&id| vocab.token(id).unwrap())
                    .collect();
                prop_assert_eq!(decoded, tokens);
            }
        }
    }

    #[test]
    fn confusion_margins_and_micro_accuracy(
        labels in prop::collection::vec((label_strategy(), label_strategy()), 1..60),
    ) {
        let gold: Vec<CueLabel> = labels.iter().map(|(g, _)| *g).collect();
        let pred: Vec<CueLabel> = labels.iter().map(|(_, p)| *p).collect();
        let matrix = ConfusionMatrix::from_labels(&gold, &pred).unwrap();
        prop_assert_eq!(matrix.total() as usize, gold.len());
        for label in CueLabel::ALL {
            let row = gold.iter().filter(|&&g| g == label).count() as u64;
            let col = pred.iter().filter(|&&p| p == label).count() as u64;
            prop_assert_eq!(matrix.row_sum(label), row);
            prop_assert_eq!(matrix.col_sum(label), col);
        }
        let micro = averaged_f1(&matrix, AverageMode::Micro);
        prop_assert!((micro - matrix.accuracy()).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_is_permutation_invariant(
        labels in prop::collection::vec((label_strategy(), label_strategy()), 1..60),
        swap in prop::sample::select(&[(0usize, 1usize), (0, 2), (1, 2)]),
    ) {
        // Apply the same label transposition to gold and predictions.
        let permute = |l: CueLabel| {
            let i = l.index();
            let j = if i == swap.0 { swap.1 } else if i == swap.1 { swap.0 } else { i };
            CueLabel::from_index(j).unwrap()
        };
        let gold: Vec<CueLabel> = labels.iter().map(|(g, _)| *g).collect();
        let pred: Vec<CueLabel> = labels.iter().map(|(_, p)| *p).collect();
        let gold_p: Vec<CueLabel> = gold.iter().map(|&l| permute(l)).collect();
        let pred_p: Vec<CueLabel> = pred.iter().map(|&l| permute(l)).collect();
        let before = averaged_f1(&ConfusionMatrix::from_labels(&gold, &pred).unwrap(), AverageMode::Macro);
        let after = averaged_f1(&ConfusionMatrix::from_labels(&gold_p, &pred_p).unwrap(), AverageMode::Macro);
        prop_assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn identity_predictions_score_one(
        gold in prop::collection::vec(label_strategy(), 1..40),
    ) {
        let matrix = ConfusionMatrix::from_labels(&gold, &gold).unwrap();
        for scores in per_class_prf(&matrix) {
            if !scores.absent {
                prop_assert_eq!(scores.f1, 1.0);
            }
        }
        prop_assert_eq!(averaged_f1(&matrix, AverageMode::Micro), 1.0);
        // Weighted sums support fractions, so allow summation round-off.
        prop_assert!((averaged_f1(&matrix, AverageMode::Weighted) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_is_symmetric_in_annotators_and_categories(
        pairs in prop::collection::vec((label_strategy(), label_strategy()), 2..40),
        swap in prop::sample::select(&[(0usize, 1usize), (0, 2), (1, 2)]),
    ) {
        let units: Vec<Vec<CueLabel>> = pairs.iter().map(|&(a, b)| vec![a, b]).collect();
        let swapped: Vec<Vec<CueLabel>> = pairs.iter().map(|&(a, b)| vec![b, a]).collect();
        let base = krippendorff_alpha(&units, 0.7).unwrap();
        let flipped = krippendorff_alpha(&swapped, 0.7).unwrap();
        match (base.alpha, flipped.alpha) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }

        let permute = |l: CueLabel| {
            let i = l.index();
            let j = if i == swap.0 { swap.1 } else if i == swap.1 { swap.0 } else { i };
            CueLabel::from_index(j).unwrap()
        };
        let renamed: Vec<Vec<CueLabel>> = pairs
            .iter()
            .map(|&(a, b)| vec![permute(a), permute(b)])
            .collect();
        let renamed_result = krippendorff_alpha(&renamed, 0.7).unwrap();
        match (base.alpha, renamed_result.alpha) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }
}

#[test]
fn preloaded_predictions_drive_reports() {
    // The prediction-ingestion surface used by external models.
    use cuekit_core::report::{assess_session, SessionClassifier};
    let transcript = Transcript {
        session_id: "ext-1".into(),
        discipline: Discipline::PT,
        utterances: (0..3)
            .map(|i| Utterance {
                index: i,
                text: format!("utterance number {i}"),
                speaker: None,
                start_ms: None,
                end_ms: None,
            })
            .collect(),
    };
    let predictions: BTreeMap<String, CueLabel> = [
        ("ext-1:0".to_string(), CueLabel::Guided),
        ("ext-1:1".to_string(), CueLabel::Directed),
        ("ext-1:2".to_string(), CueLabel::None),
    ]
    .into();
    let report = assess_session(&transcript, &SessionClassifier::Preloaded(&predictions)).unwrap();
    assert_eq!(report.counts.guided, 1);
    assert_eq!(report.counts.directed, 1);
    assert_eq!(report.counts.none, 1);
}
