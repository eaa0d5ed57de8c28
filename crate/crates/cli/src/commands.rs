//! Subcommand implementations. Every handler returns `Ok(exit_code)`; usage
//! errors are clap's business, domain failures map to exit code 1.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use cuekit_core::agreement::{
    diff_annotations, krippendorff_alpha, merge_consensus, parse_annotation_file,
    parse_resolutions, render_annotation_sets, units_from_pair, AnnotationSet,
};
use cuekit_core::baseline::{train_baseline, BaselineModel, Hyperparameters};
use cuekit_core::classify::rule_classify;
use cuekit_core::corpus::{
    balance_with_none, build_gold_corpus, length_stats, split_corpus, split_examples, Corpus,
    SplitTag,
};
use cuekit_core::evaluate::{
    load_predictions, metrics_report, predictions_to_map, render_predictions, AverageMode,
};
use cuekit_core::lexicon::{compile_source, CompiledLexicon};
use cuekit_core::report::{
    assess_session, render_report, FidelityReport, ReportFormat, SessionClassifier,
};
use cuekit_core::synth::{generate_synthetic, SynthCounts};
use cuekit_core::text::clean_text;
use cuekit_core::transcript::Transcript;
use cuekit_core::CueLabel;

use crate::io;
use crate::manifest;

fn load_transcript(path: &Path) -> Result<Transcript> {
    Transcript::parse(&io::read(path)?)
        .with_context(|| format!("bad transcript {}", path.display()))
}

fn load_corpus(path: &Path, tag: SplitTag) -> Result<Corpus> {
    Corpus::parse(&io::read(path)?, tag).with_context(|| format!("bad corpus {}", path.display()))
}

fn load_lexicon(path: &Path) -> Result<CompiledLexicon> {
    compile_source(&io::read(path)?).with_context(|| format!("bad lexicon {}", path.display()))
}

/// Transcript files in a directory, sorted by file name for determinism.
fn load_transcript_dir(dir: &Path) -> Result<Vec<Transcript>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut transcripts = Vec::new();
    for path in paths {
        transcripts.push(load_transcript(&path)?);
    }
    if transcripts.is_empty() {
        bail!("no transcript files in {}", dir.display());
    }
    Ok(transcripts)
}

pub fn clean(transcript: &Path, out: &Path, manifest_path: &Option<PathBuf>) -> Result<i32> {
    let mut parsed = load_transcript(transcript)?;
    for utterance in &mut parsed.utterances {
        utterance.text = clean_text(&utterance.text);
    }
    io::write(out, &parsed.render())?;
    manifest::maybe_write(manifest_path, &[transcript], &[out], &[])?;
    println!(
        "cleaned {} utterances -> {}",
        parsed.utterances.len(),
        out.display()
    );
    Ok(0)
}

pub fn corpus_build(
    transcripts_dir: &Path,
    annotations: &Path,
    out: &Path,
    none_pool_out: &Option<PathBuf>,
    manifest_path: &Option<PathBuf>,
) -> Result<i32> {
    let transcripts = load_transcript_dir(transcripts_dir)?;
    let sets = parse_annotation_file(&io::read(annotations)?)?;
    let build = build_gold_corpus(&transcripts, &sets)?;
    io::write(out, &build.corpus.render())?;
    let mut outputs = vec![out];
    if let Some(pool_path) = none_pool_out {
        let pool = Corpus::new(build.none_pool.clone(), SplitTag::Unsplit)?;
        io::write(pool_path, &pool.render())?;
        outputs.push(pool_path);
    }
    manifest::maybe_write(manifest_path, &[annotations], &outputs, &[])?;
    println!(
        "built {} gold examples ({} none-pool candidates)",
        build.corpus.examples.len(),
        build.none_pool.len()
    );
    Ok(0)
}

pub fn corpus_balance(
    input: &Path,
    pool: &Path,
    seed: u64,
    out: &Path,
    manifest_path: &Option<PathBuf>,
) -> Result<i32> {
    let cued = load_corpus(input, SplitTag::Unsplit)?;
    let pool_corpus = load_corpus(pool, SplitTag::Unsplit)?;
    let outcome = balance_with_none(&cued, &pool_corpus.examples, seed)?;
    io::write(out, &outcome.corpus.render())?;
    manifest::maybe_write(manifest_path, &[input, pool], &[out], &[seed])?;
    let counts: Vec<String> = CueLabel::ALL
        .iter()
        .map(|&l| format!("{l} {}", outcome.corpus.label_count(l)))
        .collect();
    println!("balanced corpus: {}", counts.join(", "));
    if let Some(shortfall) = outcome.shortfall {
        eprintln!(
            "warning: none-pool too small: wanted {}, only {} available",
            shortfall.requested, shortfall.available
        );
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn corpus_split(
    input: &Option<PathBuf>,
    transcripts_dir: &Option<PathBuf>,
    fraction: f64,
    seed: u64,
    out_train: &Path,
    out_val: &Path,
    manifest_path: &Option<PathBuf>,
) -> Result<i32> {
    match (input, transcripts_dir) {
        (Some(corpus_path), None) => {
            let corpus = load_corpus(corpus_path, SplitTag::Unsplit)?;
            let (train, val) = split_examples(&corpus, fraction, seed)?;
            io::write(out_train, &train.render())?;
            io::write(out_val, &val.render())?;
            manifest::maybe_write(
                manifest_path,
                &[corpus_path.as_path()],
                &[out_train, out_val],
                &[seed],
            )?;
            println!(
                "split {} examples into {} train / {} validation",
                corpus.examples.len(),
                train.examples.len(),
                val.examples.len()
            );
        }
        (None, Some(dir)) => {
            let docs = load_transcript_dir(dir)?;
            let total = docs.len();
            let (train, val) = split_corpus(docs, fraction, seed)?;
            let list = |docs: &[Transcript]| {
                docs.iter()
                    .map(|d| format!("{}\t{}\n", d.session_id, d.discipline))
                    .collect::<String>()
            };
            io::write(out_train, &list(&train))?;
            io::write(out_val, &list(&val))?;
            manifest::maybe_write(manifest_path, &[], &[out_train, out_val], &[seed])?;
            println!(
                "split {} documents into {} train / {} validation (stratified by discipline)",
                total,
                train.len(),
                val.len()
            );
        }
        _ => bail!("pass exactly one of --in <corpus> or --transcripts <dir>"),
    }
    Ok(0)
}

pub fn corpus_stats(input: &Path, quantiles: &str, out: &Option<PathBuf>) -> Result<i32> {
    let corpus = load_corpus(input, SplitTag::Unsplit)?;
    let quantiles: Vec<f64> = quantiles
        .split(',')
        .map(|q| {
            q.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad quantile {q:?}"))
        })
        .collect::<Result<_>>()?;
    let stats = length_stats(&corpus, &quantiles)?;
    let mut json = serde_json::to_string_pretty(&stats)?;
    json.push('\n');
    match out {
        Some(path) => io::write(path, &json)?,
        None => print!("{json}"),
    }
    Ok(0)
}

pub fn corpus_synth(
    lexicon: &Path,
    counts: &str,
    noise: f64,
    seed: u64,
    out: &Path,
    manifest_path: &Option<PathBuf>,
) -> Result<i32> {
    let compiled = load_lexicon(lexicon)?;
    let counts = parse_counts(counts)?;
    let corpus = generate_synthetic(&compiled, &counts, noise, seed)?;
    io::write(out, &corpus.render())?;
    manifest::maybe_write(manifest_path, &[lexicon], &[out], &[seed])?;
    println!(
        "generated {} synthetic examples ({} guided / {} directed / {} none)",
        corpus.examples.len(),
        counts.guided,
        counts.directed,
        counts.none
    );
    Ok(0)
}

/// Parses `G:200,D:200,N:200` (labels in any order, each at most once).
fn parse_counts(arg: &str) -> Result<SynthCounts> {
    let mut guided = None;
    let mut directed = None;
    let mut none = None;
    for part in arg.split(',') {
        let (key, value) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("bad counts component {part:?}, expected LABEL:N"))?;
        let n: usize = value
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad count {value:?}"))?;
        let slot = match key.trim() {
            "G" => &mut guided,
            "D" => &mut directed,
            "N" => &mut none,
            other => bail!("unknown counts label {other:?} (expected G, D, or N)"),
        };
        if slot.replace(n).is_some() {
            bail!("counts label {key:?} given twice");
        }
    }
    Ok(SynthCounts {
        guided: guided.unwrap_or(0),
        directed: directed.unwrap_or(0),
        none: none.unwrap_or(0),
    })
}

pub fn lexicon_check(file: &Path) -> Result<i32> {
    let compiled = load_lexicon(file)?;
    println!(
        "ok: {} entries, version {}",
        compiled.entries().len(),
        compiled.version_hash()
    );
    Ok(0)
}

pub fn classify_rule(
    lexicon: &Path,
    input: &Path,
    out: &Path,
    manifest_path: &Option<PathBuf>,
) -> Result<i32> {
    let compiled = load_lexicon(lexicon)?;
    let content = io::read(input)?;
    let predictions: Vec<(String, CueLabel)> = if io::looks_like_transcript(&content) {
        let transcript = Transcript::parse(&content)?;
        transcript
            .utterances
            .iter()
            .map(|u| {
                let p = rule_classify(&compiled, &u.text);
                (format!("{}:{}", transcript.session_id, u.index), p.label)
            })
            .collect()
    } else {
        let corpus = Corpus::parse(&content, SplitTag::Unsplit)?;
        corpus
            .examples
            .iter()
            .map(|e| {
                let p = rule_classify(&compiled, &e.text);
                (e.example_id.clone(), p.label)
            })
            .collect()
    };
    io::write(out, &render_predictions(&predictions))?;
    manifest::maybe_write(manifest_path, &[lexicon, input], &[out], &[])?;
    println!(
        "classified {} items -> {}",
        predictions.len(),
        out.display()
    );
    Ok(0)
}

pub fn classify_model(
    model: &Path,
    input: &Path,
    out: &Path,
    manifest_path: &Option<PathBuf>,
) -> Result<i32> {
    let model_content = io::read(model)?;
    let loaded = BaselineModel::load(&model_content)
        .with_context(|| format!("bad model file {}", model.display()))?;
    let corpus = load_corpus(input, SplitTag::Unsplit)?;
    let mut predictions = Vec::with_capacity(corpus.examples.len());
    for example in &corpus.examples {
        let p = loaded
            .predict(&example.text)
            .with_context(|| format!("cannot classify example {}", example.example_id))?;
        predictions.push((example.example_id.clone(), p.label));
    }
    io::write(out, &render_predictions(&predictions))?;
    manifest::maybe_write(manifest_path, &[model, input], &[out], &[loaded.seed()])?;
    println!(
        "classified {} examples -> {}",
        predictions.len(),
        out.display()
    );
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn train(
    corpus: &Path,
    epochs: usize,
    batch: usize,
    learning_rate: f64,
    l2: f64,
    min_frequency: usize,
    max_sequence_length: usize,
    seed: u64,
    out: &Path,
    manifest_path: &Option<PathBuf>,
) -> Result<i32> {
    let train_corpus = load_corpus(corpus, SplitTag::Train)?;
    let hyper = Hyperparameters {
        epochs,
        batch_size: batch,
        learning_rate,
        l2_penalty: l2,
        min_frequency,
        max_sequence_length,
    };
    let trained = train_baseline(&train_corpus, &hyper, seed)?;
    io::write(out, &trained.model.save())?;
    manifest::maybe_write(manifest_path, &[corpus], &[out], &[seed])?;
    let losses: Vec<String> = trained
        .loss_history
        .iter()
        .map(|l| format!("{l:.4}"))
        .collect();
    println!(
        "trained on {} examples, {} features; per-epoch loss: {}",
        train_corpus.examples.len(),
        trained.model.n_features(),
        losses.join(" ")
    );
    Ok(0)
}

/// One annotation set per document per file; `agreement` and `consensus`
/// both pair documents across the two files.
fn paired_sets(a_path: &Path, b_path: &Path) -> Result<Vec<(AnnotationSet, AnnotationSet)>> {
    let a_sets = parse_annotation_file(&io::read(a_path)?)?;
    let b_sets = parse_annotation_file(&io::read(b_path)?)?;
    for (path, sets) in [(a_path, &a_sets), (b_path, &b_sets)] {
        let mut docs: Vec<&str> = sets.iter().map(|s| s.doc_id.as_str()).collect();
        docs.sort_unstable();
        docs.dedup();
        if docs.len() != sets.len() {
            bail!(
                "{} contains more than one annotator for a document; \
                 pass one annotator per file",
                path.display()
            );
        }
    }
    let mut pairs = Vec::new();
    for a in a_sets {
        if let Some(b) = b_sets.iter().find(|b| b.doc_id == a.doc_id) {
            pairs.push((a, b.clone()));
        }
    }
    if pairs.is_empty() {
        bail!("the two annotation files share no documents");
    }
    Ok(pairs)
}

pub fn agreement(
    a: &Path,
    b: &Path,
    min_alpha: Option<f64>,
    transcripts: &[PathBuf],
    out: &Option<PathBuf>,
) -> Result<i32> {
    let pairs = paired_sets(a, b)?;
    let mut utterance_counts: BTreeMap<String, usize> = BTreeMap::new();
    for path in transcripts {
        let t = load_transcript(path)?;
        utterance_counts.insert(t.session_id.clone(), t.utterances.len());
    }

    let mut units = Vec::new();
    let mut disagreements = Vec::new();
    for (set_a, set_b) in &pairs {
        let n = utterance_counts.get(&set_a.doc_id).copied();
        units.extend(units_from_pair(set_a, set_b, n)?);
        disagreements.extend(diff_annotations(set_a, set_b)?);
    }
    let threshold = min_alpha.unwrap_or(0.70);
    let result = krippendorff_alpha(&units, threshold)?;

    match result.alpha {
        Some(alpha) => println!(
            "alpha {:.4} over {} pairable values ({} documents)",
            alpha,
            result.n_pairable_values,
            pairs.len()
        ),
        None => println!(
            "alpha undefined (all {} pairable values agree on one category)",
            result.n_pairable_values
        ),
    }
    if disagreements.is_empty() {
        println!("no disagreements");
    } else {
        println!("disagreements ({}):", disagreements.len());
        for d in &disagreements {
            let describe = |span: &Option<cuekit_core::agreement::Annotation>| match span {
                Some(s) => format!("{} [{}..{})", s.label, s.char_start, s.char_end),
                None => "unannotated".to_string(),
            };
            println!(
                "  {}\tutterance {}\ta: {}\tb: {}",
                d.id,
                d.utterance_index,
                describe(&d.a_span),
                describe(&d.b_span)
            );
        }
    }
    if let Some(path) = out {
        let mut json = serde_json::to_string_pretty(&result)?;
        json.push('\n');
        io::write(path, &json)?;
    }
    if min_alpha.is_some() && !result.passes_gate {
        eprintln!("agreement gate failed: alpha does not exceed {threshold}");
        return Ok(1);
    }
    Ok(0)
}

pub fn consensus(
    a: &Path,
    b: &Path,
    resolutions: &Path,
    out: &Path,
    manifest_path: &Option<PathBuf>,
) -> Result<i32> {
    let pairs = paired_sets(a, b)?;
    let resolution_map = parse_resolutions(&io::read(resolutions)?)?;
    let mut merged = Vec::new();
    for (set_a, set_b) in &pairs {
        merged.push(merge_consensus(set_a, set_b, &resolution_map)?);
    }
    io::write(out, &render_annotation_sets(&merged))?;
    manifest::maybe_write(manifest_path, &[a, b, resolutions], &[out], &[])?;
    let total: usize = merged.iter().map(|s| s.annotations.len()).sum();
    println!(
        "merged {} documents into {} consensus annotations",
        merged.len(),
        total
    );
    Ok(0)
}

pub fn evaluate(
    gold: &Path,
    pred: &Path,
    mode: &str,
    by_discipline: bool,
    out: &Option<PathBuf>,
    manifest_path: &Option<PathBuf>,
) -> Result<i32> {
    let gold_corpus = load_corpus(gold, SplitTag::Unsplit)?;
    let predictions = predictions_to_map(load_predictions(&io::read(pred)?)?);
    let mode = AverageMode::from_str(mode)?;
    let report = metrics_report(&gold_corpus, &predictions, mode, by_discipline)?;

    println!(
        "n {}  {} F1 {:.4}",
        report.n, report.averaging_mode, report.averaged_f1
    );
    for scores in &report.per_class {
        println!(
            "  {}: precision {:.4} recall {:.4} f1 {:.4} (support {})",
            scores.label, scores.precision, scores.recall, scores.f1, scores.support
        );
    }
    if let Some(table) = &report.by_discipline {
        for row in &table.rows {
            println!("  {}: f1 {:.4} (n {})", row.discipline, row.f1, row.n);
        }
        println!("  average {:.4}  pooled {:.4}", table.average, table.pooled);
    }
    if let Some(path) = out {
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        io::write(path, &json)?;
        manifest::maybe_write(manifest_path, &[gold, pred], &[path.as_path()], &[])?;
    }
    Ok(0)
}

pub fn report(
    transcript_path: &Path,
    lexicon: &Option<PathBuf>,
    model: &Option<PathBuf>,
    pred: &Option<PathBuf>,
    out: &Path,
    format: &str,
    manifest_path: &Option<PathBuf>,
) -> Result<i32> {
    let transcript = load_transcript(transcript_path)?;
    let format = match format {
        "structured" => ReportFormat::Structured,
        "text" => ReportFormat::Text,
        other => bail!("unknown report format {other:?} (expected structured or text)"),
    };

    let fidelity: FidelityReport = match (lexicon, model, pred) {
        (Some(lex_path), None, None) => {
            let compiled = load_lexicon(lex_path)?;
            assess_session(&transcript, &SessionClassifier::Rule(&compiled))?
        }
        (None, Some(model_path), None) => {
            let loaded = BaselineModel::load(&io::read(model_path)?)?;
            assess_session(&transcript, &SessionClassifier::Baseline(&loaded))?
        }
        (None, None, Some(pred_path)) => {
            let predictions = predictions_to_map(load_predictions(&io::read(pred_path)?)?);
            assess_session(&transcript, &SessionClassifier::Preloaded(&predictions))?
        }
        _ => bail!("pass exactly one of --lexicon, --model, or --pred"),
    };
    io::write(out, &render_report(&fidelity, format))?;
    manifest::maybe_write(manifest_path, &[transcript_path], &[out], &[])?;
    println!(
        "report for {}: {} guided, {} directed, {} none",
        fidelity.session_id, fidelity.counts.guided, fidelity.counts.directed, fidelity.counts.none
    );
    Ok(0)
}
