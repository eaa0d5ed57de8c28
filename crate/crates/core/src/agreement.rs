//! Dual-annotation consensus workflow: annotation sets, disagreement
//! listing, consensus merging, and Krippendorff's alpha for nominal data.
//!
//! Annotation file format: one record per line,
//! `doc_id<TAB>annotator_id<TAB>utterance_index<TAB>char_start<TAB>char_end<TAB>LABEL`.
//! Resolution file format: `disagreement_id<TAB>LABEL`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{CueLabel, Error, Result};

/// A labeled character span inside one utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub utterance_index: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub label: CueLabel,
}

/// All annotations one annotator produced for one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSet {
    pub doc_id: String,
    pub annotator_id: String,
    pub annotations: Vec<Annotation>,
}

/// Parses an annotation file into sets grouped by (doc, annotator) in
/// first-seen order.
pub fn parse_annotation_file(content: &str) -> Result<Vec<AnnotationSet>> {
    let mut sets: Vec<AnnotationSet> = Vec::new();
    for (no, line) in content.lines().enumerate() {
        let line_no = no + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                line_no,
                format!("expected 6 tab-separated fields, found {}", fields.len()),
            ));
        }
        let utterance_index: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad utterance_index {:?}", fields[2])))?;
        let char_start: usize = fields[3]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad char_start {:?}", fields[3])))?;
        let char_end: usize = fields[4]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad char_end {:?}", fields[4])))?;
        if char_start >= char_end {
            return Err(Error::parse(
                line_no,
                format!("span [{char_start}, {char_end}) is empty or reversed"),
            ));
        }
        let label =
            CueLabel::from_str(fields[5]).map_err(|e| Error::parse(line_no, format!("{e}")))?;
        let annotation = Annotation {
            utterance_index,
            char_start,
            char_end,
            label,
        };
        match sets
            .iter_mut()
            .find(|s| s.doc_id == fields[0] && s.annotator_id == fields[1])
        {
            Some(set) => set.annotations.push(annotation),
            None => sets.push(AnnotationSet {
                doc_id: fields[0].to_string(),
                annotator_id: fields[1].to_string(),
                annotations: alloc::vec![annotation],
            }),
        }
    }
    Ok(sets)
}

/// Renders annotation sets back into file form.
pub fn render_annotation_sets(sets: &[AnnotationSet]) -> String {
    let mut out = String::new();
    for set in sets {
        for a in &set.annotations {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                set.doc_id, set.annotator_id, a.utterance_index, a.char_start, a.char_end, a.label
            ));
        }
    }
    out
}

/// Outcome of a Krippendorff alpha computation over nominal labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    /// `None` when expected disagreement is zero (all values identical).
    pub alpha: Option<f64>,
    pub n_pairable_values: usize,
    /// Coincidence matrix in fixed label order (Guided, Directed, None).
    pub coincidence_matrix: [[f64; 3]; 3],
    pub observed_disagreement: f64,
    pub expected_disagreement: f64,
    pub threshold: f64,
    pub passes_gate: bool,
    /// Set when all pairable values fall in a single category.
    pub degenerate: bool,
}

/// The acceptance gate: alpha must strictly exceed the threshold.
pub fn passes_threshold(alpha: f64, threshold: f64) -> bool {
    alpha > threshold
}

/// Computes Krippendorff's alpha with the nominal difference function from
/// per-unit label assignments. Units with fewer than two labels are
/// excluded. `passes_gate` is strict: alpha must exceed the threshold.
///
/// With o the coincidence matrix built from pairable values and n its total:
/// Do = (1/n)·sum over c≠k of o(c,k), De = (n² − sum of n_c²)/(n(n−1)),
/// alpha = 1 − Do/De.
pub fn krippendorff_alpha(units: &[Vec<CueLabel>], threshold: f64) -> Result<AgreementResult> {
    let mut coincidence = [[0.0f64; 3]; 3];
    let mut n_pairable = 0usize;
    for unit in units {
        let m = unit.len();
        if m < 2 {
            continue;
        }
        n_pairable += m;
        let weight = 1.0 / (m as f64 - 1.0);
        for (i, &a) in unit.iter().enumerate() {
            for (j, &b) in unit.iter().enumerate() {
                if i != j {
                    coincidence[a.index()][b.index()] += weight;
                }
            }
        }
    }
    if n_pairable == 0 {
        return Err(Error::validation(
            "no pairable values: every unit has fewer than two labels",
        ));
    }
    let n = n_pairable as f64;
    let mut observed = 0.0;
    let mut sum_sq_marginals = 0.0;
    for c in 0..3 {
        let marginal: f64 = coincidence[c].iter().sum();
        sum_sq_marginals += marginal * marginal;
        for k in 0..3 {
            if c != k {
                observed += coincidence[c][k];
            }
        }
    }
    let observed_disagreement = observed / n;
    let expected_disagreement = (n * n - sum_sq_marginals) / (n * (n - 1.0));
    if expected_disagreement <= 0.0 {
        // All values in one category: agreement is trivially perfect but
        // alpha itself is undefined.
        return Ok(AgreementResult {
            alpha: None,
            n_pairable_values: n_pairable,
            coincidence_matrix: coincidence,
            observed_disagreement,
            expected_disagreement: 0.0,
            threshold,
            passes_gate: true,
            degenerate: true,
        });
    }
    let alpha = 1.0 - observed_disagreement / expected_disagreement;
    Ok(AgreementResult {
        alpha: Some(alpha),
        n_pairable_values: n_pairable,
        coincidence_matrix: coincidence,
        observed_disagreement,
        expected_disagreement,
        threshold,
        passes_gate: passes_threshold(alpha, threshold),
        degenerate: false,
    })
}

/// Builds utterance-level alpha units from two annotation sets over the same
/// document.
///
/// Each annotator's utterance label is the label of their longest span in
/// that utterance (ties: earliest start, then label order). An utterance one
/// annotator left unannotated counts as `None` for them. With
/// `n_utterances` given, every utterance of the document becomes a unit;
/// otherwise only utterances annotated by at least one side do.
pub fn units_from_pair(
    a: &AnnotationSet,
    b: &AnnotationSet,
    n_utterances: Option<usize>,
) -> Result<Vec<Vec<CueLabel>>> {
    if a.doc_id != b.doc_id {
        return Err(Error::validation(format!(
            "annotation sets cover different documents ({} vs {})",
            a.doc_id, b.doc_id
        )));
    }
    let indices: Vec<usize> = match n_utterances {
        Some(n) => (0..n).collect(),
        None => {
            let mut all: Vec<usize> = a
                .annotations
                .iter()
                .chain(b.annotations.iter())
                .map(|ann| ann.utterance_index)
                .collect();
            all.sort_unstable();
            all.dedup();
            all
        }
    };
    Ok(indices
        .into_iter()
        .map(|u| {
            alloc::vec![
                utterance_label(a, u).unwrap_or(CueLabel::None),
                utterance_label(b, u).unwrap_or(CueLabel::None),
            ]
        })
        .collect())
}

fn utterance_label(set: &AnnotationSet, utterance: usize) -> Option<CueLabel> {
    set.annotations
        .iter()
        .filter(|a| a.utterance_index == utterance)
        .min_by_key(|a| {
            (
                core::cmp::Reverse(a.char_end - a.char_start),
                a.char_start,
                a.label.index(),
            )
        })
        .map(|a| a.label)
}

/// A span-level conflict between two annotators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    /// Stable id derived from document order; resolutions reference it.
    pub id: String,
    pub doc_id: String,
    pub utterance_index: usize,
    /// Annotator a's span and label, absent for a one-sided b span.
    pub a_span: Option<Annotation>,
    /// Annotator b's span and label, absent for a one-sided a span.
    pub b_span: Option<Annotation>,
    pub resolution: Option<CueLabel>,
}

/// Lists all span-level disagreements between two annotation sets over the
/// same document. Spans conflict when they overlap by at least one character
/// in the same utterance and carry different labels; a span with no
/// overlapping counterpart is a one-sided disagreement.
pub fn diff_annotations(a: &AnnotationSet, b: &AnnotationSet) -> Result<Vec<Disagreement>> {
    if a.doc_id != b.doc_id {
        return Err(Error::validation(format!(
            "annotation sets cover different documents ({} vs {})",
            a.doc_id, b.doc_id
        )));
    }
    let mut utterances: Vec<usize> = a
        .annotations
        .iter()
        .chain(b.annotations.iter())
        .map(|ann| ann.utterance_index)
        .collect();
    utterances.sort_unstable();
    utterances.dedup();

    let mut raw: Vec<(usize, usize, Option<Annotation>, Option<Annotation>)> = Vec::new();
    for u in utterances {
        let (pairs, lone_a, lone_b) = pair_spans(a, b, u);
        for (sa, sb) in pairs {
            if sa.label != sb.label {
                raw.push((u, sa.char_start.min(sb.char_start), Some(sa), Some(sb)));
            }
        }
        for sa in lone_a {
            raw.push((u, sa.char_start, Some(sa), None));
        }
        for sb in lone_b {
            raw.push((u, sb.char_start, None, Some(sb)));
        }
    }
    raw.sort_by_key(|(u, start, _, _)| (*u, *start));
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(i, (u, _, a_span, b_span))| Disagreement {
            id: format!("{}:d{}", a.doc_id, i),
            doc_id: a.doc_id.clone(),
            utterance_index: u,
            a_span,
            b_span,
            resolution: None,
        })
        .collect())
}

/// Greedy one-to-one pairing of overlapping spans within one utterance.
fn pair_spans(
    a: &AnnotationSet,
    b: &AnnotationSet,
    utterance: usize,
) -> (
    Vec<(Annotation, Annotation)>,
    Vec<Annotation>,
    Vec<Annotation>,
) {
    let spans_of = |set: &AnnotationSet| {
        let mut spans: Vec<Annotation> = set
            .annotations
            .iter()
            .filter(|ann| ann.utterance_index == utterance)
            .copied()
            .collect();
        spans.sort_by_key(|s| (s.char_start, s.char_end, s.label.index()));
        spans
    };
    let a_spans = spans_of(a);
    let b_spans = spans_of(b);
    let mut used_b = alloc::vec![false; b_spans.len()];
    let mut pairs = Vec::new();
    let mut lone_a = Vec::new();
    for sa in a_spans {
        let hit = (0..b_spans.len()).find(|&i| {
            !used_b[i] && sa.char_start < b_spans[i].char_end && b_spans[i].char_start < sa.char_end
        });
        match hit {
            Some(i) => {
                used_b[i] = true;
                pairs.push((sa, b_spans[i]));
            }
            None => lone_a.push(sa),
        }
    }
    let lone_b = b_spans
        .iter()
        .zip(used_b.iter())
        .filter(|(_, used)| !**used)
        .map(|(s, _)| *s)
        .collect();
    (pairs, lone_a, lone_b)
}

/// Merges two annotation sets into a consensus set. Agreed overlapping spans
/// pass through (as the union extent); every disagreement must have a
/// resolution, which supplies the merged span's label.
pub fn merge_consensus(
    a: &AnnotationSet,
    b: &AnnotationSet,
    resolutions: &BTreeMap<String, CueLabel>,
) -> Result<AnnotationSet> {
    let diffs = diff_annotations(a, b)?;
    let unresolved: Vec<&str> = diffs
        .iter()
        .filter(|d| !resolutions.contains_key(&d.id))
        .map(|d| d.id.as_str())
        .collect();
    if !unresolved.is_empty() {
        return Err(Error::validation(format!(
            "unresolved disagreements: {}",
            unresolved.join(", ")
        )));
    }

    let mut merged: Vec<Annotation> = Vec::new();
    let mut utterances: Vec<usize> = a
        .annotations
        .iter()
        .chain(b.annotations.iter())
        .map(|ann| ann.utterance_index)
        .collect();
    utterances.sort_unstable();
    utterances.dedup();
    for u in utterances {
        let (pairs, _, _) = pair_spans(a, b, u);
        for (sa, sb) in pairs {
            if sa.label == sb.label {
                merged.push(Annotation {
                    utterance_index: u,
                    char_start: sa.char_start.min(sb.char_start),
                    char_end: sa.char_end.max(sb.char_end),
                    label: sa.label,
                });
            }
        }
    }
    for d in &diffs {
        let label = resolutions[&d.id];
        let (start, end) = match (&d.a_span, &d.b_span) {
            (Some(sa), Some(sb)) => (
                sa.char_start.min(sb.char_start),
                sa.char_end.max(sb.char_end),
            ),
            (Some(sa), None) => (sa.char_start, sa.char_end),
            (None, Some(sb)) => (sb.char_start, sb.char_end),
            (None, None) => unreachable!("disagreement without spans"),
        };
        merged.push(Annotation {
            utterance_index: d.utterance_index,
            char_start: start,
            char_end: end,
            label,
        });
    }
    merged.sort_by_key(|s| (s.utterance_index, s.char_start, s.char_end, s.label.index()));
    merged.dedup();
    Ok(AnnotationSet {
        doc_id: a.doc_id.clone(),
        annotator_id: "consensus".to_string(),
        annotations: merged,
    })
}

/// Parses a resolution file (`disagreement_id<TAB>LABEL` per line).
pub fn parse_resolutions(content: &str) -> Result<BTreeMap<String, CueLabel>> {
    let mut out = BTreeMap::new();
    for (no, line) in content.lines().enumerate() {
        let line_no = no + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                line_no,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let label =
            CueLabel::from_str(fields[1]).map_err(|e| Error::parse(line_no, format!("{e}")))?;
        if out.insert(fields[0].to_string(), label).is_some() {
            return Err(Error::parse(
                line_no,
                format!("duplicate resolution for {:?}", fields[0]),
            ));
        }
    }
    Ok(out)
}
