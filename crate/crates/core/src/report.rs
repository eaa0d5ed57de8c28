//! Per-session fidelity reports: cue types, counts, frequencies, and
//! durations, with a lossless structured form and a human-readable form.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::baseline::BaselineModel;
use crate::classify::rule_classify;
use crate::lexicon::CompiledLexicon;
use crate::text::clean_text;
use crate::transcript::Transcript;
use crate::{CueLabel, Discipline, Error, Result};

/// Per-label counts in fixed label order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct LabelCounts {
    pub guided: u64,
    pub directed: u64,
    pub none: u64,
}

impl LabelCounts {
    pub fn get(&self, label: CueLabel) -> u64 {
        match label {
            CueLabel::Guided => self.guided,
            CueLabel::Directed => self.directed,
            CueLabel::None => self.none,
        }
    }

    fn bump(&mut self, label: CueLabel) {
        match label {
            CueLabel::Guided => self.guided += 1,
            CueLabel::Directed => self.directed += 1,
            CueLabel::None => self.none += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.guided + self.directed + self.none
    }
}

/// Per-label cue frequencies in cues per minute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelFrequencies {
    pub guided: f64,
    pub directed: f64,
    pub none: f64,
}

/// One classified utterance inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueInstance {
    pub utterance_index: usize,
    pub label: CueLabel,
    /// Winning lexicon entry for the rule classifier; absent otherwise.
    pub matched_entry: Option<String>,
    pub start_ms: Option<u64>,
    pub end_ms: Option<u64>,
    /// end_ms - start_ms when both timestamps exist.
    pub duration_ms: Option<u64>,
    /// Cleaned utterance text.
    pub text: String,
}

/// A per-session fidelity report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub session_id: String,
    pub discipline: Discipline,
    pub counts: LabelCounts,
    /// Last end_ms minus first start_ms; absent without timestamps.
    pub session_duration_ms: Option<u64>,
    /// Present iff `session_duration_ms` is present.
    pub frequency_per_minute: Option<LabelFrequencies>,
    pub cue_instances: Vec<CueInstance>,
    pub classifier_id: String,
    /// Lexicon or model version hash (digest of the predictions for
    /// preloaded input).
    pub version_hash: String,
}

/// The classifier driving a session assessment.
pub enum SessionClassifier<'a> {
    Rule(&'a CompiledLexicon),
    Baseline(&'a BaselineModel),
    /// Preloaded predictions keyed `"<session_id>:<utterance_index>"`; must
    /// cover every utterance.
    Preloaded(&'a BTreeMap<String, CueLabel>),
}

/// Classifies every utterance of a transcript and derives counts, and (when
/// timestamps exist) per-minute frequencies and cue durations. Utterances
/// that clean to empty text are counted as None.
pub fn assess_session(
    transcript: &Transcript,
    classifier: &SessionClassifier<'_>,
) -> Result<FidelityReport> {
    if transcript.utterances.is_empty() {
        return Err(Error::validation(format!(
            "transcript {} has no utterances",
            transcript.session_id
        )));
    }
    if let SessionClassifier::Preloaded(predictions) = classifier {
        let missing: Vec<String> = transcript
            .utterances
            .iter()
            .map(|u| format!("{}:{}", transcript.session_id, u.index))
            .filter(|key| !predictions.contains_key(key))
            .collect();
        if !missing.is_empty() {
            return Err(Error::validation(format!(
                "preloaded predictions missing {} utterance(s): {}",
                missing.len(),
                missing.join(", ")
            )));
        }
    }

    let mut counts = LabelCounts::default();
    let mut cue_instances = Vec::with_capacity(transcript.utterances.len());
    for utterance in &transcript.utterances {
        let text = clean_text(&utterance.text);
        let (label, matched_entry) = if text.is_empty() {
            (CueLabel::None, None)
        } else {
            match classifier {
                SessionClassifier::Rule(lexicon) => {
                    let p = rule_classify(lexicon, &text);
                    (p.label, p.matched_entry)
                }
                SessionClassifier::Baseline(model) => (model.predict(&text)?.label, None),
                SessionClassifier::Preloaded(predictions) => {
                    let key = format!("{}:{}", transcript.session_id, utterance.index);
                    (predictions[&key], None)
                }
            }
        };
        counts.bump(label);
        let duration_ms = match (utterance.start_ms, utterance.end_ms) {
            (Some(s), Some(e)) => Some(e - s),
            _ => None,
        };
        cue_instances.push(CueInstance {
            utterance_index: utterance.index,
            label,
            matched_entry,
            start_ms: utterance.start_ms,
            end_ms: utterance.end_ms,
            duration_ms,
            text,
        });
    }

    let session_duration_ms = transcript.duration_ms();
    let frequency_per_minute = session_duration_ms.filter(|&d| d > 0).map(|duration| {
        let minutes = duration as f64 / 60_000.0;
        LabelFrequencies {
            guided: counts.guided as f64 / minutes,
            directed: counts.directed as f64 / minutes,
            none: counts.none as f64 / minutes,
        }
    });

    let (classifier_id, version_hash) = match classifier {
        SessionClassifier::Rule(lexicon) => {
            ("rule".to_string(), lexicon.version_hash().to_string())
        }
        SessionClassifier::Baseline(model) => ("baseline".to_string(), model.digest()),
        SessionClassifier::Preloaded(predictions) => {
            let rendered: String = predictions
                .iter()
                .map(|(k, v)| format!("{k}\t{v}\n"))
                .collect();
            ("preloaded".to_string(), digest_str(&rendered))
        }
    };

    Ok(FidelityReport {
        session_id: transcript.session_id.clone(),
        discipline: transcript.discipline,
        counts,
        session_duration_ms,
        frequency_per_minute,
        cue_instances,
        classifier_id,
        version_hash,
    })
}

fn digest_str(content: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(content.as_bytes());
    let bytes = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Output shape for [`render_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// JSON; [`parse_report`] inverts it losslessly.
    Structured,
    /// Human-readable text.
    Text,
}

pub fn render_report(report: &FidelityReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            let mut json = serde_json::to_string_pretty(report)
                .expect("fidelity report serialization cannot fail");
            json.push('\n');
            json
        }
        ReportFormat::Text => render_text(report),
    }
}

/// Parses the structured form back into a report.
pub fn parse_report(content: &str) -> Result<FidelityReport> {
    serde_json::from_str(content)
        .map_err(|e| Error::validation(format!("bad structured report: {e}")))
}

fn render_text(report: &FidelityReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "session {} ({})\n",
        report.session_id, report.discipline
    ));
    out.push_str(&format!(
        "classifier {} version {}\n",
        report.classifier_id,
        &report.version_hash[..report.version_hash.len().min(12)]
    ));
    out.push_str(&format!(
        "utterances {}\ncounts: guided {} directed {} none {}\n",
        report.counts.total(),
        report.counts.guided,
        report.counts.directed,
        report.counts.none
    ));
    if let Some(duration) = report.session_duration_ms {
        out.push_str(&format!("duration: {:.1} s\n", duration as f64 / 1000.0));
    }
    if let Some(freq) = &report.frequency_per_minute {
        out.push_str(&format!(
            "frequency per minute: guided {:.2} directed {:.2}\n",
            freq.guided, freq.directed
        ));
    }
    let cues: Vec<&CueInstance> = report
        .cue_instances
        .iter()
        .filter(|c| c.label != CueLabel::None)
        .collect();
    if cues.is_empty() {
        out.push_str("cues: none detected\n");
    } else {
        out.push_str("cues:\n");
        for cue in cues {
            let mut line = format!("  [{}] {}", cue.utterance_index, cue.label);
            if let Some(entry) = &cue.matched_entry {
                line.push_str(&format!(" (entry {entry})"));
            }
            if let (Some(s), Some(e)) = (cue.start_ms, cue.end_ms) {
                line.push_str(&format!(
                    " {:.1}s-{:.1}s",
                    s as f64 / 1000.0,
                    e as f64 / 1000.0
                ));
            }
            line.push_str(&format!(": \"{}\"\n", cue.text));
            out.push_str(&line);
        }
    }
    out
}
