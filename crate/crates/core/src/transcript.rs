//! Session transcripts and their line-oriented file format.
//!
//! Format: a header line `#session=<id> discipline=<OT|PT|SLP>` followed by
//! one utterance per line, `idx<TAB>start_ms<TAB>end_ms<TAB>speaker<TAB>text`,
//! with a literal `-` for absent optional fields. Blank lines and further
//! `#` lines are ignored.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use crate::{Discipline, Error, Result};

/// One transcript line: the unit of classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    /// Ordinal within the transcript, contiguous from 0.
    pub index: usize,
    pub text: String,
    pub speaker: Option<String>,
    pub start_ms: Option<u64>,
    pub end_ms: Option<u64>,
}

/// A session document: ordered utterances plus session metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub session_id: String,
    pub discipline: Discipline,
    pub utterances: Vec<Utterance>,
}

impl Transcript {
    /// Parses transcript file content. Utterances keep file order and their
    /// `idx` column must run contiguously from 0.
    pub fn parse(content: &str) -> Result<Transcript> {
        let mut lines = content.lines().enumerate();
        let (header_no, header) = lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or_else(|| Error::parse(1, "missing header line"))?;
        let (session_id, discipline) = parse_header(header_no + 1, header)?;

        let mut utterances = Vec::new();
        for (no, line) in lines {
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
            let index: usize = fields[0]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad idx field {:?}", fields[0])))?;
            if index != utterances.len() {
                return Err(Error::validation(format!(
                    "line {line_no}: utterance index {index} out of order (expected {})",
                    utterances.len()
                )));
            }
            let start_ms = parse_opt_ms(line_no, "start_ms", fields[1])?;
            let end_ms = parse_opt_ms(line_no, "end_ms", fields[2])?;
            if let (Some(s), Some(e)) = (start_ms, end_ms) {
                if e < s {
                    return Err(Error::validation(format!(
                        "line {line_no}: end_ms {e} precedes start_ms {s}"
                    )));
                }
            }
            let speaker = match fields[3] {
                "-" => None,
                s => Some(s.to_string()),
            };
            utterances.push(Utterance {
                index,
                text: fields[4].to_string(),
                speaker,
                start_ms,
                end_ms,
            });
        }
        Ok(Transcript {
            session_id,
            discipline,
            utterances,
        })
    }

    /// Renders the transcript back into file form.
    pub fn render(&self) -> String {
        let mut out = format!(
            "#session={} discipline={}\n",
            self.session_id, self.discipline
        );
        for u in &self.utterances {
            let start = u
                .start_ms
                .map_or_else(|| "-".to_string(), |v| v.to_string());
            let end = u.end_ms.map_or_else(|| "-".to_string(), |v| v.to_string());
            let speaker = u.speaker.as_deref().unwrap_or("-");
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                u.index, start, end, speaker, u.text
            ));
        }
        out
    }

    /// Session duration as last `end_ms` minus first `start_ms`, when both
    /// exist anywhere in the transcript.
    pub fn duration_ms(&self) -> Option<u64> {
        let first = self.utterances.iter().find_map(|u| u.start_ms)?;
        let last = self.utterances.iter().rev().find_map(|u| u.end_ms)?;
        Some(last.saturating_sub(first))
    }
}

fn parse_header(line_no: usize, header: &str) -> Result<(String, Discipline)> {
    let mut session = None;
    let mut discipline = None;
    if !header.starts_with('#') {
        return Err(Error::parse(line_no, "header must start with '#session='"));
    }
    for part in header.trim_start_matches('#').split_whitespace() {
        if let Some(id) = part.strip_prefix("session=") {
            session = Some(id.to_string());
        } else if let Some(d) = part.strip_prefix("discipline=") {
            discipline = Some(Discipline::from_str(d)?);
        } else {
            return Err(Error::parse(
                line_no,
                format!("unknown header field {part:?}"),
            ));
        }
    }
    let session_id = session.ok_or_else(|| Error::parse(line_no, "header missing session="))?;
    if session_id.is_empty() {
        return Err(Error::validation(
            "session id must be non-empty".to_string(),
        ));
    }
    let discipline =
        discipline.ok_or_else(|| Error::parse(line_no, "header missing discipline="))?;
    Ok((session_id, discipline))
}

fn parse_opt_ms(line_no: usize, field: &str, value: &str) -> Result<Option<u64>> {
    if value == "-" {
        return Ok(None);
    }
    value
        .parse::<u64>()
        .map(Some)
        .map_err(|_| Error::parse(line_no, format!("bad {field} field {value:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "#session=ot-01 discipline=OT\n\
        0\t0\t4000\ttherapist\tWhat do you think went well?\n\
        1\t4000\t9000\tpatient\tI think the plan worked.\n\
        2\t9000\t12000\t-\tLet's try that again.\n";

    #[test]
    fn parses_three_utterances_in_order() {
        let t = Transcript::parse(SAMPLE).unwrap();
        assert_eq!(t.session_id, "ot-01");
        assert_eq!(t.discipline, Discipline::OT);
        assert_eq!(t.utterances.len(), 3);
        for (i, u) in t.utterances.iter().enumerate() {
            assert_eq!(u.index, i);
        }
        assert_eq!(t.utterances[2].speaker, None);
    }

    #[test]
    fn unknown_discipline_is_a_validation_error() {
        let err = Transcript::parse("#session=s discipline=XYZ\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn reversed_timestamps_are_rejected() {
        let bad = "#session=s discipline=PT\n0\t5000\t4000\t-\thello\n";
        let err = Transcript::parse(bad).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_line_names_the_line() {
        let bad = "#session=s discipline=PT\n0\t1\t2\thello\n";
        match Transcript::parse(bad).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn non_contiguous_indices_are_rejected() {
        let bad = "#session=s discipline=PT\n1\t-\t-\t-\thello\n";
        assert!(Transcript::parse(bad).is_err());
    }

    #[test]
    fn render_parse_round_trip() {
        let t = Transcript::parse(SAMPLE).unwrap();
        assert_eq!(Transcript::parse(&t.render()).unwrap(), t);
    }

    #[test]
    fn duration_spans_first_start_to_last_end() {
        let t = Transcript::parse(SAMPLE).unwrap();
        assert_eq!(t.duration_ms(), Some(12000));
        let no_ts = "#session=s discipline=SLP\n0\t-\t-\t-\thi there\n";
        assert_eq!(Transcript::parse(no_ts).unwrap().duration_ms(), None);
    }
}
