//! The fidelity-assessment lexicon: a small token-level pattern grammar,
//! its parser, and a deterministic trie-backed matcher.
//!
//! Lexicon file format: UTF-8 lines
//! `entry_id<TAB>priority<TAB>anchor(^ or -)<TAB>pattern<TAB>LABEL[<TAB>note]`,
//! `#` starts a comment line.
//!
//! Pattern grammar (exact): tokens separated by single spaces;
//! `(a|b c|d)` alternation over token sequences; `tok?` or `(...)?`
//! optional; no nesting of alternation inside alternation. Tokens are
//! lower-cased at parse time so matching over cleaned text is
//! case-insensitive by construction.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use sha2::{Digest, Sha256};

use crate::text::tokenize;
use crate::{CueLabel, Error, Result};

/// The seed lexicon shipped with the toolkit, reconstructed from the
/// strategy-training coding scheme's trigger phrases.
pub const SEED_LEXICON: &str = include_str!("../data/seed_lexicon.tsv");

/// Upper bound on concrete token sequences a single pattern may expand to.
const MAX_EXPANSIONS: usize = 4096;

/// One pattern atom: a literal token, an alternation over token sequences,
/// or an optional wrapper around one of those.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternAtom {
    Literal(String),
    Alternation(Vec<Vec<String>>),
    Optional(Box<PatternAtom>),
}

/// A parsed pattern: a sequence of atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternTree {
    pub atoms: Vec<PatternAtom>,
}

impl PatternTree {
    /// All concrete token sequences this pattern accepts, sorted and
    /// deduplicated.
    pub fn expansions(&self) -> Vec<Vec<String>> {
        let mut seqs: Vec<Vec<String>> = alloc::vec![Vec::new()];
        for atom in &self.atoms {
            seqs = expand_atom(atom, &seqs);
        }
        seqs.sort();
        seqs.dedup();
        seqs.retain(|s| !s.is_empty());
        seqs
    }

    /// Canonical text form in the lexicon grammar.
    pub fn render(&self) -> String {
        let parts: Vec<String> = self.atoms.iter().map(render_atom).collect();
        parts.join(" ")
    }
}

fn expand_atom(atom: &PatternAtom, prefixes: &[Vec<String>]) -> Vec<Vec<String>> {
    match atom {
        PatternAtom::Literal(tok) => prefixes
            .iter()
            .map(|p| {
                let mut next = p.clone();
                next.push(tok.clone());
                next
            })
            .collect(),
        PatternAtom::Alternation(branches) => {
            let mut out = Vec::with_capacity(prefixes.len() * branches.len());
            for p in prefixes {
                for branch in branches {
                    let mut next = p.clone();
                    next.extend(branch.iter().cloned());
                    out.push(next);
                }
            }
            out
        }
        PatternAtom::Optional(inner) => {
            let mut out = prefixes.to_vec();
            out.extend(expand_atom(inner, prefixes));
            out
        }
    }
}

fn render_atom(atom: &PatternAtom) -> String {
    match atom {
        PatternAtom::Literal(tok) => tok.clone(),
        PatternAtom::Alternation(branches) => {
            let parts: Vec<String> = branches.iter().map(|b| b.join(" ")).collect();
            format!("({})", parts.join("|"))
        }
        PatternAtom::Optional(inner) => match inner.as_ref() {
            PatternAtom::Literal(tok) => format!("{tok}?"),
            other => format!("{}?", render_atom(other)),
        },
    }
}

/// One lexicon rule: a pattern with label, priority, and anchoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub entry_id: String,
    /// Higher priority wins at match-resolution time.
    pub priority: i32,
    /// Anchored entries match only at the first token of an utterance.
    pub anchored: bool,
    pub pattern: PatternTree,
    pub label: CueLabel,
    pub source_note: Option<String>,
}

/// Parses lexicon file content into entries, reporting grammar errors with
/// line numbers.
pub fn parse_lexicon(source: &str) -> Result<Vec<LexiconEntry>> {
    let mut entries: Vec<LexiconEntry> = Vec::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();
    for (no, line) in source.lines().enumerate() {
        let line_no = no + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 5 && fields.len() != 6 {
            return Err(Error::parse(
                line_no,
                format!(
                    "expected 5 or 6 tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        let entry_id = fields[0].trim().to_string();
        if entry_id.is_empty() {
            return Err(Error::parse(line_no, "empty entry_id"));
        }
        if !seen_ids.insert(entry_id.clone()) {
            return Err(Error::parse(
                line_no,
                format!("duplicate entry_id {entry_id:?}"),
            ));
        }
        let priority: i32 = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad priority {:?}", fields[1])))?;
        let anchored = match fields[2].trim() {
            "^" => true,
            "-" => false,
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("anchor flag must be ^ or -, found {other:?}"),
                ))
            }
        };
        let pattern = parse_pattern(line_no, fields[3].trim())?;
        let label = CueLabel::from_str(fields[4].trim())
            .map_err(|e| Error::parse(line_no, format!("{e}")))?;
        let source_note = fields.get(5).map(|s| s.trim().to_string());
        entries.push(LexiconEntry {
            entry_id,
            priority,
            anchored,
            pattern,
            label,
            source_note,
        });
    }
    Ok(entries)
}

/// Canonical file form of a list of entries; `parse_lexicon` inverts it.
pub fn render_lexicon(entries: &[LexiconEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let anchor = if e.anchored { "^" } else { "-" };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}",
            e.entry_id,
            e.priority,
            anchor,
            e.pattern.render(),
            e.label
        ));
        if let Some(note) = &e.source_note {
            out.push('\t');
            out.push_str(note);
        }
        out.push('\n');
    }
    out
}

fn parse_pattern(line_no: usize, pattern: &str) -> Result<PatternTree> {
    if pattern.is_empty() {
        return Err(Error::parse(line_no, "empty pattern"));
    }
    let mut atoms = Vec::new();
    let mut rest = pattern;
    while !rest.is_empty() {
        rest = rest.trim_start_matches(' ');
        if rest.is_empty() {
            break;
        }
        if let Some(after_open) = rest.strip_prefix('(') {
            let close = after_open.find(')').ok_or_else(|| {
                Error::parse(line_no, "unbalanced alternation group: missing ')'")
            })?;
            let inner = &after_open[..close];
            if inner.contains('(') {
                return Err(Error::parse(
                    line_no,
                    "nested alternation groups are not supported",
                ));
            }
            let mut branches = Vec::new();
            for branch in inner.split('|') {
                let tokens: Vec<String> = branch
                    .split_whitespace()
                    .map(|t| validate_token(line_no, t))
                    .collect::<Result<_>>()?;
                if tokens.is_empty() {
                    return Err(Error::parse(line_no, "empty alternation branch"));
                }
                branches.push(tokens);
            }
            if branches.is_empty() {
                return Err(Error::parse(line_no, "empty alternation group"));
            }
            let group = PatternAtom::Alternation(branches);
            rest = &after_open[close + 1..];
            if let Some(after_q) = rest.strip_prefix('?') {
                atoms.push(PatternAtom::Optional(Box::new(group)));
                rest = after_q;
            } else {
                atoms.push(group);
            }
        } else {
            let end = rest.find(' ').unwrap_or(rest.len());
            let word = &rest[..end];
            rest = &rest[end..];
            if word.contains(')') || word.contains('|') {
                return Err(Error::parse(
                    line_no,
                    format!("stray grammar character in token {word:?}"),
                ));
            }
            if let Some(bare) = word.strip_suffix('?') {
                let token = validate_token(line_no, bare)?;
                atoms.push(PatternAtom::Optional(Box::new(PatternAtom::Literal(token))));
            } else {
                atoms.push(PatternAtom::Literal(validate_token(line_no, word)?));
            }
        }
    }
    if atoms.is_empty() {
        return Err(Error::parse(line_no, "empty pattern"));
    }
    if atoms.iter().all(|a| matches!(a, PatternAtom::Optional(_))) {
        return Err(Error::parse(
            line_no,
            "pattern must contain at least one non-optional token",
        ));
    }
    Ok(PatternTree { atoms })
}

fn validate_token(line_no: usize, token: &str) -> Result<String> {
    if token.is_empty() {
        return Err(Error::parse(line_no, "empty token"));
    }
    if token.chars().any(|c| "()|?".contains(c)) {
        return Err(Error::parse(
            line_no,
            format!("grammar character inside token {token:?}"),
        ));
    }
    Ok(token.to_lowercase())
}

/// A single pattern hit inside an utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub entry_id: String,
    pub label: CueLabel,
    /// Token span [start, end).
    pub start: usize,
    pub end: usize,
    pub priority: i32,
    pub span_length: usize,
}

/// The lexicon compiled into a deterministic token trie.
///
/// Immutable and shareable; matching is pure.
#[derive(Debug, Clone)]
pub struct CompiledLexicon {
    entries: Vec<LexiconEntry>,
    version_hash: String,
    nodes: Vec<TrieNode>,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: BTreeMap<String, usize>,
    /// Indices of entries accepting at this node.
    accepts: Vec<usize>,
}

impl CompiledLexicon {
    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    /// Digest of the canonical source form; identical sources compile to
    /// identical hashes.
    pub fn version_hash(&self) -> &str {
        &self.version_hash
    }

    /// All literal tokens appearing anywhere in the lexicon, sorted.
    pub fn literal_tokens(&self) -> Vec<String> {
        let mut tokens = BTreeSet::new();
        for entry in &self.entries {
            for seq in entry.pattern.expansions() {
                tokens.extend(seq);
            }
        }
        tokens.into_iter().collect()
    }

    /// Returns every match of every entry at every token offset of cleaned
    /// `text` (anchored entries only at offset 0), sorted by priority desc,
    /// span length desc, start asc, entry_id asc.
    pub fn match_utterance(&self, text: &str) -> Vec<Match> {
        let tokens = tokenize(text);
        let mut matches = Vec::new();
        for start in 0..tokens.len() {
            let mut node = 0usize;
            for (offset, token) in tokens[start..].iter().enumerate() {
                match self.nodes[node].children.get(*token) {
                    Some(&next) => node = next,
                    None => break,
                }
                for &entry_idx in &self.nodes[node].accepts {
                    let entry = &self.entries[entry_idx];
                    if entry.anchored && start > 0 {
                        continue;
                    }
                    let end = start + offset + 1;
                    matches.push(Match {
                        entry_id: entry.entry_id.clone(),
                        label: entry.label,
                        start,
                        end,
                        priority: entry.priority,
                        span_length: end - start,
                    });
                }
            }
        }
        sort_matches(&mut matches);
        matches
    }
}

/// The canonical match ordering: priority desc, span length desc, earliest
/// start, entry_id asc. Total over distinct matches.
pub fn sort_matches(matches: &mut [Match]) {
    matches.sort_by(|a, b| {
        b.priority
            .cmp(&a.priority)
            .then(b.span_length.cmp(&a.span_length))
            .then(a.start.cmp(&b.start))
            .then(a.entry_id.cmp(&b.entry_id))
    });
}

/// Compiles parsed entries into a token trie. Compilation is deterministic:
/// the same entries always produce the same automaton and version hash.
pub fn compile_lexicon(entries: Vec<LexiconEntry>) -> Result<CompiledLexicon> {
    let mut rule_keys: BTreeMap<(String, CueLabel, i32), String> = BTreeMap::new();
    for e in &entries {
        let key = (e.pattern.render(), e.label, e.priority);
        if let Some(prev) = rule_keys.get(&key) {
            return Err(Error::validation(format!(
                "duplicate rule: entries {prev:?} and {:?} share pattern {:?}, label {}, and priority {}",
                e.entry_id, key.0, e.label, e.priority
            )));
        }
        rule_keys.insert(key, e.entry_id.clone());
    }

    let mut nodes: Vec<TrieNode> = alloc::vec![TrieNode::default()];
    for (entry_idx, entry) in entries.iter().enumerate() {
        let expansions = entry.pattern.expansions();
        if expansions.is_empty() {
            return Err(Error::validation(format!(
                "entry {:?} accepts no token sequence",
                entry.entry_id
            )));
        }
        if expansions.len() > MAX_EXPANSIONS {
            return Err(Error::validation(format!(
                "entry {:?} expands to {} sequences (limit {MAX_EXPANSIONS})",
                entry.entry_id,
                expansions.len()
            )));
        }
        for seq in expansions {
            let mut node = 0usize;
            for token in seq {
                let next = match nodes[node].children.get(&token) {
                    Some(&n) => n,
                    None => {
                        nodes.push(TrieNode::default());
                        let n = nodes.len() - 1;
                        nodes[node].children.insert(token, n);
                        n
                    }
                };
                node = next;
            }
            if !nodes[node].accepts.contains(&entry_idx) {
                nodes[node].accepts.push(entry_idx);
            }
        }
    }

    let mut hasher = Sha256::new();
    hasher.update(render_lexicon(&entries).as_bytes());
    let version_hash = hex(&hasher.finalize());
    Ok(CompiledLexicon {
        entries,
        version_hash,
        nodes,
    })
}

/// Parses and compiles in one step.
pub fn compile_source(source: &str) -> Result<CompiledLexicon> {
    compile_lexicon(parse_lexicon(source)?)
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_anchored_literal_entry() {
        let entries = parse_lexicon("G1\t50\t^\twhat do you think\tGUIDED\n").unwrap();
        assert_eq!(entries.len(), 1);
        let e = &entries[0];
        assert!(e.anchored);
        assert_eq!(e.priority, 50);
        assert_eq!(e.label, CueLabel::Guided);
        assert_eq!(e.pattern.atoms.len(), 4);
        assert!(e
            .pattern
            .atoms
            .iter()
            .all(|a| matches!(a, PatternAtom::Literal(_))));
    }

    #[test]
    fn parses_alternation_entry() {
        let entries = parse_lexicon("D7\t60\t^\tlet's (start|go|try|give)\tDIRECTED\n").unwrap();
        let e = &entries[0];
        match &e.pattern.atoms[1] {
            PatternAtom::Alternation(branches) => assert_eq!(branches.len(), 4),
            other => panic!("expected alternation, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_label_with_line_number() {
        let err = parse_lexicon("# comment\nX1\t10\t-\thello\tMAYBE\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("MAYBE"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn rejects_grammar_errors() {
        assert!(parse_lexicon("X\t1\t-\t(a|b\tNONE\n").is_err());
        assert!(parse_lexicon("X\t1\t-\t\tNONE\n").is_err());
        assert!(parse_lexicon("X\t1\t-\t(a|(b|c))\tNONE\n").is_err());
        assert!(parse_lexicon("X\t1\t-\t(a|)\tNONE\n").is_err());
        assert!(parse_lexicon("X\t1\t-\ta? b?\tNONE\n").is_err());
        assert!(parse_lexicon("X\t1\t*\ta\tNONE\n").is_err());
        let dup = "X\t1\t-\ta\tNONE\nX\t2\t-\tb\tNONE\n";
        assert!(parse_lexicon(dup).is_err());
    }

    #[test]
    fn single_literal_automaton_accepts_exactly_its_sequence() {
        let lex = compile_source("N1\t90\t-\tlook better\tNONE\n").unwrap();
        assert_eq!(lex.match_utterance("look better").len(), 1);
        assert_eq!(lex.match_utterance("look").len(), 0);
        assert_eq!(lex.match_utterance("better look").len(), 0);
        assert_eq!(lex.match_utterance("please look better now").len(), 1);
    }

    #[test]
    fn alternation_accepts_each_branch_only() {
        let lex = compile_source("G1\t10\t-\tdo you (want|need)\tGUIDED\n").unwrap();
        assert_eq!(lex.match_utterance("do you want").len(), 1);
        assert_eq!(lex.match_utterance("do you need").len(), 1);
        assert_eq!(lex.match_utterance("do you have").len(), 0);
    }

    #[test]
    fn optional_atom_matches_both_lengths() {
        let lex = compile_source("G1\t10\t^\tcan you? (think|do)\tGUIDED\n").unwrap();
        assert_eq!(lex.match_utterance("can think of it").len(), 1);
        let with_you = lex.match_utterance("can you do that");
        assert_eq!(with_you.len(), 1);
        assert_eq!(with_you[0].span_length, 3);
    }

    #[test]
    fn seed_lexicon_compiles_and_hash_is_stable() {
        let a = compile_source(SEED_LEXICON).unwrap();
        let b = compile_source(SEED_LEXICON).unwrap();
        assert!(!a.entries().is_empty());
        assert_eq!(a.version_hash(), b.version_hash());
        assert_eq!(a.version_hash().len(), 64);
    }

    #[test]
    fn duplicate_rule_is_rejected_at_compile_time() {
        let source = "A\t5\t-\tgo on\tDIRECTED\nB\t5\t-\tgo on\tDIRECTED\n";
        let entries = parse_lexicon(source).unwrap();
        assert!(compile_lexicon(entries).is_err());
    }

    #[test]
    fn anchored_entry_matches_only_at_start() {
        let lex = compile_source("G1\t10\t^\twhat\tGUIDED\n").unwrap();
        assert_eq!(lex.match_utterance("what happened").len(), 1);
        assert_eq!(lex.match_utterance("so what happened").len(), 0);
    }

    #[test]
    fn empty_text_matches_nothing() {
        let lex = compile_source(SEED_LEXICON).unwrap();
        assert!(lex.match_utterance("").is_empty());
    }

    #[test]
    fn seed_lexicon_orders_look_better_first() {
        let lex = compile_source(SEED_LEXICON).unwrap();
        let matches = lex.match_utterance("look better please");
        assert!(
            matches.len() >= 2,
            "expected both look entries: {matches:?}"
        );
        assert_eq!(matches[0].label, CueLabel::None);
        assert_eq!(matches[0].span_length, 2);
        assert_eq!(matches[1].label, CueLabel::Directed);
    }

    #[test]
    fn directed_lets_try_matches_seed_entry() {
        let lex = compile_source(SEED_LEXICON).unwrap();
        let matches = lex.match_utterance("let's try that again");
        assert!(!matches.is_empty());
        assert_eq!(matches[0].label, CueLabel::Directed);
        assert_eq!(matches[0].start, 0);
    }

    #[test]
    fn render_parse_round_trip_preserves_accept_behavior() {
        let source =
            "G1\t50\t^\tcan you? (think|do|see)\tGUIDED\tnote here\nD1\t60\t-\tlook\tDIRECTED\n";
        let entries = parse_lexicon(source).unwrap();
        let reparsed = parse_lexicon(&render_lexicon(&entries)).unwrap();
        assert_eq!(entries, reparsed);
        let a = compile_lexicon(entries).unwrap();
        let b = compile_lexicon(reparsed).unwrap();
        for text in [
            "can think of it",
            "can you see them",
            "please look up",
            "nothing here",
        ] {
            assert_eq!(a.match_utterance(text), b.match_utterance(text));
        }
        assert_eq!(a.version_hash(), b.version_hash());
    }
}
