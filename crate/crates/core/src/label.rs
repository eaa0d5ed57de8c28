use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The closed three-way classification target.
///
/// The order `Guided < Directed < None` is fixed and used everywhere an
/// index, a tie-break, or a matrix axis is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CueLabel {
    #[serde(rename = "GUIDED")]
    Guided,
    #[serde(rename = "DIRECTED")]
    Directed,
    #[serde(rename = "NONE")]
    None,
}

impl CueLabel {
    /// All labels in fixed order.
    pub const ALL: [CueLabel; 3] = [CueLabel::Guided, CueLabel::Directed, CueLabel::None];

    /// Position in the fixed label order.
    pub fn index(self) -> usize {
        match self {
            CueLabel::Guided => 0,
            CueLabel::Directed => 1,
            CueLabel::None => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<CueLabel> {
        CueLabel::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CueLabel::Guided => "GUIDED",
            CueLabel::Directed => "DIRECTED",
            CueLabel::None => "NONE",
        }
    }
}

impl fmt::Display for CueLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CueLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "GUIDED" => Ok(CueLabel::Guided),
            "DIRECTED" => Ok(CueLabel::Directed),
            "NONE" => Ok(CueLabel::None),
            other => Err(Error::validation(alloc::format!(
                "unknown cue label {other:?} (expected GUIDED, DIRECTED, or NONE)"
            ))),
        }
    }
}

/// Rehabilitation discipline of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Discipline {
    OT,
    PT,
    SLP,
}

impl Discipline {
    pub const ALL: [Discipline; 3] = [Discipline::OT, Discipline::PT, Discipline::SLP];

    pub fn as_str(self) -> &'static str {
        match self {
            Discipline::OT => "OT",
            Discipline::PT => "PT",
            Discipline::SLP => "SLP",
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Discipline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "OT" => Ok(Discipline::OT),
            "PT" => Ok(Discipline::PT),
            "SLP" => Ok(Discipline::SLP),
            other => Err(Error::validation(alloc::format!(
                "unknown discipline {other:?} (expected OT, PT, or SLP)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_round_trip() {
        for label in CueLabel::ALL {
            assert_eq!(label.as_str().parse::<CueLabel>().unwrap(), label);
            assert_eq!(CueLabel::from_index(label.index()), Some(label));
        }
    }

    #[test]
    fn unknown_label_is_rejected() {
        assert!("MAYBE".parse::<CueLabel>().is_err());
        assert!("guided".parse::<CueLabel>().is_err());
    }

    #[test]
    fn unknown_discipline_is_rejected() {
        assert!("XYZ".parse::<Discipline>().is_err());
    }
}
