use std::fmt;

use serde::Serialize;

/// Three-valued test result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Holds,
    Fails,
    Inconclusive,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Holds => "holds",
            Outcome::Fails => "fails",
            Outcome::Inconclusive => "inconclusive",
        }
    }

    /// Conjunction: any failure fails, otherwise any doubt is inconclusive.
    pub fn and(self, other: Outcome) -> Outcome {
        match (self, other) {
            (Outcome::Fails, _) | (_, Outcome::Fails) => Outcome::Fails,
            (Outcome::Inconclusive, _) | (_, Outcome::Inconclusive) => Outcome::Inconclusive,
            _ => Outcome::Holds,
        }
    }

    pub fn all(outcomes: impl IntoIterator<Item = Outcome>) -> Outcome {
        outcomes.into_iter().fold(Outcome::Holds, Outcome::and)
    }

    pub fn from_bool(ok: bool) -> Outcome {
        if ok {
            Outcome::Holds
        } else {
            Outcome::Fails
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A test outcome with the two sides of the inequality it compared.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub params: String,
    pub outcome: Outcome,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    /// Slack from uncertified nets that the comparison allowed for.
    pub gap: f64,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn new(check: impl Into<String>, params: impl Into<String>, outcome: Outcome, lhs: f64, rhs: f64, tolerance: f64) -> Verdict {
        Verdict { check: check.into(), params: params.into(), outcome, lhs, rhs, tolerance, gap: 0.0, notes: Vec::new() }
    }

    /// `lhs ≤ rhs` within `tolerance`.
    pub fn le(check: impl Into<String>, params: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Verdict {
        Verdict::new(check, params, Outcome::from_bool(lhs <= rhs + tolerance), lhs, rhs, tolerance)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Verdict {
        self.notes.push(note.into());
        self
    }

    pub fn with_gap(mut self, gap: f64) -> Verdict {
        self.gap = gap;
        self
    }

    pub fn holds(&self) -> bool {
        self.outcome == Outcome::Holds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjunction() {
        use Outcome::*;
        assert_eq!(Holds.and(Holds), Holds);
        assert_eq!(Holds.and(Inconclusive), Inconclusive);
        assert_eq!(Inconclusive.and(Fails), Fails);
        assert_eq!(Outcome::all([]), Holds);
    }

    #[test]
    fn le_uses_tolerance() {
        assert!(Verdict::le("c", "", 1.0 + 1e-10, 1.0, 1e-9).holds());
        assert!(!Verdict::le("c", "", 1.0 + 1e-8, 1.0, 1e-9).holds());
    }
}
