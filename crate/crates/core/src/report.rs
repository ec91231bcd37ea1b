//! Machine-readable verification reports.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum Bound {
    AtMost { tolerance: f64 },
    AtLeast { tolerance: f64 },
    Between { lo: f64, hi: f64 },
}

impl Bound {
    /// NaN never passes.
    pub fn admits(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost { tolerance } => v <= tolerance,
            Bound::AtLeast { tolerance } => v >= tolerance,
            Bound::Between { lo, hi } => lo <= v && v <= hi,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost { tolerance } => write!(f, "<= {tolerance:e}"),
            Bound::AtLeast { tolerance } => write!(f, ">= {tolerance:e}"),
            Bound::Between { lo, hi } => write!(f, "in [{lo}, {hi}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(flatten)]
    pub bound: Bound,
    /// `None` when the measurement itself failed.
    pub measured: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, bound: Bound, measured: f64) -> Self {
        Check {
            name: name.into(),
            bound,
            measured: Some(measured),
            pass: bound.admits(measured),
            note: None,
        }
    }

    pub fn at_most(name: impl Into<String>, tolerance: f64, measured: f64) -> Self {
        Self::new(name, Bound::AtMost { tolerance }, measured)
    }

    pub fn at_least(name: impl Into<String>, tolerance: f64, measured: f64) -> Self {
        Self::new(name, Bound::AtLeast { tolerance }, measured)
    }

    pub fn between(name: impl Into<String>, lo: f64, hi: f64, measured: f64) -> Self {
        Self::new(name, Bound::Between { lo, hi }, measured)
    }

    /// A check whose measurement raised an error.
    pub fn errored(name: impl Into<String>, bound: Bound, err: impl fmt::Display) -> Self {
        Check {
            name: name.into(),
            bound,
            measured: None,
            pass: false,
            note: Some(err.to_string()),
        }
    }

    /// `Ok(v)` becomes a measured check, `Err` an errored one.
    pub fn from_result<E: fmt::Display>(name: impl Into<String>, bound: Bound, r: Result<f64, E>) -> Self {
        match r {
            Ok(v) => Self::new(name, bound, v),
            Err(e) => Self::errored(name, bound, e),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        match self.measured {
            Some(v) => write!(f, "{tag} {} = {v:.3e} ({})", self.name, self.bound)?,
            None => write!(f, "{tag} {} ({})", self.name, self.bound)?,
        }
        if let Some(n) = &self.note {
            write!(f, " [{n}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub problem: String,
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(problem: impl Into<String>, suite: impl Into<String>, checks: Vec<Check>) -> Self {
        Report {
            problem: problem.into(),
            suite: suite.into(),
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} / {}", self.problem, self.suite)?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Check::at_most("a", 1e-8, 1e-9).pass);
        assert!(!Check::at_most("a", 1e-8, f64::NAN).pass);
        assert!(!Check::at_least("b", 0.05, 0.01).pass);
        assert!(Check::between("c", 3.0, 5.0, 4.0).pass);
        assert!(!Check::between("c", 3.0, 5.0, 5.5).pass);
        assert!(!Check::from_result::<String>("d", Bound::AtMost { tolerance: 1.0 }, Err("boom".into())).pass);
    }

    #[test]
    fn json_round_trip() {
        let r = Report::new(
            "rotation",
            "all",
            vec![
                Check::at_most("x", 1e-8, 3e-12),
                Check::between("ratio", 3.0, 5.0, 4.01).with_note("halved"),
            ],
        );
        assert!(r.pass);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().contains("\"relation\": \"at_most\""));
    }
}
