//! Structured pass/fail reports shared by the verification suites.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub title: String,
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report { title: title.into(), lines: Vec::new(), failures: Vec::new() }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    /// Records a named check; failures are kept separately so a report can
    /// list everything that went wrong.
    pub fn check(&mut self, ok: bool, what: impl Into<String>) -> bool {
        let what = what.into();
        if ok {
            self.lines.push(format!("ok: {what}"));
        } else {
            self.lines.push(format!("FAILED: {what}"));
            self.failures.push(what);
        }
        ok
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn merge(&mut self, other: Report) {
        for l in other.lines {
            self.lines.push(format!("{}: {}", other.title, l));
        }
        for f in other.failures {
            self.failures.push(format!("{}: {}", other.title, f));
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "[{}] {}\n",
            if self.passed() { "PASS" } else { "FAIL" },
            self.title
        ));
        for l in &self.lines {
            out.push_str(&format!("  {l}\n"));
        }
        out
    }

    /// One-line verdict for acceptance output.
    pub fn verdict(&self) -> String {
        format!("{}: {}", if self.passed() { "pass" } else { "FAIL" }, self.title)
    }

    pub fn ensure(&self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::Verification(format!(
                "{}: {}",
                self.title,
                self.failures.join("; ")
            )))
        }
    }
}
