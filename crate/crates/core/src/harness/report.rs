//! Verification report records.

use std::time::Duration;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
    Skipped,
}

/// One named check. `measured` and `tolerance` are the quantity compared
/// and its bound; `property` names the statement being tested.
#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub property: String,
    pub status: CheckStatus,
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
    /// Wall time; kept out of the JSON so reports are reproducible byte for byte.
    #[serde(skip)]
    pub runtime: Duration,
}

impl CheckEntry {
    pub fn new(name: &str, property: &str) -> Self {
        CheckEntry {
            name: name.into(),
            property: property.into(),
            status: CheckStatus::Skipped,
            measured: None,
            tolerance: None,
            detail: String::new(),
            runtime: Duration::ZERO,
        }
    }

    /// Pass when `measured ≤ tolerance`.
    pub fn at_most(mut self, measured: f64, tolerance: f64) -> Self {
        self.measured = Some(measured);
        self.tolerance = Some(tolerance);
        self.status = if measured <= tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self
    }

    /// Pass when `measured ≥ tolerance`.
    pub fn at_least(mut self, measured: f64, tolerance: f64) -> Self {
        self.measured = Some(measured);
        self.tolerance = Some(tolerance);
        self.status = if measured >= tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self
    }

    pub fn status(mut self, status: CheckStatus) -> Self {
        self.status = status;
        self
    }

    /// Downgrade a pass to a failure when `ok` is false.
    pub fn require(mut self, ok: bool, why: &str) -> Self {
        if !ok && self.status != CheckStatus::Skipped {
            self.status = CheckStatus::Fail;
            self.push_detail(why);
        }
        self
    }

    pub fn skipped(mut self, reason: &str) -> Self {
        self.status = CheckStatus::Skipped;
        self.detail = reason.into();
        self
    }

    pub fn failed(mut self, reason: &str) -> Self {
        self.status = CheckStatus::Fail;
        self.push_detail(reason);
        self
    }

    pub fn detail(mut self, detail: impl Into<String>) -> Self {
        self.push_detail(&detail.into());
        self
    }

    fn push_detail(&mut self, text: &str) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(text);
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport<C: Serialize> {
    pub config: C,
    pub checks: Vec<CheckEntry>,
    pub summary: Summary,
}

impl<C: Serialize> VerificationReport<C> {
    pub fn new(config: C, checks: Vec<CheckEntry>) -> Self {
        let mut summary = Summary {
            total: checks.len(),
            ..Summary::default()
        };
        for c in &checks {
            match c.status {
                CheckStatus::Pass => summary.passed += 1,
                CheckStatus::Fail => summary.failed += 1,
                CheckStatus::Inconclusive => summary.inconclusive += 1,
                CheckStatus::Skipped => summary.skipped += 1,
            }
        }
        VerificationReport {
            config,
            checks,
            summary,
        }
    }

    pub fn any_failed(&self) -> bool {
        self.summary.failed > 0
    }

    pub fn check(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }
}
