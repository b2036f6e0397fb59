//! Structured verification reports, rendered as text and as JSON.

use serde::Serialize;

use crate::dirichlet::{rational_to_string, DirichletPoly, Exp};
use num_rational::BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VerifyStatus {
    Pass,
    Fail,
}

impl VerifyStatus {
    pub fn is_pass(&self) -> bool {
        matches!(self, VerifyStatus::Pass)
    }
}

/// First disagreeing coefficient of a failed comparison, in graded-lex order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub exponents: Vec<u32>,
    pub lhs: String,
    pub rhs: String,
    /// Where the mismatch sits, for checks that run a family of comparisons.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Mismatch {
    pub fn from_coeffs(exp: &Exp, lhs: &BigRational, rhs: &BigRational) -> Self {
        Mismatch {
            exponents: exp.0.clone(),
            lhs: rational_to_string(lhs),
            rhs: rational_to_string(rhs),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// Enumeration effort behind a computation or verification.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EnumStats {
    /// Candidates examined.
    pub visited: u64,
    /// Candidates that satisfied all constraints and were accumulated.
    pub accepted: u64,
}

impl EnumStats {
    pub fn merge(&mut self, other: EnumStats) {
        self.visited += other.visited;
        self.accepted += other.accepted;
    }
}

/// Outcome of one verification run.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub check: String,
    pub status: VerifyStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<Mismatch>,
    pub counts: EnumStats,
    pub elapsed_ms: u64,
}

impl VerifyReport {
    pub fn pass(check: impl Into<String>, counts: EnumStats, elapsed_ms: u64) -> Self {
        VerifyReport {
            check: check.into(),
            status: VerifyStatus::Pass,
            mismatch: None,
            counts,
            elapsed_ms,
        }
    }

    pub fn fail(
        check: impl Into<String>,
        mismatch: Mismatch,
        counts: EnumStats,
        elapsed_ms: u64,
    ) -> Self {
        VerifyReport {
            check: check.into(),
            status: VerifyStatus::Fail,
            mismatch: Some(mismatch),
            counts,
            elapsed_ms,
        }
    }

    /// Compare two series and build a report; the graded-lex first
    /// disagreement is recorded on failure.
    pub fn from_comparison(
        check: impl Into<String>,
        lhs: &DirichletPoly,
        rhs: &DirichletPoly,
        counts: EnumStats,
        elapsed_ms: u64,
    ) -> Self {
        match lhs.first_mismatch(rhs) {
            None => Self::pass(check, counts, elapsed_ms),
            Some((exp, a, b)) => Self::fail(
                check,
                Mismatch::from_coeffs(&exp, &a, &b),
                counts,
                elapsed_ms,
            ),
        }
    }

    /// One-line human-readable summary (deterministic part only; timing is
    /// reported separately by the caller).
    pub fn summary(&self) -> String {
        match (&self.status, &self.mismatch) {
            (VerifyStatus::Pass, _) => format!("{}: PASS", self.check),
            (VerifyStatus::Fail, Some(m)) => {
                let detail = m
                    .detail
                    .as_ref()
                    .map(|d| format!(" [{d}]"))
                    .unwrap_or_default();
                format!(
                    "{}: FAIL at {:?} (lhs = {}, rhs = {}){}",
                    self.check, m.exponents, m.lhs, m.rhs, detail
                )
            }
            (VerifyStatus::Fail, None) => format!("{}: FAIL", self.check),
        }
    }
}
