use std::collections::BTreeMap;

use serde::Serialize;

use semiretract::action::{ActionMetadata, FixedSetReport};
use semiretract::analysis::{DecayFit, HolderEstimate, ThresholdTable};
use semiretract::retraction::{RetractionReport, TraceSummary};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub description: String,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CriterionResult {
    fn new(id: &str, description: &str, measured: Option<f64>, threshold: Option<f64>, ok: bool) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            measured,
            threshold,
            status: if ok { Status::Pass } else { Status::Fail },
            note: None,
        }
    }

    /// Passes when `measured <= threshold`; NaN fails.
    pub fn at_most(id: &str, description: &str, measured: f64, threshold: f64) -> Self {
        Self::new(id, description, Some(measured), Some(threshold), measured <= threshold)
    }

    /// Passes when `measured >= threshold`; NaN fails.
    pub fn at_least(id: &str, description: &str, measured: f64, threshold: f64) -> Self {
        Self::new(id, description, Some(measured), Some(threshold), measured >= threshold)
    }

    pub fn flag(id: &str, description: &str, ok: bool) -> Self {
        Self::new(id, description, None, None, ok)
    }

    pub fn skipped(id: &str, description: &str, reason: &str) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            measured: None,
            threshold: None,
            status: Status::Skipped,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanSummary {
    pub feasible: bool,
    pub weights: Vec<f64>,
    pub defect: Option<f64>,
    pub exact: bool,
    /// Farkas multipliers when no invariant mean exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSummary {
    pub multipliers: Vec<f64>,
    /// `max (A^T y)_j`, nonpositive for a valid certificate.
    pub max_aty: f64,
    /// `b^T y`, positive for a valid certificate.
    pub bty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionMetadata>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<MeanSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retraction: Option<RetractionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder: Option<HolderEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_set: Option<FixedSetReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdTable>,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
    /// Wall-clock milliseconds per phase; excluded from comparisons.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, config: Option<ExperimentConfig>) -> Self {
        Self {
            command: command.into(),
            config,
            action: None,
            x0: None,
            mean: None,
            trace: None,
            retraction: None,
            holder: None,
            decay: None,
            fixed_set: None,
            thresholds: None,
            criteria: Vec::new(),
            passed: true,
            timings: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, c: CriterionResult) {
        self.criteria.push(c);
        self.passed = self.criteria.iter().all(|c| c.status != Status::Fail);
    }

    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.timings
            .insert(phase.into(), start.elapsed().as_secs_f64() * 1e3);
        out
    }

    pub fn criterion(&self, id: &str) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }

    /// JSON with the timing block removed.
    pub fn without_timings(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings");
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_state_tracks_failures() {
        let mut r = RunReport::new("verify", None);
        r.push(CriterionResult::at_most("a", "", 0.5, 1.0));
        r.push(CriterionResult::skipped("b", "", "n/a"));
        assert!(r.passed);
        r.push(CriterionResult::at_least("c", "", f64::NAN, 1.0));
        assert!(!r.passed);
        assert_eq!(r.criterion("c").unwrap().status, Status::Fail);
        r.time("x", || ());
        assert!(r.without_timings().get("timings").is_none());
    }
}
