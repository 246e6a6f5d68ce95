//! Stage-wise cost reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::compare::{STAGE_AGGREGATION, STAGE_DIGIT_COMPARE};
use crate::eval::{Backend, Counts, Evaluator, LedgerSnapshot, DEFAULT_STAGE};
use crate::switch::{STAGE_RAISE, STAGE_REDUCTION};

pub const REPORT_SCHEMA: u32 = 1;

/// Report stages in pipeline order. Work outside a comparison is charged to
/// `arithmetic`.
pub const STAGES: [&str; 5] = [STAGE_REDUCTION, STAGE_DIGIT_COMPARE, STAGE_AGGREGATION, STAGE_RAISE, DEFAULT_STAGE];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub backend: String,
    pub p: u64,
    pub r: u32,
    pub modulus: u64,
    pub levels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_q: Option<f64>,
}

impl ReportParams {
    pub fn of<B: Backend>(ev: &Evaluator<B>) -> Self {
        Self {
            backend: ev.backend().name().to_string(),
            p: ev.p(),
            r: ev.r(),
            modulus: ev.modulus(),
            levels: ev.max_level(),
            ring_degree: None,
            log_q: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub schema: u32,
    pub params: ReportParams,
    /// Every stage in [`STAGES`], zero when unused.
    pub stages: BTreeMap<String, Counts>,
    pub totals: Counts,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Informational only.
    pub wall_ms: f64,
}

impl CostReport {
    pub fn new(params: ReportParams, snap: &LedgerSnapshot, wall_ms: f64) -> Self {
        let mut stages: BTreeMap<String, Counts> = STAGES.iter().map(|s| (s.to_string(), snap.stage(s))).collect();
        for (k, v) in &snap.stages {
            stages.entry(k.clone()).or_insert_with(|| v.clone());
        }
        Self {
            schema: REPORT_SCHEMA,
            params,
            stages,
            totals: snap.total.clone(),
            depth: snap.total.depth,
            notes: Vec::new(),
            wall_ms,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn stage(&self, name: &str) -> Counts {
        self.stages.get(name).cloned().unwrap_or_default()
    }

    /// Stage counters add up to the totals.
    pub fn is_additive(&self) -> bool {
        let sum = |f: fn(&Counts) -> u64| self.stages.values().map(f).sum::<u64>();
        sum(|c| c.nonscalar) == self.totals.nonscalar
            && sum(|c| c.scalar) == self.totals.scalar
            && sum(|c| c.additions) == self.totals.additions
    }

    pub fn nonscalar_share(&self, name: &str) -> f64 {
        if self.totals.nonscalar == 0 {
            return 0.0;
        }
        self.stage(name).nonscalar as f64 / self.totals.nonscalar as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(
            s,
            "backend {}  p = {}  r = {}  p^r = {}  levels = {}",
            p.backend, p.p, p.r, p.modulus, p.levels
        );
        let _ = writeln!(s, "{:<14} {:>10} {:>8} {:>10} {:>7}", "stage", "nonscalar", "scalar", "additions", "share");
        for name in STAGES {
            let c = self.stage(name);
            let _ = writeln!(
                s,
                "{:<14} {:>10} {:>8} {:>10} {:>6.1}%",
                name,
                c.nonscalar,
                c.scalar,
                c.additions,
                100.0 * self.nonscalar_share(name)
            );
        }
        let t = &self.totals;
        let _ = writeln!(s, "{:<14} {:>10} {:>8} {:>10}", "total", t.nonscalar, t.scalar, t.additions);
        let _ = writeln!(s, "depth {}  wall {:.1} ms", self.depth, self.wall_ms);
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}
