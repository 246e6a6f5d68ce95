use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

/// Stage charged when no explicit stage is open.
pub const DEFAULT_STAGE: &str = "arithmetic";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub nonscalar: u64,
    pub scalar: u64,
    pub additions: u64,
    /// Deepest multiplicative depth of any value produced.
    pub depth: usize,
    /// Polynomial evaluations by polynomial name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub poly_evals: BTreeMap<String, u64>,
}

impl Counts {
    /// Counter differences against an earlier reading of the same ledger.
    /// Depth is not a counter and is copied from `self`.
    pub fn since(&self, earlier: &Counts) -> Counts {
        let mut poly_evals = self.poly_evals.clone();
        for (k, v) in &earlier.poly_evals {
            if let Some(x) = poly_evals.get_mut(k) {
                *x -= v;
            }
        }
        poly_evals.retain(|_, v| *v > 0);
        Counts {
            nonscalar: self.nonscalar - earlier.nonscalar,
            scalar: self.scalar - earlier.scalar,
            additions: self.additions - earlier.additions,
            depth: self.depth,
            poly_evals,
        }
    }

    pub fn poly_eval_total(&self) -> u64 {
        self.poly_evals.values().sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    #[serde(flatten)]
    pub total: Counts,
    pub stages: BTreeMap<String, Counts>,
}

impl LedgerSnapshot {
    pub fn stage(&self, name: &str) -> Counts {
        self.stages.get(name).cloned().unwrap_or_default()
    }

    /// Share of non-scalar multiplications charged to `name`, in `[0, 1]`.
    pub fn nonscalar_share(&self, name: &str) -> f64 {
        if self.total.nonscalar == 0 {
            return 0.0;
        }
        self.stage(name).nonscalar as f64 / self.total.nonscalar as f64
    }

    pub fn since(&self, earlier: &LedgerSnapshot) -> LedgerSnapshot {
        let stages = self
            .stages
            .iter()
            .map(|(k, v)| {
                let before = earlier.stages.get(k).cloned().unwrap_or_default();
                (k.clone(), v.since(&before))
            })
            .filter(|(_, c)| c.nonscalar + c.scalar + c.additions > 0 || !c.poly_evals.is_empty())
            .collect();
        LedgerSnapshot {
            total: self.total.since(&earlier.total),
            stages,
        }
    }
}

#[derive(Debug, Default)]
struct Inner {
    snap: LedgerSnapshot,
    stack: Vec<String>,
}

impl Inner {
    fn current(&mut self) -> &mut Counts {
        let name = self
            .stack
            .last()
            .map_or(DEFAULT_STAGE, String::as_str)
            .to_string();
        self.snap.stages.entry(name).or_default()
    }
}

/// Thread-safe operation counters with a per-stage breakdown.
///
/// The stage stack is shared by everyone holding the ledger, so stages are
/// meant to be opened from one thread at a time.
#[derive(Debug, Default)]
pub struct CostLedger {
    inner: Mutex<Inner>,
}

impl CostLedger {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().expect("ledger poisoned")
    }

    pub fn record_addition(&self) {
        let mut g = self.lock();
        g.snap.total.additions += 1;
        g.current().additions += 1;
    }

    pub fn record_scalar(&self) {
        let mut g = self.lock();
        g.snap.total.scalar += 1;
        g.current().scalar += 1;
    }

    pub fn record_nonscalar(&self, depth: usize) {
        let mut g = self.lock();
        g.snap.total.nonscalar += 1;
        g.snap.total.depth = g.snap.total.depth.max(depth);
        let c = g.current();
        c.nonscalar += 1;
        c.depth = c.depth.max(depth);
    }

    pub fn record_depth(&self, depth: usize) {
        let mut g = self.lock();
        g.snap.total.depth = g.snap.total.depth.max(depth);
        let c = g.current();
        c.depth = c.depth.max(depth);
    }

    pub fn record_poly_eval(&self, name: &str) {
        if name.is_empty() {
            return;
        }
        let mut g = self.lock();
        *g.snap.total.poly_evals.entry(name.to_string()).or_default() += 1;
        *g.current().poly_evals.entry(name.to_string()).or_default() += 1;
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        self.lock().snap.clone()
    }

    pub fn totals(&self) -> Counts {
        self.lock().snap.total.clone()
    }

    pub fn reset(&self) {
        self.lock().snap = LedgerSnapshot::default();
    }

    pub fn current_stage(&self) -> String {
        self.lock()
            .stack
            .last()
            .cloned()
            .unwrap_or_else(|| DEFAULT_STAGE.to_string())
    }

    /// Charges everything until the guard drops to `name`.
    pub fn stage(self: &Arc<Self>, name: &str) -> StageGuard {
        self.lock().stack.push(name.to_string());
        StageGuard {
            ledger: Arc::clone(self),
        }
    }
}

#[must_use = "the stage closes when the guard is dropped"]
pub struct StageGuard {
    ledger: Arc<CostLedger>,
}

impl Drop for StageGuard {
    fn drop(&mut self) {
        self.ledger.lock().stack.pop();
    }
}
