//! Per-bit-width cost tables for one raised less-than, with the single-prime
//! baseline alongside.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::report::{CostReport, ReportParams};
use super::select::{select_params_with, SelectOptions};
use crate::bgv::{ToyBgv, MAX_LEVEL};
use crate::compare::{lt, lt_direct_prime, next_prime, CompareOptions, STAGE_AGGREGATION, STAGE_DIGIT_COMPARE};
use crate::error::{Error, Result};
use crate::eval::{choose_plan, Backend, ClearEval, DryRun, EvalPath, Evaluator};
use crate::params::{BackendKind, ParamSet};
use crate::ring::DensePoly;
use crate::switch::{ExtractionStrategy, STAGE_REDUCTION};

/// Largest baseline prime whose less-than polynomial is built and run.
pub const DIRECT_MEASURE_LIMIT: u64 = 1 << 15;
/// Largest baseline prime whose cost is predicted from its plan.
pub const DIRECT_PREDICT_LIMIT: u64 = 1 << 18;
pub const DEFAULT_BITWIDTHS: [u32; 3] = [8, 12, 16];
/// Depth budget for the cleartext backend.
pub const CLEAR_DEPTH_BUDGET: usize = 256;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub bitwidths: Vec<u32>,
    pub strategies: Vec<ExtractionStrategy>,
    pub backend: BackendKind,
    pub seed: u64,
    /// Input pairs checked per row (one per ciphertext on toy BGV).
    pub pairs: usize,
    /// Use this `(p, r)` instead of selecting one per bit-width.
    pub fixed: Option<(u64, u32)>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            bitwidths: DEFAULT_BITWIDTHS.to_vec(),
            strategies: ExtractionStrategy::ALL.to_vec(),
            backend: BackendKind::Clear,
            seed: 0,
            pairs: 64,
            fixed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectSource {
    Measured,
    Predicted,
    /// Only the Paterson-Stockmeyer upper bound is reported.
    Bound,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub bitwidth: u32,
    pub p: u64,
    pub r: u32,
    pub strategy: ExtractionStrategy,
    pub report: CostReport,
    pub pairs_checked: usize,
    pub direct_prime: u64,
    pub direct_nonscalar: u64,
    pub direct_depth: Option<usize>,
    pub direct_source: DirectSource,
}

impl BenchRow {
    pub fn aggregation_share(&self) -> f64 {
        self.report.nonscalar_share(STAGE_AGGREGATION)
    }

    pub fn reduction_compare_share(&self) -> f64 {
        self.report.nonscalar_share(STAGE_REDUCTION) + self.report.nonscalar_share(STAGE_DIGIT_COMPARE)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchOutcome {
    pub schema: u32,
    pub rows: Vec<BenchRow>,
    pub skipped: Vec<String>,
}

/// Baseline cost at prime `q`: measured, predicted, or bounded by size.
pub fn direct_cost(q: u64) -> Result<(u64, Option<usize>, DirectSource)> {
    if q <= DIRECT_MEASURE_LIMIT {
        let ev = Evaluator::new(DryRun, q, 1, usize::MAX / 2)?;
        let a = ev.encode(&[0])?;
        lt_direct_prime(&ev, &a, &a)?;
        let t = ev.ledger().totals();
        return Ok((t.nonscalar, Some(t.depth), DirectSource::Measured));
    }
    if q <= DIRECT_PREDICT_LIMIT {
        // Same support as the real polynomial: odd powers below q-1 and the
        // leading term.
        let d = q as usize - 1;
        let coeffs = (0..=d).map(|i| u64::from(i % 2 == 1 || i == d) * 2).collect();
        let ev = Evaluator::new(DryRun, q, 1, usize::MAX / 2)?;
        let plan = choose_plan(&ev, &[&DensePoly::new(coeffs, q)], 1, EvalPath::Auto);
        return Ok((plan.nonscalar, Some(plan.depth), DirectSource::Predicted));
    }
    Ok((crate::eval::ps_nonscalar_bound(q as usize - 1), None, DirectSource::Bound))
}

fn sample_pairs(bits: u32, n: usize, rng: &mut ChaCha20Rng) -> Vec<(i64, i64)> {
    let top = 1i64 << bits;
    (0..n)
        .map(|_| (rng.random_range(0..top), rng.random_range(0..top)))
        .collect()
}

fn run_lt<B: Backend>(ev: &Evaluator<B>, pairs: &[(i64, i64)], strategy: ExtractionStrategy, packed: bool) -> Result<(CostReport, usize)> {
    let opts = CompareOptions {
        raise: true,
        strategy,
        ..CompareOptions::default()
    };
    let start = Instant::now();
    let groups: Vec<&[(i64, i64)]> = if packed { vec![pairs] } else { pairs.chunks(1).collect() };
    let mut first = None;
    for g in groups {
        let before = ev.ledger().snapshot();
        let a = ev.encode(&g.iter().map(|x| x.0).collect::<Vec<_>>())?;
        let b = ev.encode(&g.iter().map(|x| x.1).collect::<Vec<_>>())?;
        let out = ev.decode(&lt(ev, &a, &b, &opts)?.handle)?;
        for (&(x, y), &o) in g.iter().zip(&out) {
            if o != i64::from(x < y) {
                return Err(Error::Inconsistent(format!("{strategy}: {x} < {y} evaluated to {o}")));
            }
        }
        if first.is_none() {
            first = Some(ev.ledger().snapshot().since(&before));
        }
    }
    let snap = first.ok_or(Error::EmptyPacking)?;
    let per = start.elapsed().as_secs_f64() * 1e3 / if packed { 1.0 } else { pairs.len() as f64 };
    Ok((CostReport::new(ReportParams::of(ev), &snap, per), pairs.len()))
}

fn params_for(cfg: &BenchConfig, bits: u32) -> Result<ParamSet> {
    let budget = match cfg.backend {
        BackendKind::Clear => CLEAR_DEPTH_BUDGET,
        BackendKind::ToyBgv => MAX_LEVEL,
    };
    let opts = SelectOptions {
        query_depth: 0,
        backend: cfg.backend,
        seed: cfg.seed,
        ..SelectOptions::default()
    };
    match cfg.fixed {
        Some((p, r)) => {
            let levels = crate::switch::estimate_depth(p, r);
            ParamSet::new(p, r, opts.n, levels, cfg.seed, cfg.backend)
        }
        None => select_params_with(bits, budget, &opts),
    }
}

pub fn bench(cfg: &BenchConfig) -> Result<BenchOutcome> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for &bits in &cfg.bitwidths {
        let params = match params_for(cfg, bits) {
            Ok(p) => p,
            Err(e @ (Error::Infeasible(_) | Error::InvalidParameter(_))) => {
                skipped.push(format!("{bits}-bit: {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let (p, r) = (params.p, params.r);
        let half = params.modulus() / 2;
        let pairs = if (1u64 << bits) - 1 <= half {
            sample_pairs(bits, cfg.pairs.max(1), &mut rng)
        } else {
            // fixed parameters narrower than the width: keep inputs in range
            let h = half as i64 / 2;
            (0..cfg.pairs.max(1)).map(|_| (rng.random_range(0..=h), rng.random_range(0..=h))).collect()
        };
        let q = next_prime(params.modulus());
        let (direct_nonscalar, direct_depth, direct_source) = direct_cost(q)?;
        for &strategy in &cfg.strategies {
            let levels = params.levels();
            let (mut report, checked) = match cfg.backend {
                BackendKind::Clear => {
                    let ev = Evaluator::new(ClearEval::new(cfg.seed), p, r, levels)?;
                    run_lt(&ev, &pairs, strategy, true)?
                }
                BackendKind::ToyBgv => {
                    // the grid strategies are deeper than the chain is sized for
                    let deep = crate::switch::estimate_depth(p, r) * 2;
                    let ps = ParamSet::new(p, r, params.n, deep.min(MAX_LEVEL), cfg.seed, BackendKind::ToyBgv)?;
                    let n = ps.n;
                    let log_q = ps.log_q();
                    let lv = ps.levels();
                    let ev = Evaluator::new(ToyBgv::new(ps)?, p, r, lv)?;
                    let (mut rep, c) = run_lt(&ev, &pairs, strategy, false)?;
                    rep.params.ring_degree = Some(n);
                    rep.params.log_q = Some(log_q);
                    (rep, c)
                }
            };
            report.notes.push(format!("{bits}-bit inputs, one raised less-than"));
            rows.push(BenchRow {
                bitwidth: bits,
                p,
                r,
                strategy,
                report,
                pairs_checked: checked,
                direct_prime: q,
                direct_nonscalar,
                direct_depth,
                direct_source,
            });
        }
    }
    Ok(BenchOutcome {
        schema: super::REPORT_SCHEMA,
        rows,
        skipped,
    })
}

pub const CSV_HEADER: &str = "bitwidth,p,r,strategy,nonscalar,scalar,additions,depth,reduction,digit_compare,aggregation,raise,arithmetic,aggregation_share,reduction_compare_share,pairs_checked,direct_prime,direct_nonscalar,direct_depth,direct_source,wall_ms";

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for row in rows {
        let rep = &row.report;
        let stage = |n: &str| rep.stage(n).nonscalar;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{:.4},{:.4},{},{},{},{},{},{:.2}",
            row.bitwidth,
            row.p,
            row.r,
            row.strategy,
            rep.totals.nonscalar,
            rep.totals.scalar,
            rep.totals.additions,
            rep.depth,
            stage(super::STAGES[0]),
            stage(super::STAGES[1]),
            stage(super::STAGES[2]),
            stage(super::STAGES[3]),
            stage(super::STAGES[4]),
            row.aggregation_share(),
            row.reduction_compare_share(),
            row.pairs_checked,
            row.direct_prime,
            row.direct_nonscalar,
            row.direct_depth.map_or(String::new(), |d| d.to_string()),
            serde_json::to_value(row.direct_source).expect("enum").as_str().unwrap_or(""),
            rep.wall_ms,
        );
    }
    s
}

/// Aligned text rendering.
pub fn render_text(out: &BenchOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>4} {:>9} {:<12} {:>9} {:>5} {:>7} {:>7} {:>7} {:>9} {:>7}",
        "bits", "(p,r)", "strategy", "nonscalar", "depth", "agg%", "red+cmp%", "direct", "q", "speedup"
    );
    for row in &out.rows {
        let n = row.report.totals.nonscalar;
        let _ = writeln!(
            s,
            "{:>4} {:>9} {:<12} {:>9} {:>5} {:>6.1}% {:>7.1}% {:>7} {:>9} {:>7.2}",
            row.bitwidth,
            format!("({},{})", row.p, row.r),
            row.strategy.as_str(),
            n,
            row.report.depth,
            100.0 * row.aggregation_share(),
            100.0 * row.reduction_compare_share(),
            row.direct_nonscalar,
            row.direct_prime,
            row.direct_nonscalar as f64 / n.max(1) as f64,
        );
    }
    for note in &out.skipped {
        let _ = writeln!(s, "skipped {note}");
    }
    s
}
