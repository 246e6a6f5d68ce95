//! Choosing `(p, r)` for a given input bit-width.

use serde::Serialize;

use crate::bgv::MAX_LEVEL;
use crate::error::{Error, Result};
use crate::eval::{choose_plan, DryRun, EvalPath, Evaluator};
use crate::interp::{f_eq_poly, f_lt_poly, g_degree_bound};
use crate::params::{BackendKind, ParamSet, DEFAULT_RING_DEGREE};
use crate::ring::modular::is_prime;
use crate::ring::DensePoly;
use crate::switch::estimate_depth;

pub const MIN_BITWIDTH: u32 = 4;
pub const MAX_BITWIDTH: u32 = 24;
/// Largest prime considered.
pub const MAX_PRIME: u64 = 257;
/// Levels a filter+aggregate query spends after its predicates: one to join
/// the masks, one to apply them to the aggregate term.
pub const DEFAULT_QUERY_DEPTH: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Headroom {
    /// `p^r >= 2^(b+1)`: differences of two `b`-bit values stay in the
    /// balanced range.
    Difference,
    /// `p^r >= 2^b`.
    Width,
}

impl Headroom {
    fn min_modulus(self, bitwidth: u32) -> u64 {
        match self {
            Headroom::Difference => 1 << (bitwidth + 1),
            Headroom::Width => 1 << bitwidth,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SelectOptions {
    pub headroom: Headroom,
    pub query_depth: usize,
    pub backend: BackendKind,
    pub seed: u64,
    pub n: usize,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            headroom: Headroom::Difference,
            query_depth: DEFAULT_QUERY_DEPTH,
            backend: BackendKind::Clear,
            seed: 0,
            n: DEFAULT_RING_DEGREE,
        }
    }
}

/// A feasible `(p, r)` with its predicted cost.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub p: u64,
    pub r: u32,
    pub modulus: u64,
    /// Predicted non-scalar multiplications of one raised less-than.
    pub nonscalar: u64,
    /// Levels for one raised comparison.
    pub compare_depth: usize,
    /// Chain levels including the query.
    pub levels: usize,
}

fn synthetic_g(p: u64, e: u32) -> DensePoly {
    let m = p.pow(e);
    let deg = g_degree_bound(p, e);
    let coeffs = (0..=deg).map(|i| if i % 2 == 1 { 2 } else { 0 }).collect();
    DensePoly::new(coeffs, m)
}

/// Non-scalar multiplications of a raised space-switch less-than, predicted
/// from the evaluation plans alone. The lowest-digit polynomials are stood in
/// for by dense odd polynomials of the same degree, so nothing large is
/// interpolated.
pub fn predict_lt_nonscalar(p: u64, r: u32) -> Result<u64> {
    let ev = Evaluator::new(DryRun, p, r, usize::MAX / 2)?;
    let g = |e: u32| choose_plan(&ev, &[&synthetic_g(p, e)], e, EvalPath::Auto).nonscalar;
    let reduction: u64 = (2..=r).map(g).sum();
    let f_lt = f_lt_poly(p)?;
    let f_eq = f_eq_poly(p)?;
    let digit = choose_plan(&ev, &[&*f_lt, &*f_eq], 1, EvalPath::Standard).nonscalar;
    let (aggregation, raise) = if r >= 2 { (2 * r as u64 - 3, g(r)) } else { (0, 0) };
    Ok(reduction + r as u64 * digit + aggregation + raise)
}

/// Non-scalar multiplications of the single-prime baseline at prime `q`.
pub fn predict_direct_nonscalar(q: u64) -> Result<u64> {
    let ev = Evaluator::new(DryRun, q, 1, usize::MAX / 2)?;
    Ok(choose_plan(&ev, &[&*f_lt_poly(q)?], 1, EvalPath::Auto).nonscalar)
}

fn check_bitwidth(bitwidth: u32) -> Result<()> {
    if !(MIN_BITWIDTH..=MAX_BITWIDTH).contains(&bitwidth) {
        return Err(Error::InvalidParameter(format!(
            "bit-width {bitwidth} outside {MIN_BITWIDTH}..={MAX_BITWIDTH}"
        )));
    }
    Ok(())
}

/// Whether `(p, r)` holds `bitwidth`-bit inputs under `headroom`.
pub fn feasible(p: u64, r: u32, bitwidth: u32, headroom: Headroom) -> bool {
    p >= 3 && is_prime(p) && p.checked_pow(r).is_some_and(|m| m < 1 << 40 && m >= headroom.min_modulus(bitwidth))
}

/// Every candidate that fits the width and the depth budget, cheapest first.
/// For each prime only the smallest sufficient `r >= 2` is kept. On ciphertexts
/// the raise needs `r <= p`.
pub fn rank_candidates(bitwidth: u32, depth_budget: usize, opts: &SelectOptions) -> Result<Vec<Candidate>> {
    check_bitwidth(bitwidth)?;
    let need = opts.headroom.min_modulus(bitwidth);
    let mut out = Vec::new();
    for p in (3..=MAX_PRIME).filter(|&p| is_prime(p)) {
        let mut r = 2u32;
        while p.pow(r) < need {
            r += 1;
        }
        if opts.backend == BackendKind::ToyBgv && r as u64 > p {
            continue;
        }
        let compare_depth = estimate_depth(p, r);
        let levels = compare_depth + opts.query_depth;
        if levels > depth_budget || (opts.backend == BackendKind::ToyBgv && levels > MAX_LEVEL) {
            continue;
        }
        out.push(Candidate {
            p,
            r,
            modulus: p.pow(r),
            nonscalar: predict_lt_nonscalar(p, r)?,
            compare_depth,
            levels,
        });
    }
    out.sort_by_key(|c| (c.nonscalar, c.compare_depth, c.modulus, c.p));
    Ok(out)
}

/// Cheapest parameter set for `bitwidth`-bit columns within `depth_budget`
/// levels, with default options.
pub fn select_params(bitwidth: u32, depth_budget: usize) -> Result<ParamSet> {
    select_params_with(bitwidth, depth_budget, &SelectOptions::default())
}

pub fn select_params_with(bitwidth: u32, depth_budget: usize, opts: &SelectOptions) -> Result<ParamSet> {
    let best = rank_candidates(bitwidth, depth_budget, opts)?
        .into_iter()
        .next()
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "no p <= {MAX_PRIME} fits {bitwidth}-bit inputs within {depth_budget} levels"
            ))
        })?;
    ParamSet::new(best.p, best.r, opts.n, best.levels, opts.seed, opts.backend)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compare::{lt, CompareOptions};
    use crate::eval::Evaluator;

    fn measured(p: u64, r: u32) -> u64 {
        let ev = Evaluator::new(DryRun, p, r, usize::MAX / 2).unwrap();
        let a = ev.encode(&[0]).unwrap();
        let b = ev.encode(&[0]).unwrap();
        let opts = CompareOptions {
            raise: true,
            ..CompareOptions::default()
        };
        lt(&ev, &a, &b, &opts).unwrap();
        ev.ledger().totals().nonscalar
    }

    #[test]
    fn prediction_matches_dry_run() {
        for (p, r) in [(3, 1), (3, 2), (3, 4), (5, 2), (5, 3), (5, 4), (7, 2), (7, 3), (11, 2), (11, 3), (17, 2), (23, 2)] {
            assert_eq!(predict_lt_nonscalar(p, r).unwrap(), measured(p, r), "({p},{r})");
        }
    }

    #[test]
    fn direct_prediction_matches_dry_run() {
        for q in [11u64, 631] {
            let ev = Evaluator::new(DryRun, q, 1, usize::MAX / 2).unwrap();
            let a = ev.encode(&[0]).unwrap();
            crate::compare::lt_direct_prime(&ev, &a, &a).unwrap();
            assert_eq!(predict_direct_nonscalar(q).unwrap(), ev.ledger().totals().nonscalar);
        }
    }
}
