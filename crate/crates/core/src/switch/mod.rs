//! Moving values between the number space `Z_{p^r}` and the digit space
//! `Z_p`: digit extraction, tag changes, and modulus raising.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Backend, EvalPath, Evaluator, Handle};
use crate::interp::{f_lift_poly, g_degree_bound, g_name, g_poly, F_LIFT_NAME};
use crate::ring::modular::ceil_log2;
use crate::ring::{recompose_digits, Residue, SignedInt};

pub const STAGE_REDUCTION: &str = "reduction";
pub const STAGE_RAISE: &str = "raise";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionStrategy {
    /// Repeated lifting-polynomial evaluations, one digit lifted per step.
    HaleviShoup,
    /// Lifting polynomials for the intermediate values, one lowest-digit
    /// polynomial per row for the final digit.
    ChenHan,
    /// Lowest-digit polynomials of every precision for every row.
    Geelen,
    /// One lowest-digit polynomial per row, then exact division by `p`.
    #[default]
    SpaceSwitch,
}

impl ExtractionStrategy {
    pub const ALL: [ExtractionStrategy; 4] = [
        ExtractionStrategy::HaleviShoup,
        ExtractionStrategy::ChenHan,
        ExtractionStrategy::Geelen,
        ExtractionStrategy::SpaceSwitch,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExtractionStrategy::HaleviShoup => "halevi-shoup",
            ExtractionStrategy::ChenHan => "chen-han",
            ExtractionStrategy::Geelen => "geelen",
            ExtractionStrategy::SpaceSwitch => "space-switch",
        }
    }
}

impl fmt::Display for ExtractionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ExtractionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy {s:?}")))
    }
}

/// The `r` balanced digits of a value, each tagged `p`.
#[derive(Clone, Debug)]
pub struct DigitBundle<V> {
    pub digits: Vec<crate::eval::CipherHandle<V>>,
    pub origin_modulus: u64,
}

impl<V> DigitBundle<V> {
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }
}

pub fn divide_by_p<B: Backend>(ev: &Evaluator<B>, x: &Handle<B>) -> Result<Handle<B>> {
    ev.divide_by_p(x)
}

pub fn change_mod_to_p<B: Backend>(ev: &Evaluator<B>, x: &Handle<B>) -> Result<Handle<B>> {
    ev.change_mod_to_p(x)
}

/// Splits a `p^r`-tagged value into its balanced base-`p` digits.
pub fn reduce_to_digits<B: Backend>(
    ev: &Evaluator<B>,
    x: &Handle<B>,
    strategy: ExtractionStrategy,
) -> Result<DigitBundle<B::Value>> {
    let r = ev.r();
    if x.tag_exp() != r {
        return Err(Error::TagMismatch {
            left: x.ptxt_modulus(),
            right: ev.modulus(),
        });
    }
    let _stage = ev.stage(STAGE_REDUCTION);
    let digits = match strategy {
        ExtractionStrategy::SpaceSwitch => space_switch(ev, x)?,
        _ => grid(ev, x, strategy)?,
    };
    Ok(DigitBundle {
        digits,
        origin_modulus: ev.modulus(),
    })
}

fn space_switch<B: Backend>(ev: &Evaluator<B>, x: &Handle<B>) -> Result<Vec<Handle<B>>> {
    let p = ev.p();
    let r = ev.r();
    let mut digits = Vec::with_capacity(r as usize);
    let mut b = x.clone();
    for i in 0..r.saturating_sub(1) {
        let g = g_poly(p, r - i)?;
        let a = ev.ps_eval(&g, &b, EvalPath::Auto)?;
        b = ev.divide_by_p(&ev.sub(&b, &a)?)?;
        digits.push(ev.change_mod_to_p(&a)?);
    }
    digits.push(b);
    Ok(digits)
}

/// The baseline strategies fill a triangle `a[i][j]` where row `i` holds
/// values congruent to digit `i` modulo `p^(j+1)`, starting from
/// `b_i = (...((x - a[0][i])/p - a[1][i-1])/p ... - a[i-1][1])/p`.
fn grid<B: Backend>(
    ev: &Evaluator<B>,
    x: &Handle<B>,
    strategy: ExtractionStrategy,
) -> Result<Vec<Handle<B>>> {
    let p = ev.p();
    let r = ev.r() as usize;
    let lift = if r >= 2 && strategy != ExtractionStrategy::Geelen {
        Some(f_lift_poly(p, r as u32)?)
    } else {
        None
    };
    let mut rows: Vec<Vec<Handle<B>>> = Vec::with_capacity(r);
    for i in 0..r {
        let mut b = x.clone();
        for (k, row) in rows.iter().enumerate() {
            b = ev.divide_by_p(&ev.sub(&b, &row[i - k])?)?;
        }
        let last = r - 1 - i;
        let mut row = vec![b.clone()];
        for j in 1..=last {
            let next = match strategy {
                ExtractionStrategy::HaleviShoup => {
                    ev.ps_eval(lift.as_ref().expect("r >= 2"), &row[j - 1], EvalPath::Auto)?
                }
                ExtractionStrategy::ChenHan if j < last => {
                    ev.ps_eval(lift.as_ref().expect("r >= 2"), &row[j - 1], EvalPath::Auto)?
                }
                ExtractionStrategy::ChenHan => {
                    ev.ps_eval(&*g_poly(p, (r - i) as u32)?, &b, EvalPath::Auto)?
                }
                ExtractionStrategy::Geelen => {
                    ev.ps_eval(&*g_poly(p, (j + 1) as u32)?, &b, EvalPath::Auto)?
                }
                ExtractionStrategy::SpaceSwitch => unreachable!("handled separately"),
            };
            row.push(next);
        }
        rows.push(row);
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| ev.change_mod_to_p(&row[r - 1 - i]))
        .collect()
}

/// Planned polynomial evaluations per strategy, without running anything.
pub fn extraction_eval_counts(r: u32, strategy: ExtractionStrategy) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    if r < 2 {
        return m;
    }
    let r64 = r as u64;
    match strategy {
        ExtractionStrategy::HaleviShoup => {
            m.insert(F_LIFT_NAME.to_string(), r64 * (r64 - 1) / 2);
        }
        ExtractionStrategy::ChenHan => {
            let f = (r64 - 1) * (r64 - 2) / 2;
            if f > 0 {
                m.insert(F_LIFT_NAME.to_string(), f);
            }
            for e in 2..=r {
                m.insert(g_name(e), 1);
            }
        }
        ExtractionStrategy::Geelen => {
            for e in 2..=r {
                m.insert(g_name(e), (r - e + 1) as u64);
            }
        }
        ExtractionStrategy::SpaceSwitch => {
            for e in 2..=r {
                m.insert(g_name(e), 1);
            }
        }
    }
    m
}

/// Lifts a `p`-tagged value whose balanced representative lies in
/// `(-p/2, p/2]` back to the number space `Z_{p^r}`.
pub fn raise_mod<B: Backend>(ev: &Evaluator<B>, x: &Handle<B>) -> Result<Handle<B>> {
    if x.tag_exp() != 1 {
        return Err(Error::TagMismatch {
            left: x.ptxt_modulus(),
            right: ev.p(),
        });
    }
    let r = ev.r();
    if r == 1 {
        return Ok(x.clone());
    }
    let _stage = ev.stage(STAGE_RAISE);
    let wide = ev.extend_tag(x, r)?;
    ev.ps_eval(&*g_poly(ev.p(), r)?, &wide, EvalPath::Auto)
}

/// Decodes each digit and recomposes slotwise.
pub fn recompose<B: Backend>(ev: &Evaluator<B>, bundle: &DigitBundle<B::Value>) -> Result<Vec<Residue>> {
    let decoded = bundle
        .digits
        .iter()
        .map(|d| ev.decode(d))
        .collect::<Result<Vec<_>>>()?;
    let slots = decoded.first().map_or(0, Vec::len);
    Ok((0..slots)
        .map(|s| {
            let ds: Vec<SignedInt> = decoded.iter().map(|d| d[s]).collect();
            recompose_digits(&ds, ev.p())
        })
        .collect())
}

/// Conservative multiplicative depth of each pipeline stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DepthEstimate {
    /// `sum_i ceil(log2((p-1)(r-i-1)+1))` over the `r-1` reduction rows.
    pub reduction_formula: usize,
    /// The same with one level of evaluation slack per polynomial.
    pub reduction: usize,
    pub compare: usize,
    pub aggregation: usize,
    pub raise: usize,
    pub total: usize,
}

fn eval_depth(degree: usize) -> usize {
    if degree <= 1 {
        0
    } else {
        ceil_log2(degree as u64) as usize + 1
    }
}

pub fn depth_breakdown(p: u64, r: u32) -> DepthEstimate {
    let mut est = DepthEstimate::default();
    for e in 2..=r {
        let d = g_degree_bound(p, e);
        est.reduction_formula += ceil_log2(d as u64) as usize;
        est.reduction += eval_depth(d);
    }
    est.compare = eval_depth(p as usize - 1);
    est.aggregation = r as usize - 1;
    est.raise = if r > 1 { eval_depth(g_degree_bound(p, r)) } else { 0 };
    est.total = est.reduction + est.compare + est.aggregation + est.raise;
    est
}

/// Upper bound on the depth of a full comparison including the raise.
pub fn estimate_depth(p: u64, r: u32) -> usize {
    depth_breakdown(p, r).total
}
