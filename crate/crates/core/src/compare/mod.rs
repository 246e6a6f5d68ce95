//! Exact comparison of `p^r`-tagged values through their digits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Backend, CipherHandle, EvalPath, Evaluator, Handle};
use crate::interp::{f_eq_poly, f_lt_poly};
use crate::ring::SignedInt;
use crate::switch::{raise_mod, reduce_to_digits, ExtractionStrategy};

pub const STAGE_DIGIT_COMPARE: &str = "digit-compare";
pub const STAGE_AGGREGATION: &str = "aggregation";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Neq,
}

impl CompareOp {
    pub const ALL: [CompareOp; 6] = [
        CompareOp::Lt,
        CompareOp::Le,
        CompareOp::Gt,
        CompareOp::Ge,
        CompareOp::Eq,
        CompareOp::Neq,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CompareOp::Lt => "lt",
            CompareOp::Le => "le",
            CompareOp::Gt => "gt",
            CompareOp::Ge => "ge",
            CompareOp::Eq => "eq",
            CompareOp::Neq => "neq",
        }
    }

    pub fn holds(&self, a: i64, b: i64) -> bool {
        match self {
            CompareOp::Lt => a < b,
            CompareOp::Le => a <= b,
            CompareOp::Gt => a > b,
            CompareOp::Ge => a >= b,
            CompareOp::Eq => a == b,
            CompareOp::Neq => a != b,
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for CompareOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|op| op.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown comparison {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareOptions {
    /// Evaluate the less-than and equality polynomials of a digit on one
    /// shared power ladder.
    pub share_powers: bool,
    /// Lift the `{0, 1}` result back to `p^r` before returning.
    pub raise: bool,
    pub strategy: ExtractionStrategy,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            share_powers: true,
            raise: false,
            strategy: ExtractionStrategy::SpaceSwitch,
        }
    }
}

/// A `{0, 1}`-valued comparison outcome, tagged `p`, or `p^r` once raised.
#[derive(Clone, Debug)]
pub struct PredicateResult<V> {
    pub handle: CipherHandle<V>,
}

impl<V> PredicateResult<V> {
    pub fn is_raised(&self) -> bool {
        self.handle.tag_exp() > 1
    }
}

struct DigitTests<V> {
    lt: Vec<CipherHandle<V>>,
    eq: Vec<CipherHandle<V>>,
}

fn digit_tests<B: Backend>(
    ev: &Evaluator<B>,
    d: &Handle<B>,
    opts: &CompareOptions,
    want_lt: bool,
) -> Result<DigitTests<B::Value>> {
    let p = ev.p();
    let digits = reduce_to_digits(ev, d, opts.strategy)?;
    let _s = ev.stage(STAGE_DIGIT_COMPARE);
    let f_eq = f_eq_poly(p)?;
    let mut out = DigitTests {
        lt: Vec::new(),
        eq: Vec::new(),
    };
    if !want_lt {
        for z in &digits.digits {
            out.eq.push(ev.ps_eval(&f_eq, z, EvalPath::Auto)?);
        }
        return Ok(out);
    }
    let f_lt = f_lt_poly(p)?;
    for z in &digits.digits {
        if opts.share_powers {
            let mut both = ev.ps_eval_shared(&[&f_lt, &f_eq], z)?;
            out.eq.push(both.pop().expect("two outputs"));
            out.lt.push(both.pop().expect("two outputs"));
        } else {
            out.lt.push(ev.ps_eval(&f_lt, z, EvalPath::Auto)?);
            out.eq.push(ev.ps_eval(&f_eq, z, EvalPath::Auto)?);
        }
    }
    Ok(out)
}

fn check_inputs<B: Backend>(ev: &Evaluator<B>, hs: &[&Handle<B>]) -> Result<()> {
    for h in hs {
        if h.tag_exp() != ev.r() {
            return Err(Error::TagMismatch {
                left: h.ptxt_modulus(),
                right: ev.modulus(),
            });
        }
    }
    Ok(())
}

fn finish<B: Backend>(
    ev: &Evaluator<B>,
    h: Handle<B>,
    complement: bool,
    opts: &CompareOptions,
) -> Result<PredicateResult<B::Value>> {
    let h = if complement {
        let _s = ev.stage(STAGE_AGGREGATION);
        ev.plain_sub(1, &h)?
    } else {
        h
    };
    let handle = if opts.raise { raise_mod(ev, &h)? } else { h };
    Ok(PredicateResult { handle })
}

/// `1` where the difference `d` is negative (balanced), else `0`.
fn negative<B: Backend>(ev: &Evaluator<B>, d: &Handle<B>, opts: &CompareOptions) -> Result<Handle<B>> {
    let t = digit_tests(ev, d, opts, true)?;
    let _s = ev.stage(STAGE_AGGREGATION);
    let r = t.lt.len();
    // Scan from the most significant digit: the first nonzero digit of d
    // decides the sign.
    let mut lt = t.lt[r - 1].clone();
    let mut eq = t.eq[r - 1].clone();
    for i in (0..r - 1).rev() {
        lt = ev.add(&lt, &ev.mul(&eq, &t.lt[i])?)?;
        if i > 0 {
            eq = ev.mul(&eq, &t.eq[i])?;
        }
    }
    Ok(lt)
}

fn zero<B: Backend>(ev: &Evaluator<B>, d: &Handle<B>, opts: &CompareOptions) -> Result<Handle<B>> {
    let t = digit_tests(ev, d, opts, false)?;
    let _s = ev.stage(STAGE_AGGREGATION);
    product_tree(ev, t.eq)
}

fn product_tree<B: Backend>(ev: &Evaluator<B>, mut xs: Vec<Handle<B>>) -> Result<Handle<B>> {
    while xs.len() > 1 {
        let mut next = Vec::with_capacity(xs.len().div_ceil(2));
        let mut it = xs.chunks(2);
        for pair in it.by_ref() {
            next.push(match pair {
                [x, y] => ev.mul(x, y)?,
                [x] => x.clone(),
                _ => unreachable!(),
            });
        }
        xs = next;
    }
    Ok(xs.pop().expect("at least one digit"))
}

/// Which difference to test and whether to complement the outcome.
fn plan(op: CompareOp) -> (bool, bool, bool) {
    // (swap operands, test equality instead of sign, complement)
    match op {
        CompareOp::Lt => (false, false, false),
        CompareOp::Gt => (true, false, false),
        CompareOp::Ge => (false, false, true),
        CompareOp::Le => (true, false, true),
        CompareOp::Eq => (false, true, false),
        CompareOp::Neq => (false, true, true),
    }
}

fn from_difference<B: Backend>(
    ev: &Evaluator<B>,
    op: CompareOp,
    d: &Handle<B>,
    opts: &CompareOptions,
) -> Result<PredicateResult<B::Value>> {
    let (_, equality, complement) = plan(op);
    let h = if equality { zero(ev, d, opts)? } else { negative(ev, d, opts)? };
    finish(ev, h, complement, opts)
}

/// `op(a, b)` as `0`/`1`. Requires `|a - b| <= (p^r - 1)/2` in balanced terms.
pub fn compare<B: Backend>(
    ev: &Evaluator<B>,
    op: CompareOp,
    a: &Handle<B>,
    b: &Handle<B>,
    opts: &CompareOptions,
) -> Result<PredicateResult<B::Value>> {
    check_inputs(ev, &[a, b])?;
    let (swap, _, _) = plan(op);
    let (x, y) = if swap { (b, a) } else { (a, b) };
    let d = {
        let _s = ev.stage(crate::switch::STAGE_REDUCTION);
        ev.sub(x, y)?
    };
    from_difference(ev, op, &d, opts)
}

/// `op(a, c)` against a public constant.
pub fn compare_plain<B: Backend>(
    ev: &Evaluator<B>,
    op: CompareOp,
    a: &Handle<B>,
    c: SignedInt,
    opts: &CompareOptions,
) -> Result<PredicateResult<B::Value>> {
    check_inputs(ev, &[a])?;
    let (swap, _, _) = plan(op);
    let d = {
        let _s = ev.stage(crate::switch::STAGE_REDUCTION);
        if swap {
            ev.plain_sub(c, a)?
        } else {
            ev.sub_plain(a, c)?
        }
    };
    from_difference(ev, op, &d, opts)
}

/// `1` where `a < b` (balanced), else `0`. Requires `|a - b| <= (p^r - 1)/2`.
pub fn lt<B: Backend>(ev: &Evaluator<B>, a: &Handle<B>, b: &Handle<B>, opts: &CompareOptions) -> Result<PredicateResult<B::Value>> {
    compare(ev, CompareOp::Lt, a, b, opts)
}

pub fn eq<B: Backend>(ev: &Evaluator<B>, a: &Handle<B>, b: &Handle<B>, opts: &CompareOptions) -> Result<PredicateResult<B::Value>> {
    compare(ev, CompareOp::Eq, a, b, opts)
}

pub fn gt<B: Backend>(ev: &Evaluator<B>, a: &Handle<B>, b: &Handle<B>, opts: &CompareOptions) -> Result<PredicateResult<B::Value>> {
    compare(ev, CompareOp::Gt, a, b, opts)
}

pub fn ge<B: Backend>(ev: &Evaluator<B>, a: &Handle<B>, b: &Handle<B>, opts: &CompareOptions) -> Result<PredicateResult<B::Value>> {
    compare(ev, CompareOp::Ge, a, b, opts)
}

pub fn le<B: Backend>(ev: &Evaluator<B>, a: &Handle<B>, b: &Handle<B>, opts: &CompareOptions) -> Result<PredicateResult<B::Value>> {
    compare(ev, CompareOp::Le, a, b, opts)
}

pub fn neq<B: Backend>(ev: &Evaluator<B>, a: &Handle<B>, b: &Handle<B>, opts: &CompareOptions) -> Result<PredicateResult<B::Value>> {
    compare(ev, CompareOp::Neq, a, b, opts)
}

/// Baseline: one less-than polynomial of degree `p - 1` over a single large
/// prime, applied to `a - b`. The evaluator must have `r = 1`.
pub fn lt_direct_prime<B: Backend>(
    ev: &Evaluator<B>,
    a: &Handle<B>,
    b: &Handle<B>,
) -> Result<PredicateResult<B::Value>> {
    if ev.r() != 1 {
        return Err(Error::InvalidParameter(
            "direct comparison needs a prime plaintext modulus (r = 1)".into(),
        ));
    }
    check_inputs(ev, &[a, b])?;
    let d = {
        let _s = ev.stage(crate::switch::STAGE_REDUCTION);
        ev.sub(a, b)?
    };
    let _s = ev.stage(STAGE_DIGIT_COMPARE);
    let handle = ev.ps_eval(&*f_lt_poly(ev.p())?, &d, EvalPath::Auto)?;
    Ok(PredicateResult { handle })
}

/// Smallest prime at least `n`.
pub fn next_prime(n: u64) -> u64 {
    (n.max(2)..)
        .find(|&c| crate::ring::modular::is_prime(c))
        .expect("primes are unbounded")
}

#[cfg(test)]
mod tests;
