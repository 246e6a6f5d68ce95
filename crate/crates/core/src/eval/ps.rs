//! Paterson-Stockmeyer polynomial evaluation.
//!
//! `f` is cut into blocks of `k` coefficients. Each block is a scalar
//! combination of the baby powers `x, ..., x^(k-1)`; blocks are joined
//! pairwise by the giant powers `x^k, x^(2k), x^(4k), ...`. The block size
//! is chosen by replaying the evaluation on a [`DryRun`] backend.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use super::{Backend, DryRun, Evaluator, Handle};
use crate::error::Result;
use crate::interp::odd_part_decompose;
use crate::ring::modular::{balanced, ceil_log2};
use crate::ring::DensePoly;

/// How to walk the polynomial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum EvalPath {
    /// Cheapest plan that meets the depth target.
    #[default]
    Auto,
    /// Plain baby-step/giant-step on `x`.
    Standard,
    /// For odd (even) `f = x*H(x^2)` (`H(x^2)`): square once, run `H`.
    Parity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsPlan {
    pub parity: bool,
    pub k: usize,
    pub nonscalar: u64,
    pub depth: usize,
}

/// Non-scalar multiplication bound `2*ceil(sqrt(d+1)) + ceil(log2 d)`.
pub fn ps_nonscalar_bound(d: usize) -> u64 {
    2 * ceil_sqrt(d as u64 + 1) + ceil_log2(d as u64) as u64
}

/// Depth bound `ceil(log2 d) + 2`.
pub fn ps_depth_bound(d: usize) -> usize {
    ceil_log2(d as u64) as usize + 2
}

/// Depth the plan chooser aims for: `ceil(log2 d) + 1`.
fn depth_target(d: usize) -> usize {
    if d <= 1 {
        0
    } else {
        ceil_log2(d as u64) as usize + 1
    }
}

fn ceil_sqrt(x: u64) -> u64 {
    let mut s = (x as f64).sqrt() as u64;
    while s * s < x {
        s += 1;
    }
    while s > 0 && (s - 1) * (s - 1) >= x {
        s -= 1;
    }
    s
}

fn max_block(d: usize) -> usize {
    (d + 1).min(2 * ceil_sqrt(d as u64 + 1) as usize + 2)
}

enum Term<V> {
    Zero,
    Const(u64),
    Enc(super::CipherHandle<V>),
}

struct Powers<V> {
    pows: HashMap<usize, super::CipherHandle<V>>,
}

impl<V: Clone> Powers<V> {
    fn new(x: &super::CipherHandle<V>) -> Self {
        let mut pows = HashMap::new();
        pows.insert(1, x.clone());
        Self { pows }
    }

    /// `x^i`, built from squarings of the even halves and
    /// `x^(2^a) * x^(i - 2^a)` for odd `i`, so its depth is `ceil(log2 i)`.
    fn get<B: Backend<Value = V>>(
        &mut self,
        ev: &Evaluator<B>,
        i: usize,
    ) -> Result<super::CipherHandle<V>> {
        if let Some(h) = self.pows.get(&i) {
            return Ok(h.clone());
        }
        let h = if i % 2 == 0 {
            let half = self.get(ev, i / 2)?;
            ev.square(&half)?
        } else {
            let a = 1usize << (usize::BITS - 1 - i.leading_zeros());
            let hi = self.get(ev, a)?;
            let lo = self.get(ev, i - a)?;
            ev.mul(&hi, &lo)?
        };
        self.pows.insert(i, h.clone());
        Ok(h)
    }
}

fn add_terms<B: Backend>(
    ev: &Evaluator<B>,
    a: Term<B::Value>,
    b: Term<B::Value>,
    m: u64,
) -> Result<Term<B::Value>> {
    Ok(match (a, b) {
        (Term::Zero, t) | (t, Term::Zero) => t,
        (Term::Const(x), Term::Const(y)) => Term::Const((x + y) % m),
        (Term::Const(c), Term::Enc(h)) | (Term::Enc(h), Term::Const(c)) => {
            Term::Enc(ev.add_plain(&h, balanced(c, m))?)
        }
        (Term::Enc(x), Term::Enc(y)) => Term::Enc(ev.add(&x, &y)?),
    })
}

/// `c * h`, avoiding scalar multiplications for `c` in `{0, 1, -1}`.
fn scaled<B: Backend>(ev: &Evaluator<B>, h: &Handle<B>, c: u64, m: u64) -> Result<Term<B::Value>> {
    Ok(match balanced(c, m) {
        0 => Term::Zero,
        1 => Term::Enc(h.clone()),
        -1 => Term::Enc(ev.neg(h)?),
        s => Term::Enc(ev.mul_plain(h, s)?),
    })
}

fn leaf<B: Backend>(
    ev: &Evaluator<B>,
    pows: &mut Powers<B::Value>,
    block: &[u64],
    m: u64,
) -> Result<Term<B::Value>> {
    let mut acc = match block.first() {
        Some(&c) if c != 0 => Term::Const(c),
        _ => Term::Zero,
    };
    for (i, &c) in block.iter().enumerate().skip(1) {
        if c == 0 {
            continue;
        }
        let xi = pows.get(ev, i)?;
        acc = match (acc, balanced(c, m)) {
            (Term::Enc(h), -1) => Term::Enc(ev.sub(&h, &xi)?),
            (acc, _) => {
                let t = scaled(ev, &xi, c, m)?;
                add_terms(ev, acc, t, m)?
            }
        };
    }
    Ok(acc)
}

fn blocks<B: Backend>(
    ev: &Evaluator<B>,
    pows: &mut Powers<B::Value>,
    coeffs: &[u64],
    k: usize,
    m: u64,
) -> Result<Term<B::Value>> {
    let nblocks = coeffs.len().div_ceil(k).max(1);
    let levels = ceil_log2(nblocks as u64);
    rec(ev, pows, coeffs, k, m, 0, levels)
}

fn rec<B: Backend>(
    ev: &Evaluator<B>,
    pows: &mut Powers<B::Value>,
    coeffs: &[u64],
    k: usize,
    m: u64,
    first: usize,
    j: u32,
) -> Result<Term<B::Value>> {
    let start = first * k;
    if start >= coeffs.len() {
        return Ok(Term::Zero);
    }
    if j == 0 {
        let end = (start + k).min(coeffs.len());
        return leaf(ev, pows, &coeffs[start..end], m);
    }
    let half = 1usize << (j - 1);
    let lo = rec(ev, pows, coeffs, k, m, first, j - 1)?;
    let hi = rec(ev, pows, coeffs, k, m, first + half, j - 1)?;
    let prod = match hi {
        Term::Zero => return Ok(lo),
        Term::Const(c) => {
            let g = pows.get(ev, k * half)?;
            scaled(ev, &g, c, m)?
        }
        Term::Enc(h) => {
            let g = pows.get(ev, k * half)?;
            Term::Enc(ev.mul(&g, &h)?)
        }
    };
    add_terms(ev, prod, lo, m)
}

fn finish<B: Backend>(ev: &Evaluator<B>, t: Term<B::Value>, x: &Handle<B>) -> Result<Handle<B>> {
    match t {
        Term::Enc(h) => Ok(h),
        Term::Zero => ev.mul_plain(x, 0),
        Term::Const(c) => {
            let z = ev.mul_plain(x, 0)?;
            ev.add_plain(&z, balanced(c, x.ptxt_modulus()))
        }
    }
}

fn run<B: Backend>(ev: &Evaluator<B>, f: &DensePoly, x: &Handle<B>, parity: bool, k: usize) -> Result<Handle<B>> {
    let m = x.ptxt_modulus();
    let coeffs: Vec<u64> = f.coeffs.iter().map(|c| c % m).collect();
    let f = DensePoly::new(coeffs, m);
    if !parity {
        let mut pows = Powers::new(x);
        let t = blocks(ev, &mut pows, &f.coeffs, k, m)?;
        return finish(ev, t, x);
    }
    let dec = odd_part_decompose(&f)?;
    let y = ev.square(x)?;
    let mut pows = Powers::new(&y);
    let t = blocks(ev, &mut pows, &dec.h.coeffs, k, m)?;
    if !dec.odd {
        return finish(ev, t, x);
    }
    match t {
        Term::Enc(h) => ev.mul(x, &h),
        Term::Zero => ev.mul_plain(x, 0),
        Term::Const(c) => ev.mul_plain(x, balanced(c, m)),
    }
}

/// Coefficient pattern that determines every count: zero, one, minus one,
/// or anything else.
fn shape(coeffs: &[u64], m: u64) -> Vec<u8> {
    coeffs
        .iter()
        .map(|&c| match balanced(c % m, m) {
            0 => 0,
            1 => 1,
            -1 => 2,
            _ => 3,
        })
        .collect()
}

type PlanKey = (EvalPath, Vec<Vec<u8>>);

fn plan_cache() -> &'static Mutex<HashMap<PlanKey, PsPlan>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, PsPlan>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn measure<B: Backend>(ev: &Evaluator<B>, fs: &[&DensePoly], tag: u32, parity: bool, k: usize) -> Option<(u64, usize)> {
    let dry = Evaluator::new(DryRun, ev.p(), ev.r(), usize::MAX / 2).ok()?;
    let x = dry.encode_with_tag(&[0], tag).ok()?;
    let mut depth = 0;
    if parity {
        let y = run(&dry, fs[0], &x, true, k).ok()?;
        depth = y.depth();
    } else {
        let outs = shared(&dry, fs, &x, k).ok()?;
        for o in outs {
            depth = depth.max(o.depth());
        }
    }
    Some((dry.ledger().totals().nonscalar, depth))
}

/// Picks the cheapest plan meeting the depth target, else the shallowest.
/// Ties go to the standard path, then to the smaller block size.
pub fn choose_plan<B: Backend>(ev: &Evaluator<B>, fs: &[&DensePoly], tag: u32, path: EvalPath) -> PsPlan {
    let m = ev.p().pow(tag);
    let key = (path, fs.iter().map(|f| shape(&f.coeffs, m)).collect::<Vec<_>>());
    if let Some(p) = plan_cache().lock().expect("plan cache poisoned").get(&key) {
        return *p;
    }
    let d = fs.iter().map(|f| f.degree()).max().unwrap_or(0);
    let target = depth_target(d);
    let mut cands = Vec::new();
    if path != EvalPath::Parity || fs.len() > 1 {
        for k in 1..=max_block(d) {
            if let Some((n, dep)) = measure(ev, fs, tag, false, k) {
                cands.push(PsPlan { parity: false, k, nonscalar: n, depth: dep });
            }
        }
    }
    if path != EvalPath::Standard && fs.len() == 1 && d >= 2 {
        if let Ok(dec) = odd_part_decompose(fs[0]) {
            for k in 1..=max_block(dec.h.degree()) {
                if let Some((n, dep)) = measure(ev, fs, tag, true, k) {
                    cands.push(PsPlan { parity: true, k, nonscalar: n, depth: dep });
                }
            }
        }
    }
    let best = cands
        .iter()
        .filter(|c| c.depth <= target)
        .min_by_key(|c| (c.nonscalar, c.depth, c.parity, c.k))
        .or_else(|| cands.iter().min_by_key(|c| (c.depth, c.nonscalar, c.parity, c.k)))
        .copied()
        .unwrap_or(PsPlan { parity: false, k: 1, nonscalar: 0, depth: 0 });
    plan_cache()
        .lock()
        .expect("plan cache poisoned")
        .insert(key, best);
    best
}

fn shared<B: Backend>(ev: &Evaluator<B>, fs: &[&DensePoly], x: &Handle<B>, k: usize) -> Result<Vec<Handle<B>>> {
    let m = x.ptxt_modulus();
    let mut pows = Powers::new(x);
    fs.iter()
        .map(|f| {
            let coeffs: Vec<u64> = f.coeffs.iter().map(|c| c % m).collect();
            let t = blocks(ev, &mut pows, &coeffs, k, m)?;
            finish(ev, t, x)
        })
        .collect()
}

pub(super) fn ps_eval<B: Backend>(ev: &Evaluator<B>, f: &DensePoly, x: &Handle<B>, path: EvalPath) -> Result<Handle<B>> {
    if path == EvalPath::Parity {
        odd_part_decompose(f)?;
    }
    ev.ledger().record_poly_eval(&f.name);
    let plan = choose_plan(ev, &[f], x.tag_exp(), path);
    run(ev, f, x, plan.parity, plan.k)
}

pub(super) fn ps_eval_shared<B: Backend>(ev: &Evaluator<B>, fs: &[&DensePoly], x: &Handle<B>) -> Result<Vec<Handle<B>>> {
    for f in fs {
        ev.ledger().record_poly_eval(&f.name);
    }
    if fs.is_empty() {
        return Ok(Vec::new());
    }
    let plan = choose_plan(ev, fs, x.tag_exp(), EvalPath::Standard);
    shared(ev, fs, x, plan.k)
}
