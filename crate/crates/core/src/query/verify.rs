//! Oracle harnesses: polynomials, digit extraction, comparison and the
//! reduce/raise round trip, each checked against cleartext arithmetic.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::compare::{compare, CompareOp, CompareOptions};
use crate::error::{Error, Result};
use crate::eval::{ClearEval, Evaluator};
use crate::interp::{
    check_f_eq, check_f_lift_at, check_f_lt, check_g_at, f_eq_poly, f_lift_poly, f_lt_poly, g_poly, Counterexample,
};
use crate::ring::{base_p_digits, Residue};
use crate::switch::{raise_mod, reduce_to_digits, ExtractionStrategy};

/// Domains up to this size are checked exhaustively; larger ones are sampled.
pub const EXHAUSTIVE_LIMIT: u64 = 3125;
pub const SAMPLES: usize = 4096;
pub const DEFAULT_GARBAGE_SEEDS: u64 = 100;
/// Failures listed per report.
pub const MAX_LISTED: usize = 16;
const CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyMode {
    Polys,
    Digits,
    Compare,
    Roundtrip,
}

impl VerifyMode {
    pub const ALL: [VerifyMode; 4] = [VerifyMode::Polys, VerifyMode::Digits, VerifyMode::Compare, VerifyMode::Roundtrip];

    pub fn as_str(&self) -> &'static str {
        match self {
            VerifyMode::Polys => "polys",
            VerifyMode::Digits => "digits",
            VerifyMode::Compare => "compare",
            VerifyMode::Roundtrip => "roundtrip",
        }
    }
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for VerifyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown verify mode {s:?}")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub mode: VerifyMode,
    pub p: u64,
    pub r: u32,
    pub exhaustive: bool,
    /// Inputs (or input pairs) checked.
    pub checked: u64,
    pub failures: Vec<String>,
    pub failure_count: u64,
}

impl VerifyReport {
    fn new(mode: VerifyMode, p: u64, r: u32, exhaustive: bool) -> Self {
        Self {
            schema: super::REPORT_SCHEMA,
            mode,
            p,
            r,
            exhaustive,
            checked: 0,
            failures: Vec::new(),
            failure_count: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    fn fail(&mut self, msg: impl FnOnce() -> String) {
        self.failure_count += 1;
        if self.failures.len() < MAX_LISTED {
            self.failures.push(msg());
        }
    }

    fn check_poly(&mut self, name: &str, points: u64, cx: Option<Counterexample>) {
        self.checked += points;
        if let Some(c) = cx {
            self.fail(|| format!("{name}: f({}) = {} mod {}, expected {}", c.input, c.got, c.modulus, c.expected));
        }
    }
}

fn domain(m: u64, rng: &mut ChaCha20Rng) -> (Vec<u64>, bool) {
    if m <= EXHAUSTIVE_LIMIT {
        ((0..m).collect(), true)
    } else {
        ((0..SAMPLES).map(|_| rng.random_range(0..m)).collect(), false)
    }
}

pub fn verify(mode: VerifyMode, p: u64, r: u32, seed: u64) -> Result<VerifyReport> {
    let ev = Evaluator::new(ClearEval::new(seed), p, r, usize::MAX / 2)?;
    if p == 2 {
        return Err(Error::InvalidParameter("p must be odd".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    match mode {
        VerifyMode::Polys => polys(p, r, &mut rng),
        VerifyMode::Digits => digits(&ev, &mut rng),
        VerifyMode::Compare => comparisons(&ev, &mut rng),
        VerifyMode::Roundtrip => roundtrip(p, r, DEFAULT_GARBAGE_SEEDS),
    }
}

fn polys(p: u64, r: u32, rng: &mut ChaCha20Rng) -> Result<VerifyReport> {
    let m = p.pow(r);
    let mut rep = VerifyReport::new(VerifyMode::Polys, p, r, m <= EXHAUSTIVE_LIMIT);
    rep.check_poly("F_EQ", p, check_f_eq(p, &*f_eq_poly(p)?));
    rep.check_poly("F_LT", p, check_f_lt(p, &*f_lt_poly(p)?));
    for e in 1..=r {
        let (xs, _) = domain(p.pow(e), rng);
        let n = xs.len() as u64;
        rep.check_poly(&format!("G_{{{p},{e}}}"), n, check_g_at(p, e, &*g_poly(p, e)?, xs));
    }
    if r >= 2 {
        let (xs, _) = domain(m, rng);
        let n = xs.len() as u64;
        rep.check_poly("F_p", n, check_f_lift_at(p, r, &*f_lift_poly(p, r)?, xs));
    }
    Ok(rep)
}

fn digits(ev: &Evaluator<ClearEval>, rng: &mut ChaCha20Rng) -> Result<VerifyReport> {
    let (p, r, m) = (ev.p(), ev.r(), ev.modulus());
    let (xs, exhaustive) = domain(m, rng);
    let mut rep = VerifyReport::new(VerifyMode::Digits, p, r, exhaustive);
    let signed: Vec<i64> = xs.iter().map(|&x| Residue::new(x, m).balanced()).collect();
    for strategy in ExtractionStrategy::ALL {
        for chunk in signed.chunks(CHUNK) {
            let h = ev.encode(chunk)?;
            let bundle = reduce_to_digits(ev, &h, strategy)?;
            let got = bundle.digits.iter().map(|d| ev.decode(d)).collect::<Result<Vec<_>>>()?;
            for (i, &x) in chunk.iter().enumerate() {
                rep.checked += 1;
                let want = base_p_digits(Residue::from_signed(x, m), p, r)?;
                let have: Vec<i64> = got.iter().map(|d| d[i]).collect();
                if have != want {
                    rep.fail(|| format!("{strategy}: digits of {x} = {have:?}, expected {want:?}"));
                }
            }
        }
    }
    Ok(rep)
}

/// Pairs of balanced values whose difference stays in the balanced range.
fn pairs(m: u64, rng: &mut ChaCha20Rng) -> (Vec<(i64, i64)>, bool) {
    let h = (m / 2) as i64;
    if m <= EXHAUSTIVE_LIMIT {
        let mut out = Vec::new();
        for a in -h..=h {
            for b in (a - h).max(-h)..=(a + h).min(h) {
                out.push((a, b));
            }
        }
        (out, true)
    } else {
        let out = (0..SAMPLES)
            .map(|_| loop {
                let a = rng.random_range(-h..=h);
                let b = rng.random_range(-h..=h);
                if (a - b).abs() <= h {
                    break (a, b);
                }
            })
            .collect();
        (out, false)
    }
}

fn comparisons(ev: &Evaluator<ClearEval>, rng: &mut ChaCha20Rng) -> Result<VerifyReport> {
    let (ps, exhaustive) = pairs(ev.modulus(), rng);
    let mut rep = VerifyReport::new(VerifyMode::Compare, ev.p(), ev.r(), exhaustive);
    let opts = CompareOptions::default();
    for chunk in ps.chunks(CHUNK) {
        let a = ev.encode(&chunk.iter().map(|x| x.0).collect::<Vec<_>>())?;
        let b = ev.encode(&chunk.iter().map(|x| x.1).collect::<Vec<_>>())?;
        for op in CompareOp::ALL {
            let got = ev.decode(&compare(ev, op, &a, &b, &opts)?.handle)?;
            for (&(x, y), &g) in chunk.iter().zip(&got) {
                rep.checked += 1;
                if g != i64::from(op.holds(x, y)) {
                    rep.fail(|| format!("{x} {op} {y} gave {g}"));
                }
            }
        }
    }
    Ok(rep)
}

/// `raise_mod(change_mod_to_p(x)) = x` for every balanced digit `x`, with
/// the garbage above the digit drawn from `seeds` different streams.
pub fn roundtrip(p: u64, r: u32, seeds: u64) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new(VerifyMode::Roundtrip, p, r, true);
    let h = (p / 2) as i64;
    let xs: Vec<i64> = (-h..=h).collect();
    for seed in 0..seeds {
        let ev = Evaluator::new(ClearEval::new(seed), p, r, usize::MAX / 2)?;
        let x = ev.encode(&xs)?;
        let low = ev.change_mod_to_p(&x)?;
        let got = ev.decode(&raise_mod(&ev, &low)?)?;
        for (&want, &g) in xs.iter().zip(&got) {
            rep.checked += 1;
            if g != want {
                rep.fail(|| format!("seed {seed}: raise(reduce({want})) = {g}"));
            }
        }
    }
    Ok(rep)
}
