//! Backend-agnostic leveled evaluation with cost metering.

mod clear;
mod dry;
mod ledger;
mod ps;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ring::modular::{balanced, is_prime, reduce_signed};
use crate::ring::{DensePoly, Residue, SignedInt};

pub use clear::{ClearEval, ClearValue, DEFAULT_MAX_SLOTS};
pub use dry::DryRun;
pub use ledger::{CostLedger, Counts, LedgerSnapshot, StageGuard, DEFAULT_STAGE};
pub use ps::{choose_plan, ps_depth_bound, ps_nonscalar_bound, EvalPath, PsPlan};

/// Operations a ciphertext (or simulated ciphertext) representation supports.
///
/// Plaintext values are passed as residues in `[0, modulus)` where `modulus`
/// is the handle's current plaintext tag. Level bookkeeping is done by the
/// [`Evaluator`]; backends only see values.
pub trait Backend: Send + Sync {
    type Value: Clone + fmt::Debug + Send + Sync;

    fn name(&self) -> &'static str;
    /// Values one handle can hold.
    fn max_slots(&self) -> usize {
        1
    }
    fn encode(&self, values: &[u64], modulus: u64) -> Result<Self::Value>;
    fn decode(&self, v: &Self::Value, modulus: u64) -> Result<Vec<u64>>;
    fn add(&self, a: &Self::Value, b: &Self::Value, modulus: u64) -> Result<Self::Value>;
    fn sub(&self, a: &Self::Value, b: &Self::Value, modulus: u64) -> Result<Self::Value>;
    fn neg(&self, a: &Self::Value, modulus: u64) -> Result<Self::Value>;
    fn add_plain(&self, a: &Self::Value, c: u64, modulus: u64) -> Result<Self::Value>;
    fn mul(&self, a: &Self::Value, b: &Self::Value, modulus: u64) -> Result<Self::Value>;
    fn mul_plain(&self, a: &Self::Value, c: u64, modulus: u64) -> Result<Self::Value>;
    /// Exact division of every slot by `p`; the tag drops from `modulus` to
    /// `modulus / p`.
    fn divide_by_p(&self, a: &Self::Value, p: u64, modulus: u64) -> Result<Self::Value>;
    /// Reinterprets the value under a divisor `to` of the current tag.
    fn change_modulus(&self, a: &Self::Value, from: u64, to: u64) -> Result<Self::Value>;
    /// Reinterprets the value under a multiple `to` of the current tag. The
    /// digits above `from` are whatever the representation happens to hold.
    fn raise_modulus(&self, a: &Self::Value, from: u64, to: u64) -> Result<Self::Value>;
}

/// An encrypted (or simulated) value bound to the evaluator that made it.
#[derive(Clone, Debug)]
pub struct CipherHandle<V> {
    value: V,
    p: u64,
    tag_exp: u32,
    level: usize,
    depth: usize,
    owner: u64,
}

impl<V> CipherHandle<V> {
    pub fn value(&self) -> &V {
        &self.value
    }

    pub fn ptxt_modulus(&self) -> u64 {
        self.p.pow(self.tag_exp)
    }

    pub fn tag_exp(&self) -> u32 {
        self.tag_exp
    }

    /// Remaining multiplicative levels.
    pub fn level(&self) -> usize {
        self.level
    }

    /// Multiplicative depth consumed to produce this value.
    pub fn depth(&self) -> usize {
        self.depth
    }
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Evaluator for a fixed prime `p` and number-space exponent `r`.
pub struct Evaluator<B: Backend> {
    backend: B,
    p: u64,
    r: u32,
    max_level: usize,
    ledger: Arc<CostLedger>,
    id: u64,
}

impl<B: Backend> fmt::Debug for Evaluator<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator")
            .field("backend", &self.backend.name())
            .field("p", &self.p)
            .field("r", &self.r)
            .field("max_level", &self.max_level)
            .finish()
    }
}

pub type Handle<B> = CipherHandle<<B as Backend>::Value>;

impl<B: Backend> Evaluator<B> {
    pub fn new(backend: B, p: u64, r: u32, max_level: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if r == 0 || p.checked_pow(r).is_none_or(|m| m >= 1 << 40) {
            return Err(Error::InvalidParameter(format!("unsupported exponent r = {r}")));
        }
        Ok(Self {
            backend,
            p,
            r,
            max_level,
            ledger: CostLedger::new(),
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
        })
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// The number-space modulus `p^r`.
    pub fn modulus(&self) -> u64 {
        self.p.pow(self.r)
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn ledger(&self) -> &Arc<CostLedger> {
        &self.ledger
    }

    pub fn stage(&self, name: &str) -> StageGuard {
        self.ledger.stage(name)
    }

    fn own(&self, h: &Handle<B>) -> Result<()> {
        if h.owner != self.id {
            return Err(Error::BackendMismatch);
        }
        Ok(())
    }

    fn same_tag(&self, a: &Handle<B>, b: &Handle<B>) -> Result<u64> {
        self.own(a)?;
        self.own(b)?;
        if a.tag_exp != b.tag_exp {
            return Err(Error::TagMismatch {
                left: a.ptxt_modulus(),
                right: b.ptxt_modulus(),
            });
        }
        Ok(a.ptxt_modulus())
    }

    fn wrap(&self, value: B::Value, tag_exp: u32, level: usize, depth: usize) -> Handle<B> {
        CipherHandle {
            value,
            p: self.p,
            tag_exp,
            level,
            depth,
            owner: self.id,
        }
    }

    /// Packs balanced values into a fresh handle tagged `p^r`.
    pub fn encode(&self, values: &[SignedInt]) -> Result<Handle<B>> {
        self.encode_with_tag(values, self.r)
    }

    pub fn encode_with_tag(&self, values: &[SignedInt], tag_exp: u32) -> Result<Handle<B>> {
        if values.is_empty() {
            return Err(Error::EmptyPacking);
        }
        if tag_exp == 0 || tag_exp > self.r {
            return Err(Error::InvalidParameter(format!("tag exponent {tag_exp}")));
        }
        let m = self.p.pow(tag_exp);
        let half = (m / 2) as i64;
        let raw = values
            .iter()
            .map(|&v| {
                if v > half || v < -half {
                    Err(Error::OutOfRange { value: v, modulus: m })
                } else {
                    Ok(reduce_signed(v as i128, m))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let value = self.backend.encode(&raw, m)?;
        Ok(self.wrap(value, tag_exp, self.max_level, 0))
    }

    pub fn decode_residues(&self, h: &Handle<B>) -> Result<Vec<Residue>> {
        self.own(h)?;
        let m = h.ptxt_modulus();
        Ok(self
            .backend
            .decode(&h.value, m)?
            .into_iter()
            .map(|v| Residue::new(v, m))
            .collect())
    }

    /// Balanced slot values.
    pub fn decode(&self, h: &Handle<B>) -> Result<Vec<SignedInt>> {
        self.own(h)?;
        let m = h.ptxt_modulus();
        Ok(self
            .backend
            .decode(&h.value, m)?
            .into_iter()
            .map(|v| balanced(v, m))
            .collect())
    }

    pub fn add(&self, a: &Handle<B>, b: &Handle<B>) -> Result<Handle<B>> {
        let m = self.same_tag(a, b)?;
        let v = self.backend.add(&a.value, &b.value, m)?;
        self.ledger.record_addition();
        Ok(self.wrap(v, a.tag_exp, a.level.min(b.level), a.depth.max(b.depth)))
    }

    pub fn sub(&self, a: &Handle<B>, b: &Handle<B>) -> Result<Handle<B>> {
        let m = self.same_tag(a, b)?;
        let v = self.backend.sub(&a.value, &b.value, m)?;
        self.ledger.record_addition();
        Ok(self.wrap(v, a.tag_exp, a.level.min(b.level), a.depth.max(b.depth)))
    }

    pub fn neg(&self, a: &Handle<B>) -> Result<Handle<B>> {
        self.own(a)?;
        let v = self.backend.neg(&a.value, a.ptxt_modulus())?;
        Ok(self.wrap(v, a.tag_exp, a.level, a.depth))
    }

    pub fn add_plain(&self, a: &Handle<B>, c: SignedInt) -> Result<Handle<B>> {
        self.own(a)?;
        let m = a.ptxt_modulus();
        let v = self
            .backend
            .add_plain(&a.value, reduce_signed(c as i128, m), m)?;
        self.ledger.record_addition();
        Ok(self.wrap(v, a.tag_exp, a.level, a.depth))
    }

    pub fn sub_plain(&self, a: &Handle<B>, c: SignedInt) -> Result<Handle<B>> {
        self.add_plain(a, -c)
    }

    /// `c - a`.
    pub fn plain_sub(&self, c: SignedInt, a: &Handle<B>) -> Result<Handle<B>> {
        let n = self.neg(a)?;
        self.add_plain(&n, c)
    }

    pub fn mul(&self, a: &Handle<B>, b: &Handle<B>) -> Result<Handle<B>> {
        let m = self.same_tag(a, b)?;
        let level = a.level.min(b.level);
        if level == 0 {
            return Err(Error::LevelExhausted {
                needed: 1,
                available: 0,
            });
        }
        let v = self.backend.mul(&a.value, &b.value, m)?;
        let depth = a.depth.max(b.depth) + 1;
        self.ledger.record_nonscalar(depth);
        Ok(self.wrap(v, a.tag_exp, level - 1, depth))
    }

    pub fn square(&self, a: &Handle<B>) -> Result<Handle<B>> {
        self.mul(a, a)
    }

    pub fn mul_plain(&self, a: &Handle<B>, c: SignedInt) -> Result<Handle<B>> {
        self.own(a)?;
        let m = a.ptxt_modulus();
        let v = self
            .backend
            .mul_plain(&a.value, reduce_signed(c as i128, m), m)?;
        self.ledger.record_scalar();
        Ok(self.wrap(v, a.tag_exp, a.level, a.depth))
    }

    /// Divides every slot by `p`, lowering the tag from `p^t` to `p^(t-1)`.
    pub fn divide_by_p(&self, a: &Handle<B>) -> Result<Handle<B>> {
        self.own(a)?;
        if a.tag_exp < 2 {
            return Err(Error::InvalidParameter(
                "cannot divide by p under tag p".into(),
            ));
        }
        let v = self
            .backend
            .divide_by_p(&a.value, self.p, a.ptxt_modulus())?;
        self.ledger.record_scalar();
        Ok(self.wrap(v, a.tag_exp - 1, a.level, a.depth))
    }

    /// Reinterprets under tag `p^tag_exp` with `tag_exp` at most the current
    /// exponent. Costs nothing.
    pub fn change_tag(&self, a: &Handle<B>, tag_exp: u32) -> Result<Handle<B>> {
        self.own(a)?;
        if tag_exp == 0 || tag_exp > a.tag_exp {
            return Err(Error::InvalidParameter(format!(
                "cannot lower tag p^{} to p^{tag_exp}",
                a.tag_exp
            )));
        }
        let v = self.backend.change_modulus(
            &a.value,
            a.ptxt_modulus(),
            self.p.pow(tag_exp),
        )?;
        Ok(self.wrap(v, tag_exp, a.level, a.depth))
    }

    pub fn change_mod_to_p(&self, a: &Handle<B>) -> Result<Handle<B>> {
        self.change_tag(a, 1)
    }

    /// Extends the tag to `p^tag_exp` without fixing the new high digits.
    pub fn extend_tag(&self, a: &Handle<B>, tag_exp: u32) -> Result<Handle<B>> {
        self.own(a)?;
        if tag_exp < a.tag_exp || tag_exp > self.r {
            return Err(Error::InvalidParameter(format!(
                "cannot extend tag p^{} to p^{tag_exp}",
                a.tag_exp
            )));
        }
        let v = self.backend.raise_modulus(
            &a.value,
            a.ptxt_modulus(),
            self.p.pow(tag_exp),
        )?;
        Ok(self.wrap(v, tag_exp, a.level, a.depth))
    }

    /// Evaluates `f` on every slot of `x`.
    pub fn ps_eval(&self, f: &DensePoly, x: &Handle<B>, path: EvalPath) -> Result<Handle<B>> {
        ps::ps_eval(self, f, x, path)
    }

    /// Evaluates several polynomials on the same input, sharing one power
    /// ladder.
    pub fn ps_eval_shared(&self, fs: &[&DensePoly], x: &Handle<B>) -> Result<Vec<Handle<B>>> {
        ps::ps_eval_shared(self, fs, x)
    }
}
