use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::Backend;
use crate::error::{Error, Result};
use crate::ring::modular::{add_mod, mul_mod, neg_mod, sub_mod};

pub const DEFAULT_MAX_SLOTS: usize = 1 << 20;

/// Slot vector of residues under the handle's tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClearValue(pub Vec<u64>);

/// Cleartext SIMD simulation. Raising a tag fills the new high digits with
/// seeded random garbage, as a real ciphertext would.
#[derive(Debug)]
pub struct ClearEval {
    max_slots: usize,
    rng: Mutex<ChaCha20Rng>,
}

impl ClearEval {
    pub fn new(seed: u64) -> Self {
        Self {
            max_slots: DEFAULT_MAX_SLOTS,
            rng: Mutex::new(ChaCha20Rng::seed_from_u64(seed)),
        }
    }

    pub fn with_max_slots(mut self, max_slots: usize) -> Self {
        self.max_slots = max_slots;
        self
    }

    pub fn max_slots(&self) -> usize {
        self.max_slots
    }

    fn zip(
        &self,
        a: &ClearValue,
        b: &ClearValue,
        f: impl Fn(u64, u64) -> u64,
    ) -> Result<ClearValue> {
        if a.0.len() != b.0.len() {
            return Err(Error::DimensionMismatch {
                expected: a.0.len(),
                found: b.0.len(),
            });
        }
        Ok(ClearValue(
            a.0.iter().zip(&b.0).map(|(&x, &y)| f(x, y)).collect(),
        ))
    }

    fn map(a: &ClearValue, f: impl Fn(u64) -> u64) -> ClearValue {
        ClearValue(a.0.iter().map(|&x| f(x)).collect())
    }
}

impl Backend for ClearEval {
    type Value = ClearValue;

    fn name(&self) -> &'static str {
        "clear"
    }

    fn max_slots(&self) -> usize {
        self.max_slots
    }

    fn encode(&self, values: &[u64], modulus: u64) -> Result<ClearValue> {
        if values.len() > self.max_slots {
            return Err(Error::TooManySlots {
                count: values.len(),
                max: self.max_slots,
            });
        }
        Ok(ClearValue(values.iter().map(|v| v % modulus).collect()))
    }

    fn decode(&self, v: &ClearValue, modulus: u64) -> Result<Vec<u64>> {
        Ok(v.0.iter().map(|x| x % modulus).collect())
    }

    fn add(&self, a: &ClearValue, b: &ClearValue, m: u64) -> Result<ClearValue> {
        self.zip(a, b, |x, y| add_mod(x, y, m))
    }

    fn sub(&self, a: &ClearValue, b: &ClearValue, m: u64) -> Result<ClearValue> {
        self.zip(a, b, |x, y| sub_mod(x, y, m))
    }

    fn neg(&self, a: &ClearValue, m: u64) -> Result<ClearValue> {
        Ok(Self::map(a, |x| neg_mod(x, m)))
    }

    fn add_plain(&self, a: &ClearValue, c: u64, m: u64) -> Result<ClearValue> {
        Ok(Self::map(a, |x| add_mod(x, c, m)))
    }

    fn mul(&self, a: &ClearValue, b: &ClearValue, m: u64) -> Result<ClearValue> {
        self.zip(a, b, |x, y| mul_mod(x, y, m))
    }

    fn mul_plain(&self, a: &ClearValue, c: u64, m: u64) -> Result<ClearValue> {
        Ok(Self::map(a, |x| mul_mod(x, c, m)))
    }

    fn divide_by_p(&self, a: &ClearValue, p: u64, _m: u64) -> Result<ClearValue> {
        if let Some((slot, &value)) = a.0.iter().enumerate().find(|(_, &x)| x % p != 0) {
            return Err(Error::NotDivisible { slot, value, p });
        }
        Ok(Self::map(a, |x| x / p))
    }

    fn change_modulus(&self, a: &ClearValue, _from: u64, to: u64) -> Result<ClearValue> {
        Ok(Self::map(a, |x| x % to))
    }

    fn raise_modulus(&self, a: &ClearValue, from: u64, to: u64) -> Result<ClearValue> {
        let span = to / from;
        let mut rng = self.rng.lock().expect("rng poisoned");
        Ok(ClearValue(
            a.0.iter()
                .map(|&x| (x + from * rng.random_range(0..span)) % to)
                .collect(),
        ))
    }
}
