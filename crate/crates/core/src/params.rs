//! Instance parameters shared by both backends.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::modular::{checked_pow, is_prime};

/// Bit size of every ciphertext-chain prime.
pub const CHAIN_PRIME_BITS: u32 = 60;

pub const DEFAULT_RING_DEGREE: usize = 64;

/// Ring degrees the toy backend accepts.
pub const SUPPORTED_RING_DEGREES: [usize; 3] = [64, 128, 256];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    Clear,
    ToyBgv,
}

impl BackendKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Clear => "clear",
            Self::ToyBgv => "toy-bgv",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clear" => Ok(Self::Clear),
            "toy-bgv" | "bgv" => Ok(Self::ToyBgv),
            other => Err(Error::InvalidParameter(format!("unknown backend {other:?}"))),
        }
    }
}

/// `p`, `r`, ring degree and ciphertext chain. `levels()` multiplications fit
/// before the chain runs out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSet {
    pub p: u64,
    pub r: u32,
    pub n: usize,
    pub chain: Vec<u64>,
    pub seed: u64,
    pub backend: BackendKind,
}

impl ParamSet {
    /// Builds a parameter set with `levels + 1` chain primes.
    pub fn new(p: u64, r: u32, n: usize, levels: usize, seed: u64, backend: BackendKind) -> Result<Self> {
        let modulus = plaintext_modulus(p, r)?;
        let params = Self {
            p,
            r,
            n,
            chain: chain_primes(levels + 1, CHAIN_PRIME_BITS, modulus * 2 * n as u64)?,
            seed,
            backend,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.r)
    }

    pub fn levels(&self) -> usize {
        self.chain.len().saturating_sub(1)
    }

    /// `log2` of the full chain product.
    pub fn log_q(&self) -> f64 {
        self.chain.iter().map(|&q| (q as f64).log2()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let modulus = plaintext_modulus(self.p, self.r)?;
        if !SUPPORTED_RING_DEGREES.contains(&self.n) {
            return Err(Error::InvalidParameter(format!(
                "ring degree {} not in {SUPPORTED_RING_DEGREES:?}",
                self.n
            )));
        }
        if self.chain.is_empty() {
            return Err(Error::InvalidParameter("empty ciphertext chain".into()));
        }
        for (i, &q) in self.chain.iter().enumerate() {
            if q == self.p || !is_prime(q) {
                return Err(Error::InvalidParameter(format!("chain entry {q} is not a usable prime")));
            }
            if q % modulus != 1 || q % (2 * self.n as u64) != 1 {
                return Err(Error::InvalidParameter(format!(
                    "chain prime {q} is not 1 mod {modulus} and 1 mod {}",
                    2 * self.n
                )));
            }
            if self.chain[..i].contains(&q) {
                return Err(Error::InvalidParameter(format!("chain prime {q} repeats")));
            }
        }
        Ok(())
    }
}

fn plaintext_modulus(p: u64, r: u32) -> Result<u64> {
    if p < 3 || !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    match checked_pow(p, r) {
        Some(m) if r >= 1 && m < 1 << 40 => Ok(m),
        _ => Err(Error::InvalidParameter(format!("unsupported exponent r = {r} for p = {p}"))),
    }
}

/// The `count` largest primes below `2^bits` that are `1 mod step`, in
/// decreasing order. Being `1 mod p^r` makes modulus switching leave every
/// plaintext tag `p^t` untouched; being `1 mod 2n` allows a negacyclic NTT.
pub fn chain_primes(count: usize, bits: u32, step: u64) -> Result<Vec<u64>> {
    let top = 1u64 << bits;
    let mut k = (top - 2) / step;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if k == 0 {
            return Err(Error::InvalidParameter(format!(
                "ran out of {bits}-bit primes that are 1 mod {step}"
            )));
        }
        let q = k * step + 1;
        if q >> (bits - 1) == 0 {
            return Err(Error::InvalidParameter(format!(
                "ran out of {bits}-bit primes that are 1 mod {step}"
            )));
        }
        if is_prime(q) {
            out.push(q);
        }
        k -= 1;
    }
    Ok(out)
}
