//! Modular integers, balanced digits and the negacyclic ring `Z_q[x]/(x^n + 1)`.

mod dense;
pub(crate) mod elem;
pub mod modular;
pub mod ntt;
pub(crate) mod sample;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dense::{poly_eval_clear, DensePoly};
pub use elem::{ring_add, ring_mul, ring_scale, ring_sub, RingElem};
pub use sample::{sample_error, sample_ternary, sample_uniform, ERROR_TAIL_SIGMAS};

/// Plaintext-side signed integer. Every supported plaintext modulus is far
/// below `2^62`, so a machine word is enough.
pub type SignedInt = i64;

/// An integer tagged with its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    pub fn new(value: u64, modulus: u64) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        Self {
            value: value % modulus,
            modulus,
        }
    }

    pub fn from_signed(value: SignedInt, modulus: u64) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        Self {
            value: modular::reduce_signed(value as i128, modulus),
            modulus,
        }
    }

    pub fn zero(modulus: u64) -> Self {
        Self::new(0, modulus)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn balanced(&self) -> SignedInt {
        modular::balanced(self.value, self.modulus)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                expected: self.modulus,
                found: other.modulus,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(
            modular::add_mod(self.value, other.value, self.modulus),
            self.modulus,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(
            modular::sub_mod(self.value, other.value, self.modulus),
            self.modulus,
        ))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(
            modular::mul_mod(self.value, other.value, self.modulus),
            self.modulus,
        ))
    }

    pub fn neg(&self) -> Self {
        Self::new(modular::neg_mod(self.value, self.modulus), self.modulus)
    }

    pub fn pow(&self, exp: u64) -> Self {
        Self::new(modular::pow_mod(self.value, exp, self.modulus), self.modulus)
    }

    pub fn inv(&self) -> Option<Self> {
        modular::inv_mod(self.value, self.modulus).map(|v| Self::new(v, self.modulus))
    }

    /// Reinterprets the value modulo a divisor of the current modulus.
    pub fn reduce_to(&self, modulus: u64) -> Result<Self> {
        if modulus == 0 || self.modulus % modulus != 0 {
            return Err(Error::ModulusMismatch {
                expected: self.modulus,
                found: modulus,
            });
        }
        Ok(Self::new(self.value, modulus))
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

pub fn balanced_rep(x: Residue) -> SignedInt {
    x.balanced()
}

/// Balanced base-`p` expansion of `x`, least significant digit first.
pub fn base_p_digits(x: Residue, p: u64, r: u32) -> Result<Vec<SignedInt>> {
    let m = modular::checked_pow(p, r)
        .ok_or_else(|| Error::InvalidParameter(format!("{p}^{r} overflows")))?;
    if x.modulus() != m {
        return Err(Error::ModulusMismatch {
            expected: m,
            found: x.modulus(),
        });
    }
    let p_signed = p as i64;
    let mut v = x.balanced();
    let mut digits = Vec::with_capacity(r as usize);
    for _ in 0..r {
        let d = modular::balanced(modular::reduce_signed(v as i128, p), p);
        digits.push(d);
        v = (v - d) / p_signed;
    }
    Ok(digits)
}

/// Inverse of [`base_p_digits`]: `sum d_i p^i mod p^r`.
pub fn recompose_digits(digits: &[SignedInt], p: u64) -> Residue {
    let m = p.pow(digits.len() as u32);
    let mut acc: i128 = 0;
    for &d in digits.iter().rev() {
        acc = acc * p as i128 + d as i128;
    }
    Residue::new(modular::reduce_signed(acc, m), m)
}
