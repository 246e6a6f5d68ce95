use serde::{Deserialize, Serialize};

use super::modular::{add_mod, mul_mod, neg_mod, sub_mod};
use super::Residue;
use crate::error::{Error, Result};

/// Element of `Z_q[x]/(x^n + 1)` with coefficients in `[0, q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingElem {
    coeffs: Vec<u64>,
    modulus: u64,
}

impl RingElem {
    pub fn zero(n: usize, modulus: u64) -> Self {
        assert!(n.is_power_of_two(), "ring degree must be a power of two");
        Self {
            coeffs: vec![0; n],
            modulus,
        }
    }

    pub fn from_coeffs(coeffs: Vec<u64>, modulus: u64) -> Result<Self> {
        if !coeffs.len().is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "ring degree {} is not a power of two",
                coeffs.len()
            )));
        }
        if modulus < 2 {
            return Err(Error::InvalidParameter("modulus must exceed 1".into()));
        }
        let coeffs = coeffs.into_iter().map(|c| c % modulus).collect();
        Ok(Self { coeffs, modulus })
    }

    pub fn from_signed(coeffs: &[i64], modulus: u64) -> Result<Self> {
        Self::from_coeffs(
            coeffs
                .iter()
                .map(|&c| super::modular::reduce_signed(c as i128, modulus))
                .collect(),
            modulus,
        )
    }

    pub fn constant(c: u64, n: usize, modulus: u64) -> Self {
        let mut e = Self::zero(n, modulus);
        e.coeffs[0] = c % modulus;
        e
    }

    /// The monomial `x^k`, reduced with `x^n = -1`.
    pub fn monomial(k: usize, n: usize, modulus: u64) -> Self {
        let mut e = Self::zero(n, modulus);
        let wraps = (k / n) % 2 == 1;
        e.coeffs[k % n] = if wraps { modulus - 1 } else { 1 };
        e
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [u64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<u64> {
        self.coeffs
    }

    /// Coefficients as balanced representatives.
    pub fn centered(&self) -> Vec<i64> {
        self.coeffs
            .iter()
            .map(|&c| super::modular::balanced(c, self.modulus))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coeffs.len(),
                found: other.coeffs.len(),
            });
        }
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                expected: self.modulus,
                found: other.modulus,
            });
        }
        Ok(())
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|&c| neg_mod(c, self.modulus))
                .collect(),
            modulus: self.modulus,
        }
    }

    pub(crate) fn add_assign_unchecked(&mut self, other: &Self) {
        let q = self.modulus;
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = add_mod(*a, b, q);
        }
    }

    pub(crate) fn sub_assign_unchecked(&mut self, other: &Self) {
        let q = self.modulus;
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = sub_mod(*a, b, q);
        }
    }

    pub(crate) fn scale_assign(&mut self, c: u64) {
        let q = self.modulus;
        let c = c % q;
        for a in self.coeffs.iter_mut() {
            *a = mul_mod(*a, c, q);
        }
    }
}

pub fn ring_add(a: &RingElem, b: &RingElem) -> Result<RingElem> {
    a.check(b)?;
    let mut out = a.clone();
    out.add_assign_unchecked(b);
    Ok(out)
}

pub fn ring_sub(a: &RingElem, b: &RingElem) -> Result<RingElem> {
    a.check(b)?;
    let mut out = a.clone();
    out.sub_assign_unchecked(b);
    Ok(out)
}

pub fn ring_scale(a: &RingElem, c: Residue) -> Result<RingElem> {
    if c.modulus() != a.modulus {
        return Err(Error::ModulusMismatch {
            expected: a.modulus,
            found: c.modulus(),
        });
    }
    let mut out = a.clone();
    out.scale_assign(c.value());
    Ok(out)
}

pub fn ring_mul(a: &RingElem, b: &RingElem) -> Result<RingElem> {
    a.check(b)?;
    let n = a.coeffs.len();
    let q = a.modulus;
    let mut out = vec![0u64; n];
    if lazy_accumulation_ok(q, n, 1) {
        let mut acc = NegacyclicAcc::new(n);
        acc.mac(&a.coeffs, &b.coeffs);
        acc.reduce_into(q, &mut out);
    } else {
        for (i, &ai) in a.coeffs.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.coeffs.iter().enumerate() {
                let t = mul_mod(ai, bj, q);
                let k = i + j;
                if k < n {
                    out[k] = add_mod(out[k], t, q);
                } else {
                    out[k - n] = sub_mod(out[k - n], t, q);
                }
            }
        }
    }
    Ok(RingElem {
        coeffs: out,
        modulus: q,
    })
}

/// Whether `terms` negacyclic products of length-`n` vectors with entries
/// below `q` can be summed in `u128` before reduction.
pub(crate) fn lazy_accumulation_ok(q: u64, n: usize, terms: usize) -> bool {
    let bits = 2 * (64 - (q - 1).leading_zeros()) + usize::BITS - (n * terms).leading_zeros();
    bits < 127
}

/// Unreduced accumulator for sums of negacyclic products, keeping positive
/// and wrapped (negated) contributions apart so nothing needs a modulus until
/// the end.
pub(crate) struct NegacyclicAcc {
    pos: Vec<u128>,
    neg: Vec<u128>,
}

impl NegacyclicAcc {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            pos: vec![0; n],
            neg: vec![0; n],
        }
    }

    pub(crate) fn mac(&mut self, a: &[u64], b: &[u64]) {
        let n = a.len();
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            let ai = ai as u128;
            let split = n - i;
            for (j, &bj) in b[..split].iter().enumerate() {
                self.pos[i + j] += ai * bj as u128;
            }
            for (j, &bj) in b[split..].iter().enumerate() {
                self.neg[j] += ai * bj as u128;
            }
        }
    }

    pub(crate) fn reduce_into(&self, q: u64, out: &mut [u64]) {
        let q128 = q as u128;
        for ((o, &p), &m) in out.iter_mut().zip(&self.pos).zip(&self.neg) {
            *o = sub_mod((p % q128) as u64, (m % q128) as u64, q);
        }
    }
}
