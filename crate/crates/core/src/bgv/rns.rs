use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use rand::Rng;

use crate::error::Result;
use crate::ring::modular::{inv_mod, mul_mod, reduce_signed};
use crate::ring::ntt::NttTable;
use crate::ring::{ring_add, ring_sub, sample_uniform, RingElem};

/// A ring element modulo a prefix `q_0 ⋯ q_l` of the chain, one limb per
/// prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct RnsPoly {
    pub(crate) limbs: Vec<RingElem>,
}

impl RnsPoly {
    pub(crate) fn from_signed(coeffs: &[i64], moduli: &[u64]) -> Result<Self> {
        let limbs = moduli
            .iter()
            .map(|&q| RingElem::from_signed(coeffs, q))
            .collect::<Result<_>>()?;
        Ok(Self { limbs })
    }

    pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, n: usize, moduli: &[u64]) -> Self {
        Self {
            limbs: moduli.iter().map(|&q| sample_uniform(rng, n, q)).collect(),
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.limbs[0].degree_bound()
    }

    pub(crate) fn len(&self) -> usize {
        self.limbs.len()
    }

    pub(crate) fn truncated(&self, len: usize) -> Self {
        Self {
            limbs: self.limbs[..len].to_vec(),
        }
    }

    pub(crate) fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, ring_add)
    }

    pub(crate) fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, ring_sub)
    }

    /// Product through the transform; `tables[i]` belongs to limb `i`.
    pub(crate) fn mul(&self, other: &Self, tables: &[NttTable]) -> Result<Self> {
        let limbs = self
            .limbs
            .iter()
            .zip(&other.limbs)
            .zip(tables)
            .map(|((a, b), t)| RingElem::from_coeffs(t.multiply(a.coeffs(), b.coeffs()), t.modulus()))
            .collect::<Result<_>>()?;
        Ok(Self { limbs })
    }

    /// Limbwise forward transforms.
    pub(crate) fn to_ntt(&self, tables: &[NttTable]) -> Vec<Vec<u64>> {
        self.limbs
            .iter()
            .zip(tables)
            .map(|(l, t)| {
                let mut v = l.coeffs().to_vec();
                t.forward(&mut v);
                v
            })
            .collect()
    }

    pub(crate) fn neg(&self) -> Self {
        Self {
            limbs: self.limbs.iter().map(RingElem::neg).collect(),
        }
    }

    fn zip(&self, other: &Self, f: fn(&RingElem, &RingElem) -> Result<RingElem>) -> Result<Self> {
        let limbs = self
            .limbs
            .iter()
            .zip(&other.limbs)
            .map(|(a, b)| f(a, b))
            .collect::<Result<_>>()?;
        Ok(Self { limbs })
    }

    /// Multiplies by a small signed integer.
    pub(crate) fn scale_signed(&self, c: i64) -> Self {
        let residues: Vec<u64> = self
            .limbs
            .iter()
            .map(|l| reduce_signed(c as i128, l.modulus()))
            .collect();
        self.scale_limbs(&residues)
    }

    /// Multiplies limb `i` by `residues[i]`.
    pub(crate) fn scale_limbs(&self, residues: &[u64]) -> Self {
        let mut out = self.clone();
        for (limb, &c) in out.limbs.iter_mut().zip(residues) {
            limb.scale_assign(c);
        }
        out
    }

    /// Adds the integer `c` to the constant coefficient.
    pub(crate) fn add_constant(&self, c: i64) -> Self {
        let mut out = self.clone();
        for limb in &mut out.limbs {
            let q = limb.modulus();
            let k = reduce_signed(c as i128, q);
            let slot = &mut limb.coeffs_mut()[0];
            *slot = (*slot + k) % q;
        }
        out
    }

    /// Divides by the last prime `q_l` with rounding chosen so the result
    /// differs from the exact quotient by a multiple of `t` (per coefficient,
    /// the subtracted remainder is `0 mod t`). Requires `q_l = 1 mod t`.
    pub(crate) fn drop_last(&self, t: u64) -> Self {
        let last = self.limbs.last().expect("at least one limb");
        let ql = last.modulus();
        let keep = &self.limbs[..self.limbs.len() - 1];
        let deltas: Vec<i128> = last
            .centered()
            .into_iter()
            .map(|c| {
                let c = c as i128;
                let k = reduce_signed(-c, t) as i128;
                let k = if k > t as i128 / 2 { k - t as i128 } else { k };
                c + ql as i128 * k
            })
            .collect();
        let limbs = keep
            .iter()
            .map(|limb| {
                let q = limb.modulus();
                let ql_inv = inv_mod(ql % q, q).expect("distinct chain primes");
                let coeffs = limb
                    .coeffs()
                    .iter()
                    .zip(&deltas)
                    .map(|(&c, &d)| {
                        let diff = reduce_signed(c as i128 - d, q);
                        mul_mod(diff, ql_inv, q)
                    })
                    .collect();
                RingElem::from_coeffs(coeffs, q).expect("same degree")
            })
            .collect();
        Self { limbs }
    }

    /// Balanced integer coefficients modulo the product of the limb primes.
    pub(crate) fn reconstruct(&self) -> (Vec<BigInt>, BigUint) {
        let moduli: Vec<u64> = self.limbs.iter().map(RingElem::modulus).collect();
        let q: BigUint = moduli.iter().map(|&m| BigUint::from(m)).product();
        let basis: Vec<BigUint> = moduli
            .iter()
            .map(|&m| {
                let hat = &q / m;
                let hat_mod = (&hat % m).iter_u64_digits().next().unwrap_or(0);
                let inv = inv_mod(hat_mod, m).expect("distinct chain primes");
                hat * inv
            })
            .collect();
        let q_int = BigInt::from(q.clone());
        let half = &q_int >> 1;
        let coeffs = (0..self.n())
            .map(|j| {
                let acc: BigUint = self
                    .limbs
                    .iter()
                    .zip(&basis)
                    .map(|(l, b)| b * l.coeffs()[j])
                    .sum();
                let v = BigInt::from(acc).mod_floor(&q_int);
                if v > half {
                    v - &q_int
                } else {
                    v
                }
            })
            .collect();
        (coeffs, q)
    }
}

#[cfg(test)]
mod tests {
    use num_traits::ToPrimitive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::params::chain_primes;

    #[test]
    fn reconstruct_recovers_signed_coefficients() {
        let moduli = chain_primes(3, 60, 25).unwrap();
        let coeffs: Vec<i64> = (0..64).map(|i| (i as i64 - 32) * 1_000_000_007).collect();
        let x = RnsPoly::from_signed(&coeffs, &moduli).unwrap();
        let (back, _) = x.reconstruct();
        for (a, b) in coeffs.iter().zip(&back) {
            assert_eq!(*a, b.to_i64().unwrap());
        }
    }

    #[test]
    fn drop_last_divides_and_preserves_residue() {
        let t = 125u64;
        let moduli = chain_primes(3, 60, t).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let x = RnsPoly::uniform(&mut rng, 64, &moduli);
        let (big, _) = x.reconstruct();
        let (small, _) = x.drop_last(t).reconstruct();
        let ql = BigInt::from(moduli[2]);
        let t_big = BigInt::from(t);
        for (a, b) in big.iter().zip(&small) {
            // a - q_l * b is the subtracted remainder: small and 0 mod t.
            let delta = a - &ql * b;
            assert_eq!(delta.mod_floor(&t_big), BigInt::from(0));
            assert!(delta.magnitude().bits() <= 60 + 7 + 1);
            // b = a / q_l, and q_l = 1 mod t, so a = b mod t.
            assert_eq!(a.mod_floor(&t_big), b.mod_floor(&t_big));
        }
    }
}
