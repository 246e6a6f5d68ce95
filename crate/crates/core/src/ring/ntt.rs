//! Negacyclic number-theoretic transform for primes `q = 1 mod 2n`, `q < 2^62`.

use super::modular::{add_mod, inv_mod, mul_mod, pow_mod, sub_mod};
use crate::error::{Error, Result};

/// `x * w mod q` with `w_shoup = floor(w 2^64 / q)`.
#[inline]
fn mul_shoup(x: u64, w: u64, w_shoup: u64, q: u64) -> u64 {
    let qhat = ((x as u128 * w_shoup as u128) >> 64) as u64;
    let r = x.wrapping_mul(w).wrapping_sub(qhat.wrapping_mul(q));
    if r >= q {
        r - q
    } else {
        r
    }
}

fn shoup(w: u64, q: u64) -> u64 {
    (((w as u128) << 64) / q as u128) as u64
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Twiddle tables for one prime and ring degree. After [`forward`], ring
/// multiplication is pointwise.
///
/// [`forward`]: NttTable::forward
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NttTable {
    q: u64,
    n: usize,
    psi: Vec<(u64, u64)>,
    psi_inv: Vec<(u64, u64)>,
    n_inv: (u64, u64),
}

impl NttTable {
    pub fn new(q: u64, n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidParameter(format!("ring degree {n} is not a power of two")));
        }
        if q >> 62 != 0 || (q - 1) % (2 * n as u64) != 0 {
            return Err(Error::InvalidParameter(format!("{q} does not support a length-{n} negacyclic transform")));
        }
        let exp = (q - 1) / (2 * n as u64);
        let root = (2..q)
            .map(|g| pow_mod(g, exp, q))
            .find(|&w| pow_mod(w, n as u64, q) == q - 1)
            .ok_or(Error::NotPrime(q))?;
        let root_inv = inv_mod(root, q).ok_or(Error::NotPrime(q))?;
        let bits = n.trailing_zeros();
        let table = |base: u64| -> Vec<(u64, u64)> {
            (0..n)
                .map(|k| {
                    let w = pow_mod(base, bit_reverse(k, bits) as u64, q);
                    (w, shoup(w, q))
                })
                .collect()
        };
        let n_inv = inv_mod(n as u64 % q, q).ok_or(Error::NotPrime(q))?;
        Ok(Self {
            q,
            n,
            psi: table(root),
            psi_inv: table(root_inv),
            n_inv: (n_inv, shoup(n_inv, q)),
        })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn forward(&self, a: &mut [u64]) {
        let q = self.q;
        let n = self.n;
        let mut t = n;
        let mut m = 1;
        while m < n {
            t /= 2;
            for i in 0..m {
                let (w, ws) = self.psi[m + i];
                let start = 2 * i * t;
                let (lo, hi) = a[start..start + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = mul_shoup(*y, w, ws, q);
                    *x = add_mod(u, v, q);
                    *y = sub_mod(u, v, q);
                }
            }
            m *= 2;
        }
    }

    pub fn inverse(&self, a: &mut [u64]) {
        let q = self.q;
        let mut t = 1;
        let mut m = self.n;
        while m > 1 {
            let h = m / 2;
            for i in 0..h {
                let (w, ws) = self.psi_inv[h + i];
                let start = 2 * i * t;
                let (lo, hi) = a[start..start + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = *y;
                    *x = add_mod(u, v, q);
                    *y = mul_shoup(sub_mod(u, v, q), w, ws, q);
                }
            }
            t *= 2;
            m = h;
        }
        let (ni, nis) = self.n_inv;
        for x in a.iter_mut() {
            *x = mul_shoup(*x, ni, nis, q);
        }
    }

    /// Negacyclic product of two coefficient vectors.
    pub fn multiply(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut fa = a.to_vec();
        let mut fb = b.to_vec();
        self.forward(&mut fa);
        self.forward(&mut fb);
        for (x, &y) in fa.iter_mut().zip(&fb) {
            *x = mul_mod(*x, y, self.q);
        }
        self.inverse(&mut fa);
        fa
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::ring::{ring_mul, RingElem};

    fn prime_1_mod(step: u64) -> u64 {
        crate::params::chain_primes(1, 60, step).unwrap()[0]
    }

    #[test]
    fn round_trip_and_product_match_schoolbook() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for n in [2usize, 8, 64, 256] {
            let q = prime_1_mod(2 * n as u64);
            let table = NttTable::new(q, n).unwrap();
            for _ in 0..20 {
                let a: Vec<u64> = (0..n).map(|_| rng.random_range(0..q)).collect();
                let b: Vec<u64> = (0..n).map(|_| rng.random_range(0..q)).collect();
                let mut t = a.clone();
                table.forward(&mut t);
                table.inverse(&mut t);
                assert_eq!(t, a);
                let want = ring_mul(
                    &RingElem::from_coeffs(a.clone(), q).unwrap(),
                    &RingElem::from_coeffs(b.clone(), q).unwrap(),
                )
                .unwrap();
                assert_eq!(table.multiply(&a, &b), want.coeffs());
            }
        }
    }

    #[test]
    fn rejects_unsupported_moduli() {
        assert!(NttTable::new(97, 64).is_err());
        assert!(NttTable::new(prime_1_mod(128), 48).is_err());
    }
}
