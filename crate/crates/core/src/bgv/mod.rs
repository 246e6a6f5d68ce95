//! Symmetric-key leveled BGV over `Z_Q[x]/(x^n + 1)` with toy parameters.
//!
//! Ciphertexts live in RNS form over a prefix of the chain; a ciphertext at
//! level `l` holds `l + 1` limbs. One plaintext value is carried as the
//! constant coefficient. Nothing here is secure.

mod backend;
mod io;
mod rns;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::ring::modular::{balanced, inv_mod, mul_mod, pow_mod};
use crate::ring::sample::{error_coeffs, ternary_coeffs};
use crate::ring::{Residue, RingElem};
use crate::ring::ntt::NttTable;

pub use backend::ToyBgv;
pub use io::{read_ciphertext, read_secret_key, write_ciphertext, write_secret_key, FORMAT_VERSION};
use rns::RnsPoly;

/// Highest level at which relinearization accumulates without overflow.
pub const MAX_LEVEL: usize = 62;

pub const INSECURE_BANNER: &str = "INSECURE TOY PARAMETERS";

/// Standard deviation of the rounded Gaussian error.
pub const SIGMA: f64 = 3.2;

pub fn default_hamming_weight(n: usize) -> usize {
    (n / 4).min(64)
}

/// Ternary secret with a fixed number of nonzero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    coeffs: Vec<i64>,
}

impl SecretKey {
    pub fn from_coeffs(coeffs: Vec<i64>) -> Result<Self> {
        if !coeffs.len().is_power_of_two() || coeffs.iter().any(|c| c.abs() > 1) {
            return Err(Error::InvalidParameter("secret key must be ternary of power-of-two length".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn weight(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }
}

/// Encryptions of `2^(w j) * Qhat_i * (Qhat_i^-1 mod q_i) * s^2` for every
/// level, chain prime `i` and digit `j`, stored in the transform domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelinKey {
    base_bits: u32,
    levels: Vec<Vec<KeyComponent>>,
}

/// `(b, a)` with `b + a s = p^r e + g s^2`, limbwise transformed.
#[derive(Clone, Debug, PartialEq, Eq)]
struct KeyComponent {
    b: Vec<Vec<u64>>,
    a: Vec<Vec<u64>>,
}

impl RelinKey {
    pub fn base_bits(&self) -> u32 {
        self.base_bits
    }

    /// Number of key components available at `level`.
    pub fn components(&self, level: usize) -> usize {
        self.levels.get(level).map_or(0, Vec::len)
    }
}

/// `c0 + c1 s = m + p^t e (mod Q_level)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BgvCiphertext {
    c0: RnsPoly,
    c1: RnsPoly,
    p: u64,
    tag_exp: u32,
    noise_bits: f64,
}

impl BgvCiphertext {
    pub fn level(&self) -> usize {
        self.c0.len() - 1
    }

    pub fn ptxt_modulus(&self) -> u64 {
        self.p.pow(self.tag_exp)
    }

    pub fn tag_exp(&self) -> u32 {
        self.tag_exp
    }

    /// Heuristic `log2` bound on `|c0 + c1 s|` tracked through each
    /// operation. Diagnostic only; [`BgvContext::noise_budget`] measures.
    pub fn noise_bound_bits(&self) -> f64 {
        self.noise_bits
    }

    pub fn ring_degree(&self) -> usize {
        self.c0.n()
    }
}

fn log2_sum(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_f64().unwrap_or(0.0).max(1.0).log2();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap_or(1.0).log2() + shift as f64
}

/// Parameter-bound BGV operations.
#[derive(Clone, Debug)]
pub struct BgvContext {
    params: ParamSet,
    hamming_weight: usize,
    base_bits: u32,
    tables: Vec<NttTable>,
}

impl BgvContext {
    pub fn new(params: ParamSet) -> Result<Self> {
        params.validate()?;
        let max_bits = params
            .chain
            .iter()
            .map(|q| 64 - q.leading_zeros())
            .max()
            .unwrap_or(1);
        let tables = params
            .chain
            .iter()
            .map(|&q| NttTable::new(q, params.n))
            .collect::<Result<_>>()?;
        Ok(Self {
            hamming_weight: default_hamming_weight(params.n),
            base_bits: max_bits.div_ceil(2),
            tables,
            params,
        })
    }

    pub fn with_hamming_weight(mut self, weight: usize) -> Result<Self> {
        if weight > self.params.n {
            return Err(Error::InvalidParameter(format!(
                "hamming weight {weight} exceeds ring degree {}",
                self.params.n
            )));
        }
        self.hamming_weight = weight;
        Ok(self)
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn hamming_weight(&self) -> usize {
        self.hamming_weight
    }

    fn moduli(&self, level: usize) -> &[u64] {
        &self.params.chain[..=level]
    }

    fn top(&self) -> usize {
        self.params.levels()
    }

    fn tag_of(&self, modulus: u64) -> Result<u32> {
        let p = self.params.p;
        let mut t = 0;
        let mut m = 1u64;
        while m < modulus && t < self.params.r {
            m *= p;
            t += 1;
        }
        if m != modulus || t == 0 {
            return Err(Error::InvalidParameter(format!(
                "{modulus} is not p^t for p = {p}, 1 <= t <= {}",
                self.params.r
            )));
        }
        Ok(t)
    }

    pub fn keygen(&self, seed: u64) -> Result<(SecretKey, RelinKey)> {
        let n = self.params.n;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let sk = SecretKey {
            coeffs: ternary_coeffs(&mut rng, n, self.hamming_weight)?,
        };
        let s = RnsPoly::from_signed(&sk.coeffs, self.moduli(self.top()))?;
        let s2 = s.mul(&s, &self.tables)?;
        let pr = self.params.modulus() as i64;
        let mut levels = vec![Vec::new()];
        for level in 1..=self.top() {
            let moduli = self.moduli(level);
            let s_l = s.truncated(level + 1);
            let s2_l = s2.truncated(level + 1);
            let mut comps = Vec::with_capacity(2 * (level + 1));
            for i in 0..=level {
                for j in 0..2u32 {
                    let a = RnsPoly::uniform(&mut rng, n, moduli);
                    let e: Vec<i64> = error_coeffs(&mut rng, n, SIGMA)?
                        .into_iter()
                        .map(|c| c * pr)
                        .collect();
                    let mut b = RnsPoly::from_signed(&e, moduli)?.sub(&a.mul(&s_l, &self.tables)?)?;
                    let q = moduli[i];
                    let g = pow_mod(2, (self.base_bits * j) as u64, q);
                    let mut gs2 = s2_l.limbs[i].clone();
                    gs2.scale_assign(g);
                    b.limbs[i].add_assign_unchecked(&gs2);
                    comps.push(KeyComponent {
                        b: b.to_ntt(&self.tables),
                        a: a.to_ntt(&self.tables),
                    });
                }
            }
            levels.push(comps);
        }
        Ok((
            sk,
            RelinKey {
                base_bits: self.base_bits,
                levels,
            },
        ))
    }

    /// Fresh encryption at the top level under tag `m.modulus() = p^t`.
    pub fn encrypt<R: Rng + ?Sized>(&self, m: Residue, sk: &SecretKey, rng: &mut R) -> Result<BgvCiphertext> {
        let tag_exp = self.tag_of(m.modulus())?;
        let n = self.params.n;
        let level = self.top();
        let moduli = self.moduli(level);
        let t = m.modulus() as i64;
        let s = RnsPoly::from_signed(&sk.coeffs, moduli)?;
        let c1 = RnsPoly::uniform(rng, n, moduli);
        let mut v: Vec<i64> = error_coeffs(rng, n, SIGMA)?
            .into_iter()
            .map(|c| c * t)
            .collect();
        v[0] += m.balanced();
        let c0 = RnsPoly::from_signed(&v, moduli)?.sub(&c1.mul(&s, &self.tables)?)?;
        let noise_bits = (t as f64 * (crate::ring::ERROR_TAIL_SIGMAS * SIGMA + 1.0)).log2();
        Ok(BgvCiphertext {
            c0,
            c1,
            p: self.params.p,
            tag_exp,
            noise_bits,
        })
    }

    /// `c0 + c1 s` as balanced integers modulo `Q_level`, and `Q_level`.
    pub fn raw_decrypt(&self, ct: &BgvCiphertext, sk: &SecretKey) -> Result<(Vec<BigInt>, BigUint)> {
        let s = RnsPoly::from_signed(&sk.coeffs, self.moduli(ct.level()))?;
        Ok(ct.c0.add(&ct.c1.mul(&s, &self.tables)?)?.reconstruct())
    }

    /// The plaintext under the ciphertext's tag. A decryption polynomial with
    /// any coefficient at or above `Q/4` in magnitude is reported invalid:
    /// honest noise sits far below it, while wrapped noise is uniform.
    pub fn decrypt(&self, ct: &BgvCiphertext, sk: &SecretKey) -> Result<Residue> {
        let (v, q) = self.raw_decrypt(ct, sk)?;
        let quarter = BigInt::from(q >> 2);
        if v.iter().any(|c| c.abs() >= quarter) {
            return Err(Error::DecryptionInvalid);
        }
        let t = ct.ptxt_modulus();
        let m = v[0].mod_floor(&BigInt::from(t)).to_u64().expect("below t");
        Ok(Residue::new(m, t))
    }

    /// `log2(Q_level / (2 p^t |e|_inf))` where `c0 + c1 s = m + p^t e`.
    pub fn noise_budget(&self, ct: &BgvCiphertext, sk: &SecretKey) -> Result<f64> {
        let (v, q) = self.raw_decrypt(ct, sk)?;
        let t = BigInt::from(ct.ptxt_modulus());
        let half = &t >> 1;
        let mut worst = BigUint::zero();
        for c in &v {
            let mut m = c.mod_floor(&t);
            if m > half {
                m -= &t;
            }
            let e = ((c - m) / &t).magnitude().clone();
            if e > worst {
                worst = e;
            }
        }
        let e_bits = if worst.is_zero() { 0.0 } else { log2_big(&worst) };
        Ok(log2_big(&q) - 1.0 - (ct.ptxt_modulus() as f64).log2() - e_bits)
    }

    fn check_tags(&self, a: &BgvCiphertext, b: &BgvCiphertext) -> Result<()> {
        if a.tag_exp != b.tag_exp {
            return Err(Error::TagMismatch {
                left: a.ptxt_modulus(),
                right: b.ptxt_modulus(),
            });
        }
        if a.ring_degree() != b.ring_degree() {
            return Err(Error::DimensionMismatch {
                expected: a.ring_degree(),
                found: b.ring_degree(),
            });
        }
        Ok(())
    }

    /// Brings both operands to the lower of their levels.
    fn align(&self, a: &BgvCiphertext, b: &BgvCiphertext) -> Result<(BgvCiphertext, BgvCiphertext)> {
        self.check_tags(a, b)?;
        let level = a.level().min(b.level());
        Ok((self.switch_to(a, level)?, self.switch_to(b, level)?))
    }

    fn switch_to(&self, ct: &BgvCiphertext, level: usize) -> Result<BgvCiphertext> {
        let mut out = ct.clone();
        while out.level() > level {
            out = self.mod_switch(&out)?;
        }
        Ok(out)
    }

    pub fn add(&self, a: &BgvCiphertext, b: &BgvCiphertext) -> Result<BgvCiphertext> {
        let (a, b) = self.align(a, b)?;
        Ok(BgvCiphertext {
            c0: a.c0.add(&b.c0)?,
            c1: a.c1.add(&b.c1)?,
            noise_bits: log2_sum(a.noise_bits, b.noise_bits),
            ..a
        })
    }

    pub fn sub(&self, a: &BgvCiphertext, b: &BgvCiphertext) -> Result<BgvCiphertext> {
        let (a, b) = self.align(a, b)?;
        Ok(BgvCiphertext {
            c0: a.c0.sub(&b.c0)?,
            c1: a.c1.sub(&b.c1)?,
            noise_bits: log2_sum(a.noise_bits, b.noise_bits),
            ..a
        })
    }

    pub fn neg(&self, a: &BgvCiphertext) -> BgvCiphertext {
        BgvCiphertext {
            c0: a.c0.neg(),
            c1: a.c1.neg(),
            ..a.clone()
        }
    }

    pub fn add_plain(&self, a: &BgvCiphertext, c: i64) -> BgvCiphertext {
        BgvCiphertext {
            c0: a.c0.add_constant(c),
            noise_bits: log2_sum(a.noise_bits, (c.unsigned_abs().max(1) as f64).log2()),
            ..a.clone()
        }
    }

    pub fn mul_plain(&self, a: &BgvCiphertext, c: i64) -> BgvCiphertext {
        BgvCiphertext {
            c0: a.c0.scale_signed(c),
            c1: a.c1.scale_signed(c),
            noise_bits: a.noise_bits + (c.unsigned_abs().max(1) as f64).log2(),
            ..a.clone()
        }
    }

    /// Tensor product, relinearization and one modulus switch.
    pub fn mul_relin(&self, a: &BgvCiphertext, b: &BgvCiphertext, rk: &RelinKey) -> Result<BgvCiphertext> {
        let (a, b) = self.align(a, b)?;
        let level = a.level();
        if level == 0 {
            return Err(Error::LevelExhausted {
                needed: 1,
                available: 0,
            });
        }
        if level > MAX_LEVEL {
            return Err(Error::InvalidParameter(format!("level {level} exceeds {MAX_LEVEL}")));
        }
        let comps = rk
            .levels
            .get(level)
            .filter(|c| c.len() == 2 * (level + 1))
            .ok_or_else(|| Error::InvalidParameter(format!("relinearization key lacks level {level}")))?;
        let n = a.ring_degree();
        let w = rk.base_bits;
        let mask = (1u64 << w) - 1;
        let tables = &self.tables[..=level];
        let (a0, a1) = (a.c0.to_ntt(tables), a.c1.to_ntt(tables));
        let (b0, b1) = (b.c0.to_ntt(tables), b.c1.to_ntt(tables));
        let mut c0 = Vec::with_capacity(level + 1);
        let mut c1 = Vec::with_capacity(level + 1);
        let mut d2 = Vec::with_capacity(level + 1);
        for (k, t) in tables.iter().enumerate() {
            let q = t.modulus();
            let mut e0 = vec![0u64; n];
            let mut e1 = vec![0u64; n];
            let mut e2 = vec![0u64; n];
            for x in 0..n {
                e0[x] = mul_mod(a0[k][x], b0[k][x], q);
                e1[x] = ((a0[k][x] as u128 * b1[k][x] as u128 + a1[k][x] as u128 * b0[k][x] as u128)
                    % q as u128) as u64;
                e2[x] = mul_mod(a1[k][x], b1[k][x], q);
            }
            t.inverse(&mut e2);
            c0.push(e0);
            c1.push(e1);
            d2.push(e2);
        }
        // Split d2 limbwise into base-2^w digits, then add sum(digit * key)
        // in the transform domain. Transformed entries are below 2^60, so the
        // u128 sums hold up to MAX_LEVEL + 1 limbs of two digits each.
        let mut digits = Vec::with_capacity(2 * (level + 1));
        for limb in &d2 {
            digits.push(limb.iter().map(|&c| c & mask).collect::<Vec<_>>());
            digits.push(limb.iter().map(|&c| c >> w).collect::<Vec<_>>());
        }
        let mut acc0 = vec![0u128; n];
        let mut acc1 = vec![0u128; n];
        let mut buf = vec![0u64; n];
        for (k, t) in tables.iter().enumerate() {
            let q = t.modulus();
            acc0.iter_mut().for_each(|x| *x = 0);
            acc1.iter_mut().for_each(|x| *x = 0);
            for (digit, comp) in digits.iter().zip(comps) {
                buf.copy_from_slice(digit);
                t.forward(&mut buf);
                for x in 0..n {
                    acc0[x] += buf[x] as u128 * comp.b[k][x] as u128;
                    acc1[x] += buf[x] as u128 * comp.a[k][x] as u128;
                }
            }
            for x in 0..n {
                c0[k][x] = ((acc0[x] + c0[k][x] as u128) % q as u128) as u64;
                c1[k][x] = ((acc1[x] + c1[k][x] as u128) % q as u128) as u64;
            }
            t.inverse(&mut c0[k]);
            t.inverse(&mut c1[k]);
        }
        let to_poly = |limbs: Vec<Vec<u64>>| -> Result<RnsPoly> {
            Ok(RnsPoly {
                limbs: limbs
                    .into_iter()
                    .zip(tables)
                    .map(|(v, t)| RingElem::from_coeffs(v, t.modulus()))
                    .collect::<Result<_>>()?,
            })
        };
        let (c0, c1) = (to_poly(c0)?, to_poly(c1)?);
        let relin_bits = ((2 * (level + 1) * n) as f64).log2()
            + w as f64
            + (self.params.modulus() as f64 * crate::ring::ERROR_TAIL_SIGMAS * SIGMA).log2();
        let product = BgvCiphertext {
            c0,
            c1,
            noise_bits: log2_sum((n as f64).log2() + a.noise_bits + b.noise_bits, relin_bits),
            ..a
        };
        self.mod_switch(&product)
    }

    /// Drops the last chain prime; the plaintext is unchanged because every
    /// chain prime is `1 mod p^r`.
    pub fn mod_switch(&self, ct: &BgvCiphertext) -> Result<BgvCiphertext> {
        let level = ct.level();
        if level == 0 {
            return Err(Error::LevelExhausted {
                needed: 1,
                available: 0,
            });
        }
        let t = ct.ptxt_modulus();
        let ql = (self.params.chain[level] as f64).log2();
        let rounding = (t as f64).log2() + ((1 + self.hamming_weight) as f64).log2();
        Ok(BgvCiphertext {
            c0: ct.c0.drop_last(t),
            c1: ct.c1.drop_last(t),
            noise_bits: log2_sum(ct.noise_bits - ql, rounding),
            ..ct.clone()
        })
    }

    /// Multiplies both components by `u mod Q_level`.
    pub fn mul_const_exact(&self, ct: &BgvCiphertext, u: &BigUint) -> Result<BgvCiphertext> {
        let residues: Vec<u64> = self
            .moduli(ct.level())
            .iter()
            .map(|&q| (u % q).to_u64().expect("below q"))
            .collect();
        if residues.contains(&0) {
            return Err(Error::NotInvertible(u.to_string()));
        }
        Ok(BgvCiphertext {
            c0: ct.c0.scale_limbs(&residues),
            c1: ct.c1.scale_limbs(&residues),
            ..ct.clone()
        })
    }

    /// `p^-1 mod Q_level` in RNS form, scaled in and the tag lowered by one.
    pub fn divide_by_p(&self, ct: &BgvCiphertext) -> Result<BgvCiphertext> {
        if ct.tag_exp < 2 {
            return Err(Error::InvalidParameter("cannot divide by p under tag p".into()));
        }
        let p = self.params.p;
        let residues: Vec<u64> = self
            .moduli(ct.level())
            .iter()
            .map(|&q| inv_mod(p % q, q).ok_or_else(|| Error::NotInvertible(p.to_string())))
            .collect::<Result<_>>()?;
        Ok(BgvCiphertext {
            c0: ct.c0.scale_limbs(&residues),
            c1: ct.c1.scale_limbs(&residues),
            tag_exp: ct.tag_exp - 1,
            noise_bits: ct.noise_bits - (p as f64).log2(),
            ..ct.clone()
        })
    }

    /// Reinterprets under a different tag `p^tag_exp`; lowering is exact,
    /// raising leaves the new high digits unspecified.
    pub fn retag(&self, ct: &BgvCiphertext, tag_exp: u32) -> Result<BgvCiphertext> {
        if tag_exp == 0 || tag_exp > self.params.r {
            return Err(Error::InvalidParameter(format!("tag exponent {tag_exp}")));
        }
        Ok(BgvCiphertext {
            tag_exp,
            ..ct.clone()
        })
    }

    /// A plaintext value, balanced under the ciphertext's tag, used by
    /// diagnostics.
    pub fn decrypt_balanced(&self, ct: &BgvCiphertext, sk: &SecretKey) -> Result<i64> {
        let m = self.decrypt(ct, sk)?;
        Ok(balanced(m.value(), m.modulus()))
    }
}
