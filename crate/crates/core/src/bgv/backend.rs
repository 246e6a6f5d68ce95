use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{BgvCiphertext, BgvContext, RelinKey, SecretKey};
use crate::error::{Error, Result};
use crate::eval::Backend;
use crate::params::ParamSet;
use crate::ring::modular::balanced;
use crate::ring::Residue;

/// Encryption randomness is drawn from a stream separate from key generation.
const ENCRYPTION_STREAM: u64 = 0x656e_6372_7970_7421;

/// BGV as an evaluator backend. One value per ciphertext; the backend keeps
/// the secret key so that `encode`/`decode` can encrypt and decrypt.
///
/// With checks on, every result is decrypted and rejected if the noise has
/// wrapped, and `divide_by_p` confirms divisibility first.
pub struct ToyBgv {
    ctx: BgvContext,
    sk: SecretKey,
    rk: RelinKey,
    rng: Mutex<ChaCha20Rng>,
    checks: bool,
}

impl std::fmt::Debug for ToyBgv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToyBgv")
            .field("p", &self.ctx.params.p)
            .field("r", &self.ctx.params.r)
            .field("n", &self.ctx.params.n)
            .field("levels", &self.ctx.params.levels())
            .finish()
    }
}

impl ToyBgv {
    pub fn new(params: ParamSet) -> Result<Self> {
        let seed = params.seed;
        let ctx = BgvContext::new(params)?;
        let (sk, rk) = ctx.keygen(seed)?;
        Ok(Self {
            ctx,
            sk,
            rk,
            rng: Mutex::new(ChaCha20Rng::seed_from_u64(seed ^ ENCRYPTION_STREAM)),
            checks: false,
        })
    }

    pub fn with_checks(mut self, checks: bool) -> Self {
        self.checks = checks;
        self
    }

    pub fn context(&self) -> &BgvContext {
        &self.ctx
    }

    pub fn params(&self) -> &ParamSet {
        &self.ctx.params
    }

    pub fn secret_key(&self) -> &SecretKey {
        &self.sk
    }

    pub fn relin_key(&self) -> &RelinKey {
        &self.rk
    }

    pub fn noise_budget(&self, ct: &BgvCiphertext) -> Result<f64> {
        self.ctx.noise_budget(ct, &self.sk)
    }

    fn checked(&self, ct: BgvCiphertext) -> Result<BgvCiphertext> {
        if self.checks {
            self.ctx.decrypt(&ct, &self.sk)?;
        }
        Ok(ct)
    }

    fn expect_tag(&self, ct: &BgvCiphertext, modulus: u64) -> Result<()> {
        if ct.ptxt_modulus() != modulus {
            return Err(Error::TagMismatch {
                left: ct.ptxt_modulus(),
                right: modulus,
            });
        }
        Ok(())
    }

    fn tag_exp(&self, modulus: u64) -> Result<u32> {
        self.ctx.tag_of(modulus)
    }
}

impl Backend for ToyBgv {
    type Value = BgvCiphertext;

    fn name(&self) -> &'static str {
        "toy-bgv"
    }

    fn encode(&self, values: &[u64], modulus: u64) -> Result<BgvCiphertext> {
        if values.len() != 1 {
            return Err(Error::TooManySlots {
                count: values.len(),
                max: 1,
            });
        }
        let mut rng = self.rng.lock().expect("rng poisoned");
        self.ctx
            .encrypt(Residue::new(values[0], modulus), &self.sk, &mut *rng)
    }

    fn decode(&self, v: &BgvCiphertext, modulus: u64) -> Result<Vec<u64>> {
        self.expect_tag(v, modulus)?;
        Ok(vec![self.ctx.decrypt(v, &self.sk)?.value()])
    }

    fn add(&self, a: &BgvCiphertext, b: &BgvCiphertext, modulus: u64) -> Result<BgvCiphertext> {
        self.expect_tag(a, modulus)?;
        self.checked(self.ctx.add(a, b)?)
    }

    fn sub(&self, a: &BgvCiphertext, b: &BgvCiphertext, modulus: u64) -> Result<BgvCiphertext> {
        self.expect_tag(a, modulus)?;
        self.checked(self.ctx.sub(a, b)?)
    }

    fn neg(&self, a: &BgvCiphertext, modulus: u64) -> Result<BgvCiphertext> {
        self.expect_tag(a, modulus)?;
        Ok(self.ctx.neg(a))
    }

    fn add_plain(&self, a: &BgvCiphertext, c: u64, modulus: u64) -> Result<BgvCiphertext> {
        self.expect_tag(a, modulus)?;
        self.checked(self.ctx.add_plain(a, balanced(c % modulus, modulus)))
    }

    fn mul(&self, a: &BgvCiphertext, b: &BgvCiphertext, modulus: u64) -> Result<BgvCiphertext> {
        self.expect_tag(a, modulus)?;
        self.checked(self.ctx.mul_relin(a, b, &self.rk)?)
    }

    fn mul_plain(&self, a: &BgvCiphertext, c: u64, modulus: u64) -> Result<BgvCiphertext> {
        self.expect_tag(a, modulus)?;
        self.checked(self.ctx.mul_plain(a, balanced(c % modulus, modulus)))
    }

    fn divide_by_p(&self, a: &BgvCiphertext, p: u64, modulus: u64) -> Result<BgvCiphertext> {
        self.expect_tag(a, modulus)?;
        if p != self.ctx.params.p {
            return Err(Error::InvalidParameter(format!("divisor {p} is not the plaintext prime")));
        }
        if self.checks {
            let m = self.ctx.decrypt(a, &self.sk)?.value();
            if m % p != 0 {
                return Err(Error::NotDivisible { slot: 0, value: m, p });
            }
        }
        self.checked(self.ctx.divide_by_p(a)?)
    }

    fn change_modulus(&self, a: &BgvCiphertext, from: u64, to: u64) -> Result<BgvCiphertext> {
        self.expect_tag(a, from)?;
        let t = self.tag_exp(to)?;
        if t > a.tag_exp() {
            return Err(Error::InvalidParameter(format!("{to} does not divide {from}")));
        }
        self.ctx.retag(a, t)
    }

    /// The plaintext after raising is `m + p E(x)` for a non-constant `E`, so
    /// only polynomials that are safe on the whole ring may follow. The
    /// lifting polynomials are safe up to tag exponent `p`.
    fn raise_modulus(&self, a: &BgvCiphertext, from: u64, to: u64) -> Result<BgvCiphertext> {
        self.expect_tag(a, from)?;
        let t = self.tag_exp(to)?;
        if t < a.tag_exp() {
            return Err(Error::InvalidParameter(format!("{from} does not divide {to}")));
        }
        if t as u64 > self.ctx.params.p {
            return Err(Error::Unsupported(format!(
                "raising to p^{t} with p = {} on ciphertexts",
                self.ctx.params.p
            )));
        }
        self.ctx.retag(a, t)
    }
}
