use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::RingElem;
use crate::error::{Error, Result};

/// Error samples beyond this many standard deviations are rejected.
pub const ERROR_TAIL_SIGMAS: f64 = 6.0;

/// Ternary polynomial with exactly `weight` nonzero coefficients.
pub fn sample_ternary(n: usize, weight: usize, modulus: u64, seed: u64) -> Result<RingElem> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    RingElem::from_signed(&ternary_coeffs(&mut rng, n, weight)?, modulus)
}

/// Rounded Gaussian error polynomial, tails cut at [`ERROR_TAIL_SIGMAS`].
pub fn sample_error(n: usize, sigma: f64, modulus: u64, seed: u64) -> Result<RingElem> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    RingElem::from_signed(&error_coeffs(&mut rng, n, sigma)?, modulus)
}

pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, n: usize, modulus: u64) -> RingElem {
    let coeffs = (0..n).map(|_| rng.random_range(0..modulus)).collect();
    RingElem::from_coeffs(coeffs, modulus).expect("n is a power of two")
}

pub(crate) fn ternary_coeffs<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    weight: usize,
) -> Result<Vec<i64>> {
    if weight > n {
        return Err(Error::InvalidParameter(format!(
            "hamming weight {weight} exceeds ring degree {n}"
        )));
    }
    let mut coeffs = vec![0i64; n];
    for i in index::sample(rng, n, weight) {
        coeffs[i] = if rng.random::<bool>() { 1 } else { -1 };
    }
    Ok(coeffs)
}

pub(crate) fn error_coeffs<R: Rng + ?Sized>(rng: &mut R, n: usize, sigma: f64) -> Result<Vec<i64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let bound = ERROR_TAIL_SIGMAS * sigma;
    Ok((0..n)
        .map(|_| loop {
            let x: f64 = normal.sample(rng);
            let c = x.round();
            if c.abs() <= bound {
                break c as i64;
            }
        })
        .collect())
}
