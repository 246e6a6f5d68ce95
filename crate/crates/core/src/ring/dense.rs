use std::fmt;

use serde::{Deserialize, Serialize};

use super::modular::{add_mod, balanced, mul_mod, neg_mod};
use super::Residue;
use crate::error::{Error, Result};

/// Univariate polynomial over `Z_m`, lowest coefficient first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensePoly {
    /// Label used by the cost ledger when this polynomial is evaluated.
    #[serde(default)]
    pub name: String,
    pub modulus: u64,
    pub coeffs: Vec<u64>,
}

impl DensePoly {
    pub fn new(coeffs: Vec<u64>, modulus: u64) -> Self {
        assert!(modulus > 0);
        let mut p = Self {
            name: String::new(),
            modulus,
            coeffs: coeffs.into_iter().map(|c| c % modulus).collect(),
        };
        p.trim();
        p
    }

    pub fn from_signed(coeffs: &[i64], modulus: u64) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&c| super::modular::reduce_signed(c as i128, modulus))
                .collect(),
            modulus,
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, i: usize) -> Residue {
        Residue::new(self.coeffs.get(i).copied().unwrap_or(0), self.modulus)
    }

    /// Horner evaluation at a raw value in `[0, modulus)`.
    pub fn eval(&self, x: u64) -> u64 {
        let m = self.modulus;
        let x = x % m;
        self.coeffs
            .iter()
            .rev()
            .fold(0u64, |acc, &c| add_mod(mul_mod(acc, x, m), c, m))
    }

    pub fn eval_signed(&self, x: i64) -> i64 {
        balanced(
            self.eval(super::modular::reduce_signed(x as i128, self.modulus)),
            self.modulus,
        )
    }

    /// Same coefficients viewed modulo a divisor of the modulus.
    pub fn reduce_modulus(&self, modulus: u64) -> Result<Self> {
        if self.modulus % modulus != 0 {
            return Err(Error::ModulusMismatch {
                expected: self.modulus,
                found: modulus,
            });
        }
        Ok(Self::new(self.coeffs.clone(), modulus).with_name(self.name.clone()))
    }

    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(|&c| c == 0)
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|&c| c == 0)
    }

    /// `f(-x)`.
    pub fn reflect(&self) -> Self {
        let m = self.modulus;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if i % 2 == 1 { neg_mod(c, m) } else { c })
            .collect();
        Self::new(coeffs, m).with_name(self.name.clone())
    }

    /// Balanced view of the coefficients.
    pub fn signed_coeffs(&self) -> Vec<i64> {
        self.coeffs.iter().map(|&c| balanced(c, self.modulus)).collect()
    }

    pub fn nonzero_terms(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }
}

impl fmt::Display for DensePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.signed_coeffs().into_iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else { "+" };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.unsigned_abs();
            match i {
                0 => write!(f, "{a}")?,
                _ => {
                    if a != 1 {
                        write!(f, "{a}")?;
                    }
                    write!(f, "x")?;
                    if i > 1 {
                        write!(f, "^{i}")?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " (mod {})", self.modulus)
    }
}

pub fn poly_eval_clear(f: &DensePoly, x: Residue) -> Result<Residue> {
    if f.modulus != x.modulus() {
        return Err(Error::ModulusMismatch {
            expected: f.modulus,
            found: x.modulus(),
        });
    }
    Ok(Residue::new(f.eval(x.value()), f.modulus))
}
