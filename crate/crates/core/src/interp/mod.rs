//! Interpolation polynomials: digit equality and sign tests over `Z_p`, the
//! lifting polynomial, and the lowest-digit polynomial over `Z_{p^e}`.

mod solve;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ring::modular::{add_mod, balanced, is_prime, mul_mod, pow_mod, reduce_signed, sub_mod};
use crate::ring::DensePoly;
use solve::System;

pub const F_EQ_NAME: &str = "F_EQ";
pub const F_LT_NAME: &str = "F_LT";
pub const F_LIFT_NAME: &str = "F_p";

pub fn g_name(e: u32) -> String {
    format!("G_{{p,{e}}}")
}

fn odd_prime(p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Err(Error::InvalidParameter("p must be odd".into()));
    }
    Ok(())
}

fn prime_power(p: u64, e: u32) -> Result<u64> {
    p.checked_pow(e)
        .filter(|&m| m < 1 << 40)
        .ok_or_else(|| Error::InvalidParameter(format!("{p}^{e} is too large")))
}

/// Balanced lowest base-`p` digit of `x` in `Z_m`.
pub fn lowest_digit(x: u64, p: u64) -> i64 {
    balanced(x % p, p)
}

/// Degree bound `(e-1)(p-1)+1` of the lowest-digit polynomial.
pub fn g_degree_bound(p: u64, e: u32) -> usize {
    (e as usize - 1) * (p as usize - 1) + 1
}

/// `1 - x^(p-1)`: one at zero, zero elsewhere on `Z_p`.
pub fn build_f_eq(p: u64) -> Result<DensePoly> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let mut c = vec![0u64; p as usize];
    c[0] = 1;
    c[p as usize - 1] = p - 1;
    Ok(DensePoly::new(c, p).with_name(F_EQ_NAME))
}

/// One on the balanced negatives of `Z_p`, zero on zero and the positives.
pub fn build_f_lt(p: u64) -> Result<DensePoly> {
    odd_prime(p)?;
    let n = p as usize;
    let half = (p - 1) / 2;
    let mut c = vec![0u64; n];
    // c_i = sum_{j=1}^{(p-1)/2} j^(p-1-i) for odd i; the exponent p-1-i runs
    // over the odd numbers 1..=p-2.
    for j in 1..=half {
        let j2 = mul_mod(j, j, p);
        let mut pw = j;
        let mut k = 1usize;
        while k <= n - 2 {
            let i = n - 1 - k;
            c[i] = add_mod(c[i], pw, p);
            pw = mul_mod(pw, j2, p);
            k += 2;
        }
    }
    c[n - 1] = (p + 1) / 2;
    Ok(DensePoly::new(c, p).with_name(F_LT_NAME))
}

/// Interpolant of degree at most `p-1` through `truth[a]` for every `a` in `Z_p`.
pub fn build_interp(p: u64, truth: &[u64]) -> Result<DensePoly> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let n = p as usize;
    if truth.len() != n {
        return Err(Error::IncompleteTable {
            expected: n,
            found: truth.len(),
        });
    }
    // P(X) = sum_a f(a) (1 - (X-a)^(p-1)), and (X-a)^(p-1) = sum_k X^k a^(p-1-k)
    // because binom(p-1, k) = (-1)^k mod p.
    let mut c = vec![0u64; n];
    for (a, &fa) in truth.iter().enumerate() {
        let fa = fa % p;
        if fa == 0 {
            continue;
        }
        c[0] = add_mod(c[0], fa, p);
        let a = a as u64;
        let mut pw = 1u64; // a^(p-1-k) for k = p-1 downward
        for k in (0..n).rev() {
            c[k] = sub_mod(c[k], mul_mod(fa, pw, p), p);
            pw = mul_mod(pw, a, p);
        }
    }
    Ok(DensePoly::new(c, p))
}

/// Solves `rows(x) . coeffs = rhs(x)` for every `x` in `domain`, starting from
/// a small sample of equations and adding counterexamples until the candidate
/// holds everywhere.
fn solve_on_domain<F>(p: u64, modulus: u64, ncols: usize, domain: u64, equation: F) -> Result<Vec<u64>>
where
    F: Fn(u64) -> (Vec<u64>, u64),
{
    let mut sys = System::new(p, modulus);
    let mut used = vec![false; domain as usize];
    let start = (2 * ncols as u64 + 16).min(domain);
    for i in 0..start {
        let x = i * domain / start;
        if !used[x as usize] {
            used[x as usize] = true;
            let (row, rhs) = equation(x);
            sys.push(row, rhs);
        }
    }
    loop {
        let sol = sys.solve()?;
        let mut added = 0;
        for x in 0..domain {
            let (row, rhs) = equation(x);
            let lhs = row
                .iter()
                .zip(&sol)
                .fold(0, |acc, (&a, &b)| add_mod(acc, mul_mod(a, b, modulus), modulus));
            if lhs != rhs {
                if used[x as usize] {
                    return Err(Error::Inconsistent(format!(
                        "solution violates an included equation at {x}"
                    )));
                }
                used[x as usize] = true;
                sys.push(row, rhs);
                added += 1;
                if added > ncols + 8 {
                    break;
                }
            }
        }
        if added == 0 {
            return Ok(sol);
        }
    }
}

/// Odd polynomial over `Z_{p^e}` of degree at most `(e-1)(p-1)+1` that maps
/// every `x` to its balanced lowest base-`p` digit.
pub fn build_g(p: u64, e: u32) -> Result<DensePoly> {
    odd_prime(p)?;
    if e == 0 {
        return Err(Error::InvalidParameter("e must be at least 1".into()));
    }
    let m = prime_power(p, e)?;
    let deg = g_degree_bound(p, e);
    // Unknowns are the odd coefficients only: the lowest digit is an odd
    // function of x when p is odd, so an odd representative exists.
    let exps: Vec<u64> = (1..=deg as u64).step_by(2).collect();
    let sol = solve_on_domain(p, m, exps.len(), m, |x| {
        let x2 = mul_mod(x, x, m);
        let mut pw = x;
        let mut row = Vec::with_capacity(exps.len());
        for _ in &exps {
            row.push(pw);
            pw = mul_mod(pw, x2, m);
        }
        (row, reduce_signed(lowest_digit(x, p) as i128, m))
    })?;
    let mut coeffs = vec![0u64; deg + 1];
    for (&k, c) in exps.iter().zip(sol) {
        coeffs[k as usize] = c;
    }
    let g = DensePoly::new(coeffs, m).with_name(g_name(e));
    if let Some(cx) = check_g(p, e, &g) {
        return Err(Error::Inconsistent(format!("lowest-digit check failed: {cx:?}")));
    }
    Ok(g)
}

/// Largest `t < e` with `x` congruent to its balanced lowest digit modulo `p^t`.
fn lift_precision(x: u64, p: u64, e: u32, m: u64) -> u32 {
    let diff = sub_mod(x, reduce_signed(lowest_digit(x, p) as i128, m), m);
    match crate::ring::modular::valuation(diff, p) {
        None => e - 1,
        Some(v) => v.min(e - 1),
    }
}

/// Degree-`p` lifting polynomial over `Z_{p^e}`: if `x` agrees with its
/// balanced lowest digit `z` modulo `p^t` (`1 <= t < e`), then `F(x)` agrees
/// with `z` modulo `p^(t+1)`.
pub fn build_f_lift(p: u64, e: u32) -> Result<DensePoly> {
    odd_prime(p)?;
    if e < 2 {
        return Err(Error::InvalidParameter("lifting needs e >= 2".into()));
    }
    let m = prime_power(p, e)?;
    let ncols = p as usize + 1;
    // F(x) = z mod p^(t+1) is scaled by p^(e-t-1) into a congruence mod p^e.
    let sol = solve_on_domain(p, m, ncols, m, |x| {
        let t = lift_precision(x, p, e, m);
        let scale = p.pow(e - t - 1);
        let mut pw = scale;
        let mut row = Vec::with_capacity(ncols);
        for _ in 0..ncols {
            row.push(pw);
            pw = mul_mod(pw, x, m);
        }
        let z = reduce_signed(lowest_digit(x, p) as i128, m);
        (row, mul_mod(z, scale, m))
    })?;
    let f = DensePoly::new(sol, m).with_name(F_LIFT_NAME);
    if let Some(cx) = check_f_lift(p, e, &f) {
        return Err(Error::Inconsistent(format!("lifting check failed: {cx:?}")));
    }
    Ok(f)
}

/// The odd part `(f(x) - f(-x)) / 2`.
pub fn odd_part(f: &DensePoly) -> DensePoly {
    let coeffs = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| if i % 2 == 1 { c } else { 0 })
        .collect();
    DensePoly::new(coeffs, f.modulus).with_name(f.name.clone())
}

/// `f = x * H(x^2)` (odd) or `f = H(x^2)` (even).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddDecomposition {
    pub h: DensePoly,
    pub odd: bool,
}

impl OddDecomposition {
    pub fn recompose(&self) -> DensePoly {
        let m = self.h.modulus;
        let shift = usize::from(self.odd);
        let mut coeffs = vec![0u64; 2 * self.h.coeffs.len() + shift];
        for (i, &c) in self.h.coeffs.iter().enumerate() {
            coeffs[2 * i + shift] = c;
        }
        DensePoly::new(coeffs, m)
    }
}

pub fn odd_part_decompose(f: &DensePoly) -> Result<OddDecomposition> {
    let odd = if f.is_even() {
        false
    } else if f.is_odd() {
        true
    } else {
        return Err(Error::MixedParity);
    };
    let h = f
        .coeffs
        .iter()
        .skip(usize::from(odd))
        .step_by(2)
        .copied()
        .collect();
    Ok(OddDecomposition {
        h: DensePoly::new(h, f.modulus),
        odd,
    })
}

/// A point where a polynomial misses its defining property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub input: u64,
    pub got: u64,
    pub expected: u64,
    pub modulus: u64,
}

pub fn check_f_eq(p: u64, f: &DensePoly) -> Option<Counterexample> {
    (0..p).find_map(|x| {
        let expected = u64::from(x == 0);
        let got = f.eval(x);
        (got != expected).then_some(Counterexample {
            input: x,
            got,
            expected,
            modulus: p,
        })
    })
}

pub fn check_f_lt(p: u64, f: &DensePoly) -> Option<Counterexample> {
    (0..p).find_map(|x| {
        let expected = u64::from(balanced(x, p) < 0);
        let got = f.eval(x);
        (got != expected).then_some(Counterexample {
            input: x,
            got,
            expected,
            modulus: p,
        })
    })
}

pub fn check_g(p: u64, e: u32, f: &DensePoly) -> Option<Counterexample> {
    check_g_at(p, e, f, 0..p.pow(e))
}

/// [`check_g`] restricted to `points`.
pub fn check_g_at(p: u64, e: u32, f: &DensePoly, points: impl IntoIterator<Item = u64>) -> Option<Counterexample> {
    let m = p.pow(e);
    if f.modulus != m {
        return Some(Counterexample {
            input: 0,
            got: f.modulus,
            expected: m,
            modulus: m,
        });
    }
    points.into_iter().find_map(|x| {
        let expected = reduce_signed(lowest_digit(x, p) as i128, m);
        let got = f.eval(x);
        (got != expected).then_some(Counterexample {
            input: x,
            got,
            expected,
            modulus: m,
        })
    })
}

pub fn check_f_lift(p: u64, e: u32, f: &DensePoly) -> Option<Counterexample> {
    check_f_lift_at(p, e, f, 0..p.pow(e))
}

/// [`check_f_lift`] restricted to `points`.
pub fn check_f_lift_at(p: u64, e: u32, f: &DensePoly, points: impl IntoIterator<Item = u64>) -> Option<Counterexample> {
    let m = p.pow(e);
    points.into_iter().find_map(|x| {
        let t = lift_precision(x, p, e, m);
        let modulus = p.pow(t + 1);
        let expected = reduce_signed(lowest_digit(x, p) as i128, modulus);
        let got = f.eval(x) % modulus;
        (got != expected).then_some(Counterexample {
            input: x,
            got,
            expected,
            modulus,
        })
    })
}

/// Whether `f(z + p*Y) = z` holds as a polynomial identity in `Y` for every
/// balanced digit `z`, i.e. also when `Y` is a ring element rather than an
/// integer. Modulus raising on ciphertexts needs this because the garbage
/// above the lowest digit is a whole polynomial, not a constant.
pub fn is_ring_safe(p: u64, f: &DensePoly) -> bool {
    let m = f.modulus;
    let d = f.coeffs.len();
    // Pascal's triangle modulo m.
    let mut binom = vec![vec![0u64; d]; d];
    for j in 0..d {
        binom[j][0] = 1 % m;
        for k in 1..=j {
            binom[j][k] = add_mod(binom[j - 1][k - 1], if k < j { binom[j - 1][k] } else { 0 }, m);
        }
    }
    let half = (p - 1) / 2;
    for z in -(half as i64)..=half as i64 {
        let zr = reduce_signed(z as i128, m);
        for k in 0..d {
            // Taylor coefficient D_k(z) = sum_j binom(j, k) f_j z^(j-k).
            let mut dk = 0u64;
            for j in k..d {
                let term = mul_mod(binom[j][k], f.coeffs[j], m);
                dk = add_mod(dk, mul_mod(term, pow_mod(zr, (j - k) as u64, m), m), m);
            }
            let scaled = if k as u32 >= 64 { 0 } else { mul_mod(dk, pow_mod(p, k as u64, m), m) };
            let expected = if k == 0 { zr } else { 0 };
            if scaled != expected {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolyKind {
    Eq,
    Lt,
    Lowest(u32),
    Lift(u32),
}

type Cache = RwLock<HashMap<(PolyKind, u64), Arc<DensePoly>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Memoized construction. Concurrent callers may build the same polynomial
/// twice; the first insert wins.
pub fn cached(kind: PolyKind, p: u64) -> Result<Arc<DensePoly>> {
    if let Some(f) = cache().read().expect("poly cache poisoned").get(&(kind, p)) {
        return Ok(Arc::clone(f));
    }
    let built = Arc::new(match kind {
        PolyKind::Eq => build_f_eq(p)?,
        PolyKind::Lt => build_f_lt(p)?,
        PolyKind::Lowest(e) => build_g(p, e)?,
        PolyKind::Lift(e) => build_f_lift(p, e)?,
    });
    let mut w = cache().write().expect("poly cache poisoned");
    Ok(Arc::clone(w.entry((kind, p)).or_insert(built)))
}

pub fn g_poly(p: u64, e: u32) -> Result<Arc<DensePoly>> {
    cached(PolyKind::Lowest(e), p)
}

pub fn f_lift_poly(p: u64, e: u32) -> Result<Arc<DensePoly>> {
    cached(PolyKind::Lift(e), p)
}

pub fn f_eq_poly(p: u64) -> Result<Arc<DensePoly>> {
    cached(PolyKind::Eq, p)
}

pub fn f_lt_poly(p: u64) -> Result<Arc<DensePoly>> {
    cached(PolyKind::Lt, p)
}
