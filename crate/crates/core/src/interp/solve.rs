//! Linear congruences over `Z/p^e`.
//!
//! `Z/p^e` is a local ring, so an elimination step can only divide by a
//! unit times a power of `p`. Pivoting on the entry of least `p`-adic
//! valuation in the whole remaining block keeps every elimination factor
//! exact and makes solvability depend only on the right-hand side.

use crate::error::{Error, Result};
use crate::ring::modular::{inv_mod, mul_mod, sub_mod, valuation};

pub(crate) struct System {
    pub p: u64,
    pub modulus: u64,
    pub rows: Vec<Vec<u64>>,
    pub rhs: Vec<u64>,
}

impl System {
    pub fn new(p: u64, modulus: u64) -> Self {
        Self {
            p,
            modulus,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<u64>, rhs: u64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Some solution, with free unknowns set to zero.
    pub fn solve(&self) -> Result<Vec<u64>> {
        let m = self.modulus;
        let p = self.p;
        let ncols = self.rows.first().map_or(0, Vec::len);
        let mut a = self.rows.clone();
        let mut b = self.rhs.clone();
        let mut cols: Vec<usize> = (0..ncols).collect();
        let mut pivots: Vec<(u32, u64)> = Vec::new();

        let steps = a.len().min(ncols);
        for k in 0..steps {
            let mut best: Option<(u32, usize, usize)> = None;
            'search: for (i, row) in a.iter().enumerate().skip(k) {
                for (j, &v) in row.iter().enumerate().skip(k) {
                    if let Some(val) = valuation(v, p) {
                        if best.is_none_or(|(bv, _, _)| val < bv) {
                            best = Some((val, i, j));
                            if val == 0 {
                                break 'search;
                            }
                        }
                    }
                }
            }
            let Some((v, i, j)) = best else { break };
            a.swap(k, i);
            b.swap(k, i);
            if j != k {
                for row in a.iter_mut() {
                    row.swap(k, j);
                }
                cols.swap(k, j);
            }
            let pv = p.pow(v);
            let unit = a[k][k] / pv;
            let unit_inv = inv_mod(unit, m).expect("unit part is coprime to p");
            pivots.push((v, unit_inv));

            let (head, tail) = a.split_at_mut(k + 1);
            let pivot_row = &head[k];
            for (off, row) in tail.iter_mut().enumerate() {
                let x = row[k];
                if x == 0 {
                    continue;
                }
                let f = mul_mod(x / pv, unit_inv, m);
                for (c, &pc) in row.iter_mut().zip(pivot_row.iter()).skip(k) {
                    *c = sub_mod(*c, mul_mod(f, pc, m), m);
                }
                let r = k + 1 + off;
                b[r] = sub_mod(b[r], mul_mod(f, b[k], m), m);
            }
        }

        let rank = pivots.len();
        if let Some(r) = (rank..b.len()).find(|&r| b[r] != 0) {
            return Err(Error::Inconsistent(format!(
                "row {r} reduces to 0 = {}",
                b[r]
            )));
        }

        let mut x = vec![0u64; ncols];
        for k in (0..rank).rev() {
            let mut s = b[k];
            for j in k + 1..ncols {
                s = sub_mod(s, mul_mod(a[k][j], x[j], m), m);
            }
            let (v, unit_inv) = pivots[k];
            let pv = p.pow(v);
            if s % pv != 0 {
                return Err(Error::Inconsistent(format!(
                    "pivot {k} needs divisibility by {pv}"
                )));
            }
            x[k] = mul_mod(s / pv, unit_inv, m);
        }

        let mut out = vec![0u64; ncols];
        for (k, &c) in cols.iter().enumerate() {
            out[c] = x[k];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(sys: &System, x: &[u64]) {
        let m = sys.modulus;
        for (row, &rhs) in sys.rows.iter().zip(&sys.rhs) {
            let lhs = row
                .iter()
                .zip(x)
                .fold(0, |acc, (&a, &b)| (acc + mul_mod(a, b, m)) % m);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn solves_with_non_unit_pivots() {
        // 5x + 10y = 15, 25y = 0 (mod 125)
        let mut s = System::new(5, 125);
        s.push(vec![5, 10], 15);
        s.push(vec![0, 25], 0);
        let x = s.solve().unwrap();
        check(&s, &x);
    }

    #[test]
    fn detects_inconsistency() {
        let mut s = System::new(5, 25);
        s.push(vec![5], 1);
        assert!(s.solve().is_err());
        let mut s = System::new(3, 9);
        s.push(vec![1, 1], 1);
        s.push(vec![1, 1], 2);
        assert!(s.solve().is_err());
    }

    #[test]
    fn random_consistent_systems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let (p, e) = [(3u64, 4u32), (5, 3), (7, 2)][rng.random_range(0..3)];
            let m = p.pow(e);
            let rows = rng.random_range(1..8);
            let cols = rng.random_range(1..6);
            let truth: Vec<u64> = (0..cols).map(|_| rng.random_range(0..m)).collect();
            let mut s = System::new(p, m);
            for _ in 0..rows {
                // Bias toward multiples of p so valuations vary.
                let row: Vec<u64> = (0..cols)
                    .map(|_| rng.random_range(0..m) * p.pow(rng.random_range(0..e)) % m)
                    .collect();
                let rhs = row
                    .iter()
                    .zip(&truth)
                    .fold(0, |acc, (&a, &b)| (acc + mul_mod(a, b, m)) % m);
                s.push(row, rhs);
            }
            let x = s.solve().unwrap();
            check(&s, &x);
        }
    }
}
