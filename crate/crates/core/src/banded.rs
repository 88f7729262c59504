//! Banded LU factorization with partial pivoting.
//!
//! Storage follows the usual band layout widened by `kl` extra
//! superdiagonals to absorb pivoting fill-in: row `i` keeps the columns
//! `i − kl ..= i + ku + kl`.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// Accumulate into entry `(i, j)`, which must lie inside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside the band"
        );
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// `y = A x` using the current (unfactored) entries.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Factor in place and solve `A x = b`. The matrix is consumed.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Err(Error::IllConditioned("zero matrix".into()));
        }
        let reach = self.ku + self.kl;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let pivot_row = (k..=last_row)
                .max_by(|&a, &b| self.get(a, k).abs().total_cmp(&self.get(b, k).abs()))
                .unwrap_or(k);
            let pivot = self.get(pivot_row, k);
            if pivot.abs() <= scale * f64::EPSILON * n as f64 * 1e-4 {
                return Err(Error::IllConditioned(format!(
                    "pivot {pivot:e} at column {k} is negligible"
                )));
            }
            let last_col = (k + reach).min(n - 1);
            if pivot_row != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(pivot_row, j);
                    self.data.swap(a, b);
                }
                x.swap(k, pivot_row);
            }
            for i in k + 1..=last_row {
                let s = self.slot(i, k);
                let f = self.data[s] / pivot;
                if f == 0.0 {
                    continue;
                }
                self.data[s] = 0.0;
                for j in k + 1..=last_col {
                    let from = self.data[self.slot(k, j)];
                    let to = self.slot(i, j);
                    self.data[to] -= f * from;
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut acc = x[k];
            for j in k + 1..=last_col {
                acc -= self.data[self.slot(k, j)] * x[j];
            }
            x[k] = acc / self.data[self.slot(k, k)];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_pentadiagonal_system_needing_pivots() {
        let n = 9;
        let mut a = BandedMatrix::zeros(n, 2, 2);
        for i in 0..n {
            // Zero diagonal forces row exchanges.
            if i + 1 < n {
                a.add(i, i + 1, 2.0 + i as f64);
                a.add(i + 1, i, -1.0);
            }
            if i + 2 < n {
                a.add(i, i + 2, 0.5);
                a.add(i + 2, i, 0.25 * i as f64 + 1.0);
            }
        }
        a.add(n - 1, n - 1, 3.0);
        let expected: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 0.1).collect();
        let b = a.mul_vec(&expected);
        let x = a.solve(&b).unwrap();
        for (got, want) in x.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = BandedMatrix::zeros(3, 1, 1);
        a.add(0, 0, 1.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(2, 2, 1.0);
        assert!(matches!(
            a.solve(&[1.0, 2.0, 3.0]),
            Err(Error::IllConditioned(_))
        ));
    }
}
