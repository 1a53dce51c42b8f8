//! Symmetric profile (skyline) matrices and their Cholesky factorization.
//!
//! Row `i` stores the lower-triangular entries from its first structural
//! nonzero column up to the diagonal. Fill-in of the factor stays inside the
//! profile, so the factorization works in place.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ProfileMatrix {
    n: usize,
    first: Vec<usize>,
    row_start: Vec<usize>,
    data: Vec<f64>,
}

impl ProfileMatrix {
    /// Zero matrix whose profile covers the given adjacency lists.
    pub fn from_adjacency(adjacency: &[Vec<usize>]) -> Self {
        let n = adjacency.len();
        let mut first = Vec::with_capacity(n);
        let mut row_start = Vec::with_capacity(n + 1);
        let mut len = 0;
        for (i, row) in adjacency.iter().enumerate() {
            let f = row.iter().copied().filter(|&j| j <= i).min().unwrap_or(i);
            first.push(f);
            row_start.push(len);
            len += i - f + 1;
        }
        row_start.push(len);
        Self {
            n,
            first,
            row_start,
            data: vec![0.0; len],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries.
    pub fn stored(&self) -> usize {
        self.data.len()
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        (j >= self.first[i]).then(|| self.row_start[i] + j - self.first[i])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Add `value` to entries `(i, j)` and `(j, i)`.
    ///
    /// Panics if the entry lies outside the profile.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let k = self.slot(i, j).expect("entry outside matrix profile");
        self.data[k] += value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let f = self.first[i];
            let row = &self.data[self.row_start[i]..self.row_start[i + 1]];
            let mut acc = 0.0;
            for (off, a) in row.iter().enumerate() {
                let j = f + off;
                acc += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
            y[i] += acc;
        }
        y
    }

    /// Replace row and column `k` by the identity row.
    pub fn ground(&mut self, k: usize) {
        for i in k..self.n {
            if let Some(s) = self.slot(i, k) {
                self.data[s] = 0.0;
            }
        }
        for j in self.first[k]..k {
            let s = self.row_start[k] + j - self.first[k];
            self.data[s] = 0.0;
        }
        let d = self.slot(k, k).unwrap();
        self.data[d] = 1.0;
    }

    /// In-place Cholesky factorization `A = L Lᵀ`.
    pub fn cholesky(mut self) -> Result<Cholesky> {
        for i in 0..self.n {
            let fi = self.first[i];
            let ri = self.row_start[i];
            for j in fi..=i {
                let fj = self.first[j];
                let rj = self.row_start[j];
                let lo = fi.max(fj);
                let mut sum = self.data[ri + j - fi];
                let a = &self.data[ri + lo - fi..ri + j - fi];
                let b = &self.data[rj + lo - fj..rj + j - fj];
                sum -= a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                if j < i {
                    self.data[ri + j - fi] = sum / self.data[rj + j - fj];
                } else {
                    if !(sum > 0.0) {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: sum });
                    }
                    self.data[ri + i - fi] = sum.sqrt();
                }
            }
        }
        Ok(Cholesky { factor: self })
    }
}

/// Lower-triangular Cholesky factor stored in the profile of the original matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    factor: ProfileMatrix,
}

impl Cholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.factor;
        let mut x = b.to_vec();
        for i in 0..m.n {
            let f = m.first[i];
            let row = &m.data[m.row_start[i]..m.row_start[i + 1]];
            let mut sum = x[i];
            for (off, l) in row[..i - f].iter().enumerate() {
                sum -= l * x[f + off];
            }
            x[i] = sum / row[i - f];
        }
        for i in (0..m.n).rev() {
            let f = m.first[i];
            let row = &m.data[m.row_start[i]..m.row_start[i + 1]];
            x[i] /= row[i - f];
            let xi = x[i];
            for (off, l) in row[..i - f].iter().enumerate() {
                x[f + off] -= l * xi;
            }
        }
        x
    }

    /// `log det A`
    pub fn log_det(&self) -> f64 {
        let m = &self.factor;
        (0..m.n).map(|i| 2.0 * m.get(i, i).ln()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn banded(n: usize, bw: usize) -> Vec<Vec<usize>> {
        (0..n)
            .map(|i| (i.saturating_sub(bw)..(i + bw + 1).min(n)).collect())
            .collect()
    }

    #[test]
    fn solves_tridiagonal_laplacian() {
        let n = 50;
        let mut a = ProfileMatrix::from_adjacency(&banded(n, 1));
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = a.clone().cholesky().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = ProfileMatrix::from_adjacency(&banded(3, 1));
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        a.add(2, 2, 1.0);
        assert!(matches!(a.cholesky(), Err(Error::NotPositiveDefinite { pivot: 1, .. })));
    }

    #[test]
    fn grounding_keeps_other_rows() {
        let n = 6;
        let mut a = ProfileMatrix::from_adjacency(&banded(n, 2));
        for i in 0..n {
            a.add(i, i, 4.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a.ground(2);
        assert_eq!(a.get(2, 2), 1.0);
        assert_eq!(a.get(2, 1), 0.0);
        assert_eq!(a.get(3, 2), 0.0);
        assert_eq!(a.get(4, 3), -1.0);
    }

    proptest! {
        #[test]
        fn random_spd_systems(seed in proptest::collection::vec(-1.0f64..1.0, 64), bw in 1usize..5) {
            let n = 16;
            let mut a = ProfileMatrix::from_adjacency(&banded(n, bw));
            // diagonally dominant symmetric matrix
            for i in 0..n {
                a.add(i, i, 2.0 * bw as f64 + 1.0);
                for j in i.saturating_sub(bw)..i {
                    a.add(i, j, seed[(i * 7 + j) % 64]);
                }
            }
            let b: Vec<f64> = (0..n).map(|i| seed[i]).collect();
            let x = a.clone().cholesky().unwrap().solve(&b);
            let r = a.mul_vec(&x);
            for i in 0..n {
                prop_assert!((r[i] - b[i]).abs() < 1e-10);
            }
        }
    }
}
