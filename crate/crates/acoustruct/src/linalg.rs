//! Direct solvers: banded LU with partial pivoting and a small dense LU.
//!
//! The wave grids stay below ~10⁵ unknowns, so sparse direct factorization is
//! the default linear-solve strategy everywhere; the band solver covers the
//! 5-point wave stencils (bandwidth `nx+1`) and the dense solver covers the
//! small beam blocks and Schur complements.

use crate::num::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular at pivot {pivot} (column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Banded matrix in LAPACK `gbtrf` layout (column-major, `2*kl + ku + 1` rows
/// per column; the top `kl` rows are fill space for pivoting).
#[derive(Clone, Debug)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            ldab,
            ab: vec![T::zero(); ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        c * self.ldab + r
    }

    /// Add `v` to entry `(i, j)`. Panics if `(i, j)` is outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j <= i + self.ku && i <= j + self.kl, "entry outside band");
        let r = self.kl + self.ku + i - j;
        let at = self.idx(r, j);
        self.ab[at] = self.ab[at] + v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if j > i + self.ku || i > j + self.kl {
            return T::zero();
        }
        let r = self.kl + self.ku + i - j;
        self.ab[self.idx(r, j)]
    }

    /// Factor in place (partial pivoting).
    pub fn factor(mut self) -> Result<BandedLu<T>, LinalgError> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            if j + kv < n {
                for r in 0..kl {
                    let at = self.idx(r, j + kv);
                    self.ab[at] = T::zero();
                }
            }
            let km = kl.min(n - 1 - j);
            let mut jp = 0usize;
            let mut best = self.ab[self.idx(kv, j)].abs();
            for p in 1..=km {
                let v = self.ab[self.idx(kv + p, j)].abs();
                if v > best {
                    best = v;
                    jp = p;
                }
            }
            ipiv[j] = j + jp;
            let piv = self.ab[self.idx(kv + jp, j)];
            if piv == T::zero() || !piv.is_finite() {
                return Err(LinalgError::Singular {
                    col: j,
                    pivot: piv.to_f64().unwrap_or(f64::NAN),
                });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.idx(kv + j - c, c);
                    let b = self.idx(kv + j + jp - c, c);
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[self.idx(kv, j)];
            for p in 1..=km {
                let at = self.idx(kv + p, j);
                let m = self.ab[at] / pivot;
                self.ab[at] = m;
                for c in j + 1..=ju {
                    let up = self.ab[self.idx(kv + j - c, c)];
                    let lo = self.idx(kv + j + p - c, c);
                    self.ab[lo] = self.ab[lo] - m * up;
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ldab,
            ab: self.ab,
            ipiv,
        })
    }
}

/// Factored banded matrix.
#[derive(Clone, Debug)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<T>,
    ipiv: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [T]) -> Result<(), LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::Dimension {
                expected: self.n,
                got: b.len(),
            });
        }
        let (n, kl, kv, ldab) = (self.n, self.kl, self.kl + self.ku, self.ldab);
        for j in 0..n {
            let jp = self.ipiv[j];
            if jp != j {
                b.swap(j, jp);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            for p in 1..=km {
                b[j + p] = b[j + p] - self.ab[j * ldab + kv + p] * bj;
            }
        }
        for j in (0..n).rev() {
            let cmax = (j + kv).min(n - 1);
            let mut s = b[j];
            for c in j + 1..=cmax {
                s = s - self.ab[c * ldab + kv + j - c] * b[c];
            }
            b[j] = s / self.ab[j * ldab + kv];
        }
        Ok(())
    }
}

/// Dense row-major matrix with LU solve; meant for the small beam blocks.
#[derive(Clone, Debug)]
pub struct DenseMatrix<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            a: vec![T::zero(); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = self.a[i * self.n + j] + v;
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            let mut s = T::zero();
            for (aij, xj) in row.iter().zip(x.iter()) {
                s = s + *aij * *xj;
            }
            y[i] = s;
        }
    }

    pub fn factor(mut self) -> Result<DenseLu<T>, LinalgError> {
        let n = self.n;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = self.a[k * n + k].abs();
            for i in k + 1..n {
                let v = self.a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            let pivot = self.a[p * n + k];
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(LinalgError::Singular {
                    col: k,
                    pivot: pivot.to_f64().unwrap_or(f64::NAN),
                });
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    self.a.swap(k * n + j, p * n + j);
                }
            }
            let pivot = self.a[k * n + k];
            for i in k + 1..n {
                let m = self.a[i * n + k] / pivot;
                self.a[i * n + k] = m;
                for j in k + 1..n {
                    self.a[i * n + j] = self.a[i * n + j] - m * self.a[k * n + j];
                }
            }
        }
        Ok(DenseLu { n, a: self.a, piv })
    }
}

#[derive(Clone, Debug)]
pub struct DenseLu<T> {
    n: usize,
    a: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> DenseLu<T> {
    pub fn solve(&self, b: &mut [T]) -> Result<(), LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::Dimension {
                expected: self.n,
                got: b.len(),
            });
        }
        let n = self.n;
        // full-row swaps during factorization mean the whole permutation
        // applies to the right-hand side before the triangular solves
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
        }
        for k in 0..n {
            let bk = b[k];
            for i in k + 1..n {
                b[i] = b[i] - self.a[i * n + k] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s = s - self.a[i * n + j] * b[j];
            }
            b[i] = s / self.a[i * n + i];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(
        rng: &mut ChaCha8Rng,
        n: usize,
        kl: usize,
        ku: usize,
    ) -> (BandedMatrix<f64>, DenseMatrix<f64>) {
        let mut banded = BandedMatrix::zeros(n, kl, ku);
        let mut dense = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if j <= i + ku && i <= j + kl {
                    let mut v: f64 = rng.gen_range(-1.0..1.0);
                    if i == j {
                        v += 4.0; // keep it comfortably nonsingular
                    }
                    banded.add(i, j, v);
                    dense.set(i, j, v);
                }
            }
        }
        (banded, dense)
    }

    #[test]
    fn banded_solve_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1usize, 0usize, 0usize), (5, 1, 1), (30, 3, 2), (64, 9, 9)] {
            let (banded, dense) = random_banded(&mut rng, n, kl, ku);
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = vec![0.0; n];
            dense.matvec(&x_true, &mut b);

            let lu = banded.factor().unwrap();
            let mut xb = b.clone();
            lu.solve(&mut xb).unwrap();

            let dlu = dense.factor().unwrap();
            let mut xd = b;
            dlu.solve(&mut xd).unwrap();

            for i in 0..n {
                assert!((xb[i] - x_true[i]).abs() < 1e-9, "banded x[{i}]");
                assert!((xd[i] - x_true[i]).abs() < 1e-9, "dense x[{i}]");
            }
        }
    }

    #[test]
    fn solvers_handle_pivoting_without_diagonal_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..20 {
            let n = 14;
            let (kl, ku) = (3, 2);
            let mut banded = BandedMatrix::zeros(n, kl, ku);
            let mut dense = DenseMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    if j <= i + ku && i <= j + kl {
                        // wide magnitude spread, no dominance: forces row swaps
                        let v: f64 = rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-3..4));
                        banded.add(i, j, v);
                        dense.set(i, j, v);
                    }
                }
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = vec![0.0; n];
            dense.matvec(&x_true, &mut b);
            let dc = dense.clone();

            let blu = banded.factor().unwrap();
            let mut xb = b.clone();
            blu.solve(&mut xb).unwrap();
            let dlu = dense.factor().unwrap();
            let mut xd = b.clone();
            dlu.solve(&mut xd).unwrap();

            let mut axd = vec![0.0; n];
            dc.matvec(&xd, &mut axd);
            for i in 0..n {
                let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                assert!(
                    (axd[i] - b[i]).abs() <= 1e-8 * scale,
                    "trial {trial} dense residual row {i}"
                );
                assert!(
                    (xb[i] - xd[i]).abs() <= 1e-6 * (1.0 + xd[i].abs()),
                    "trial {trial} banded vs dense row {i}"
                );
            }
        }
    }

    #[test]
    fn banded_pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row swap.
        let mut m = BandedMatrix::zeros(2, 1, 1);
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        let lu = m.factor().unwrap();
        let mut b = vec![3.0, 5.0];
        lu.solve(&mut b).unwrap();
        assert_eq!(b, vec![5.0, 3.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut m = BandedMatrix::zeros(3, 1, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        // row 2 left zero
        assert!(matches!(m.factor(), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn tridiagonal_known_solution() {
        // Second-difference matrix times [1..n] with Dirichlet ends.
        let n = 12;
        let mut m = BandedMatrix::zeros(n, 1, 1);
        for i in 0..n {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.add(i, i + 1, -1.0);
            }
        }
        // Solution v_j = j+1 gives rhs with a single nonzero at the last row.
        let mut b = vec![0.0; n];
        b[n - 1] = (n + 1) as f64;
        let lu = m.factor().unwrap();
        lu.solve(&mut b).unwrap();
        for (j, v) in b.iter().enumerate() {
            assert!((v - (j + 1) as f64).abs() < 1e-10);
        }
    }
}
