//! LU solves, column-pivoted QR null spaces and inverse iteration.

use num_traits::{One, Zero};

use super::matrix::{vec_norm, ComplexMatrix};
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// LU factorization with partial pivoting, `P·A = L·U`.
pub struct Lu<T> {
    n: usize,
    lu: Vec<Cplx<T>>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &ComplexMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == T::zero() {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let mut x: Vec<Cplx<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                x[i] = x[i] - u * x[j];
            }
            x[i] = x[i] / self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Solves `A x = b`.
pub fn solve<T: Real>(a: &ComplexMatrix<T>, b: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
    Lu::new(a)?.solve(b)
}

/// Householder QR with column pivoting of a row-major `rows × cols` matrix.
pub struct PivotedQr<T> {
    rows: usize,
    cols: usize,
    r: Vec<Cplx<T>>,
    perm: Vec<usize>,
}

impl<T: Real> PivotedQr<T> {
    pub fn new(a: &[Cplx<T>], rows: usize, cols: usize) -> Result<Self> {
        if a.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: a.len() });
        }
        let mut r = a.to_vec();
        let mut perm: Vec<usize> = (0..cols).collect();
        let mut v = vec![Cplx::<T>::zero(); rows];
        for k in 0..rows.min(cols) {
            // pivot: remaining column with the largest trailing norm
            let col_norm = |r: &[Cplx<T>], j: usize| {
                (k..rows).fold(T::zero(), |acc, i| acc + r[i * cols + j].norm_sqr())
            };
            let (p, _) = (k..cols)
                .map(|j| (j, col_norm(&r, j)))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                for i in 0..rows {
                    r.swap(i * cols + k, i * cols + p);
                }
                perm.swap(k, p);
            }
            let norm = col_norm(&r, k).sqrt();
            if norm == T::zero() {
                continue;
            }
            let x0 = r[k * cols + k];
            let phase = if x0.norm() == T::zero() { Cplx::one() } else { x0 / x0.norm() };
            let alpha = -phase * norm;
            for i in k..rows {
                v[i] = r[i * cols + k];
            }
            v[k] -= alpha;
            let vnorm = (k..rows).fold(T::zero(), |acc, i| acc + v[i].norm_sqr()).sqrt();
            if vnorm == T::zero() {
                continue;
            }
            for vi in v.iter_mut().take(rows).skip(k) {
                *vi = *vi / vnorm;
            }
            for j in k..cols {
                let mut dot = Cplx::zero();
                for i in k..rows {
                    dot += v[i].conj() * r[i * cols + j];
                }
                let two_dot = dot * T::lit(2.0);
                for i in k..rows {
                    r[i * cols + j] -= v[i] * two_dot;
                }
            }
            r[k * cols + k] = alpha;
            for i in k + 1..rows {
                r[i * cols + k] = Cplx::zero();
            }
        }
        Ok(Self { rows, cols, r, perm })
    }

    /// Moduli of the diagonal of `R` (non-increasing up to round-off).
    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|k| self.r[k * self.cols + k].norm()).collect()
    }

    /// Numerical rank: diagonal entries above `rel_tol · |R₀₀|`.
    pub fn rank(&self, rel_tol: T) -> usize {
        let d = self.diagonal();
        match d.first() {
            None => 0,
            Some(&d0) if d0 == T::zero() => 0,
            Some(&d0) => d.iter().take_while(|&&x| x > rel_tol * d0).count(),
        }
    }

    /// Unit-norm basis of the right null space (one vector per rank deficit).
    pub fn null_space(&self, rel_tol: T) -> Vec<Vec<Cplx<T>>> {
        let rank = self.rank(rel_tol);
        let cols = self.cols;
        (rank..cols)
            .map(|free| {
                let mut y = vec![Cplx::<T>::zero(); rank];
                for i in (0..rank).rev() {
                    let mut acc = -self.r[i * cols + free];
                    for (j, &yj) in y.iter().enumerate().take(rank).skip(i + 1) {
                        acc -= self.r[i * cols + j] * yj;
                    }
                    y[i] = acc / self.r[i * cols + i];
                }
                let mut z = vec![Cplx::<T>::zero(); cols];
                for (i, &yi) in y.iter().enumerate() {
                    z[self.perm[i]] = yi;
                }
                z[self.perm[free]] = Cplx::one();
                let nz = vec_norm(&z);
                z.iter().map(|&x| x / nz).collect()
            })
            .collect()
    }
}

/// Left eigenvector `w` (with `w† A = λ w†`) by two steps of shifted inverse
/// iteration on `A†`. Returned with unit norm.
pub fn left_eigenvector<T: Real>(a: &ComplexMatrix<T>, lambda: Cplx<T>) -> Result<Vec<Cplx<T>>> {
    let n = a.dim();
    let nudge = T::epsilon() * T::lit(1e3) * (T::one() + a.max_abs());
    let shift = lambda.conj() + Cplx::new(nudge, nudge);
    let mut shifted = a.adjoint();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = Lu::new(&shifted)?;
    let mut w: Vec<Cplx<T>> = (0..n)
        .map(|i| Cplx::new(T::one(), T::lit(0.1 * ((i % 7) as f64 - 3.0))))
        .collect();
    for _ in 0..3 {
        w = lu.solve(&w)?;
        let nw = vec_norm(&w);
        if nw == T::zero() || !nw.is_finite() {
            return Err(Error::Singular);
        }
        for x in w.iter_mut() {
            *x = *x / nw;
        }
    }
    Ok(w)
}
