//! Eigenvalues of small dense complex matrices.
//!
//! Householder reduction to upper Hessenberg form followed by single-shift
//! complex QR iteration with Wilkinson shifts and deflation. Matrices in this
//! crate never exceed 81×81, so no blocking or aggressive early deflation.

use num_traits::Zero;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// All eigenvalues of `m`, in no particular order.
pub fn eigenvalues<T: Real>(m: &ComplexMatrix<T>) -> Result<Vec<Cplx<T>>> {
    let n = m.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h: Vec<Cplx<T>> = m.as_slice().to_vec();
    hessenberg_in_place(&mut h, n);
    hessenberg_qr(&mut h, n)
}

fn hessenberg_in_place<T: Real>(h: &mut [Cplx<T>], n: usize) {
    let mut v = vec![Cplx::<T>::zero(); n];
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).fold(T::zero(), |acc, i| acc + h[i * n + k].norm_sqr()).sqrt();
        if norm == T::zero() {
            continue;
        }
        let x0 = h[(k + 1) * n + k];
        let phase = if x0.norm() == T::zero() { Cplx::new(T::one(), T::zero()) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        for i in k + 1..n {
            v[i] = h[i * n + k];
        }
        v[k + 1] -= alpha;
        let vnorm = (k + 1..n).fold(T::zero(), |acc, i| acc + v[i].norm_sqr()).sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for i in k + 1..n {
            v[i] = v[i] / vnorm;
        }
        // H ← (I − 2vv†) H
        for j in 0..n {
            let mut dot = Cplx::zero();
            for i in k + 1..n {
                dot += v[i].conj() * h[i * n + j];
            }
            let two_dot = dot * T::lit(2.0);
            for i in k + 1..n {
                h[i * n + j] -= v[i] * two_dot;
            }
        }
        // H ← H (I − 2vv†)
        for i in 0..n {
            let mut dot = Cplx::zero();
            for j in k + 1..n {
                dot += h[i * n + j] * v[j];
            }
            let two_dot = dot * T::lit(2.0);
            for j in k + 1..n {
                h[i * n + j] -= two_dot * v[j].conj();
            }
        }
        for i in k + 2..n {
            h[i * n + k] = Cplx::zero();
        }
    }
}

/// Rotation `G = [[c, s], [−s̄, c]]` with real `c` such that `G·[a, b]ᵀ = [r, 0]ᵀ`.
fn givens<T: Real>(a: Cplx<T>, b: Cplx<T>) -> (T, Cplx<T>) {
    let an = a.norm();
    let bn = b.norm();
    if bn == T::zero() {
        return (T::one(), Cplx::zero());
    }
    if an == T::zero() {
        return (T::zero(), Cplx::new(T::one(), T::zero()));
    }
    let r = an.hypot(bn);
    (an / r, (a / an) * b.conj() / r)
}

fn hessenberg_qr<T: Real>(h: &mut [Cplx<T>], n: usize) -> Result<Vec<Cplx<T>>> {
    let eps = T::epsilon();
    let mut eig = vec![Cplx::zero(); n];
    let mut rot: Vec<(T, Cplx<T>)> = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[0];
            break;
        }
        // locate the start of the active unreduced block
        let mut l = hi;
        while l > 0 {
            let sub = h[l * n + l - 1].norm();
            let scale = h[(l - 1) * n + l - 1].norm() + h[l * n + l].norm();
            let scale = if scale == T::zero() { T::one() } else { scale };
            if sub <= eps * scale {
                h[l * n + l - 1] = Cplx::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi * n + hi];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if iter > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(Error::NonConvergence { iterations: total });
        }

        let a = h[(hi - 1) * n + hi - 1];
        let b = h[(hi - 1) * n + hi];
        let cc = h[hi * n + hi - 1];
        let d = h[hi * n + hi];
        let mu = if iter % 11 == 10 {
            // exceptional shift to break cycles
            d + Cplx::new(cc.norm() * T::lit(0.75), cc.norm() * T::lit(0.43))
        } else {
            // eigenvalue of the trailing 2×2 block closest to its last diagonal entry
            let half = T::lit(0.5);
            let mean = (a + d) * half;
            let p = (a - d) * half;
            let disc = (p * p + b * cc).sqrt();
            let m1 = mean + disc;
            let m2 = mean - disc;
            if (m1 - d).norm() < (m2 - d).norm() { m1 } else { m2 }
        };

        for i in l..=hi {
            h[i * n + i] -= mu;
        }
        rot.clear();
        for k in l..hi {
            let (cs, sn) = givens(h[k * n + k], h[(k + 1) * n + k]);
            for j in k..=hi {
                let x = h[k * n + j];
                let y = h[(k + 1) * n + j];
                h[k * n + j] = x * cs + sn * y;
                h[(k + 1) * n + j] = -sn.conj() * x + y * cs;
            }
            rot.push((cs, sn));
        }
        for (idx, &(cs, sn)) in rot.iter().enumerate() {
            let k = l + idx;
            let last = (k + 2).min(hi);
            for i in l..=last {
                let x = h[i * n + k];
                let y = h[i * n + k + 1];
                h[i * n + k] = x * cs + y * sn.conj();
                h[i * n + k + 1] = -x * sn + y * cs;
            }
        }
        for i in l..=hi {
            h[i * n + i] += mu;
        }
    }
    Ok(eig)
}
