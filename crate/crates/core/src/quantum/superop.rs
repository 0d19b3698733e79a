//! Liouville-space representation with column-stacking vectorization:
//! `vec(ρ)[i + d·j] = ρ[i][j]`, so `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use num_traits::Zero;

use super::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, ComplexMatrix, PivotedQr};
use crate::scalar::{c, Cplx, Real};

/// Linear map on column-stacked `d×d` matrices, stored as a `d²×d²` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator<T> {
    hilbert_dim: usize,
    matrix: ComplexMatrix<T>,
}

pub fn vectorize<T: Real>(rho: &ComplexMatrix<T>) -> Vec<Cplx<T>> {
    let d = rho.dim();
    let mut v = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            v.push(rho[(i, j)]);
        }
    }
    v
}

pub fn devectorize<T: Real>(v: &[Cplx<T>]) -> Result<ComplexMatrix<T>> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::NotSquare { rows: v.len(), dim: d });
    }
    Ok(ComplexMatrix::from_fn(d, |i, j| v[i + d * j]))
}

impl<T: Real> Superoperator<T> {
    pub fn zeros(hilbert_dim: usize) -> Self {
        Self { hilbert_dim, matrix: ComplexMatrix::zeros(hilbert_dim * hilbert_dim) }
    }

    pub fn from_matrix(matrix: ComplexMatrix<T>) -> Result<Self> {
        let d = (matrix.dim() as f64).sqrt().round() as usize;
        if d * d != matrix.dim() {
            return Err(Error::NotSquare { rows: matrix.dim(), dim: d });
        }
        Ok(Self { hilbert_dim: d, matrix })
    }

    /// Superoperator of `ρ ↦ A ρ B`.
    pub fn sandwich(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Self {
        Self { hilbert_dim: a.dim(), matrix: b.transpose().kron(a) }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    pub fn apply(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if rho.dim() != self.hilbert_dim {
            return Err(Error::DimensionMismatch { expected: self.hilbert_dim, found: rho.dim() });
        }
        devectorize(&self.matrix.mul_vec(&vectorize(rho))?)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.hilbert_dim != self.hilbert_dim {
            return Err(Error::DimensionMismatch { expected: self.hilbert_dim, found: other.hilbert_dim });
        }
        Ok(Self { hilbert_dim: self.hilbert_dim, matrix: &self.matrix + &other.matrix })
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self { hilbert_dim: self.hilbert_dim, matrix: self.matrix.scale_real(s) }
    }

    /// `max_k |(vec(I)ᵀ L)_k|`: zero iff the map is trace-annihilating.
    pub fn trace_functional_residual(&self) -> T {
        let d = self.hilbert_dim;
        let n = d * d;
        (0..n)
            .map(|k| (0..d).fold(Cplx::zero(), |acc, i| acc + self.matrix[(i + d * i, k)]).norm())
            .fold(T::zero(), T::max)
    }

    pub fn eigenvalues(&self) -> Result<Vec<Cplx<T>>> {
        eigenvalues(&self.matrix)
    }
}

/// Matrix form of `ρ ↦ −i[H, ρ] + Σ rate·D[o]ρ`.
pub fn liouvillian<T: Real>(
    h: &ComplexMatrix<T>,
    jumps: &[(T, ComplexMatrix<T>)],
) -> Result<Superoperator<T>> {
    let d = h.dim();
    let id = ComplexMatrix::identity(d);
    let mut l = (&id.kron(h) - &h.transpose().kron(&id)).scale(c(0.0, -1.0));
    for (rate, o) in jumps {
        if *rate < T::zero() {
            return Err(Error::NegativeRate(rate.to_f64().unwrap_or(f64::NAN)));
        }
        if o.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: o.dim() });
        }
        let odo = &o.adjoint() * o;
        let half = T::lit(0.5);
        let term = &(&o.conj().kron(o) - &id.kron(&odo).scale_real(half))
            - &odo.transpose().kron(&id).scale_real(half);
        l += &term.scale_real(*rate);
    }
    Ok(Superoperator { hilbert_dim: d, matrix: l })
}

/// Relative rank threshold for kernel detection in Liouville space.
pub(crate) fn kernel_tolerance<T: Real>() -> T {
    T::tol(1e-11)
}

/// Dimension of the kernel of `L`.
pub fn kernel_dimension<T: Real>(l: &Superoperator<T>) -> Result<usize> {
    let n = l.matrix.dim();
    let qr = PivotedQr::new(l.matrix.as_slice(), n, n)?;
    Ok(n - qr.rank(kernel_tolerance()))
}

/// Unique steady state of `L`, Hermitized and normalized to unit trace.
pub fn steady_state_nullspace<T: Real>(l: &Superoperator<T>) -> Result<DensityMatrix<T>> {
    let n = l.matrix.dim();
    let qr = PivotedQr::new(l.matrix.as_slice(), n, n)?;
    let kernel = qr.null_space(kernel_tolerance());
    if kernel.len() != 1 {
        return Err(Error::DegenerateSteadyState(kernel.len()));
    }
    let rho = devectorize(&kernel[0])?;
    DensityMatrix::from_hermitized(&rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::operators::{dissipator, ket_bra, spin1_operators};
    use crate::scalar::c64 as c;

    fn random_matrix(d: usize, seed: u64) -> ComplexMatrix<f64> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        ComplexMatrix::from_fn(d, |_, _| c(next(), next()))
    }

    #[test]
    fn zero_hamiltonian_without_jumps_is_zero() {
        let l = liouvillian::<f64>(&ComplexMatrix::zeros(3), &[]).unwrap();
        assert_eq!(l.matrix().max_abs(), 0.0);
    }

    #[test]
    fn commutator_superoperator_on_coherence() {
        // oracle: −i[S^z, |2⟩⟨0|] = −i(1·|2⟩⟨0| − |2⟩⟨0|·(−1)) = −2i|2⟩⟨0|
        let s = spin1_operators::<f64>();
        let l = liouvillian(&s.sz, &[]).unwrap();
        let out = l.apply(&ket_bra(2, 0)).unwrap();
        let direct = s.sz.commutator(&ket_bra(2, 0)).unwrap().scale(c(0.0, -1.0));
        assert!(out.max_abs_diff(&direct) < 1e-15);
        assert!(out.max_abs_diff(&ket_bra::<f64>(2, 0).scale(c(0.0, -2.0))) < 1e-15);
    }

    #[test]
    fn liouvillian_matches_operator_form() {
        let h = random_matrix(3, 1).hermitian_part();
        let o1 = random_matrix(3, 2);
        let o2 = random_matrix(3, 3);
        let l = liouvillian(&h, &[(0.7, o1.clone()), (1.3, o2.clone())]).unwrap();
        for seed in 10..15 {
            let rho = random_matrix(3, seed);
            let direct = &(&h.commutator(&rho).unwrap().scale(c(0.0, -1.0))
                + &dissipator(&o1, &rho).unwrap().scale_real(0.7))
                + &dissipator(&o2, &rho).unwrap().scale_real(1.3);
            assert!(l.apply(&rho).unwrap().max_abs_diff(&direct) < 1e-12);
        }
        assert!(l.trace_functional_residual() < 1e-12);
    }

    #[test]
    fn negative_rate_is_rejected() {
        let r = liouvillian::<f64>(&ComplexMatrix::zeros(3), &[(-1.0, ket_bra(1, 0))]);
        assert_eq!(r, Err(Error::NegativeRate(-1.0)));
    }

    #[test]
    fn vectorization_round_trip_is_exact() {
        let m = random_matrix(9, 42);
        assert_eq!(devectorize(&vectorize(&m)).unwrap(), m);
        assert!(devectorize::<f64>(&[Cplx::zero(); 5]).is_err());
    }

    #[test]
    fn sandwich_matches_products() {
        let a = random_matrix(3, 5);
        let b = random_matrix(3, 6);
        let x = random_matrix(3, 7);
        let s = Superoperator::sandwich(&a, &b);
        assert!(s.apply(&x).unwrap().max_abs_diff(&(&(&a * &x) * &b)) < 1e-14);
    }

    #[test]
    fn degenerate_kernel_is_reported() {
        // pure dephasing-free zero map: every state is stationary
        let l = liouvillian::<f64>(&ComplexMatrix::zeros(3), &[]).unwrap();
        assert_eq!(steady_state_nullspace(&l), Err(Error::DegenerateSteadyState(9)));
        // only loss from |2⟩: both |0⟩⟨0| and |1⟩⟨1| are stationary
        let l = liouvillian::<f64>(&ComplexMatrix::zeros(3), &[(1.0, ket_bra(1, 2))]).unwrap();
        assert!(matches!(steady_state_nullspace(&l), Err(Error::DegenerateSteadyState(k)) if k >= 2));
    }
}
