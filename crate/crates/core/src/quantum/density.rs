use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, ComplexMatrix};
use crate::scalar::{re, Cplx, Real};

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T>(ComplexMatrix<T>);

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity (1e-10), unit trace (1e-10) and positivity
    /// (smallest eigenvalue ≥ −1e-8).
    pub fn new(m: ComplexMatrix<T>) -> Result<Self> {
        Self::validate(&m, T::tol(1e-8))?;
        Ok(Self(m))
    }

    /// Like [`DensityMatrix::new`] but with a caller-chosen positivity floor.
    pub fn with_positivity_tolerance(m: ComplexMatrix<T>, neg_tol: T) -> Result<Self> {
        Self::validate(&m, neg_tol)?;
        Ok(Self(m))
    }

    /// `(m + m†)/2`, rescaled to unit trace, then validated.
    pub fn from_hermitized(m: &ComplexMatrix<T>) -> Result<Self> {
        let h = m.hermitian_part();
        let tr = h.trace().re;
        if !(tr.abs() > T::epsilon()) {
            return Err(Error::InvalidDensityMatrix("trace vanishes".into()));
        }
        Self::new(h.scale_real(T::one() / tr))
    }

    /// Wraps `m` without checks; used inside integrators where states are
    /// known to be valid up to the integration tolerance.
    pub fn new_unchecked(m: ComplexMatrix<T>) -> Self {
        Self(m)
    }

    /// `|k⟩⟨k|`.
    pub fn pure_level(dim: usize, k: usize) -> Self {
        Self(ComplexMatrix::ket_bra(dim, k, k))
    }

    /// `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale_real(T::one() / T::from_usize(dim).unwrap()))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.0
    }

    /// `Tr(ρ O)`.
    pub fn expectation(&self, o: &ComplexMatrix<T>) -> Result<Cplx<T>> {
        self.0.trace_product(o)
    }

    /// Smallest eigenvalue (real part) of the Hermitian matrix.
    pub fn min_eigenvalue(&self) -> Result<T> {
        min_eigenvalue(&self.0)
    }

    fn validate(m: &ComplexMatrix<T>, neg_tol: T) -> Result<()> {
        if !m.is_finite() {
            return Err(Error::InvalidDensityMatrix("non-finite entries".into()));
        }
        let herm = m.hermiticity_error();
        if herm > T::tol(1e-10) {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (error {herm:e})")));
        }
        let tr = m.trace();
        if (tr - re(T::one())).norm() > T::tol(1e-10) {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} differs from 1")));
        }
        let lmin = min_eigenvalue(m)?;
        if lmin < -neg_tol {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {lmin:e}")));
        }
        Ok(())
    }
}

pub(crate) fn min_eigenvalue<T: Real>(m: &ComplexMatrix<T>) -> Result<T> {
    Ok(eigenvalues(&m.hermitian_part())?
        .into_iter()
        .map(|z| z.re)
        .fold(T::infinity(), T::min))
}
