//! Spin-1 operators and the Lindblad dissipator. The basis order is
//! `(|0⟩, |1⟩, |2⟩)` everywhere, with `S^z = |2⟩⟨2| − |0⟩⟨0|`.

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::{c, Cplx, Real};

/// Hilbert-space dimension of one oscillator.
pub const LEVELS: usize = 3;

/// `S^z`, `S^+`, `S^-` and `S^y` of a spin-1 in the `(|0⟩, |1⟩, |2⟩)` basis.
#[derive(Clone, Debug)]
pub struct SpinOperators<T> {
    pub sz: ComplexMatrix<T>,
    pub splus: ComplexMatrix<T>,
    pub sminus: ComplexMatrix<T>,
    pub sy: ComplexMatrix<T>,
}

pub fn spin1_operators<T: Real>() -> SpinOperators<T> {
    let sqrt2 = T::lit(2.0).sqrt();
    let sz = &ComplexMatrix::ket_bra(LEVELS, 2, 2) - &ComplexMatrix::ket_bra(LEVELS, 0, 0);
    let splus = (&ComplexMatrix::ket_bra(LEVELS, 2, 1) + &ComplexMatrix::ket_bra(LEVELS, 1, 0))
        .scale_real(sqrt2);
    let sminus = splus.adjoint();
    let sy = (&sminus - &splus).scale(c(0.0, 0.5));
    SpinOperators { sz, splus, sminus, sy }
}

/// `|a⟩⟨b|` on a single oscillator.
pub fn ket_bra<T: Real>(a: usize, b: usize) -> ComplexMatrix<T> {
    ComplexMatrix::ket_bra(LEVELS, a, b)
}

/// `D[o]ρ = oρo† − (o†oρ + ρo†o)/2`.
pub fn dissipator<T: Real>(o: &ComplexMatrix<T>, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    if o.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: o.dim(), found: rho.dim() });
    }
    let od = o.adjoint();
    let odo = &od * o;
    let jump = &(o * rho) * &od;
    let anti = &(&odo * rho) + &(rho * &odo);
    Ok(&jump - &anti.scale_real(T::lit(0.5)))
}

/// Kronecker product with oscillator A as the first factor.
pub fn tensor<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    a.kron(b)
}

/// `Tr(ρ O)`.
pub fn expectation<T: Real>(rho: &ComplexMatrix<T>, o: &ComplexMatrix<T>) -> Result<Cplx<T>> {
    rho.trace_product(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn ket(i: usize) -> Vec<Cplx<f64>> {
        let mut v = vec![Cplx::zero(); 3];
        v[i] = Cplx::new(1.0, 0.0);
        v
    }

    #[test]
    fn sz_annihilates_middle_level() {
        let s = spin1_operators::<f64>();
        assert!(s.sz.mul_vec(&ket(1)).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn splus_raises_bottom_level() {
        let s = spin1_operators::<f64>();
        let v = s.splus.mul_vec(&ket(0)).unwrap();
        assert!((v[1] - Cplx::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!(v[0].norm() == 0.0 && v[2].norm() == 0.0);
    }

    #[test]
    fn commutator_of_ladder_operators_on_top_level() {
        // oracle: [S+, S-] computed entry by entry from the explicit 3×3 matrices
        let r2 = 2f64.sqrt();
        let sp = [[0.0, 0.0, 0.0], [r2, 0.0, 0.0], [0.0, r2, 0.0]];
        let mut sm = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                sm[i][j] = sp[j][i];
            }
        }
        let mut comm = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    comm[i][j] += sp[i][k] * sm[k][j] - sm[i][k] * sp[k][j];
                }
            }
        }
        let expected: Vec<f64> = (0..3).map(|i| comm[i][2]).collect();
        assert!((expected[2] - 2.0).abs() < 1e-14);

        let s = spin1_operators::<f64>();
        let v = s.splus.commutator(&s.sminus).unwrap().mul_vec(&ket(2)).unwrap();
        for i in 0..3 {
            assert!((v[i] - Cplx::new(expected[i], 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn sy_is_hermitian_and_matches_definition() {
        let s = spin1_operators::<f64>();
        assert!(s.sy.hermiticity_error() < 1e-15);
        // S^y = (S+ − S−)/(2i)
        let alt = (&s.splus - &s.sminus).scale(Cplx::new(0.0, -0.5));
        assert!(s.sy.max_abs_diff(&alt) < 1e-15);
    }

    #[test]
    fn dissipator_examples() {
        let o = ket_bra::<f64>(1, 0);
        let d = dissipator(&o, &ket_bra(0, 0)).unwrap();
        let expected = &ket_bra(1, 1) - &ket_bra(0, 0);
        assert!(d.max_abs_diff(&expected) < 1e-15);

        let d = dissipator(&o, &ket_bra(1, 1)).unwrap();
        assert!(d.max_abs() == 0.0);

        // oracle: explicit products for o = |1⟩⟨2|, ρ = I/3
        let o = ket_bra::<f64>(1, 2);
        let rho = ComplexMatrix::identity(3).scale_real(1.0 / 3.0);
        let d = dissipator(&o, &rho).unwrap();
        let expected = (&ket_bra(1, 1) - &ket_bra(2, 2)).scale_real(1.0 / 3.0);
        assert!(d.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn dissipator_dimension_mismatch() {
        let o = ket_bra::<f64>(1, 0);
        assert!(dissipator(&o, &ComplexMatrix::identity(9)).is_err());
    }

    #[test]
    fn tensor_examples() {
        let p11 = ket_bra::<f64>(1, 1);
        let t = tensor(&p11, &p11);
        assert_eq!(t, ComplexMatrix::ket_bra(9, 4, 4));

        // oracle: (S+ ⊗ S−)|1,1⟩ = (S+|1⟩) ⊗ (S−|1⟩) = √2|2⟩ ⊗ √2|0⟩
        let s = spin1_operators::<f64>();
        let mut v = vec![Cplx::zero(); 9];
        v[4] = Cplx::new(1.0, 0.0);
        let out = tensor(&s.splus, &s.sminus).mul_vec(&v).unwrap();
        for (i, z) in out.iter().enumerate() {
            let want = if i == 2 * 3 { 2.0 } else { 0.0 };
            assert!((z - Cplx::new(want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn single_precision_operators() {
        let s = spin1_operators::<f32>();
        assert!((s.splus[(1, 0)].re - 2f32.sqrt()).abs() < 1e-6);
    }
}
