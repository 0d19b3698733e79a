//! Linear stability of the unsynchronized fixed point `ρ_A = ρ_B = |1⟩⟨1|`.

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, inner, left_eigenvector, vec_norm, ComplexMatrix};
use crate::model::{single_site_liouvillian, Group, ModelParams};
use crate::quantum::{ket_bra, spin1_operators, vectorize, LEVELS};
use crate::scalar::{c, Cplx, Real};

/// Eigenvalues with modulus below this are candidates for neutral (trace) modes.
pub const NEUTRAL_EIGENVALUE_BOUND: f64 = 1e-10;
/// Minimal overlap with the trace functionals for a mode to count as neutral.
pub const NEUTRAL_OVERLAP: f64 = 0.99;
/// Overlaps between this and [`NEUTRAL_OVERLAP`] are ambiguous.
pub const AMBIGUOUS_OVERLAP: f64 = 0.5;
/// Number of couplings probed before bisection in [`critical_coupling`].
pub const SCAN_POINTS: usize = 64;
/// Relative bracket width at which bisection stops.
pub const BISECTION_REL_WIDTH: f64 = 1e-4;

const N: usize = LEVELS * LEVELS;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityReport<T> {
    pub spectral_abscissa: T,
    pub leading_eigenvalue: Cplx<T>,
    pub unstable: bool,
    /// Number of eigenvalues dropped as neutral trace modes.
    pub neutral_modes: usize,
}

/// Jacobian of the mean-field equations at the fixed point, acting on
/// `(vec δρ_A, vec δρ_B)` with column-stacked vectorization (18×18).
pub fn linearized_generator<T: Real>(p: &ModelParams<T>) -> Result<ComplexMatrix<T>> {
    p.validate()?;
    let s = spin1_operators::<T>();
    let rho0 = ket_bra::<T>(1, 1);
    let minus_i = c::<T>(0.0, -1.0);
    // response of the state to a unit ⟨S⁻⟩ (through S⁺) and a unit ⟨S⁺⟩ (through S⁻)
    let via_minus = vectorize(&s.splus.commutator(&rho0)?.scale(minus_i));
    let via_plus = vectorize(&s.sminus.commutator(&rho0)?.scale(minus_i));
    // Tr(E_j S^∓) for the basis element E_j = |j mod d⟩⟨j div d|
    let probe = |op: &ComplexMatrix<T>, j: usize| op[(j / LEVELS, j % LEVELS)];

    let mut g = ComplexMatrix::zeros(2 * N);
    for (blk, group) in [Group::A, Group::B].into_iter().enumerate() {
        let l0 = single_site_liouvillian(p, group)?;
        let off = blk * N;
        for i in 0..N {
            for j in 0..N {
                g[(off + i, off + j)] = l0.matrix()[(i, j)];
            }
        }
    }
    for row_blk in 0..2 {
        for col_blk in 0..2 {
            let strength = if row_blk == col_blk { p.v } else { p.v_ab };
            if strength == T::zero() {
                continue;
            }
            for j in 0..N {
                let tm = probe(&s.sminus, j);
                let tp = probe(&s.splus, j);
                for i in 0..N {
                    g[(row_blk * N + i, col_blk * N + j)] += (via_minus[i] * tm + via_plus[i] * tp) * strength;
                }
            }
        }
    }
    Ok(g)
}

/// Fraction of the (unit) left eigenvector `w` lying in the span of the two trace functionals.
fn trace_overlap<T: Real>(w: &[Cplx<T>]) -> T {
    let id = vectorize(&ComplexMatrix::<T>::identity(LEVELS));
    let norm_id = vec_norm(&id);
    let mut acc = T::zero();
    for blk in 0..2 {
        let part = &w[blk * N..(blk + 1) * N];
        acc += (inner(&id, part) / norm_id).norm_sqr();
    }
    (acc.sqrt() / vec_norm(w)).min(T::one())
}

/// Largest real part among the non-neutral eigenvalues of the linearization.
pub fn spectral_abscissa<T: Real>(p: &ModelParams<T>) -> Result<StabilityReport<T>> {
    let g = linearized_generator(p)?;
    let ev = eigenvalues(&g)?;
    let mut best: Option<Cplx<T>> = None;
    let mut neutral = 0;
    for &lambda in &ev {
        if lambda.norm() <= T::lit(NEUTRAL_EIGENVALUE_BOUND) {
            let w = left_eigenvector(&g, lambda)?;
            let overlap = trace_overlap(&w);
            if overlap > T::lit(NEUTRAL_OVERLAP) {
                neutral += 1;
                continue;
            }
            if overlap > T::lit(AMBIGUOUS_OVERLAP) {
                return Err(Error::AmbiguousNeutralMode {
                    overlap: overlap.to_f64().unwrap_or(f64::NAN),
                    eigenvalue: format!("{lambda:?}"),
                });
            }
        }
        if best.map_or(true, |b| lambda.re > b.re) {
            best = Some(lambda);
        }
    }
    let leading = best.unwrap_or_else(|| c(f64::NEG_INFINITY, 0.0));
    Ok(StabilityReport {
        spectral_abscissa: leading.re,
        leading_eigenvalue: leading,
        unstable: leading.re > T::zero(),
        neutral_modes: neutral,
    })
}

/// Default upper end of the coupling scan, `20(γ₋ + γ₊)`.
pub fn default_v_max<T: Real>(p: &ModelParams<T>) -> T {
    T::lit(20.0) * p.total_rate()
}

/// Smallest intra-group coupling `V ∈ (0, v_max]` at which the fixed point turns
/// unstable, or `None` if it stays stable on the whole interval. The value of
/// `p.v` is ignored.
pub fn critical_coupling<T: Real>(p: &ModelParams<T>, v_max: T) -> Result<Option<T>> {
    if !(v_max > T::zero() && v_max.is_finite()) {
        return Err(Error::InvalidParameter("v_max must be positive and finite".into()));
    }
    let unstable_at = |v: T| -> Result<bool> { Ok(spectral_abscissa(&ModelParams { v, ..*p })?.unstable) };
    let mut prev = unstable_at(T::zero())?;
    let mut first: Option<usize> = None;
    let mut crossings = 0;
    for k in 1..=SCAN_POINTS {
        let now = unstable_at(v_max * T::lit(k as f64) / T::lit(SCAN_POINTS as f64))?;
        if now != prev {
            crossings += 1;
            if now && first.is_none() {
                first = Some(k);
            }
        }
        prev = now;
    }
    if crossings > 1 {
        warn!("stability changes sign {crossings} times below v_max; reporting the first onset");
    }
    let Some(k) = first else {
        return Ok(None);
    };
    let step = v_max / T::lit(SCAN_POINTS as f64);
    let mut lo = step * T::lit((k - 1) as f64);
    let mut hi = step * T::lit(k as f64);
    let half = T::lit(0.5);
    while hi - lo > T::lit(BISECTION_REL_WIDTH) * hi {
        let mid = (lo + hi) * half;
        if unstable_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some((lo + hi) * half))
}
