//! Few-oscillator steady states and their phase distributions on spin-coherent states.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{expm, ComplexMatrix, Lu};
use crate::model::{driven_liouvillian, two_oscillator_liouvillian, two_oscillator_split, ModelParams};
use crate::quantum::{kernel_dimension, spin1_operators, steady_state_nullspace, vectorize, DensityMatrix, LEVELS};
use crate::quadrature::{gauss_legendre, periodic_trapezoid};
use crate::scalar::{c, wrap_angle, Cplx, Real};

/// Smallest node counts accepted by [`phase_distribution`].
pub const MIN_THETA_NODES: usize = 64;
pub const MIN_PHI_POINTS: usize = 128;
/// Peak threshold of the two-oscillator synchronization classifier.
pub const SYNC_THRESHOLD: f64 = 5e-3;

/// `S^z` eigenvalues of `|0⟩, |1⟩, |2⟩`.
const MAGNETIC: [i32; 3] = [-1, 0, 1];

/// Coherent state label `(θ, φ)` on the spin-1 sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinCoherentState<T> {
    pub theta: T,
    pub phi: T,
}

impl<T: Real> SpinCoherentState<T> {
    pub fn ket(&self) -> Vec<Cplx<T>> {
        spin_coherent(self.theta, self.phi)
    }
}

/// `exp(−iθS^y)|2⟩`.
fn rotated_top<T: Real>(theta: T) -> Vec<Cplx<T>> {
    let s = spin1_operators::<T>();
    let rot = expm(&s.sy.scale(Cplx::new(T::zero(), -theta)));
    (0..LEVELS).map(|i| rot[(i, 2)]).collect()
}

/// Diagonal of `exp(−iφS^z)`.
fn azimuthal_phases<T: Real>(phi: T) -> Vec<Cplx<T>> {
    let s = spin1_operators::<T>();
    let rot = expm(&s.sz.scale(Cplx::new(T::zero(), -phi)));
    (0..LEVELS).map(|i| rot[(i, i)]).collect()
}

/// `|θ, φ⟩ = exp(−iφS^z) exp(−iθS^y)|2⟩` in the basis `(|0⟩, |1⟩, |2⟩)`.
pub fn spin_coherent<T: Real>(theta: T, phi: T) -> Vec<Cplx<T>> {
    rotated_top(theta).into_iter().zip(azimuthal_phases(phi)).map(|(u, e)| u * e).collect()
}

fn sandwich<T: Real>(rho: &ComplexMatrix<T>, psi: &[Cplx<T>]) -> T {
    let mut acc = Cplx::new(T::zero(), T::zero());
    for a in 0..psi.len() {
        for b in 0..psi.len() {
            acc += psi[a].conj() * rho[(a, b)] * psi[b];
        }
    }
    acc.re
}

/// `Q(θ, φ) = (3/4π)⟨θ,φ|ρ|θ,φ⟩`.
pub fn husimi_q<T: Real>(rho: &DensityMatrix<T>, theta: T, phi: T) -> T {
    let pref = T::lit(3.0) / (T::lit(4.0) * T::PI());
    pref * sandwich(rho.matrix(), &spin_coherent(theta, phi))
}

/// Node counts for the single-oscillator phase distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseGrid {
    /// Gauss–Legendre nodes in `θ ∈ [0, π]`.
    pub theta_nodes: usize,
    /// Output points `φ_k = 2πk/n`.
    pub phi_points: usize,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self { theta_nodes: MIN_THETA_NODES, phi_points: MIN_PHI_POINTS }
    }
}

/// `s(φ)` sampled on `φ_k = 2πk/n`: marginal phase density minus `1/2π`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDistribution<T> {
    pub phis: Vec<T>,
    pub values: Vec<T>,
    /// Trapezoid integral of the marginal density before any rescaling.
    pub normalization: T,
}

impl<T: Real> PhaseDistribution<T> {
    /// Grid argmax `(φ_max, s(φ_max))`; ties go to the smaller `φ`.
    pub fn peak(&self) -> (T, T) {
        let mut best = (self.phis[0], self.values[0]);
        for (&p, &v) in self.phis.iter().zip(&self.values).skip(1) {
            if v > best.1 {
                best = (p, v);
            }
        }
        best
    }

    /// `∫ (s + 1/2π) dφ` by the periodic trapezoid rule.
    pub fn integral(&self) -> T {
        let h = T::TAU() / T::lit(self.phis.len() as f64);
        let bg = T::one() / T::TAU();
        self.values.iter().fold(T::zero(), |acc, &v| acc + (v + bg) * h)
    }

    /// Value at the grid point nearest to `phi` (mod 2π).
    pub fn value_near(&self, phi: T) -> T {
        let n = self.phis.len();
        let k = (wrap_angle(phi) / T::TAU() * T::lit(n as f64)).round().to_usize().unwrap_or(0) % n;
        self.values[k]
    }
}

fn phase_grid<T: Real>(n: usize) -> Vec<T> {
    (0..n).map(|k| T::TAU() * T::lit(k as f64) / T::lit(n as f64)).collect()
}

/// `s(φ) = ∫₀^π sinθ Q(θ, φ) dθ − 1/2π`.
pub fn phase_distribution<T: Real>(rho: &DensityMatrix<T>, grid: PhaseGrid) -> Result<PhaseDistribution<T>> {
    if rho.dim() != LEVELS {
        return Err(Error::DimensionMismatch { expected: LEVELS, found: rho.dim() });
    }
    if grid.theta_nodes < MIN_THETA_NODES || grid.phi_points < MIN_PHI_POINTS {
        return Err(Error::InvalidParameter(format!(
            "phase grid needs at least {MIN_THETA_NODES} θ nodes and {MIN_PHI_POINTS} φ points"
        )));
    }
    let rule = gauss_legendre(grid.theta_nodes, T::zero(), T::PI())?;
    let tops: Vec<Vec<Cplx<T>>> = rule.nodes.iter().map(|&t| rotated_top(t)).collect();
    let pref = T::lit(3.0) / (T::lit(4.0) * T::PI());
    let bg = T::one() / T::TAU();
    let phis = phase_grid::<T>(grid.phi_points);
    let mut values = Vec::with_capacity(phis.len());
    for &phi in &phis {
        let phases = azimuthal_phases(phi);
        let mut acc = T::zero();
        for ((&theta, &w), u) in rule.nodes.iter().zip(&rule.weights).zip(&tops) {
            let psi: Vec<Cplx<T>> = u.iter().zip(&phases).map(|(a, b)| a * b).collect();
            acc += w * theta.sin() * sandwich(rho.matrix(), &psi);
        }
        values.push(pref * acc - bg);
    }
    let mut dist = PhaseDistribution { phis, values, normalization: T::one() };
    dist.normalization = dist.integral();
    Ok(dist)
}

/// Steady state of the driven single oscillator.
pub fn driven_steady_state<T: Real>(p: &ModelParams<T>) -> Result<DensityMatrix<T>> {
    p.validate()?;
    steady_state_nullspace(&driven_liouvillian(p)?)
}

/// Exact steady state of two coupled oscillators from the kernel of the 81×81 Liouvillian.
pub fn exact_two_oscillator_steady_state<T: Real>(p: &ModelParams<T>) -> Result<DensityMatrix<T>> {
    p.validate()?;
    steady_state_nullspace(&two_oscillator_liouvillian(p)?)
}

const PAIR: usize = LEVELS * LEVELS;

/// Unperturbed pair state `|1,1⟩⟨1,1|`.
pub fn uncoupled_pair_state<T: Real>() -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(PAIR);
    m[(4, 4)] = c(1.0, 0.0);
    m
}

/// First-order correction `ρ₁` with `L₀ρ₁ = −V_AB L₁ρ₀` and `Tr ρ₁ = 0`.
///
/// Solved as the bordered system `[[L₀, vec ρ₀], [Trᵀ, 0]]`, which is
/// nonsingular exactly when the kernel of `L₀` is one-dimensional.
pub fn first_order_correction<T: Real>(p: &ModelParams<T>) -> Result<ComplexMatrix<T>> {
    p.validate()?;
    let (l0, l1) = two_oscillator_split(p)?;
    let kernel = kernel_dimension(&l0)?;
    if kernel != 1 {
        return Err(Error::DegenerateSteadyState(kernel));
    }
    let rho0 = uncoupled_pair_state::<T>();
    let n = PAIR * PAIR;
    let r0 = vectorize(&rho0);
    let mut bordered = ComplexMatrix::zeros(n + 1);
    for i in 0..n {
        for j in 0..n {
            bordered[(i, j)] = l0.matrix()[(i, j)];
        }
        bordered[(i, n)] = r0[i];
    }
    for k in 0..PAIR {
        bordered[(n, k + PAIR * k)] = c(1.0, 0.0);
    }
    let source = l1.apply(&rho0)?;
    let mut rhs: Vec<Cplx<T>> = vectorize(&source).into_iter().map(|z| -z * p.v_ab).collect();
    rhs.push(c(0.0, 0.0));
    let x = Lu::new(&bordered)?.solve(&rhs)?;
    crate::quantum::devectorize(&x[..n])
}

/// `ρ₀ + ρ₁`, Hermitized and normalized to unit trace.
///
/// A first-order state is positive only up to `O(V_AB²)`, so positivity is not enforced.
pub fn perturbative_two_oscillator_steady_state<T: Real>(p: &ModelParams<T>) -> Result<DensityMatrix<T>> {
    let rho = &uncoupled_pair_state::<T>() + &first_order_correction(p)?;
    let h = rho.hermitian_part();
    let tr = h.trace().re;
    Ok(DensityMatrix::new_unchecked(h.scale_real(T::one() / tr)))
}

/// Quadrature sizes for the relative-phase distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelativePhaseGrid {
    pub theta_a: usize,
    pub theta_b: usize,
    pub phi_b: usize,
    /// Output points in `φ_AB`.
    pub phi_ab: usize,
}

impl Default for RelativePhaseGrid {
    fn default() -> Self {
        Self { theta_a: 48, theta_b: 48, phi_b: 96, phi_ab: 128 }
    }
}

/// `∫ sinθ conj(u_a(θ)) u_c(θ) dθ` for the rotated top state `u(θ)`.
fn polar_moments<T: Real>(n: usize) -> Result<[[Cplx<T>; 3]; 3]> {
    let rule = gauss_legendre(n, T::zero(), T::PI())?;
    let mut out = [[Cplx::new(T::zero(), T::zero()); 3]; 3];
    for (&theta, &w) in rule.nodes.iter().zip(&rule.weights) {
        let u = rotated_top(theta);
        let ws = w * theta.sin();
        for a in 0..3 {
            for cc in 0..3 {
                out[a][cc] += u[a].conj() * u[cc] * ws;
            }
        }
    }
    Ok(out)
}

/// Distribution of the relative phase `φ_AB = φ_A − φ_B` of a two-oscillator state.
///
/// `Q(θ_A, θ_B, φ_AB + φ_B, φ_B) sinθ_A sinθ_B` is integrated over the polar angles
/// (Gauss–Legendre) and `φ_B` (trapezoid). The azimuthal dependence of `Q` is a
/// trigonometric polynomial in `m_a − m_c`, so the polar integrals are collected
/// per harmonic first. The result is normalized on the `φ_AB` grid before `1/2π` is
/// subtracted; the raw integral is kept in `normalization`.
pub fn relative_phase_distribution<T: Real>(
    rho: &DensityMatrix<T>,
    grid: RelativePhaseGrid,
) -> Result<PhaseDistribution<T>> {
    if rho.dim() != PAIR {
        return Err(Error::DimensionMismatch { expected: PAIR, found: rho.dim() });
    }
    if grid.theta_a == 0 || grid.theta_b == 0 || grid.phi_b == 0 || grid.phi_ab < 2 {
        return Err(Error::InvalidParameter("empty relative-phase grid".into()));
    }
    let ia = polar_moments::<T>(grid.theta_a)?;
    let ib = polar_moments::<T>(grid.theta_b)?;
    let m = rho.matrix();
    let zero = Cplx::new(T::zero(), T::zero());
    // harmonics[Δa + 2][Δb + 2]
    let mut harmonics = [[zero; 5]; 5];
    for a in 0..3 {
        for b in 0..3 {
            for cc in 0..3 {
                for d in 0..3 {
                    let da = (MAGNETIC[a] - MAGNETIC[cc] + 2) as usize;
                    let db = (MAGNETIC[b] - MAGNETIC[d] + 2) as usize;
                    harmonics[da][db] += m[(3 * a + b, 3 * cc + d)] * ia[a][cc] * ib[b][d];
                }
            }
        }
    }
    // φ_B integral of exp(iφ_B(Δa + Δb)) by the trapezoid rule
    let phi_b = periodic_trapezoid::<T>(grid.phi_b)?;
    let mut azimuth = [zero; 9];
    for (s, slot) in azimuth.iter_mut().enumerate() {
        let order = T::lit(s as f64 - 4.0);
        for (&x, &w) in phi_b.nodes.iter().zip(&phi_b.weights) {
            *slot += Cplx::from_polar(w, order * x);
        }
    }
    let pref = T::lit(9.0) / (T::lit(16.0) * T::PI() * T::PI());
    let phis = phase_grid::<T>(grid.phi_ab);
    let raw: Vec<T> = phis
        .iter()
        .map(|&phi| {
            let mut acc = zero;
            for da in 0..5 {
                let rot = Cplx::from_polar(T::one(), T::lit(da as f64 - 2.0) * phi);
                for db in 0..5 {
                    acc += harmonics[da][db] * azimuth[da + db] * rot;
                }
            }
            pref * acc.re
        })
        .collect();
    let h = T::TAU() / T::lit(grid.phi_ab as f64);
    let total = raw.iter().fold(T::zero(), |acc, &v| acc + v * h);
    if !(total.abs() > T::epsilon()) {
        return Err(Error::InvalidParameter("relative-phase distribution has zero mass".into()));
    }
    let bg = T::one() / T::TAU();
    Ok(PhaseDistribution { phis, values: raw.iter().map(|&v| v / total - bg).collect(), normalization: total })
}

/// `true` if `phi` is closer to 0 than to π on the circle.
pub fn closer_to_zero<T: Real>(phi: T) -> bool {
    let w = wrap_angle(phi);
    let to_zero = w.min(T::TAU() - w);
    let to_pi = (w - T::PI()).abs();
    to_zero < to_pi
}

/// Classification of one `(δ, K)` point of the two-oscillator map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockadeCell<T> {
    pub max: T,
    pub argmax: T,
    pub sync: bool,
}

/// Relative-phase peak of the first-order steady state at `p`, classified with `threshold`.
pub fn blockade_cell<T: Real>(p: &ModelParams<T>, grid: RelativePhaseGrid, threshold: T) -> Result<BlockadeCell<T>> {
    let rho = perturbative_two_oscillator_steady_state(p)?;
    let dist = relative_phase_distribution(&rho, grid)?;
    let (argmax, max) = dist.peak();
    Ok(BlockadeCell { max, argmax, sync: max > threshold && closer_to_zero(argmax) })
}

/// [`blockade_cell`] over a list of parameter points, in parallel and in input order.
pub fn sync_bitmap<T: Real>(
    points: &[ModelParams<T>],
    grid: RelativePhaseGrid,
    threshold: T,
) -> Vec<Result<BlockadeCell<T>>> {
    points.par_iter().map(|p| blockade_cell(p, grid, threshold)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::ket_bra;

    #[test]
    fn coherent_state_poles() {
        let north = spin_coherent(0.0f64, 0.7);
        assert!((north[2].norm() - 1.0).abs() < 1e-14);
        assert!((north[2] - Cplx::from_polar(1.0, -0.7)).norm() < 1e-13);
        let south = spin_coherent(std::f64::consts::PI, 0.3);
        assert!((south[0].norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn husimi_at_north_pole() {
        let top = DensityMatrix::<f64>::pure_level(3, 2);
        assert!((husimi_q(&top, 0.0, 1.0) - 3.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-14);
        let mid = DensityMatrix::<f64>::pure_level(3, 1);
        assert!(husimi_q(&mid, 0.0, 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_states_have_flat_phase() {
        let diag = &(&ket_bra::<f64>(0, 0).scale_real(0.2) + &ket_bra::<f64>(1, 1).scale_real(0.5))
            + &ket_bra::<f64>(2, 2).scale_real(0.3);
        let rho = DensityMatrix::new(diag).unwrap();
        let s = phase_distribution(&rho, PhaseGrid::default()).unwrap();
        assert!(s.values.iter().all(|v| v.abs() < 1e-12));
        assert!((s.normalization - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_minimums_enforced() {
        let rho = DensityMatrix::<f64>::pure_level(3, 1);
        assert!(phase_distribution(&rho, PhaseGrid { theta_nodes: 8, phi_points: 128 }).is_err());
    }

    #[test]
    fn closer_to_zero_wraps() {
        assert!(closer_to_zero(0.1f64));
        assert!(closer_to_zero(-0.1f64));
        assert!(closer_to_zero(6.2f64));
        assert!(!closer_to_zero(3.0f64));
        assert!(!closer_to_zero(-2.0f64));
    }

    #[test]
    fn product_of_levels_has_flat_relative_phase() {
        let rho = DensityMatrix::new_unchecked(uncoupled_pair_state::<f64>());
        let s = relative_phase_distribution(&rho, RelativePhaseGrid::default()).unwrap();
        assert!(s.values.iter().all(|v| v.abs() < 1e-12));
        assert!((s.normalization - 1.0).abs() < 1e-10);
    }
}
