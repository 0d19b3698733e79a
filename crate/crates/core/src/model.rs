//! Physical model: parameters, group Hamiltonians, the mean-field equations
//! of motion and the microscopic driven / two-oscillator Liouvillians.
//!
//! All rates and frequencies are in units of the loss rate `γ₋`.

use crate::dynamics::MeanFieldState;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::quantum::{dissipator, ket_bra, liouvillian, spin1_operators, tensor, Superoperator, LEVELS};
use crate::scalar::{c, Cplx, Real};

/// Rates and couplings of the oscillator network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T> {
    /// Detuning `δ` between the groups.
    pub delta: T,
    /// Level asymmetry `K` (energy of `|2⟩` relative to the symmetric ladder).
    pub k: T,
    /// Intra-group coupling `V`.
    pub v: T,
    /// Inter-group coupling `V_AB`.
    pub v_ab: T,
    /// Gain rate `γ₊` into `|1⟩` from `|0⟩`.
    pub gamma_plus: T,
    /// Loss rate `γ₋` into `|1⟩` from `|2⟩`.
    pub gamma_minus: T,
    /// External drive strength `Ω` (driven single-oscillator model only).
    pub omega: T,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self {
            delta: T::zero(),
            k: T::zero(),
            v: T::zero(),
            v_ab: T::zero(),
            gamma_plus: T::zero(),
            gamma_minus: T::one(),
            omega: T::zero(),
        }
    }
}

impl<T: Real> ModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [self.delta, self.k, self.v, self.v_ab, self.gamma_plus, self.gamma_minus, self.omega];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite model parameter".into()));
        }
        if self.gamma_plus < T::zero() {
            return Err(Error::InvalidParameter("gamma_plus must be non-negative".into()));
        }
        if self.gamma_minus <= T::zero() {
            return Err(Error::InvalidParameter("gamma_minus must be positive".into()));
        }
        Ok(())
    }

    /// `γ₋ + γ₊`, the natural unit for couplings and asymmetry in the single-group analysis.
    pub fn total_rate(&self) -> T {
        self.gamma_minus + self.gamma_plus
    }

    /// Every parameter multiplied by `s` (the model has a single free scale).
    pub fn rescaled(&self, s: T) -> Self {
        Self {
            delta: self.delta * s,
            k: self.k * s,
            v: self.v * s,
            v_ab: self.v_ab * s,
            gamma_plus: self.gamma_plus * s,
            gamma_minus: self.gamma_minus * s,
            omega: self.omega * s,
        }
    }
}

/// Oscillator group; group A carries `+δ/2`, group B `−δ/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Group {
    A,
    B,
}

impl Group {
    pub fn detuning_sign<T: Real>(self) -> T {
        match self {
            Group::A => T::one(),
            Group::B => -T::one(),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Group::A => Group::B,
            Group::B => Group::A,
        }
    }
}

/// `±(δ/2)S^z + K|2⟩⟨2|`.
pub fn local_hamiltonian<T: Real>(p: &ModelParams<T>, g: Group) -> ComplexMatrix<T> {
    let s = spin1_operators::<T>();
    let half_delta = p.delta * T::lit(0.5) * g.detuning_sign::<T>();
    &s.sz.scale_real(half_delta) + &ket_bra::<T>(2, 2).scale_real(p.k)
}

/// Gain `γ₊ D[|1⟩⟨0|]` and loss `γ₋ D[|1⟩⟨2|]`.
pub fn local_jumps<T: Real>(p: &ModelParams<T>) -> Vec<(T, ComplexMatrix<T>)> {
    vec![(p.gamma_plus, ket_bra(1, 0)), (p.gamma_minus, ket_bra(1, 2))]
}

/// Mean-field Hamiltonian of group `g`:
/// `±(δ/2)S^z + K|2⟩⟨2| + V(S⁺m_own + h.c.) + V_AB(S⁺m_other + h.c.)`,
/// where `m_own`, `m_other` are the `⟨S⁻⟩` of the own and the other group.
pub fn group_hamiltonian<T: Real>(
    p: &ModelParams<T>,
    g: Group,
    m_own: Cplx<T>,
    m_other: Cplx<T>,
) -> ComplexMatrix<T> {
    coupled_hamiltonian(p, g, m_own, m_own.conj(), m_other, m_other.conj())
}

/// Same as [`group_hamiltonian`] with `⟨S⁺⟩` supplied independently of `⟨S⁻⟩`.
/// For Hermitian states the two coincide; keeping them separate makes the
/// right-hand side complex-analytic in the matrix entries.
pub(crate) fn coupled_hamiltonian<T: Real>(
    p: &ModelParams<T>,
    g: Group,
    own_minus: Cplx<T>,
    own_plus: Cplx<T>,
    other_minus: Cplx<T>,
    other_plus: Cplx<T>,
) -> ComplexMatrix<T> {
    let s = spin1_operators::<T>();
    let a = own_minus * p.v + other_minus * p.v_ab;
    let b = own_plus * p.v + other_plus * p.v_ab;
    let mut h = local_hamiltonian(p, g);
    h += &s.splus.scale(a);
    h += &s.sminus.scale(b);
    h
}

/// Right-hand side of the uncoupled single-oscillator master equation with Hamiltonian `h`.
pub(crate) fn lindblad_rhs<T: Real>(
    p: &ModelParams<T>,
    h: &ComplexMatrix<T>,
    rho: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>> {
    let mut out = h.commutator(rho)?.scale(c(0.0, -1.0));
    for (rate, o) in local_jumps(p) {
        out += &dissipator(&o, rho)?.scale_real(rate);
    }
    Ok(out)
}

/// `(dρ_A/dt, dρ_B/dt)` of the coupled nonlinear mean-field master equations.
pub fn meanfield_rhs<T: Real>(
    p: &ModelParams<T>,
    s: &MeanFieldState<T>,
) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
    meanfield_rhs_matrices(p, s.rho_a.matrix(), s.rho_b.matrix())
        .expect("mean-field states are 3×3 by construction")
}

/// [`meanfield_rhs`] on arbitrary (not necessarily Hermitian) 3×3 matrices,
/// with `⟨S^±⟩_σ = Tr(ρ_σ S^±)` evaluated independently.
pub fn meanfield_rhs_matrices<T: Real>(
    p: &ModelParams<T>,
    rho_a: &ComplexMatrix<T>,
    rho_b: &ComplexMatrix<T>,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    for rho in [rho_a, rho_b] {
        if rho.dim() != LEVELS {
            return Err(Error::DimensionMismatch { expected: LEVELS, found: rho.dim() });
        }
    }
    let s = spin1_operators::<T>();
    let am = rho_a.trace_product(&s.sminus)?;
    let ap = rho_a.trace_product(&s.splus)?;
    let bm = rho_b.trace_product(&s.sminus)?;
    let bp = rho_b.trace_product(&s.splus)?;
    let ha = coupled_hamiltonian(p, Group::A, am, ap, bm, bp);
    let hb = coupled_hamiltonian(p, Group::B, bm, bp, am, ap);
    Ok((lindblad_rhs(p, &ha, rho_a)?, lindblad_rhs(p, &hb, rho_b)?))
}

/// Liouvillian of one uncoupled oscillator of group `g`.
pub fn single_site_liouvillian<T: Real>(p: &ModelParams<T>, g: Group) -> Result<Superoperator<T>> {
    liouvillian(&local_hamiltonian(p, g), &local_jumps(p))
}

/// Liouvillian of one oscillator driven resonantly with strength `Ω`:
/// `H = K|2⟩⟨2| + Ω(S⁺ + S⁻)` plus gain and loss.
pub fn driven_liouvillian<T: Real>(p: &ModelParams<T>) -> Result<Superoperator<T>> {
    let s = spin1_operators::<T>();
    let h = &ket_bra::<T>(2, 2).scale_real(p.k) + &(&s.splus + &s.sminus).scale_real(p.omega);
    liouvillian(&h, &local_jumps(p))
}

fn embed_a<T: Real>(o: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    tensor(o, &ComplexMatrix::identity(LEVELS))
}

fn embed_b<T: Real>(o: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    tensor(&ComplexMatrix::identity(LEVELS), o)
}

/// `S⁺_A S⁻_B + S⁺_B S⁻_A` on the 9-dimensional pair space (A is the first factor).
pub fn exchange_operator<T: Real>() -> ComplexMatrix<T> {
    let s = spin1_operators::<T>();
    &tensor(&s.splus, &s.sminus) + &tensor(&s.sminus, &s.splus)
}

/// Hamiltonian of two coupled detuned oscillators.
pub fn two_oscillator_hamiltonian<T: Real>(p: &ModelParams<T>) -> ComplexMatrix<T> {
    let mut h = embed_a(&local_hamiltonian(p, Group::A));
    h += &embed_b(&local_hamiltonian(p, Group::B));
    h += &exchange_operator::<T>().scale_real(p.v_ab);
    h
}

fn two_oscillator_jumps<T: Real>(p: &ModelParams<T>) -> Vec<(T, ComplexMatrix<T>)> {
    local_jumps(p)
        .into_iter()
        .flat_map(|(rate, o)| [(rate, embed_a(&o)), (rate, embed_b(&o))])
        .collect()
}

/// 81×81 Liouvillian of two oscillators coupled with strength `V_AB`.
pub fn two_oscillator_liouvillian<T: Real>(p: &ModelParams<T>) -> Result<Superoperator<T>> {
    liouvillian(&two_oscillator_hamiltonian(p), &two_oscillator_jumps(p))
}

/// Coupling part `−i[S⁺_A S⁻_B + h.c., ·]` of the pair Liouvillian at unit strength.
pub fn two_oscillator_coupling_liouvillian<T: Real>() -> Result<Superoperator<T>> {
    liouvillian(&exchange_operator::<T>(), &[])
}

/// Full pair Liouvillian as an explicit sum: uncoupled part plus `V_AB` times the coupling part.
pub fn two_oscillator_split<T: Real>(
    p: &ModelParams<T>,
) -> Result<(Superoperator<T>, Superoperator<T>)> {
    let uncoupled = ModelParams { v_ab: T::zero(), ..*p };
    Ok((two_oscillator_liouvillian(&uncoupled)?, two_oscillator_coupling_liouvillian()?))
}

/// `⟨S⁺⟩ = Tr(ρ S⁺)` read off the matrix entries.
pub(crate) fn amplitude<T: Real>(rho: &ComplexMatrix<T>) -> Cplx<T> {
    let s2 = T::lit(2.0).sqrt();
    (rho[(1, 2)] + rho[(0, 1)]) * s2
}
