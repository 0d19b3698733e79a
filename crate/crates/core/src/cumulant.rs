//! Second-order cumulant equations for a single group of `N` identical oscillators.
//!
//! Moments are taken of the projectors `σ_ab = |a⟩⟨b|` (label `3a + b`). The
//! population `σ_11` is eliminated through `σ_00 + σ_11 + σ_22 = 1`, leaving 8
//! first moments and 36 distinct-site pair moments (unordered label pairs).
//! Equations are generated from operator products at construction time.

use std::collections::BTreeMap;

use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::model::{local_hamiltonian, local_jumps, Group, ModelParams};
use crate::ode::{integrate_sampled, Dopri5Config, OdeSystem};
use crate::quantum::{ket_bra, spin1_operators, DensityMatrix, LEVELS};
use crate::scalar::{c, Cplx, Real};

const LABELS: usize = LEVELS * LEVELS;
/// Label of the eliminated population `σ_11`.
const ELIMINATED: usize = 4;
/// Labels carried in the state, in storage order.
pub const INDEPENDENT: [usize; 8] = [0, 1, 2, 3, 5, 6, 7, 8];
const N_FIRST: usize = INDEPENDENT.len();
const N_PAIRS: usize = N_FIRST * (N_FIRST + 1) / 2;

/// Number of oscillators in the group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupSize {
    Finite(usize),
    Infinite,
}

/// How the pair moments enter the first-moment equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// Pair moments evolve under their own equations; three-site moments are factorized
    /// by dropping the third cumulant.
    SecondOrder,
    /// Pair moments are replaced by products of first moments at every step.
    Factorized,
}

#[cfg(test)]
fn independent_slot(label: usize) -> Option<usize> {
    INDEPENDENT.iter().position(|&l| l == label)
}

fn pair_slot(i: usize, j: usize) -> usize {
    // i ≤ j are storage indices into INDEPENDENT
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * N_FIRST - i * (i + 1) / 2 + j
}

/// First moments `⟨σ_α⟩` (independent labels) and pair moments `⟨σ_α ⊗ σ_β⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentState<T> {
    pub first: [Cplx<T>; N_FIRST],
    pub second: [Cplx<T>; N_PAIRS],
}

impl<T: Real> MomentState<T> {
    /// Uncorrelated product state `ρ^⊗N`.
    pub fn product(rho: &DensityMatrix<T>) -> Result<Self> {
        if rho.dim() != LEVELS {
            return Err(Error::DimensionMismatch { expected: LEVELS, found: rho.dim() });
        }
        let m = rho.matrix();
        let mut first = [Cplx::new(T::zero(), T::zero()); N_FIRST];
        for (slot, &label) in INDEPENDENT.iter().enumerate() {
            // ⟨|a⟩⟨b|⟩ = ρ_ba
            first[slot] = m[(label % LEVELS, label / LEVELS)];
        }
        let mut second = [Cplx::new(T::zero(), T::zero()); N_PAIRS];
        for i in 0..N_FIRST {
            for j in i..N_FIRST {
                second[pair_slot(i, j)] = first[i] * first[j];
            }
        }
        Ok(Self { first, second })
    }

    /// All nine first moments, including the eliminated population.
    pub fn first_full(&self) -> [Cplx<T>; LABELS] {
        let mut out = [Cplx::new(T::zero(), T::zero()); LABELS];
        for (slot, &label) in INDEPENDENT.iter().enumerate() {
            out[label] = self.first[slot];
        }
        out[ELIMINATED] = Cplx::new(T::one(), T::zero()) - out[0] - out[8];
        out
    }

    /// All 81 pair moments, expanding the eliminated label.
    pub fn second_full(&self) -> [[Cplx<T>; LABELS]; LABELS] {
        let m1 = self.first_full();
        let mut out = [[Cplx::new(T::zero(), T::zero()); LABELS]; LABELS];
        for (i, &a) in INDEPENDENT.iter().enumerate() {
            for (j, &b) in INDEPENDENT.iter().enumerate() {
                out[a][b] = self.second[pair_slot(i, j)];
            }
        }
        for &b in INDEPENDENT.iter() {
            let v = m1[b] - out[0][b] - out[8][b];
            out[ELIMINATED][b] = v;
            out[b][ELIMINATED] = v;
        }
        out[ELIMINATED][ELIMINATED] = m1[ELIMINATED] - out[0][ELIMINATED] - out[8][ELIMINATED];
        out
    }

    /// `⟨O⟩ = Σ O_ab ⟨σ_ab⟩` for a single-site operator.
    pub fn expectation(&self, o: &ComplexMatrix<T>) -> Cplx<T> {
        let m1 = self.first_full();
        (0..LABELS).fold(Cplx::new(T::zero(), T::zero()), |acc, l| acc + o[(l / LEVELS, l % LEVELS)] * m1[l])
    }

    /// `⟨S⁺⟩ = √2(⟨σ_21⟩ + ⟨σ_10⟩)`.
    pub fn amplitude(&self) -> Cplx<T> {
        self.expectation(&spin1_operators::<T>().splus)
    }

    fn to_flat(&self, out: &mut Vec<T>) {
        out.clear();
        for z in self.first.iter().chain(self.second.iter()) {
            out.push(z.re);
            out.push(z.im);
        }
    }

    fn from_flat(y: &[T]) -> Self {
        let z = |k: usize| Cplx::new(y[2 * k], y[2 * k + 1]);
        let mut first = [Cplx::new(T::zero(), T::zero()); N_FIRST];
        let mut second = [Cplx::new(T::zero(), T::zero()); N_PAIRS];
        for (k, f) in first.iter_mut().enumerate() {
            *f = z(k);
        }
        for (k, s) in second.iter_mut().enumerate() {
            *s = z(N_FIRST + k);
        }
        Self { first, second }
    }
}

type Terms1<T> = Vec<(usize, Cplx<T>)>;
type Terms2<T> = Vec<(usize, usize, Cplx<T>)>;
type Terms3<T> = Vec<(usize, usize, usize, Cplx<T>)>;

#[derive(Clone, Debug)]
struct FirstEquation<T> {
    linear: Terms1<T>,
    pair: Terms2<T>,
}

#[derive(Clone, Debug)]
struct PairEquation<T> {
    pair: Terms2<T>,
    triple: Terms3<T>,
}

/// Generated moment equations for one parameter set and group size.
#[derive(Clone, Debug)]
pub struct CumulantSystem<T> {
    pub params: ModelParams<T>,
    pub size: GroupSize,
    first: Vec<FirstEquation<T>>,
    pairs: Vec<PairEquation<T>>,
}

fn expand<T: Real>(o: &ComplexMatrix<T>) -> Vec<(usize, Cplx<T>)> {
    (0..LABELS)
        .map(|l| (l, o[(l / LEVELS, l % LEVELS)]))
        .filter(|(_, z)| z.norm() > T::zero())
        .collect()
}

/// Heisenberg-picture single-site generator `i[h, X] + Σ γ (o†Xo − ½{o†o, X})`.
fn adjoint_local<T: Real>(p: &ModelParams<T>, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let h = local_hamiltonian(p, Group::A);
    let mut out = (&(&h * x) - &(x * &h)).scale(c(0.0, 1.0));
    for (rate, o) in local_jumps(p) {
        let od = o.adjoint();
        let odo = &od * &o;
        let sandwich = &(&od * x) * &o;
        let anti = &(&odo * x) + &(x * &odo);
        out += &(&sandwich - &anti.scale_real(T::lit(0.5))).scale_real(rate);
    }
    out
}

#[derive(Default)]
struct Collector<T> {
    one: BTreeMap<usize, Cplx<T>>,
    two: BTreeMap<(usize, usize), Cplx<T>>,
    three: BTreeMap<(usize, usize, usize), Cplx<T>>,
}

impl<T: Real> Collector<T> {
    fn add1(&mut self, coeff: Cplx<T>, a: &ComplexMatrix<T>) {
        for (l, z) in expand(a) {
            *self.one.entry(l).or_insert(Cplx::new(T::zero(), T::zero())) += coeff * z;
        }
    }

    fn add2(&mut self, coeff: Cplx<T>, a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) {
        let eb = expand(b);
        for (la, za) in expand(a) {
            for &(lb, zb) in &eb {
                let key = (la.min(lb), la.max(lb));
                *self.two.entry(key).or_insert(Cplx::new(T::zero(), T::zero())) += coeff * za * zb;
            }
        }
    }

    fn add3(&mut self, coeff: Cplx<T>, a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, d: &ComplexMatrix<T>) {
        let eb = expand(b);
        let ed = expand(d);
        for (la, za) in expand(a) {
            for &(lb, zb) in &eb {
                for &(ld, zd) in &ed {
                    let mut k = [la, lb, ld];
                    k.sort_unstable();
                    *self.three.entry((k[0], k[1], k[2])).or_insert(Cplx::new(T::zero(), T::zero())) +=
                        coeff * za * zb * zd;
                }
            }
        }
    }

    fn drop_zeros<K>(map: BTreeMap<K, Cplx<T>>) -> Vec<(K, Cplx<T>)> {
        let tiny = T::epsilon() * T::lit(64.0);
        map.into_iter().filter(|(_, z)| z.norm() > tiny).collect()
    }
}

/// Builds the moment equations for a single group (`V_AB` must vanish).
pub fn derive_equations<T: Real>(p: &ModelParams<T>, size: GroupSize) -> Result<CumulantSystem<T>> {
    p.validate()?;
    if p.v_ab != T::zero() {
        return Err(Error::InvalidParameter("cumulant equations describe a single group (V_AB = 0)".into()));
    }
    // coupling prefactors: mean field V(N−1)/N, same pair V/N, third site V(N−2)/N
    let (c_mean, c_direct, c_third) = match size {
        GroupSize::Finite(n) if n < 2 => {
            return Err(Error::InvalidParameter("group size must be at least 2".into()));
        }
        GroupSize::Finite(n) => {
            let nf = T::lit(n as f64);
            (p.v * (nf - T::one()) / nf, p.v / nf, p.v * (nf - T::lit(2.0)) / nf)
        }
        GroupSize::Infinite => (p.v, T::zero(), p.v),
    };
    let s = spin1_operators::<T>();
    let (sp, sm) = (&s.splus, &s.sminus);
    let comm = |a: &ComplexMatrix<T>, b: &ComplexMatrix<T>| &(a * b) - &(b * a);
    let i = c::<T>(0.0, 1.0);

    let mut first = Vec::with_capacity(N_FIRST);
    for &label in INDEPENDENT.iter() {
        let x = ket_bra::<T>(label / LEVELS, label % LEVELS);
        let mut col = Collector::default();
        col.add1(c(1.0, 0.0), &adjoint_local(p, &x));
        if c_mean != T::zero() {
            col.add2(i * c_mean, &comm(sp, &x), sm);
            col.add2(i * c_mean, &comm(sm, &x), sp);
        }
        first.push(FirstEquation {
            linear: Collector::drop_zeros(col.one),
            pair: Collector::drop_zeros(col.two).into_iter().map(|((a, b), z)| (a, b, z)).collect(),
        });
    }

    let mut pairs = vec![PairEquation { pair: Vec::new(), triple: Vec::new() }; N_PAIRS];
    for (ia, &la) in INDEPENDENT.iter().enumerate() {
        for (ib, &lb) in INDEPENDENT.iter().enumerate().skip(ia) {
            let x = ket_bra::<T>(la / LEVELS, la % LEVELS);
            let y = ket_bra::<T>(lb / LEVELS, lb % LEVELS);
            let mut col = Collector::default();
            let one = c::<T>(1.0, 0.0);
            col.add2(one, &adjoint_local(p, &x), &y);
            col.add2(one, &x, &adjoint_local(p, &y));
            if c_direct != T::zero() {
                let k = i * c_direct;
                col.add2(k, &(sp * &x), &(sm * &y));
                col.add2(-k, &(&x * sp), &(&y * sm));
                col.add2(k, &(sm * &x), &(sp * &y));
                col.add2(-k, &(&x * sm), &(&y * sp));
            }
            if c_third != T::zero() {
                let k = i * c_third;
                col.add3(k, &comm(sp, &x), &y, sm);
                col.add3(k, &comm(sm, &x), &y, sp);
                col.add3(k, &x, &comm(sp, &y), sm);
                col.add3(k, &x, &comm(sm, &y), sp);
            }
            pairs[pair_slot(ia, ib)] = PairEquation {
                pair: Collector::drop_zeros(col.two).into_iter().map(|((a, b), z)| (a, b, z)).collect(),
                triple: Collector::drop_zeros(col.three).into_iter().map(|((a, b, d), z)| (a, b, d, z)).collect(),
            };
        }
    }
    Ok(CumulantSystem { params: *p, size, first, pairs })
}

impl<T: Real> CumulantSystem<T> {
    /// Number of closed three-site terms across all pair equations.
    pub fn third_order_terms(&self) -> usize {
        self.pairs.iter().map(|e| e.triple.len()).sum()
    }

    /// Number of pair-moment terms in the first-moment equations.
    pub fn first_moment_pair_terms(&self) -> usize {
        self.first.iter().map(|e| e.pair.len()).sum()
    }

    fn first_rates(&self, m1: &[Cplx<T>; LABELS], m2: &[[Cplx<T>; LABELS]; LABELS]) -> [Cplx<T>; N_FIRST] {
        let mut out = [Cplx::new(T::zero(), T::zero()); N_FIRST];
        for (slot, eq) in self.first.iter().enumerate() {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for &(l, z) in &eq.linear {
                acc += z * m1[l];
            }
            for &(a, b, z) in &eq.pair {
                acc += z * m2[a][b];
            }
            out[slot] = acc;
        }
        out
    }

    /// Time derivative of all moments under the chosen closure.
    pub fn rhs(&self, state: &MomentState<T>, closure: Closure) -> MomentState<T> {
        let m1 = state.first_full();
        let m2 = match closure {
            Closure::SecondOrder => state.second_full(),
            Closure::Factorized => {
                let mut m2 = [[Cplx::new(T::zero(), T::zero()); LABELS]; LABELS];
                for a in 0..LABELS {
                    for b in 0..LABELS {
                        m2[a][b] = m1[a] * m1[b];
                    }
                }
                m2
            }
        };
        let first = self.first_rates(&m1, &m2);
        let mut second = [Cplx::new(T::zero(), T::zero()); N_PAIRS];
        if closure == Closure::SecondOrder {
            let two = T::lit(2.0);
            for (slot, eq) in self.pairs.iter().enumerate() {
                let mut acc = Cplx::new(T::zero(), T::zero());
                for &(a, b, z) in &eq.pair {
                    acc += z * m2[a][b];
                }
                for &(a, b, d, z) in &eq.triple {
                    let closed = m2[a][b] * m1[d] + m2[a][d] * m1[b] + m2[b][d] * m1[a] - m1[a] * m1[b] * m1[d] * two;
                    acc += z * closed;
                }
                second[slot] = acc;
            }
        }
        MomentState { first, second }
    }
}

struct CumulantOde<'a, T> {
    sys: &'a CumulantSystem<T>,
    closure: Closure,
}

impl<T: Real> OdeSystem<T> for CumulantOde<'_, T> {
    fn dim(&self) -> usize {
        2 * (N_FIRST + N_PAIRS)
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        let d = self.sys.rhs(&MomentState::from_flat(y), self.closure);
        for (k, z) in d.first.iter().chain(d.second.iter()).enumerate() {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        }
    }
}

/// Sampled `⟨S⁺⟩(t)` of a cumulant integration.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantTrajectory<T> {
    pub times: Vec<T>,
    pub amplitude: Vec<Cplx<T>>,
    /// Largest `|⟨σ_ab⟩ − conj⟨σ_ba⟩|` over samples.
    pub max_hermiticity_error: T,
    pub final_state: MomentState<T>,
}

impl<T: Real> CumulantTrajectory<T> {
    pub fn abs_amplitude(&self) -> Vec<T> {
        self.amplitude.iter().map(|z| z.norm()).collect()
    }
}

/// Integrates the moment equations from `init`.
pub fn integrate_cumulant<T: Real>(
    sys: &CumulantSystem<T>,
    init: &MomentState<T>,
    cfg: &IntegratorConfig<T>,
    closure: Closure,
) -> Result<CumulantTrajectory<T>> {
    cfg.validate()?;
    let ode = CumulantOde { sys, closure };
    let times = cfg.sample_times();
    let mut y0 = Vec::new();
    init.to_flat(&mut y0);
    let mut amplitude = Vec::with_capacity(times.len());
    let mut herm = T::zero();
    let mut last = init.clone();
    let opts = Dopri5Config { rel_tol: cfg.rel_tol, abs_tol: cfg.abs_tol, max_step: cfg.max_step, ..Dopri5Config::default() };
    integrate_sampled(&ode, &y0, T::zero(), &times, &opts, |_, _, y| {
        let st = MomentState::from_flat(y);
        let m1 = st.first_full();
        for a in 0..LEVELS {
            for b in 0..LEVELS {
                herm = herm.max((m1[3 * a + b] - m1[3 * b + a].conj()).norm());
            }
        }
        amplitude.push(st.amplitude());
        last = st;
    })?;
    Ok(CumulantTrajectory { times, amplitude, max_hermiticity_error: herm, final_state: last })
}

/// Consecutive samples that must stay below threshold in [`lifetime`].
pub const LIFETIME_CONFIRMATION: usize = 10;

/// Time at which `series` first drops below `series[0]/e` and stays there for
/// [`LIFETIME_CONFIRMATION`] samples, linearly interpolated between the
/// bracketing samples. `None` if that never happens.
pub fn lifetime<T: Real>(times: &[T], series: &[T]) -> Result<Option<T>> {
    if times.len() != series.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: series.len() });
    }
    let Some(&start) = series.first() else {
        return Err(Error::EmptyWindow);
    };
    if !(start > T::zero()) {
        return Err(Error::InvalidParameter("lifetime needs a positive initial amplitude".into()));
    }
    let threshold = start / T::E();
    let n = series.len();
    let mut k = 1;
    while k + LIFETIME_CONFIRMATION <= n {
        if series[k] < threshold {
            if let Some(off) = series[k..k + LIFETIME_CONFIRMATION].iter().position(|&x| x >= threshold) {
                k += off + 1;
                continue;
            }
            let (t0, t1, s0, s1) = (times[k - 1], times[k], series[k - 1], series[k]);
            return Ok(Some(t0 + (s0 - threshold) / (s0 - s1) * (t1 - t0)));
        }
        k += 1;
    }
    Ok(None)
}
