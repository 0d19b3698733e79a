//! Time integration of the coupled mean-field equations and trajectory analysis.

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::model::{amplitude, Group, ModelParams};
use crate::ode::{integrate_sampled, Dopri5Config, OdeStats, OdeSystem};
use crate::quantum::{DensityMatrix, LEVELS};
use crate::scalar::{c, Cplx, Real};

/// Pair of single-oscillator states, one per group.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldState<T> {
    pub rho_a: DensityMatrix<T>,
    pub rho_b: DensityMatrix<T>,
}

impl<T: Real> MeanFieldState<T> {
    pub fn new(rho_a: DensityMatrix<T>, rho_b: DensityMatrix<T>) -> Result<Self> {
        for rho in [&rho_a, &rho_b] {
            if rho.dim() != LEVELS {
                return Err(Error::DimensionMismatch { expected: LEVELS, found: rho.dim() });
            }
        }
        Ok(Self { rho_a, rho_b })
    }

    pub fn get(&self, g: Group) -> &DensityMatrix<T> {
        match g {
            Group::A => &self.rho_a,
            Group::B => &self.rho_b,
        }
    }

    /// The unsynchronized fixed point `|1⟩⟨1| ⊗ |1⟩⟨1|`.
    pub fn fixed_point() -> Self {
        Self { rho_a: DensityMatrix::pure_level(LEVELS, 1), rho_b: DensityMatrix::pure_level(LEVELS, 1) }
    }
}

/// Preset single-oscillator initial states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitialKind {
    /// `I/3 + (|1⟩⟨2| + |2⟩⟨1|)/10`.
    Perturbed,
    /// `I/3`.
    Uniform,
    /// `I/3 + |1⟩⟨2|(1+2i)/10 + h.c.`, used for the single-group time series.
    PerturbedComplex,
}

pub fn default_initial<T: Real>(kind: InitialKind) -> DensityMatrix<T> {
    let coherence = match kind {
        InitialKind::Uniform => None,
        InitialKind::Perturbed => Some(c(0.1, 0.0)),
        InitialKind::PerturbedComplex => Some(c(0.1, 0.2)),
    };
    let third = T::one() / T::lit(3.0);
    let mut m = ComplexMatrix::<T>::identity(LEVELS).scale_real(third);
    if let Some(z) = coherence {
        m[(1, 2)] += z;
        m[(2, 1)] += z.conj();
    }
    DensityMatrix::from_hermitized(&m).expect("preset initial states are valid")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig<T> {
    pub t_final: T,
    pub n_samples: usize,
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(t_final: T, n_samples: usize) -> Self {
        Self { t_final, n_samples, rel_tol: T::lit(1e-9), abs_tol: T::lit(1e-9), max_step: T::lit(0.1) }
    }

    pub fn validate(&self) -> Result<()> {
        let tol_ok = |x: T| x > T::zero() && x <= T::lit(1e-2);
        if !(self.t_final > T::zero() && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter("t_final must be positive and finite".into()));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter("n_samples must be at least 2".into()));
        }
        if !tol_ok(self.rel_tol) || !tol_ok(self.abs_tol) {
            return Err(Error::InvalidParameter("tolerances must lie in (0, 1e-2]".into()));
        }
        if !(self.max_step > T::zero()) {
            return Err(Error::InvalidParameter("max_step must be positive".into()));
        }
        Ok(())
    }

    /// Uniform sample times `t_k = t_final·k/(n−1)`, including `t = 0`.
    pub fn sample_times(&self) -> Vec<T> {
        let last = T::lit((self.n_samples - 1) as f64);
        (0..self.n_samples).map(|k| self.t_final * T::lit(k as f64) / last).collect()
    }

    pub fn sample_spacing(&self) -> T {
        self.t_final / T::lit((self.n_samples - 1) as f64)
    }

    fn ode_config(&self) -> Dopri5Config<T> {
        Dopri5Config {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            ..Dopri5Config::default()
        }
    }
}

/// Worst-case state diagnostics over all samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics<T> {
    pub max_trace_error: T,
    pub max_hermiticity_error: T,
    pub min_eigenvalue: T,
    pub ode: OdeStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub amps_a: Vec<Cplx<T>>,
    pub amps_b: Vec<Cplx<T>>,
    pub states: Option<Vec<MeanFieldState<T>>>,
    pub diagnostics: Diagnostics<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn amplitudes(&self, g: Group) -> &[Cplx<T>] {
        match g {
            Group::A => &self.amps_a,
            Group::B => &self.amps_b,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample_spacing(&self) -> Option<T> {
        (self.times.len() >= 2).then(|| self.times[1] - self.times[0])
    }
}

type Mat3<T> = [[Cplx<T>; 3]; 3];

/// Mean-field right-hand side specialized to stack 3×3 arrays.
/// State layout: ρ_A then ρ_B, row-major, interleaved (re, im).
struct MeanField<T> {
    p: ModelParams<T>,
    sqrt2: T,
}

#[inline]
fn load<T: Real>(y: &[T]) -> Mat3<T> {
    let mut m = [[Cplx::new(T::zero(), T::zero()); 3]; 3];
    for (idx, pair) in y.chunks_exact(2).enumerate() {
        m[idx / 3][idx % 3] = Cplx::new(pair[0], pair[1]);
    }
    m
}

#[inline]
fn store<T: Real>(m: &Mat3<T>, y: &mut [T]) {
    for (idx, pair) in y.chunks_exact_mut(2).enumerate() {
        let z = m[idx / 3][idx % 3];
        pair[0] = z.re;
        pair[1] = z.im;
    }
}

impl<T: Real> MeanField<T> {
    /// `Tr(ρS⁻)` and `Tr(ρS⁺)`, evaluated independently.
    #[inline]
    fn moments(&self, r: &Mat3<T>) -> (Cplx<T>, Cplx<T>) {
        ((r[2][1] + r[1][0]) * self.sqrt2, (r[1][2] + r[0][1]) * self.sqrt2)
    }

    #[inline]
    fn site(&self, sign: T, r: &Mat3<T>, splus_coeff: Cplx<T>, sminus_coeff: Cplx<T>) -> Mat3<T> {
        let p = &self.p;
        let zero = Cplx::new(T::zero(), T::zero());
        let half_delta = sign * p.delta * T::lit(0.5);
        let a = splus_coeff * self.sqrt2;
        let b = sminus_coeff * self.sqrt2;
        let h: Mat3<T> = [
            [Cplx::new(-half_delta, T::zero()), b, zero],
            [a, zero, b],
            [zero, a, Cplx::new(half_delta + p.k, T::zero())],
        ];
        let mut out = [[zero; 3]; 3];
        let neg_i = Cplx::new(T::zero(), -T::one());
        for i in 0..3 {
            for j in 0..3 {
                let mut comm = zero;
                for l in 0..3 {
                    comm += h[i][l] * r[l][j] - r[i][l] * h[l][j];
                }
                out[i][j] = neg_i * comm;
            }
        }
        let half = T::lit(0.5);
        let gp = p.gamma_plus;
        let gm = p.gamma_minus;
        // gain |1⟩⟨0| and loss |1⟩⟨2|: population transfer into |1⟩ and decay of rows/columns 0 and 2
        out[1][1] += r[0][0] * gp + r[2][2] * gm;
        for j in 0..3 {
            out[0][j] -= r[0][j] * (half * gp);
            out[j][0] -= r[j][0] * (half * gp);
            out[2][j] -= r[2][j] * (half * gm);
            out[j][2] -= r[j][2] * (half * gm);
        }
        out
    }
}

impl<T: Real> OdeSystem<T> for MeanField<T> {
    fn dim(&self) -> usize {
        36
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        let ra = load(&y[..18]);
        let rb = load(&y[18..]);
        let (am, ap) = self.moments(&ra);
        let (bm, bp) = self.moments(&rb);
        let (v, vab) = (self.p.v, self.p.v_ab);
        let da = self.site(T::one(), &ra, am * v + bm * vab, ap * v + bp * vab);
        let db = self.site(-T::one(), &rb, bm * v + am * vab, bp * v + ap * vab);
        store(&da, &mut dy[..18]);
        store(&db, &mut dy[18..]);
    }
}

fn flatten<T: Real>(s: &MeanFieldState<T>) -> Vec<T> {
    let mut y = Vec::with_capacity(36);
    for m in [s.rho_a.matrix(), s.rho_b.matrix()] {
        for z in m.as_slice() {
            y.push(z.re);
            y.push(z.im);
        }
    }
    y
}

fn unflatten<T: Real>(y: &[T]) -> ComplexMatrix<T> {
    let data = y.chunks_exact(2).map(|p| Cplx::new(p[0], p[1])).collect();
    ComplexMatrix::from_vec(LEVELS, data).expect("9 entries")
}

/// Right-hand side of the integrator on the flat state vector; exposed for cross-checks.
pub fn flat_rhs<T: Real>(p: &ModelParams<T>, y: &[T], dy: &mut [T]) {
    MeanField { p: *p, sqrt2: T::lit(2.0).sqrt() }.rhs(T::zero(), y, dy)
}

/// Smallest eigenvalue of a Hermitian 3×3 matrix (closed-form cubic).
fn hermitian3_min_eigenvalue<T: Real>(m: &[T]) -> T {
    let z = |i: usize, j: usize| Cplx::new(m[2 * (3 * i + j)], m[2 * (3 * i + j) + 1]);
    let (a, b, cc) = (z(0, 0).re, z(1, 1).re, z(2, 2).re);
    let (d, e, f) = (z(0, 1), z(1, 2), z(0, 2));
    let third = T::one() / T::lit(3.0);
    let q = (a + b + cc) * third;
    let off = d.norm_sqr() + e.norm_sqr() + f.norm_sqr();
    let p2 = (a - q).powi(2) + (b - q).powi(2) + (cc - q).powi(2) + T::lit(2.0) * off;
    if p2 <= T::epsilon() * T::epsilon() {
        return q;
    }
    let p = (p2 / T::lit(6.0)).sqrt();
    // det((M − qI)/p)
    let (a1, b1, c1) = ((a - q) / p, (b - q) / p, (cc - q) / p);
    let (d1, e1, f1) = (d / p, e / p, f / p);
    let det = a1 * b1 * c1 - a1 * e1.norm_sqr() - b1 * f1.norm_sqr() - c1 * d1.norm_sqr()
        + T::lit(2.0) * (d1 * e1 * f1.conj()).re;
    let r = (det * T::lit(0.5)).max(-T::one()).min(T::one());
    let phi = r.acos() * third;
    q + T::lit(2.0) * p * (phi + T::lit(2.0) * T::PI() * third).cos()
}

fn diagnose<T: Real>(y: &[T], diag: &mut Diagnostics<T>) {
    for block in [&y[..18], &y[18..]] {
        let tr = block[0] + block[8] + block[16];
        let tr_im = block[1] + block[9] + block[17];
        diag.max_trace_error = diag.max_trace_error.max((tr - T::one()).hypot(tr_im));
        for i in 0..3 {
            for j in i..3 {
                let (u, w) = (2 * (3 * i + j), 2 * (3 * j + i));
                let err = (block[u] - block[w]).hypot(block[u + 1] + block[w + 1]);
                diag.max_hermiticity_error = diag.max_hermiticity_error.max(err);
            }
        }
        diag.min_eigenvalue = diag.min_eigenvalue.min(hermitian3_min_eigenvalue(block));
    }
}

fn run<T: Real>(
    p: &ModelParams<T>,
    init: &MeanFieldState<T>,
    cfg: &IntegratorConfig<T>,
    keep_states: bool,
) -> Result<Trajectory<T>> {
    p.validate()?;
    cfg.validate()?;
    let sys = MeanField { p: *p, sqrt2: T::lit(2.0).sqrt() };
    let times = cfg.sample_times();
    let y0 = flatten(init);
    let n = times.len();
    let mut amps_a = Vec::with_capacity(n);
    let mut amps_b = Vec::with_capacity(n);
    let mut states = keep_states.then(|| Vec::with_capacity(n));
    let mut diagnostics = Diagnostics {
        max_trace_error: T::zero(),
        max_hermiticity_error: T::zero(),
        min_eigenvalue: T::infinity(),
        ode: OdeStats::default(),
    };
    let stats = integrate_sampled(&sys, &y0, T::zero(), &times, &cfg.ode_config(), |_, _, y| {
        let ra = unflatten(&y[..18]);
        let rb = unflatten(&y[18..]);
        amps_a.push(amplitude(&ra));
        amps_b.push(amplitude(&rb));
        diagnose(y, &mut diagnostics);
        if let Some(st) = states.as_mut() {
            st.push(MeanFieldState {
                rho_a: DensityMatrix::new_unchecked(ra),
                rho_b: DensityMatrix::new_unchecked(rb),
            });
        }
    })?;
    diagnostics.ode = stats;
    if diagnostics.min_eigenvalue < -T::lit(1e-6) {
        warn!(
            "positivity violated during integration: min eigenvalue {:.3e}",
            diagnostics.min_eigenvalue.to_f64().unwrap_or(f64::NAN)
        );
    }
    Ok(Trajectory { times, amps_a, amps_b, states, diagnostics })
}

/// Integrates the mean-field equations and records `⟨S⁺⟩` of both groups.
pub fn integrate<T: Real>(
    p: &ModelParams<T>,
    init: &MeanFieldState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    run(p, init, cfg, false)
}

/// As [`integrate`], additionally keeping the full state at every sample.
pub fn integrate_with_states<T: Real>(
    p: &ModelParams<T>,
    init: &MeanFieldState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    run(p, init, cfg, true)
}

/// Mean of `|⟨S⁺⟩|` over the trailing `window_fraction` of samples.
pub fn order_parameter<T: Real>(traj: &Trajectory<T>, g: Group, window_fraction: T) -> Result<T> {
    if !(window_fraction > T::zero() && window_fraction <= T::one()) {
        return Err(Error::InvalidParameter("window_fraction must lie in (0, 1]".into()));
    }
    let n = traj.len();
    let count = (window_fraction * T::lit(n as f64)).round().to_usize().unwrap_or(0).min(n);
    order_parameter_last(traj, g, count)
}

/// Mean of `|⟨S⁺⟩|` over the last `count` samples.
pub fn order_parameter_last<T: Real>(traj: &Trajectory<T>, g: Group, count: usize) -> Result<T> {
    let amps = traj.amplitudes(g);
    if count == 0 || count > amps.len() {
        return Err(Error::EmptyWindow);
    }
    let tail = &amps[amps.len() - count..];
    let sum = tail.iter().fold(T::zero(), |acc, z| acc + z.norm());
    Ok(sum / T::lit(count as f64))
}

/// `⟨|0⟩⟨2|⟩ = Tr(ρ|0⟩⟨2|) = ρ₂₀` at every sample.
pub fn coherence_02<T: Real>(traj: &Trajectory<T>, g: Group) -> Result<Vec<Cplx<T>>> {
    let states = traj.states.as_ref().ok_or(Error::StatesNotRecorded)?;
    Ok(states.iter().map(|s| s.get(g).matrix()[(2, 0)]).collect())
}
