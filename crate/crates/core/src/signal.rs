//! Windowed DFT spectra of `⟨S⁺⟩(t)`, dominant frequencies and frequency-locking maps.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::dynamics::{
    default_initial, integrate, order_parameter, order_parameter_last, Diagnostics, InitialKind,
    IntegratorConfig, MeanFieldState, Trajectory,
};
use crate::error::{Error, Result};
use crate::model::{Group, ModelParams};
use crate::scalar::{Cplx, Real};

/// Fewest samples accepted in a spectral window.
pub const MIN_WINDOW: usize = 8;
/// Order parameter below which a group counts as unsynchronized.
pub const NO_SYNC_THRESHOLD: f64 = 1e-3;

/// `|DFT|` on an ascending angular-frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub freqs: Vec<T>,
    pub mags: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    /// Spacing of the angular-frequency grid.
    pub fn bin_width(&self) -> T {
        if self.freqs.len() < 2 {
            T::zero()
        } else {
            self.freqs[1] - self.freqs[0]
        }
    }
}

/// `w_k = (1 − cos(2πk/(n−1)))/2`.
pub fn hann_window<T: Real>(n: usize) -> Vec<T> {
    if n < 2 {
        return vec![T::one(); n];
    }
    let denom = T::lit((n - 1) as f64);
    let two_pi = T::TAU();
    (0..n)
        .map(|k| T::lit(0.5) * (T::one() - (two_pi * T::lit(k as f64) / denom).cos()))
        .collect()
}

fn plan<T: Real>(n: usize) -> Arc<dyn Fft<T>> {
    FftPlanner::new().plan_fft_forward(n)
}

/// Magnitude spectrum of a uniformly sampled complex series with spacing `dt`,
/// Hann-windowed, unnormalized forward transform.
pub fn spectrum_of_series<T: Real>(series: &[Cplx<T>], dt: T) -> Result<Spectrum<T>> {
    let n = series.len();
    if n < MIN_WINDOW {
        return Err(Error::TooFewSamples(n));
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter("sample spacing must be positive".into()));
    }
    let w = hann_window::<T>(n);
    let mut buf: Vec<Cplx<T>> = series.iter().zip(&w).map(|(z, &wk)| z * wk).collect();
    plan::<T>(n).process(&mut buf);
    let dw = T::TAU() / (T::lit(n as f64) * dt);
    // bin k ↔ frequency k (k < n/2 rounded up) or k − n; reorder ascending
    let half = n.div_ceil(2);
    let mut freqs = Vec::with_capacity(n);
    let mut mags = Vec::with_capacity(n);
    for idx in half..n {
        freqs.push(dw * T::lit(idx as f64 - n as f64));
        mags.push(buf[idx].norm());
    }
    for (idx, z) in buf.iter().enumerate().take(half) {
        freqs.push(dw * T::lit(idx as f64));
        mags.push(z.norm());
    }
    Ok(Spectrum { freqs, mags })
}

/// Spectrum of group `g` over the trailing `window_fraction` of the trajectory.
pub fn spectrum<T: Real>(traj: &Trajectory<T>, g: Group, window_fraction: T) -> Result<Spectrum<T>> {
    if !(window_fraction > T::zero() && window_fraction <= T::one()) {
        return Err(Error::InvalidParameter("window_fraction must lie in (0, 1]".into()));
    }
    let amps = traj.amplitudes(g);
    let count = (window_fraction * T::lit(amps.len() as f64)).round().to_usize().unwrap_or(0);
    let dt = traj.sample_spacing().ok_or(Error::TooFewSamples(amps.len()))?;
    spectrum_of_series(&amps[amps.len() - count.min(amps.len())..], dt)
}

/// Frequency of the largest bin; ties go to the smallest `|ω|`. `None` if all bins vanish.
pub fn dominant_frequency<T: Real>(s: &Spectrum<T>) -> Option<T> {
    let mut best: Option<(T, T)> = None;
    for (&f, &m) in s.freqs.iter().zip(&s.mags) {
        best = match best {
            None => Some((f, m)),
            Some((bf, bm)) if m > bm || (m == bm && f.abs() < bf.abs()) => Some((f, m)),
            keep => keep,
        };
    }
    best.filter(|&(_, m)| m > T::zero()).map(|(f, _)| f)
}

/// Trailing window used for order parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrderWindow<T> {
    Fraction(T),
    LastSamples(usize),
}

/// Integration and analysis settings for one two-group cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoGroupProtocol<T> {
    pub integrator: IntegratorConfig<T>,
    /// Trailing fraction of samples used for spectra.
    pub spectrum_fraction: T,
    pub order_window: OrderWindow<T>,
    pub sync_threshold: T,
}

impl<T: Real> TwoGroupProtocol<T> {
    /// `t = 1000`, 10000 samples, spectrum from the last half, order parameter over the last half.
    pub fn spectra() -> Self {
        Self {
            integrator: IntegratorConfig::new(T::lit(1000.0), 10_000),
            spectrum_fraction: T::lit(0.5),
            order_window: OrderWindow::Fraction(T::lit(0.5)),
            sync_threshold: T::lit(NO_SYNC_THRESHOLD),
        }
    }

    /// `t = 500`, 10000 samples, frequencies from the last half, order parameter over the last 1000 samples.
    pub fn blockade() -> Self {
        Self {
            integrator: IntegratorConfig::new(T::lit(500.0), 10_000),
            spectrum_fraction: T::lit(0.5),
            order_window: OrderWindow::LastSamples(1000),
            sync_threshold: T::lit(NO_SYNC_THRESHOLD),
        }
    }
}

/// Per-cell result of a locking map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LockingCell<T> {
    pub order_a: T,
    pub order_b: T,
    pub omega_a: Option<T>,
    pub omega_b: Option<T>,
    /// Bin width of the spectra.
    pub bin_width: T,
    /// `arg(⟨S⁺⟩_A ⟨S⁻⟩_B)` at the final sample.
    pub relative_phase: T,
    pub diagnostics: Diagnostics<T>,
}

impl<T: Real> LockingCell<T> {
    pub fn synchronized(&self, threshold: T) -> bool {
        self.order_a >= threshold && self.order_b >= threshold
    }

    /// `ω_A − ω_B` when both groups are synchronized.
    pub fn frequency_difference(&self, threshold: T) -> Option<T> {
        if !self.synchronized(threshold) {
            return None;
        }
        Some(self.omega_a? - self.omega_b?)
    }
}

fn order<T: Real>(traj: &Trajectory<T>, g: Group, w: OrderWindow<T>) -> Result<T> {
    match w {
        OrderWindow::Fraction(f) => order_parameter(traj, g, f),
        OrderWindow::LastSamples(n) => order_parameter_last(traj, g, n.min(traj.len())),
    }
}

/// Spectral and order-parameter summary of a two-group trajectory.
pub fn analyze_two_groups<T: Real>(traj: &Trajectory<T>, protocol: &TwoGroupProtocol<T>) -> Result<LockingCell<T>> {
    let sa = spectrum(traj, Group::A, protocol.spectrum_fraction)?;
    let sb = spectrum(traj, Group::B, protocol.spectrum_fraction)?;
    let last = traj.len() - 1;
    let rel = traj.amps_a[last] * traj.amps_b[last].conj();
    Ok(LockingCell {
        order_a: order(traj, Group::A, protocol.order_window)?,
        order_b: order(traj, Group::B, protocol.order_window)?,
        omega_a: dominant_frequency(&sa),
        omega_b: dominant_frequency(&sb),
        bin_width: sa.bin_width(),
        relative_phase: rel.arg(),
        diagnostics: traj.diagnostics,
    })
}

/// Initial state of the two-group protocols: A perturbed, B maximally mixed.
pub fn two_group_initial<T: Real>() -> MeanFieldState<T> {
    MeanFieldState {
        rho_a: default_initial(InitialKind::Perturbed),
        rho_b: default_initial(InitialKind::Uniform),
    }
}

/// Integrates one parameter point from [`two_group_initial`] and analyzes it.
pub fn locking_cell<T: Real>(p: &ModelParams<T>, protocol: &TwoGroupProtocol<T>) -> Result<LockingCell<T>> {
    locking_cell_from(p, &two_group_initial(), protocol)
}

pub fn locking_cell_from<T: Real>(
    p: &ModelParams<T>,
    init: &MeanFieldState<T>,
    protocol: &TwoGroupProtocol<T>,
) -> Result<LockingCell<T>> {
    let traj = integrate(p, init, &protocol.integrator)?;
    analyze_two_groups(&traj, protocol)
}

/// [`locking_cell`] over a list of parameter points, in parallel; output order matches input order.
/// Failures are reported per cell.
pub fn locking_map<T: Real>(points: &[ModelParams<T>], protocol: &TwoGroupProtocol<T>) -> Vec<Result<LockingCell<T>>> {
    locking_map_from(points, &two_group_initial(), protocol)
}

pub fn locking_map_from<T: Real>(
    points: &[ModelParams<T>],
    init: &MeanFieldState<T>,
    protocol: &TwoGroupProtocol<T>,
) -> Vec<Result<LockingCell<T>>> {
    points.par_iter().map(|p| locking_cell_from(p, init, protocol)).collect()
}
