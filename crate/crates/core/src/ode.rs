//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! Samples are produced by the order-4 interpolant, so the step size is never
//! clamped to the output grid.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// First-order system `y' = f(t, y)` on a flat real state vector.
pub trait OdeSystem<T> {
    fn dim(&self) -> usize;
    fn rhs(&self, t: T, y: &[T], dy: &mut [T]);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5Config<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
    /// Initial trial step; `None` picks `min(0.01, max_step)`.
    pub initial_step: Option<T>,
    /// Hard cap on attempted steps.
    pub max_steps: usize,
}

impl<T: Real> Default for Dopri5Config<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-9),
            abs_tol: T::lit(1e-9),
            max_step: T::lit(0.1),
            initial_step: None,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Tableau<T> {
    c: [T; 4],
    a: [T; 20],
    e: [T; 6],
    d: [T; 6],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        let l = T::lit;
        Self {
            c: [l(C2), l(C3), l(C4), l(C5)],
            a: [
                l(A21),
                l(A31), l(A32),
                l(A41), l(A42), l(A43),
                l(A51), l(A52), l(A53), l(A54),
                l(A61), l(A62), l(A63), l(A64), l(A65),
                l(A71), l(A73), l(A74), l(A75), l(A76),
            ],
            e: [l(E1), l(E3), l(E4), l(E5), l(E6), l(E7)],
            d: [l(D1), l(D3), l(D4), l(D5), l(D6), l(D7)],
        }
    }
}

/// Integrates from `t0` with state `y0` and calls `observe(k, t_k, y(t_k))` for
/// every requested sample time, in order. Sample times must be non-decreasing
/// and not earlier than `t0`.
pub fn integrate_sampled<T, S, F>(
    sys: &S,
    y0: &[T],
    t0: T,
    sample_times: &[T],
    cfg: &Dopri5Config<T>,
    mut observe: F,
) -> Result<OdeStats>
where
    T: Real,
    S: OdeSystem<T> + ?Sized,
    F: FnMut(usize, T, &[T]),
{
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y0.len() });
    }
    if !(cfg.rel_tol > T::zero() && cfg.abs_tol > T::zero() && cfg.max_step > T::zero()) {
        return Err(Error::InvalidParameter("tolerances and max_step must be positive".into()));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.first().is_some_and(|&s| s < t0) {
        return Err(Error::InvalidParameter("sample times must be sorted and not before t0".into()));
    }
    let tab = Tableau::<T>::new();
    let mut stats = OdeStats::default();

    let mut y = y0.to_vec();
    let mut next = 0usize;
    while next < sample_times.len() && sample_times[next] == t0 {
        observe(next, t0, &y);
        next += 1;
    }
    if next == sample_times.len() {
        return Ok(stats);
    }
    let t_end = sample_times[sample_times.len() - 1];

    let mut k = vec![vec![T::zero(); n]; 7];
    let mut tmp = vec![T::zero(); n];
    let mut y_new = vec![T::zero(); n];
    let mut cont = vec![vec![T::zero(); n]; 5];
    let mut out = vec![T::zero(); n];

    sys.rhs(t0, &y, &mut k[0]);
    stats.rhs_evals += 1;

    let mut t = t0;
    let mut h = cfg.initial_step.unwrap_or_else(|| T::lit(0.01).min(cfg.max_step));
    let safety = T::lit(0.9);
    let min_factor = T::lit(0.2);
    let max_factor = T::lit(10.0);
    let exponent = T::lit(-0.2);

    while next < sample_times.len() {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::NonConvergence { iterations: cfg.max_steps });
        }
        h = h.min(cfg.max_step);
        let remaining = t_end - t;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let min_h = T::epsilon() * T::lit(16.0) * t.abs().max(T::one());
        if remaining <= min_h {
            // end point reached up to round-off
            while next < sample_times.len() {
                observe(next, sample_times[next], &y);
                next += 1;
            }
            break;
        }
        if h <= min_h {
            return Err(Error::Stiff { t: t.to_f64().unwrap_or(f64::NAN) });
        }

        let a = &tab.a;
        stage(&mut tmp, &y, h, &k, &[(0, a[0])]);
        sys.rhs(t + tab.c[0] * h, &tmp, &mut k[1]);
        stage(&mut tmp, &y, h, &k, &[(0, a[1]), (1, a[2])]);
        sys.rhs(t + tab.c[1] * h, &tmp, &mut k[2]);
        stage(&mut tmp, &y, h, &k, &[(0, a[3]), (1, a[4]), (2, a[5])]);
        sys.rhs(t + tab.c[2] * h, &tmp, &mut k[3]);
        stage(&mut tmp, &y, h, &k, &[(0, a[6]), (1, a[7]), (2, a[8]), (3, a[9])]);
        sys.rhs(t + tab.c[3] * h, &tmp, &mut k[4]);
        stage(&mut tmp, &y, h, &k, &[(0, a[10]), (1, a[11]), (2, a[12]), (3, a[13]), (4, a[14])]);
        let t_new = if last { t_end } else { t + h };
        sys.rhs(t_new, &tmp, &mut k[5]);
        stage(&mut y_new, &y, h, &k, &[(0, a[15]), (2, a[16]), (3, a[17]), (4, a[18]), (5, a[19])]);
        sys.rhs(t_new, &y_new, &mut k[6]);
        stats.rhs_evals += 6;

        let e = &tab.e;
        let mut acc = T::zero();
        for i in 0..n {
            let err_i = h
                * (e[0] * k[0][i] + e[1] * k[2][i] + e[2] * k[3][i] + e[3] * k[4][i] + e[4] * k[5][i]
                    + e[5] * k[6][i]);
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            let r = err_i / scale;
            acc += r * r;
        }
        let err = (acc / T::lit(n.max(1) as f64)).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            h = h * min_factor;
            continue;
        }

        if err <= T::one() {
            stats.accepted += 1;
            let d = &tab.d;
            for i in 0..n {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[6][i] - bspl;
                cont[4][i] = h
                    * (d[0] * k[0][i] + d[1] * k[2][i] + d[2] * k[3][i] + d[3] * k[4][i] + d[4] * k[5][i]
                        + d[5] * k[6][i]);
            }
            while next < sample_times.len() && (last || sample_times[next] <= t_new) {
                let ts = sample_times[next];
                if last && ts >= t_end {
                    observe(next, ts, &y_new);
                } else {
                    let s = (ts - t) / h;
                    let s1 = T::one() - s;
                    for i in 0..n {
                        out[i] = cont[0][i]
                            + s * (cont[1][i] + s1 * (cont[2][i] + s * (cont[3][i] + s1 * cont[4][i])));
                    }
                    observe(next, ts, &out);
                }
                next += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            let factor = if err == T::zero() { max_factor } else { safety * err.powf(exponent) };
            h = h * factor.min(max_factor).max(min_factor);
        } else {
            stats.rejected += 1;
            let factor = safety * err.powf(exponent);
            h = h * factor.max(min_factor).min(T::one());
        }
    }
    Ok(stats)
}

#[inline]
fn stage<T: Real>(out: &mut [T], y: &[T], h: T, k: &[Vec<T>], coeffs: &[(usize, T)]) {
    for i in 0..out.len() {
        let mut s = T::zero();
        for &(j, a) in coeffs {
            s += a * k[j][i];
        }
        out[i] = y[i] + h * s;
    }
}
