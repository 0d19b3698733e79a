//! Gauss–Legendre and periodic trapezoid rules.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.nodes.iter().zip(&self.weights).fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }
}

/// `n`-point Gauss–Legendre rule on `[a, b]` (exact for polynomials of degree `2n − 1`).
pub fn gauss_legendre<T: Real>(n: usize, a: T, b: T) -> Result<Rule<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
    }
    let half = (b - a) * T::lit(0.5);
    let mid = (b + a) * T::lit(0.5);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Newton on P_n in f64, starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * T::lit(x);
        nodes[n - 1 - i] = mid + half * T::lit(x);
        weights[i] = half * T::lit(w);
        weights[n - 1 - i] = half * T::lit(w);
    }
    Ok(Rule { nodes, weights })
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Uniform grid `φ_k = 2πk/n` on `[0, 2π)` with equal weights `2π/n`
/// (spectrally accurate for smooth periodic integrands).
pub fn periodic_trapezoid<T: Real>(n: usize) -> Result<Rule<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
    }
    let h = T::TAU() / T::lit(n as f64);
    Ok(Rule { nodes: (0..n).map(|k| h * T::lit(k as f64)).collect(), weights: vec![h; n] })
}
