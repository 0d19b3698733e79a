//! Mean-field and microscopic models of synchronization between groups of
//! three-level quantum oscillators with gain and loss.
//!
//! Every numerical type is generic over the real scalar (`f32` or `f64`);
//! the `*64` aliases below fix it to `f64`.

pub mod cumulant;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod microscopic;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod quantum;
pub mod scalar;
pub mod signal;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

pub use cumulant::{derive_equations, integrate_cumulant, lifetime, Closure, CumulantSystem, GroupSize, MomentState};
pub use dynamics::{
    coherence_02, default_initial, integrate, integrate_with_states, order_parameter,
    order_parameter_last, InitialKind, IntegratorConfig, MeanFieldState, Trajectory,
};
pub use linalg::ComplexMatrix;
pub use model::{Group, ModelParams};
pub use quantum::{DensityMatrix, Superoperator};
pub use signal::{dominant_frequency, hann_window, locking_map, spectrum, Spectrum};
pub use stability::{critical_coupling, linearized_generator, spectral_abscissa, StabilityReport};

pub type Complex64 = Cplx<f64>;
pub type ComplexMatrix64 = ComplexMatrix<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type Superoperator64 = Superoperator<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type MeanFieldState64 = MeanFieldState<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type IntegratorConfig64 = IntegratorConfig<f64>;
pub type MomentState64 = MomentState<f64>;
