//! Oscillatory integrals behind the coefficient formula: the double-Bessel
//! integral, the blow-down model integral, stationary phase, and the
//! Hadamard transport recursion.

pub mod double_bessel;
pub mod hadamard;
pub mod model_integral;
pub mod stationary_phase;

pub use double_bessel::{double_bessel, double_bessel_weighted, DoubleBessel};
pub use model_integral::{model_integral, model_integral_ladder, model_pairing, model_prediction, ModelCutoff, ModelIntegral};
pub use hadamard::{hadamard_transport, mode_sum_terms, sphere_wave_kernel, sphere_wave_mode_sum, HadamardCoefficients, Metric};
pub use stationary_phase::{
    brute_force, decay_slope, error_probe, hessian_model, model_full_hessian, rank, stationary_phase_leading, CriticalPoint, ErrorProbe,
    ModelHessian, PhaseProblem,
};
