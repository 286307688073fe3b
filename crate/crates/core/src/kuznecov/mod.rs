//! Test functions and the Kuznecov-Weyl spectral sums.

pub mod source;
pub mod sums;
pub mod test_function;

pub use source::{Atom, SpectralSource, TorusShells, Window};
pub use sums::{
    doubly_smoothed_sum, dual_trace, eigen_weights, jump, jumps, kuznecov_sum, sharp_sum, sharp_sum_averaged,
    support_tail_fraction, JumpEntry, SumMeta, SumTable, Variant,
};
pub use test_function::{ShiftedBump, SpectralProfile, TestFunction, TestKind};
