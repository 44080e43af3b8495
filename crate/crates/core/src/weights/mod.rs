//! Filters, weight functions, scalar kernels and quadrature.

pub mod filter;
pub mod gamma;
pub mod kernels;
pub mod quadrature;

pub use filter::{filter_eval, filter_hat_eval, GaussianFilter};
pub use gamma::{
    balanced_gamma, kms_from_phi, kms_gamma, shifted_phi_gamma, KmsKind, Phi, WeightKind,
    WeightSpec,
};
pub use kernels::{
    b1_hat, b1_l1_limit, b1_l1_norm, b1_time, b2_hat, b_kernel, f_closed, f_kernel,
    functional_equation_residual, Kernels,
};
pub use quadrature::{QuadratureKind, QuadratureRule};
