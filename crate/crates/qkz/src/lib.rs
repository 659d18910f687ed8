//! Level-zero qKZ equations at desk scale: tensor operators on V^⊗n, weight
//! functions, contour integrals and the hypergeometric map, together with an
//! exact exterior-algebra description of its kernel at μ = 0.

#![allow(clippy::needless_range_loop)]

pub mod contour_quadrature;
pub mod error;
pub mod grassmann;
pub mod hyper_map;
pub mod linalg;
pub mod qkz_operators;
pub mod sampling;
pub mod scalar;
pub mod special;
pub mod tensor_space;
pub mod weight_functions;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use qkz_operators::ModelParams;
pub use scalar::{Field, GaussianRational};
pub use tensor_space::{SubsetIndex, TensorOperator, TensorVector};

/// Complex matrices used by the numerical layer.
pub type CMatrix = linalg::Matrix<Complex64>;
/// Exact matrices over the Gaussian rationals.
pub type QMatrix = linalg::Matrix<GaussianRational>;
/// Operators on V^⊗n with exact entries.
pub type ExactOperator = TensorOperator<GaussianRational>;
