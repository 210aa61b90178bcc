//! Jacobi-weighted histopolation on graded meshes: operator construction,
//! factorization checks, singular value statistics and stability bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extended;
pub mod jacobi;
pub mod matrix;
pub mod mesh;
pub mod operators;
pub mod quadrature;
pub mod reconstruct;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
pub use extended::UnisolvenceCertificate;
pub use jacobi::JacobiParams;
pub use matrix::DenseMatrix;
pub use mesh::{GradingMap, Mesh};
pub use operators::{HistoBasis, OperatorBundle};
pub use reconstruct::{Histopolant, TargetFunction};
pub use spectral::{ScalingSpec, SymbolSamples};
pub use stability::StabilityReport;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
