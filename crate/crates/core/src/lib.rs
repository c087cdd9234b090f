//! Fixed-time stability toolkit for singularly perturbed systems.
//!
//! The crate certifies fixed-time stability of two-time-scale ODE systems
//! through composite Lyapunov functions, stress-tests the supporting
//! inequalities with randomized oracles, and simulates the benchmark systems
//! with a stiffness-aware adaptive integrator.
//!
//! Everything numeric is generic over the scalar type via [`real::Real`]
//! (`f32` or `f64`); the aliases below pin the double-precision instantiation
//! used by the command-line tools.

// Validation deliberately writes `!(x > 0)` rather than `x <= 0`: the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod gradflow;
pub mod highorder;
pub mod ineq;
pub mod linalg;
pub mod model;
pub mod real;
pub mod sampling;
pub mod sim;
pub mod suite;

pub use certify::{
    BoundaryCertificate, CertificateRecord, CompositeCertificate, InterconnectionBounds,
    PowerLawCertificate,
};
pub use model::SystemModel;
pub use real::Real;
pub use sim::{IntegratorConfig, Trajectory};

/// Double-precision aliases for the main public types.
pub type SystemModelF64 = model::SystemModel<f64>;
pub type PowerLawCertificateF64 = certify::PowerLawCertificate<f64>;
pub type BoundaryCertificateF64 = certify::BoundaryCertificate<f64>;
pub type InterconnectionBoundsF64 = certify::InterconnectionBounds<f64>;
pub type CompositeCertificateF64 = certify::CompositeCertificate<f64>;
pub type CertificateRecordF64 = certify::CertificateRecord<f64>;
pub type TrajectoryF64 = sim::Trajectory<f64>;
pub type IntegratorConfigF64 = sim::IntegratorConfig<f64>;
