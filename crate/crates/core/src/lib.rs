//! Recursive Bayesian state estimation.
//!
//! The crate implements the classic filter family over generic scalars
//! (`f32`/`f64` via [`nalgebra::RealField`]):
//!
//! * [`filters`] — KF, 1D KF, EKF, ESKF, IEKF and IESKF as pure
//!   predict/correct functions over immutable belief values.
//! * [`models`] — the linear, nonlinear and error-state model abstractions
//!   the filters consume, a finite-difference Jacobian checker, and a small
//!   library of built-in models (1D random walk, 2D constant velocity,
//!   range-bearing localization, planar robot with wrapped heading).
//! * [`grid`] — a histogram (grid) Bayes filter over a 1D state, usable as
//!   an independent numerical cross-check of the Gaussian algebra.
//! * [`gauss_newton`] — a Gauss-Newton MAP solver and a direct
//!   normal-equation minimizer for the iterated error-state update, the
//!   second pair of cross-check routes.
//! * [`sim`] — seeded scenario simulation, filter execution and evaluation
//!   metrics (RMSE, NEES, iteration counts) with bit-reproducible output.
//!
//! All types are immutable values and all operations are pure functions;
//! everything can be shared freely across threads.

pub mod error;
pub mod filters;
pub mod gauss_newton;
pub mod gaussian;
pub mod grid;
pub mod linalg;
pub mod models;
pub mod sim;

pub use error::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

// Concrete double-precision aliases for the generic core types.
pub type Gaussian64 = gaussian::Gaussian<f64>;
pub type Gaussian1D64 = gaussian::Gaussian1D<f64>;
pub type Belief64 = filters::Belief<f64>;
pub type ErrorBelief64 = filters::ErrorBelief<f64>;
pub type IterationConfig64 = filters::IterationConfig<f64>;
pub type LinearModel64 = models::LinearModel<f64>;
pub type Linear1DModel64 = models::Linear1DModel<f64>;
pub type NonlinearModel64 = models::NonlinearModel<f64>;
pub type ErrorStateModel64 = models::ErrorStateModel<f64>;
pub type GridBelief64 = grid::GridBelief<f64>;
