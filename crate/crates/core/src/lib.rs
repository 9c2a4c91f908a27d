//! # nsvm
//!
//! A toolkit for multiclass nonparallel-hyperplane support vector machines.
//! One hyperplane is fit per class, each close to its own class and far from
//! the others; prediction picks the nearest hyperplane.
//!
//! Four trainers are provided:
//!
//! * **NSVM** (linear and kernel): all hyperplanes are fit jointly by
//!   minimizing a max-min squared-distance loss; the nonconvex objective is
//!   solved by a proximal difference-of-convex iteration with extrapolation
//!   ([`nsvm_linear::train_linear`], [`nsvm_kernel::train_kernel`]).
//! * **GEPSVM**: one generalized eigenproblem per class
//!   ([`baselines::train_gepsvm`]).
//! * **LSTSVM**: one regularized least-squares system per class
//!   ([`baselines::train_lstsvm`]).
//! * **PCC**: one symmetric eigenproblem per class
//!   ([`baselines::train_pcc`]).
//!
//! [`eval`] adds accuracy metrics, stratified k-fold cross-validation, grid
//! search, and a paired t-test; [`model`] persists trained models to a
//! reviewable text format. The `nsvm` binary wires everything into a CLI.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod mpdca;
pub mod nsvm_kernel;
pub mod nsvm_linear;

pub use error::Error;
