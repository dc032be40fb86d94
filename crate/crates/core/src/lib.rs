//! String Gaussian processes: nonstationary covariance structures built by
//! chaining local GP experts on a partition of the input domain, with exact
//! joint modelling of function values and derivatives.
//!
//! The crate provides the base kernel families with analytic derivative
//! blocks ([`kernels`]), the global string covariance construction
//! ([`string_gp`]), exact sampling ([`sampler`]), GP regression on any of
//! these covariances ([`regression`]), product kernels for multivariate
//! inputs ([`product`]), and marginal-likelihood hyperparameter search
//! ([`optim`]).

pub mod error;
pub mod kernels;
pub mod linalg;
pub mod optim;
pub mod product;
pub mod regression;
pub mod sampler;
pub mod string_gp;

pub use error::{Error, Result};
