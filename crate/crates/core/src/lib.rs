//! Multiple operator learning lab.
//!
//! Separable multiple-operator networks `sum theta_pkl l_p(alpha) b_k(u) tau_l(x)`,
//! a concatenated-input DeepONet baseline, a constructive partition-of-unity
//! approximant with parallel and nested aggregation, hierarchical ERM
//! training, and calculators for complexity, metric entropy, generalization
//! and minimax envelope formulas.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cube;
pub mod erm;
pub mod error;
pub mod lab;
pub mod lipschitz;
pub mod operators;
pub mod quadrature;
pub mod relu;
pub mod rng;
pub mod separable;

pub use error::{Error, Result};

/// A real-valued function on a finite-dimensional domain.
pub trait ScalarFn: Send + Sync {
    fn eval(&self, x: &[f64]) -> f64;
}

impl<F> ScalarFn for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// A multiple operator map `(alpha, u, x) -> G[alpha][u](x)`.
pub trait OperatorMap: Send + Sync {
    fn eval(&self, alpha: &dyn ScalarFn, u: &dyn ScalarFn, x: &[f64]) -> Result<f64>;
}

/// A real functional of a function, e.g. `alpha -> alpha(0)`.
pub trait Functional: Send + Sync {
    fn eval(&self, f: &dyn ScalarFn) -> f64;
}

impl<F> Functional for F
where
    F: Fn(&dyn ScalarFn) -> f64 + Send + Sync,
{
    fn eval(&self, f: &dyn ScalarFn) -> f64 {
        self(f)
    }
}
