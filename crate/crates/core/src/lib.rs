//! Bayesian multi-group probit DAG models.
//!
//! A binary response is linked to a latent Gaussian node that, together with
//! the covariates, follows a Gaussian DAG model per group. Graph structure,
//! Cholesky parameters, latent data and the cut-off are sampled jointly by
//! MCMC; causal effects of covariates on the response come out as Bayesian
//! model averages over the sampled graphs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod causal;
pub mod cholesky;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod mcmc;
pub mod model;
pub mod scalar;
pub mod simlab;

pub use cholesky::{
    conditional_params, initial_dag_estimate, modified_cholesky, partial_correlations,
    CholeskyFactors, ConditionalParams,
};
pub use error::{Error, Result};
pub use graph::{Dag, Operator, OperatorKind, RESPONSE};
pub use linalg::{Cholesky, Matrix};
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type CholeskyFactors64 = CholeskyFactors<f64>;
pub type CholeskyFactors32 = CholeskyFactors<f32>;
pub type Hyperparams64 = model::Hyperparams<f64>;
pub type Hyperparams32 = model::Hyperparams<f32>;
pub type GroupData64 = model::GroupData<f64>;
pub type GroupData32 = model::GroupData<f32>;
pub type ChainTrace64 = mcmc::ChainTrace<f64>;
pub type ChainTrace32 = mcmc::ChainTrace<f32>;
pub type Scenario64 = simlab::Scenario<f64>;
pub type Truth64 = simlab::Truth<f64>;
