//! Posterior engines.

pub mod gaussian;
pub mod gibbs_mcid;
pub mod linear;
pub mod logistic;
pub mod mcmc;

pub use gaussian::GaussianLocationModel;
pub use gibbs_mcid::GibbsMcidModel;
pub use linear::LinearRegressionModel;
pub use logistic::LogisticMcidModel;
