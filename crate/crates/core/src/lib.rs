//! Generalized-Bayes posteriors and data-driven learning-rate selection.

pub mod data;
pub mod dgp;
pub mod error;
pub mod linalg;
pub mod lrate;
pub mod model;
pub mod models;
pub mod piecewise;
pub mod posterior;
pub mod special;
pub mod stream;
pub mod uq;

pub use data::{Dataset, ParamVector};
pub use error::{Error, Result};
pub use model::{model_loglik, model_mle, model_score_hessian, Model};
pub use posterior::{posterior_mean_cov, PosteriorHandle, PosteriorKind};
pub use stream::RandomStream;
