//! Log-adjusted shrinkage priors for sparse normal means: prior kernels,
//! certified normalizing-constant bounds, Gibbs and exact Metropolis-Hastings
//! samplers, quadrature oracles and a simulation harness.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod mcmc;
pub mod oracle;
pub mod prior;
pub mod quadrature;
pub mod random;

pub use bounds::{norm_const_bounds, NormBounds};
pub use error::{Error, Result};
pub use experiments::{Method, ResultTable, Scenario, ScenarioKind};
pub use mcmc::{ChainState, MhDecision, PosteriorSummary, RunConfig};
pub use oracle::MseReport;
pub use prior::{PriorSpec, TauPrior, Variant};
pub use quadrature::QuadratureSpec;
pub use random::RngStream;
