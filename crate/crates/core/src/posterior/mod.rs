//! Reward and cost posteriors: the conjugate Gaussian model, the
//! max-transform, binned predictive distributions and their estimators.

pub mod cost;
pub mod discrete;
pub mod max_transform;
pub mod nig;
pub mod ppd;

pub use cost::CostModel;
pub use discrete::{ppd_sample, DiscreteDistribution, DEFAULT_BINS};
pub use max_transform::{gaussian_max_sample, max_transform_quantile, max_transform_sample, standard_normal_quantile};
pub use nig::{nig_update, NigPosterior, NormalInverseGamma};
pub use ppd::{
    abc_from_bank, abc_ppd, exact_ppd, AbcEstimate, ContextWeights, GridAtom, GridPrior, ParticleBank, StepSupport,
};
