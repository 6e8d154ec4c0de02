pub mod bootstrap;
pub mod cif;
pub mod cli;
pub mod cox;
pub mod error;
pub mod indep;
pub mod npmle;
pub mod rng;
pub mod sample;
pub mod sef;
pub mod sim;
pub mod stats;
pub mod step;

pub use error::{Error, Result};
pub use npmle::{
    fit_npmle, npmle_joint, npmle_selfconsistency, shen_k, Algorithm, JointTruncationFit, NpmleFit,
    NpmleOptions, SamplingProbability,
};
pub use sample::{existence_check, load_sample, ExistenceReport, LoadOptions, TruncatedSample};
pub use step::{eval_cdf, eval_cdf_leftlimit, StepDistribution};
