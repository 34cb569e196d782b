//! Posterior sampling.

mod config;
pub mod draws;
mod samples;
mod sampler;

pub use config::{Blocks, ChainConfig, InitConfig, ScaleConstraint, TARGET_ACCEPTANCE};
pub use samples::{Draw, PosteriorSamples};
pub use sampler::{
    derive_seed, initial_values, run_chain, run_chains, slab_probability, AcceptanceCounts, BlockCount,
    ProposalScales, Sampler,
};
