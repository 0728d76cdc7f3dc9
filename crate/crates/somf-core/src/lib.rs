//! Streaming matrix factorization core.
//!
//! Implements online matrix factorization (OMF) and its subsampled variant
//! (SOMF) for dictionary learning, sparse coding and non-negative matrix
//! factorization. The crate is `no_std` + `alloc`; the `std` feature (on by
//! default) additionally enables the two-thread overlap of the dictionary
//! update with the complement surrogate update.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod dict_update;
pub mod driver;
pub mod error;
pub mod estimators;
pub mod flops;
pub mod proximal;
pub mod rng;
pub mod subsampling;
pub mod surrogate;

pub use dict_update::{full_dictionary_update, init_dictionary, partial_dictionary_update, DictionaryState};
pub use driver::{
    alternate_minimization_oracle, fit, Algorithm, Budget, Checkpoint, FitConfig, FitReport,
};
pub use error::{Error, Result};
pub use estimators::{compute_code_inputs, gamma_weight, EstimatorVariant, SampleCache};
pub use flops::FlopCounter;
pub use proximal::{elastic_net_value, enet_projection, solve_code, ElasticNetParams};
pub use rng::RngStreams;
pub use subsampling::{draw_mask, gather_rows, scatter_rows, Mask};
pub use surrogate::{empirical_objective, weight, SurrogateStats};
