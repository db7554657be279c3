//! D-optimal paired comparison designs for partial profiles with
//! interactions up to third order.
//!
//! Alternatives are described by K attributes at a common number of levels v,
//! of which exactly S are shown. Designs invariant under level and attribute
//! permutations are mixtures of uniform designs on the comparison-depth
//! orbits, so a design is just a weight vector over depths 1..=S. The crate
//! provides the closed-form information coefficients of such designs, their
//! variance functions and equivalence-theorem certificates, per-block and
//! whole-vector depth optimization, and a dense brute-force information
//! matrix built straight from enumerated pairs to validate all of it.

pub mod coding;
pub mod config;
pub mod error;
pub mod info;
pub mod optimize;
pub mod orbits;
pub mod variance;

pub use config::DesignConfig;
pub use error::{DesignError, Result};
pub use info::{
    block_deviation, brute_force_info, h_mix, h_uniform, BlockDeviation, BlockInfo, HVector,
    InvariantDesign,
};
pub use optimize::{
    best_depth_per_block, d_efficiency, objective, optimize_weights, optimize_weights_seeded,
    support_structure_check, BlockDepthResult, OptimalDesignReport, OrderOptimum,
};
pub use orbits::{
    enumerate_pairs, orbit_size, regression_vector, PairOrbit, Profile, DEFAULT_ENUMERATION_CAP,
};
pub use variance::{kw_certificate, variance_at_depth, variance_uniform, KwReport, DEFAULT_KW_TOLERANCE};
