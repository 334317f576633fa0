//! Canonical noise distributions for f-differential privacy, and the private
//! hypothesis tests built on them.
//!
//! The crate is `no_std` (it needs `alloc`). Randomness is supplied by the
//! caller through [`rand_core::RngCore`]; every routine is deterministic given
//! its inputs and the random stream.
#![no_std]

extern crate alloc;

pub mod charfn;
pub mod cnd;
pub mod dist;
pub mod dptest;
pub mod error;
pub mod rng;
mod root;
pub mod special;
pub mod tradeoff;
pub mod twoprop;

pub use cnd::{
    add_noise, identity_check, CndDist, GaussianCnd, Noise, NoiseDistribution, Scaled, TulapDist,
};
pub use error::{Error, Result};
pub use tradeoff::{FixedPoint, TradeoffFn, ValidationReport};
