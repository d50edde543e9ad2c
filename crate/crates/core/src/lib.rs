//! Cell-switching simulator core: virtual-output-queued crossbar state,
//! fabric schedulers, exact matching solvers, CIOQ output-queue emulation,
//! and output-link packet schedulers.
//!
//! Everything in this crate is deterministic given a seed and allocates
//! through `alloc` only; IO and file formats live in the companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cioq;
pub mod error;
pub mod link;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sched;
pub mod sim;
pub mod traffic;

pub use error::ConfigError;
pub use model::{Cell, DequeuePolicy, Matching, VoqSwitchState};
pub use rng::RngState;
