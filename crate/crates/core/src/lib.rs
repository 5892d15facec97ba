//! Deterministic wiretap-channel simulation.
//!
//! Two ways of getting close to one-time-pad secrecy over a wireless link:
//!
//! * [`nbkg`]: noise-based key generation. Parties quantize local noise into
//!   key bits and exchange them over a full-duplex link whose constellation
//!   rotation and artificial noise hide the bits from an eavesdropper.
//! * [`shaping`]: keyless transmission. A chain of randomness extractors
//!   spreads and accumulates the eavesdropper's residual bit errors so that
//!   every block needs about `2^lambda` guesses.
//!
//! [`metrics`] holds the secrecy measures that tie both together and
//! [`harness`] runs parameter sweeps and writes reports.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod channel;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod metrics;
pub mod nbkg;
pub mod parallel;
pub mod rng;
pub mod shaping;

pub use bits::BitBlock;
pub use error::{Error, Result};
pub use parallel::Exec;
pub use rng::SeedStream;
