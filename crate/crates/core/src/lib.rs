//! Universal (channel-independent) dimension-reducing space-time diversity
//! combining, with the classical baselines it is measured against.
//!
//! The crate is organised bottom-up:
//!
//! * [`realrep`] stacks complex space-time blocks into real vectors.
//! * [`channel`] draws Rayleigh fading and applies the SIMO / MAC models.
//! * [`combining`] builds the universal combiners (two antennas, and the
//!   quasi-orthogonal and dithered four-antenna variants) together with MRC
//!   and selection combining.
//! * [`quantize`] is the uniform scalar quantizer used on combiner outputs.
//! * [`capacity`] holds mutual information, MAC log-det constraints,
//!   symmetric capacities and the small-ball outage asymptotics.
//! * [`montecarlo`] is the seeded, trial-parallel outage / CDF engine.
//! * [`relaysim`] simulates two "dumb" relays forwarding over finite-rate
//!   fronthaul to an MMSE receiver.
//! * [`subnyquist`] recasts four-tap PAM acquisition as four-antenna SIMO.

pub mod capacity;
pub mod channel;
pub mod combining;
mod error;
pub mod montecarlo;
pub mod qam;
pub mod quantize;
pub mod realrep;
pub mod relaysim;
pub mod rng;
pub mod selftest;
pub mod subnyquist;

pub use error::{Error, Result};
pub use num_complex::Complex64;
