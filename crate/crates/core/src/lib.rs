//! Polar-coded secure transmission over degraded binary-input wiretap
//! channels, and multi-block secret-key agreement with privacy amplification.
//!
//! The crate is organized bottom-up:
//!
//! - [`channel`]: binary-input DMCs with exact capacity and Bhattacharyya
//!   parameters, sampling, and degradation.
//! - [`polar`]: the polar transform and the successive-cancellation decoder.
//! - [`construction`]: Z-parameter evolution, information-set selection and
//!   the block-error bound.
//! - [`gf2`]: bit-packed GF(2) linear algebra used by the leakage oracle and
//!   the universal hash.
//! - [`wiretap`]: the nested wiretap code, its encoder/decoder and the exact
//!   erasure-channel leakage oracle.
//! - [`keyagree`]: the fading-block key-agreement protocol and privacy
//!   amplification.
//! - [`rng`]: keyed, reproducible random streams.
//!
//! Positions are 0-based throughout the API.

pub mod channel;
pub mod construction;
pub mod error;
pub mod gf2;
pub mod keyagree;
pub mod polar;
pub mod rng;
pub mod wiretap;

pub use channel::{ChannelModel, ChannelSample, Degrader};
pub use construction::{PolarCode, ZSource, ZTable};
pub use error::{Error, Result};
pub use rng::RngStreams;
pub use wiretap::{RateRule, WiretapCode};

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}
