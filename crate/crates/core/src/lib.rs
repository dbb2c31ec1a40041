//! Verification and monitoring of raw randomness through ranked-amplitude
//! criteria.
//!
//! The toolkit decomposes a raw sample stream into topology subsamples,
//! checks Pearson pair criteria, parameterizes ranked amplitudes with an
//! error-function model, splits the angular representation into a bit
//! stream, and runs a battery of statistical bit tests. Synthetic seeded
//! sources provide reproducible defect injections for calibrating every
//! detector.

pub mod angle;
pub mod error;
pub mod fit;
pub mod nist;
pub mod pipeline;
pub mod rng;
pub mod series;
pub mod special;
pub mod synth;
pub mod topology;
pub mod wstat;

pub use error::{Error, Result};
pub use series::{CdfPoint, Direction, RankedSeries, Series};
