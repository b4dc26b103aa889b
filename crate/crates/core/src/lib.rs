//! Random bits from detector click timing, end to end in software.
//!
//! [`source`] simulates the photon/detector click stream, [`pipeline`] turns
//! it into filtered interval symbols, [`elias`] maps symbol words to exactly
//! unbiased bits by permutation ranking, [`lut`] bakes that map into a
//! 2 MiB table for one-lookup-per-word streaming, and [`analysis`] and
//! [`control`] cover efficiency, histogram fitting, statistical testing,
//! and rate stabilization.

pub mod analysis;
pub mod bits;
pub mod control;
pub mod elias;
pub mod error;
pub mod files;
pub mod lut;
pub mod pipeline;
pub mod source;

pub use error::{Error, Result};
