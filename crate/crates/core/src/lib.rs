//! Diophantine approximation by smooth numbers: smooth-number counting,
//! Kloosterman averages over smooth moduli, dispersion sums, and a search
//! for smooth `n` with small `||n alpha||`.

pub mod arith;
pub mod diophantine;
pub mod dispersion;
pub mod error;
pub mod expsums;
pub mod numeric;
pub mod search;
pub mod smooth;

pub use error::{Error, Result, Warning};
