//! Voter-determined random dictator (VDRD) elections.
//!
//! Random Dictator elects the top preference of a uniformly chosen voter,
//! deletes that candidate from every ballot and repeats for each seat. VDRD
//! runs the same procedure but replaces the random choice with a fixed
//! pseudo-random generator seeded by the sum of seed contributions made by the
//! voters themselves, so anyone holding the ballots can replay the result.
//!
//! - [`detgen`]: the generator, unbiased range reduction and permutations.
//! - [`model`]: domain types and file formats.
//! - [`engine`]: ballot sheet, tally, verification and the seed attack.
//! - [`rdoracle`]: the exact Random Dictator distribution.
//! - [`analysis`]: seed-space enumeration and KL divergence reports.

pub mod analysis;
pub mod detgen;
pub mod engine;
mod error;
pub mod model;
pub mod rdoracle;

pub use error::Error;
