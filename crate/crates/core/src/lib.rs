//! Streaming distinguishers for pseudorandom sources over GF(2).
//!
//! The crate is organised bottom-up:
//!
//! * [`gf2`]: packed bit vectors, Gaussian elimination, and the samplers for
//!   subspaces, invertible maps, sparse vectors and ordered tuples;
//! * [`predicate`]: k-ary predicates with exact Walsh-Hadamard spectra;
//! * [`source`]: the subspace, sparse-parity and local-PRG sources;
//! * [`distinguisher`]: single-pass distinguishers with memory accounting;
//! * [`robp`]: explicit read-once branching programs and exact success
//!   probabilities;
//! * [`reduction`]: learners for parity and sparse parity built from a
//!   distinguisher;
//! * [`spectral`]: Krawtchouk-based shell biases, set-size bounds, seed
//!   distributions and Monte Carlo estimation.

pub mod distinguisher;
pub mod gf2;
pub mod predicate;
pub mod reduction;
pub mod rng;
pub mod robp;
pub mod source;
pub mod spectral;

pub use gf2::{BitString, Gf2Error, Gf2Matrix, OrderedTuple};
pub use predicate::{Predicate, Spectrum};
pub use rng::{SeedTree, StreamRng};
pub use source::{Instance, Sample, SourceSpec};
