//! Joint rotation and position design for base stations built from
//! six-dimensional movable antenna (6DMA) surfaces, driven by statistical
//! channel information only.
//!
//! The pipeline runs in two stages:
//!
//! 1. [`rotation`]: with every surface pinned to an inscribed sphere along
//!    its own normal, choose rotations that maximize the sum of log
//!    surrogate rates ([`rate`]), starting from a greedy pick over a
//!    Fibonacci candidate set and refining by gradient ascent.
//! 2. [`placement`]: for those rotations, find positions such that no
//!    surface blocks or overlaps another.
//!
//! [`scenario`] turns a scene description into the per-user path
//! statistics consumed by [`channel`].
//!
//! With the default `parallel` feature the data-parallel loops run on
//! rayon; see [`exec::Execution`].

pub mod channel;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod placement;
pub mod rate;
pub mod rotation;
pub mod scenario;

pub use error::{Error, Result};
pub use exec::Execution;
