//! Deterministic multi-agent simulator for self-organized aggregation of a
//! robot swarm over two colored sites.
//!
//! A swarm of simple robots random-walks a circular arena containing a black
//! and a white circular site. Robots rest on sites and leave them according
//! to a three-state probabilistic finite-state machine (random walk / stay /
//! leave). A minority of "informed" robots with a built-in site preference
//! steers the final distribution of the swarm between the two sites.
//!
//! Two interchangeable controller variants are provided behind the
//! [`controller::variant::ControllerVariant`] trait and selected by name at
//! runtime:
//!
//! * `baseline` — non-informed robots rest only where informed robots
//!   already rest, and leave based on the change in the number of informed
//!   neighbors since joining;
//! * `simplified` — non-informed robots rest on any site and leave with a
//!   memoryless probability that decays with the local robot density.
//!
//! Everything is deterministic under a 64-bit seed: a trial is a pure
//! function of its [`engine::TrialConfig`], and batch sweeps derive per-trial
//! seeds from the cell parameters so results are reproducible cell by cell.

pub mod arena;
pub mod controller;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod robot;
mod spatial;

pub use error::Error;
