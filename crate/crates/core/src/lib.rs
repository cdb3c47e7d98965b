//! Energy and carbon footprint models for centralized learning (CL),
//! parameter-server federated learning (FL) and consensus-driven federated
//! learning (CFL).
//!
//! The crate has four layers:
//!
//! * [`energy`] holds the closed-form per-round cost models and carbon
//!   accounting. Everything there is a pure function.
//! * [`topology`] covers round-robin device activation and neighbor
//!   selection over a device graph.
//! * [`fedsim`] is a small round-based training engine used to measure how
//!   many rounds each scheme needs to reach a target validation loss, and to
//!   produce a per-event cost log.
//! * [`runner`] ties the three together: JSON experiment configs, sweeps,
//!   simulation-coupled footprint runs, break-even solving and CSV/JSONL
//!   output.
//!
//! Per-device training and sweep grid points run on rayon when the
//! `parallel` feature is enabled (the default). Results never depend on the
//! number of worker threads.

pub mod energy;
pub mod exec;
pub mod fedsim;
pub mod rng;
pub mod runner;
pub mod scheme;
pub mod topology;

pub use scheme::Scheme;
