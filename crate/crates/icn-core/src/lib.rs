//! Pyramidal hierarchy of spiking predictor nodes.
//!
//! Each node models its binary input stream with a variable-order Markov
//! model estimated online by prediction by partial matching (method C
//! escapes) and emits a spike whenever the current input tuple lies within
//! a Hamming tolerance of the pattern its model currently ranks as most
//! probable. Stacked into a pyramid, the nodes compress a binarized digit
//! image into a short top-level code usable for unsupervised clustering.
//!
//! - [`vmm`] — online PPM-C context model over the binary alphabet
//! - [`node`] — tuple-by-tuple spike rule around one model
//! - [`topology`] — pyramid wiring (contiguous blocks + seeded random edges)
//! - [`network`] — layer-by-layer image pass, dataset runs, checkpoints
//! - [`dataset`] — IDX and USPS ingestion, binarization, subsampling
//! - [`eval`] — representative-code clustering error and trial sweeps
//! - [`hebbian`] — single-node recurrent-pattern experiment with
//!   diagnostic synaptic weights
//!
//! All probability and weight arithmetic is generic over the floating
//! scalar via [`Scalar`]; the aliases below pin the common instantiations.

pub mod bits;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod hebbian;
pub mod network;
pub mod node;
pub mod scalar;
pub mod seeds;
pub mod testkit;
pub mod topology;
pub mod vmm;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision instantiations. These are what the CLI ships.
pub type Vmm64 = vmm::VmmModel<f64>;
pub type Node64 = node::Node<f64>;
pub type Icn64 = network::Icn<f64>;
pub type HebbianParams64 = hebbian::HebbianParams<f64>;
pub type HebbianTrace64 = hebbian::HebbianTrace<f64>;

/// Single-precision instantiations.
pub type Vmm32 = vmm::VmmModel<f32>;
pub type Node32 = node::Node<f32>;
pub type Icn32 = network::Icn<f32>;
