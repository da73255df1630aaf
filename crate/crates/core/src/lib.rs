//! Error-bounded compression of federated-learning model updates.
//!
//! The crate is `no_std` (with `alloc`) and contains every algorithmic piece:
//!
//! * [`tensor`]: named tensors, state dictionaries and the `FSZT` byte format.
//! * [`ebcodec`]: error-bounded lossy codecs over `f32` arrays.
//! * [`lossless`]: the byte codec used for metadata entries.
//! * [`pipeline`]: partitioning, routing and the `FSZU` update format.
//! * [`netsim`]: communication cost model, bandwidth emulation and
//!   codec / error-bound selection.
//! * [`flsim`]: a small FedAvg simulator built on a two-layer network.
//! * [`analysis`]: compression error distributions and Laplace fits.
//! * [`corpus`]: synthetic arrays and models for tests and benchmarks.
//!
//! File IO, wall-clock timing and the command line live in the `fedzip` crate.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod bytes;
pub mod corpus;
pub mod ebcodec;
pub mod error;
pub mod flsim;
pub mod lossless;
pub mod netsim;
pub mod pipeline;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
