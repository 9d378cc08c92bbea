//! Core library for a decision-making approach to supervised binary hashing.
//!
//! An agent walks the Hamming cube one bit-flip at a time, rewarded for
//! moving its code toward a large-margin BCH codeword assigned to the
//! item's class. The crate provides:
//!
//! - [`galois`] / [`bch`] / [`codebook`]: GF(2^m) arithmetic, BCH generator
//!   polynomials, and per-class codebooks of arbitrary width.
//! - [`hamming`]: packed binary codes, distance kernels, and linear-scan
//!   ranking.
//! - [`env`]: the MDP — states, flip/terminate actions, margin rewards,
//!   and the greedy expert used for guided exploration.
//! - [`qnet`]: a from-scratch fully-connected Q-value network with dropout,
//!   backprop, and SGD.
//! - [`trainer`]: replay memory, the ε-greedy schedule, Q-learning targets,
//!   and the epoch training loop.
//! - [`data`] / [`eval`]: dataset ingestion, synthetic benchmarks, batch
//!   encoding with a trained policy, and mAP / precision@k metrics.
//!
//! Data-parallel paths (ranking, encoding, per-query metrics) run on rayon
//! when the `parallel` feature (default) is enabled and fall back to
//! sequential loops otherwise; both orderings produce identical results.

pub mod bch;
pub mod codebook;
pub mod data;
pub mod env;
pub mod eval;
pub mod galois;
pub mod hamming;
pub mod par;
pub mod qnet;
pub mod rng;
pub mod trainer;

pub use codebook::Codebook;
pub use data::Dataset;
pub use env::{EnvConfig, Environment, State, StepOutcome};
pub use hamming::{BinaryCode, LabelSet};
pub use qnet::QNetwork;
pub use trainer::{ReplayBuffer, TrainConfig, Transition};
