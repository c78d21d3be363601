//! Self-contained numerics: linear algebra, deterministic random sampling,
//! and a small feed-forward network with analytic input gradients.
//!
//! Everything here works in 64-bit floats and is pure given its inputs, so
//! shared read-only values are safe to use from multiple threads. The one
//! stateful type, [`Rng`], must not be shared; derive per-thread instances
//! from a parent seed instead.

mod eigen;
mod linalg;
mod mlp;
mod rng;
mod sample;

pub use eigen::sym_eigen;
pub use linalg::{SymMatrix, Vector};
pub use mlp::{sigmoid, Activation, Layer, LayerGradients, MlpNet, NetGradients, OUTPUT_WIDTH};
pub use rng::Rng;
pub use sample::sample_nball;
