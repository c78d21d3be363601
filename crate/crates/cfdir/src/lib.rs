//! Global counterfactual direction discovery for black-box classifiers.
//!
//! The pipeline works in the semantic latent space of a pluggable deterministic
//! generative model. Around a single source latent it samples local
//! perturbations, trains a small proxy network that approximates the
//! counterfactual loss (classifier score plus weighted perceptual distance),
//! and extracts candidate directions from the proxy: the gradient direction
//! and the eigenvectors of the Hessian ranked by eigenvalue magnitude.
//! Counterfactual explanations are produced by a line search along a direction,
//! and attribution maps are computed by finite differences along the latent
//! path from the factual image to a near-zero-probability baseline.
//!
//! Crate layout:
//!
//! - [`numerics`]: vectors, symmetric matrices, a deterministic RNG, n-ball
//!   sampling, a small MLP with analytic input gradients, and a Jacobi
//!   eigensolver.
//! - [`worldmodel`]: the generator / classifier / distance triple, with
//!   built-in synthetic implementations and a line-protocol client for
//!   external models.
//! - [`proxy`]: perturbation dataset construction and proxy training.
//! - [`directions`]: direction extraction, line search, and evaluation.
//! - [`attribution`]: baseline discovery and latent-path attribution maps.
//! - [`cli`]: the reproducible command pipeline behind the `cfdir` binary.
//!
//! # Quick start
//!
//! Discover a direction around one latent of the built-in synthetic world and
//! line-search it on another:
//!
//! ```
//! use cfdir::cli::{RunConfig, World};
//! use cfdir::directions::{g_direction, line_search, AlphaGrid};
//! use cfdir::numerics::{Rng, Vector};
//! use cfdir::proxy::{build_dataset, train_proxy};
//! use cfdir::worldmodel::StochasticCode;
//!
//! # fn main() -> cfdir::Result<()> {
//! let mut config = RunConfig::benchmark();
//! config.sample_count = 192; // keep the example quick
//! config.proxy.epochs = 30;
//! let world = World::synthetic(&config)?;
//!
//! // any positive-class latent works as the source
//! let mut rng = Rng::new(3);
//! let (source, source_zt) = loop {
//!     let z = Vector::new(rng.gaussian_vec(config.generator.latent_dim))?;
//!     let zt = StochasticCode { seed: rng.next_u64() };
//!     if world.classifier.classify(&world.generator.decode(&z, zt)?)? > 0.0 {
//!         break (z, zt);
//!     }
//! };
//!
//! let dataset = build_dataset(
//!     world.generator.as_ref(),
//!     world.classifier.as_ref(),
//!     config.metric,
//!     &source,
//!     source_zt,
//!     config.radius,
//!     config.sample_count,
//!     &mut Rng::new(config.seed),
//! )?;
//! let (net, _report) = train_proxy(&dataset, &config.proxy)?;
//! let direction = g_direction(&net, &source, config.lambda, "example")?;
//!
//! let result = line_search(
//!     world.generator.as_ref(),
//!     world.classifier.as_ref(),
//!     config.metric,
//!     &source,
//!     source_zt,
//!     &direction,
//!     &AlphaGrid::symmetric(8.0 * config.radius, 64)?,
//!     config.lambda,
//!     "example",
//! )?;
//! assert!(result.logit_before > 0.0);
//! assert_eq!(result.flipped, result.logit_after <= 0.0);
//! # Ok(())
//! # }
//! ```

pub mod attribution;
pub mod cli;
pub mod directions;
pub mod error;
pub mod numerics;
pub mod proxy;
pub mod textio;
pub mod worldmodel;

pub use error::{Error, Result};
