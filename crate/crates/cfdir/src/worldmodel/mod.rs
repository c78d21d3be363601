//! The pluggable world: a deterministic generator, a black-box classifier,
//! and a perceptual distance.
//!
//! Everything downstream only ever talks to the [`Generator`] and
//! [`Classifier`] traits, so the built-in synthetic pair and a remote child
//! process are interchangeable.

mod distance;
mod image;
mod remote;
mod synthetic;

use serde::{Deserialize, Serialize};

pub use distance::{distance, DistanceMetric};
pub use image::Image;
pub use remote::{RemoteModel, RemotePool, DEFAULT_TIMEOUT};
pub use synthetic::{
    ClassifierSpec, EllipseRanges, GeneratorSpec, SyntheticClassifier, SyntheticGenerator,
    BACKGROUND_OFFSET, ELLIPSE_DIMS,
};

use crate::error::{Error, Result};
use crate::numerics::Vector;

/// Non-semantic generator input. The built-in generator is procedural, so the
/// code reduces to the seed of its reproducible detail noise. Held fixed per
/// image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StochasticCode {
    pub seed: u64,
}

/// Deterministic decoder from semantic latent space to images: calling it
/// twice with the same `(z_sem, z_t)` must yield bit-identical pixels.
pub trait Generator: Send + Sync {
    fn latent_dim(&self) -> usize;
    fn decode(&self, z_sem: &Vector, z_t: StochasticCode) -> Result<Image>;
}

/// Black-box scorer; positive logit means positive class.
pub trait Classifier: Send + Sync {
    fn classify(&self, image: &Image) -> Result<f64>;
}

/// One evaluation instance: a latent, its fixed stochastic code, and an id
/// used in reports and file names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentRecord {
    pub id: String,
    pub z_sem: Vector,
    pub z_t: StochasticCode,
}

/// Brute-force gradient of `classify(decode(z))` with respect to `z` by
/// central differences, `2n` generator calls. This is benchmark-only ground
/// truth: it peeks through the black box the proxy is meant to approximate,
/// and tests use it as the reference direction.
pub fn oracle_direction(
    generator: &dyn Generator,
    classifier: &dyn Classifier,
    z_sem: &Vector,
    z_t: StochasticCode,
    step: f64,
) -> Result<Vector> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::arg(format!("oracle step must be > 0, got {step}")));
    }
    let mut point = z_sem.as_slice().to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let base = point[i];
        point[i] = base + step;
        let plus = classifier.classify(&generator.decode(&Vector::new(point.clone())?, z_t)?)?;
        point[i] = base - step;
        let minus = classifier.classify(&generator.decode(&Vector::new(point.clone())?, z_t)?)?;
        point[i] = base;
        grad.push((plus - minus) / (2.0 * step));
    }
    Vector::new(grad)
}
