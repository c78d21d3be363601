//! Local proxy of the counterfactual loss.
//!
//! Around one source latent, [`build_dataset`] samples perturbations inside a
//! ball of radius `r`, decodes each with the source's fixed stochastic code,
//! and records the classifier probability and the distance to the source
//! image. [`train::train_proxy`] fits a small two-head network to those
//! targets; the network is only ever trusted inside the sampled ball.

mod train;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use train::{train_proxy, TrainConfig, TrainReport};

use crate::error::{Error, Result};
use crate::numerics::{sample_nball, sigmoid, MlpNet, Rng, Vector};
use crate::worldmodel::{distance, Classifier, DistanceMetric, Generator, StochasticCode};

/// One perturbation record: the perturbed latent and the two regression
/// targets measured on its decoded image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxySample {
    pub z_tilde: Vector,
    /// Classifier output as a probability (sigmoid of the logit), so both
    /// targets live in [0, 1]. Flip tests elsewhere always use the raw logit.
    pub f_value: f64,
    /// Distance between the decoded perturbation and the source image.
    pub s_value: f64,
}

/// Min-max statistics used to map each target into [0, 1] for training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub f_min: f64,
    pub f_max: f64,
    pub s_min: f64,
    pub s_max: f64,
}

impl Normalization {
    fn from_targets(samples: &[ProxySample]) -> Normalization {
        let mut n = Normalization {
            f_min: f64::INFINITY,
            f_max: f64::NEG_INFINITY,
            s_min: f64::INFINITY,
            s_max: f64::NEG_INFINITY,
        };
        for s in samples {
            n.f_min = n.f_min.min(s.f_value);
            n.f_max = n.f_max.max(s.f_value);
            n.s_min = n.s_min.min(s.s_value);
            n.s_max = n.s_max.max(s.s_value);
        }
        n
    }

    fn scale(value: f64, min: f64, max: f64) -> f64 {
        let span = max - min;
        if span == 0.0 {
            0.0
        } else {
            (value - min) / span
        }
    }

    fn unscale(value: f64, min: f64, max: f64) -> f64 {
        min + value * (max - min)
    }

    pub fn normalize_f(&self, value: f64) -> f64 {
        Self::scale(value, self.f_min, self.f_max)
    }

    pub fn normalize_s(&self, value: f64) -> f64 {
        Self::scale(value, self.s_min, self.s_max)
    }

    pub fn denormalize_f(&self, value: f64) -> f64 {
        Self::unscale(value, self.f_min, self.f_max)
    }

    pub fn denormalize_s(&self, value: f64) -> f64 {
        Self::unscale(value, self.s_min, self.s_max)
    }
}

/// Perturbation training set tied to a single source latent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset", into = "RawDataset")]
pub struct ProxyDataset {
    pub source_z: Vector,
    pub source_zt: StochasticCode,
    pub radius: f64,
    pub samples: Vec<ProxySample>,
    pub normalization: Normalization,
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    schema_version: u32,
    source_z: Vector,
    source_zt: StochasticCode,
    radius: f64,
    samples: Vec<ProxySample>,
    normalization: Normalization,
}

pub const DATASET_SCHEMA_VERSION: u32 = 1;

impl TryFrom<RawDataset> for ProxyDataset {
    type Error = Error;
    fn try_from(raw: RawDataset) -> Result<ProxyDataset> {
        if raw.schema_version != DATASET_SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "dataset schema version {} (expected {DATASET_SCHEMA_VERSION})",
                raw.schema_version
            )));
        }
        let ds = ProxyDataset {
            source_z: raw.source_z,
            source_zt: raw.source_zt,
            radius: raw.radius,
            samples: raw.samples,
            normalization: raw.normalization,
        };
        ds.validate()?;
        Ok(ds)
    }
}

impl From<ProxyDataset> for RawDataset {
    fn from(ds: ProxyDataset) -> RawDataset {
        RawDataset {
            schema_version: DATASET_SCHEMA_VERSION,
            source_z: ds.source_z,
            source_zt: ds.source_zt,
            radius: ds.radius,
            samples: ds.samples,
            normalization: ds.normalization,
        }
    }
}

impl ProxyDataset {
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::arg("proxy dataset has no samples"));
        }
        // slack of a few ulps: z_tilde - source recomputes the sampled offset
        let limit = self.radius * (1.0 + 1e-9) + 1e-12;
        for (i, s) in self.samples.iter().enumerate() {
            if s.z_tilde.len() != self.source_z.len() {
                return Err(Error::dim(format!("sample {i} latent width")));
            }
            if s.s_value < 0.0 {
                return Err(Error::arg(format!("sample {i} has negative distance")));
            }
            let offset = s.z_tilde.add_scaled(-1.0, &self.source_z)?;
            if offset.norm() > limit {
                return Err(Error::arg(format!(
                    "sample {i} lies outside the perturbation ball"
                )));
            }
        }
        Ok(())
    }
}

/// Builds the perturbation dataset: `count` ball samples plus the origin
/// sample appended last. Decoding and classification of distinct samples run
/// in parallel; results are ordered by sample index, so the dataset is a pure
/// function of `(rng seed, inputs)`.
#[allow(clippy::too_many_arguments)]
pub fn build_dataset(
    generator: &dyn Generator,
    classifier: &dyn Classifier,
    metric: DistanceMetric,
    z_sem: &Vector,
    z_t: StochasticCode,
    radius: f64,
    count: usize,
    rng: &mut Rng,
) -> Result<ProxyDataset> {
    if count == 0 {
        return Err(Error::arg("build_dataset: count must be >= 1"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::arg(format!(
            "build_dataset: radius must be > 0, got {radius}"
        )));
    }
    let source_image = generator.decode(z_sem, z_t)?;
    let deltas = sample_nball(rng, z_sem.len(), radius, count)?;

    let results: Vec<Result<ProxySample>> = deltas
        .par_iter()
        .map(|delta| {
            let z_tilde = z_sem.add_scaled(1.0, delta)?;
            let image = generator.decode(&z_tilde, z_t)?;
            let logit = classifier.classify(&image)?;
            let s_value = distance(metric, &source_image, &image)?;
            Ok(ProxySample {
                z_tilde,
                f_value: sigmoid(logit),
                s_value,
            })
        })
        .collect();

    let mut samples = Vec::with_capacity(count + 1);
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => {
                return Err(Error::SampleFailed {
                    index,
                    source: Box::new(e),
                })
            }
        }
    }

    let origin_logit = classifier.classify(&source_image)?;
    samples.push(ProxySample {
        z_tilde: z_sem.clone(),
        f_value: sigmoid(origin_logit),
        s_value: distance(metric, &source_image, &source_image)?,
    });

    let normalization = Normalization::from_targets(&samples);
    Ok(ProxyDataset {
        source_z: z_sem.clone(),
        source_zt: z_t,
        radius,
        samples,
        normalization,
    })
}

/// Proxy counterfactual loss `p_f(z) + lambda * p_s(z)`, in normalized target
/// units.
pub fn proxy_cf(net: &MlpNet, z: &Vector, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::arg(format!("lambda must be >= 0, got {lambda}")));
    }
    let out = net.forward(z)?;
    Ok(out[0] + lambda * out[1])
}
