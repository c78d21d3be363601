//! Black-box attribution along latent paths.
//!
//! Moving along a counterfactual direction far enough produces a baseline:
//! an image the classifier scores with probability near zero. Attribution of
//! each pixel integrates finite-difference quotients of the classifier logit
//! along the decoded path from the factual image to that baseline, scaled by
//! the pixel's total change. Steps where a pixel does not move contribute
//! zero, which keeps the map free of NaN by construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::{sweep_direction, AlphaGrid, Direction};
use crate::error::{Error, Result};
use crate::numerics::{sigmoid, Vector};
use crate::worldmodel::{Classifier, Generator, Image, StochasticCode};

/// Decoded trajectory from the factual latent (`alpha = 0`) towards a
/// baseline, with the classifier logit at every step.
#[derive(Clone, Debug)]
pub struct LatentPath {
    pub direction_id: String,
    pub alphas: Vec<f64>,
    pub images: Vec<Image>,
    pub logits: Vec<f64>,
}

impl LatentPath {
    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    fn validate(&self) -> Result<()> {
        let m = self.alphas.len();
        if m < 2 {
            return Err(Error::arg(format!("latent path needs >= 2 steps, got {m}")));
        }
        if self.images.len() != m || self.logits.len() != m {
            return Err(Error::dim("latent path arrays disagree in length"));
        }
        if self.alphas[0] != 0.0 {
            return Err(Error::arg("latent path must start at alpha = 0"));
        }
        let increasing = self.alphas.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.alphas.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return Err(Error::arg("latent path alphas must be strictly monotone"));
        }
        Ok(())
    }
}

/// Baseline image: the point along a direction where the classifier's
/// predicted probability drops to (approximately) zero.
#[derive(Clone, Debug)]
pub struct Baseline {
    pub image: Image,
    pub alpha: f64,
    pub probability: f64,
}

/// Scans the step grid along `direction` and returns the grid point with the
/// lowest predicted probability, provided it reaches `tau`; ties prefer the
/// smaller step magnitude. The factual latent must be positive-class.
pub fn find_baseline(
    generator: &dyn Generator,
    classifier: &dyn Classifier,
    z_sem: &Vector,
    z_t: StochasticCode,
    direction: &Direction,
    grid: &AlphaGrid,
    tau: f64,
) -> Result<Baseline> {
    if !(tau.is_finite() && tau > 0.0 && tau < 1.0) {
        return Err(Error::arg(format!(
            "baseline threshold must be in (0,1), got {tau}"
        )));
    }
    let factual_logit = classifier.classify(&generator.decode(z_sem, z_t)?)?;
    if factual_logit <= 0.0 {
        return Err(Error::SourceNotPositive(factual_logit));
    }
    let points = sweep_direction(
        generator,
        classifier,
        z_sem,
        z_t,
        direction.vector(),
        &grid.values(),
    )?;
    let best = points
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            (sigmoid(a.logit), a.alpha.abs(), *ia)
                .partial_cmp(&(sigmoid(b.logit), b.alpha.abs(), *ib))
                .unwrap()
        })
        .expect("grid is non-empty");
    let (_, point) = best;
    let probability = sigmoid(point.logit);
    if probability > tau {
        return Err(Error::NoBaselineFound {
            probability,
            alpha: point.alpha,
            tau,
        });
    }
    Ok(Baseline {
        image: point.image,
        alpha: point.alpha,
        probability,
    })
}

/// Decodes `m` uniformly spaced steps from `alpha = 0` to `alpha_baseline`.
pub fn latent_path(
    generator: &dyn Generator,
    classifier: &dyn Classifier,
    z_sem: &Vector,
    z_t: StochasticCode,
    direction: &Direction,
    alpha_baseline: f64,
    m: usize,
) -> Result<LatentPath> {
    if m < 2 {
        return Err(Error::arg(format!("path needs >= 2 steps, got {m}")));
    }
    if alpha_baseline == 0.0 || !alpha_baseline.is_finite() {
        return Err(Error::arg(format!(
            "baseline step must be nonzero and finite, got {alpha_baseline}"
        )));
    }
    let alphas: Vec<f64> = (0..m)
        .map(|k| alpha_baseline * k as f64 / (m - 1) as f64)
        .collect();
    let points = sweep_direction(
        generator,
        classifier,
        z_sem,
        z_t,
        direction.vector(),
        &alphas,
    )?;
    let mut images = Vec::with_capacity(m);
    let mut logits = Vec::with_capacity(m);
    for p in points {
        images.push(p.image);
        logits.push(p.logit);
    }
    let path = LatentPath {
        direction_id: direction.label(),
        alphas,
        images,
        logits,
    };
    path.validate()?;
    Ok(path)
}

/// Signed per-pixel attribution scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct AttributionMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    w: usize,
    h: usize,
    values: Vec<f64>,
}

impl TryFrom<RawMap> for AttributionMap {
    type Error = Error;
    fn try_from(raw: RawMap) -> Result<AttributionMap> {
        AttributionMap::new(raw.w, raw.h, raw.values)
    }
}

impl From<AttributionMap> for RawMap {
    fn from(m: AttributionMap) -> RawMap {
        RawMap {
            w: m.width,
            h: m.height,
            values: m.values,
        }
    }
}

impl AttributionMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<AttributionMap> {
        if values.len() != width * height {
            return Err(Error::dim(format!(
                "attribution map: expected {} values, got {}",
                width * height,
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("attribution value {i}")));
            }
        }
        Ok(AttributionMap {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Magnitude rendering for export: `|value| / max |value|`, all zeros when
    /// the map is identically zero.
    pub fn magnitude_image(&self) -> Image {
        let max = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let pixels = if max == 0.0 {
            vec![0.0f32; self.values.len()]
        } else {
            self.values.iter().map(|v| (v.abs() / max) as f32).collect()
        };
        Image::new(self.width, self.height, pixels).expect("magnitudes are in [0,1]")
    }
}

/// Core accumulation shared by the latent-path and pixel-path variants:
/// per pixel, the mean over consecutive image pairs of
/// `(logit difference) / (pixel difference)`, with the quotient forced to
/// zero when the pixel moved less than `eps_px`, scaled by the pixel's total
/// change `x - x_prime`.
fn integrate_quotients(
    images: &[Image],
    logits: &[f64],
    x: &Image,
    x_prime: &Image,
    eps_px: f64,
) -> Result<AttributionMap> {
    let (w, h) = (x.width(), x.height());
    let segments = images.len() - 1;
    let mut acc = vec![0.0f64; w * h];
    for k in 0..segments {
        let df = logits[k + 1] - logits[k];
        let a = images[k].pixels();
        let b = images[k + 1].pixels();
        for (slot, (pa, pb)) in acc.iter_mut().zip(a.iter().zip(b.iter())) {
            let dpx = f64::from(*pb) - f64::from(*pa);
            if dpx.abs() >= eps_px {
                *slot += df / dpx;
            }
        }
    }
    let values = acc
        .into_iter()
        .zip(x.pixels().iter().zip(x_prime.pixels().iter()))
        .map(|(sum, (xi, xpi))| {
            let prefactor = (f64::from(*xi) - f64::from(*xpi)) / segments as f64;
            prefactor * sum
        })
        .collect();
    AttributionMap::new(w, h, values)
}

/// Latent-path attribution: integrates classifier logit differences along the
/// decoded trajectory from the factual image `x` to the baseline `x_prime`.
///
/// Pixels equal in `x` and `x_prime` get exactly zero; steps where a pixel
/// moved less than `eps_px` contribute zero to its quotient sum.
pub fn bb_lig(
    path: &LatentPath,
    x: &Image,
    x_prime: &Image,
    eps_px: f64,
) -> Result<AttributionMap> {
    path.validate()?;
    if !(eps_px.is_finite() && eps_px > 0.0) {
        return Err(Error::arg(format!("eps_px must be > 0, got {eps_px}")));
    }
    if !(x.same_dims(x_prime) && x.same_dims(&path.images[0])) {
        return Err(Error::dim("bb_lig: image dimensions differ"));
    }
    integrate_quotients(&path.images, &path.logits, x, x_prime, eps_px)
}

/// Black-baseline comparison: the same integration over a straight pixel-space
/// path from the all-zero image to `x`, classifying each interpolant.
pub fn bb_ig(
    x: &Image,
    classifier: &dyn Classifier,
    m: usize,
    eps_px: f64,
) -> Result<AttributionMap> {
    if m < 2 {
        return Err(Error::arg(format!("bb_ig needs m >= 2, got {m}")));
    }
    if !(eps_px.is_finite() && eps_px > 0.0) {
        return Err(Error::arg(format!("eps_px must be > 0, got {eps_px}")));
    }
    let black = Image::constant(x.width(), x.height(), 0.0)?;
    let images: Vec<Image> = (0..m)
        .map(|k| {
            let t = k as f64 / (m - 1) as f64;
            let pixels = x
                .pixels()
                .iter()
                .map(|p| (f64::from(*p) * t) as f32)
                .collect();
            Image::new(x.width(), x.height(), pixels)
        })
        .collect::<Result<_>>()?;
    let logits: Vec<f64> = images
        .par_iter()
        .map(|img| classifier.classify(img))
        .collect::<Result<_>>()?;
    integrate_quotients(&images, &logits, x, &black, eps_px)
}
