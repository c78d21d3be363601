//! Perceptual distance stand-ins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::worldmodel::Image;

const PATCH: usize = 8;

/// Pluggable image distance. Both metrics are symmetric, non-negative, and
/// zero on identical inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMetric {
    /// Mean squared pixel difference.
    #[serde(rename = "mean-squared")]
    MeanSquared,
    /// Mean over non-overlapping 8x8 patches of |difference in patch mean|
    /// plus |difference in patch standard deviation|. Coarser and more
    /// structure-aware than raw MSE.
    #[serde(rename = "patch-stat")]
    PatchStat,
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean-squared" => Ok(DistanceMetric::MeanSquared),
            "patch-stat" => Ok(DistanceMetric::PatchStat),
            other => Err(Error::arg(format!("unknown distance metric '{other}'"))),
        }
    }
}

pub fn distance(metric: DistanceMetric, a: &Image, b: &Image) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::dim(format!(
            "distance: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    match metric {
        DistanceMetric::MeanSquared => {
            let sum: f64 = a
                .pixels()
                .iter()
                .zip(b.pixels().iter())
                .map(|(x, y)| {
                    let d = f64::from(*x) - f64::from(*y);
                    d * d
                })
                .sum();
            Ok(sum / a.pixels().len() as f64)
        }
        DistanceMetric::PatchStat => Ok(patch_stat(a, b)),
    }
}

fn patch_moments(img: &Image, x0: usize, y0: usize, w: usize, h: usize) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            let v = f64::from(img.get(x, y));
            sum += v;
            sum2 += v * v;
        }
    }
    let count = (w * h) as f64;
    let mean = sum / count;
    let var = (sum2 / count - mean * mean).max(0.0);
    (mean, var.sqrt())
}

fn patch_stat(a: &Image, b: &Image) -> f64 {
    let mut total = 0.0;
    let mut patches = 0usize;
    let mut y0 = 0;
    while y0 < a.height() {
        let ph = PATCH.min(a.height() - y0);
        let mut x0 = 0;
        while x0 < a.width() {
            let pw = PATCH.min(a.width() - x0);
            let (ma, sa) = patch_moments(a, x0, y0, pw, ph);
            let (mb, sb) = patch_moments(b, x0, y0, pw, ph);
            total += (ma - mb).abs() + (sa - sb).abs();
            patches += 1;
            x0 += PATCH;
        }
        y0 += PATCH;
    }
    total / patches as f64
}
