//! Built-in synthetic generator and classifier.
//!
//! The generator renders a deterministic grayscale scene from a flat latent
//! vector: the first six dimensions place and shape one soft ellipse, the next
//! six a second one, and the remaining dimensions weight a fixed bank of
//! low-frequency cosine background patterns. The stochastic code seeds
//! reproducible per-pixel noise of bounded amplitude. The classifier scores
//! the mean intensity inside a fixed disk, so its decision depends on the
//! scene in a smooth, spatially localized way.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Rng, Vector};
use crate::worldmodel::{Classifier, Generator, Image, StochasticCode};

pub const ELLIPSE_DIMS: usize = 6;
pub const BACKGROUND_OFFSET: usize = 2 * ELLIPSE_DIMS;

/// Value ranges the ellipse latents are squashed into.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseRanges {
    /// Center wanders `0.5 +- span * tanh(z)` in fractional coordinates.
    pub center_span: f64,
    pub axis_min: f64,
    pub axis_max: f64,
    pub intensity_min: f64,
    pub intensity_max: f64,
    /// Rotation is `span * tanh(z)` radians.
    pub rotation_span: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub latent_dim: usize,
    pub width: usize,
    pub height: usize,
    pub base_level: f64,
    pub background_gain: f64,
    pub background_basis_count: usize,
    pub noise_amplitude: f64,
    pub ellipse: EllipseRanges,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim < ELLIPSE_DIMS {
            return Err(Error::arg(format!(
                "latent_dim must be >= {ELLIPSE_DIMS}, got {}",
                self.latent_dim
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::arg("image dimensions must be >= 1"));
        }
        if !(0.0..=0.1).contains(&self.noise_amplitude) {
            return Err(Error::arg(format!(
                "noise_amplitude must be in [0, 0.1], got {}",
                self.noise_amplitude
            )));
        }
        let e = &self.ellipse;
        if !(e.axis_min > 0.0 && e.axis_max >= e.axis_min) {
            return Err(Error::arg("ellipse axis range is invalid"));
        }
        if e.intensity_max < e.intensity_min {
            return Err(Error::arg("ellipse intensity range is invalid"));
        }
        Ok(())
    }
}

#[inline]
fn squash(z: f64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * 0.5 * (z.tanh() + 1.0)
}

struct EllipseParams {
    cx: f64,
    cy: f64,
    inv_ax2: f64,
    inv_ay2: f64,
    intensity: f64,
    cos_t: f64,
    sin_t: f64,
}

impl EllipseParams {
    fn from_latents(z: &[f64], ranges: &EllipseRanges) -> EllipseParams {
        let ax = squash(z[2], ranges.axis_min, ranges.axis_max);
        let ay = squash(z[3], ranges.axis_min, ranges.axis_max);
        let theta = ranges.rotation_span * z[5].tanh();
        EllipseParams {
            cx: 0.5 + ranges.center_span * z[0].tanh(),
            cy: 0.5 + ranges.center_span * z[1].tanh(),
            inv_ax2: 1.0 / (ax * ax),
            inv_ay2: 1.0 / (ay * ay),
            intensity: squash(z[4], ranges.intensity_min, ranges.intensity_max),
            cos_t: theta.cos(),
            sin_t: theta.sin(),
        }
    }

    #[inline]
    fn eval(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = dx * self.cos_t + dy * self.sin_t;
        let v = -dx * self.sin_t + dy * self.cos_t;
        self.intensity * (-(u * u * self.inv_ax2 + v * v * self.inv_ay2)).exp()
    }
}

/// Deterministic renderer; the heavy cosine tables are built once.
pub struct SyntheticGenerator {
    spec: GeneratorSpec,
    // per-basis pixel tables, row-major like the image
    basis: Vec<Vec<f64>>,
}

/// Frequency pairs ordered by total frequency, lowest first. Index 0 is the
/// constant pattern.
fn basis_frequencies(count: usize) -> Vec<(usize, usize)> {
    let mut freqs = Vec::with_capacity(count);
    let mut total = 0;
    while freqs.len() < count {
        for kx in 0..=total {
            if freqs.len() == count {
                break;
            }
            freqs.push((kx, total - kx));
        }
        total += 1;
    }
    freqs
}

impl SyntheticGenerator {
    pub fn new(spec: GeneratorSpec) -> Result<SyntheticGenerator> {
        spec.validate()?;
        let (w, h) = (spec.width, spec.height);
        let basis = basis_frequencies(spec.background_basis_count)
            .into_iter()
            .map(|(kx, ky)| {
                let mut table = Vec::with_capacity(w * h);
                for py in 0..h {
                    let y = (py as f64 + 0.5) / h as f64;
                    for px in 0..w {
                        let x = (px as f64 + 0.5) / w as f64;
                        table.push((std::f64::consts::PI * (kx as f64 * x + ky as f64 * y)).cos());
                    }
                }
                table
            })
            .collect();
        Ok(SyntheticGenerator { spec, basis })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    fn render(&self, z_sem: &Vector, z_t: StochasticCode) -> Result<Image> {
        let spec = &self.spec;
        if z_sem.len() != spec.latent_dim {
            return Err(Error::dim(format!(
                "generator expects latent width {}, got {}",
                spec.latent_dim,
                z_sem.len()
            )));
        }
        let z = z_sem.as_slice();
        // missing trailing dimensions behave like zero latents
        let dim = |i: usize| -> f64 {
            if i < z.len() {
                z[i]
            } else {
                0.0
            }
        };
        let e1: Vec<f64> = (0..ELLIPSE_DIMS).map(dim).collect();
        let e2: Vec<f64> = (ELLIPSE_DIMS..2 * ELLIPSE_DIMS).map(dim).collect();
        let ellipses = [
            EllipseParams::from_latents(&e1, &spec.ellipse),
            EllipseParams::from_latents(&e2, &spec.ellipse),
        ];
        let weights: Vec<f64> = (0..spec.background_basis_count)
            .map(|j| dim(BACKGROUND_OFFSET + j))
            .collect();

        let (w, h) = (spec.width, spec.height);
        let mut noise = Rng::new(z_t.seed);
        let mut pixels = Vec::with_capacity(w * h);
        for py in 0..h {
            let y = (py as f64 + 0.5) / h as f64;
            for px in 0..w {
                let x = (px as f64 + 0.5) / w as f64;
                let idx = py * w + px;
                let mut value = spec.base_level;
                for (wj, table) in weights.iter().zip(self.basis.iter()) {
                    value += spec.background_gain * wj * table[idx];
                }
                for e in &ellipses {
                    value += e.eval(x, y);
                }
                if spec.noise_amplitude > 0.0 {
                    value += spec.noise_amplitude * (2.0 * noise.next_f64() - 1.0);
                } else {
                    // keep the stream position independent of the amplitude
                    let _ = noise.next_f64();
                }
                pixels.push(value.clamp(0.0, 1.0) as f32);
            }
        }
        Image::new(w, h, pixels)
    }
}

impl Generator for SyntheticGenerator {
    fn latent_dim(&self) -> usize {
        self.spec.latent_dim
    }

    fn decode(&self, z_sem: &Vector, z_t: StochasticCode) -> Result<Image> {
        self.render(z_sem, z_t)
    }
}

/// Disk-mean classifier: `logit = gain * (mean intensity in disk - threshold)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub gain: f64,
    pub threshold: f64,
}

impl ClassifierSpec {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::arg(format!("gain must be > 0, got {}", self.gain)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::arg(format!(
                "threshold must be in (0, 1), got {}",
                self.threshold
            )));
        }
        let inside = self.center_x - self.radius >= 0.0
            && self.center_y - self.radius >= 0.0
            && self.center_x + self.radius <= width as f64
            && self.center_y + self.radius <= height as f64;
        if !inside {
            return Err(Error::arg("classifier disk extends outside the image"));
        }
        Ok(())
    }

    pub fn contains(&self, px: usize, py: usize) -> bool {
        let dx = px as f64 + 0.5 - self.center_x;
        let dy = py as f64 + 0.5 - self.center_y;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

pub struct SyntheticClassifier {
    spec: ClassifierSpec,
    width: usize,
    height: usize,
    disk: Vec<usize>,
}

impl SyntheticClassifier {
    pub fn new(spec: ClassifierSpec, width: usize, height: usize) -> Result<SyntheticClassifier> {
        spec.validate(width, height)?;
        let mut disk = Vec::new();
        for py in 0..height {
            for px in 0..width {
                if spec.contains(px, py) {
                    disk.push(py * width + px);
                }
            }
        }
        if disk.is_empty() {
            return Err(Error::arg("classifier disk covers no pixels"));
        }
        Ok(SyntheticClassifier {
            spec,
            width,
            height,
            disk,
        })
    }

    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    pub fn disk_pixel_count(&self) -> usize {
        self.disk.len()
    }
}

impl Classifier for SyntheticClassifier {
    fn classify(&self, image: &Image) -> Result<f64> {
        if image.width() != self.width || image.height() != self.height {
            return Err(Error::dim(format!(
                "classifier expects {}x{}, got {}x{}",
                self.width,
                self.height,
                image.width(),
                image.height()
            )));
        }
        let px = image.pixels();
        let sum: f64 = self.disk.iter().map(|&i| f64::from(px[i])).sum();
        let mean = sum / self.disk.len() as f64;
        Ok(self.spec.gain * (mean - self.spec.threshold))
    }
}
