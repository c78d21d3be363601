//! Uniform sampling from the n-dimensional ball.

use crate::error::{Error, Result};
use crate::numerics::linalg::Vector;
use crate::numerics::rng::Rng;

/// Draws `count` points uniformly from the closed ball of radius `r` in
/// `n` dimensions: a standard Gaussian is normalized onto the unit sphere and
/// scaled by `r * u^(1/n)` with `u` uniform on `(0, 1]`.
///
/// Returned vectors always satisfy `norm <= r` exactly; the rare rounding
/// overshoot of the normalization is clamped back onto the sphere.
pub fn sample_nball(rng: &mut Rng, n: usize, r: f64, count: usize) -> Result<Vec<Vector>> {
    if n == 0 {
        return Err(Error::arg("sample_nball: n must be >= 1"));
    }
    if count == 0 {
        return Err(Error::arg("sample_nball: count must be >= 1"));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::arg(format!("sample_nball: invalid radius {r}")));
    }

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let g = rng.gaussian_vec(n);
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let point = if r == 0.0 || gnorm == 0.0 {
            // radius zero forces the origin; a zero Gaussian draw (probability
            // ~0) maps there too rather than dividing by zero
            vec![0.0; n]
        } else {
            let u = rng.next_f64_open();
            let mut scale = r * u.powf(1.0 / n as f64) / gnorm;
            let mut point: Vec<f64> = g.iter().map(|x| x * scale).collect();
            let norm = point.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > r {
                scale = r / norm;
                for x in &mut point {
                    *x *= scale;
                }
            }
            point
        };
        out.push(Vector::new(point)?);
    }
    Ok(out)
}
