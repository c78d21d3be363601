//! Counterfactual direction extraction and evaluation.
//!
//! A trained proxy yields two kinds of unit directions in latent space: the
//! gradient of the proxy loss at the source latent, and the eigenvectors of
//! its Hessian ranked by eigenvalue magnitude. Explanations come from a line
//! search along a direction over a uniform grid of step sizes; how well a
//! direction transfers is measured by its flip rate on held-out latents.
//!
//! Flip rates reported here are for the built-in synthetic benchmark. As a
//! point of reference, single directions of this kind discovered from one
//! source image reach flip rates around 96% on full-scale face-attribute
//! setups with a real diffusion autoencoder and classifier; that scale needs
//! pretrained checkpoints and is out of reach for this repository's tests.

mod search;

use serde::{Deserialize, Serialize};

pub use search::{
    best_of_directions, evaluate_direction, line_search, mean_abs_diff_map, report_from_results,
    sweep_direction, CFResult, DirectionReport, SweepPoint,
};

use crate::error::{Error, Result};
use crate::numerics::{sym_eigen, MlpNet, Vector};

/// Norm floor below which a gradient is considered degenerate.
pub const DEGENERATE_NORM: f64 = 1e-10;
/// Unit-norm tolerance on stored direction vectors.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-10;
/// Relative eigenvalue floor below which a Hessian direction is degenerate.
const DEGENERATE_EIGENVALUE_FACTOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionKind {
    #[serde(rename = "g")]
    Gradient,
    #[serde(rename = "h")]
    Hessian,
}

/// Unit direction in semantic latent space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDirection", into = "RawDirection")]
pub struct Direction {
    vector: Vector,
    kind: DirectionKind,
    eigen_rank: Option<usize>,
    eigenvalue: Option<f64>,
    source_id: String,
    lambda: f64,
}

#[derive(Serialize, Deserialize)]
struct RawDirection {
    vector: Vector,
    kind: DirectionKind,
    eigen_rank: Option<usize>,
    eigenvalue: Option<f64>,
    source_id: String,
    lambda: f64,
}

impl TryFrom<RawDirection> for Direction {
    type Error = Error;
    fn try_from(raw: RawDirection) -> Result<Direction> {
        Direction::new(
            raw.vector,
            raw.kind,
            raw.eigen_rank,
            raw.eigenvalue,
            raw.source_id,
            raw.lambda,
        )
    }
}

impl From<Direction> for RawDirection {
    fn from(d: Direction) -> RawDirection {
        RawDirection {
            vector: d.vector,
            kind: d.kind,
            eigen_rank: d.eigen_rank,
            eigenvalue: d.eigenvalue,
            source_id: d.source_id,
            lambda: d.lambda,
        }
    }
}

impl Direction {
    pub fn new(
        vector: Vector,
        kind: DirectionKind,
        eigen_rank: Option<usize>,
        eigenvalue: Option<f64>,
        source_id: String,
        lambda: f64,
    ) -> Result<Direction> {
        if (vector.norm() - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::arg(format!(
                "direction vector norm {} is not 1",
                vector.norm()
            )));
        }
        let has_eigen = eigen_rank.is_some() && eigenvalue.is_some();
        let no_eigen = eigen_rank.is_none() && eigenvalue.is_none();
        match kind {
            DirectionKind::Gradient if !no_eigen => {
                return Err(Error::arg("gradient direction must not carry eigen data"))
            }
            DirectionKind::Hessian if !has_eigen => {
                return Err(Error::arg(
                    "hessian direction must carry rank and eigenvalue",
                ))
            }
            _ => {}
        }
        Ok(Direction {
            vector,
            kind,
            eigen_rank,
            eigenvalue,
            source_id,
            lambda,
        })
    }

    pub fn vector(&self) -> &Vector {
        &self.vector
    }

    pub fn kind(&self) -> DirectionKind {
        self.kind
    }

    pub fn eigen_rank(&self) -> Option<usize> {
        self.eigen_rank
    }

    pub fn eigenvalue(&self) -> Option<f64> {
        self.eigenvalue
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Short identifier used in reports and file names: `g` or `h_NN`.
    pub fn label(&self) -> String {
        match self.kind {
            DirectionKind::Gradient => "g".to_string(),
            DirectionKind::Hessian => format!("h_{:02}", self.eigen_rank.unwrap_or(0)),
        }
    }
}

/// Versioned on-disk wrapper for a [`Direction`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionFile {
    pub schema_version: u32,
    pub direction: Direction,
}

pub const DIRECTION_SCHEMA_VERSION: u32 = 1;

impl DirectionFile {
    pub fn wrap(direction: Direction) -> DirectionFile {
        DirectionFile {
            schema_version: DIRECTION_SCHEMA_VERSION,
            direction,
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Direction> {
        let file: DirectionFile = crate::textio::read_json_file(path)?;
        if file.schema_version != DIRECTION_SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "{}: direction schema version {} (expected {DIRECTION_SCHEMA_VERSION})",
                path.display(),
                file.schema_version
            )));
        }
        Ok(file.direction)
    }

    pub fn save(path: &std::path::Path, direction: &Direction) -> Result<()> {
        crate::textio::write_json_file(path, &DirectionFile::wrap(direction.clone()))
    }
}

/// Uniform grid of line-search step sizes spanning zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct AlphaGrid {
    alpha_min: f64,
    alpha_max: f64,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    alpha_min: f64,
    alpha_max: f64,
    count: usize,
}

impl TryFrom<RawGrid> for AlphaGrid {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<AlphaGrid> {
        AlphaGrid::new(raw.alpha_min, raw.alpha_max, raw.count)
    }
}

impl From<AlphaGrid> for RawGrid {
    fn from(g: AlphaGrid) -> RawGrid {
        RawGrid {
            alpha_min: g.alpha_min,
            alpha_max: g.alpha_max,
            count: g.count,
        }
    }
}

impl AlphaGrid {
    pub fn new(alpha_min: f64, alpha_max: f64, count: usize) -> Result<AlphaGrid> {
        if !(alpha_min.is_finite() && alpha_max.is_finite()) {
            return Err(Error::arg("grid bounds must be finite"));
        }
        if !(alpha_min < 0.0 && 0.0 < alpha_max) {
            return Err(Error::arg(format!(
                "grid must straddle zero: [{alpha_min}, {alpha_max}]"
            )));
        }
        if count < 3 {
            return Err(Error::arg(format!(
                "grid needs at least 3 values, got {count}"
            )));
        }
        Ok(AlphaGrid {
            alpha_min,
            alpha_max,
            count,
        })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, count: usize) -> Result<AlphaGrid> {
        AlphaGrid::new(-half_width, half_width, count)
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha_min
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// The `count` uniformly spaced values, with zero inserted when the
    /// spacing misses it, sorted ascending.
    pub fn values(&self) -> Vec<f64> {
        let step = (self.alpha_max - self.alpha_min) / (self.count - 1) as f64;
        let mut values: Vec<f64> = (0..self.count)
            .map(|i| self.alpha_min + i as f64 * step)
            .collect();
        if !values.contains(&0.0) {
            values.push(0.0);
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        values
    }

    /// Scales both bounds, keeping the count.
    pub fn scaled(&self, factor: f64) -> Result<AlphaGrid> {
        AlphaGrid::new(self.alpha_min * factor, self.alpha_max * factor, self.count)
    }
}

/// Finite-difference stride for the proxy Hessian at `z`.
pub fn hessian_step(z: &Vector) -> f64 {
    1e-3 * z.inf_norm().max(1.0)
}

/// Gradient direction of the proxy loss at the source latent, unit-normed.
/// The raw gradient orientation is kept: descent lives on the negative side
/// of the step grid.
pub fn g_direction(
    net: &MlpNet,
    z_sem: &Vector,
    lambda: f64,
    source_id: &str,
) -> Result<Direction> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::arg(format!("lambda must be >= 0, got {lambda}")));
    }
    let grad = net.grad_input(z_sem, (1.0, lambda))?;
    let unit = grad.normalized(DEGENERATE_NORM)?;
    Direction::new(
        unit,
        DirectionKind::Gradient,
        None,
        None,
        source_id.to_string(),
        lambda,
    )
}

/// Top-`k` Hessian eigendirections of the proxy loss at the source latent,
/// ranked by eigenvalue magnitude (rank 1 is the largest).
pub fn h_directions(
    net: &MlpNet,
    z_sem: &Vector,
    lambda: f64,
    k: usize,
    source_id: &str,
) -> Result<Vec<Direction>> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::arg(format!("lambda must be >= 0, got {lambda}")));
    }
    if k == 0 || k > z_sem.len() {
        return Err(Error::arg(format!(
            "h-direction count must be in 1..={}, got {k}",
            z_sem.len()
        )));
    }
    let hessian = net.hessian_input(z_sem, (1.0, lambda), hessian_step(z_sem))?;
    let (eigenvalues, eigenvectors) = sym_eigen(&hessian)?;
    let floor = DEGENERATE_EIGENVALUE_FACTOR * hessian.frobenius_norm().max(1.0);
    let mut out = Vec::with_capacity(k);
    for rank in 1..=k {
        let value = eigenvalues[rank - 1];
        if value.abs() <= floor {
            return Err(Error::DegenerateDirection(format!(
                "hessian eigenvalue {value:e} at rank {rank} is numerically zero"
            )));
        }
        out.push(Direction::new(
            eigenvectors[rank - 1].clone(),
            DirectionKind::Hessian,
            Some(rank),
            Some(value),
            source_id.to_string(),
            lambda,
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Activation, Layer, Rng};
    use crate::proxy::proxy_cf;

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(AlphaGrid::new(0.0, 1.0, 8).is_err());
        assert!(AlphaGrid::new(-1.0, -0.5, 8).is_err());
        assert!(AlphaGrid::new(-1.0, 1.0, 2).is_err());
        assert!(AlphaGrid::new(f64::NAN, 1.0, 8).is_err());
    }

    #[test]
    fn grid_always_contains_zero() {
        // even count misses zero with symmetric bounds
        let g = AlphaGrid::symmetric(4.0, 64).unwrap();
        let values = g.values();
        assert_eq!(values.len(), 65);
        assert!(values.contains(&0.0));
        assert!(values.windows(2).all(|w| w[0] < w[1]));

        // odd count hits zero exactly, nothing added
        let g = AlphaGrid::symmetric(4.0, 65).unwrap();
        assert_eq!(g.values().len(), 65);
        assert!(g.values().contains(&0.0));
    }

    #[test]
    fn zero_proxy_yields_degenerate_g() {
        let net = MlpNet::new(
            vec![Layer::zeros(2, 4).unwrap()],
            Activation::Sigmoid,
            [Activation::Sigmoid; 2],
        )
        .unwrap();
        let z = Vector::zeros(4).unwrap();
        assert!(matches!(
            g_direction(&net, &z, 1.0, "s"),
            Err(Error::DegenerateDirection(_))
        ));
    }

    #[test]
    fn g_direction_parallels_finite_difference_of_proxy_cf() {
        let mut rng = Rng::new(33);
        let net = MlpNet::init(8, &[16, 12, 8, 4], &mut rng).unwrap();
        let z = Vector::new(rng.gaussian_vec(8)).unwrap();
        let lambda = 0.7;
        let d = g_direction(&net, &z, lambda, "s").unwrap();
        assert!((d.vector().norm() - 1.0).abs() <= UNIT_NORM_TOLERANCE);

        let step = 1e-6;
        let mut fd = Vec::new();
        let mut p = z.as_slice().to_vec();
        for i in 0..8 {
            let b = p[i];
            p[i] = b + step;
            let plus = proxy_cf(&net, &Vector::new(p.clone()).unwrap(), lambda).unwrap();
            p[i] = b - step;
            let minus = proxy_cf(&net, &Vector::new(p.clone()).unwrap(), lambda).unwrap();
            p[i] = b;
            fd.push((plus - minus) / (2.0 * step));
        }
        let fd = Vector::new(fd).unwrap().normalized(1e-15).unwrap();
        assert!(
            d.vector().dot(&fd) >= 0.999,
            "cosine {}",
            d.vector().dot(&fd)
        );
    }

    #[test]
    fn linear_proxy_yields_degenerate_h() {
        let l = Layer::new(2, 3, vec![1.0, 0.0, 2.0, 0.5, 1.0, -1.0], vec![0.0; 2]).unwrap();
        let net = MlpNet::new(vec![l], Activation::Identity, [Activation::Identity; 2]).unwrap();
        let z = Vector::zeros(3).unwrap();
        assert!(matches!(
            h_directions(&net, &z, 1.0, 2, "s"),
            Err(Error::DegenerateDirection(_))
        ));
    }

    #[test]
    fn h_directions_are_orthogonal_and_magnitude_sorted() {
        let mut rng = Rng::new(34);
        let net = MlpNet::init(10, &[24, 16, 12, 8], &mut rng).unwrap();
        let z = Vector::new(rng.gaussian_vec(10)).unwrap();
        let hs = h_directions(&net, &z, 1.0, 6, "s").unwrap();
        assert_eq!(hs.len(), 6);
        for (i, hi) in hs.iter().enumerate() {
            assert_eq!(hi.eigen_rank(), Some(i + 1));
            for hj in hs.iter().skip(i + 1) {
                assert!(hi.vector().dot(hj.vector()).abs() <= 1e-6);
            }
        }
        for pair in hs.windows(2) {
            assert!(pair[0].eigenvalue().unwrap().abs() >= pair[1].eigenvalue().unwrap().abs());
        }
    }

    #[test]
    fn direction_invariants_enforced() {
        let v = Vector::new(vec![1.0, 0.0]).unwrap();
        // eigen data on a gradient direction
        assert!(Direction::new(
            v.clone(),
            DirectionKind::Gradient,
            Some(1),
            Some(2.0),
            "s".into(),
            1.0
        )
        .is_err());
        // missing eigen data on a hessian direction
        assert!(Direction::new(
            v.clone(),
            DirectionKind::Hessian,
            None,
            None,
            "s".into(),
            1.0
        )
        .is_err());
        // non-unit vector
        let long = Vector::new(vec![2.0, 0.0]).unwrap();
        assert!(
            Direction::new(long, DirectionKind::Gradient, None, None, "s".into(), 1.0).is_err()
        );
    }

    #[test]
    fn labels() {
        let v = Vector::new(vec![0.0, 1.0]).unwrap();
        let g = Direction::new(
            v.clone(),
            DirectionKind::Gradient,
            None,
            None,
            "s".into(),
            1.0,
        )
        .unwrap();
        assert_eq!(g.label(), "g");
        let h = Direction::new(
            v,
            DirectionKind::Hessian,
            Some(3),
            Some(-0.5),
            "s".into(),
            1.0,
        )
        .unwrap();
        assert_eq!(h.label(), "h_03");
    }

    #[test]
    fn direction_file_round_trip_and_version_check() {
        let v = Vector::new(vec![0.6, 0.8]).unwrap();
        let d = Direction::new(
            v,
            DirectionKind::Hessian,
            Some(2),
            Some(1.5),
            "s".into(),
            0.5,
        )
        .unwrap();
        let dir = std::env::temp_dir().join(format!("cfdir-dirfile-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("d.json");
        DirectionFile::save(&path, &d).unwrap();
        assert_eq!(DirectionFile::load(&path).unwrap(), d);

        // future schema versions are refused
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"schema_version\":1", "\"schema_version\":9");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(DirectionFile::load(&path), Err(Error::Parse(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
