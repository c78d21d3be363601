//! Line search, direction evaluation, and explanation selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::{AlphaGrid, Direction};
use crate::error::{Error, Result};
use crate::numerics::{sigmoid, Vector};
use crate::worldmodel::{
    distance, Classifier, DistanceMetric, Generator, Image, LatentRecord, StochasticCode,
};

/// One decoded grid point of a direction sweep.
pub struct SweepPoint {
    pub alpha: f64,
    pub image: Image,
    pub logit: f64,
}

/// Decodes `z + alpha * vector` and classifies it for every `alpha`, as one
/// parallel batch. Order follows `alphas`.
pub fn sweep_direction(
    generator: &dyn Generator,
    classifier: &dyn Classifier,
    z_sem: &Vector,
    z_t: StochasticCode,
    vector: &Vector,
    alphas: &[f64],
) -> Result<Vec<SweepPoint>> {
    let points: Vec<Result<SweepPoint>> = alphas
        .par_iter()
        .map(|&alpha| {
            let z = z_sem.add_scaled(alpha, vector)?;
            let image = generator.decode(&z, z_t)?;
            let logit = classifier.classify(&image)?;
            Ok(SweepPoint {
                alpha,
                image,
                logit,
            })
        })
        .collect();
    points.into_iter().collect()
}

/// Outcome of one line search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CFResult {
    pub latent_id: String,
    pub direction_id: String,
    pub alpha: f64,
    pub image: Image,
    pub logit_before: f64,
    pub logit_after: f64,
    pub distance: f64,
    pub cf_loss: f64,
    pub flipped: bool,
}

impl CFResult {
    /// `flipped` must mirror the logit signs; checked on construction and
    /// after deserialization by callers that care.
    pub fn check_flip_soundness(&self) -> Result<()> {
        let flipped = (self.logit_before > 0.0) != (self.logit_after > 0.0);
        if flipped != self.flipped {
            return Err(Error::Verification(format!(
                "flip flag {} disagrees with logits {} -> {}",
                self.flipped, self.logit_before, self.logit_after
            )));
        }
        Ok(())
    }
}

/// Counterfactual loss on the probability scale.
fn cf_loss(logit: f64, lambda: f64, dist: f64) -> f64 {
    sigmoid(logit) + lambda * dist
}

struct Candidate {
    index: usize,
    alpha: f64,
    cf_loss: f64,
}

/// Argmin by loss, then smaller step magnitude, then grid order.
fn better(a: &Candidate, b: &Candidate) -> bool {
    (a.cf_loss, a.alpha.abs(), a.index) < (b.cf_loss, b.alpha.abs(), b.index)
}

/// Line search over an explicit step vector; the public entry point is
/// [`line_search`]. Exposed separately so callers can search along unnormed
/// vectors.
#[allow(clippy::too_many_arguments)]
pub fn line_search_along(
    generator: &dyn Generator,
    classifier: &dyn Classifier,
    metric: DistanceMetric,
    z_sem: &Vector,
    z_t: StochasticCode,
    vector: &Vector,
    grid: &AlphaGrid,
    lambda: f64,
    latent_id: &str,
    direction_id: &str,
) -> Result<CFResult> {
    let source_image = generator.decode(z_sem, z_t)?;
    let logit_before = classifier.classify(&source_image)?;
    if logit_before <= 0.0 {
        return Err(Error::SourceNotPositive(logit_before));
    }

    let points = sweep_direction(generator, classifier, z_sem, z_t, vector, &grid.values())?;
    let scored: Vec<(SweepPoint, f64, f64, bool)> = points
        .into_iter()
        .map(|p| {
            let dist = distance(metric, &source_image, &p.image)?;
            let loss = cf_loss(p.logit, lambda, dist);
            let flipped = p.logit <= 0.0;
            Ok((p, dist, loss, flipped))
        })
        .collect::<Result<_>>()?;

    let pick = |flipped_only: bool| -> Option<usize> {
        let mut best: Option<Candidate> = None;
        for (index, (p, _, loss, flipped)) in scored.iter().enumerate() {
            if flipped_only && !flipped {
                continue;
            }
            let c = Candidate {
                index,
                alpha: p.alpha,
                cf_loss: *loss,
            };
            if best.as_ref().is_none_or(|b| better(&c, b)) {
                best = Some(c);
            }
        }
        best.map(|c| c.index)
    };

    let (chosen, flipped) = match pick(true) {
        Some(i) => (i, true),
        None => (pick(false).expect("grid is non-empty"), false),
    };
    let (point, dist, loss, _) = &scored[chosen];
    Ok(CFResult {
        latent_id: latent_id.to_string(),
        direction_id: direction_id.to_string(),
        alpha: point.alpha,
        image: point.image.clone(),
        logit_before,
        logit_after: point.logit,
        distance: *dist,
        cf_loss: *loss,
        flipped,
    })
}

/// Line search along a direction: decodes every grid step, scores the
/// counterfactual loss, and picks the lowest-loss flipped step (smallest
/// step magnitude on ties). When no grid step flips the classifier the
/// overall loss minimizer is returned with `flipped = false`.
///
/// Requires the source latent to decode to a positive-class image.
#[allow(clippy::too_many_arguments)]
pub fn line_search(
    generator: &dyn Generator,
    classifier: &dyn Classifier,
    metric: DistanceMetric,
    z_sem: &Vector,
    z_t: StochasticCode,
    direction: &Direction,
    grid: &AlphaGrid,
    lambda: f64,
    latent_id: &str,
) -> Result<CFResult> {
    line_search_along(
        generator,
        classifier,
        metric,
        z_sem,
        z_t,
        direction.vector(),
        grid,
        lambda,
        latent_id,
        &direction.label(),
    )
}

/// Per-direction aggregate over a latent set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub direction_id: String,
    /// Flips divided by evaluated, exactly.
    pub flip_rate: f64,
    pub flips: usize,
    pub evaluated: usize,
    /// Mean distance across flipped results; absent when nothing flipped.
    pub mean_flipped_distance: Option<f64>,
    /// Mean |alpha| across all evaluated results.
    pub mean_abs_alpha: f64,
    /// Latents whose line search failed, with the error text.
    pub failures: Vec<String>,
}

/// Builds a [`DirectionReport`] from finished line searches.
pub fn report_from_results(
    direction_id: &str,
    results: &[CFResult],
    failures: Vec<String>,
) -> Result<DirectionReport> {
    if results.is_empty() {
        return Err(Error::arg(format!(
            "direction {direction_id}: no evaluated latents to report on"
        )));
    }
    let evaluated = results.len();
    let flips = results.iter().filter(|r| r.flipped).count();
    let mean_abs_alpha = results.iter().map(|r| r.alpha.abs()).sum::<f64>() / evaluated as f64;
    let mean_flipped_distance = if flips > 0 {
        Some(
            results
                .iter()
                .filter(|r| r.flipped)
                .map(|r| r.distance)
                .sum::<f64>()
                / flips as f64,
        )
    } else {
        None
    };
    Ok(DirectionReport {
        direction_id: direction_id.to_string(),
        flip_rate: flips as f64 / evaluated as f64,
        flips,
        evaluated,
        mean_flipped_distance,
        mean_abs_alpha,
        failures,
    })
}

/// Runs [`line_search`] for every latent (in parallel) and aggregates.
/// Individual latent failures are recorded in the report, not fatal; the call
/// errors only when no latent succeeds.
pub fn evaluate_direction(
    generator: &dyn Generator,
    classifier: &dyn Classifier,
    metric: DistanceMetric,
    direction: &Direction,
    latents: &[LatentRecord],
    grid: &AlphaGrid,
    lambda: f64,
) -> Result<(DirectionReport, Vec<CFResult>)> {
    if latents.is_empty() {
        return Err(Error::arg("evaluate_direction: empty latent set"));
    }
    let outcomes: Vec<(String, Result<CFResult>)> = latents
        .par_iter()
        .map(|latent| {
            let r = line_search(
                generator,
                classifier,
                metric,
                &latent.z_sem,
                latent.z_t,
                direction,
                grid,
                lambda,
                &latent.id,
            );
            (latent.id.clone(), r)
        })
        .collect();

    let mut results = Vec::with_capacity(latents.len());
    let mut failures = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => failures.push(format!("{id}: {e}")),
        }
    }
    if results.is_empty() {
        return Err(Error::arg(format!(
            "direction {}: every latent failed ({} failures)",
            direction.label(),
            failures.len()
        )));
    }
    let report = report_from_results(&direction.label(), &results, failures)?;
    Ok((report, results))
}

/// Per latent, picks across directions: the lowest-loss flipped candidate,
/// or the overall loss minimizer when no direction flips that latent. All
/// inputs must cover the same latents in the same order.
pub fn best_of_directions(per_direction: &[Vec<CFResult>]) -> Result<Vec<CFResult>> {
    let first = per_direction
        .first()
        .ok_or_else(|| Error::arg("best_of_directions: no direction results"))?;
    for (d, results) in per_direction.iter().enumerate().skip(1) {
        if results.len() != first.len() {
            return Err(Error::MismatchedCoverage(format!(
                "direction {d} evaluated {} latents, expected {}",
                results.len(),
                first.len()
            )));
        }
        for (i, (a, b)) in first.iter().zip(results.iter()).enumerate() {
            if a.latent_id != b.latent_id {
                return Err(Error::MismatchedCoverage(format!(
                    "position {i}: latent '{}' vs '{}'",
                    a.latent_id, b.latent_id
                )));
            }
        }
    }

    let mut combined = Vec::with_capacity(first.len());
    for i in 0..first.len() {
        let candidates: Vec<&CFResult> = per_direction.iter().map(|r| &r[i]).collect();
        let best_of = |flipped_only: bool| -> Option<&CFResult> {
            candidates
                .iter()
                .enumerate()
                .filter(|(_, c)| !flipped_only || c.flipped)
                .min_by(|(ia, a), (ib, b)| {
                    (a.cf_loss, a.alpha.abs(), *ia)
                        .partial_cmp(&(b.cf_loss, b.alpha.abs(), *ib))
                        .unwrap()
                })
                .map(|(_, c)| *c)
        };
        let chosen = best_of(true).or_else(|| best_of(false)).expect("non-empty");
        combined.push(chosen.clone());
    }
    Ok(combined)
}

/// Pixel-wise mean of `|a - b|` over image pairs.
pub fn mean_abs_diff_map(pairs: &[(Image, Image)]) -> Result<Image> {
    let (first_a, _) = pairs
        .first()
        .ok_or_else(|| Error::arg("mean_abs_diff_map: no image pairs"))?;
    let (w, h) = (first_a.width(), first_a.height());
    let mut acc = vec![0.0f64; w * h];
    for (a, b) in pairs {
        if !(a.same_dims(first_a) && b.same_dims(first_a)) {
            return Err(Error::dim("mean_abs_diff_map: image dimensions differ"));
        }
        for (slot, (pa, pb)) in acc.iter_mut().zip(a.pixels().iter().zip(b.pixels().iter())) {
            *slot += (f64::from(*pa) - f64::from(*pb)).abs();
        }
    }
    let n = pairs.len() as f64;
    Image::new(w, h, acc.into_iter().map(|v| (v / n) as f32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::DirectionKind;
    use crate::numerics::Rng;
    use crate::worldmodel::{
        oracle_direction, ClassifierSpec, EllipseRanges, GeneratorSpec, SyntheticClassifier,
        SyntheticGenerator,
    };

    fn world() -> (SyntheticGenerator, SyntheticClassifier) {
        let gen_spec = GeneratorSpec {
            latent_dim: 16,
            width: 32,
            height: 32,
            base_level: 0.35,
            background_gain: 0.06,
            background_basis_count: 4,
            noise_amplitude: 0.01,
            ellipse: EllipseRanges {
                center_span: 0.3,
                axis_min: 0.06,
                axis_max: 0.22,
                intensity_min: 0.05,
                intensity_max: 0.2,
                rotation_span: std::f64::consts::FRAC_PI_2,
            },
        };
        let clf_spec = ClassifierSpec {
            center_x: 16.0,
            center_y: 16.0,
            radius: 6.0,
            gain: 40.0,
            threshold: 0.36,
        };
        (
            SyntheticGenerator::new(gen_spec).unwrap(),
            SyntheticClassifier::new(clf_spec, 32, 32).unwrap(),
        )
    }

    fn positive_latent(seed: u64) -> (Vector, StochasticCode) {
        let (gen, clf) = world();
        let mut rng = Rng::new(seed);
        loop {
            let z = Vector::new(rng.gaussian_vec(16)).unwrap();
            let zt = StochasticCode {
                seed: rng.next_u64(),
            };
            let logit = clf.classify(&gen.decode(&z, zt).unwrap()).unwrap();
            if logit > 0.0 {
                return (z, zt);
            }
        }
    }

    fn oracle_dir(z: &Vector, zt: StochasticCode) -> Direction {
        let (gen, clf) = world();
        let grad = oracle_direction(&gen, &clf, z, zt, 1e-4).unwrap();
        Direction::new(
            grad.normalized(1e-12).unwrap(),
            DirectionKind::Gradient,
            None,
            None,
            "oracle".into(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn oracle_direction_flips_with_a_wide_grid() {
        let (gen, clf) = world();
        let (z, zt) = positive_latent(50);
        let d = oracle_dir(&z, zt);
        let grid = AlphaGrid::symmetric(20.0, 64).unwrap();
        let r = line_search(
            &gen,
            &clf,
            DistanceMetric::PatchStat,
            &z,
            zt,
            &d,
            &grid,
            1.0,
            "lat",
        )
        .unwrap();
        assert!(r.flipped);
        assert!(r.logit_after < 0.0);
        r.check_flip_soundness().unwrap();
    }

    #[test]
    fn chosen_loss_is_minimal_among_flipped() {
        let (gen, clf) = world();
        let (z, zt) = positive_latent(51);
        let d = oracle_dir(&z, zt);
        let grid = AlphaGrid::symmetric(20.0, 32).unwrap();
        let chosen = line_search(
            &gen,
            &clf,
            DistanceMetric::PatchStat,
            &z,
            zt,
            &d,
            &grid,
            1.0,
            "lat",
        )
        .unwrap();
        assert!(chosen.flipped);

        let source = gen.decode(&z, zt).unwrap();
        for &alpha in &grid.values() {
            let img = gen
                .decode(&z.add_scaled(alpha, d.vector()).unwrap(), zt)
                .unwrap();
            let logit = clf.classify(&img).unwrap();
            if logit <= 0.0 {
                let dist = distance(DistanceMetric::PatchStat, &source, &img).unwrap();
                let loss = sigmoid(logit) + dist;
                assert!(chosen.cf_loss <= loss + 1e-12, "alpha {alpha} beats chosen");
            }
        }
    }

    #[test]
    fn negative_source_is_rejected() {
        let (gen, clf) = world();
        let mut rng = Rng::new(52);
        // find a negative-class latent
        let (z, zt) = loop {
            let z = Vector::new(rng.gaussian_vec(16)).unwrap();
            let zt = StochasticCode {
                seed: rng.next_u64(),
            };
            let logit = clf.classify(&gen.decode(&z, zt).unwrap()).unwrap();
            if logit <= 0.0 {
                break (z, zt);
            }
        };
        let d = oracle_dir(&z, zt);
        let grid = AlphaGrid::symmetric(4.0, 8).unwrap();
        assert!(matches!(
            line_search(
                &gen,
                &clf,
                DistanceMetric::PatchStat,
                &z,
                zt,
                &d,
                &grid,
                1.0,
                "lat"
            ),
            Err(Error::SourceNotPositive(_))
        ));
    }

    #[test]
    fn scaled_vector_and_inverse_grid_decode_the_same_points() {
        let (gen, clf) = world();
        let (z, zt) = positive_latent(53);
        let d = oracle_dir(&z, zt);
        let grid = AlphaGrid::symmetric(16.0, 16).unwrap();
        let base = line_search_along(
            &gen,
            &clf,
            DistanceMetric::PatchStat,
            &z,
            zt,
            d.vector(),
            &grid,
            1.0,
            "lat",
            "d",
        )
        .unwrap();
        // power-of-two scaling keeps every product bit-exact
        for c in [0.25f64, 2.0, 8.0] {
            let scaled_vec = d.vector().scaled(c).unwrap();
            let scaled_grid = grid.scaled(1.0 / c).unwrap();
            let r = line_search_along(
                &gen,
                &clf,
                DistanceMetric::PatchStat,
                &z,
                zt,
                &scaled_vec,
                &scaled_grid,
                1.0,
                "lat",
                "d",
            )
            .unwrap();
            assert_eq!(r.image, base.image);
            assert_eq!(r.logit_after, base.logit_after);
            assert_eq!(r.cf_loss, base.cf_loss);
            assert_eq!(r.flipped, base.flipped);
            assert_eq!(r.alpha * c, base.alpha);
        }
    }

    #[test]
    fn evaluate_direction_aggregates_and_oracle_flips_everything() {
        let (gen, clf) = world();
        let latents: Vec<LatentRecord> = (0..16)
            .map(|i| {
                let (z_sem, z_t) = positive_latent(100 + i);
                LatentRecord {
                    id: format!("lat_{i:03}"),
                    z_sem,
                    z_t,
                }
            })
            .collect();
        let (z0, zt0) = positive_latent(60);
        let d = oracle_dir(&z0, zt0);
        let grid = AlphaGrid::symmetric(20.0, 64).unwrap();
        let (report, results) = evaluate_direction(
            &gen,
            &clf,
            DistanceMetric::PatchStat,
            &d,
            &latents,
            &grid,
            1.0,
        )
        .unwrap();
        assert_eq!(report.evaluated, 16);
        assert_eq!(report.flip_rate, 1.0, "failures: {:?}", report.failures);
        assert_eq!(results.len(), 16);
        for r in &results {
            r.check_flip_soundness().unwrap();
        }
    }

    #[test]
    fn evaluate_rejects_empty_latents() {
        let (gen, clf) = world();
        let (z, zt) = positive_latent(61);
        let d = oracle_dir(&z, zt);
        let grid = AlphaGrid::symmetric(4.0, 8).unwrap();
        assert!(
            evaluate_direction(&gen, &clf, DistanceMetric::PatchStat, &d, &[], &grid, 1.0).is_err()
        );
    }

    fn fake_result(latent: &str, direction: &str, loss: f64, flipped: bool) -> CFResult {
        CFResult {
            latent_id: latent.into(),
            direction_id: direction.into(),
            alpha: 1.0,
            image: Image::constant(2, 2, 0.5).unwrap(),
            logit_before: 1.0,
            logit_after: if flipped { -1.0 } else { 1.0 },
            distance: 0.1,
            cf_loss: loss,
            flipped,
        }
    }

    #[test]
    fn best_of_single_direction_is_identity() {
        let rs = vec![vec![
            fake_result("a", "g", 0.5, true),
            fake_result("b", "g", 0.7, false),
        ]];
        assert_eq!(best_of_directions(&rs).unwrap(), rs[0]);
    }

    #[test]
    fn best_of_prefers_the_flipping_direction() {
        let d1 = vec![fake_result("a", "g", 0.1, false)];
        let d2 = vec![fake_result("a", "h_01", 0.9, true)];
        let combined = best_of_directions(&[d1, d2]).unwrap();
        assert_eq!(combined[0].direction_id, "h_01");
        assert!(combined[0].flipped);
    }

    #[test]
    fn best_of_rejects_mismatched_latents() {
        let d1 = vec![fake_result("a", "g", 0.1, true)];
        let d2 = vec![fake_result("b", "h_01", 0.2, true)];
        assert!(matches!(
            best_of_directions(&[d1, d2]),
            Err(Error::MismatchedCoverage(_))
        ));
    }

    #[test]
    fn mean_abs_diff_arithmetic() {
        let base = Image::constant(4, 4, 0.5).unwrap();
        // identical pairs give the zero map
        let zero = mean_abs_diff_map(&[(base.clone(), base.clone())]).unwrap();
        assert!(zero.pixels().iter().all(|&p| p == 0.0));

        // two pairs with disjoint single-pixel edits of 0.4 average to 0.2
        let mut pa = base.pixels().to_vec();
        pa[0] += 0.4;
        let mut pb = base.pixels().to_vec();
        pb[5] -= 0.4;
        let edited_a = Image::new(4, 4, pa).unwrap();
        let edited_b = Image::new(4, 4, pb).unwrap();
        let map = mean_abs_diff_map(&[(base.clone(), edited_a), (base.clone(), edited_b)]).unwrap();
        assert!((map.pixels()[0] - 0.2).abs() < 1e-6);
        assert!((map.pixels()[5] - 0.2).abs() < 1e-6);
        assert!(map.pixels()[1] == 0.0);
    }
}
