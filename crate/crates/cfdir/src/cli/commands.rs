//! The five pipeline commands: bench-init, discover, explain, attribute,
//! verify.
//!
//! Commands are idempotent per output directory: each refuses to overwrite
//! its artifacts unless forced. Everything an invocation writes is recorded
//! in the run report's manifest with a content hash, and every byte except
//! the report's wall-clock timings is a deterministic function of
//! (config, seed).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::attribution::{bb_ig, bb_lig, find_baseline, latent_path};
use crate::cli::config::{RunConfig, STREAM_DATASET, STREAM_EVAL_LATENTS, STREAM_SOURCE_LATENTS};
use crate::cli::report::RunReport;
use crate::directions::{
    best_of_directions, evaluate_direction, g_direction, h_directions, mean_abs_diff_map,
    report_from_results, CFResult, Direction, DirectionFile,
};
use crate::error::{Error, Result};
use crate::numerics::{Rng, Vector};
use crate::proxy::{build_dataset, train_proxy, Normalization, TrainReport};
use crate::textio;
use crate::worldmodel::{
    Classifier, Generator, Image, LatentRecord, RemotePool, StochasticCode, SyntheticClassifier,
    SyntheticGenerator, DEFAULT_TIMEOUT,
};

pub const LATENTS_FILE: &str = "latents.json";
pub const SOURCES_FILE: &str = "sources.json";
pub const CONFIG_FILE: &str = "config.json";
pub const PROXY_FILE: &str = "proxy.json";
pub const DIRECTIONS_DIR: &str = "directions";
pub const EXPLAIN_DIR: &str = "explain";
pub const ATTRIBUTE_DIR: &str = "attribute";
pub const FACTUAL_DIR: &str = "factual";

pub const LATENTS_SCHEMA_VERSION: u32 = 1;
pub const PROXY_SCHEMA_VERSION: u32 = 1;
pub const RESULTS_SCHEMA_VERSION: u32 = 1;

/// Shared command-line context.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub out: PathBuf,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub force: bool,
    pub remote: Option<String>,
    pub workers: usize,
}

/// The generator/classifier pair a command runs against.
pub struct World {
    pub generator: Arc<dyn Generator>,
    pub classifier: Arc<dyn Classifier>,
}

impl World {
    pub fn synthetic(config: &RunConfig) -> Result<World> {
        let generator = SyntheticGenerator::new(config.generator.clone())?;
        let classifier = SyntheticClassifier::new(
            config.classifier.clone(),
            config.generator.width,
            config.generator.height,
        )?;
        Ok(World {
            generator: Arc::new(generator),
            classifier: Arc::new(classifier),
        })
    }

    fn build(config: &RunConfig, ctx: &Ctx) -> Result<World> {
        match &ctx.remote {
            None => World::synthetic(config),
            Some(cmdline) => {
                let parts: Vec<String> = cmdline.split_whitespace().map(str::to_string).collect();
                let pool = Arc::new(RemotePool::spawn(
                    &parts,
                    ctx.workers.max(1),
                    config.generator.latent_dim,
                    DEFAULT_TIMEOUT,
                )?);
                Ok(World {
                    generator: pool.clone(),
                    classifier: pool,
                })
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LatentSet {
    schema_version: u32,
    kind: String,
    latents: Vec<LatentRecord>,
}

/// Trained proxy artifact: everything needed to re-derive directions.
#[derive(Serialize, Deserialize)]
pub struct ProxyArtifact {
    pub schema_version: u32,
    pub source_id: String,
    pub source_z: Vector,
    pub source_zt: StochasticCode,
    pub radius: f64,
    pub lambda: f64,
    pub normalization: Normalization,
    pub net: crate::numerics::MlpNet,
    pub train_report: TrainReport,
}

/// Slim per-latent line-search record for results files; the counterfactual
/// image itself lives next to it as a PGM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CFRecord {
    pub latent_id: String,
    pub direction_id: String,
    pub alpha: f64,
    pub logit_before: f64,
    pub logit_after: f64,
    pub distance: f64,
    pub cf_loss: f64,
    pub flipped: bool,
}

impl From<&CFResult> for CFRecord {
    fn from(r: &CFResult) -> CFRecord {
        CFRecord {
            latent_id: r.latent_id.clone(),
            direction_id: r.direction_id.clone(),
            alpha: r.alpha,
            logit_before: r.logit_before,
            logit_after: r.logit_after,
            distance: r.distance,
            cf_loss: r.cf_loss,
            flipped: r.flipped,
        }
    }
}

impl CFRecord {
    fn check_flip_soundness(&self) -> Result<()> {
        let flipped = (self.logit_before > 0.0) != (self.logit_after > 0.0);
        if flipped != self.flipped {
            return Err(Error::Verification(format!(
                "latent {} along {}: flip flag {} disagrees with logits {} -> {}",
                self.latent_id,
                self.direction_id,
                self.flipped,
                self.logit_before,
                self.logit_after
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ResultsFile {
    schema_version: u32,
    direction_id: String,
    results: Vec<CFRecord>,
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    schema_version: u32,
    report: crate::directions::DirectionReport,
}

#[derive(Serialize, Deserialize)]
struct BaselineFile {
    schema_version: u32,
    direction_id: String,
    latent_id: String,
    alpha: f64,
    probability: f64,
}

/// Tracks files created by a command so a failure can remove partial output.
struct ArtifactTracker {
    out_dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl ArtifactTracker {
    fn new(out_dir: &Path) -> ArtifactTracker {
        ArtifactTracker {
            out_dir: out_dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        }
    }

    fn write_json<T: Serialize>(
        &mut self,
        report: &mut RunReport,
        relative: &str,
        value: &T,
    ) -> Result<()> {
        let path = self.out_dir.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        textio::write_json_file(&path, value)?;
        self.written.push(path);
        report.record_artifact(&self.out_dir, relative)
    }

    fn write_bytes(&mut self, report: &mut RunReport, relative: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.written.push(path);
        report.record_artifact(&self.out_dir, relative)
    }

    fn commit(&mut self) {
        self.committed = true;
    }
}

impl Drop for ArtifactTracker {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}

fn refuse_overwrite(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::WouldOverwrite(path.display().to_string()));
    }
    Ok(())
}

/// Removes a replaced artifact subtree and its manifest entries. Reached only
/// on first runs (nothing to remove) or behind `--force`, since
/// [`refuse_overwrite`] fires first otherwise. Without this, a forced rerun
/// with fewer outputs would leave stale files from the previous run mixed in.
fn clear_subtree(out_dir: &Path, report: &mut RunReport, relative: &str) -> Result<()> {
    let path = out_dir.join(relative);
    if path.is_dir() {
        fs::remove_dir_all(&path)?;
    } else if path.is_file() {
        fs::remove_file(&path)?;
    }
    report.drop_manifest_prefix(relative);
    Ok(())
}

/// Loads the run configuration: an explicit `--config` wins, otherwise the
/// frozen copy in the output directory.
///
/// A bad explicit path is a configuration mistake (exit 2); a missing frozen
/// copy means the benchmark was never initialized (exit 3).
fn load_config(ctx: &Ctx) -> Result<RunConfig> {
    let config: RunConfig = match &ctx.config_path {
        Some(path) => textio::read_json_file(path).map_err(|e| Error::Config(e.to_string()))?,
        None => textio::read_json_file(&ctx.out.join(CONFIG_FILE))?,
    };
    let config = config.with_seed_override(ctx.seed);
    config.validate()?;
    Ok(config)
}

fn load_latents_path(path: &Path) -> Result<Vec<LatentRecord>> {
    let set: LatentSet = textio::read_json_file(path)?;
    if set.schema_version != LATENTS_SCHEMA_VERSION {
        return Err(Error::Parse(format!(
            "{}: latent schema version {} (expected {LATENTS_SCHEMA_VERSION})",
            path.display(),
            set.schema_version
        )));
    }
    if set.latents.is_empty() {
        return Err(Error::Parse(format!(
            "{}: empty latent set",
            path.display()
        )));
    }
    Ok(set.latents)
}

fn load_latents(out_dir: &Path, file: &str) -> Result<Vec<LatentRecord>> {
    load_latents_path(&out_dir.join(file))
}

fn sample_positive_latents(
    world: &World,
    latent_dim: usize,
    count: usize,
    rng: &mut Rng,
    prefix: &str,
) -> Result<Vec<LatentRecord>> {
    let mut latents = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let limit = count.saturating_mul(1000).max(10_000);
    while latents.len() < count {
        attempts += 1;
        if attempts > limit {
            return Err(Error::arg(format!(
                "could not find {count} positive-class latents in {limit} draws; \
                 the classifier threshold looks miscalibrated"
            )));
        }
        let z_sem = Vector::new(rng.gaussian_vec(latent_dim))?;
        let z_t = StochasticCode {
            seed: rng.next_u64(),
        };
        let image = world.generator.decode(&z_sem, z_t)?;
        if world.classifier.classify(&image)? > 0.0 {
            latents.push(LatentRecord {
                id: format!("{prefix}{:03}", latents.len()),
                z_sem,
                z_t,
            });
        }
    }
    Ok(latents)
}

/// `bench-init`: samples positive-class evaluation and source latents, writes
/// them with the factual images and the frozen config.
pub fn cmd_bench_init(ctx: &Ctx) -> Result<()> {
    let start = Instant::now();
    let config_path = ctx
        .config_path
        .clone()
        .ok_or_else(|| Error::Config("bench-init requires --config".into()))?;
    let config: RunConfig =
        textio::read_json_file(&config_path).map_err(|e| Error::Config(e.to_string()))?;
    let config = config.with_seed_override(ctx.seed);
    config.validate()?;

    fs::create_dir_all(&ctx.out)?;
    refuse_overwrite(&ctx.out.join(CONFIG_FILE), ctx.force)?;

    let world = World::build(&config, ctx)?;
    let mut report = RunReport::new(config.clone());
    // re-initializing roots the pipeline; everything downstream is stale
    for subtree in [
        FACTUAL_DIR,
        PROXY_FILE,
        DIRECTIONS_DIR,
        EXPLAIN_DIR,
        ATTRIBUTE_DIR,
    ] {
        clear_subtree(&ctx.out, &mut report, subtree)?;
    }
    let mut tracker = ArtifactTracker::new(&ctx.out);

    let master = Rng::new(config.seed);
    let mut eval_rng = master.derive(STREAM_EVAL_LATENTS);
    let eval = sample_positive_latents(
        &world,
        config.generator.latent_dim,
        config.eval_latent_count,
        &mut eval_rng,
        "lat_",
    )?;
    let mut source_rng = master.derive(STREAM_SOURCE_LATENTS);
    let sources = sample_positive_latents(
        &world,
        config.generator.latent_dim,
        config.source_latent_count,
        &mut source_rng,
        "src_",
    )?;

    tracker.write_json(
        &mut report,
        LATENTS_FILE,
        &LatentSet {
            schema_version: LATENTS_SCHEMA_VERSION,
            kind: "eval".into(),
            latents: eval.clone(),
        },
    )?;
    tracker.write_json(
        &mut report,
        SOURCES_FILE,
        &LatentSet {
            schema_version: LATENTS_SCHEMA_VERSION,
            kind: "source".into(),
            latents: sources,
        },
    )?;
    for latent in &eval {
        let image = world.generator.decode(&latent.z_sem, latent.z_t)?;
        let rel = format!("{FACTUAL_DIR}/factual_{}.pgm", latent.id);
        tracker.write_bytes(&mut report, &rel, &image.to_pgm())?;
    }
    tracker.write_json(&mut report, CONFIG_FILE, &config)?;

    report.record_timing("bench-init", start.elapsed().as_secs_f64());
    report.save(&ctx.out)?;
    tracker.commit();
    println!(
        "bench-init: {} eval latents, {} artifacts, out {}",
        config.eval_latent_count,
        report.manifest.len(),
        ctx.out.display()
    );
    Ok(())
}

/// `discover`: builds the perturbation dataset around one source latent,
/// trains the proxy, and extracts the g-direction plus `h_count` Hessian
/// directions.
pub fn cmd_discover(ctx: &Ctx, source_index: usize) -> Result<()> {
    let start = Instant::now();
    let config = load_config(ctx)?;
    let sources = load_latents(&ctx.out, SOURCES_FILE)?;
    let source = sources.get(source_index).ok_or_else(|| {
        Error::arg(format!(
            "source index {source_index} out of range (have {})",
            sources.len()
        ))
    })?;

    refuse_overwrite(&ctx.out.join(PROXY_FILE), ctx.force)?;
    let world = World::build(&config, ctx)?;
    let mut report = RunReport::load(&ctx.out)?;
    clear_subtree(&ctx.out, &mut report, PROXY_FILE)?;
    clear_subtree(&ctx.out, &mut report, DIRECTIONS_DIR)?;
    // direction sets and their evaluations belong to one proxy; a rerun
    // invalidates any stored explain output
    clear_subtree(&ctx.out, &mut report, EXPLAIN_DIR)?;
    clear_subtree(&ctx.out, &mut report, ATTRIBUTE_DIR)?;
    report.directions.clear();
    report.combined = None;
    let mut tracker = ArtifactTracker::new(&ctx.out);

    let mut dataset_rng = Rng::new(config.seed)
        .derive(STREAM_DATASET)
        .derive(source_index as u64);
    let dataset = build_dataset(
        world.generator.as_ref(),
        world.classifier.as_ref(),
        config.metric,
        &source.z_sem,
        source.z_t,
        config.radius,
        config.sample_count,
        &mut dataset_rng,
    )?;
    let (net, train_report) = train_proxy(&dataset, &config.proxy)?;

    let g = g_direction(&net, &source.z_sem, config.lambda, &source.id)?;
    let hs = h_directions(
        &net,
        &source.z_sem,
        config.lambda,
        config.h_count,
        &source.id,
    )?;

    tracker.write_json(
        &mut report,
        PROXY_FILE,
        &ProxyArtifact {
            schema_version: PROXY_SCHEMA_VERSION,
            source_id: source.id.clone(),
            source_z: dataset.source_z.clone(),
            source_zt: dataset.source_zt,
            radius: dataset.radius,
            lambda: config.lambda,
            normalization: dataset.normalization,
            net,
            train_report: train_report.clone(),
        },
    )?;
    for d in std::iter::once(&g).chain(hs.iter()) {
        let rel = format!("{DIRECTIONS_DIR}/{}.json", d.label());
        tracker.write_json(&mut report, &rel, &DirectionFile::wrap(d.clone()))?;
    }

    report.source_id = Some(source.id.clone());
    report.proxy = Some(train_report);
    report.record_timing("discover", start.elapsed().as_secs_f64());
    report.save(&ctx.out)?;
    tracker.commit();
    println!(
        "discover: source {}, 1 g-direction + {} h-directions",
        source.id, config.h_count
    );
    Ok(())
}

fn direction_paths(ctx: &Ctx, labels: Option<&[String]>) -> Result<Vec<PathBuf>> {
    match labels {
        Some(labels) if !labels.is_empty() => Ok(labels
            .iter()
            .map(|l| {
                let as_path = PathBuf::from(l);
                if as_path.is_file() {
                    as_path
                } else {
                    ctx.out.join(DIRECTIONS_DIR).join(format!("{l}.json"))
                }
            })
            .collect()),
        _ => {
            let dir = ctx.out.join(DIRECTIONS_DIR);
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(Error::arg(format!(
                    "no direction files in {}",
                    dir.display()
                )));
            }
            Ok(paths)
        }
    }
}

/// Restricts each per-direction result list to the latents every direction
/// evaluated successfully, preserving latent order.
fn common_coverage(per_direction: &[Vec<CFResult>]) -> Vec<Vec<CFResult>> {
    use std::collections::HashSet;
    let mut common: Option<HashSet<String>> = None;
    for results in per_direction {
        let ids: HashSet<String> = results.iter().map(|r| r.latent_id.clone()).collect();
        common = Some(match common {
            None => ids,
            Some(c) => c.intersection(&ids).cloned().collect(),
        });
    }
    let common = common.unwrap_or_default();
    per_direction
        .iter()
        .map(|results| {
            results
                .iter()
                .filter(|r| common.contains(&r.latent_id))
                .cloned()
                .collect()
        })
        .collect()
}

/// `explain`: evaluates each direction over the latent set, writes CE images
/// and per-direction reports, then combines directions by lowest loss.
pub fn cmd_explain(
    ctx: &Ctx,
    labels: Option<&[String]>,
    latents_file: Option<&Path>,
) -> Result<()> {
    let start = Instant::now();
    let config = load_config(ctx)?;
    let latents = match latents_file {
        Some(path) => load_latents_path(path)?,
        None => load_latents(&ctx.out, LATENTS_FILE)?,
    };
    let paths = direction_paths(ctx, labels)?;
    let directions: Vec<Direction> = paths
        .iter()
        .map(|p| DirectionFile::load(p))
        .collect::<Result<_>>()?;

    refuse_overwrite(&ctx.out.join(EXPLAIN_DIR), ctx.force)?;
    let world = World::build(&config, ctx)?;
    let mut report = RunReport::load(&ctx.out)?;
    clear_subtree(&ctx.out, &mut report, EXPLAIN_DIR)?;
    report.combined = None;
    let mut tracker = ArtifactTracker::new(&ctx.out);

    // factual images, reused for every direction's difference map
    let factuals: Vec<Image> = latents
        .iter()
        .map(|l| world.generator.decode(&l.z_sem, l.z_t))
        .collect::<Result<_>>()?;

    let mut all_results: Vec<Vec<CFResult>> = Vec::with_capacity(directions.len());
    report.directions.clear();
    for direction in &directions {
        let label = direction.label();
        let (dir_report, results) = evaluate_direction(
            world.generator.as_ref(),
            world.classifier.as_ref(),
            config.metric,
            direction,
            &latents,
            &config.grid,
            config.lambda,
        )?;
        write_direction_outputs(&mut tracker, &mut report, &label, &dir_report, &results)?;

        let pairs: Vec<(Image, Image)> = results
            .iter()
            .map(|r| {
                let idx = latents
                    .iter()
                    .position(|l| l.id == r.latent_id)
                    .expect("result latent comes from the input set");
                (factuals[idx].clone(), r.image.clone())
            })
            .collect();
        let madmap = mean_abs_diff_map(&pairs)?;
        tracker.write_bytes(
            &mut report,
            &format!("{EXPLAIN_DIR}/{label}/madmap.pgm"),
            &madmap.to_pgm(),
        )?;

        report.directions.push(dir_report);
        all_results.push(results);
    }

    let covered = common_coverage(&all_results);
    if covered.iter().all(|r| !r.is_empty()) {
        let combined = best_of_directions(&covered)?;
        let combined_report = report_from_results("combined", &combined, Vec::new())?;
        write_direction_outputs(
            &mut tracker,
            &mut report,
            "combined",
            &combined_report,
            &combined,
        )?;
        report.combined = Some(combined_report);
    }

    report.record_timing("explain", start.elapsed().as_secs_f64());
    report.save(&ctx.out)?;
    tracker.commit();
    for r in &report.directions {
        println!(
            "explain: {} flip rate {:.4} ({}/{})",
            r.direction_id, r.flip_rate, r.flips, r.evaluated
        );
    }
    if let Some(c) = &report.combined {
        println!(
            "explain: combined flip rate {:.4} ({}/{})",
            c.flip_rate, c.flips, c.evaluated
        );
    }
    Ok(())
}

fn write_direction_outputs(
    tracker: &mut ArtifactTracker,
    report: &mut RunReport,
    label: &str,
    dir_report: &crate::directions::DirectionReport,
    results: &[CFResult],
) -> Result<()> {
    tracker.write_json(
        report,
        &format!("{EXPLAIN_DIR}/{label}/report.json"),
        &ReportFile {
            schema_version: RESULTS_SCHEMA_VERSION,
            report: dir_report.clone(),
        },
    )?;
    tracker.write_json(
        report,
        &format!("{EXPLAIN_DIR}/{label}/results.json"),
        &ResultsFile {
            schema_version: RESULTS_SCHEMA_VERSION,
            direction_id: label.to_string(),
            results: results.iter().map(CFRecord::from).collect(),
        },
    )?;
    for r in results {
        tracker.write_bytes(
            report,
            &format!("{EXPLAIN_DIR}/{label}/ce_{}.pgm", r.latent_id),
            &r.image.to_pgm(),
        )?;
    }
    Ok(())
}

/// `attribute`: finds the baseline along a direction for one latent, then
/// writes the attribution maps and companion images.
pub fn cmd_attribute(ctx: &Ctx, direction_label: &str, latent_id: &str) -> Result<()> {
    let start = Instant::now();
    let config = load_config(ctx)?;
    let latents = load_latents(&ctx.out, LATENTS_FILE)?;
    let latent = latents
        .iter()
        .find(|l| l.id == latent_id)
        .ok_or_else(|| Error::arg(format!("latent '{latent_id}' not found in {LATENTS_FILE}")))?;
    let direction_path = {
        let as_path = PathBuf::from(direction_label);
        if as_path.is_file() {
            as_path
        } else {
            ctx.out
                .join(DIRECTIONS_DIR)
                .join(format!("{direction_label}.json"))
        }
    };
    let direction = DirectionFile::load(&direction_path)?;
    let label = direction.label();

    let base_rel = format!("{ATTRIBUTE_DIR}/{latent_id}/{label}");
    refuse_overwrite(&ctx.out.join(&base_rel), ctx.force)?;
    let world = World::build(&config, ctx)?;
    let mut report = RunReport::load(&ctx.out)?;
    clear_subtree(&ctx.out, &mut report, &base_rel)?;
    let mut tracker = ArtifactTracker::new(&ctx.out);

    let baseline = find_baseline(
        world.generator.as_ref(),
        world.classifier.as_ref(),
        &latent.z_sem,
        latent.z_t,
        &direction,
        &config.grid,
        config.baseline_tau,
    )?;
    let path = latent_path(
        world.generator.as_ref(),
        world.classifier.as_ref(),
        &latent.z_sem,
        latent.z_t,
        &direction,
        baseline.alpha,
        config.path_steps,
    )?;
    let factual = world.generator.decode(&latent.z_sem, latent.z_t)?;
    let lig_map = bb_lig(&path, &factual, &baseline.image, config.eps_px)?;
    let ig_map = bb_ig(
        &factual,
        world.classifier.as_ref(),
        config.path_steps,
        config.eps_px,
    )?;
    let difference = mean_abs_diff_map(&[(factual.clone(), baseline.image.clone())])?;

    tracker.write_bytes(
        &mut report,
        &format!("{base_rel}/factual.pgm"),
        &factual.to_pgm(),
    )?;
    tracker.write_bytes(
        &mut report,
        &format!("{base_rel}/baseline.pgm"),
        &baseline.image.to_pgm(),
    )?;
    tracker.write_json(
        &mut report,
        &format!("{base_rel}/baseline.json"),
        &BaselineFile {
            schema_version: RESULTS_SCHEMA_VERSION,
            direction_id: label.clone(),
            latent_id: latent_id.to_string(),
            alpha: baseline.alpha,
            probability: baseline.probability,
        },
    )?;
    tracker.write_bytes(
        &mut report,
        &format!("{base_rel}/difference.pgm"),
        &difference.to_pgm(),
    )?;
    tracker.write_json(&mut report, &format!("{base_rel}/bblig.json"), &lig_map)?;
    tracker.write_bytes(
        &mut report,
        &format!("{base_rel}/bblig_magnitude.pgm"),
        &lig_map.magnitude_image().to_pgm(),
    )?;
    tracker.write_json(&mut report, &format!("{base_rel}/bbig.json"), &ig_map)?;
    tracker.write_bytes(
        &mut report,
        &format!("{base_rel}/bbig_magnitude.pgm"),
        &ig_map.magnitude_image().to_pgm(),
    )?;

    report.record_timing("attribute", start.elapsed().as_secs_f64());
    report.save(&ctx.out)?;
    tracker.commit();
    println!(
        "attribute: latent {latent_id} along {label}, baseline probability {:.6} at alpha {:.4}",
        baseline.probability, baseline.alpha
    );
    Ok(())
}

/// `verify`: re-checks the manifest and the structural invariants of every
/// stored artifact. Needs no generator or classifier.
pub fn cmd_verify(out_dir: &Path) -> Result<()> {
    let report = RunReport::load(out_dir)?;
    report.verify_manifest(out_dir)?;
    report.config.validate()?;

    // config echo must round-trip to the frozen copy
    let frozen_path = out_dir.join(CONFIG_FILE);
    if frozen_path.is_file() {
        let frozen: RunConfig = textio::read_json_file(&frozen_path)?;
        if frozen != report.config {
            return Err(Error::Verification(
                "run report config does not match the frozen config.json".into(),
            ));
        }
    }

    let mut checked = report.manifest.len();

    // the trained proxy must deserialize (layer chain and head count are
    // validated on load) and agree with the report
    let proxy_path = out_dir.join(PROXY_FILE);
    if proxy_path.is_file() {
        let artifact: ProxyArtifact = textio::read_json_file(&proxy_path)?;
        if artifact.schema_version != PROXY_SCHEMA_VERSION {
            return Err(Error::Verification(format!(
                "proxy schema version {} (expected {PROXY_SCHEMA_VERSION})",
                artifact.schema_version
            )));
        }
        if artifact.net.input_width() != report.config.generator.latent_dim {
            return Err(Error::Verification(format!(
                "proxy input width {} does not match config latent_dim {}",
                artifact.net.input_width(),
                report.config.generator.latent_dim
            )));
        }
        if report.source_id.as_deref() != Some(artifact.source_id.as_str()) {
            return Err(Error::Verification(format!(
                "proxy source '{}' does not match the report's '{}'",
                artifact.source_id,
                report.source_id.as_deref().unwrap_or("(none)")
            )));
        }
        checked += 1;
    }

    // direction invariants: unit norm is enforced on load; hessian
    // directions from one proxy must be mutually orthogonal
    let dir_dir = out_dir.join(DIRECTIONS_DIR);
    if dir_dir.is_dir() {
        let mut hessian_dirs = Vec::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir_dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let d = DirectionFile::load(&path)?;
            if d.vector().len() != report.config.generator.latent_dim {
                return Err(Error::Verification(format!(
                    "{}: direction width {} does not match config latent_dim {}",
                    path.display(),
                    d.vector().len(),
                    report.config.generator.latent_dim
                )));
            }
            if d.eigen_rank().is_some() {
                hessian_dirs.push(d);
            }
            checked += 1;
        }
        for (i, a) in hessian_dirs.iter().enumerate() {
            for b in hessian_dirs.iter().skip(i + 1) {
                let dot = a.vector().dot(b.vector()).abs();
                if dot > 1e-6 {
                    return Err(Error::Verification(format!(
                        "h-directions rank {} and {} are not orthogonal (|dot| = {dot:e})",
                        a.eigen_rank().unwrap(),
                        b.eigen_rank().unwrap()
                    )));
                }
            }
        }
    }

    // line-search records: the flip flag must match the stored logits
    for entry in &report.manifest {
        if entry.path.ends_with("results.json") {
            let file: ResultsFile = textio::read_json_file(&out_dir.join(&entry.path))?;
            for record in &file.results {
                record.check_flip_soundness()?;
            }
        }
        // attribution maps re-validate finiteness on deserialization
        if entry.path.ends_with("bblig.json") || entry.path.ends_with("bbig.json") {
            let _map: crate::attribution::AttributionMap =
                textio::read_json_file(&out_dir.join(&entry.path))?;
        }
    }

    println!("verify: {checked} artifacts ok in {}", out_dir.display());
    Ok(())
}
