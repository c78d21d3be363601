//! Benchmark calibration sweep. Ignored by default: run manually with
//!
//! ```text
//! cargo test -p cfdir --test calibration -- --ignored --nocapture
//! ```
//!
//! Prints the numbers the frozen benchmark config depends on: the classifier
//! threshold that balances the class split, proxy fit quality, direction
//! transfer rates, and baseline reachability. Values are measured here once
//! and committed to `configs/benchmark.json`; tests never tune them.

use cfdir::cli::{RunConfig, World};
use cfdir::directions::{evaluate_direction, g_direction, h_directions, Direction, DirectionKind};
use cfdir::numerics::{Rng, Vector};
use cfdir::proxy::{build_dataset, train_proxy};
use cfdir::worldmodel::{oracle_direction, LatentRecord, StochasticCode};

fn sample_positive(
    world: &World,
    n: usize,
    count: usize,
    rng: &mut Rng,
    prefix: &str,
) -> Vec<LatentRecord> {
    let mut out = Vec::new();
    while out.len() < count {
        let z_sem = Vector::new(rng.gaussian_vec(n)).unwrap();
        let z_t = StochasticCode {
            seed: rng.next_u64(),
        };
        let img = world.generator.decode(&z_sem, z_t).unwrap();
        if world.classifier.classify(&img).unwrap() > 0.0 {
            out.push(LatentRecord {
                id: format!("{prefix}{:03}", out.len()),
                z_sem,
                z_t,
            });
        }
    }
    out
}

#[test]
#[ignore]
fn calibration_sweep() {
    let config = RunConfig::benchmark();
    let n = config.generator.latent_dim;
    let world = World::synthetic(&config).unwrap();

    // class balance: distribution of the disk mean over Gaussian latents
    let mut rng = Rng::new(987654321);
    let mut disk_means = Vec::new();
    let mut positives = 0usize;
    let draws = 4096;
    for _ in 0..draws {
        let z = Vector::new(rng.gaussian_vec(n)).unwrap();
        let zt = StochasticCode {
            seed: rng.next_u64(),
        };
        let img = world.generator.decode(&z, zt).unwrap();
        let logit = world.classifier.classify(&img).unwrap();
        let mean = logit / config.classifier.gain + config.classifier.threshold;
        disk_means.push(mean);
        if logit > 0.0 {
            positives += 1;
        }
    }
    disk_means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| disk_means[((draws as f64 * q) as usize).min(draws - 1)];
    println!(
        "disk mean: p05 {:.4} p25 {:.4} median {:.4} p75 {:.4} p95 {:.4}",
        quantile(0.05),
        quantile(0.25),
        quantile(0.50),
        quantile(0.75),
        quantile(0.95)
    );
    println!(
        "positive-class rate at threshold {:.4}: {:.4}",
        config.classifier.threshold,
        positives as f64 / draws as f64
    );

    // latents for the transfer measurements
    let master = Rng::new(config.seed);
    let eval = sample_positive(
        &world,
        n,
        config.eval_latent_count,
        &mut master.derive(1),
        "lat_",
    );
    let sources = sample_positive(
        &world,
        n,
        config.source_latent_count,
        &mut master.derive(2),
        "src_",
    );

    // oracle direction from the first source latent
    let src = &sources[0];
    let oracle = oracle_direction(
        world.generator.as_ref(),
        world.classifier.as_ref(),
        &src.z_sem,
        src.z_t,
        1e-4,
    )
    .unwrap();
    let oracle_dir = Direction::new(
        oracle.normalized(1e-12).unwrap(),
        DirectionKind::Gradient,
        None,
        None,
        src.id.clone(),
        config.lambda,
    )
    .unwrap();
    let t0 = std::time::Instant::now();
    let (oracle_report, _) = evaluate_direction(
        world.generator.as_ref(),
        world.classifier.as_ref(),
        config.metric,
        &oracle_dir,
        &eval,
        &config.grid,
        config.lambda,
    )
    .unwrap();
    println!(
        "oracle FR {:.4} ({}/{}) in {:.1}s",
        oracle_report.flip_rate,
        oracle_report.flips,
        oracle_report.evaluated,
        t0.elapsed().as_secs_f64()
    );

    // proxy training at benchmark settings
    let t1 = std::time::Instant::now();
    let mut dataset_rng = Rng::new(config.seed).derive(3).derive(0);
    let dataset = build_dataset(
        world.generator.as_ref(),
        world.classifier.as_ref(),
        config.metric,
        &src.z_sem,
        src.z_t,
        config.radius,
        config.sample_count,
        &mut dataset_rng,
    )
    .unwrap();
    let (net, train_report) = train_proxy(&dataset, &config.proxy).unwrap();
    println!(
        "proxy: train {:.1}s, final train mse {:?}, holdout mse {:?}, holdout r2 {:?}",
        t1.elapsed().as_secs_f64(),
        train_report.final_train_mse,
        train_report.holdout_mse,
        train_report.holdout_r2
    );

    // g-direction transfer
    let g = g_direction(&net, &src.z_sem, config.lambda, &src.id).unwrap();
    let cos = g.vector().dot(oracle_dir.vector()).abs();
    println!("g-direction |cosine to oracle| {cos:.4}");
    let t2 = std::time::Instant::now();
    let (g_report, g_results) = evaluate_direction(
        world.generator.as_ref(),
        world.classifier.as_ref(),
        config.metric,
        &g,
        &eval,
        &config.grid,
        config.lambda,
    )
    .unwrap();
    println!(
        "g-direction FR {:.4} ({}/{}) in {:.1}s, mean |alpha| {:.2}",
        g_report.flip_rate,
        g_report.flips,
        g_report.evaluated,
        t2.elapsed().as_secs_f64(),
        g_report.mean_abs_alpha
    );

    // h-direction transfer
    let hs = h_directions(&net, &src.z_sem, config.lambda, config.h_count, &src.id).unwrap();
    let mut best_h_fr: f64 = 0.0;
    for h in &hs {
        let (r, _) = evaluate_direction(
            world.generator.as_ref(),
            world.classifier.as_ref(),
            config.metric,
            h,
            &eval,
            &config.grid,
            config.lambda,
        )
        .unwrap();
        println!(
            "  {} eigenvalue {:+.3e} FR {:.4}",
            r.direction_id,
            h.eigenvalue().unwrap(),
            r.flip_rate
        );
        best_h_fr = best_h_fr.max(r.flip_rate);
    }
    println!("best h FR {best_h_fr:.4} (g FR {:.4})", g_report.flip_rate);

    // baseline reachability along g for the latents it flips
    let mut baseline_ok = 0usize;
    let mut flipped_total = 0usize;
    for (latent, result) in eval.iter().zip(g_results.iter()) {
        if !result.flipped {
            continue;
        }
        flipped_total += 1;
        if cfdir::attribution::find_baseline(
            world.generator.as_ref(),
            world.classifier.as_ref(),
            &latent.z_sem,
            latent.z_t,
            &g,
            &config.grid,
            config.baseline_tau,
        )
        .is_ok()
        {
            baseline_ok += 1;
        }
    }
    println!(
        "baseline (tau {:.2}): {}/{} flipped latents reach it",
        config.baseline_tau, baseline_ok, flipped_total
    );
}
