//! Scratch calibration runs for trainer budgets. Not part of the build.

use std::time::Instant;

use mlsort::analysis::{deviation_stats, expected_occupancy, occupancy_fit, occupancy_histogram};
use mlsort::dist::Preset;
use mlsort::model::{train_gvm, CdfModel, ModelKind, TrainConfig};
use mlsort::sorter::{
    build_rank_pairs, bucket_place, draw_training_set, estimate_rank, ml_sort_with_report,
    SortConfig,
};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());

    if which == "truncnorm" || which == "all" {
        // fit quality vs iterations, truncnorm, m in {10, 50}
        let spec = Preset::TruncatedNormal.spec::<f64>(42);
        let data = spec.generate(10_000).unwrap();
        let sample = draw_training_set(&data, 10_000, 1).unwrap();
        let pairs = build_rank_pairs(&sample);
        for m in [10usize, 50] {
            for iters in [10_000u64, 30_000, 60_000, 120_000] {
                let cfg = TrainConfig {
                    neurons: m,
                    iterations: iters,
                    target_loss: 0.0,
                    seed: 7,
                    ..TrainConfig::default()
                };
                let t = Instant::now();
                let gvm = train_gvm(&pairs, &cfg).unwrap();
                let dt = t.elapsed().as_secs_f64();
                let mut max_err = 0.0f64;
                for i in 0..100 {
                    let x = -1000.0 + 2000.0 * (i as f64 + 0.5) / 100.0;
                    let err = (gvm.predict(x) - spec.exact_cdf(x)).abs();
                    max_err = max_err.max(err);
                }
                println!(
                    "truncnorm m={m} iters={iters}: loss={:.3e} max_cdf_err={:.4} ({dt:.2}s)",
                    gvm.final_loss, max_err
                );
            }
        }
    }

    if which == "trimodal" || which == "all" {
        // occupancy fit at N=1e6 for the trimodal preset, m=50
        let spec = Preset::TrimodalSkewed.spec::<f64>(3);
        let data = spec.generate(1_000_000).unwrap();
        let sample = draw_training_set(&data, 10_000, 11).unwrap();
        let pairs = build_rank_pairs(&sample);
        for iters in [30_000u64, 60_000, 120_000, 240_000] {
            let cfg = TrainConfig {
                neurons: 50,
                iterations: iters,
                target_loss: 0.0,
                seed: 5,
                ..TrainConfig::default()
            };
            let t = Instant::now();
            let gvm = train_gvm(&pairs, &cfg).unwrap();
            let train_s = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let buckets = bucket_place(&data, &gvm, data.len(), 1).unwrap();
            let place_s = t.elapsed().as_secs_f64();
            let hist = occupancy_histogram(&buckets);
            let fit = occupancy_fit(&hist);
            print!(
                "trimodal m=50 iters={iters}: loss={:.3e} occ_fit={fit:.4} \
                 (train {train_s:.2}s, place {place_s:.2}s) props:",
                gvm.final_loss
            );
            for q in 0..=3usize {
                print!(
                    " q{q}={:.4}/{:.4}",
                    hist.proportion(q),
                    expected_occupancy(data.len(), q).unwrap()
                );
            }
            println!();
        }
    }

    if which == "deviation" || which == "all" {
        // criterion-4 shape: N=1e4 N(0,1), n0=1e3, PL vs GVM m=50
        let mut pl_over = 0;
        let mut gvm_under = 0;
        for seed in 0..20u64 {
            let spec =
                mlsort::dist::DistributionSpec::truncated_normal(0.0, 1.0, -8.0, 8.0, seed)
                    .unwrap();
            let data = spec.generate(10_000).unwrap();
            let mut truth = data.clone();
            truth.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let sample = draw_training_set(&data, 1_000, seed + 1000).unwrap();

            let pl = mlsort::model::PiecewiseLinear::fit(&sample).unwrap();
            let ests: Vec<_> = data
                .iter()
                .map(|k| estimate_rank(&pl, *k, data.len()).unwrap())
                .collect();
            let pl_dev = deviation_stats(&ests, &truth).unwrap().max_abs;

            let pairs = build_rank_pairs(&sample);
            let cfg = TrainConfig {
                neurons: 50,
                iterations: 60_000,
                target_loss: 0.0,
                seed: seed + 2000,
                ..TrainConfig::default()
            };
            let gvm = train_gvm(&pairs, &cfg).unwrap();
            let ests: Vec<_> = data
                .iter()
                .map(|k| estimate_rank(&gvm, *k, data.len()).unwrap())
                .collect();
            let gvm_dev = deviation_stats(&ests, &truth).unwrap().max_abs;
            println!(
                "seed {seed}: pl={pl_dev} gvm={gvm_dev} (loss {:.2e})",
                gvm.final_loss
            );
            if pl_dev > 100 {
                pl_over += 1;
            }
            if gvm_dev < 100 {
                gvm_under += 1;
            }
        }
        println!("pl>100: {pl_over}/20, gvm<100: {gvm_under}/20");
    }

    if which == "scaling" || which == "all" {
        // phase timings, uniform, m=10
        for n in [10_000usize, 100_000, 1_000_000] {
            let spec = Preset::Uniform.spec::<f64>(1);
            let data = spec.generate(n).unwrap();
            let cfg = SortConfig {
                n0: 10_000.min(n),
                model_kind: ModelKind::Gvm,
                train: TrainConfig {
                    neurons: 10,
                    iterations: 10_000,
                    seed: 2,
                    ..TrainConfig::default()
                },
                seed: 3,
                ..SortConfig::default()
            };
            let o = ml_sort_with_report(&data, &cfg).unwrap();
            println!(
                "n={n}: train={:.1}ms infer_place={:.3}ms fixup={:.3}ms loss={:.2e} occ={:.4}",
                o.report.timings_ns.train_ns as f64 / 1e6,
                o.report.timings_ns.infer_place_ns as f64 / 1e6,
                o.report.timings_ns.fixup_ns as f64 / 1e6,
                o.report.final_loss,
                o.report.occupancy_fit,
            );
        }
    }
}
