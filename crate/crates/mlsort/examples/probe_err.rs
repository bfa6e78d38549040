//! equal-mass probe error + scaling timings
use mlsort::dist::Preset;
use mlsort::model::{train_gvm, CdfModel, ModelKind, TrainConfig};
use mlsort::sorter::{build_rank_pairs, draw_training_set, ml_sort_with_report, SortConfig};

fn main() {
    let spec = Preset::TruncatedNormal.spec::<f64>(42);
    let data = spec.generate(10_000).unwrap();
    let sample = draw_training_set(&data, 10_000, 1).unwrap();
    let pairs = build_rank_pairs(&sample);
    for seed in [7u64, 11, 23] {
        let cfg = TrainConfig {
            neurons: 50,
            iterations: 60_000,
            target_loss: 0.0,
            seed,
            restarts: 2,
            ..TrainConfig::default()
        };
        let gvm = train_gvm(&pairs, &cfg).unwrap();
        // probes at equal key-mass: x = F^{ -1}((i+0.5)/100) via bisection
        let mut max_err = 0.0f64;
        for i in 0..100 {
            let p = (i as f64 + 0.5) / 100.0;
            let (mut a, mut b) = (-1000.0f64, 1000.0f64);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if spec.exact_cdf(mid) < p { a = mid } else { b = mid }
            }
            let x = 0.5 * (a + b);
            max_err = max_err.max((gvm.predict(x) - spec.exact_cdf(x)).abs());
        }
        println!("seed={seed}: loss={:.3e} equal-mass max_err={:.4}", gvm.final_loss, max_err);
    }

    for n in [10_000usize, 100_000, 1_000_000] {
        let spec = Preset::Uniform.spec::<f64>(1);
        let data = spec.generate(n).unwrap();
        let cfg = SortConfig {
            n0: 10_000.min(n),
            model_kind: ModelKind::Gvm,
            train: TrainConfig { neurons: 10, iterations: 10_000, seed: 2, ..TrainConfig::default() },
            seed: 3,
            ..SortConfig::default()
        };
        let o = ml_sort_with_report(&data, &cfg).unwrap();
        println!(
            "n={n}: train={:.1}ms infer_place={:.3}ms fixup={:.3}ms occ={:.4}",
            o.report.timings_ns.train_ns as f64 / 1e6,
            o.report.timings_ns.infer_place_ns as f64 / 1e6,
            o.report.timings_ns.fixup_ns as f64 / 1e6,
            o.report.occupancy_fit,
        );
    }
}
