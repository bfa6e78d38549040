use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use mlsort::analysis::{
    deviation_stats, occupancy_from_ranks, occupancy_fit, verify_sorted, DeviationStats,
    OccupancyHistogram,
};
use mlsort::dist::Preset;
use mlsort::model::{ModelKind, TrainConfig};
use mlsort::sorter::{estimate_rank, ml_sort_with_report, Order, RankEstimate, SortConfig};
use mlsort::{DistributionSpec, Key};

use crate::keyfile::{read_keys, write_keys};
use crate::{AnalyzeArgs, BenchArgs, CliError, GenArgs, ModelArg, OrderArg, SortArgs};

/// Decorrelates the pipeline seed from the data seed in bench runs.
const SEED_STRIDE: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn gen(args: GenArgs) -> Result<(), CliError> {
    let spec = spec_from_flags(&args)?;
    let keys = spec.generate(args.n).map_err(CliError::from)?;
    write_keys(&args.out, args.format, &keys)
}

fn spec_from_flags(args: &GenArgs) -> Result<DistributionSpec<Key>, CliError> {
    let named = |e: mlsort::Error, flags: &str| {
        CliError::Validation(format!("invalid {flags}: {e}"))
    };
    match args.dist.as_str() {
        "uniform" => {
            let (lo, hi) = (args.lo.unwrap_or(-1000.0), args.hi.unwrap_or(1000.0));
            DistributionSpec::uniform(lo, hi, args.seed).map_err(|e| named(e, "--lo/--hi"))
        }
        "truncnorm" => {
            let (lo, hi) = (args.lo.unwrap_or(-1000.0), args.hi.unwrap_or(1000.0));
            let (mean, stddev) = (args.mean.unwrap_or(0.0), args.stddev.unwrap_or(250.0));
            DistributionSpec::truncated_normal(mean, stddev, lo, hi, args.seed)
                .map_err(|e| named(e, "--mean/--stddev/--lo/--hi"))
        }
        other => {
            let preset: Preset = other
                .parse()
                .map_err(|e: mlsort::Error| named(e, "--dist"))?;
            if args.lo.is_some() || args.hi.is_some() || args.mean.is_some()
                || args.stddev.is_some()
            {
                return Err(CliError::Validation(format!(
                    "--lo/--hi/--mean/--stddev do not apply to the fixed preset '{other}'"
                )));
            }
            Ok(preset.spec(args.seed))
        }
    }
}

fn sort_config(args: &SortArgs, n: usize) -> SortConfig {
    SortConfig {
        n0: args.n0.min(n),
        model_kind: match args.model {
            ModelArg::Pl => ModelKind::PiecewiseLinear,
            ModelArg::Gvm => ModelKind::Gvm,
        },
        train: TrainConfig {
            neurons: args.m,
            iterations: args.iterations,
            seed: args.seed.wrapping_add(1),
            enforce_monotone: !args.no_enforce_monotone,
            restarts: args.restarts,
            ..TrainConfig::default()
        },
        comb_size: args.comb_size,
        order: match args.order {
            OrderArg::Asc => Order::Ascending,
            OrderArg::Desc => Order::Descending,
        },
        seed: args.seed,
        tail_fraction: args.tail_fraction,
        threads: args.threads,
    }
}

pub fn sort(args: SortArgs) -> Result<(), CliError> {
    let keys = read_keys(&args.input, args.format)?;
    if keys.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: input file is empty",
            args.input.display()
        )));
    }
    if args.n0 > keys.len() {
        eprintln!(
            "note: clamping --n0 {} to the input size {}",
            args.n0,
            keys.len()
        );
    }
    let cfg = sort_config(&args, keys.len());
    let outcome = ml_sort_with_report(&keys, &cfg).map_err(CliError::from)?;
    if outcome.report.drift_warning {
        eprintln!(
            "warning: {} of {} keys fell outside the trained range; \
             the data may have drifted from the training sample",
            outcome.report.low_tail + outcome.report.high_tail,
            outcome.report.n
        );
    }
    write_keys(&args.out, args.format, &outcome.keys)?;

    // the file itself is re-read and re-verified: exit 0 guarantees a
    // sorted output on disk
    let written = read_keys(&args.out, args.format)?;
    let order = cfg.order;
    if written.len() != outcome.keys.len() || !verify_sorted(&written, order) {
        return Err(CliError::Internal(format!(
            "output file {} failed the sortedness re-check",
            args.out.display()
        )));
    }

    if let Some(est_path) = &args.estimates_out {
        write_estimates(est_path, &keys, &outcome.model)?;
    }

    let json = serde_json::to_string_pretty(&outcome.report)
        .map_err(|e| CliError::Internal(format!("stats serialization: {e}")))?;
    println!("{json}");
    Ok(())
}

fn write_estimates(
    path: &Path,
    keys: &[Key],
    model: &mlsort::FittedModel<Key>,
) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    let n = keys.len();
    for k in keys {
        let r = estimate_rank(model, *k, n).map_err(CliError::from)?;
        writeln!(out, "{k} {}", r.rank)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    }
    out.flush()
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

// train_ns is deliberately separate from sort_ns (= infer_place + fixup):
// the sort-time column excludes training, and both are always present so
// the exclusion is transparent.
pub const BENCH_CSV_HEADER: &str = "distribution,n,n0,m,model,seed,repeat,train_ns,\
infer_place_ns,fixup_ns,sort_ns,total_ns,baseline_ns,occupancy_fit,max_deviation,\
mean_deviation,verified,drift_warning,error";

pub fn bench(args: BenchArgs) -> Result<(), CliError> {
    let presets = parse_dists(&args.dists)?;
    let sizes = parse_sizes(&args.sizes, args.full_scale)?;
    if args.repeats == 0 {
        return Err(CliError::Validation("--repeats must be at least 1".into()));
    }

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            CliError::Io(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let io_err = |e: std::io::Error| CliError::Io(format!("writing benchmark CSV: {e}"));
    writeln!(out, "{BENCH_CSV_HEADER}").map_err(io_err)?;

    let mut row_index = 0u64;
    for preset in &presets {
        for &n in &sizes {
            for repeat in 0..args.repeats {
                let data_seed = args.seed.wrapping_add(row_index);
                row_index += 1;
                let row = bench_one(&args, *preset, n, repeat, data_seed);
                match row {
                    Ok(line) => writeln!(out, "{line}").map_err(io_err)?,
                    Err(e) => {
                        // record the failure and keep the matrix going
                        let msg = e.to_string().replace([',', '\n'], ";");
                        writeln!(
                            out,
                            "{},{n},{},{},{},{data_seed},{repeat},,,,,,,,,,false,false,{msg}",
                            preset.name(),
                            args.n0.min(n),
                            args.m.unwrap_or_else(|| preset.default_neurons()),
                            model_name(ModelKind::Gvm),
                        )
                        .map_err(io_err)?;
                    }
                }
            }
        }
    }
    out.flush().map_err(io_err)
}

fn bench_one(
    args: &BenchArgs,
    preset: Preset,
    n: usize,
    repeat: usize,
    data_seed: u64,
) -> Result<String, CliError> {
    let spec: DistributionSpec<Key> = preset.spec(data_seed);
    let data = spec.generate(n).map_err(CliError::from)?;

    let pipeline_seed = data_seed.wrapping_add(SEED_STRIDE);
    let cfg = SortConfig {
        n0: args.n0.min(n),
        model_kind: ModelKind::Gvm,
        train: TrainConfig {
            neurons: args.m.unwrap_or_else(|| preset.default_neurons()),
            iterations: args.iterations,
            seed: pipeline_seed.wrapping_add(1),
            restarts: args.restarts,
            ..TrainConfig::default()
        },
        seed: pipeline_seed,
        threads: args.threads,
        ..SortConfig::default()
    };
    let outcome = ml_sort_with_report(&data, &cfg).map_err(CliError::from)?;

    // baseline: the standard unstable comparison sort on identical data
    let mut baseline = data.clone();
    let t = Instant::now();
    baseline.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let baseline_ns = t.elapsed().as_nanos() as u64;

    let verified = outcome.report.verified && outcome.keys == baseline;
    let dev = deviation_for(&data, &outcome.model, &baseline)?;
    let r = &outcome.report;
    Ok(format!(
        "{},{n},{},{},{},{data_seed},{repeat},{},{},{},{},{baseline_ns},{:.6},{},{:.3},{verified},{},",
        preset.name(),
        r.n0,
        r.neurons,
        model_name(r.model_kind),
        r.timings_ns.train_ns,
        r.timings_ns.infer_place_ns,
        r.timings_ns.fixup_ns,
        r.timings_ns.total_ns,
        r.occupancy_fit,
        dev.max_abs,
        dev.mean_abs,
        r.drift_warning,
    ))
}

fn deviation_for(
    data: &[Key],
    model: &mlsort::FittedModel<Key>,
    truth: &[Key],
) -> Result<DeviationStats, CliError> {
    let n = data.len();
    let ests: Result<Vec<RankEstimate<Key>>, _> =
        data.iter().map(|k| estimate_rank(model, *k, n)).collect();
    deviation_stats(&ests.map_err(CliError::from)?, truth).map_err(CliError::from)
}

fn model_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::PiecewiseLinear => "pl",
        ModelKind::Gvm => "gvm",
    }
}

fn parse_dists(list: &str) -> Result<Vec<Preset>, CliError> {
    let mut presets = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let preset: Preset = name
            .parse()
            .map_err(|e: mlsort::Error| CliError::Validation(format!("invalid --dists: {e}")))?;
        presets.push(preset);
    }
    if presets.is_empty() {
        return Err(CliError::Validation(
            "--dists must name at least one preset".into(),
        ));
    }
    Ok(presets)
}

fn parse_sizes(list: &str, full_scale: bool) -> Result<Vec<usize>, CliError> {
    let mut sizes = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let v: f64 = part.parse().map_err(|_| {
            CliError::Validation(format!("invalid --sizes entry '{part}'"))
        })?;
        if !(v.is_finite() && v >= 1.0 && v.fract() == 0.0) {
            return Err(CliError::Validation(format!(
                "--sizes entry '{part}' is not a positive integer"
            )));
        }
        let n = v as usize;
        if n > 1_000_000 && !full_scale {
            return Err(CliError::Validation(format!(
                "size {n} exceeds the desk-scale ceiling of 1e6; pass --full-scale to allow it"
            )));
        }
        sizes.push(n);
    }
    if sizes.is_empty() {
        return Err(CliError::Validation(
            "--sizes must name at least one size".into(),
        ));
    }
    Ok(sizes)
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let truth = read_keys(&args.truth, args.format)?;
    if let Some(i) = truth.windows(2).position(|w| !(w[0] <= w[1])) {
        return Err(CliError::Validation(format!(
            "truth file {} is not sorted ascending at line {}",
            args.truth.display(),
            i + 2
        )));
    }
    let (keys, ranks) = read_estimates(&args.estimates)?;
    if keys.len() != truth.len() {
        return Err(CliError::Validation(format!(
            "length mismatch: {} estimates vs {} truth keys",
            keys.len(),
            truth.len()
        )));
    }
    let n = truth.len();
    if let Some((i, &r)) = ranks.iter().enumerate().find(|(_, r)| **r >= n.max(1)) {
        return Err(CliError::Validation(format!(
            "estimate rank {r} at line {} is outside [0, {})",
            i + 1,
            n
        )));
    }

    let hist = occupancy_from_ranks(&ranks, n).map_err(CliError::from)?;
    let fit = occupancy_fit(&hist);
    let ests: Vec<RankEstimate<Key>> = keys
        .iter()
        .zip(&ranks)
        .map(|(k, r)| RankEstimate { key: *k, rank: *r })
        .collect();
    let dev = deviation_stats(&ests, &truth).map_err(CliError::from)?;

    let report = AnalyzeReport {
        n,
        occupancy: OccupancySection {
            fit_error: fit,
            histogram: hist,
        },
        deviation: dev,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Internal(format!("stats serialization: {e}")))?;
    println!("{json}");
    Ok(())
}

#[derive(serde::Serialize)]
struct AnalyzeReport {
    n: usize,
    occupancy: OccupancySection,
    deviation: DeviationStats,
}

#[derive(serde::Serialize)]
struct OccupancySection {
    fit_error: f64,
    histogram: OccupancyHistogram,
}

/// Reads "key rank" lines; bare-key lines take their position as the rank.
fn read_estimates(path: &Path) -> Result<(Vec<Key>, Vec<usize>), CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    let mut keys = Vec::new();
    let mut ranks = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        let mut parts = line.split_whitespace();
        let Some(first) = parts.next() else {
            continue;
        };
        let key: Key = first.parse().map_err(|e| {
            CliError::Validation(format!(
                "{} line {}: cannot parse key '{first}': {e}",
                path.display(),
                i + 1
            ))
        })?;
        let rank = match parts.next() {
            Some(second) => second.parse().map_err(|e| {
                CliError::Validation(format!(
                    "{} line {}: cannot parse rank '{second}': {e}",
                    path.display(),
                    i + 1
                ))
            })?,
            None => keys.len(),
        };
        if parts.next().is_some() {
            return Err(CliError::Validation(format!(
                "{} line {}: expected 'key' or 'key rank'",
                path.display(),
                i + 1
            )));
        }
        keys.push(key);
        ranks.push(rank);
    }
    Ok((keys, ranks))
}
