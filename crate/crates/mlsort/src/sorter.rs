//! The end-to-end learned sort.
//!
//! Pipeline: draw a random training sample, fit a CDF model to its
//! `(key, i/N0)` pairs, route keys outside the sample range to a
//! conventional tail sort, predict a rank for every remaining key in Θ(M)
//! each, append it to its rank bucket, sort each bucket locally, and splice
//! the tails back on. A monotone model guarantees cross-bucket order, so the
//! bucket path needs no global repair; non-monotone models go through a
//! sliding-window comb pass that escalates (and ultimately falls back to a
//! full comparison sort) until the output verifies sorted. The output is
//! always verified before it is returned.
//!
//! Every stage is deterministic given the config seeds, and the inference
//! phase can be sharded across threads with bit-identical results: shards
//! only compute `(key, rank)` pairs, and placement consumes them in input
//! order.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{occupancy_fit, occupancy_histogram, verify_sorted};
use crate::error::{Error, Result};
use crate::model::{
    train_gvm, CdfModel, FittedModel, ModelKind, PiecewiseLinear, TrainConfig,
};
use crate::scalar::Scalar;

/// Output ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Ascending,
    Descending,
}

/// Buckets larger than this are repaired with the standard stable sort
/// instead of insertion sort; both keep equal keys in arrival order.
const INSERTION_SORT_MAX: usize = 32;

/// Full pipeline configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SortConfig {
    /// Training sample size; must not exceed the input size.
    pub n0: usize,
    pub model_kind: ModelKind,
    pub train: TrainConfig,
    /// Window size for the comb repair pass (non-monotone models only).
    pub comb_size: usize,
    pub order: Order,
    /// Seeds the training-sample draw. Model training uses `train.seed`.
    pub seed: u64,
    /// Fraction of the sample's rank space, at each end, whose keys are
    /// routed to the conventional tail sort. 0 means only keys outside the
    /// sample's `[min, max]` are tails.
    pub tail_fraction: f64,
    /// Shard count for the inference phase. 1 is the reference path; any
    /// value produces bit-identical output.
    pub threads: usize,
}

impl Default for SortConfig {
    fn default() -> Self {
        SortConfig {
            n0: 10_000,
            model_kind: ModelKind::Gvm,
            train: TrainConfig::default(),
            comb_size: 16,
            order: Order::Ascending,
            seed: 0,
            tail_fraction: 0.0,
            threads: 1,
        }
    }
}

impl SortConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n0 == 0 {
            return Err(Error::InvalidParameter("n0 must be at least 1".into()));
        }
        if self.comb_size == 0 {
            return Err(Error::InvalidParameter(
                "comb_size must be at least 1".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.tail_fraction) {
            return Err(Error::InvalidParameter(
                "tail_fraction must lie in [0, 0.5)".into(),
            ));
        }
        if self.threads == 0 {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        self.train.validate()
    }
}

/// A key with its estimated rank, clamped to `[0, n-1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankEstimate<T> {
    pub key: T,
    pub rank: usize,
}

/// Rank-labeled buckets in compact form: `keys` grouped by bucket label,
/// arrival order preserved inside each bucket.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketArray<T> {
    offsets: Vec<usize>,
    keys: Vec<T>,
}

impl<T: Scalar> BucketArray<T> {
    /// Stable counting-sort placement of `data[i]` into bucket `ranks[i]`.
    fn from_ranks(data: &[T], ranks: &[usize], n_buckets: usize) -> Self {
        debug_assert_eq!(data.len(), ranks.len());
        let mut offsets = vec![0usize; n_buckets + 1];
        for &r in ranks {
            offsets[r + 1] += 1;
        }
        for q in 1..=n_buckets {
            offsets[q] += offsets[q - 1];
        }
        let mut cursor = offsets.clone();
        let mut keys = vec![T::zero(); data.len()];
        for (i, &r) in ranks.iter().enumerate() {
            keys[cursor[r]] = data[i];
            cursor[r] += 1;
        }
        BucketArray { offsets, keys }
    }

    /// Buckets from explicit key lists, preserving list order.
    pub fn from_lists(lists: Vec<Vec<T>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut keys = Vec::new();
        for list in lists {
            keys.extend(list);
            offsets.push(keys.len());
        }
        BucketArray { offsets, keys }
    }

    pub fn n_buckets(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Total number of placed keys.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn bucket(&self, q: usize) -> &[T] {
        &self.keys[self.offsets[q]..self.offsets[q + 1]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.n_buckets()).map(move |q| self.bucket(q))
    }

    /// Concatenation in bucket-label order, without per-bucket sorting.
    pub fn into_key_vec(self) -> Vec<T> {
        self.keys
    }
}

/// Uniform sample of `n0` keys without replacement, returned sorted
/// ascending. Deterministic for a given seed.
pub fn draw_training_set<T: Scalar>(data: &[T], n0: usize, seed: u64) -> Result<Vec<T>> {
    let n = data.len();
    if n0 > n {
        return Err(Error::SampleTooLarge { n0, n });
    }
    if n0 == 0 {
        return Err(Error::InvalidParameter("n0 must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Floyd's algorithm: n0 distinct indices in O(n0) draws.
    let mut chosen: HashSet<usize> = HashSet::with_capacity(n0);
    for j in (n - n0)..n {
        let t = rng.random_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    let mut indices: Vec<usize> = chosen.into_iter().collect();
    indices.sort_unstable();
    let mut sample = Vec::with_capacity(n0);
    for idx in indices {
        if !data[idx].is_finite() {
            return Err(Error::NonFiniteKey { index: idx });
        }
        sample.push(data[idx]);
    }
    sample.sort_unstable_by(cmp_finite);
    Ok(sample)
}

/// `(key, i/N0)` training pairs from an ascending sample.
pub fn build_rank_pairs<T: Scalar>(sorted_sample: &[T]) -> Vec<(T, T)> {
    let n0 = T::from_usize(sorted_sample.len()).expect("sample size fits the scalar");
    sorted_sample
        .iter()
        .enumerate()
        .map(|(i, k)| (*k, T::from_usize(i).unwrap() / n0))
        .collect()
}

#[inline]
fn cmp_finite<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("keys must be finite")
}

/// Rank of `x` under `model`, scaled to `n` and clamped; no finiteness check.
#[inline]
pub(crate) fn rank_of<T: Scalar, M: CdfModel<T> + ?Sized>(model: &M, x: T, n: usize) -> usize {
    let y = model.predict(x).to_f64_exact();
    // round half away from zero, then clamp into [0, n-1]
    (y * n as f64).round().clamp(0.0, (n - 1) as f64) as usize
}

/// Estimated rank of one key among `n`: `round(predict(x) · n)` with
/// half-away-from-zero rounding, clamped to `[0, n-1]`. Θ(M).
pub fn estimate_rank<T, M>(model: &M, x: T, n: usize) -> Result<RankEstimate<T>>
where
    T: Scalar,
    M: CdfModel<T> + ?Sized,
{
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !x.is_finite() {
        return Err(Error::NonFiniteKey { index: 0 });
    }
    Ok(RankEstimate {
        key: x,
        rank: rank_of(model, x, n),
    })
}

fn predict_ranks<T, M>(data: &[T], model: &M, n_buckets: usize, threads: usize) -> Vec<usize>
where
    T: Scalar,
    M: CdfModel<T> + Sync,
{
    let mut ranks = vec![0usize; data.len()];
    if threads <= 1 || data.len() < 4 * threads {
        for (r, &x) in ranks.iter_mut().zip(data) {
            *r = rank_of(model, x, n_buckets);
        }
        return ranks;
    }
    let chunk = data.len().div_ceil(threads);
    std::thread::scope(|scope| {
        for (in_chunk, out_chunk) in data.chunks(chunk).zip(ranks.chunks_mut(chunk)) {
            scope.spawn(move || {
                for (r, &x) in out_chunk.iter_mut().zip(in_chunk) {
                    *r = rank_of(model, x, n_buckets);
                }
            });
        }
    });
    ranks
}

/// Places every key into bucket `estimate_rank(key)`; input order is
/// preserved inside each bucket. Prediction may be sharded over `threads`;
/// the resulting array is identical for any shard count.
pub fn bucket_place<T, M>(
    data: &[T],
    model: &M,
    n_buckets: usize,
    threads: usize,
) -> Result<BucketArray<T>>
where
    T: Scalar,
    M: CdfModel<T> + Sync,
{
    if n_buckets == 0 {
        return Err(Error::InvalidParameter(
            "bucket count must be at least 1".into(),
        ));
    }
    if let Some(index) = data.iter().position(|k| !k.is_finite()) {
        return Err(Error::NonFiniteKey { index });
    }
    let ranks = predict_ranks(data, model, n_buckets, threads.max(1));
    Ok(BucketArray::from_ranks(data, &ranks, n_buckets))
}

fn insertion_sort<T: Scalar>(s: &mut [T]) {
    for i in 1..s.len() {
        let mut j = i;
        while j > 0 && s[j - 1] > s[j] {
            s.swap(j - 1, j);
            j -= 1;
        }
    }
}

/// Sorts each bucket independently (stable) and concatenates in label
/// order; reversed for descending output. Under a monotone model the
/// concatenation is totally sorted because placement preserves key order
/// across bucket labels.
pub fn fixup_buckets<T: Scalar>(mut buckets: BucketArray<T>, order: Order) -> Vec<T> {
    for q in 0..buckets.n_buckets() {
        let (lo, hi) = (buckets.offsets[q], buckets.offsets[q + 1]);
        let slice = &mut buckets.keys[lo..hi];
        if slice.len() > 1 {
            if slice.len() <= INSERTION_SORT_MAX {
                insertion_sort(slice);
            } else {
                slice.sort_by(cmp_finite);
            }
        }
    }
    let mut keys = buckets.into_key_vec();
    if order == Order::Descending {
        keys.reverse();
    }
    keys
}

/// One sliding-window pass: sorts every `l` consecutive elements, advancing
/// by one. Equivalent to insertion sort restricted to displacement < `l`.
fn comb_pass<T: Scalar>(seq: &mut [T], l: usize) {
    let n = seq.len();
    if n <= 1 {
        return;
    }
    let first = l.min(n);
    insertion_sort(&mut seq[..first]);
    for end in first..n {
        // window [end-l+1, end]; everything before `end` is already sorted,
        // so only the new element needs to sink
        let left = end + 1 - l;
        let mut j = end;
        while j > left && seq[j - 1] > seq[j] {
            seq.swap(j - 1, j);
            j -= 1;
        }
    }
}

pub(crate) struct CombOutcome<T> {
    pub keys: Vec<T>,
    pub escalations: u32,
    pub fell_back: bool,
}

pub(crate) fn comb_fixup_inner<T: Scalar>(mut seq: Vec<T>, l: usize) -> CombOutcome<T> {
    let n = seq.len();
    let mut window = l.max(2);
    let attempts = usize::BITS - n.leading_zeros(); // log2(n) escalations
    let mut escalations = 0;
    for _ in 0..=attempts {
        comb_pass(&mut seq, window);
        if verify_sorted(&seq, Order::Ascending) {
            return CombOutcome {
                keys: seq,
                escalations,
                fell_back: false,
            };
        }
        window = window.saturating_mul(2);
        escalations += 1;
    }
    seq.sort_unstable_by(cmp_finite);
    CombOutcome {
        keys: seq,
        escalations,
        fell_back: true,
    }
}

/// Repairs a nearly sorted sequence with a sliding comb of size `l`
/// (clamped to at least 2). If a pass leaves the sequence unsorted the
/// window doubles, up to log2(N) times, after which a full comparison sort
/// runs — the result is always totally sorted.
pub fn comb_fixup<T: Scalar>(seq: Vec<T>, l: usize) -> Vec<T> {
    comb_fixup_inner(seq, l).keys
}

/// Cut keys for the tail split: the sample quantiles at `tail_fraction`
/// and `1 - tail_fraction`. A fraction of 0 yields the sample min and max.
pub fn tail_cuts<T: Scalar>(sorted_sample: &[T], tail_fraction: f64) -> (T, T) {
    let n0 = sorted_sample.len();
    assert!(n0 > 0, "sample must be non-empty");
    let k = ((tail_fraction * n0 as f64).floor() as usize).min(n0 - 1);
    (sorted_sample[k], sorted_sample[n0 - 1 - k])
}

/// Result of routing out-of-range keys away from the model.
#[derive(Clone, Debug, PartialEq)]
pub struct TailSplit<T> {
    /// Keys below `cut_lo`, comparison-sorted ascending.
    pub low: Vec<T>,
    /// Keys in `[cut_lo, cut_hi]`, input order preserved.
    pub body: Vec<T>,
    /// Keys above `cut_hi`, comparison-sorted ascending.
    pub high: Vec<T>,
    /// Set when either tail holds more than 10% of the keys — the sign
    /// that the data has drifted away from what the sample covers.
    pub drift_warning: bool,
}

/// Splits keys around `[cut_lo, cut_hi]` and comparison-sorts the tails.
pub fn split_tails<T: Scalar>(data: &[T], cut_lo: T, cut_hi: T) -> TailSplit<T> {
    let mut low = Vec::new();
    let mut body = Vec::with_capacity(data.len());
    let mut high = Vec::new();
    for &k in data {
        if k < cut_lo {
            low.push(k);
        } else if k > cut_hi {
            high.push(k);
        } else {
            body.push(k);
        }
    }
    low.sort_unstable_by(cmp_finite);
    high.sort_unstable_by(cmp_finite);
    let limit = data.len() as f64 * 0.10;
    let drift_warning = low.len() as f64 > limit || high.len() as f64 > limit;
    TailSplit {
        low,
        body,
        high,
        drift_warning,
    }
}

/// Wall-clock phase breakdown, in nanoseconds. Training time is reported
/// separately so the sort-time columns can exclude it, and is never folded
/// into `infer_place_ns`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub train_ns: u64,
    pub infer_place_ns: u64,
    pub fixup_ns: u64,
    pub total_ns: u64,
}

/// Everything a run reports besides the keys themselves. All fields except
/// `timings_ns` are deterministic for a given `(input, config)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SortReport {
    pub n: usize,
    pub n0: usize,
    pub model_kind: ModelKind,
    pub neurons: usize,
    pub order: Order,
    pub seed: u64,
    pub threads: usize,
    pub timings_ns: PhaseTimings,
    /// Final training loss; 0 for the piecewise-linear model.
    pub final_loss: f64,
    pub monotone_model: bool,
    /// The sample was all-equal, so a step model replaced the requested one.
    pub degenerate_sample: bool,
    pub used_comb_path: bool,
    pub comb_escalations: u32,
    pub comb_fallback: bool,
    /// Max |bucket proportion − expected occupancy| over q ≤ 4.
    pub occupancy_fit: f64,
    pub low_tail: usize,
    pub high_tail: usize,
    pub drift_warning: bool,
    pub verified: bool,
}

/// Sorted keys plus the fitted model and the run report.
#[derive(Clone, Debug)]
pub struct SortOutcome<T> {
    pub keys: Vec<T>,
    pub model: FittedModel<T>,
    pub report: SortReport,
}

/// Sorts `data` through the learned pipeline. See [`ml_sort_with_report`]
/// for the full outcome.
pub fn ml_sort<T: Scalar>(data: &[T], cfg: &SortConfig) -> Result<Vec<T>> {
    ml_sort_with_report(data, cfg).map(|o| o.keys)
}

/// Sorts `data` and returns the output, the fitted model and a report.
///
/// Errors on empty input, any non-finite key (reported with its index) and
/// `n0` larger than the input. The output is verified sorted before it is
/// returned; a verification failure is a pipeline bug, surfaced as
/// [`Error::VerificationFailed`].
pub fn ml_sort_with_report<T: Scalar>(data: &[T], cfg: &SortConfig) -> Result<SortOutcome<T>> {
    cfg.validate()?;
    let t_total = Instant::now();
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(index) = data.iter().position(|k| !k.is_finite()) {
        return Err(Error::NonFiniteKey { index });
    }
    let n = data.len();

    // training sample and model
    let t = Instant::now();
    let sample = draw_training_set(data, cfg.n0, cfg.seed)?;
    let degenerate_sample = sample[0] == sample[sample.len() - 1];
    let model = if degenerate_sample {
        // No range to fit; a two-knot step model still routes every key to
        // a well-defined bucket and stays monotone.
        let knots = vec![sample[0], sample[0]];
        FittedModel::PiecewiseLinear(PiecewiseLinear::fit(&knots)?)
    } else {
        match cfg.model_kind {
            ModelKind::PiecewiseLinear => {
                FittedModel::PiecewiseLinear(PiecewiseLinear::fit(&sample)?)
            }
            ModelKind::Gvm => {
                let pairs = build_rank_pairs(&sample);
                FittedModel::Gvm(train_gvm(&pairs, &cfg.train)?)
            }
        }
    };
    let train_ns = t.elapsed().as_nanos() as u64;

    // tail split
    let (cut_lo, cut_hi) = tail_cuts(&sample, cfg.tail_fraction);
    let split = split_tails(data, cut_lo, cut_hi);

    // inference + placement
    let t = Instant::now();
    let body_n = split.body.len();
    let buckets = if body_n > 0 {
        bucket_place(&split.body, &model, body_n, cfg.threads)?
    } else {
        BucketArray::from_lists(Vec::new())
    };
    let occ_fit = occupancy_fit(&occupancy_histogram(&buckets));
    let infer_place_ns = t.elapsed().as_nanos() as u64;

    // local repair
    let t = Instant::now();
    let monotone_model = model.is_monotone();
    let (body_sorted, used_comb_path, comb_escalations, comb_fallback) = if monotone_model {
        (fixup_buckets(buckets, Order::Ascending), false, 0, false)
    } else {
        let outcome = comb_fixup_inner(buckets.into_key_vec(), cfg.comb_size);
        (outcome.keys, true, outcome.escalations, outcome.fell_back)
    };
    let fixup_ns = t.elapsed().as_nanos() as u64;

    // splice tails
    let mut keys = Vec::with_capacity(n);
    keys.extend_from_slice(&split.low);
    keys.extend_from_slice(&body_sorted);
    keys.extend_from_slice(&split.high);

    if !verify_sorted(&keys, Order::Ascending) {
        return Err(Error::VerificationFailed);
    }
    if cfg.order == Order::Descending {
        keys.reverse();
    }

    let final_loss = match &model {
        FittedModel::Gvm(g) => g.final_loss,
        FittedModel::PiecewiseLinear(_) => 0.0,
    };
    let report = SortReport {
        n,
        n0: cfg.n0,
        model_kind: model.kind(),
        neurons: model.neuron_count(),
        order: cfg.order,
        seed: cfg.seed,
        threads: cfg.threads,
        timings_ns: PhaseTimings {
            train_ns,
            infer_place_ns,
            fixup_ns,
            total_ns: t_total.elapsed().as_nanos() as u64,
        },
        final_loss,
        monotone_model,
        degenerate_sample,
        used_comb_path,
        comb_escalations,
        comb_fallback,
        occupancy_fit: occ_fit,
        low_tail: split.low.len(),
        high_tail: split.high.len(),
        drift_warning: split.drift_warning,
        verified: true,
    };
    Ok(SortOutcome {
        keys,
        model,
        report,
    })
}
