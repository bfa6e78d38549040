//! Statistical verification: bucket-occupancy law, rank-deviation
//! statistics, sortedness checks.
//!
//! Placing `n` keys into `n` rank buckets through a well-fitted model is a
//! balls-into-bins experiment, so the fraction of buckets holding exactly
//! `q` keys should follow `C(n,q)·(1/n)^q·(1−1/n)^(n−q)` — essentially
//! Poisson(1) for large `n`. [`occupancy_fit`] measures how far a real
//! placement is from that law.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sorter::{BucketArray, Order, RankEstimate};

/// True iff adjacent pairs all satisfy the order. Sequences containing NaN
/// are never sorted.
pub fn verify_sorted<T: Scalar>(seq: &[T], order: Order) -> bool {
    match order {
        Order::Ascending => seq.windows(2).all(|w| w[0] <= w[1]),
        Order::Descending => seq.windows(2).all(|w| w[0] >= w[1]),
    }
}

/// How many buckets hold exactly `q` keys, for each observed `q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyHistogram {
    counts: BTreeMap<usize, usize>,
    buckets: usize,
    keys: usize,
}

impl OccupancyHistogram {
    /// `q → number of buckets holding exactly q keys`. Only observed
    /// occupancies appear; Σ counts = bucket count, Σ q·counts = key count.
    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets
    }

    pub fn key_count(&self) -> usize {
        self.keys
    }

    /// Fraction of buckets holding exactly `q` keys.
    pub fn proportion(&self, q: usize) -> f64 {
        if self.buckets == 0 {
            return 0.0;
        }
        *self.counts.get(&q).unwrap_or(&0) as f64 / self.buckets as f64
    }
}

/// Exact occupancy counts of a bucket array. O(N).
pub fn occupancy_histogram<T: Scalar>(buckets: &BucketArray<T>) -> OccupancyHistogram {
    let mut counts = BTreeMap::new();
    for b in buckets.iter() {
        *counts.entry(b.len()).or_insert(0) += 1;
    }
    OccupancyHistogram {
        counts,
        buckets: buckets.n_buckets(),
        keys: buckets.len(),
    }
}

/// Builds the histogram straight from rank labels (bucket `r` receives one
/// key per occurrence of `r`).
pub fn occupancy_from_ranks(ranks: &[usize], n_buckets: usize) -> Result<OccupancyHistogram> {
    let mut sizes = vec![0usize; n_buckets];
    for (i, &r) in ranks.iter().enumerate() {
        if r >= n_buckets {
            return Err(Error::InvalidParameter(format!(
                "rank {r} at index {i} exceeds bucket count {n_buckets}"
            )));
        }
        sizes[r] += 1;
    }
    let mut counts = BTreeMap::new();
    for s in sizes {
        *counts.entry(s).or_insert(0) += 1;
    }
    Ok(OccupancyHistogram {
        counts,
        buckets: n_buckets,
        keys: ranks.len(),
    })
}

/// Probability that a bucket holds exactly `q` of `n` keys thrown uniformly
/// into `n` buckets: `C(n,q)·(1/n)^q·(1−1/n)^(n−q)`, evaluated in log space
/// so it stays accurate for large `n`.
pub fn expected_occupancy(n: usize, q: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "bucket count must be at least 1".into(),
        ));
    }
    if q > n {
        return Err(Error::OccupancyOutOfRange { q, n });
    }
    if n == 1 {
        return Ok(if q == 1 { 1.0 } else { 0.0 });
    }
    let nf = n as f64;
    let ln_choose =
        libm::lgamma(nf + 1.0) - libm::lgamma(q as f64 + 1.0) - libm::lgamma((n - q) as f64 + 1.0);
    let ln_p = ln_choose - q as f64 * nf.ln() + (n - q) as f64 * (-1.0 / nf).ln_1p();
    Ok(ln_p.exp())
}

/// Max over q ∈ {0..4} of |observed proportion − expected_occupancy(n, q)|.
pub fn occupancy_fit(hist: &OccupancyHistogram) -> f64 {
    let n = hist.bucket_count();
    if n == 0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for q in 0..=4usize {
        let expected = if q <= n {
            expected_occupancy(n, q).expect("q <= n")
        } else {
            0.0
        };
        worst = worst.max((hist.proportion(q) - expected).abs());
    }
    worst
}

/// Aggregated |estimated rank − true rank| over a data set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub max_abs: usize,
    pub mean_abs: f64,
    /// Counts by magnitude: bin 0 holds exact hits, bin k ≥ 1 holds
    /// deviations in `[2^(k-1), 2^k)`.
    pub magnitude_bins: Vec<usize>,
}

/// Deviation of rank estimates against the oracle-sorted truth.
///
/// Duplicate keys occupy a block of ranks in the truth; an estimate pointing
/// anywhere inside its key's block counts as deviation 0, otherwise the
/// distance to the nearest block edge. The truth sequence must be sorted
/// ascending and the lengths must match.
pub fn deviation_stats<T: Scalar>(
    estimates: &[RankEstimate<T>],
    truth: &[T],
) -> Result<DeviationStats> {
    if estimates.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truth.len(),
        });
    }
    if let Some(i) = truth.windows(2).position(|w| !(w[0] <= w[1])) {
        return Err(Error::NotSorted { index: i + 1 });
    }
    let mut max_abs = 0usize;
    let mut sum = 0.0f64;
    let mut bins = Vec::new();
    for (i, est) in estimates.iter().enumerate() {
        let lo = truth.partition_point(|k| *k < est.key);
        let hi = truth.partition_point(|k| *k <= est.key);
        if lo == hi {
            return Err(Error::TruthMismatch { index: i });
        }
        let dev = if est.rank < lo {
            lo - est.rank
        } else if est.rank > hi - 1 {
            est.rank - (hi - 1)
        } else {
            0
        };
        max_abs = max_abs.max(dev);
        sum += dev as f64;
        let bin = if dev == 0 {
            0
        } else {
            (usize::BITS - dev.leading_zeros()) as usize
        };
        if bins.len() <= bin {
            bins.resize(bin + 1, 0);
        }
        bins[bin] += 1;
    }
    Ok(DeviationStats {
        max_abs,
        mean_abs: sum / estimates.len().max(1) as f64,
        magnitude_bins: bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sorter::BucketArray;

    #[test]
    fn verify_sorted_cases() {
        assert!(verify_sorted::<f64>(&[], Order::Ascending));
        assert!(verify_sorted(&[1.0, 2.0, 2.0, 3.0], Order::Ascending));
        assert!(!verify_sorted(&[1.0, 3.0, 2.0], Order::Ascending));
        assert!(verify_sorted(&[3.0, 2.0, 2.0], Order::Descending));
        assert!(!verify_sorted(&[1.0, f64::NAN], Order::Ascending));
    }

    #[test]
    fn occupancy_histogram_counts() {
        let b = BucketArray::from_lists(vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let h = occupancy_histogram(&b);
        assert_eq!(h.counts().get(&1), Some(&4));
        assert_eq!(h.bucket_count(), 4);
        assert_eq!(h.key_count(), 4);

        let empty = BucketArray::<f64>::from_lists(vec![vec![], vec![], vec![]]);
        let h = occupancy_histogram(&empty);
        assert_eq!(h.counts().get(&0), Some(&3));
    }

    #[test]
    fn occupancy_conservation_laws() {
        let b = BucketArray::from_lists(vec![
            vec![1.0, 1.5],
            vec![],
            vec![2.0],
            vec![3.0, 3.5, 4.0],
            vec![],
        ]);
        let h = occupancy_histogram(&b);
        let total_keys: usize = h.counts().iter().map(|(q, c)| q * c).sum();
        let total_buckets: usize = h.counts().values().sum();
        assert_eq!(total_keys, h.key_count());
        assert_eq!(total_buckets, h.bucket_count());
    }

    #[test]
    fn expected_occupancy_values() {
        assert_eq!(expected_occupancy(1, 1).unwrap(), 1.0);
        assert_eq!(expected_occupancy(1, 0).unwrap(), 0.0);
        assert!((expected_occupancy(2, 0).unwrap() - 0.25).abs() < 1e-12);
        // e^{-1} limit
        let p1 = expected_occupancy(1_000_000, 1).unwrap();
        assert!((p1 - 0.36788).abs() < 1e-4, "p1 = {p1}");
        assert!(matches!(
            expected_occupancy(3, 4),
            Err(Error::OccupancyOutOfRange { .. })
        ));
    }

    #[test]
    fn expected_occupancy_sums_to_one() {
        // q > 50 contributes less than 1e-60 at n = 1e6
        for n in [2usize, 10, 1000, 1_000_000] {
            let sum: f64 = (0..=n.min(50))
                .map(|q| expected_occupancy(n, q).unwrap())
                .sum();
            assert!((sum - 1.0).abs() < 1e-9, "n={n} sum={sum}");
        }
    }

    #[test]
    fn occupancy_fit_poisson_placement() {
        // throw 1e6 keys into 1e6 buckets uniformly: the definitionally
        // binomial placement must sit well under 0.02
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000usize;
        let ranks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let h = occupancy_from_ranks(&ranks, n).unwrap();
        let fit = occupancy_fit(&h);
        assert!(fit < 0.02, "fit = {fit}");
    }

    #[test]
    fn occupancy_fit_degenerate_cases() {
        // all keys in one bucket: the q=0 term dominates at 1 - 1/n - e^{-1}
        let n = 1000usize;
        let ranks = vec![0usize; n];
        let h = occupancy_from_ranks(&ranks, n).unwrap();
        let fit = occupancy_fit(&h);
        let expect_q0 = ((n - 1) as f64 / n as f64 - expected_occupancy(n, 0).unwrap()).abs();
        assert!((fit - expect_q0).abs() < 1e-12, "fit={fit} expected={expect_q0}");
        assert!(fit > 0.6);

        // single bucket holding the single key: everything matches exactly
        let h = occupancy_from_ranks(&[0], 1).unwrap();
        assert_eq!(occupancy_fit(&h), 0.0);
    }

    #[test]
    fn deviation_stats_perfect_estimates() {
        let truth = [1.0, 2.0, 3.0];
        let ests: Vec<RankEstimate<f64>> = truth
            .iter()
            .enumerate()
            .map(|(i, k)| RankEstimate { key: *k, rank: i })
            .collect();
        let d = deviation_stats(&ests, &truth).unwrap();
        assert_eq!(d.max_abs, 0);
        assert_eq!(d.mean_abs, 0.0);
        assert_eq!(d.magnitude_bins, vec![3]);
    }

    #[test]
    fn deviation_stats_tie_blocks() {
        let truth = [5.0, 5.0, 5.0, 9.0];
        // any rank inside the block [0, 2] is deviation 0 for key 5
        let d = deviation_stats(
            &[
                RankEstimate { key: 5.0, rank: 2 },
                RankEstimate { key: 5.0, rank: 0 },
                RankEstimate { key: 5.0, rank: 3 }, // one past the block
                RankEstimate { key: 9.0, rank: 0 }, // three below its rank
            ],
            &truth,
        )
        .unwrap();
        assert_eq!(d.max_abs, 3);
        assert!((d.mean_abs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deviation_stats_validation() {
        let truth = [1.0, 2.0];
        let ests = [RankEstimate { key: 1.0, rank: 0 }];
        assert!(matches!(
            deviation_stats(&ests, &truth),
            Err(Error::LengthMismatch { .. })
        ));

        let shuffled = [2.0, 1.0];
        let ests = [
            RankEstimate { key: 1.0, rank: 0 },
            RankEstimate { key: 2.0, rank: 1 },
        ];
        assert!(matches!(
            deviation_stats(&ests, &shuffled),
            Err(Error::NotSorted { .. })
        ));

        let truth = [1.0, 2.0];
        let ests = [
            RankEstimate { key: 1.0, rank: 0 },
            RankEstimate { key: 7.0, rank: 1 },
        ];
        assert!(matches!(
            deviation_stats(&ests, &truth),
            Err(Error::TruthMismatch { index: 1 })
        ));
    }

    #[test]
    fn deviation_stats_identity_model_on_uniform() {
        // identity model on U(0,1): deviation is bounded by the sampling
        // noise of the data's own empirical CDF (~ sqrt(N) scale)
        use crate::dist::DistributionSpec;
        use crate::sorter::estimate_rank;

        struct Identity;
        impl crate::model::CdfModel<f64> for Identity {
            fn predict(&self, x: f64) -> f64 {
                x
            }
            fn is_monotone(&self) -> bool {
                true
            }
            fn neuron_count(&self) -> usize {
                0
            }
        }

        let spec = DistributionSpec::uniform(0.0, 1.0, 17).unwrap();
        let data = spec.generate(10_000).unwrap();
        let mut truth = data.clone();
        truth.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let ests: Vec<RankEstimate<f64>> = data
            .iter()
            .map(|k| estimate_rank(&Identity, *k, data.len()).unwrap())
            .collect();
        let d = deviation_stats(&ests, &truth).unwrap();
        assert!(d.max_abs < 200, "max deviation {}", d.max_abs);
        assert!(d.max_abs as f64 >= d.mean_abs);
    }
}
