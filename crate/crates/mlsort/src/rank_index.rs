//! Learned approximate-rank index.
//!
//! Build: sort the data through the learned pipeline, train a monotone
//! network on `(key, rank/N)` pairs of the *sorted* data, then measure the
//! worst rank error over every stored key and remember it. Query: one Θ(M)
//! forward pass gives an estimated rank; a binary search restricted to the
//! window `[r̂ − d, r̂ + d + 1]` resolves the exact position block (or the
//! insertion point for absent keys). Because the model is monotone and `d`
//! bounds the per-position error of every stored key, the window provably
//! contains the answer — correctness never rests on an assumed bound.
//!
//! The structure plays the role of a sparse hash table whose key code is
//! the rank itself; there is no hashing involved.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{train_gvm, Activation, Gvm, GvmParams};
use crate::scalar::Scalar;
use crate::sorter::{ml_sort, rank_of, SortConfig};

/// Magic bytes opening the raw key artifact.
pub const KEYS_MAGIC: &[u8; 8] = b"MLSKEYS\0";
pub const INDEX_FORMAT_VERSION: u32 = 1;

/// Result of a rank-index lookup.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup {
    /// The key is stored at every position in `lo..=hi`.
    Found { lo: usize, hi: usize },
    /// The key is absent; inserting it at `insertion` keeps the keys sorted.
    NotFound { insertion: usize },
}

#[derive(Clone, Debug)]
pub struct RankIndex<T> {
    keys: Vec<T>,
    model: Gvm<T>,
    max_deviation: usize,
}

impl<T: Scalar> RankIndex<T> {
    /// Sorts `data`, fits the rank model and measures its worst deviation.
    /// Deterministic for a given config. The model is always trained with
    /// the monotonicity constraint — windowed lookups depend on it — and
    /// training pairs are `n0` evenly spaced positions of the sorted data.
    pub fn build(data: &[T], cfg: &SortConfig) -> Result<Self> {
        let mut cfg = cfg.clone();
        cfg.order = crate::sorter::Order::Ascending;
        cfg.train.enforce_monotone = true;
        let keys = ml_sort(data, &cfg)?;
        let n = keys.len();

        let model = if keys[0] == keys[n - 1] {
            // all keys equal: nothing to learn, predict rank 0 everywhere
            constant_model(keys[0])
        } else {
            let anchors = cfg.n0.min(n).max(2);
            let nf = T::from_usize(n).expect("key count fits the scalar");
            let pairs: Vec<(T, T)> = (0..anchors)
                .map(|j| {
                    let i = j * (n - 1) / (anchors - 1);
                    (keys[i], T::from_usize(i).unwrap() / nf)
                })
                .collect();
            train_gvm(&pairs, &cfg.train)?
        };

        // worst per-position rank error over the stored keys; recomputing
        // the prediction only when the key changes keeps duplicates cheap
        let mut max_deviation = 0usize;
        let mut ranks = Vec::with_capacity(n);
        let mut last: Option<(T, usize)> = None;
        for &k in &keys {
            let r = match last {
                Some((prev, r)) if prev == k => r,
                _ => rank_of(&model, k, n),
            };
            last = Some((k, r));
            ranks.push(r);
        }
        for (i, &r) in ranks.iter().enumerate() {
            max_deviation = max_deviation.max(r.abs_diff(i));
        }
        // window sufficiency: every stored position is reachable from its
        // prediction within the bound
        for (i, &r) in ranks.iter().enumerate() {
            assert!(
                r.abs_diff(i) <= max_deviation,
                "deviation bound violated at position {i}"
            );
        }

        Ok(RankIndex {
            keys,
            model,
            max_deviation,
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[T] {
        &self.keys
    }

    pub fn model(&self) -> &Gvm<T> {
        &self.model
    }

    /// Worst |predicted rank − position| observed over the stored keys.
    pub fn max_deviation(&self) -> usize {
        self.max_deviation
    }

    /// Looks up `x` with one forward pass plus a binary search restricted
    /// to the deviation window: O(M + log(window)).
    pub fn query(&self, x: T) -> Result<Lookup> {
        if !x.is_finite() {
            return Err(Error::NonFiniteKey { index: 0 });
        }
        let n = self.keys.len();
        let r = rank_of(&self.model, x, n);
        let w_lo = r.saturating_sub(self.max_deviation);
        let w_end = (r + self.max_deviation + 1).min(n);
        let window = &self.keys[w_lo..w_end];
        let left = w_lo + window.partition_point(|k| *k < x);
        let right = w_lo + window.partition_point(|k| *k <= x);
        if left < right {
            Ok(Lookup::Found {
                lo: left,
                hi: right - 1,
            })
        } else {
            Ok(Lookup::NotFound { insertion: left })
        }
    }

    /// Writes the two-part artifact: the model document as JSON and the
    /// keys as a version-tagged raw little-endian 64-bit stream.
    pub fn save<W1, W2>(&self, model_out: W1, mut keys_out: W2) -> Result<()>
    where
        T: Serialize,
        W1: Write,
        W2: Write,
    {
        let doc = IndexDocument {
            version: INDEX_FORMAT_VERSION,
            max_deviation: self.max_deviation,
            key_count: self.keys.len() as u64,
            model: self.model.clone(),
        };
        serde_json::to_writer(model_out, &doc)?;

        keys_out.write_all(KEYS_MAGIC)?;
        keys_out.write_all(&INDEX_FORMAT_VERSION.to_le_bytes())?;
        keys_out.write_all(&(self.keys.len() as u64).to_le_bytes())?;
        for k in &self.keys {
            keys_out.write_all(&k.to_f64_exact().to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the two-part artifact back and re-validates the deviation
    /// bound against the stored keys, so a tampered bound cannot produce
    /// silently wrong lookups.
    pub fn load<R1, R2>(model_in: R1, mut keys_in: R2) -> Result<Self>
    where
        T: DeserializeOwned,
        R1: Read,
        R2: Read,
    {
        let doc: IndexDocument<T> = serde_json::from_reader(model_in)?;
        if doc.version != INDEX_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: doc.version,
                expected: INDEX_FORMAT_VERSION,
            });
        }
        doc.model
            .params
            .validate()
            .map_err(|e| Error::MalformedArtifact(format!("invalid model: {e}")))?;

        let mut magic = [0u8; 8];
        keys_in.read_exact(&mut magic)?;
        if &magic != KEYS_MAGIC {
            return Err(Error::MalformedArtifact(
                "bad magic in key artifact".into(),
            ));
        }
        let mut word = [0u8; 4];
        keys_in.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != INDEX_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                expected: INDEX_FORMAT_VERSION,
            });
        }
        let mut loong = [0u8; 8];
        keys_in.read_exact(&mut loong)?;
        let count = u64::from_le_bytes(loong) as usize;
        if count != doc.key_count as usize {
            return Err(Error::MalformedArtifact(format!(
                "key counts disagree: model says {}, key artifact says {count}",
                doc.key_count
            )));
        }
        let mut keys = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for i in 0..count {
            keys_in.read_exact(&mut buf)?;
            let k = T::from_f64_approx(f64::from_le_bytes(buf));
            if !k.is_finite() {
                return Err(Error::NonFiniteKey { index: i });
            }
            keys.push(k);
        }
        if let Some(i) = keys.windows(2).position(|w| !(w[0] <= w[1])) {
            return Err(Error::NotSorted { index: i + 1 });
        }

        let index = RankIndex {
            keys,
            model: doc.model,
            max_deviation: doc.max_deviation,
        };
        let n = index.keys.len();
        for (i, &k) in index.keys.iter().enumerate() {
            let r = rank_of(&index.model, k, n);
            if r.abs_diff(i) > index.max_deviation {
                return Err(Error::MalformedArtifact(format!(
                    "stored deviation bound {} is violated at position {i}",
                    index.max_deviation
                )));
            }
        }
        Ok(index)
    }
}

fn constant_model<T: Scalar>(key: T) -> Gvm<T> {
    Gvm {
        params: GvmParams {
            w1: vec![T::zero()],
            w2: vec![T::zero()],
            b: vec![T::zero()],
            beta: vec![T::zero()],
            input_lo: key - T::one(),
            input_hi: key + T::one(),
            activation: Activation::Logistic,
        },
        final_loss: 0.0,
        seed: 0,
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
struct IndexDocument<T> {
    version: u32,
    max_deviation: usize,
    key_count: u64,
    model: Gvm<T>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionSpec;
    use crate::model::TrainConfig;

    fn oracle_lookup(keys: &[f64], x: f64) -> Lookup {
        let lo = keys.partition_point(|k| *k < x);
        let hi = keys.partition_point(|k| *k <= x);
        if lo < hi {
            Lookup::Found { lo, hi: hi - 1 }
        } else {
            Lookup::NotFound { insertion: lo }
        }
    }

    fn small_cfg(seed: u64) -> SortConfig {
        SortConfig {
            n0: 200,
            seed,
            train: TrainConfig {
                neurons: 10,
                iterations: 5_000,
                seed: seed + 1,
                ..TrainConfig::default()
            },
            ..SortConfig::default()
        }
    }

    fn with_n0(cfg: &SortConfig, n0: usize) -> SortConfig {
        SortConfig { n0, ..cfg.clone() }
    }

    #[test]
    fn single_key_index() {
        let idx = RankIndex::build(&[42.0], &with_n0(&small_cfg(0), 1)).unwrap();
        assert_eq!(idx.max_deviation(), 0);
        assert_eq!(idx.query(42.0).unwrap(), Lookup::Found { lo: 0, hi: 0 });
        assert_eq!(
            idx.query(41.0).unwrap(),
            Lookup::NotFound { insertion: 0 }
        );
        assert_eq!(
            idx.query(43.0).unwrap(),
            Lookup::NotFound { insertion: 1 }
        );
    }

    #[test]
    fn duplicate_only_dataset_returns_whole_block() {
        let data = vec![7.0f64; 100];
        let idx = RankIndex::build(&data, &with_n0(&small_cfg(1), 10)).unwrap();
        assert_eq!(idx.query(7.0).unwrap(), Lookup::Found { lo: 0, hi: 99 });
        assert_eq!(idx.query(6.0).unwrap(), Lookup::NotFound { insertion: 0 });
        assert_eq!(
            idx.query(8.0).unwrap(),
            Lookup::NotFound { insertion: 100 }
        );
    }

    #[test]
    fn queries_match_unrestricted_binary_search() {
        let spec = DistributionSpec::uniform(-1000.0, 1000.0, 3).unwrap();
        let data = spec.generate(20_000).unwrap();
        let idx = RankIndex::build(&data, &small_cfg(5)).unwrap();

        // stored keys, absent keys, keys outside the range
        let mut probes: Vec<f64> = data.iter().step_by(7).copied().collect();
        let probe_spec = DistributionSpec::uniform(-1500.0, 1500.0, 91).unwrap();
        probes.extend(probe_spec.generate(2_000).unwrap());
        for x in probes {
            assert_eq!(
                idx.query(x).unwrap(),
                oracle_lookup(idx.keys(), x),
                "probe {x}"
            );
        }
    }

    #[test]
    fn query_rejects_non_finite() {
        let idx = RankIndex::build(&[1.0, 2.0], &with_n0(&small_cfg(0), 2)).unwrap();
        assert!(idx.query(f64::NAN).is_err());
    }

    #[test]
    fn persistence_round_trip() {
        let spec = DistributionSpec::uniform(0.0f64, 100.0, 8).unwrap();
        let data = spec.generate(5_000).unwrap();
        let idx = RankIndex::build(&data, &small_cfg(2)).unwrap();

        let mut model_buf = Vec::new();
        let mut keys_buf = Vec::new();
        idx.save(&mut model_buf, &mut keys_buf).unwrap();
        assert_eq!(&keys_buf[..8], KEYS_MAGIC);

        let back: RankIndex<f64> =
            RankIndex::load(model_buf.as_slice(), keys_buf.as_slice()).unwrap();
        assert_eq!(back.max_deviation(), idx.max_deviation());
        assert_eq!(back.len(), idx.len());
        for (a, b) in idx.keys().iter().zip(back.keys()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in idx.model().params.w1.iter().zip(&back.model().params.w1) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // same answers after reload
        for x in [data[0], data[100], 1e9, -1e9, 51.3] {
            assert_eq!(idx.query(x).unwrap(), back.query(x).unwrap());
        }
    }

    #[test]
    fn load_rejects_bad_artifacts() {
        let idx = RankIndex::build(&[1.0, 2.0, 3.0], &with_n0(&small_cfg(0), 3)).unwrap();
        let mut model_buf = Vec::new();
        let mut keys_buf = Vec::new();
        idx.save(&mut model_buf, &mut keys_buf).unwrap();

        let mut bad_magic = keys_buf.clone();
        bad_magic[0] = b'X';
        assert!(RankIndex::<f64>::load(model_buf.as_slice(), bad_magic.as_slice()).is_err());

        let mut bad_version = keys_buf.clone();
        bad_version[8] = 99;
        assert!(matches!(
            RankIndex::<f64>::load(model_buf.as_slice(), bad_version.as_slice()),
            Err(Error::UnsupportedVersion { found: 99, .. })
        ));
    }
}
