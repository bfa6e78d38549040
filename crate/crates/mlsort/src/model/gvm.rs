//! Single-hidden-layer network trained by seeded random search.
//!
//! The forward pass is `y = Σ_j w2[j] · f0(beta[j]·(w1[j]·x̂ − b[j]))` where
//! `x̂` is the key rescaled to `[-1, 1]` from the training range and `f0` is
//! the logistic sigmoid. Since `f0' ≥ 0`, keeping `w1[j]·w2[j]·beta[j] ≥ 0`
//! for every neuron makes the network non-decreasing on all of ℝ; training
//! rejects any proposal that would break that sign condition.
//!
//! Training is a greedy randomized local search: perturb one scalar of one
//! neuron with a Gaussian step, accept only strict loss improvements, stop
//! at the iteration cap or once the mean squared error reaches the target.
//! Everything is driven by one seeded generator, so a training run is fully
//! reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Activation, CdfModel};
use crate::scalar::Scalar;

/// Weights, biases and sensitivities of the hidden layer, plus the key-space
/// normalization bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GvmParams<T> {
    pub w1: Vec<T>,
    pub w2: Vec<T>,
    pub b: Vec<T>,
    pub beta: Vec<T>,
    pub input_lo: T,
    pub input_hi: T,
    pub activation: Activation,
}

impl<T: Scalar> GvmParams<T> {
    pub fn neuron_count(&self) -> usize {
        self.w1.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.w1.len();
        if m == 0 {
            return Err(Error::InvalidParameter(
                "network needs at least one neuron".into(),
            ));
        }
        if self.w2.len() != m || self.b.len() != m || self.beta.len() != m {
            return Err(Error::InvalidParameter(format!(
                "parameter arrays must all have length {m}"
            )));
        }
        if !(self.input_lo < self.input_hi)
            || !self.input_lo.is_finite()
            || !self.input_hi.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "input bounds must satisfy lo < hi, got lo={}, hi={}",
                self.input_lo, self.input_hi
            )));
        }
        for j in 0..m {
            if !(self.w1[j].is_finite()
                && self.w2[j].is_finite()
                && self.b[j].is_finite()
                && self.beta[j].is_finite())
            {
                return Err(Error::InvalidParameter(format!(
                    "neuron {j} has a non-finite parameter"
                )));
            }
        }
        Ok(())
    }

    /// Affine rescale of `x` from `[input_lo, input_hi]` to `[-1, 1]`;
    /// extrapolates outside.
    #[inline]
    fn normalize(&self, x: T) -> T {
        let two = T::one() + T::one();
        two * (x - self.input_lo) / (self.input_hi - self.input_lo) - T::one()
    }

    /// Forward pass; Θ(m), exactly `m` activation evaluations.
    pub fn forward(&self, x: T) -> T {
        let xn = self.normalize(x);
        let mut y = T::zero();
        for j in 0..self.w1.len() {
            let t = self.beta[j] * (self.w1[j] * xn - self.b[j]);
            y += self.w2[j] * self.activation.apply(t);
        }
        y
    }

    /// Per-neuron sign condition: `w1[j]·w2[j]·beta[j] ≥ 0` for all `j`.
    ///
    /// With a monotone activation this is sufficient (not necessary) for the
    /// forward pass to be non-decreasing on all of ℝ.
    pub fn check_monotone(&self) -> bool {
        (0..self.w1.len()).all(|j| self.w1[j] * self.w2[j] * self.beta[j] >= T::zero())
    }
}

/// A trained network together with its training record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gvm<T> {
    pub params: GvmParams<T>,
    /// Mean squared error over the training pairs at the end of training.
    pub final_loss: f64,
    pub seed: u64,
}

impl<T: Scalar> CdfModel<T> for Gvm<T> {
    fn predict(&self, x: T) -> T {
        self.params.forward(x)
    }

    fn is_monotone(&self) -> bool {
        self.params.check_monotone()
    }

    fn neuron_count(&self) -> usize {
        self.params.neuron_count()
    }
}

/// Random-search training settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hidden-layer size.
    pub neurons: usize,
    /// Proposal budget; every proposal counts, accepted or not.
    pub iterations: u64,
    /// Relative proposal step: one scalar moves by
    /// `perturb_scale · (1 + |value|) · N(0,1)`.
    pub perturb_scale: f64,
    /// Stop early once the mean squared error drops to this.
    pub target_loss: f64,
    pub seed: u64,
    /// Reject proposals that break the per-neuron sign condition.
    pub enforce_monotone: bool,
    /// Independent search chains (seeds `seed`, `seed+1`, ...); the
    /// best-loss result wins. Each restart gets the full iteration budget.
    pub restarts: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            neurons: 50,
            iterations: 30_000,
            perturb_scale: 0.25,
            target_loss: 1e-6,
            seed: 0,
            enforce_monotone: true,
            restarts: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neurons == 0 {
            return Err(Error::InvalidParameter("neurons must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "iterations must be at least 1".into(),
            ));
        }
        if !(self.perturb_scale > 0.0) || !self.perturb_scale.is_finite() {
            return Err(Error::InvalidParameter(
                "perturb_scale must be positive and finite".into(),
            ));
        }
        if !(self.target_loss >= 0.0) {
            return Err(Error::InvalidParameter(
                "target_loss must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Fits a network to `(key, target)` pairs by randomized local search.
///
/// Targets must be finite and in `[0, 1]`; keys must cover a non-degenerate
/// range. The returned model records the final training loss and the seed
/// of the winning chain.
pub fn train_gvm<T: Scalar>(pairs: &[(T, T)], cfg: &TrainConfig) -> Result<Gvm<T>> {
    Ok(train_restarts(pairs, cfg)?.0)
}

/// Like [`train_gvm`] but also returns the loss after initialization and
/// after every accepted proposal of the winning chain. The sequence is
/// strictly decreasing.
pub fn train_gvm_traced<T: Scalar>(
    pairs: &[(T, T)],
    cfg: &TrainConfig,
) -> Result<(Gvm<T>, Vec<f64>)> {
    train_restarts(pairs, cfg)
}

fn train_restarts<T: Scalar>(pairs: &[(T, T)], cfg: &TrainConfig) -> Result<(Gvm<T>, Vec<f64>)> {
    let mut best: Option<(Gvm<T>, Vec<f64>)> = None;
    for r in 0..cfg.restarts.max(1) {
        let chain_cfg = TrainConfig {
            seed: cfg.seed.wrapping_add(r),
            restarts: 1,
            ..cfg.clone()
        };
        let mut trace = Vec::new();
        let gvm = train_impl(pairs, &chain_cfg, |loss| trace.push(loss))?;
        let done = gvm.final_loss <= cfg.target_loss;
        if best
            .as_ref()
            .map_or(true, |(b, _)| gvm.final_loss < b.final_loss)
        {
            best = Some((gvm, trace));
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one chain runs"))
}

// Which scalar of a neuron a proposal perturbs; 3 is beta.
const PARAM_W1: u8 = 0;
const PARAM_W2: u8 = 1;
const PARAM_B: u8 = 2;

fn train_impl<T, F>(pairs: &[(T, T)], cfg: &TrainConfig, mut on_accept: F) -> Result<Gvm<T>>
where
    T: Scalar,
    F: FnMut(f64),
{
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (i, (x, t)) in pairs.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteKey { index: i });
        }
        if !t.is_finite() || *t < T::zero() || *t > T::one() {
            return Err(Error::InvalidTarget { index: i });
        }
    }
    let mut input_lo = pairs[0].0;
    let mut input_hi = pairs[0].0;
    for (x, _) in pairs {
        input_lo = input_lo.min(*x);
        input_hi = input_hi.max(*x);
    }
    if !(input_lo < input_hi) {
        // A single repeated key is still fittable when it carries one
        // target; conflicting targets on one key are not.
        if pairs.iter().any(|(_, t)| *t != pairs[0].1) {
            return Err(Error::DegenerateKeyRange);
        }
        input_lo = input_lo - T::one();
        input_hi = input_hi + T::one();
    }

    let m = cfg.neurons;
    let p = pairs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Sign-feasible start: everything non-negative.
    let mut params = GvmParams {
        w1: (0..m)
            .map(|_| T::from_f64_approx(1.0 - rng.random::<f64>()))
            .collect(),
        w2: (0..m)
            .map(|_| T::from_f64_approx(rng.random::<f64>() / m as f64))
            .collect(),
        b: (0..m)
            .map(|_| T::from_f64_approx(2.0 * rng.random::<f64>() - 1.0))
            .collect(),
        beta: (0..m)
            .map(|_| T::from_f64_approx(1.0 - rng.random::<f64>()))
            .collect(),
        input_lo,
        input_hi,
        activation: Activation::Logistic,
    };

    let inputs: Vec<T> = pairs.iter().map(|(x, _)| params.normalize(*x)).collect();
    let targets: Vec<T> = pairs.iter().map(|(_, t)| *t).collect();

    // acts[j*p + i] = activation of neuron j on pair i under current params.
    let act_row = |pr: &GvmParams<T>, j: usize, out: &mut [T]| {
        for (i, xn) in inputs.iter().enumerate() {
            out[i] = pr.activation.apply(pr.beta[j] * (pr.w1[j] * *xn - pr.b[j]));
        }
    };
    let mut acts = vec![T::zero(); m * p];
    for j in 0..m {
        act_row(&params, j, &mut acts[j * p..(j + 1) * p]);
    }
    let mut outputs = vec![T::zero(); p];
    for j in 0..m {
        let row = &acts[j * p..(j + 1) * p];
        let w2j = params.w2[j];
        for i in 0..p {
            outputs[i] += w2j * row[i];
        }
    }

    let mse = |ys: &[T]| -> f64 {
        let mut acc = 0.0;
        for i in 0..p {
            let r = (ys[i] - targets[i]).to_f64_exact();
            acc += r * r;
        }
        acc / p as f64
    };

    let mut loss = mse(&outputs);
    on_accept(loss);

    let mut out_scratch = vec![T::zero(); p];
    let mut act_scratch = vec![T::zero(); p];

    for _ in 0..cfg.iterations {
        if loss <= cfg.target_loss {
            break;
        }
        let j = rng.random_range(0..m);
        let which = rng.random_range(0..4u8);
        let old = match which {
            PARAM_W1 => params.w1[j],
            PARAM_W2 => params.w2[j],
            PARAM_B => params.b[j],
            _ => params.beta[j],
        };
        let z: f64 = rng.sample(StandardNormal);
        let candidate = old
            + T::from_f64_approx(cfg.perturb_scale * (1.0 + old.to_f64_exact().abs()) * z);
        if !candidate.is_finite() {
            continue;
        }
        if cfg.enforce_monotone {
            let (w1, w2, beta) = match which {
                PARAM_W1 => (candidate, params.w2[j], params.beta[j]),
                PARAM_W2 => (params.w1[j], candidate, params.beta[j]),
                PARAM_B => (params.w1[j], params.w2[j], params.beta[j]),
                _ => (params.w1[j], params.w2[j], candidate),
            };
            if w1 * w2 * beta < T::zero() {
                continue;
            }
        }

        let row = &acts[j * p..(j + 1) * p];
        let new_loss = if which == PARAM_W2 {
            let delta = candidate - old;
            for i in 0..p {
                out_scratch[i] = outputs[i] + delta * row[i];
            }
            mse(&out_scratch)
        } else {
            let (w1, b, beta) = match which {
                PARAM_W1 => (candidate, params.b[j], params.beta[j]),
                PARAM_B => (params.w1[j], candidate, params.beta[j]),
                _ => (params.w1[j], params.b[j], candidate),
            };
            let w2j = params.w2[j];
            for i in 0..p {
                let a = params.activation.apply(beta * (w1 * inputs[i] - b));
                act_scratch[i] = a;
                out_scratch[i] = outputs[i] + w2j * (a - row[i]);
            }
            mse(&out_scratch)
        };

        if new_loss < loss {
            match which {
                PARAM_W1 => params.w1[j] = candidate,
                PARAM_W2 => params.w2[j] = candidate,
                PARAM_B => params.b[j] = candidate,
                _ => params.beta[j] = candidate,
            }
            if which != PARAM_W2 {
                acts[j * p..(j + 1) * p].copy_from_slice(&act_scratch);
            }
            std::mem::swap(&mut outputs, &mut out_scratch);
            loss = new_loss;
            on_accept(loss);
        }
    }

    Ok(Gvm {
        params,
        final_loss: loss,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monotone_params(w1: Vec<f64>, w2: Vec<f64>, b: Vec<f64>, beta: Vec<f64>) -> GvmParams<f64> {
        GvmParams {
            w1,
            w2,
            b,
            beta,
            input_lo: -1.0,
            input_hi: 1.0,
            activation: Activation::Logistic,
        }
    }

    #[test]
    fn forward_zero_output_weight_is_zero() {
        let p = monotone_params(vec![1.0], vec![0.0], vec![0.3], vec![2.0]);
        assert_eq!(p.forward(0.7), 0.0);
        assert_eq!(p.forward(-5.0), 0.0);
    }

    #[test]
    fn forward_logistic_midpoint() {
        // x = 0 normalizes to 0 on [-1, 1]; with w1=1, b=0, beta=1 the
        // activation input is 0 and logistic(0) = 1/2 exactly.
        let p = monotone_params(vec![1.0], vec![1.0], vec![0.0], vec![1.0]);
        assert_eq!(p.forward(0.0), 0.5);
    }

    #[test]
    fn forward_is_non_decreasing_for_sign_feasible_params() {
        let p = monotone_params(
            vec![0.8, -1.3],
            vec![0.5, -0.4],
            vec![0.2, -0.6],
            vec![2.0, 1.5],
        );
        assert!(p.check_monotone());
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=100 {
            let x = -2.0 + 4.0 * i as f64 / 100.0;
            let y = p.forward(x);
            assert!(y >= prev, "decreased at x={x}");
            prev = y;
        }
    }

    #[test]
    fn check_monotone_sign_cases() {
        let good = monotone_params(vec![1.0, 2.0], vec![1.0, 1.0], vec![0.0; 2], vec![1.0, 1.0]);
        assert!(good.check_monotone());
        let bad = monotone_params(vec![1.0], vec![-1.0], vec![0.0], vec![1.0]);
        assert!(!bad.check_monotone());
    }

    #[test]
    fn train_fits_uniform_cdf() {
        // The uniform CDF is affine, which the network represents to high
        // accuracy; threshold chosen after running with this fixed seed.
        let pairs: Vec<(f64, f64)> = (0..=100).map(|i| (i as f64 / 100.0, i as f64 / 100.0)).collect();
        let cfg = TrainConfig {
            neurons: 10,
            iterations: 30_000,
            target_loss: 1e-5,
            seed: 1,
            ..TrainConfig::default()
        };
        let gvm = train_gvm(&pairs, &cfg).unwrap();
        assert!(gvm.final_loss <= 1e-4, "final loss {}", gvm.final_loss);
        assert!(gvm.params.check_monotone());
    }

    #[test]
    fn train_fits_single_pair() {
        // one point is always fittable; a fine proposal scale lets the
        // search settle to essentially zero loss
        let cfg = TrainConfig {
            neurons: 1,
            iterations: 200_000,
            perturb_scale: 0.05,
            target_loss: 1e-9,
            seed: 3,
            ..TrainConfig::default()
        };
        let gvm = train_gvm(&[(0.5f64, 0.5f64)], &cfg).unwrap();
        assert!(gvm.final_loss <= 1e-8, "final loss {}", gvm.final_loss);

        // one key with conflicting targets cannot be fit
        assert!(matches!(
            train_gvm(&[(2.0, 0.1), (2.0, 0.9)], &cfg),
            Err(Error::DegenerateKeyRange)
        ));
    }

    #[test]
    fn train_rejects_bad_inputs() {
        let cfg = TrainConfig::default();
        assert!(matches!(
            train_gvm::<f64>(&[], &cfg),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            train_gvm(&[(0.0, 0.5), (f64::NAN, 0.5)], &cfg),
            Err(Error::NonFiniteKey { index: 1 })
        ));
        assert!(matches!(
            train_gvm(&[(0.0, 0.5), (1.0, 1.5)], &cfg),
            Err(Error::InvalidTarget { index: 1 })
        ));
        assert!(matches!(
            train_gvm(&[(2.0, 0.1), (2.0, 0.9)], &cfg),
            Err(Error::DegenerateKeyRange)
        ));
    }

    #[test]
    fn accepted_losses_strictly_decrease() {
        let pairs: Vec<(f64, f64)> = (0..=50).map(|i| (i as f64, i as f64 / 50.0)).collect();
        let cfg = TrainConfig {
            neurons: 5,
            iterations: 5_000,
            seed: 17,
            ..TrainConfig::default()
        };
        let (_, trace) = train_gvm_traced(&pairs, &cfg).unwrap();
        assert!(trace.len() > 1, "no proposals accepted");
        for w in trace.windows(2) {
            assert!(w[1] < w[0], "loss did not strictly decrease: {w:?}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let pairs: Vec<(f64, f64)> = (0..=80).map(|i| (i as f64, i as f64 / 80.0)).collect();
        let cfg = TrainConfig {
            neurons: 8,
            iterations: 3_000,
            seed: 5,
            ..TrainConfig::default()
        };
        let a = train_gvm(&pairs, &cfg).unwrap();
        let b = train_gvm(&pairs, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.final_loss.to_bits(), b.final_loss.to_bits());
    }

    #[test]
    fn f32_training_works() {
        let pairs: Vec<(f32, f32)> = (0..=40).map(|i| (i as f32, i as f32 / 40.0)).collect();
        let cfg = TrainConfig {
            neurons: 4,
            iterations: 5_000,
            seed: 2,
            ..TrainConfig::default()
        };
        let gvm = train_gvm(&pairs, &cfg).unwrap();
        assert!(gvm.final_loss < 0.05);
        assert!(gvm.params.check_monotone());
    }
}
