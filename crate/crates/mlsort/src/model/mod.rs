//! CDF-fitting models behind one prediction interface.
//!
//! Two implementations: the piecewise-linear baseline (linear interpolation
//! between the sorted training keys) and the single-hidden-layer network
//! trained by seeded random search under a per-neuron sign constraint that
//! guarantees monotonicity.

use std::cell::Cell;
use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub mod gvm;
pub mod piecewise;

pub use gvm::{train_gvm, train_gvm_traced, Gvm, GvmParams, TrainConfig};
pub use piecewise::PiecewiseLinear;

/// A fitted map from key to normalized rank estimate.
///
/// `predict` returns a value that is close to the empirical CDF of the
/// population for a well-trained model, but is not clamped to `[0, 1]`.
pub trait CdfModel<T: Scalar> {
    fn predict(&self, x: T) -> T;

    /// True when `predict` is guaranteed non-decreasing in `x`. Placement
    /// through a monotone model keys never needs cross-bucket repair.
    fn is_monotone(&self) -> bool;

    /// Hidden-unit count, for cost accounting; 0 for models that evaluate
    /// no activations.
    fn neuron_count(&self) -> usize;
}

/// Nonlinear activation of the hidden layer.
///
/// Only the logistic sigmoid is provided: it is monotone with a
/// non-negative derivative everywhere, which makes the per-neuron sign
/// condition sufficient for monotonicity of the whole network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Logistic,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, t: T) -> T {
        record_activation_eval();
        match self {
            Activation::Logistic => T::one() / (T::one() + (-t).exp()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Logistic => "logistic",
        }
    }
}

thread_local! {
    static ACTIVATION_EVALS: Cell<u64> = const { Cell::new(0) };
}

#[inline]
fn record_activation_eval() {
    ACTIVATION_EVALS.with(|c| c.set(c.get().wrapping_add(1)));
}

/// Number of activation evaluations performed by the current thread since
/// the last [`reset_activation_evals`]. One rank prediction on an `m`-neuron
/// network performs exactly `m` evaluations.
pub fn activation_evals() -> u64 {
    ACTIVATION_EVALS.with(|c| c.get())
}

pub fn reset_activation_evals() {
    ACTIVATION_EVALS.with(|c| c.set(0));
}

/// Which model the sorter fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    PiecewiseLinear,
    Gvm,
}

/// A trained model of either kind.
#[derive(Clone, Debug)]
pub enum FittedModel<T> {
    PiecewiseLinear(PiecewiseLinear<T>),
    Gvm(Gvm<T>),
}

impl<T: Scalar> FittedModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::PiecewiseLinear(_) => ModelKind::PiecewiseLinear,
            FittedModel::Gvm(_) => ModelKind::Gvm,
        }
    }
}

impl<T: Scalar> CdfModel<T> for FittedModel<T> {
    fn predict(&self, x: T) -> T {
        match self {
            FittedModel::PiecewiseLinear(m) => m.predict(x),
            FittedModel::Gvm(m) => m.predict(x),
        }
    }

    fn is_monotone(&self) -> bool {
        match self {
            FittedModel::PiecewiseLinear(m) => m.is_monotone(),
            FittedModel::Gvm(m) => m.is_monotone(),
        }
    }

    fn neuron_count(&self) -> usize {
        match self {
            FittedModel::PiecewiseLinear(m) => m.neuron_count(),
            FittedModel::Gvm(m) => m.neuron_count(),
        }
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument<T> {
    version: u32,
    model: ModelBody<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ModelBody<T> {
    Gvm {
        activation: Activation,
        m: usize,
        w1: Vec<T>,
        w2: Vec<T>,
        b: Vec<T>,
        beta: Vec<T>,
        input_lo: T,
        input_hi: T,
        final_loss: f64,
        seed: u64,
    },
    PiecewiseLinear {
        knots: Vec<T>,
    },
}

/// Writes a model as a versioned JSON document. Round-trips bit-exactly:
/// JSON floats are printed with shortest-round-trip precision.
pub fn write_model_json<T, W>(model: &FittedModel<T>, mut out: W) -> Result<()>
where
    T: Scalar + Serialize,
    W: Write,
{
    let body = match model {
        FittedModel::Gvm(g) => ModelBody::Gvm {
            activation: g.params.activation,
            m: g.params.neuron_count(),
            w1: g.params.w1.clone(),
            w2: g.params.w2.clone(),
            b: g.params.b.clone(),
            beta: g.params.beta.clone(),
            input_lo: g.params.input_lo,
            input_hi: g.params.input_hi,
            final_loss: g.final_loss,
            seed: g.seed,
        },
        FittedModel::PiecewiseLinear(p) => ModelBody::PiecewiseLinear {
            knots: p.knots().to_vec(),
        },
    };
    let doc = ModelDocument {
        version: MODEL_FORMAT_VERSION,
        model: body,
    };
    serde_json::to_writer(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_model_json<T, R>(input: R) -> Result<FittedModel<T>>
where
    T: Scalar + DeserializeOwned,
    R: Read,
{
    let doc: ModelDocument<T> = serde_json::from_reader(input)?;
    if doc.version != MODEL_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: doc.version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    match doc.model {
        ModelBody::Gvm {
            activation,
            m,
            w1,
            w2,
            b,
            beta,
            input_lo,
            input_hi,
            final_loss,
            seed,
        } => {
            if w1.len() != m {
                return Err(Error::MalformedArtifact(format!(
                    "declared m={m} but w1 has {} entries",
                    w1.len()
                )));
            }
            let params = GvmParams {
                w1,
                w2,
                b,
                beta,
                input_lo,
                input_hi,
                activation,
            };
            params.validate().map_err(|e| {
                Error::MalformedArtifact(format!("invalid network parameters: {e}"))
            })?;
            Ok(FittedModel::Gvm(Gvm {
                params,
                final_loss,
                seed,
            }))
        }
        ModelBody::PiecewiseLinear { knots } => {
            let model = PiecewiseLinear::fit(&knots)
                .map_err(|e| Error::MalformedArtifact(format!("invalid knots: {e}")))?;
            Ok(FittedModel::PiecewiseLinear(model))
        }
    }
}
