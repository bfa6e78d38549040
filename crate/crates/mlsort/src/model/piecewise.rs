//! Piecewise-linear CDF baseline.
//!
//! The knots are the sorted training sample itself; prediction linearly
//! interpolates between knot `i` (value `i/N0`) and knot `i+1`. Simple and
//! fast, but it inherits every wiggle of the sample's empirical CDF, which
//! is what makes its rank estimates so much noisier than the network's.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CdfModel;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear<T> {
    knots: Vec<T>,
}

impl<T: Scalar> PiecewiseLinear<T> {
    /// Builds the model from an ascending sample of at least two keys.
    /// Duplicate knots are allowed; prediction steps across flat segments.
    pub fn fit(sorted_sample: &[T]) -> Result<Self> {
        if sorted_sample.len() < 2 {
            return Err(Error::InvalidParameter(
                "piecewise-linear model needs at least 2 knots".into(),
            ));
        }
        for (i, k) in sorted_sample.iter().enumerate() {
            if !k.is_finite() {
                return Err(Error::NonFiniteKey { index: i });
            }
            if i > 0 && *k < sorted_sample[i - 1] {
                return Err(Error::NotSorted { index: i });
            }
        }
        Ok(PiecewiseLinear {
            knots: sorted_sample.to_vec(),
        })
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    /// Normalized rank estimate: `(i + (x − k[i]) / (k[i+1] − k[i])) / N0`
    /// for the interval containing `x`, clamped to 0 below the first knot
    /// and 1 above the last. At a knot the estimate is exactly `i/N0`
    /// (rightmost index for duplicate runs); zero-width intervals contribute
    /// the index fraction alone.
    pub fn predict(&self, x: T) -> T {
        let knots = &self.knots;
        let n0 = T::from_usize(knots.len()).expect("knot count fits the scalar");
        if x < knots[0] {
            return T::zero();
        }
        let last = knots[knots.len() - 1];
        if x > last {
            return T::one();
        }
        if x == last {
            return T::from_usize(knots.len() - 1).unwrap() / n0;
        }
        let p = knots.partition_point(|k| *k <= x);
        if p == 0 {
            // unreachable for finite x; NaN compares false everywhere
            return T::zero();
        }
        let i = p - 1;
        let (a, b) = (knots[i], knots[i + 1]);
        let frac = if b > a { (x - a) / (b - a) } else { T::zero() };
        (T::from_usize(i).unwrap() + frac) / n0
    }
}

impl<T: Scalar> CdfModel<T> for PiecewiseLinear<T> {
    fn predict(&self, x: T) -> T {
        PiecewiseLinear::predict(self, x)
    }

    fn is_monotone(&self) -> bool {
        true
    }

    fn neuron_count(&self) -> usize {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_two_knots() {
        let m = PiecewiseLinear::fit(&[0.0, 1.0]).unwrap();
        assert_eq!(m.knots().len(), 2);
    }

    #[test]
    fn fit_rejects_unsorted_and_non_finite() {
        assert!(matches!(
            PiecewiseLinear::fit(&[1.0, 0.5]),
            Err(Error::NotSorted { index: 1 })
        ));
        assert!(matches!(
            PiecewiseLinear::fit(&[0.0, f64::NAN]),
            Err(Error::NonFiniteKey { index: 1 })
        ));
        assert!(PiecewiseLinear::<f64>::fit(&[0.0]).is_err());
    }

    #[test]
    fn fit_accepts_duplicates() {
        let m = PiecewiseLinear::fit(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        // step across the flat run: at the duplicate value the rightmost
        // index wins
        assert_eq!(m.predict(0.0), 2.0 / 4.0);
        assert!(m.predict(0.5) > 0.5);
    }

    #[test]
    fn predict_interpolates_decile_knots() {
        // knots 0.1..1.0; x=0.85 lies midway through interval 7, so the
        // normalized estimate is (7 + 0.5)/10 and round(0.75 * 100) = 75.
        let knots: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let m = PiecewiseLinear::fit(&knots).unwrap();
        let y = m.predict(0.85);
        assert!((y - 0.75).abs() < 1e-12);
        assert_eq!((y * 100.0).round() as i64, 75);
    }

    #[test]
    fn predict_clamps_outside_knots() {
        let m = PiecewiseLinear::fit(&[0.2, 0.4, 0.6]).unwrap();
        assert_eq!(m.predict(0.0), 0.0);
        assert_eq!(m.predict(1.0), 1.0);
    }

    #[test]
    fn predict_at_knot_is_index_fraction() {
        let knots: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let m = PiecewiseLinear::fit(&knots).unwrap();
        for (i, k) in knots.iter().enumerate() {
            assert_eq!(m.predict(*k), i as f64 / 10.0);
        }
    }

    #[test]
    fn uniform_quantile_knots_track_identity() {
        // knots at i/N0 make prediction the identity on [first, last]
        let n0 = 100usize;
        let knots: Vec<f64> = (0..n0).map(|i| i as f64 / n0 as f64).collect();
        let m = PiecewiseLinear::fit(&knots).unwrap();
        for i in 0..=1000 {
            let x = 0.99 * i as f64 / 1000.0;
            assert!(
                (m.predict(x) - x).abs() <= 1.0 / n0 as f64 + 1e-12,
                "x={x} predict={}",
                m.predict(x)
            );
        }
    }
}
