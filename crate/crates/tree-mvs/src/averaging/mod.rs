//! Averaging operators on m-tuples.
//!
//! An averaging operator maps `R^m -> R` and is normalized (`F(0,..,0) = 0`,
//! `F(1,..,1) = 1`), positively homogeneous, translation equivariant,
//! coordinatewise nondecreasing, strictly below the max unless all inputs are
//! equal, and symmetric in its arguments. [`axioms::check_axioms`] probes all
//! of these on seeded samples, plus the one-coordinate increment bounds that
//! separate the operator families (see that module).
//!
//! Evaluation sorts its input first, so exact permutation invariance holds by
//! construction: two inputs with the same multiset of values take bitwise
//! identical paths.

pub mod axioms;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Operator families, with the weight conventions used throughout:
/// `alpha` is the nonsmooth weight, `beta = 1 - alpha` the smooth one, and
/// `beta` must stay positive (use the dedicated `Midrange` kind for the pure
/// max/min average).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum OperatorKind {
    /// The unique root `t` of `sum_j (x_j - t) |x_j - t|^(p-2) = 0`.
    #[serde(rename = "pmean")]
    PMean { p: f64 },
    /// `(alpha/2) (max + min) + ((1-alpha)/m) sum`.
    #[serde(rename = "midrange_mean")]
    MidrangeMean { alpha: f64 },
    /// `alpha med + ((1-alpha)/m) sum`.
    #[serde(rename = "median_mean")]
    MedianMean { alpha: f64 },
    /// `alpha med + ((1-alpha)/2) (max + min)`.
    #[serde(rename = "median_midrange")]
    MedianMidrange { alpha: f64 },
    /// Arithmetic mean.
    #[serde(rename = "mean")]
    Mean,
    /// `(max + min) / 2`.
    #[serde(rename = "midrange")]
    Midrange,
}

impl<'de> Deserialize<'de> for OperatorKind {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let value = serde_json::Value::deserialize(deserializer)?;
        let obj = crate::de::StrictTagged::new::<D::Error>(&value, "kind")?;
        match obj.tag() {
            "pmean" => {
                obj.allow(&["p"])?;
                Ok(OperatorKind::PMean { p: obj.required("p")? })
            }
            "midrange_mean" => {
                obj.allow(&["alpha"])?;
                Ok(OperatorKind::MidrangeMean { alpha: obj.required("alpha")? })
            }
            "median_mean" => {
                obj.allow(&["alpha"])?;
                Ok(OperatorKind::MedianMean { alpha: obj.required("alpha")? })
            }
            "median_midrange" => {
                obj.allow(&["alpha"])?;
                Ok(OperatorKind::MedianMidrange { alpha: obj.required("alpha")? })
            }
            "mean" => {
                obj.allow(&[])?;
                Ok(OperatorKind::Mean)
            }
            "midrange" => {
                obj.allow(&[])?;
                Ok(OperatorKind::Midrange)
            }
            _ => obj.unknown_tag(&[
                "pmean",
                "midrange_mean",
                "median_mean",
                "median_midrange",
                "mean",
                "midrange",
            ]),
        }
    }
}

impl OperatorKind {
    fn validate(&self) -> Result<()> {
        match *self {
            OperatorKind::PMean { p } => {
                if !p.is_finite() || p <= 1.0 {
                    return Err(Error::InvalidOperator(format!(
                        "pmean exponent must be finite and > 1, got {p}"
                    )));
                }
            }
            OperatorKind::MidrangeMean { alpha }
            | OperatorKind::MedianMean { alpha }
            | OperatorKind::MedianMidrange { alpha } => {
                if !alpha.is_finite() || !(0.0..1.0).contains(&alpha) {
                    return Err(Error::InvalidOperator(format!(
                        "alpha must lie in [0, 1) so beta = 1 - alpha stays in (0, 1], got {alpha}"
                    )));
                }
            }
            OperatorKind::Mean | OperatorKind::Midrange => {}
        }
        Ok(())
    }
}

/// An operator kind bound to an arity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AveragingOperator {
    kind: OperatorKind,
    arity: usize,
}

/// Absolute tolerance of the p-mean bisection.
pub const PMEAN_TOL: f64 = 1e-13;
/// Iteration cap of the p-mean bisection.
pub const PMEAN_MAX_ITER: usize = 200;

impl AveragingOperator {
    pub fn new(kind: OperatorKind, arity: usize) -> Result<Self> {
        if arity < 2 {
            return Err(Error::InvalidOperator(format!(
                "arity must be at least 2, got {arity}"
            )));
        }
        kind.validate()?;
        Ok(AveragingOperator { kind, arity })
    }

    #[inline]
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    #[inline]
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Applies the operator. Rejects tuples of the wrong length.
    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: values.len(),
            });
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(self.eval_sorted(&sorted))
    }

    /// Core evaluation on pre-sorted values (ascending).
    pub(crate) fn eval_sorted(&self, sorted: &[f64]) -> f64 {
        let m = sorted.len();
        let lo = sorted[0];
        let hi = sorted[m - 1];
        match self.kind {
            OperatorKind::PMean { p } => pmean_root(sorted, p),
            OperatorKind::MidrangeMean { alpha } => {
                alpha / 2.0 * (hi + lo) + (1.0 - alpha) / m as f64 * ksum(sorted)
            }
            OperatorKind::MedianMean { alpha } => {
                alpha * median_sorted(sorted) + (1.0 - alpha) / m as f64 * ksum(sorted)
            }
            OperatorKind::MedianMidrange { alpha } => {
                alpha * median_sorted(sorted) + (1.0 - alpha) / 2.0 * (hi + lo)
            }
            OperatorKind::Mean => ksum(sorted) / m as f64,
            OperatorKind::Midrange => (hi + lo) / 2.0,
        }
    }
}

/// Standard median: middle element for odd length, mean of the two middle
/// elements for even length.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::ShapeMismatch("median of empty tuple".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(median_sorted(&sorted))
}

#[inline]
fn median_sorted(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0
    }
}

#[inline]
fn ksum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// `sign(d) |d|^(p-1)`, the summand of the p-mean defining equation.
#[inline]
fn signed_pow(d: f64, q: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d.signum() * d.abs().powf(q)
    }
}

/// Bisection for the p-mean on the bracket `[min, max]`. The defining sum is
/// strictly decreasing in `t`, positive at the min and negative at the max.
fn pmean_root(sorted: &[f64], p: f64) -> f64 {
    let mut lo = sorted[0];
    let mut hi = sorted[sorted.len() - 1];
    if lo == hi {
        return lo;
    }
    let q = p - 1.0;
    let g = |t: f64| -> f64 { sorted.iter().map(|&x| signed_pow(x - t, q)).sum() };
    for _ in 0..PMEAN_MAX_ITER {
        if hi - lo <= PMEAN_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn op(kind: OperatorKind, m: usize) -> AveragingOperator {
        AveragingOperator::new(kind, m).unwrap()
    }

    #[test]
    fn known_values() {
        // p-mean of a pair is its midpoint for every p.
        let f = op(OperatorKind::PMean { p: 2.0 }, 2);
        assert!((f.eval(&[0.0, 1.0]).unwrap() - 0.5).abs() <= PMEAN_TOL);
        let f = op(OperatorKind::PMean { p: 3.5 }, 2);
        assert!((f.eval(&[-2.0, 6.0]).unwrap() - 2.0).abs() <= PMEAN_TOL);

        let f = op(OperatorKind::Mean, 4);
        assert_eq!(f.eval(&[1.0, 2.0, 3.0, 6.0]).unwrap(), 3.0);

        let f = op(OperatorKind::Midrange, 3);
        assert_eq!(f.eval(&[0.0, 0.25, 1.0]).unwrap(), 0.5);

        // F_0 with alpha = 1/2 on (0, 0, 1): 1/4 + (1/6) = 5/12.
        let f = op(OperatorKind::MidrangeMean { alpha: 0.5 }, 3);
        assert!((f.eval(&[0.0, 0.0, 1.0]).unwrap() - 5.0 / 12.0).abs() < 1e-15);

        // F_1 with alpha = 1/2 on (0, 1, 5): med 1, mean 2 -> 1.5.
        let f = op(OperatorKind::MedianMean { alpha: 0.5 }, 3);
        assert_eq!(f.eval(&[5.0, 0.0, 1.0]).unwrap(), 1.5);

        // F_2 with alpha = 1/2 on (0, 1, 5): med 1, midrange 2.5 -> 1.75.
        let f = op(OperatorKind::MedianMidrange { alpha: 0.5 }, 3);
        assert_eq!(f.eval(&[5.0, 0.0, 1.0]).unwrap(), 1.75);
    }

    #[test]
    fn median_matches_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for len in 1usize..=8 {
            for _ in 0..200 {
                let vals: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
                let mut sorted = vals.clone();
                sorted.sort_by(f64::total_cmp);
                let expect = if len % 2 == 1 {
                    sorted[len / 2]
                } else {
                    (sorted[len / 2 - 1] + sorted[len / 2]) / 2.0
                };
                assert_eq!(median(&vals).unwrap(), expect);
            }
        }
    }

    #[test]
    fn pmean_matches_grid_scan_oracle() {
        // Independent locate-by-sign-change on a dense grid.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &p in &[1.5, 2.0, 3.0, 4.0] {
            let f = op(OperatorKind::PMean { p }, 3);
            for _ in 0..50 {
                let vals: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                let root = f.eval(&vals).unwrap();
                let (lo, hi) = vals
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                        (a.min(v), b.max(v))
                    });
                if hi - lo < 1e-9 {
                    continue;
                }
                let g = |t: f64| -> f64 {
                    vals.iter().map(|&x| signed_pow(x - t, p - 1.0)).sum()
                };
                let steps = 200_000;
                let h = (hi - lo) / steps as f64;
                let mut bracket = None;
                for i in 0..steps {
                    let a = lo + i as f64 * h;
                    if g(a) >= 0.0 && g(a + h) <= 0.0 {
                        bracket = Some(a);
                        break;
                    }
                }
                let a = bracket.expect("sign change exists");
                assert!(
                    root >= a - h && root <= a + 2.0 * h,
                    "p={p} vals={vals:?} root={root} grid=[{a}, {}]",
                    a + h
                );
            }
        }
    }

    #[test]
    fn pmean_two_reduces_to_mean() {
        let f = op(OperatorKind::PMean { p: 2.0 }, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let vals: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mean = vals.iter().sum::<f64>() / 4.0;
            assert!((f.eval(&vals).unwrap() - mean).abs() <= 1e-12);
        }
    }

    #[test]
    fn arity_is_enforced() {
        let f = op(OperatorKind::Mean, 3);
        assert!(matches!(
            f.eval(&[1.0, 2.0]),
            Err(Error::ArityMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn parameters_are_validated() {
        assert!(AveragingOperator::new(OperatorKind::PMean { p: 1.0 }, 2).is_err());
        assert!(AveragingOperator::new(OperatorKind::PMean { p: f64::NAN }, 2).is_err());
        assert!(AveragingOperator::new(OperatorKind::MedianMean { alpha: 1.0 }, 2).is_err());
        assert!(AveragingOperator::new(OperatorKind::MidrangeMean { alpha: -0.1 }, 2).is_err());
        assert!(AveragingOperator::new(OperatorKind::Mean, 1).is_err());
    }

    #[test]
    fn operator_json_spellings() {
        let k: OperatorKind = serde_json::from_str(r#"{"kind":"pmean","p":3.0}"#).unwrap();
        assert_eq!(k, OperatorKind::PMean { p: 3.0 });
        let k: OperatorKind =
            serde_json::from_str(r#"{"kind":"midrange_mean","alpha":0.5}"#).unwrap();
        assert_eq!(k, OperatorKind::MidrangeMean { alpha: 0.5 });
        let k: OperatorKind = serde_json::from_str(r#"{"kind":"mean"}"#).unwrap();
        assert_eq!(k, OperatorKind::Mean);
        assert!(serde_json::from_str::<OperatorKind>(r#"{"kind":"p_mean","p":3.0}"#).is_err());
        assert!(serde_json::from_str::<OperatorKind>(r#"{"kind":"mean","p":3.0}"#).is_err());
    }

    proptest! {
        #[test]
        fn eval_stays_in_hull(vals in proptest::collection::vec(-1e3f64..1e3, 5)) {
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for kind in [
                OperatorKind::PMean { p: 2.5 },
                OperatorKind::MidrangeMean { alpha: 0.5 },
                OperatorKind::MedianMean { alpha: 0.5 },
                OperatorKind::MedianMidrange { alpha: 0.5 },
                OperatorKind::Mean,
                OperatorKind::Midrange,
            ] {
                let f = AveragingOperator::new(kind, 5).unwrap();
                let y = f.eval(&vals).unwrap();
                prop_assert!(y >= lo - 1e-9 && y <= hi + 1e-9, "{kind:?}: {y} not in [{lo}, {hi}]");
            }
        }

        #[test]
        fn eval_is_exactly_permutation_invariant(
            vals in proptest::collection::vec(-50.0f64..50.0, 4),
            swap in (0usize..4, 0usize..4),
        ) {
            let mut permuted = vals.clone();
            permuted.swap(swap.0, swap.1);
            for kind in [
                OperatorKind::PMean { p: 3.0 },
                OperatorKind::MidrangeMean { alpha: 0.3 },
                OperatorKind::MedianMean { alpha: 0.7 },
                OperatorKind::MedianMidrange { alpha: 0.5 },
                OperatorKind::Mean,
                OperatorKind::Midrange,
            ] {
                let f = AveragingOperator::new(kind, 4).unwrap();
                let a = f.eval(&vals).unwrap();
                let b = f.eval(&permuted).unwrap();
                prop_assert_eq!(a.to_bits(), b.to_bits(), "{:?}", kind);
            }
        }

        #[test]
        fn diagonal_is_identity(c in -1e6f64..1e6) {
            for kind in [
                OperatorKind::PMean { p: 1.7 },
                OperatorKind::MidrangeMean { alpha: 0.5 },
                OperatorKind::MedianMean { alpha: 0.5 },
                OperatorKind::MedianMidrange { alpha: 0.5 },
                OperatorKind::Mean,
                OperatorKind::Midrange,
            ] {
                let f = AveragingOperator::new(kind, 3).unwrap();
                let y = f.eval(&[c, c, c]).unwrap();
                prop_assert!((y - c).abs() <= 1e-9 * c.abs().max(1.0));
            }
        }
    }
}
