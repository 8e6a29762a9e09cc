//! Sample-based axiom checks for averaging operators.
//!
//! [`check_axioms`] draws seeded pseudo-random tuples (a mix of smooth
//! samples, deliberate ties, and well-separated strata) and probes each
//! axiom, collecting reproducible counterexamples.
//!
//! # The increment bounds
//!
//! The separating property among the operator families is a two-sided bound
//! on one coordinate's influence: there is a single `kappa` in `(0, 1)` with
//!
//! ```text
//! (1 - kappa) * c  <=  F(x_1 + c, x_2, .., x_m) - F(x)  <=  kappa * c
//! ```
//!
//! for all `x` and all `c > 0`. By translation equivariance the left
//! inequality is the same statement as the right one applied to the block of
//! the other `m - 1` coordinates (raising them all by `c` raises `F` by at
//! least `(1 - kappa) c`), so by permutation invariance it suffices to
//! perturb the first coordinate and watch the increment ratio from both
//! sides. The checker records the empirical sup of the ratio as the `kappa`
//! estimate and flags a violation when a ratio reaches 1 (no upper `kappa`
//! can exist) or collapses to zero for a macroscopic `c` (no lower margin can
//! exist). Median-midrange composites fail the zero side from arity 5 up:
//! the order statistics strictly between the median and the extremes carry
//! exactly no weight, so the flagged increment is exactly `0.0` in floating
//! point, never a rounding artifact.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{AveragingOperator, OperatorKind};

/// Slack for identities expected to hold to rounding (normalization,
/// monotonicity), relative to the magnitude in play.
pub const TOL_ROUNDING: f64 = 1e-12;
/// Slack for identities routed through the p-mean bisection (homogeneity,
/// translation), relative to the magnitude in play.
pub const TOL_SAMPLED: f64 = 1e-9;
/// A ratio this close to 1 means no upper `kappa < 1` can hold.
pub const KAPPA_UPPER_MARGIN: f64 = 1e-9;
/// A ratio at or below this for a macroscopic shift means a coordinate has
/// no lower influence margin. Genuine p-mean ratios on the sampled inputs
/// stay five orders of magnitude above it.
pub const KAPPA_ZERO_INFLUENCE: f64 = 1e-10;
/// Tuples with spread below this skip the strict-below-max probe.
pub const MIN_SPREAD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axiom {
    Normalization,
    Homogeneity,
    Translation,
    StrictBelowMax,
    Monotonicity,
    PermutationInvariance,
    KappaIncrement,
}

/// A failed check, with enough context to replay it.
#[derive(Clone, Debug)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    /// The base input tuple.
    pub values: Vec<f64>,
    /// The transformed tuple the base was compared against, when the check
    /// compares two evaluations.
    pub perturbed: Option<Vec<f64>>,
    /// The scalar of the transformation: shift `c`, scaling factor, bump.
    pub aux: f64,
    pub detail: String,
}

impl AxiomViolation {
    /// Re-evaluates the violated inequality from the stored inputs.
    pub fn reproduce(&self, op: &AveragingOperator) -> bool {
        let f = |v: &[f64]| op.eval(v).expect("stored witness has the right arity");
        let base = f(&self.values);
        let mag = magnitude(&self.values);
        let pert = self.perturbed.as_deref();
        match self.axiom {
            Axiom::Normalization => {
                let zeros = vec![0.0; op.arity()];
                let ones = vec![1.0; op.arity()];
                f(&zeros).abs() > TOL_ROUNDING || (f(&ones) - 1.0).abs() > TOL_ROUNDING
            }
            Axiom::Homogeneity => {
                let lhs = f(pert.expect("homogeneity stores the scaled tuple"));
                (lhs - self.aux * base).abs() > TOL_SAMPLED * mag.max(self.aux * mag)
            }
            Axiom::Translation => {
                let lhs = f(pert.expect("translation stores the shifted tuple"));
                (lhs - (base + self.aux)).abs() > TOL_SAMPLED * mag.max(self.aux.abs())
            }
            Axiom::StrictBelowMax => {
                let hi = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                base >= hi
            }
            Axiom::Monotonicity => {
                f(pert.expect("monotonicity stores the bumped tuple")) < base - TOL_ROUNDING * mag
            }
            Axiom::PermutationInvariance => {
                f(pert.expect("permutation stores the shuffled tuple")).to_bits() != base.to_bits()
            }
            Axiom::KappaIncrement => {
                let lhs = f(pert.expect("increment check stores the shifted tuple"));
                let ratio = (lhs - base) / self.aux;
                ratio >= 1.0 - KAPPA_UPPER_MARGIN || ratio <= KAPPA_ZERO_INFLUENCE
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub kind: OperatorKind,
    pub arity: usize,
    pub samples: usize,
    /// Empirical sup of `(F(x + c e_1) - F(x)) / c`: the `kappa` estimate.
    pub kappa_estimate: f64,
    /// Empirical inf of the same ratio.
    pub min_increment_ratio: f64,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn axiom_passed(&self, axiom: Axiom) -> bool {
        !self.violations.iter().any(|v| v.axiom == axiom)
    }
}

const MAX_STORED_VIOLATIONS: usize = 16;

/// Probes every axiom on `samples` seeded pseudo-random tuples.
pub fn check_axioms(op: &AveragingOperator, samples: usize, seed: u64) -> AxiomReport {
    let m = op.arity();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport {
        kind: op.kind(),
        arity: m,
        samples,
        kappa_estimate: f64::NEG_INFINITY,
        min_increment_ratio: f64::INFINITY,
        violations: Vec::new(),
    };
    let f = |v: &[f64]| op.eval(v).expect("checker builds tuples of the right arity");
    fn push(report: &mut AxiomReport, v: AxiomViolation) {
        if report.violations.len() < MAX_STORED_VIOLATIONS {
            report.violations.push(v);
        }
    }

    let zeros = vec![0.0; m];
    let ones = vec![1.0; m];
    let at_zero = f(&zeros);
    let at_one = f(&ones);
    if at_zero.abs() > TOL_ROUNDING || (at_one - 1.0).abs() > TOL_ROUNDING {
        push(
            &mut report,
            AxiomViolation {
                axiom: Axiom::Normalization,
                values: zeros,
                perturbed: None,
                aux: 0.0,
                detail: format!("F(0..0) = {at_zero}, F(1..1) = {at_one}"),
            },
        );
    }

    for _ in 0..samples {
        let x = sample_tuple(&mut rng, m);
        let base = f(&x);
        let mag = magnitude(&x);

        // Positive homogeneity.
        let lambda = rng.random_range(0.1..10.0);
        let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
        let lhs = f(&scaled);
        if (lhs - lambda * base).abs() > TOL_SAMPLED * mag.max(lambda * mag) {
            push(
                &mut report,
                AxiomViolation {
                    axiom: Axiom::Homogeneity,
                    values: x.clone(),
                    perturbed: Some(scaled),
                    aux: lambda,
                    detail: format!("F(l x) = {lhs}, l F(x) = {}", lambda * base),
                },
            );
        }

        // Translation equivariance.
        let t = rng.random_range(-5.0..5.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + t).collect();
        let lhs = f(&shifted);
        if (lhs - (base + t)).abs() > TOL_SAMPLED * mag.max(t.abs()) {
            push(
                &mut report,
                AxiomViolation {
                    axiom: Axiom::Translation,
                    values: x.clone(),
                    perturbed: Some(shifted),
                    aux: t,
                    detail: format!("F(x + t) = {lhs}, F(x) + t = {}", base + t),
                },
            );
        }

        // Strictly below the max when not all coordinates agree.
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi - lo > MIN_SPREAD * mag && base >= hi {
            push(
                &mut report,
                AxiomViolation {
                    axiom: Axiom::StrictBelowMax,
                    values: x.clone(),
                    perturbed: None,
                    aux: 0.0,
                    detail: format!("F(x) = {base} >= max = {hi}"),
                },
            );
        }

        // Coordinatewise monotonicity: a nonnegative bump on a random subset
        // must not lower the value.
        let bump = rng.random_range(0.0..mag);
        let mut bumped = x.clone();
        for v in bumped.iter_mut() {
            if rng.random::<bool>() {
                *v += bump;
            }
        }
        let lifted = f(&bumped);
        if lifted < base - TOL_ROUNDING * mag {
            push(
                &mut report,
                AxiomViolation {
                    axiom: Axiom::Monotonicity,
                    values: x.clone(),
                    perturbed: Some(bumped),
                    aux: bump,
                    detail: format!("F fell from {base} to {lifted} under a +{bump} bump"),
                },
            );
        }

        // Permutation invariance, bitwise (evaluation sorts internally).
        let mut shuffled = x.clone();
        shuffled.shuffle(&mut rng);
        let reordered = f(&shuffled);
        if reordered.to_bits() != base.to_bits() {
            push(
                &mut report,
                AxiomViolation {
                    axiom: Axiom::PermutationInvariance,
                    values: x.clone(),
                    perturbed: Some(shuffled),
                    aux: 0.0,
                    detail: "same multiset, different value".into(),
                },
            );
        }

        // Two-sided increment ratio for a macroscopic first-coordinate shift.
        let c = rng.random_range(0.05..1.0) * mag;
        let mut nudged = x.clone();
        nudged[0] += c;
        let ratio = (f(&nudged) - base) / c;
        report.kappa_estimate = report.kappa_estimate.max(ratio);
        report.min_increment_ratio = report.min_increment_ratio.min(ratio);
        if ratio >= 1.0 - KAPPA_UPPER_MARGIN || ratio <= KAPPA_ZERO_INFLUENCE {
            push(
                &mut report,
                AxiomViolation {
                    axiom: Axiom::KappaIncrement,
                    values: x.clone(),
                    perturbed: Some(nudged),
                    aux: c,
                    detail: format!("increment ratio {ratio} for shift {c}"),
                },
            );
        }
    }
    report
}

fn magnitude(values: &[f64]) -> f64 {
    values.iter().fold(1.0f64, |a, v| a.max(v.abs()))
}

/// Tuple sampler: smooth draws, heavy ties, and separated strata, over a
/// couple of scales.
fn sample_tuple(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let scale = if rng.random::<f64>() < 0.8 { 1.0 } else { 10.0 };
    let style = rng.random_range(0..10);
    match style {
        // Deliberate ties among few well-separated levels.
        0..=2 => {
            let levels = rng.random_range(1..=m.min(3));
            let pool: Vec<f64> = (0..levels)
                .map(|_| rng.random_range(-1.0..1.0) * scale)
                .collect();
            (0..m).map(|_| pool[rng.random_range(0..levels)]).collect()
        }
        // Separated strata: distinct values with guaranteed gaps.
        3..=4 => {
            let mut vals: Vec<f64> = (0..m)
                .map(|i| (i as f64 + rng.random_range(0.05..0.95)) * scale / m as f64)
                .collect();
            vals.shuffle(rng);
            vals
        }
        // Smooth draws.
        _ => (0..m).map(|_| rng.random_range(-1.0..1.0) * scale).collect(),
    }
}
