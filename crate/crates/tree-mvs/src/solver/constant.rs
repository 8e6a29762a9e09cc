//! Closed-form level values for the symmetric two-component system with
//! constant boundary data and no predecessor weights.
//!
//! With both cross-coupling schedules equal to `p_k` and boundary constants
//! `C1`, `C2`, the solution is constant on each level, and the level pairs
//! `(a_k, b_k)` obey
//!
//! ```text
//! a_k = (1 - p_k) a_{k+1} + p_k b_k,     b_k = (1 - p_k) b_{k+1} + p_k a_k.
//! ```
//!
//! The sum `a_k + b_k` is invariant in `k`, while the difference picks up a
//! factor `(1 + p_k)/(1 - p_k)` per level. Meeting the boundary as the
//! truncation depth grows forces
//!
//! ```text
//! a_0 + b_0 = C1 + C2,
//! b_0 - a_0 = (C2 - C1) * prod_k (1 - p_k)/(1 + p_k),
//! ```
//!
//! with the product convergent exactly when `sum p_k` converges. The product
//! is accumulated as a sum of `ln((1-p)/(1+p))` terms: an exact prefix, then
//! an analytic bound-driven extension for geometric tails or an
//! Euler-Maclaurin closed form for power-law tails.

use super::field::level_len;
use crate::coefficients::{
    coupling_sum_series, CoefficientSchedule, ScheduleFamily, SeriesStatus,
};
use crate::error::{Error, Result};

/// Level pairs `(a_k, b_k)` for `k = 0..=depth` of the infinite-tree
/// solution. Preconditions: `sum p_k` classifies as convergent and every
/// `p_k < 1`.
pub fn solve_constant_symmetric(
    p: &CoefficientSchedule,
    c1: f64,
    c2: f64,
    depth: usize,
) -> Result<Vec<(f64, f64)>> {
    // Guards the forward iteration against absurd depths.
    level_len(2, depth)?;
    let verdict = coupling_sum_series(p, 1);
    if verdict.status != SeriesStatus::Converges {
        return Err(Error::Precondition(format!(
            "level-constant limit needs a convergent coupling series, classified {:?}",
            verdict.status
        )));
    }

    let log_product = total_log_sum(p, depth + 1)?;
    let d0 = (c2 - c1) * log_product.exp();
    let sum = c1 + c2;
    let mut a = (sum - d0) / 2.0;
    let mut b = (sum + d0) / 2.0;
    let mut pairs = Vec::with_capacity(depth + 1);
    pairs.push((a, b));
    for k in 0..depth {
        let pk = p.value_at(k)?;
        let next_a = (a - pk * b) / (1.0 - pk);
        let next_b = (b - pk * a) / (1.0 - pk);
        a = next_a;
        b = next_b;
        pairs.push((a, b));
    }
    Ok(pairs)
}

/// `sum_{j>=0} ln((1 - p_j)/(1 + p_j))`, summed exactly up to a cut and
/// closed analytically past it. Errors if some `p_j = 1` makes a factor
/// degenerate.
fn total_log_sum(schedule: &CoefficientSchedule, min_cut: usize) -> Result<f64> {
    let tail = effective_tail(schedule.family());
    let mut cut = min_cut.max(schedule.monotone_horizon()).max(64);
    if matches!(tail, ScheduleFamily::PowerLaw { .. }) {
        // Euler-Maclaurin needs a tall foot for its asymptotic accuracy.
        cut = cut.max(10_000);
    }
    let mut total = 0.0f64;
    for j in 0..cut {
        total += log_factor(schedule.value_at(j)?, j)?;
    }
    match tail {
        ScheduleFamily::Constant { c } => {
            debug_assert_eq!(*c, 0.0, "positive constants never classify as convergent");
        }
        ScheduleFamily::Geometric { c, ratio } => {
            let mut j = cut;
            // |remaining| <= 3 * sum of remaining p_j while p stays small.
            while 3.0 * c * ratio.powi(j as i32) / (1.0 - ratio) >= 1e-17 && j < cut + 10_000_000 {
                total += log_factor(c * ratio.powi(j as i32), j)?;
                j += 1;
            }
        }
        ScheduleFamily::PowerLaw { c, s } => {
            // ln((1-p)/(1+p)) = -2 atanh(p) expanded in odd powers of
            // p_j = c (j+1)^(-s); each power sums to a zeta tail.
            for q in [1.0f64, 3.0, 5.0, 7.0] {
                total -= 2.0 / q * c.powf(q) * zeta_tail(q * s, (cut + 1) as f64);
            }
        }
        ScheduleFamily::Explicit { .. } => unreachable!("explicit tails are rejected upstream"),
    }
    Ok(total)
}

fn log_factor(p: f64, level: usize) -> Result<f64> {
    if p >= 1.0 {
        return Err(Error::Precondition(format!(
            "coupling weight {p} at level {level} must stay below 1"
        )));
    }
    Ok(((1.0 - p) / (1.0 + p)).ln())
}

/// The analytic rule that governs levels beyond the explicit prefix.
fn effective_tail(family: &ScheduleFamily) -> &ScheduleFamily {
    match family {
        ScheduleFamily::Explicit { tail: Some(t), .. } => t,
        other => other,
    }
}

/// `sum_{n >= n0} n^(-sigma)` by Euler-Maclaurin; absolute error is
/// O(n0^(-sigma-5)), far below rounding for n0 >= 10^4.
fn zeta_tail(sigma: f64, n0: f64) -> f64 {
    n0.powf(1.0 - sigma) / (sigma - 1.0) + 0.5 * n0.powf(-sigma)
        + sigma * n0.powf(-sigma - 1.0) / 12.0
        - sigma * (sigma + 1.0) * (sigma + 2.0) * n0.powf(-sigma - 3.0) / 720.0
}
