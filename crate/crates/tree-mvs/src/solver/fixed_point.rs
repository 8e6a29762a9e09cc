//! Fixed-point iteration for the general (undirected) problem.
//!
//! The default scheme is a full-tree Jacobi sweep: every interior value is
//! recomputed from the previous iterate, so the result does not depend on
//! node ordering or on how a sweep is parallelized. The update map is
//! nonexpansive in the sup norm (its weights form a subconvex combination),
//! which turns the stopping rule "change <= tol" into the residual bound
//! "residual <= 2 tol": the returned field's residual is the change the next
//! sweep would have made.
//!
//! A Gauss-Seidel scheme (in-place, boundary-first level order) is available
//! for speed; it converges to the same fixed point but its roundoff depends
//! on the sweep order, so it is not the reproducibility reference.

use rayon::prelude::*;

use super::boundary::BoundaryData;
use super::field::{equation_rhs, level_len, residual_sup, Method, SolutionField};
use super::{CompiledLevels, SystemConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepScheme {
    Jacobi,
    GaussSeidel,
}

#[derive(Clone, Copy, Debug)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub scheme: SweepScheme,
    /// Interior initializer; defaults to the midpoint of the boundary hull.
    pub init: Option<f64>,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tol: 1e-12,
            max_sweeps: 100_000,
            scheme: SweepScheme::Jacobi,
            init: None,
        }
    }
}

/// Rows shorter than this are updated serially; longer rows go through
/// rayon. Both paths write the identical values.
const PAR_ROW_LEN: usize = 1 << 10;

pub fn solve_fixed_point(
    config: &SystemConfig,
    boundary: &BoundaryData,
    depth: usize,
    options: &FixedPointOptions,
) -> Result<SolutionField> {
    let n = config.components.len();
    if boundary.component_count() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} boundary components for {} system components",
            boundary.component_count(),
            n
        )));
    }
    if !(options.tol > 0.0) {
        return Err(Error::Precondition(format!(
            "tolerance must be positive, got {}",
            options.tol
        )));
    }
    let m = config.m;
    let compiled = CompiledLevels::compile(config, depth)?;
    let mut cur = SolutionField::filled(m, depth, n, 0.0, Method::FixedPoint)?;

    let boundary_len = level_len(m, depth)?;
    let scale = boundary_len as f64;
    for i in 0..n {
        for flat in 0..boundary_len {
            cur.values[i][depth][flat] = boundary.eval(i, flat as f64 / scale);
        }
    }
    let (lo, hi) = cur.boundary_hull();
    let fill = options.init.unwrap_or((lo + hi) / 2.0);
    for i in 0..n {
        for level in 0..depth {
            cur.values[i][level].fill(fill);
        }
    }

    match options.scheme {
        SweepScheme::Jacobi => {
            let mut next = cur.clone();
            for sweep in 1..=options.max_sweeps {
                let change = jacobi_sweep_into(config, &compiled, &cur.values, &mut next.values);
                std::mem::swap(&mut cur.values, &mut next.values);
                if change <= options.tol {
                    cur.meta.iterations = sweep;
                    cur.meta.residual_sup = residual_sup(config, &cur)?;
                    return Ok(cur);
                }
            }
        }
        SweepScheme::GaussSeidel => {
            for sweep in 1..=options.max_sweeps {
                let mut change = 0.0f64;
                for level in (0..depth).rev() {
                    for i in 0..n {
                        for flat in 0..cur.values[i][level].len() {
                            let new = equation_rhs(config, &compiled, &cur.values, i, level, flat);
                            change = change.max((new - cur.values[i][level][flat]).abs());
                            cur.values[i][level][flat] = new;
                        }
                    }
                }
                if change <= options.tol {
                    cur.meta.iterations = sweep;
                    cur.meta.residual_sup = residual_sup(config, &cur)?;
                    return Ok(cur);
                }
            }
        }
    }
    let residual = residual_sup(config, &cur)?;
    Err(Error::NonConvergence { sweeps: options.max_sweeps, residual })
}

/// One Jacobi sweep of `cur` into `next` (boundary row untouched); returns
/// the sup-norm change. Row updates are independent, so long rows run in
/// parallel with bitwise identical results.
fn jacobi_sweep_into(
    config: &SystemConfig,
    compiled: &CompiledLevels,
    cur: &[Vec<Vec<f64>>],
    next: &mut [Vec<Vec<f64>>],
) -> f64 {
    let n = cur.len();
    let depth = cur[0].len() - 1;
    let mut change = 0.0f64;
    for i in 0..n {
        for level in 0..depth {
            let row = &mut next[i][level];
            if row.len() >= PAR_ROW_LEN {
                row.par_iter_mut().enumerate().for_each(|(flat, slot)| {
                    *slot = equation_rhs(config, compiled, cur, i, level, flat);
                });
            } else {
                for (flat, slot) in row.iter_mut().enumerate() {
                    *slot = equation_rhs(config, compiled, cur, i, level, flat);
                }
            }
            for (a, b) in row.iter().zip(&cur[i][level]) {
                change = change.max((a - b).abs());
            }
        }
    }
    change
}

/// Applies one Jacobi sweep to a copy of `field` and returns it, leaving the
/// boundary row as is. This is the update map whose fixed point the solver
/// seeks; exposed for order-preservation and contraction tests.
pub fn jacobi_sweep(config: &SystemConfig, field: &SolutionField) -> Result<SolutionField> {
    let compiled = CompiledLevels::compile(config, field.depth())?;
    let mut next = field.clone();
    jacobi_sweep_into(config, &compiled, &field.values, &mut next.values);
    Ok(next)
}
