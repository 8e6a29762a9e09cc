//! Depth-convergence study: solve the same problem at increasing truncation
//! depths and tabulate how the root values settle.

use super::boundary::BoundaryData;
use super::direct::solve_directed_exact;
use super::field::SolutionField;
use super::fixed_point::{solve_fixed_point, FixedPointOptions};
use super::SystemConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverChoice {
    /// Directed backward sweep when all predecessor weights vanish, Jacobi
    /// iteration otherwise.
    Auto,
    DirectedExact,
    FixedPoint,
}

#[derive(Clone, Copy, Debug)]
pub struct StudyOptions {
    pub method: SolverChoice,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions { method: SolverChoice::Auto, tol: 1e-12, max_sweeps: 100_000 }
    }
}

/// One component's root value at one truncation depth.
#[derive(Clone, Copy, Debug)]
pub struct StudyRow {
    pub depth: usize,
    pub component: usize,
    pub root_value: f64,
    /// Change against the previous depth in the list; `None` on the first.
    pub delta: Option<f64>,
    /// Largest pairwise root gap across components at this depth.
    pub component_gap: f64,
}

fn solve_at(
    config: &SystemConfig,
    boundary: &BoundaryData,
    depth: usize,
    options: &StudyOptions,
) -> Result<SolutionField> {
    let directed = match options.method {
        SolverChoice::DirectedExact => true,
        SolverChoice::FixedPoint => false,
        SolverChoice::Auto => config.is_directed(),
    };
    if directed {
        solve_directed_exact(config, boundary, depth)
    } else {
        let fp = FixedPointOptions {
            tol: options.tol,
            max_sweeps: options.max_sweeps,
            ..FixedPointOptions::default()
        };
        solve_fixed_point(config, boundary, depth, &fp)
    }
}

/// Solves at each listed depth and reports per-component root values with
/// successive differences. Depths must be strictly increasing.
pub fn convergence_study(
    config: &SystemConfig,
    boundary: &BoundaryData,
    depths: &[usize],
    options: &StudyOptions,
) -> Result<Vec<StudyRow>> {
    if depths.is_empty() {
        return Err(Error::Precondition("a study needs at least one depth".into()));
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(format!(
            "study depths must be strictly increasing, got {depths:?}"
        )));
    }
    if boundary.component_count() != config.component_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} boundary components for {} system components",
            boundary.component_count(),
            config.component_count()
        )));
    }
    let n = config.component_count();
    let mut rows = Vec::with_capacity(depths.len() * n);
    let mut previous: Option<Vec<f64>> = None;
    for &depth in depths {
        let field = solve_at(config, boundary, depth, options)?;
        let roots: Vec<f64> = (0..n).map(|i| field.root_value(i)).collect();
        let mut gap = 0.0f64;
        for a in &roots {
            for b in &roots {
                gap = gap.max((a - b).abs());
            }
        }
        for (i, &root) in roots.iter().enumerate() {
            rows.push(StudyRow {
                depth,
                component: i,
                root_value: root,
                delta: previous.as_ref().map(|p| (root - p[i]).abs()),
                component_gap: gap,
            });
        }
        previous = Some(roots);
    }
    Ok(rows)
}
