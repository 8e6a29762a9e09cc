//! Dirichlet solvers for the coupled mean-value system on a truncated tree.
//!
//! The depth-L problem pins component values at level L to the boundary data
//! composed with `psi` and imposes the interior equation at levels below.
//! Two solvers cover the two regimes: a backward sweep when every `beta`
//! schedule vanishes (each equation then only looks down the tree), and a
//! Jacobi fixed-point iteration for the general case. Around them sit the
//! level-constant closed-form oracle for the symmetric two-component system,
//! sub/supersolution builders, and a depth-convergence study.

mod boundary;
mod bracket;
mod constant;
mod direct;
mod field;
mod fixed_point;
mod study;

pub use boundary::{BoundaryData, BoundarySpec};
pub use bracket::{
    build_subsolution, build_supersolution, max_signed_residual, min_signed_residual,
    verify_bracket, BracketReport,
};
pub use constant::solve_constant_symmetric;
pub use direct::solve_directed_exact;
pub use field::{residual, residual_sup, Method, SolutionField, SolveMeta};
pub use fixed_point::{jacobi_sweep, solve_fixed_point, FixedPointOptions, SweepScheme};
pub use study::{convergence_study, SolverChoice, StudyOptions, StudyRow};

use crate::averaging::AveragingOperator;
use crate::coefficients::CoefficientSchedule;
use crate::error::{Error, Result};

/// One component of the system: its averaging operator and its predecessor
/// weight schedule.
#[derive(Clone, Debug)]
pub struct ComponentConfig {
    pub operator: AveragingOperator,
    pub beta: CoefficientSchedule,
}

/// Full N-component system on the m-regular tree.
///
/// `coupling[i][j]` is the level schedule of the weight component `i` places
/// on component `j` at the same node. The diagonal is identically zero.
#[derive(Clone, Debug)]
pub struct SystemConfig {
    pub m: usize,
    pub components: Vec<ComponentConfig>,
    pub coupling: Vec<Vec<CoefficientSchedule>>,
}

impl SystemConfig {
    pub fn new(
        m: usize,
        components: Vec<ComponentConfig>,
        coupling: Vec<Vec<CoefficientSchedule>>,
    ) -> Result<Self> {
        let config = SystemConfig { m, components, coupling };
        config.validate()?;
        Ok(config)
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Structural validation. Levels beyond every explicit prefix are covered
    /// by the families' monotonicity, so the per-level checks run over a
    /// finite horizon.
    pub fn validate(&self) -> Result<()> {
        let violation = |path: &str, message: String| {
            Err(Error::ConfigViolation { path: path.into(), message })
        };
        if self.m < 2 {
            return violation("m", format!("branching factor {} below 2", self.m));
        }
        let n = self.components.len();
        if n == 0 {
            return violation("components", "at least one component required".into());
        }
        for (i, comp) in self.components.iter().enumerate() {
            if comp.operator.arity() != self.m {
                return violation(
                    &format!("components[{i}].operator"),
                    format!("arity {} does not match m = {}", comp.operator.arity(), self.m),
                );
            }
            if comp.beta.sup_bound() >= 1.0 {
                return violation(
                    &format!("components[{i}].beta"),
                    "predecessor weights must stay strictly below 1".into(),
                );
            }
        }
        if self.coupling.len() != n || self.coupling.iter().any(|row| row.len() != n) {
            return violation("coupling", format!("expected a {n} x {n} schedule array"));
        }
        for (i, row) in self.coupling.iter().enumerate() {
            if !row[i].is_identically_zero() {
                return violation(
                    &format!("coupling[{i}][{i}]"),
                    "self-coupling must be the zero schedule".into(),
                );
            }
        }

        // Beyond the longest explicit prefix every schedule is nonincreasing,
        // so one extra level witnesses all later ones.
        let horizon = self
            .coupling
            .iter()
            .flatten()
            .map(|s| s.monotone_horizon())
            .max()
            .unwrap_or(0);
        for k in 0..=horizon {
            let mut totals = Vec::with_capacity(n);
            for (i, row) in self.coupling.iter().enumerate() {
                let mut total = 0.0;
                let mut defined = true;
                for (j, sched) in row.iter().enumerate() {
                    match sched.value_at(k) {
                        Ok(v) => total += v,
                        // An open-ended explicit schedule: deeper levels are
                        // unreachable for solving and checked at compile time.
                        Err(Error::MissingTail(_)) => defined = false,
                        Err(e) => {
                            return Err(Error::ConfigViolation {
                                path: format!("coupling[{i}][{j}]"),
                                message: e.to_string(),
                            })
                        }
                    }
                }
                if n >= 3 && defined && total >= 1.0 {
                    return violation(
                        &format!("coupling[{i}]"),
                        format!("row sum {total} at level {k} must stay below 1"),
                    );
                }
                totals.push(if defined { Some(total) } else { None });
            }
            if n == 2 {
                if let (Some(p), Some(q)) = (totals[0], totals[1]) {
                    if p >= 1.0 && q >= 1.0 {
                        return violation(
                            "coupling",
                            format!("both cross weights equal 1 at level {k}"),
                        );
                    }
                }
            }
        }
        Ok(())
    }

    /// True when every predecessor weight is identically zero (directed
    /// case: equations only look toward successors).
    pub fn is_directed(&self) -> bool {
        self.components.iter().all(|c| c.beta.is_identically_zero())
    }
}

/// Per-level coefficient tables for equations at levels `0..depth`.
///
/// `beta[i][0]` is forced to 0: the root has no predecessor, so its equation
/// drops that term regardless of the schedule.
#[derive(Clone, Debug)]
pub(crate) struct CompiledLevels {
    pub beta: Vec<Vec<f64>>,
    pub coupling: Vec<Vec<Vec<f64>>>,
    /// `coupling_total[i][k]` = sum over `j` of `coupling[i][j][k]`.
    pub coupling_total: Vec<Vec<f64>>,
}

impl CompiledLevels {
    pub fn compile(config: &SystemConfig, depth: usize) -> Result<Self> {
        let n = config.components.len();
        let mut beta = vec![vec![0.0; depth]; n];
        let mut coupling = vec![vec![vec![0.0; depth]; n]; n];
        let mut coupling_total = vec![vec![0.0; depth]; n];
        for k in 0..depth {
            for i in 0..n {
                beta[i][k] = if k == 0 {
                    0.0
                } else {
                    config.components[i].beta.value_at(k).map_err(|e| Error::ConfigViolation {
                        path: format!("components[{i}].beta"),
                        message: format!("level {k}: {e}"),
                    })?
                };
                if beta[i][k] >= 1.0 {
                    return Err(Error::ConfigViolation {
                        path: format!("components[{i}].beta"),
                        message: format!("value {} at level {k} not below 1", beta[i][k]),
                    });
                }
                let mut total = 0.0;
                for j in 0..n {
                    let v = config.coupling[i][j].value_at(k).map_err(|e| {
                        Error::ConfigViolation {
                            path: format!("coupling[{i}][{j}]"),
                            message: format!("level {k}: {e}"),
                        }
                    })?;
                    coupling[i][j][k] = v;
                    total += v;
                }
                if total > 1.0 {
                    return Err(Error::ConfigViolation {
                        path: format!("coupling[{i}]"),
                        message: format!("row sum {total} at level {k} exceeds 1"),
                    });
                }
                coupling_total[i][k] = total;
            }
        }
        Ok(CompiledLevels { beta, coupling, coupling_total })
    }
}

/// Gaussian elimination with partial pivoting on a small dense system,
/// in place. `a` is row-major n x n, `b` the right side; the solution lands
/// in `b`.
pub(crate) fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
            .expect("nonempty row range");
        if a[pivot_row * n + col].abs() < 1e-14 * scale {
            return Err(Error::ConfigViolation {
                path: "coupling".into(),
                message: "singular per-node block: coupling constraints violated".into(),
            });
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }
        for row in (col + 1)..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for j in (col + 1)..n {
                a[row * n + j] -= factor * a[col * n + j];
            }
            b[row] -= factor * b[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in (row + 1)..n {
            acc -= a[row * n + j] * b[j];
        }
        b[row] = acc / a[row * n + row];
    }
    Ok(())
}
