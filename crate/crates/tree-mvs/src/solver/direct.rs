//! Exact backward-induction solver for the directed case.
//!
//! With every predecessor weight zero, the equation at a node only involves
//! that node's successors and the other components at the node itself. A
//! single sweep from level L-1 down to the root therefore solves the problem
//! exactly: at each node the successor averages are already known, leaving an
//! N x N linear system in the component values there.

use super::boundary::BoundaryData;
use super::field::{level_len, residual_sup, Method, SolutionField};
use super::{solve_dense, CompiledLevels, SystemConfig};
use crate::error::{Error, Result};

pub fn solve_directed_exact(
    config: &SystemConfig,
    boundary: &BoundaryData,
    depth: usize,
) -> Result<SolutionField> {
    let n = config.components.len();
    if boundary.component_count() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} boundary components for {} system components",
            boundary.component_count(),
            n
        )));
    }
    if !config.is_directed() {
        return Err(Error::Precondition(
            "backward induction needs every predecessor weight schedule to be zero".into(),
        ));
    }
    let m = config.m;
    let compiled = CompiledLevels::compile(config, depth)?;
    let mut field = SolutionField::filled(m, depth, n, 0.0, Method::DirectedExact)?;

    let boundary_len = level_len(m, depth)?;
    let scale = boundary_len as f64;
    for i in 0..n {
        for flat in 0..boundary_len {
            field.values[i][depth][flat] = boundary.eval(i, flat as f64 / scale);
        }
    }

    let mut mat = vec![0.0f64; n * n];
    let mut rhs = vec![0.0f64; n];
    for level in (0..depth).rev() {
        for flat in 0..level_len(m, level)? {
            for i in 0..n {
                let children = &field.values[i][level + 1][m * flat..m * flat + m];
                let average = config.components[i]
                    .operator
                    .eval(children)
                    .expect("children slice has the operator's arity");
                rhs[i] = (1.0 - compiled.coupling_total[i][level]) * average;
                for j in 0..n {
                    mat[i * n + j] =
                        if i == j { 1.0 } else { -compiled.coupling[i][j][level] };
                }
            }
            solve_dense(&mut mat, &mut rhs, n)?;
            for i in 0..n {
                field.values[i][level][flat] = rhs[i];
            }
        }
    }
    field.meta.iterations = depth;
    field.meta.residual_sup = residual_sup(config, &field)?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::{AveragingOperator, OperatorKind};
    use crate::coefficients::{CoefficientSchedule, ScheduleFamily};
    use crate::solver::{BoundarySpec, ComponentConfig};
    use crate::tree::NodeId;

    fn component(kind: OperatorKind, m: usize) -> ComponentConfig {
        ComponentConfig {
            operator: AveragingOperator::new(kind, m).unwrap(),
            beta: CoefficientSchedule::constant(0.0).unwrap(),
        }
    }

    fn geometric(c: f64, ratio: f64) -> CoefficientSchedule {
        CoefficientSchedule::new(ScheduleFamily::Geometric { c, ratio }).unwrap()
    }

    fn zero() -> CoefficientSchedule {
        CoefficientSchedule::constant(0.0).unwrap()
    }

    #[test]
    fn constant_boundary_yields_constant_field() {
        let p = geometric(0.5, 0.5);
        let config = SystemConfig::new(
            2,
            vec![component(OperatorKind::Midrange, 2), component(OperatorKind::Mean, 2)],
            vec![vec![zero(), p.clone()], vec![p, zero()]],
        )
        .unwrap();
        let boundary = BoundaryData::constant_all(2, 3.25).unwrap();
        let field = solve_directed_exact(&config, &boundary, 8).unwrap();
        for i in 0..2 {
            for level in 0..=8 {
                for v in field.level_slice(i, level) {
                    assert_eq!(*v, 3.25);
                }
            }
        }
        assert!(field.meta.residual_sup <= 1e-12);
    }

    #[test]
    fn single_component_mean_reproduces_cell_midpoints() {
        // With f(t) = t the depth-L solution at a node is the midpoint of its
        // psi cell: the mean of the children's midpoints is the parent's.
        let config = SystemConfig::new(
            2,
            vec![component(OperatorKind::Mean, 2)],
            vec![vec![zero()]],
        )
        .unwrap();
        let boundary = BoundaryData::new(vec![BoundarySpec::identity()]).unwrap();
        let depth = 10;
        let field = solve_directed_exact(&config, &boundary, depth).unwrap();
        for level in 0..depth {
            let scale = (2.0f64).powi(level as i32);
            for (flat, v) in field.level_slice(0, level).iter().enumerate() {
                // Boundary values are cell left endpoints at level L, so the
                // interior sees midpoints shifted to the cell's half-width
                // minus the final half-cell: midpoint of [flat, flat+1)/2^k
                // minus half a boundary cell.
                let midpoint = (flat as f64 + 0.5) / scale - 0.5 / (2.0f64).powi(depth as i32);
                assert!(
                    (v - midpoint).abs() < 1e-12,
                    "level {level} flat {flat}: {v} vs {midpoint}"
                );
            }
        }
    }

    #[test]
    fn rejects_undirected_configs() {
        let mut comp = component(OperatorKind::Mean, 2);
        comp.beta = CoefficientSchedule::constant(0.25).unwrap();
        let config = SystemConfig::new(2, vec![comp], vec![vec![zero()]]).unwrap();
        let boundary = BoundaryData::constant_all(1, 0.0).unwrap();
        assert!(matches!(
            solve_directed_exact(&config, &boundary, 4),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn values_respect_the_boundary_hull() {
        let p = geometric(0.4, 0.5);
        let config = SystemConfig::new(
            3,
            vec![
                component(OperatorKind::MidrangeMean { alpha: 0.5 }, 3),
                component(OperatorKind::PMean { p: 3.0 }, 3),
            ],
            vec![vec![zero(), p.clone()], vec![p, zero()]],
        )
        .unwrap();
        let boundary = BoundaryData::new(vec![
            BoundarySpec::identity(),
            BoundarySpec::Polynomial { coefficients: vec![1.0, -2.0, 1.0] },
        ])
        .unwrap();
        let field = solve_directed_exact(&config, &boundary, 6).unwrap();
        let (lo, hi) = field.boundary_hull();
        let (vlo, vhi) = field.value_hull();
        assert!(vlo >= lo - 1e-12 && vhi <= hi + 1e-12);
    }

    #[test]
    fn level_values_match_two_by_two_elimination() {
        // Independent oracle: solve the root system by hand at depth 1.
        let p = CoefficientSchedule::constant(0.3).unwrap();
        let q = CoefficientSchedule::constant(0.2).unwrap();
        let config = SystemConfig::new(
            2,
            vec![component(OperatorKind::Mean, 2), component(OperatorKind::Midrange, 2)],
            vec![vec![zero(), p], vec![q, zero()]],
        )
        .unwrap();
        let boundary = BoundaryData::new(vec![
            BoundarySpec::Constant { c: 1.0 },
            BoundarySpec::Constant { c: 5.0 },
        ])
        .unwrap();
        let field = solve_directed_exact(&config, &boundary, 1).unwrap();
        // u = 0.7 * 1 + 0.3 v, v = 0.8 * 5 + 0.2 u -> u = (0.7 + 1.2) / 0.94.
        let u = (0.7 + 0.3 * 4.0) / (1.0 - 0.06);
        let v = (4.0 + 0.2 * 0.7) / (1.0 - 0.06);
        let root = NodeId::root();
        assert!((field.value(0, &root).unwrap() - u).abs() < 1e-14);
        assert!((field.value(1, &root).unwrap() - v).abs() < 1e-14);
    }
}
