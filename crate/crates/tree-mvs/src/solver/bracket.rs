//! Level-constant super- and subsolution construction, and bracket checks.
//!
//! Both builders decorate per-component constants `C_i` with one shared
//! nonnegative correction sequence: the supersolution is
//! `C_i + sum_{j=level}^{depth} r_j`, the subsolution its mirror
//! `C_i - sum r_j`. At an interior level `k` the supersolution inequality
//! reduces to
//!
//! ```text
//! (1 - P_i)[(1 - b_i) r_k - b_i r_{k-1}]  >=  sum_j p_ij (C_j - C_i),
//! ```
//!
//! whose right side is at most `P_i * L` with `L` the worst pairwise
//! constant gap. Solving for `r_k` and taking the worst component yields the
//! recursion used here; the root level contributes a floor on `r_0` instead
//! (it has no `r_{k-1}` term). Using `L` uniformly instead of the signed
//! per-component gaps only enlarges the corrections, which keeps both
//! inequalities valid for every component simultaneously.

use super::field::{equation_rhs, Method, SolutionField};
use super::{CompiledLevels, SystemConfig};
use crate::error::{Error, Result};

/// Abort threshold for the accumulated correction: crossing it means the
/// coefficient schedules cannot support a finite bracket.
const CORRECTION_CAP: f64 = 1e100;

fn correction_sequence(
    config: &SystemConfig,
    compiled: &CompiledLevels,
    constants: &[f64],
    r0: Option<f64>,
    depth: usize,
) -> Result<Vec<f64>> {
    let n = config.components.len();
    let mut l_gap = 0.0f64;
    for a in constants {
        for b in constants {
            l_gap = l_gap.max((a - b).abs());
        }
    }
    if let Some(r0) = r0 {
        if !(r0 >= 0.0) || !r0.is_finite() {
            return Err(Error::Precondition(format!(
                "the root correction must be finite and nonnegative, got {r0}"
            )));
        }
    }

    let mut r = vec![0.0f64; depth + 1];
    if depth == 0 {
        return Ok(r);
    }
    let mut root_floor = r0.unwrap_or(l_gap);
    for i in 0..n {
        let total = compiled.coupling_total[i][0];
        if total >= 1.0 {
            return Err(Error::Precondition(
                "bracket construction needs coupling row sums strictly below 1".into(),
            ));
        }
        root_floor = root_floor.max(total * l_gap / (1.0 - total));
    }
    r[0] = root_floor;
    for k in 1..depth {
        let mut needed = 0.0f64;
        for i in 0..n {
            let beta = compiled.beta[i][k];
            let total = compiled.coupling_total[i][k];
            if total >= 1.0 {
                return Err(Error::Precondition(
                    "bracket construction needs coupling row sums strictly below 1".into(),
                ));
            }
            let lift = beta / (1.0 - beta) * r[k - 1]
                + total * l_gap / ((1.0 - total) * (1.0 - beta));
            needed = needed.max(lift);
        }
        r[k] = needed;
    }
    let sum: f64 = r.iter().sum();
    if !sum.is_finite() || sum > CORRECTION_CAP {
        return Err(Error::Precondition(
            "correction series exceeds the cap; the schedules do not admit a finite bracket"
                .into(),
        ));
    }
    Ok(r)
}

fn assemble(
    config: &SystemConfig,
    constants: &[f64],
    r0: Option<f64>,
    depth: usize,
    sign: f64,
    method: Method,
) -> Result<SolutionField> {
    let n = config.components.len();
    if constants.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} constants for {} components",
            constants.len(),
            n
        )));
    }
    let compiled = CompiledLevels::compile(config, depth)?;
    let r = correction_sequence(config, &compiled, constants, r0, depth)?;
    let mut field = SolutionField::filled(config.m, depth, n, 0.0, method)?;
    // Suffix sums: level k carries sum_{j >= k} r_j.
    let mut suffix = vec![0.0f64; depth + 2];
    for k in (0..=depth).rev() {
        suffix[k] = suffix[k + 1] + r[k];
    }
    for i in 0..n {
        for level in 0..=depth {
            field.values[i][level].fill(constants[i] + sign * suffix[level]);
        }
    }
    field.meta.iterations = 0;
    field.meta.residual_sup = f64::NAN;
    Ok(field)
}

/// Level-constant supersolution dominating the solution with boundary
/// constants `constants`. `r0` overrides the root correction (default: the
/// worst pairwise constant gap); it is raised to the root equations' floor
/// when too small.
pub fn build_supersolution(
    config: &SystemConfig,
    constants: &[f64],
    r0: Option<f64>,
    depth: usize,
) -> Result<SolutionField> {
    assemble(config, constants, r0, depth, 1.0, Method::Supersolution)
}

/// Mirror of [`build_supersolution`]: the same corrections subtracted.
pub fn build_subsolution(
    config: &SystemConfig,
    constants: &[f64],
    r0: Option<f64>,
    depth: usize,
) -> Result<SolutionField> {
    assemble(config, constants, r0, depth, -1.0, Method::Subsolution)
}

/// Smallest signed residual `u - RHS` over all components and interior
/// nodes. A supersolution keeps this above `-tol`.
pub fn min_signed_residual(config: &SystemConfig, field: &SolutionField) -> Result<f64> {
    signed_residual_extreme(config, field, true)
}

/// Largest signed residual; a subsolution keeps it below `tol`.
pub fn max_signed_residual(config: &SystemConfig, field: &SolutionField) -> Result<f64> {
    signed_residual_extreme(config, field, false)
}

fn signed_residual_extreme(
    config: &SystemConfig,
    field: &SolutionField,
    minimum: bool,
) -> Result<f64> {
    let compiled = CompiledLevels::compile(config, field.depth())?;
    let mut extreme = if minimum { f64::INFINITY } else { f64::NEG_INFINITY };
    for i in 0..field.component_count() {
        for level in 0..field.depth() {
            for flat in 0..field.values[i][level].len() {
                let r = field.values[i][level][flat]
                    - equation_rhs(config, &compiled, &field.values, i, level, flat);
                extreme = if minimum { extreme.min(r) } else { extreme.max(r) };
            }
        }
    }
    Ok(extreme)
}

/// Worst node-wise violations of `sub <= sol <= super`.
#[derive(Clone, Copy, Debug)]
pub struct BracketReport {
    /// Max of `sub - sol`; nonpositive when the lower bound holds.
    pub worst_lower_gap: f64,
    /// Max of `sol - super`; nonpositive when the upper bound holds.
    pub worst_upper_gap: f64,
    /// `(component, level, flat)` attaining the lower worst case.
    pub lower_witness: (usize, usize, usize),
    /// `(component, level, flat)` attaining the upper worst case.
    pub upper_witness: (usize, usize, usize),
}

impl BracketReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.worst_lower_gap <= tol && self.worst_upper_gap <= tol
    }
}

pub fn verify_bracket(
    sub: &SolutionField,
    sol: &SolutionField,
    sup: &SolutionField,
) -> Result<BracketReport> {
    for other in [sub, sup] {
        if other.m() != sol.m()
            || other.depth() != sol.depth()
            || other.component_count() != sol.component_count()
        {
            return Err(Error::ShapeMismatch(
                "bracket fields must share m, depth, and component count".into(),
            ));
        }
    }
    let mut report = BracketReport {
        worst_lower_gap: f64::NEG_INFINITY,
        worst_upper_gap: f64::NEG_INFINITY,
        lower_witness: (0, 0, 0),
        upper_witness: (0, 0, 0),
    };
    for i in 0..sol.component_count() {
        for level in 0..=sol.depth() {
            for flat in 0..sol.values[i][level].len() {
                let low = sub.values[i][level][flat] - sol.values[i][level][flat];
                if low > report.worst_lower_gap {
                    report.worst_lower_gap = low;
                    report.lower_witness = (i, level, flat);
                }
                let up = sol.values[i][level][flat] - sup.values[i][level][flat];
                if up > report.worst_upper_gap {
                    report.worst_upper_gap = up;
                    report.upper_witness = (i, level, flat);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::{AveragingOperator, OperatorKind};
    use crate::coefficients::{CoefficientSchedule, ScheduleFamily};
    use crate::solver::{
        solve_fixed_point, BoundaryData, ComponentConfig, FixedPointOptions,
    };

    fn component(kind: OperatorKind, m: usize, beta: f64) -> ComponentConfig {
        ComponentConfig {
            operator: AveragingOperator::new(kind, m).unwrap(),
            beta: CoefficientSchedule::constant(beta).unwrap(),
        }
    }

    fn geometric(c: f64, ratio: f64) -> CoefficientSchedule {
        CoefficientSchedule::new(ScheduleFamily::Geometric { c, ratio }).unwrap()
    }

    fn zero() -> CoefficientSchedule {
        CoefficientSchedule::constant(0.0).unwrap()
    }

    fn demo_config(beta: f64) -> SystemConfig {
        let p = geometric(0.5, 0.5);
        SystemConfig::new(
            2,
            vec![
                component(OperatorKind::Midrange, 2, beta),
                component(OperatorKind::Mean, 2, beta),
            ],
            vec![vec![zero(), p.clone()], vec![p, zero()]],
        )
        .unwrap()
    }

    #[test]
    fn equal_constants_collapse_to_the_constant_field() {
        let config = demo_config(0.25);
        let sup = build_supersolution(&config, &[2.0, 2.0], None, 6).unwrap();
        let sub = build_subsolution(&config, &[2.0, 2.0], None, 6).unwrap();
        for i in 0..2 {
            for level in 0..=6 {
                for v in sup.level_slice(i, level) {
                    assert_eq!(*v, 2.0);
                }
                for v in sub.level_slice(i, level) {
                    assert_eq!(*v, 2.0);
                }
            }
        }
        let report = verify_bracket(&sub, &sup, &sup).unwrap();
        assert_eq!(report.worst_lower_gap, 0.0);
        assert_eq!(report.worst_upper_gap, 0.0);
    }

    #[test]
    fn decoupled_case_needs_no_correction() {
        let config = SystemConfig::new(
            2,
            vec![component(OperatorKind::Mean, 2, 0.0), component(OperatorKind::Mean, 2, 0.0)],
            vec![vec![zero(), zero()], vec![zero(), zero()]],
        )
        .unwrap();
        let sup = build_supersolution(&config, &[0.0, 1.0], Some(0.0), 5).unwrap();
        for level in 0..=5 {
            for v in sup.level_slice(0, level) {
                assert_eq!(*v, 0.0);
            }
            for v in sup.level_slice(1, level) {
                assert_eq!(*v, 1.0);
            }
        }
        assert!(min_signed_residual(&config, &sup).unwrap() >= -1e-12);
    }

    #[test]
    fn demo_brackets_satisfy_their_inequalities() {
        let config = demo_config(0.25);
        let sup = build_supersolution(&config, &[0.0, 1.0], None, 10).unwrap();
        let sub = build_subsolution(&config, &[0.0, 1.0], None, 10).unwrap();
        assert!(
            min_signed_residual(&config, &sup).unwrap() >= -1e-12,
            "supersolution inequality failed"
        );
        assert!(
            max_signed_residual(&config, &sub).unwrap() <= 1e-12,
            "subsolution inequality failed"
        );
    }

    #[test]
    fn brackets_enclose_the_fixed_point_solution() {
        let config = demo_config(0.25);
        let boundary = BoundaryData::new(vec![
            crate::solver::BoundarySpec::Constant { c: 0.0 },
            crate::solver::BoundarySpec::Constant { c: 1.0 },
        ])
        .unwrap();
        let sol = solve_fixed_point(&config, &boundary, 8, &FixedPointOptions::default()).unwrap();
        let sup = build_supersolution(&config, &[0.0, 1.0], None, 8).unwrap();
        let sub = build_subsolution(&config, &[0.0, 1.0], None, 8).unwrap();
        let report = verify_bracket(&sub, &sol, &sup).unwrap();
        assert!(report.passes(1e-9), "{report:?}");
    }

    #[test]
    fn tampering_is_reported_with_a_witness() {
        let config = demo_config(0.25);
        let sol = build_supersolution(&config, &[0.0, 1.0], None, 5).unwrap();
        let mut sup = sol.clone();
        // Lower one interior value below the solution.
        sup.values[1][2][3] -= 0.5;
        let sub = build_subsolution(&config, &[0.0, 1.0], None, 5).unwrap();
        let report = verify_bracket(&sub, &sol, &sup).unwrap();
        assert!(!report.passes(1e-9));
        assert_eq!(report.upper_witness, (1, 2, 3));
        assert!(report.worst_upper_gap >= 0.5 - 1e-12);
    }

    #[test]
    fn row_sums_at_one_are_rejected() {
        let one = CoefficientSchedule::constant(1.0).unwrap();
        let half = CoefficientSchedule::constant(0.5).unwrap();
        let config = SystemConfig::new(
            2,
            vec![component(OperatorKind::Mean, 2, 0.0), component(OperatorKind::Mean, 2, 0.0)],
            vec![vec![zero(), one], vec![half, zero()]],
        )
        .unwrap();
        assert!(matches!(
            build_supersolution(&config, &[0.0, 1.0], None, 4),
            Err(Error::Precondition(_))
        ));
    }
}
