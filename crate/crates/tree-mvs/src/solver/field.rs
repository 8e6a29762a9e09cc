//! Solution storage on the truncated tree plus the equation residual.
//!
//! Values live in level-major flat arrays: level `k` holds `m^k` entries and
//! the node with digits `d_1..d_k` sits at the base-m index they spell. The
//! successors of flat index `x` at level `k` occupy the contiguous block
//! `m*x .. m*x + m` at level `k + 1`, which every solver exploits.

use serde::Serialize;

use super::{CompiledLevels, SystemConfig};
use crate::error::{Error, Result};
use crate::tree::NodeId;

/// Per-field allocation budget. Guards against depths whose value arrays
/// cannot fit; checked in exact integer arithmetic before any allocation.
pub const MEMORY_CAP_BYTES: u128 = 2 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    DirectedExact,
    FixedPoint,
    ConstantOracle,
    Supersolution,
    Subsolution,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolveMeta {
    pub method: Method,
    /// Sweeps for iterative methods, levels processed for direct ones.
    pub iterations: usize,
    /// Sup-norm of the equation residual over all interior nodes, when the
    /// producing routine measured it.
    pub residual_sup: f64,
}

/// Component values on every node of the depth-`depth` truncated tree.
#[derive(Clone, Debug)]
pub struct SolutionField {
    m: usize,
    depth: usize,
    /// `values[component][level][flat_index]`.
    pub(crate) values: Vec<Vec<Vec<f64>>>,
    pub meta: SolveMeta,
}

/// `m^level` as a checked usize.
pub(crate) fn level_len(m: usize, level: usize) -> Result<usize> {
    let mut len: u128 = 1;
    for _ in 0..level {
        len = len.checked_mul(m as u128).ok_or(Error::LevelTooDeep(level))?;
        if len > usize::MAX as u128 {
            return Err(Error::LevelTooDeep(level));
        }
    }
    Ok(len as usize)
}

impl SolutionField {
    /// Allocates an all-`fill` field after checking the memory budget.
    pub fn filled(
        m: usize,
        depth: usize,
        components: usize,
        fill: f64,
        method: Method,
    ) -> Result<Self> {
        let mut need: u128 = 0;
        for level in 0..=depth {
            need += level_len(m, level)? as u128;
        }
        need = need
            .checked_mul(components as u128)
            .and_then(|n| n.checked_mul(std::mem::size_of::<f64>() as u128))
            .ok_or(Error::LevelTooDeep(depth))?;
        if need > MEMORY_CAP_BYTES {
            return Err(Error::MemoryCap { need, cap: MEMORY_CAP_BYTES });
        }
        let mut levels = Vec::with_capacity(depth + 1);
        for level in 0..=depth {
            levels.push(vec![fill; level_len(m, level)?]);
        }
        let values = vec![levels; components];
        Ok(SolutionField {
            m,
            depth,
            values,
            meta: SolveMeta { method, iterations: 0, residual_sup: f64::NAN },
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Truncation depth L: levels run `0..=L`, equations hold below L.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn component_count(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, component: usize, node: &NodeId) -> Result<f64> {
        if component >= self.values.len() {
            return Err(Error::OutOfDomain(format!("component {component} out of range")));
        }
        if node.level() > self.depth {
            return Err(Error::OutOfDomain(format!("node {node} below the truncation depth")));
        }
        node.validate(self.m as u32)?;
        let flat = node.flat_index(self.m as u32)? as usize;
        Ok(self.values[component][node.level()][flat])
    }

    pub fn value_flat(&self, component: usize, level: usize, flat: usize) -> f64 {
        self.values[component][level][flat]
    }

    /// Overwrites one entry; `value_flat`'s mutable counterpart.
    pub fn set_flat(&mut self, component: usize, level: usize, flat: usize, value: f64) {
        self.values[component][level][flat] = value;
    }

    pub fn level_slice(&self, component: usize, level: usize) -> &[f64] {
        &self.values[component][level]
    }

    pub fn root_value(&self, component: usize) -> f64 {
        self.values[component][0][0]
    }

    /// Min and max over the level-L boundary rows of all components.
    pub fn boundary_hull(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for comp in &self.values {
            for v in &comp[self.depth] {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        (lo, hi)
    }

    /// Min and max over every node and component.
    pub fn value_hull(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for comp in &self.values {
            for level in comp {
                for v in level {
                    lo = lo.min(*v);
                    hi = hi.max(*v);
                }
            }
        }
        (lo, hi)
    }

    /// Largest absolute value difference against a field of the same shape.
    pub fn max_abs_difference(&self, other: &SolutionField) -> Result<f64> {
        if self.m != other.m
            || self.depth != other.depth
            || self.values.len() != other.values.len()
        {
            return Err(Error::ShapeMismatch(format!(
                "fields differ in shape: m {} vs {}, depth {} vs {}, components {} vs {}",
                self.m,
                other.m,
                self.depth,
                other.depth,
                self.values.len(),
                other.values.len()
            )));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.values.iter().zip(&other.values) {
            for (la, lb) in a.iter().zip(b) {
                for (va, vb) in la.iter().zip(lb) {
                    worst = worst.max((va - vb).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Right side of component `i`'s equation at `(level, flat)`, read off the
/// stored field. The root drops the predecessor term.
pub(crate) fn equation_rhs(
    config: &SystemConfig,
    compiled: &CompiledLevels,
    values: &[Vec<Vec<f64>>],
    i: usize,
    level: usize,
    flat: usize,
) -> f64 {
    let m = config.m;
    let children = &values[i][level + 1][m * flat..m * flat + m];
    let average = config.components[i]
        .operator
        .eval(children)
        .expect("children slice has the operator's arity");
    let beta = compiled.beta[i][level];
    let inner = if level == 0 {
        average
    } else {
        (1.0 - beta) * average + beta * values[i][level - 1][flat / m]
    };
    let total = compiled.coupling_total[i][level];
    let mut rhs = (1.0 - total) * inner;
    for (j, comp) in values.iter().enumerate() {
        let p = compiled.coupling[i][j][level];
        if p != 0.0 {
            rhs += p * comp[level][flat];
        }
    }
    rhs
}

/// Residual `u_i(x) - RHS_i(x)` of the interior equation at `node`.
///
/// Errors with an out-of-domain condition at level L nodes, which carry
/// boundary data rather than an equation.
pub fn residual(
    config: &SystemConfig,
    field: &SolutionField,
    node: &NodeId,
    component: usize,
) -> Result<f64> {
    let level = node.level();
    if level >= field.depth() {
        return Err(Error::OutOfDomain(format!(
            "node {node} at level {level} is boundary data, not an equation"
        )));
    }
    if component >= field.component_count() {
        return Err(Error::OutOfDomain(format!("component {component} out of range")));
    }
    node.validate(config.m as u32)?;
    let compiled = CompiledLevels::compile(config, field.depth())?;
    let flat = node.flat_index(config.m as u32)? as usize;
    Ok(field.values[component][level][flat]
        - equation_rhs(config, &compiled, &field.values, component, level, flat))
}

/// Sup-norm of the residual over all components and interior nodes.
pub fn residual_sup(config: &SystemConfig, field: &SolutionField) -> Result<f64> {
    let compiled = CompiledLevels::compile(config, field.depth())?;
    let mut worst = 0.0f64;
    for i in 0..field.component_count() {
        for level in 0..field.depth() {
            for flat in 0..field.values[i][level].len() {
                let r = field.values[i][level][flat]
                    - equation_rhs(config, &compiled, &field.values, i, level, flat);
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::{AveragingOperator, OperatorKind};
    use crate::coefficients::CoefficientSchedule;
    use crate::solver::ComponentConfig;

    fn small_config(m: usize, n: usize, p: f64, beta: f64) -> SystemConfig {
        let comp = |_: usize| ComponentConfig {
            operator: AveragingOperator::new(OperatorKind::Mean, m).unwrap(),
            beta: CoefficientSchedule::constant(beta).unwrap(),
        };
        let coupling = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| CoefficientSchedule::constant(if i == j { 0.0 } else { p }).unwrap())
                    .collect()
            })
            .collect();
        SystemConfig::new(m, (0..n).map(comp).collect(), coupling).unwrap()
    }

    #[test]
    fn constant_fields_have_zero_residual() {
        let config = small_config(2, 2, 0.3, 0.25);
        let field = SolutionField::filled(2, 5, 2, 4.25, Method::FixedPoint).unwrap();
        assert_eq!(residual_sup(&config, &field).unwrap(), 0.0);
    }

    #[test]
    fn residual_rejects_boundary_nodes() {
        let config = small_config(2, 1, 0.0, 0.0);
        let field = SolutionField::filled(2, 3, 1, 0.0, Method::FixedPoint).unwrap();
        let boundary_node: NodeId = "0.0.0".parse().unwrap();
        assert!(matches!(
            residual(&config, &field, &boundary_node, 0),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn perturbing_one_value_moves_residuals_linearly() {
        // Mean operators make every residual affine in each stored value, so
        // the shifts below are exact up to one rounding.
        let config = small_config(2, 2, 0.3, 0.25);
        let field = SolutionField::filled(2, 4, 2, 1.0, Method::FixedPoint).unwrap();
        let mut bumped = field.clone();
        let eps = 0.5;
        // Perturb component 0 at level 2, flat index 1 (node "0.1").
        bumped.values[0][2][1] += eps;
        let node: NodeId = "0.1".parse().unwrap();
        let parent: NodeId = "0".parse().unwrap();

        // Own equation: self coefficient is exactly 1.
        let before = residual(&config, &field, &node, 0).unwrap();
        let after = residual(&config, &bumped, &node, 0).unwrap();
        assert!((after - before - eps).abs() < 1e-12);

        // Parent equation: child enters through (1-P)(1-beta)/m.
        let before = residual(&config, &field, &parent, 0).unwrap();
        let after = residual(&config, &bumped, &parent, 0).unwrap();
        let weight = (1.0 - 0.3) * (1.0 - 0.25) / 2.0;
        assert!((before - after - eps * weight).abs() < 1e-12);

        // Other component's equation at the same node: enters through p.
        let before = residual(&config, &field, &node, 1).unwrap();
        let after = residual(&config, &bumped, &node, 1).unwrap();
        assert!((before - after - eps * 0.3).abs() < 1e-12);
    }

    #[test]
    fn memory_cap_blocks_oversized_allocations() {
        let err = SolutionField::filled(2, 40, 2, 0.0, Method::FixedPoint).unwrap_err();
        assert!(matches!(err, Error::MemoryCap { .. }));
    }

    #[test]
    fn value_lookup_matches_flat_layout() {
        let mut field = SolutionField::filled(3, 2, 1, 0.0, Method::FixedPoint).unwrap();
        field.values[0][2][7] = 42.0;
        // Level-2 flat 7 in base 3 is digits (2, 1).
        let node: NodeId = "2.1".parse().unwrap();
        assert_eq!(field.value(0, &node).unwrap(), 42.0);
        let (lo, hi) = field.boundary_hull();
        assert_eq!((lo, hi), (0.0, 42.0));
    }
}
