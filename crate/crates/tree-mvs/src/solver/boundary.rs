//! Boundary data: one function `[0, 1] -> R` per component, composed with
//! `psi` to pin the level-L values of the truncated problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A boundary function on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum BoundarySpec {
    #[serde(rename = "constant")]
    Constant { c: f64 },
    /// `values[s]` on the s-th segment cut by the breakpoints;
    /// right-continuous at each breakpoint. Needs
    /// `values.len() == breakpoints.len() + 1`.
    #[serde(rename = "piecewise_constant")]
    PiecewiseConstant { breakpoints: Vec<f64>, values: Vec<f64> },
    /// Linear interpolation through `(t, y)` knots covering `[0, 1]`.
    #[serde(rename = "piecewise_linear")]
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// `coefficients[d] * t^d`, low degree first.
    #[serde(rename = "polynomial")]
    Polynomial { coefficients: Vec<f64> },
}

impl<'de> Deserialize<'de> for BoundarySpec {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let value = serde_json::Value::deserialize(deserializer)?;
        let obj = crate::de::StrictTagged::new::<D::Error>(&value, "kind")?;
        match obj.tag() {
            "constant" => {
                obj.allow(&["c"])?;
                Ok(BoundarySpec::Constant { c: obj.required("c")? })
            }
            "piecewise_constant" => {
                obj.allow(&["breakpoints", "values"])?;
                Ok(BoundarySpec::PiecewiseConstant {
                    breakpoints: obj.required("breakpoints")?,
                    values: obj.required("values")?,
                })
            }
            "piecewise_linear" => {
                obj.allow(&["knots"])?;
                Ok(BoundarySpec::PiecewiseLinear { knots: obj.required("knots")? })
            }
            "polynomial" => {
                obj.allow(&["coefficients"])?;
                Ok(BoundarySpec::Polynomial { coefficients: obj.required("coefficients")? })
            }
            _ => obj.unknown_tag(&[
                "constant",
                "piecewise_constant",
                "piecewise_linear",
                "polynomial",
            ]),
        }
    }
}

impl BoundarySpec {
    /// The identity `t -> t` as a two-knot polyline.
    pub fn identity() -> Self {
        BoundarySpec::PiecewiseLinear { knots: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidBoundary(msg));
        match self {
            BoundarySpec::Constant { c } => {
                if !c.is_finite() {
                    return bad(format!("constant boundary value {c} not finite"));
                }
            }
            BoundarySpec::PiecewiseConstant { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return bad(format!(
                        "{} breakpoints need {} segment values, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        values.len()
                    ));
                }
                if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                    return bad(format!("segment value {v} not finite"));
                }
                for w in breakpoints.windows(2) {
                    if !(w[0] < w[1]) {
                        return bad(format!("breakpoints not strictly increasing at {}", w[1]));
                    }
                }
                if breakpoints.iter().any(|b| !b.is_finite() || *b <= 0.0 || *b >= 1.0) {
                    return bad("breakpoints must lie strictly inside (0, 1)".into());
                }
            }
            BoundarySpec::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return bad("polyline needs at least two knots".into());
                }
                if knots.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
                    return bad("polyline knots must be finite".into());
                }
                for w in knots.windows(2) {
                    if !(w[0].0 < w[1].0) {
                        return bad(format!("knot abscissae not strictly increasing at {}", w[1].0));
                    }
                    if !(w[1].1 - w[0].1).is_finite() {
                        return bad(format!(
                            "knot value span {} to {} overflows",
                            w[0].1, w[1].1
                        ));
                    }
                }
                if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
                    return bad("polyline must span exactly [0, 1]".into());
                }
            }
            BoundarySpec::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return bad("polynomial needs at least one coefficient".into());
                }
                if let Some(c) = coefficients.iter().find(|c| !c.is_finite()) {
                    return bad(format!("polynomial coefficient {c} not finite"));
                }
                // Horner on [0, 1] keeps every intermediate below the sum of
                // magnitudes; half the range leaves room for roundoff.
                let scale: f64 = coefficients.iter().map(|c| c.abs()).sum();
                if !(scale <= f64::MAX / 2.0) {
                    return bad(format!(
                        "polynomial coefficient magnitudes sum to {scale}, past half the float range"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Evaluates at `t` in `[0, 1]` (assumes a validated spec).
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BoundarySpec::Constant { c } => *c,
            BoundarySpec::PiecewiseConstant { breakpoints, values } => {
                let seg = breakpoints.partition_point(|b| *b <= t);
                values[seg]
            }
            BoundarySpec::PiecewiseLinear { knots } => {
                let hi = knots.partition_point(|(kt, _)| *kt <= t).min(knots.len() - 1).max(1);
                let (t0, y0) = knots[hi - 1];
                let (t1, y1) = knots[hi];
                // Clamp away rounding overshoot: the segment hull is part of
                // the contract downstream hull checks rely on.
                (y0 + (t - t0) * (y1 - y0) / (t1 - t0)).clamp(y0.min(y1), y0.max(y1))
            }
            BoundarySpec::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
        }
    }
}

/// Per-component boundary functions.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    components: Vec<BoundarySpec>,
}

impl BoundaryData {
    pub fn new(components: Vec<BoundarySpec>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidBoundary("at least one component required".into()));
        }
        for spec in &components {
            spec.validate()?;
        }
        Ok(BoundaryData { components })
    }

    pub fn constant_all(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![BoundarySpec::Constant { c }; n])
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &BoundarySpec {
        &self.components[i]
    }

    pub fn eval(&self, component: usize, t: f64) -> f64 {
        self.components[component].eval(t)
    }
}
