//! Level-indexed coefficient schedules and the series-based solvability
//! classifier.
//!
//! A [`CoefficientSchedule`] maps a tree level `k` to a number in `[0, 1]`.
//! Four families are supported: constant, geometric, power law (`c/(k+1)^s`),
//! and an explicit list with an optional analytic tail rule evaluated at the
//! absolute level. Every family is nonincreasing beyond a finite prefix,
//! which keeps validation over all levels decidable.
//!
//! Classification is analytic only: verdicts come from the family rule, never
//! from comparing numeric partial sums against a threshold. A finite sum
//! cannot honestly distinguish a convergent series from a slowly divergent
//! one, so schedules without an analytic tail produce `Undetermined`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SystemConfig;

/// Analytic rule for one level-indexed coefficient sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family")]
pub enum ScheduleFamily {
    /// `c` at every level.
    #[serde(rename = "constant")]
    Constant { c: f64 },
    /// `c * ratio^k`, with `ratio` in `(0, 1)`.
    #[serde(rename = "geometric")]
    Geometric { c: f64, ratio: f64 },
    /// `c / (k + 1)^s`, with `s > 0`.
    #[serde(rename = "powerlaw")]
    PowerLaw { c: f64, s: f64 },
    /// Listed values for `k < values.len()`, then the tail rule at the
    /// absolute level `k`. Without a tail the schedule is undefined beyond
    /// the list and cannot be classified.
    #[serde(rename = "explicit")]
    Explicit {
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<Box<ScheduleFamily>>,
    },
}

/// A validated level-indexed sequence with values in `[0, 1]`.
impl<'de> Deserialize<'de> for ScheduleFamily {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let value = serde_json::Value::deserialize(deserializer)?;
        let obj = crate::de::StrictTagged::new::<D::Error>(&value, "family")?;
        match obj.tag() {
            "constant" => {
                obj.allow(&["c"])?;
                Ok(ScheduleFamily::Constant { c: obj.required("c")? })
            }
            "geometric" => {
                obj.allow(&["c", "ratio"])?;
                Ok(ScheduleFamily::Geometric {
                    c: obj.required("c")?,
                    ratio: obj.required("ratio")?,
                })
            }
            "powerlaw" => {
                obj.allow(&["c", "s"])?;
                Ok(ScheduleFamily::PowerLaw { c: obj.required("c")?, s: obj.required("s")? })
            }
            "explicit" => {
                obj.allow(&["values", "tail"])?;
                Ok(ScheduleFamily::Explicit {
                    values: obj.required("values")?,
                    tail: obj.optional::<ScheduleFamily, _>("tail")?.map(Box::new),
                })
            }
            _ => obj.unknown_tag(&["constant", "geometric", "powerlaw", "explicit"]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleFamily", into = "ScheduleFamily")]
pub struct CoefficientSchedule {
    family: ScheduleFamily,
}

impl TryFrom<ScheduleFamily> for CoefficientSchedule {
    type Error = Error;

    fn try_from(family: ScheduleFamily) -> Result<Self> {
        Self::new(family)
    }
}

impl From<CoefficientSchedule> for ScheduleFamily {
    fn from(schedule: CoefficientSchedule) -> ScheduleFamily {
        schedule.family
    }
}

fn in_unit_interval(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

impl CoefficientSchedule {
    pub fn new(family: ScheduleFamily) -> Result<Self> {
        Self::validate_family(&family, true)?;
        Ok(Self { family })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(ScheduleFamily::Constant { c })
    }

    pub fn family(&self) -> &ScheduleFamily {
        &self.family
    }

    fn validate_family(family: &ScheduleFamily, allow_explicit: bool) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSchedule(msg));
        match family {
            ScheduleFamily::Constant { c } => {
                if !in_unit_interval(*c) {
                    return bad(format!("constant value {c} outside [0, 1]"));
                }
            }
            ScheduleFamily::Geometric { c, ratio } => {
                if !in_unit_interval(*c) {
                    return bad(format!("geometric scale {c} outside [0, 1]"));
                }
                if !ratio.is_finite() || *ratio <= 0.0 || *ratio >= 1.0 {
                    return bad(format!("geometric ratio {ratio} outside (0, 1)"));
                }
            }
            ScheduleFamily::PowerLaw { c, s } => {
                if !in_unit_interval(*c) {
                    return bad(format!("power-law scale {c} outside [0, 1]"));
                }
                if !s.is_finite() || *s <= 0.0 {
                    return bad(format!("power-law exponent {s} must be positive"));
                }
            }
            ScheduleFamily::Explicit { values, tail } => {
                if !allow_explicit {
                    return bad("explicit tail inside an explicit schedule".into());
                }
                if values.is_empty() {
                    return bad("explicit schedule with an empty value list".into());
                }
                if let Some(v) = values.iter().find(|v| !in_unit_interval(**v)) {
                    return bad(format!("explicit value {v} outside [0, 1]"));
                }
                if let Some(tail) = tail {
                    Self::validate_family(tail, false)?;
                }
            }
        }
        Ok(())
    }

    /// Schedule value at level `k`.
    ///
    /// Errors with [`Error::MissingTail`] past the end of a tail-less
    /// explicit list.
    pub fn value_at(&self, k: usize) -> Result<f64> {
        family_value_at(&self.family, k)
    }

    /// Supremum over all levels. Exact: every family is nonincreasing
    /// beyond the explicit prefix.
    pub fn sup_bound(&self) -> f64 {
        match &self.family {
            ScheduleFamily::Constant { c }
            | ScheduleFamily::Geometric { c, .. }
            | ScheduleFamily::PowerLaw { c, .. } => *c,
            ScheduleFamily::Explicit { values, tail } => {
                let head = values.iter().cloned().fold(0.0f64, f64::max);
                let tail_sup = tail.as_ref().map_or(0.0, |t| match t.as_ref() {
                    ScheduleFamily::Constant { c }
                    | ScheduleFamily::Geometric { c, .. }
                    | ScheduleFamily::PowerLaw { c, .. } => *c,
                    ScheduleFamily::Explicit { .. } => unreachable!("rejected at construction"),
                });
                head.max(tail_sup)
            }
        }
    }

    /// Level from which the schedule is guaranteed nonincreasing.
    pub fn monotone_horizon(&self) -> usize {
        match &self.family {
            ScheduleFamily::Explicit { values, .. } => values.len(),
            _ => 0,
        }
    }

    /// True when every level provably yields exactly zero.
    pub fn is_identically_zero(&self) -> bool {
        match &self.family {
            ScheduleFamily::Constant { c }
            | ScheduleFamily::Geometric { c, .. }
            | ScheduleFamily::PowerLaw { c, .. } => *c == 0.0,
            ScheduleFamily::Explicit { values, tail } => {
                values.iter().all(|v| *v == 0.0)
                    && tail.as_ref().is_some_and(|t| match t.as_ref() {
                        ScheduleFamily::Constant { c }
                        | ScheduleFamily::Geometric { c, .. }
                        | ScheduleFamily::PowerLaw { c, .. } => *c == 0.0,
                        ScheduleFamily::Explicit { .. } => false,
                    })
            }
        }
    }
}

fn family_value_at(family: &ScheduleFamily, k: usize) -> Result<f64> {
    Ok(match family {
        ScheduleFamily::Constant { c } => *c,
        ScheduleFamily::Geometric { c, ratio } => match i32::try_from(k) {
            Ok(k) => c * ratio.powi(k),
            // ratio is in (0, 1), so past i32 range the value has long
            // since underflowed to zero; `k as i32` would wrap instead.
            Err(_) => 0.0,
        },
        ScheduleFamily::PowerLaw { c, s } => c / (k as f64 + 1.0).powf(*s),
        ScheduleFamily::Explicit { values, tail } => match values.get(k) {
            Some(v) => *v,
            None => match tail {
                Some(tail) => family_value_at(tail, k)?,
                None => return Err(Error::MissingTail(k)),
            },
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SeriesStatus {
    Converges,
    Diverges,
    Undetermined,
}

/// What a verdict rests on. Numeric partial sums alone never decide
/// convergence, so a `NumericOnly` verdict is always `Undetermined`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum VerdictBasis {
    Analytic { rule: String },
    NumericOnly,
}

/// Classification of one condition series, with its partial sums up to the
/// requested truncation for reporting.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesVerdict {
    pub status: SeriesStatus,
    pub basis: VerdictBasis,
    /// `(K, S_K)` pairs; nondecreasing in `K` for nonnegative terms.
    pub partial_sums: Vec<(usize, f64)>,
}

impl SeriesVerdict {
    fn analytic(status: SeriesStatus, rule: impl Into<String>) -> Self {
        SeriesVerdict {
            status,
            basis: VerdictBasis::Analytic { rule: rule.into() },
            partial_sums: Vec::new(),
        }
    }

    fn numeric_only() -> Self {
        SeriesVerdict {
            status: SeriesStatus::Undetermined,
            basis: VerdictBasis::NumericOnly,
            partial_sums: Vec::new(),
        }
    }
}

/// Classifies `sum_k value_at(k)` for `k = 0..=K` and reports the partial
/// sums over that range.
pub fn coupling_sum_series(schedule: &CoefficientSchedule, truncation: usize) -> SeriesVerdict {
    let mut verdict = classify_plain_sum(&schedule.family);
    let mut acc = 0.0;
    for k in 0..=truncation {
        match schedule.value_at(k) {
            Ok(v) => acc += v,
            Err(_) => break,
        }
        verdict.partial_sums.push((k, acc));
    }
    verdict
}

fn classify_plain_sum(family: &ScheduleFamily) -> SeriesVerdict {
    use SeriesStatus::*;
    match family {
        ScheduleFamily::Constant { c } => {
            if *c == 0.0 {
                SeriesVerdict::analytic(Converges, "all terms are zero")
            } else {
                SeriesVerdict::analytic(Diverges, format!("constant positive term {c}"))
            }
        }
        ScheduleFamily::Geometric { ratio, .. } => {
            SeriesVerdict::analytic(Converges, format!("geometric with ratio {ratio} < 1"))
        }
        ScheduleFamily::PowerLaw { c, s } => {
            if *c == 0.0 {
                SeriesVerdict::analytic(Converges, "all terms are zero")
            } else if *s > 1.0 {
                SeriesVerdict::analytic(Converges, format!("power law with exponent {s} > 1"))
            } else {
                SeriesVerdict::analytic(Diverges, format!("power law with exponent {s} <= 1"))
            }
        }
        ScheduleFamily::Explicit { tail, .. } => match tail {
            // A finite prefix never changes convergence.
            Some(tail) => {
                let mut v = classify_plain_sum(tail);
                if let VerdictBasis::Analytic { rule } = &mut v.basis {
                    *rule = format!("tail rule: {rule}");
                }
                v
            }
            None => SeriesVerdict::numeric_only(),
        },
    }
}

/// Classifies `sum_{k>=1} prod_{j=1..k} b_j / (1 - b_j)` for a β-schedule
/// and reports the partial sums for `k = 1..=K`, products accumulated in
/// log space.
///
/// Errors with [`Error::BetaOne`] when some `b_j = 1` makes a factor
/// undefined (checked over `j <= K` and over the tail rule's bound).
pub fn beta_ratio_series(schedule: &CoefficientSchedule, truncation: usize) -> Result<SeriesVerdict> {
    // The j = 0 value never enters the products below.
    for j in 1..=truncation {
        match schedule.value_at(j) {
            Ok(v) if v >= 1.0 => return Err(Error::BetaOne(j)),
            _ => {}
        }
    }
    if let ScheduleFamily::Explicit { values, tail: Some(tail) } = &schedule.family {
        let tail_sup = match tail.as_ref() {
            ScheduleFamily::Constant { c }
            | ScheduleFamily::Geometric { c, .. }
            | ScheduleFamily::PowerLaw { c, .. } => *c,
            ScheduleFamily::Explicit { .. } => unreachable!("rejected at construction"),
        };
        if tail_sup >= 1.0 {
            if let ScheduleFamily::Constant { .. } = tail.as_ref() {
                return Err(Error::BetaOne(values.len()));
            }
        }
    }

    let mut verdict = classify_ratio_sum(&schedule.family)?;
    let mut log_term = 0.0f64;
    let mut acc = 0.0f64;
    for k in 1..=truncation {
        let b = match schedule.value_at(k) {
            Ok(b) => b,
            Err(_) => break,
        };
        // b = 0 drives the log to -inf and every later term to exactly 0.
        log_term += (b / (1.0 - b)).ln();
        acc += log_term.exp();
        verdict.partial_sums.push((k, acc));
    }
    Ok(verdict)
}

fn classify_ratio_sum(family: &ScheduleFamily) -> Result<SeriesVerdict> {
    use SeriesStatus::*;
    Ok(match family {
        ScheduleFamily::Constant { c } => {
            if *c >= 1.0 {
                return Err(Error::BetaOne(1));
            }
            let r = c / (1.0 - c);
            if r < 1.0 {
                SeriesVerdict::analytic(Converges, format!("geometric term ratio {r} < 1"))
            } else {
                SeriesVerdict::analytic(Diverges, format!("term ratio {r} >= 1, terms do not vanish"))
            }
        }
        // b_k -> 0, so consecutive term ratios b_k/(1-b_k) -> 0.
        ScheduleFamily::Geometric { .. } | ScheduleFamily::PowerLaw { .. } => {
            SeriesVerdict::analytic(Converges, "factors tend to zero")
        }
        ScheduleFamily::Explicit { values, tail } => {
            // A zero anywhere past the root annihilates every later product.
            if let Some(j) = values.iter().enumerate().skip(1).find(|(_, v)| **v == 0.0) {
                return Ok(SeriesVerdict::analytic(
                    Converges,
                    format!("zero factor at level {} truncates the series", j.0),
                ));
            }
            match tail {
                Some(tail) => {
                    let mut v = classify_ratio_sum(tail)?;
                    if let VerdictBasis::Analytic { rule } = &mut v.basis {
                        *rule = format!("tail rule: {rule}");
                    }
                    Ok(v)
                }
                None => Ok(SeriesVerdict::numeric_only()),
            }?
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Solvability {
    Solvable,
    Unsolvable,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionVerdict {
    /// Which condition this series checks, e.g. `coupling[0]` or `beta[1]`.
    pub label: String,
    pub verdict: SeriesVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolvabilityReport {
    pub conditions: Vec<ConditionVerdict>,
    pub overall: Solvability,
}

/// Runs the full existence test: per component `i`, the summed coupling
/// series `sum_k sum_j p_{i,j,k}` must converge and the β-ratio series must
/// converge. All converge → `Solvable`; any diverges → `Unsolvable`;
/// otherwise `Undetermined`.
pub fn classify_solvability(config: &SystemConfig, truncation: usize) -> Result<SolvabilityReport> {
    let n = config.components.len();
    let mut conditions = Vec::with_capacity(2 * n);
    for i in 0..n {
        let per_j: Vec<SeriesVerdict> = (0..n)
            .map(|j| coupling_sum_series(&config.coupling[i][j], truncation))
            .collect();
        conditions.push(ConditionVerdict {
            label: format!("coupling[{i}] (sum over receiving components)"),
            verdict: combine_row(per_j),
        });
    }
    for (i, comp) in config.components.iter().enumerate() {
        conditions.push(ConditionVerdict {
            label: format!("beta[{i}] ratio products"),
            verdict: beta_ratio_series(&comp.beta, truncation)?,
        });
    }
    let overall = if conditions.iter().any(|c| c.verdict.status == SeriesStatus::Diverges) {
        Solvability::Unsolvable
    } else if conditions.iter().all(|c| c.verdict.status == SeriesStatus::Converges) {
        Solvability::Solvable
    } else {
        Solvability::Undetermined
    };
    Ok(SolvabilityReport { conditions, overall })
}

/// A finite sum of nonnegative series converges iff every summand does;
/// partial sums add pointwise.
fn combine_row(parts: Vec<SeriesVerdict>) -> SeriesVerdict {
    use SeriesStatus::*;
    let status = if parts.iter().any(|p| p.status == Diverges) {
        Diverges
    } else if parts.iter().all(|p| p.status == Converges) {
        Converges
    } else {
        Undetermined
    };
    let basis = match status {
        Undetermined => VerdictBasis::NumericOnly,
        Diverges => {
            let (j, part) = parts
                .iter()
                .enumerate()
                .find(|(_, p)| p.status == Diverges)
                .expect("a divergent part exists");
            let rule = match &part.basis {
                VerdictBasis::Analytic { rule } => rule.clone(),
                VerdictBasis::NumericOnly => unreachable!("divergence is always analytic"),
            };
            VerdictBasis::Analytic { rule: format!("summand {j}: {rule}") }
        }
        Converges => VerdictBasis::Analytic { rule: "every summand converges".into() },
    };
    // Pointwise sum over the shortest common range.
    let len = parts.iter().map(|p| p.partial_sums.len()).min().unwrap_or(0);
    let partial_sums = (0..len)
        .map(|idx| {
            let k = parts[0].partial_sums[idx].0;
            (k, parts.iter().map(|p| p.partial_sums[idx].1).sum())
        })
        .collect();
    SeriesVerdict { status, basis, partial_sums }
}
