//! Discrete information-theoretic primitives, all in bits.
//!
//! Zero handling follows the limit conventions: `0 · log 0 = 0`, a category
//! where both distributions vanish contributes nothing to a divergence, and
//! a category where only the first argument of `KLD(P ‖ M)` vanishes also
//! contributes nothing. No epsilon smoothing is applied anywhere.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on `Σ p = 1` accepted by [`ProbDist::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A discrete probability distribution over named categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProbDist")]
pub struct ProbDist {
    labels: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbDist {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<RawProbDist> for ProbDist {
    type Error = Error;

    fn try_from(raw: RawProbDist) -> Result<Self> {
        ProbDist::new(raw.labels, raw.probs)
    }
}

impl ProbDist {
    /// Validates and wraps `probs`. Inputs are never renormalized here; use
    /// [`ProbDist::normalized`] for that.
    pub fn new<S: Into<String>>(labels: Vec<S>, probs: Vec<f64>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} labels but {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(
                "at least two categories are required".into(),
            ));
        }
        for (label, &p) in labels.iter().zip(&probs) {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!(
                    "probability of `{label}` is {p}, outside [0, 1]"
                )));
            }
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidDistribution(format!("duplicate label `{l}`")));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self { labels, probs })
    }

    /// Builds a distribution from nonnegative weights by dividing by their sum.
    pub fn normalized<S: Into<String>>(labels: Vec<S>, weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(labels, weights.into_iter().map(|w| w / total).collect())
    }

    /// Two-category distribution `(p, 1 − p)`.
    pub fn binary(first: &str, second: &str, p: f64) -> Result<Self> {
        Self::new(vec![first, second], vec![p, 1.0 - p])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.probs[i])
    }

    fn check_same_labels(&self, other: &ProbDist) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::LabelMismatch {
                left: self.labels.clone(),
                right: other.labels.clone(),
            });
        }
        Ok(())
    }
}

/// Shannon entropy `−Σ p log₂ p`.
pub fn entropy(d: &ProbDist) -> f64 {
    entropy_of(&d.probs)
}

/// Entropy of raw nonnegative masses, normalized by their sum.
pub(crate) fn entropy_of(masses: &[f64]) -> f64 {
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let h = masses
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| {
            let p = m / total;
            -p * p.log2()
        })
        .sum::<f64>();
    h.max(0.0)
}

/// Kullback-Leibler divergence `Σ r log₂(r / s)`.
pub fn kld(r: &ProbDist, s: &ProbDist) -> Result<f64> {
    r.check_same_labels(s)?;
    let mut total = 0.0;
    for ((label, &rp), &sp) in r.labels.iter().zip(&r.probs).zip(&s.probs) {
        if rp == 0.0 {
            continue;
        }
        if sp == 0.0 {
            return Err(Error::KldUndefined {
                label: label.clone(),
                r: rp,
            });
        }
        total += rp * (rp / sp).log2();
    }
    Ok(total.max(0.0))
}

/// Jensen-Shannon divergence against the midpoint `M = (P + Q) / 2`, in `[0, 1]`.
///
/// Each category contributes `m/2 · g(r) / ln 2` with `m = (p + q)/2`,
/// `r = (p − q)/(p + q)` and `g(r) = (1 + r) ln(1 + r) + (1 − r) ln(1 − r)`.
/// This is algebraically the two-KLD definition; `g` is evaluated by its
/// power series near `r = 0` so the result keeps full relative precision
/// when `P ≈ Q`.
pub fn jsd(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    p.check_same_labels(q)?;
    Ok(jsd_of(&p.probs, &q.probs))
}

pub(crate) fn jsd_of(p: &[f64], q: &[f64]) -> f64 {
    let total: f64 = p
        .iter()
        .zip(q)
        .filter(|(a, b)| **a + **b > 0.0)
        .map(|(&a, &b)| {
            let sum = a + b;
            let r = (a - b) / sum;
            0.25 * sum * jsd_kernel(r)
        })
        .sum();
    (total / LN_2).clamp(0.0, 1.0)
}

/// `(1 + r) ln(1 + r) + (1 − r) ln(1 − r)` on `[−1, 1]`, with `0 ln 0 = 0`.
fn jsd_kernel(r: f64) -> f64 {
    let r = r.clamp(-1.0, 1.0);
    if r.abs() < 0.5 {
        // Σ_{k≥1} r^{2k} / (k (2k − 1))
        let r2 = r * r;
        let mut term = r2;
        let mut sum = 0.0;
        let mut k = 1.0;
        while term > 1e-18 * sum || k == 1.0 {
            sum += term / (k * (2.0 * k - 1.0));
            term *= r2;
            k += 1.0;
        }
        sum
    } else {
        let xlogx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
        xlogx(1.0 + r) + xlogx(1.0 - r)
    }
}

/// Jensen-Shannon distance `√JSD`, a metric bounded in `[0, 1]`.
pub fn js_distance(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    Ok(jsd(p, q)?.sqrt())
}

/// Empirical joint table of condition variables and an outcome variable.
///
/// Cells map `(condition values, outcome value)` to a nonnegative count or
/// probability mass. Masses need not be normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    condition_vars: Vec<String>,
    outcome_var: String,
    cells: BTreeMap<(Vec<String>, String), f64>,
}

impl JointTable {
    pub fn new<S: Into<String>>(condition_vars: Vec<S>, outcome_var: impl Into<String>) -> Self {
        Self {
            condition_vars: condition_vars.into_iter().map(Into::into).collect(),
            outcome_var: outcome_var.into(),
            cells: BTreeMap::new(),
        }
    }

    /// Adds `mass` to the cell at `(condition, outcome)`.
    pub fn add<S: AsRef<str>>(&mut self, condition: &[S], outcome: &str, mass: f64) -> Result<()> {
        if condition.len() != self.condition_vars.len() {
            return Err(Error::InvalidJointTable(format!(
                "cell has {} condition values, table has {} condition variables",
                condition.len(),
                self.condition_vars.len()
            )));
        }
        if !mass.is_finite() || mass < 0.0 {
            return Err(Error::InvalidJointTable(format!(
                "invalid cell mass {mass}"
            )));
        }
        let key = (
            condition.iter().map(|s| s.as_ref().to_owned()).collect(),
            outcome.to_owned(),
        );
        *self.cells.entry(key).or_insert(0.0) += mass;
        Ok(())
    }

    /// Convenience constructor from a list of cells.
    pub fn from_cells<S: Into<String>>(
        condition_vars: Vec<S>,
        outcome_var: &str,
        cells: &[(&[&str], &str, f64)],
    ) -> Result<Self> {
        let mut t = Self::new(condition_vars, outcome_var);
        for (cond, out, mass) in cells {
            t.add(cond, out, *mass)?;
        }
        Ok(t)
    }

    pub fn condition_vars(&self) -> &[String] {
        &self.condition_vars
    }

    pub fn outcome_var(&self) -> &str {
        &self.outcome_var
    }

    pub fn cells(&self) -> &BTreeMap<(Vec<String>, String), f64> {
        &self.cells
    }

    pub fn total(&self) -> f64 {
        self.cells.values().sum()
    }

    /// Mass of each outcome value, summed over conditions.
    pub fn outcome_marginal(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        for ((_, z), &mass) in &self.cells {
            *m.entry(z.clone()).or_insert(0.0) += mass;
        }
        m
    }

    /// Outcome masses grouped by condition tuple.
    pub fn by_condition(&self) -> BTreeMap<&[String], Vec<f64>> {
        let mut groups: BTreeMap<&[String], Vec<f64>> = BTreeMap::new();
        for ((y, _), &mass) in &self.cells {
            groups.entry(y.as_slice()).or_default().push(mass);
        }
        groups
    }

    /// Add-α smoothed copy over every observed condition tuple × observed outcome value.
    pub fn smoothed(&self, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "smoothing alpha must be >= 0, got {alpha}"
            )));
        }
        let mut out = self.clone();
        if alpha == 0.0 {
            return Ok(out);
        }
        let conditions: Vec<Vec<String>> = self.by_condition().keys().map(|k| k.to_vec()).collect();
        let outcomes: Vec<String> = self.outcome_marginal().into_keys().collect();
        for y in &conditions {
            for z in &outcomes {
                out.add(y, z, alpha)?;
            }
        }
        Ok(out)
    }

    fn check_nonempty(&self) -> Result<f64> {
        let total = self.total();
        if self.cells.is_empty() || total <= 0.0 {
            return Err(Error::EmptyJointTable);
        }
        Ok(total)
    }

    /// Entropy of the outcome marginal, in bits.
    pub fn outcome_entropy(&self) -> Result<f64> {
        self.check_nonempty()?;
        let m: Vec<f64> = self.outcome_marginal().into_values().collect();
        Ok(entropy_of(&m))
    }
}

/// `H(Z | Y) = Σ_y p(y) H(Z | Y = y)` in bits.
pub fn conditional_entropy(t: &JointTable) -> Result<f64> {
    let total = t.check_nonempty()?;
    let h = t
        .by_condition()
        .values()
        .map(|masses| {
            let group: f64 = masses.iter().sum();
            (group / total) * entropy_of(masses)
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}
