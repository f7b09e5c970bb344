//! The three retrospective responsibility measures.
//!
//! * [`resp_average`]: share of outcome uncertainty left unexplained by the
//!   system variables over many interactions, `H(Z | Y) / H(Z)`.
//! * [`resp_information`]: the human's share in forming the posterior used
//!   for a single decision, a ratio of Jensen-Shannon distances.
//! * [`reasonability`]: SoftMax probability of the chosen action relative to
//!   the best action.
//!
//! Only `softmax_temperature = 1` exponentiates raw utilities. Other
//! temperatures rescale utilities first, which matters because reasonability
//! depends on the payoff scale.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::info::{conditional_entropy, entropy_of, js_distance, JointTable, ProbDist};
use crate::sdt::{self, PayoffMatrix, Scenario, SystemOutput, SIGNAL};
use crate::{Error, Result};

pub const ACCEPT: &str = "accept";
pub const REJECT: &str = "reject";

/// Flag set when all three posteriors coincide and `Resp(x_a)` is reported as 0.5.
pub const FLAG_COINCIDENT: &str = "coincident_distributions";

/// Entropy components of the average measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageResp {
    pub resp_z: f64,
    pub h_z_bits: f64,
    pub h_z_given_y_bits: f64,
}

/// `Resp(Z) = H(Z | Y) / H(Z)` from a joint table, plug-in estimate.
pub fn resp_average(t: &JointTable) -> Result<f64> {
    Ok(average_components(t)?.resp_z)
}

/// [`resp_average`] after add-α smoothing of every observed (y, z) combination.
pub fn resp_average_smoothed(t: &JointTable, alpha: f64) -> Result<f64> {
    resp_average(&t.smoothed(alpha)?)
}

/// [`resp_average`] together with `H(Z)` and `H(Z | Y)`.
pub fn average_components(t: &JointTable) -> Result<AverageResp> {
    let h_z = t.outcome_entropy()?;
    if h_z <= 0.0 {
        return Err(Error::DegenerateOutcome);
    }
    let h_z_given_y = conditional_entropy(t)?;
    let total = t.total();
    // Σ_y m_y · (H(Z|y) / H(Z)) / Σ_y m_y, so that groups sharing the
    // marginal's proportions contribute exactly their mass.
    let weighted: f64 = t
        .by_condition()
        .values()
        .map(|masses| masses.iter().sum::<f64>() * (entropy_of(masses) / h_z))
        .sum();
    let resp_z = (weighted / total).clamp(0.0, 1.0);
    Ok(AverageResp {
        resp_z,
        h_z_bits: h_z,
        h_z_given_y_bits: h_z_given_y,
    })
}

/// Result of [`resp_information`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationShare {
    pub resp: f64,
    /// `D(x_a, x_aS)`
    pub d_system: f64,
    /// `D(x_a, x_aH)`
    pub d_human: f64,
    /// Both distances are zero; `resp` is then 0.5 by convention.
    pub coincident: bool,
}

/// `Resp(x_a) = D(x_a, x_aS) / (D(x_a, x_aS) + D(x_a, x_aH))`.
pub fn resp_information(
    x_a: &ProbDist,
    x_a_system: &ProbDist,
    x_a_human: &ProbDist,
) -> Result<InformationShare> {
    let d_system = js_distance(x_a, x_a_system)?;
    let d_human = js_distance(x_a, x_a_human)?;
    let denom = d_system + d_human;
    if denom == 0.0 {
        return Ok(InformationShare {
            resp: 0.5,
            d_system,
            d_human,
            coincident: true,
        });
    }
    Ok(InformationShare {
        resp: d_system / denom,
        d_system,
        d_human,
        coincident: false,
    })
}

/// Named actions with their expected utilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    actions: Vec<String>,
    utilities: Vec<f64>,
}

impl ActionSet {
    pub fn new<S: Into<String>>(entries: Vec<(S, f64)>) -> Result<Self> {
        let (actions, utilities): (Vec<String>, Vec<f64>) =
            entries.into_iter().map(|(a, u)| (a.into(), u)).unzip();
        if actions.len() < 2 {
            return Err(Error::InvalidActionSet(
                "at least two actions are required".into(),
            ));
        }
        for (i, a) in actions.iter().enumerate() {
            if actions[..i].contains(a) {
                return Err(Error::InvalidActionSet(format!("duplicate action `{a}`")));
            }
        }
        if let Some(u) = utilities.iter().find(|u| !u.is_finite()) {
            return Err(Error::InvalidActionSet(format!("non-finite utility {u}")));
        }
        Ok(Self { actions, utilities })
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn utility(&self, action: &str) -> Result<f64> {
        self.actions
            .iter()
            .position(|a| a == action)
            .map(|i| self.utilities[i])
            .ok_or_else(|| Error::UnknownAction(action.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.actions
            .iter()
            .map(String::as_str)
            .zip(self.utilities.iter().copied())
    }

    fn max_utility(&self) -> f64 {
        self.utilities
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_temperature(temperature: f64) -> Result<()> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    Ok(())
}

/// SoftMax choice probabilities `exp(U/T) / Σ exp(U'/T)`, in action order.
pub fn softmax_probs(a: &ActionSet, temperature: f64) -> Result<Vec<(String, f64)>> {
    check_temperature(temperature)?;
    let max = a.max_utility();
    let weights: Vec<f64> = a
        .utilities
        .iter()
        .map(|u| ((u - max) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(a.actions
        .iter()
        .cloned()
        .zip(weights.into_iter().map(|w| w / total))
        .collect())
}

/// `p(chosen) / max p = exp((U(chosen) − U*) / T)`; exactly 1 for every maximizer.
pub fn reasonability(a: &ActionSet, chosen: &str, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    let u = a.utility(chosen)?;
    Ok(((u - a.max_utility()) / temperature).exp())
}

/// Expected values of accepting and rejecting given a `(signal, noise)` posterior.
pub fn expected_values(x_a: &ProbDist, payoffs: &PayoffMatrix) -> Result<ActionSet> {
    if x_a.len() != 2 {
        return Err(Error::InvalidDistribution(format!(
            "expected a binary posterior, got {} categories",
            x_a.len()
        )));
    }
    let p = x_a.prob(SIGNAL).ok_or_else(|| {
        Error::InvalidDistribution(format!("posterior has no `{SIGNAL}` category"))
    })?;
    // written as v_noise + p·(v_signal − v_noise); keeps short decimals exact
    ActionSet::new(vec![
        (ACCEPT, payoffs.v_fp + p * (payoffs.v_tp - payoffs.v_fp)),
        (REJECT, payoffs.v_tn + p * (payoffs.v_fn - payoffs.v_tn)),
    ])
}

/// Human action in the binary application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Accept,
    Reject,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Accept => ACCEPT,
            Action::Reject => REJECT,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            ACCEPT => Ok(Action::Accept),
            REJECT => Ok(Action::Reject),
            other => Err(Error::UnknownAction(other.to_owned())),
        }
    }
}

/// All single-event results for one interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    /// Combined posterior.
    pub x_a: ProbDist,
    pub x_a_system_only: ProbDist,
    pub x_a_human_only: ProbDist,
    /// `D(x_a, x_aS)`
    pub d_system: f64,
    /// `D(x_a, x_aH)`
    pub d_human: f64,
    pub resp_information: f64,
    pub expected_values: BTreeMap<String, f64>,
    pub softmax: BTreeMap<String, f64>,
    pub reasonability: BTreeMap<String, f64>,
    pub chosen: Action,
    pub flags: Vec<String>,
}

impl AnalysisReport {
    pub fn reasonability_of(&self, action: Action) -> f64 {
        self.reasonability[action.as_str()]
    }
}

/// Full single-event analysis for the binary application.
pub fn analyze_event(
    scenario: &Scenario,
    output: SystemOutput,
    e: f64,
    chosen: Action,
) -> Result<AnalysisReport> {
    let x_a_system_only = sdt::posterior_system_only(scenario, output)?;
    let x_a_human_only = sdt::posterior_human_only(scenario, e)?;
    let x_a = sdt::posterior_combined(scenario, output, e)?;
    let share = resp_information(&x_a, &x_a_system_only, &x_a_human_only)?;

    let actions = expected_values(&x_a, &scenario.payoffs)?;
    let t = scenario.softmax_temperature;
    let softmax = softmax_probs(&actions, t)?.into_iter().collect();
    let reasonability = actions
        .actions()
        .iter()
        .map(|a| Ok((a.clone(), reasonability(&actions, a, t)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let expected_values = actions.iter().map(|(a, u)| (a.to_owned(), u)).collect();

    let mut flags = Vec::new();
    if share.coincident {
        flags.push(FLAG_COINCIDENT.to_owned());
    }
    Ok(AnalysisReport {
        x_a,
        x_a_system_only,
        x_a_human_only,
        d_system: share.d_system,
        d_human: share.d_human,
        resp_information: share.resp,
        expected_values,
        softmax,
        reasonability,
        chosen,
        flags,
    })
}
