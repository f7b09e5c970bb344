//! Equal-variance Gaussian signal detection model of a human working with a
//! binary alert system.
//!
//! Noise evidence is `N(0, 1)` and signal evidence is `N(d′, 1)`, for both
//! the human and the system; the observed value `e` is in these units. The
//! system alerts when its own evidence exceeds the criterion implied by
//! `β_System`. The two evidence channels are conditionally independent
//! given the true state.
//!
//! The normal CDF is `Φ(x) = erfc(−x/√2) / 2`, using the `erfc` of the
//! `libm` crate (a port of the FreeBSD msun rational approximations, error
//! below 1 ulp over the real line). Upper tails are computed directly as
//! `erfc(x/√2) / 2` so that small probabilities keep their relative precision.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::info::ProbDist;
use crate::{Error, Result};

pub const SIGNAL: &str = "signal";
pub const NOISE: &str = "noise";

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail `1 − Φ(x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Evidence density at `e`: mean 0 for noise, mean `d_prime` for signal, unit variance.
pub fn gaussian_density(e: f64, is_signal: bool, d_prime: f64) -> f64 {
    let mean = if is_signal { d_prime } else { 0.0 };
    normal_pdf(e - mean)
}

/// Output of the binary classification system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemOutput {
    Signal,
    Noise,
}

impl SystemOutput {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemOutput::Signal => SIGNAL,
            SystemOutput::Noise => NOISE,
        }
    }
}

impl fmt::Display for SystemOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemOutput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            SIGNAL => Ok(SystemOutput::Signal),
            NOISE => Ok(SystemOutput::Noise),
            other => Err(Error::InvalidArgument(format!(
                "expected `signal` or `noise`, got `{other}`"
            ))),
        }
    }
}

/// Payoffs for true/false positives and negatives, in arbitrary utility units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffMatrix {
    pub v_tp: f64,
    pub v_tn: f64,
    pub v_fp: f64,
    pub v_fn: f64,
}

impl PayoffMatrix {
    /// Argument order is `v_tp, v_tn, v_fp, v_fn`.
    pub fn new(v_tp: f64, v_tn: f64, v_fp: f64, v_fn: f64) -> Result<Self> {
        let p = Self {
            v_tp,
            v_tn,
            v_fp,
            v_fn,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.v_tp, self.v_tn, self.v_fp, self.v_fn];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPayoffs("payoffs must be finite".into()));
        }
        if self.v_tp <= self.v_fn {
            return Err(Error::InvalidPayoffs(format!(
                "v_tp ({}) must exceed v_fn ({})",
                self.v_tp, self.v_fn
            )));
        }
        if self.v_tn <= self.v_fp {
            return Err(Error::InvalidPayoffs(format!(
                "v_tn ({}) must exceed v_fp ({})",
                self.v_tn, self.v_fp
            )));
        }
        Ok(())
    }
}

/// System response criterion: fixed likelihood ratio, or derived from the
/// prior and payoffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemBeta {
    Optimal,
    Value(f64),
}

impl Serialize for SystemBeta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SystemBeta::Optimal => s.serialize_str("optimal"),
            SystemBeta::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for SystemBeta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(SystemBeta::Value(v)),
            Raw::Str(s) if s == "optimal" => Ok(SystemBeta::Optimal),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "system_beta must be a number or \"optimal\", got \"{s}\""
            ))),
        }
    }
}

impl FromStr for SystemBeta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "optimal" {
            return Ok(SystemBeta::Optimal);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("invalid beta `{s}`")))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be > 0, got {v}")));
        }
        Ok(SystemBeta::Value(v))
    }
}

fn default_temperature() -> f64 {
    1.0
}

/// Environment, human and system parameters of the binary application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub prior_signal: f64,
    pub d_prime_human: f64,
    pub d_prime_system: f64,
    pub system_beta: SystemBeta,
    pub payoffs: PayoffMatrix,
    #[serde(default = "default_temperature")]
    pub softmax_temperature: f64,
}

impl Scenario {
    pub fn new(
        prior_signal: f64,
        d_prime_human: f64,
        d_prime_system: f64,
        system_beta: SystemBeta,
        payoffs: PayoffMatrix,
    ) -> Result<Self> {
        let s = Self {
            prior_signal,
            d_prime_human,
            d_prime_system,
            system_beta,
            payoffs,
            softmax_temperature: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    /// Parses and validates a scenario JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prior_signal > 0.0 && self.prior_signal < 1.0) {
            return Err(Error::InvalidScenario(format!(
                "prior_signal must be in (0, 1), got {}",
                self.prior_signal
            )));
        }
        for (name, d) in [
            ("d_prime_human", self.d_prime_human),
            ("d_prime_system", self.d_prime_system),
        ] {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "{name} must be finite and > 0, got {d}"
                )));
            }
        }
        if let SystemBeta::Value(b) = self.system_beta {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "system_beta must be > 0, got {b}"
                )));
            }
        }
        if !(self.softmax_temperature.is_finite() && self.softmax_temperature > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "softmax_temperature must be > 0, got {}",
                self.softmax_temperature
            )));
        }
        self.payoffs.validate()
    }

    /// Copy with different detection sensitivities.
    pub fn with_sensitivities(&self, d_prime_human: f64, d_prime_system: f64) -> Result<Self> {
        let s = Self {
            d_prime_human,
            d_prime_system,
            ..self.clone()
        };
        s.validate()?;
        Ok(s)
    }

    /// Numeric `β_System`, resolving `"optimal"` against the prior and payoffs.
    pub fn resolved_beta(&self) -> Result<f64> {
        match self.system_beta {
            SystemBeta::Value(b) => Ok(b),
            SystemBeta::Optimal => optimal_beta(self.prior_signal, &self.payoffs),
        }
    }

    /// System criterion on its evidence axis.
    pub fn system_threshold(&self) -> Result<f64> {
        beta_to_threshold(self.resolved_beta()?, self.d_prime_system)
    }

    /// Expected confusion rates of the system.
    pub fn system_rates(&self) -> Result<ConfusionRates> {
        confusion_rates(self.d_prime_system, self.system_threshold()?)
    }

    fn prior_log_odds(&self) -> f64 {
        (self.prior_signal / (1.0 - self.prior_signal)).ln()
    }
}

/// Expected rates of a binary detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRates {
    pub p_tp: f64,
    pub p_fn: f64,
    pub p_fp: f64,
    pub p_tn: f64,
}

impl ConfusionRates {
    /// `(P(output | signal), P(output | noise))`.
    pub fn likelihoods(&self, output: SystemOutput) -> (f64, f64) {
        match output {
            SystemOutput::Signal => (self.p_tp, self.p_fp),
            SystemOutput::Noise => (self.p_fn, self.p_tn),
        }
    }
}

/// Payoff-maximizing likelihood-ratio criterion
/// `((1 − P_s)/P_s) · ((V_TN − V_FP)/(V_TP − V_FN))`.
pub fn optimal_beta(prior_signal: f64, payoffs: &PayoffMatrix) -> Result<f64> {
    if !(prior_signal > 0.0 && prior_signal < 1.0) {
        return Err(Error::InvalidScenario(format!(
            "prior_signal must be in (0, 1), got {prior_signal}"
        )));
    }
    payoffs.validate()?;
    let odds_noise = (1.0 - prior_signal) / prior_signal;
    Ok(odds_noise * (payoffs.v_tn - payoffs.v_fp) / (payoffs.v_tp - payoffs.v_fn))
}

/// Evidence value where `f_S(x)/f_N(x) = beta`: `ln(beta)/d′ + d′/2`.
pub fn beta_to_threshold(beta: f64, d_prime: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be > 0, got {beta}"
        )));
    }
    check_d_prime(d_prime)?;
    Ok(beta.ln() / d_prime + d_prime / 2.0)
}

/// Rates of a detector with sensitivity `d_prime` alerting above `threshold`.
pub fn confusion_rates(d_prime: f64, threshold: f64) -> Result<ConfusionRates> {
    check_d_prime(d_prime)?;
    if threshold.is_nan() {
        return Err(Error::InvalidArgument("threshold is NaN".into()));
    }
    Ok(ConfusionRates {
        p_tp: normal_sf(threshold - d_prime),
        p_fn: normal_cdf(threshold - d_prime),
        p_fp: normal_sf(threshold),
        p_tn: normal_cdf(threshold),
    })
}

fn check_d_prime(d_prime: f64) -> Result<()> {
    if !(d_prime.is_finite() && d_prime > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "d' must be finite and > 0, got {d_prime}"
        )));
    }
    Ok(())
}

/// `ln(f_S(e)/f_N(e)) = d′e − d′²/2`.
pub fn evidence_log_likelihood_ratio(d_prime: f64, e: f64) -> f64 {
    d_prime * e - 0.5 * d_prime * d_prime
}

/// A validated scenario with its system criterion and rates resolved.
///
/// Posteriors are evaluated as log-odds, `ln(P_s/(1 − P_s))` plus one
/// log-likelihood ratio per evidence source, which is Bayes' rule with the
/// densities and rates divided through. This keeps extreme observations
/// from underflowing both numerator and denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryModel {
    pub prior_signal: f64,
    pub d_prime_human: f64,
    pub beta: f64,
    pub threshold: f64,
    pub rates: ConfusionRates,
    pub payoffs: PayoffMatrix,
    prior_log_odds: f64,
}

impl BinaryModel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let beta = scenario.resolved_beta()?;
        let threshold = beta_to_threshold(beta, scenario.d_prime_system)?;
        Ok(Self {
            prior_signal: scenario.prior_signal,
            d_prime_human: scenario.d_prime_human,
            beta,
            threshold,
            rates: confusion_rates(scenario.d_prime_system, threshold)?,
            payoffs: scenario.payoffs,
            prior_log_odds: scenario.prior_log_odds(),
        })
    }

    /// `ln(P(output | signal) / P(output | noise))`.
    pub fn system_log_likelihood_ratio(&self, output: SystemOutput) -> Result<f64> {
        let (given_signal, given_noise) = self.rates.likelihoods(output);
        if given_signal == 0.0 && given_noise == 0.0 {
            return Err(Error::ZeroDenominator(
                "system output has zero probability under both states",
            ));
        }
        Ok(given_signal.ln() - given_noise.ln())
    }

    /// Posterior log-odds of signal given any subset of the two evidence sources.
    pub fn signal_log_odds(&self, output: Option<SystemOutput>, e: Option<f64>) -> Result<f64> {
        let mut lo = self.prior_log_odds;
        if let Some(out) = output {
            lo += self.system_log_likelihood_ratio(out)?;
        }
        if let Some(e) = e {
            check_observation(e)?;
            lo += evidence_log_likelihood_ratio(self.d_prime_human, e);
        }
        if lo.is_nan() {
            return Err(Error::ZeroDenominator("posterior odds are undefined"));
        }
        Ok(lo)
    }

    /// Posterior `(signal, noise)` given any subset of the evidence sources.
    pub fn posterior(&self, output: Option<SystemOutput>, e: Option<f64>) -> Result<ProbDist> {
        let lo = self.signal_log_odds(output, e)?;
        ProbDist::new(vec![SIGNAL, NOISE], vec![logistic(lo), logistic(-lo)])
    }

    /// `EV(accept) − EV(reject)` at posterior signal probability `p`.
    pub fn ev_advantage_of_accept(&self, p: f64) -> f64 {
        let v = &self.payoffs;
        p * (v.v_tp - v.v_fn) - (1.0 - p) * (v.v_tn - v.v_fp)
    }
}

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let ex = x.exp();
        ex / (1.0 + ex)
    }
}

/// Posterior over `(signal, noise)` using only the system output.
pub fn posterior_system_only(scenario: &Scenario, output: SystemOutput) -> Result<ProbDist> {
    BinaryModel::new(scenario)?.posterior(Some(output), None)
}

/// Posterior over `(signal, noise)` using only the human's observed value `e`.
pub fn posterior_human_only(scenario: &Scenario, e: f64) -> Result<ProbDist> {
    BinaryModel::new(scenario)?.posterior(None, Some(e))
}

/// Posterior over `(signal, noise)` combining the system output and `e`.
pub fn posterior_combined(scenario: &Scenario, output: SystemOutput, e: f64) -> Result<ProbDist> {
    BinaryModel::new(scenario)?.posterior(Some(output), Some(e))
}

fn check_observation(e: f64) -> Result<()> {
    if !e.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "observed value must be finite, got {e}"
        )));
    }
    Ok(())
}
