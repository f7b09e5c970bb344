//! Seeded Monte-Carlo interaction logs under the binary signal detection
//! model, and the exact `Resp(Z)` they should converge to.
//!
//! Randomness comes from a single ChaCha20 stream (`rand_chacha`) seeded
//! with `seed_from_u64`, which is specified bit-for-bit and portable across
//! platforms. Uniforms are `rand`'s 53-bit `[0, 1)` floats. Normal variates
//! use the basic Box–Muller transform, consuming two uniforms per pair and
//! returning the cosine branch first.
//!
//! Per trial the draws are, in order: state, system evidence, human
//! evidence, and (for `softmax_sample` only) the action draw.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::event_log::{EventRecord, State};
use crate::info::JointTable;
use crate::responsibility::{average_components, ACCEPT, REJECT};
use crate::sdt::{logistic, normal_pdf, BinaryModel, Scenario, SystemOutput};
use crate::{Error, Result};

pub const ALERT: &str = "alert";
pub const NO_ALERT: &str = "noalert";
pub const ALERT_COLUMN: &str = "y_alert";

/// How the simulated human turns the combined posterior into an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanPolicy {
    /// Accept iff `EV(accept) > EV(reject)`.
    #[default]
    MaximizeEv,
    /// Sample from the SoftMax probabilities at the scenario temperature.
    SoftmaxSample,
}

impl std::str::FromStr for HumanPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maximize_ev" => Ok(HumanPolicy::MaximizeEv),
            "softmax_sample" => Ok(HumanPolicy::SoftmaxSample),
            other => Err(Error::InvalidArgument(format!(
                "policy must be `maximize_ev` or `softmax_sample`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub n_trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub human_policy: HumanPolicy,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials < 1 {
            return Err(Error::InvalidArgument("n_trials must be >= 1".into()));
        }
        self.scenario.validate()
    }
}

struct NormalStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NormalStream {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps ln finite
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Generates `n_trials` events. Deterministic in `(config, seed)`.
pub fn simulate(config: &SimConfig) -> Result<Vec<EventRecord>> {
    config.validate()?;
    let scenario = &config.scenario;
    let model = BinaryModel::new(scenario)?;
    let mut stream = NormalStream::new(config.seed);
    let mut events = Vec::with_capacity(config.n_trials.min(1 << 24) as usize);
    for trial in 1..=config.n_trials {
        let is_signal = stream.uniform() < scenario.prior_signal;
        let shift = |d: f64| if is_signal { d } else { 0.0 };
        let system_evidence = stream.normal() + shift(scenario.d_prime_system);
        let alert = system_evidence > model.threshold;
        let e = stream.normal() + shift(scenario.d_prime_human);

        let output = if alert {
            SystemOutput::Signal
        } else {
            SystemOutput::Noise
        };
        let p_signal = logistic(model.signal_log_odds(Some(output), Some(e))?);
        let advantage = model.ev_advantage_of_accept(p_signal);
        let accept = match config.human_policy {
            HumanPolicy::MaximizeEv => advantage > 0.0,
            HumanPolicy::SoftmaxSample => {
                stream.uniform() < logistic(advantage / scenario.softmax_temperature)
            }
        };
        let z = if accept { ACCEPT } else { REJECT };
        events.push(EventRecord {
            trial,
            y_values: [(
                ALERT_COLUMN.to_owned(),
                if alert { ALERT } else { NO_ALERT }.to_owned(),
            )]
            .into(),
            z: z.to_owned(),
            e: Some(e),
            state: Some(if is_signal {
                State::Signal
            } else {
                State::Noise
            }),
            x_s: Some(z.to_owned()),
        });
    }
    Ok(events)
}

/// Resolved configuration written next to a simulated log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSidecar {
    #[serde(flatten)]
    pub config: SimConfig,
    pub resolved_beta: f64,
    pub system_threshold: f64,
}

impl SimSidecar {
    pub fn new(config: &SimConfig) -> Result<Self> {
        let model = BinaryModel::new(&config.scenario)?;
        Ok(Self {
            config: config.clone(),
            resolved_beta: model.beta,
            system_threshold: model.threshold,
        })
    }
}

/// Sidecar path for a log: `events.csv` → `events.config.json`.
pub fn sidecar_path(log_path: &Path) -> std::path::PathBuf {
    log_path.with_extension("config.json")
}

pub fn write_sidecar(path: &Path, config: &SimConfig) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &SimSidecar::new(config)?)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Exact `Resp(Z)` under the generative model, with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticResp {
    pub resp_z: f64,
    pub h_z_bits: f64,
    pub h_z_given_y_bits: f64,
    /// `P(alert | signal)`, `P(alert | noise)`
    pub p_alert: [f64; 2],
    /// `P(accept | y, state)` indexed `[alert, noalert][signal, noise]`.
    pub p_accept: [[f64; 2]; 2],
}

/// Absolute tolerance of the quadrature in [`analytic_resp_z`].
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

/// Half-width, in standard deviations, of the integration window around the
/// evidence means; the Gaussian mass outside is below 1e-50.
const TAIL_SD: f64 = 15.0;

/// `H(Z | y_alert) / H(Z)` by integrating the human decision rule against the
/// evidence density for every (alert, state) cell.
pub fn analytic_resp_z(scenario: &Scenario, policy: HumanPolicy) -> Result<AnalyticResp> {
    let model = BinaryModel::new(scenario)?;
    let d_h = scenario.d_prime_human;
    let lo = -TAIL_SD;
    let hi = d_h + TAIL_SD;
    let p_alert = [model.rates.p_tp, model.rates.p_fp];

    let mut p_accept = [[0.0; 2]; 2];
    let mut table = JointTable::new(vec![ALERT_COLUMN], "z");
    for (yi, output) in [SystemOutput::Signal, SystemOutput::Noise]
        .into_iter()
        .enumerate()
    {
        let advantage = |e: f64| -> Result<f64> {
            let p = logistic(model.signal_log_odds(Some(output), Some(e))?);
            Ok(model.ev_advantage_of_accept(p))
        };
        let cut = decision_boundary(&advantage, lo, hi)?;
        for (si, mean) in [d_h, 0.0].into_iter().enumerate() {
            let density = |e: f64| normal_pdf(e - mean);
            let p = match policy {
                HumanPolicy::MaximizeEv => match cut {
                    Boundary::At(c) => integrate(&density, c, hi)?,
                    Boundary::AlwaysAccept => integrate(&density, lo, hi)?,
                    Boundary::NeverAccept => 0.0,
                },
                HumanPolicy::SoftmaxSample => {
                    let t = scenario.softmax_temperature;
                    let f = |e: f64| -> f64 {
                        match advantage(e) {
                            Ok(a) => logistic(a / t) * density(e),
                            Err(_) => f64::NAN,
                        }
                    };
                    let split = match cut {
                        Boundary::At(c) => c,
                        _ => mean,
                    };
                    integrate(&f, lo, split)? + integrate(&f, split, hi)?
                }
            };
            p_accept[yi][si] = p.clamp(0.0, 1.0);
        }
        let y = if yi == 0 { ALERT } else { NO_ALERT };
        for (si, p_state) in [scenario.prior_signal, 1.0 - scenario.prior_signal]
            .into_iter()
            .enumerate()
        {
            let p_y = if yi == 0 {
                p_alert[si]
            } else {
                1.0 - p_alert[si]
            };
            let mass = p_state * p_y;
            table.add(&[y], ACCEPT, mass * p_accept[yi][si])?;
            table.add(&[y], REJECT, mass * (1.0 - p_accept[yi][si]))?;
        }
    }
    let c = average_components(&table)?;
    Ok(AnalyticResp {
        resp_z: c.resp_z,
        h_z_bits: c.h_z_bits,
        h_z_given_y_bits: c.h_z_given_y_bits,
        p_alert,
        p_accept,
    })
}

enum Boundary {
    At(f64),
    AlwaysAccept,
    NeverAccept,
}

/// Root of the EV advantage in `e`, which is nondecreasing since the
/// posterior is monotone in `e` for `d′ > 0`.
fn decision_boundary(advantage: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<Boundary> {
    let (a_lo, a_hi) = (advantage(lo)?, advantage(hi)?);
    if a_lo > 0.0 {
        return Ok(Boundary::AlwaysAccept);
    }
    if a_hi <= 0.0 {
        return Ok(Boundary::NeverAccept);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if advantage(mid)? > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Boundary::At(b))
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 48;

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

/// Adaptive Gauss–Kronrod quadrature to absolute tolerance [`QUADRATURE_TOLERANCE`].
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    integrate_with_tolerance(f, a, b, QUADRATURE_TOLERANCE)
}

pub fn integrate_with_tolerance(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite bounds [{a}, {b}]")));
    }
    if a >= b {
        return Ok(0.0);
    }
    let width = b - a;
    let mut total = 0.0;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((l, r, depth)) = stack.pop() {
        let (value, err) = gk15(f, l, r);
        if !value.is_finite() {
            return Err(Error::Quadrature(format!(
                "integrand not finite on [{l}, {r}]"
            )));
        }
        let local_tol = tol * (r - l) / width;
        if err <= local_tol.max(1e-15 * value.abs()) {
            total += value;
        } else if depth >= MAX_DEPTH {
            return Err(Error::Quadrature(format!(
                "no convergence on [{l}, {r}] after {depth} bisections \
                 (estimate {value:e}, error {err:e}, tolerance {local_tol:e})"
            )));
        } else {
            let m = 0.5 * (l + r);
            stack.push((m, r, depth + 1));
            stack.push((l, m, depth + 1));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::resp_from_log;
    use crate::sdt::tests::worked_example;
    use crate::sdt::{normal_sf, SystemBeta};

    #[test]
    fn zero_trials_rejected() {
        let cfg = SimConfig {
            scenario: worked_example(),
            n_trials: 0,
            seed: 1,
            human_policy: HumanPolicy::MaximizeEv,
        };
        assert!(simulate(&cfg).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SimConfig {
            scenario: worked_example(),
            n_trials: 500,
            seed: 99,
            human_policy: HumanPolicy::SoftmaxSample,
        };
        assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        let other = SimConfig {
            seed: 100,
            ..cfg.clone()
        };
        assert_ne!(simulate(&cfg).unwrap(), simulate(&other).unwrap());
    }

    #[test]
    fn quadrature_integrates_known_functions() {
        let phi = |x: f64| normal_pdf(x);
        let v = integrate(&phi, -15.0, 1.0).unwrap();
        assert!((v - 0.841_344_746_068_542_9).abs() < 1e-12);
        let poly = |x: f64| 3.0 * x * x;
        assert!((integrate(&poly, 0.0, 2.0).unwrap() - 8.0).abs() < 1e-13);
        assert_eq!(integrate(&poly, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_reports_non_convergence() {
        let bad = |x: f64| if x > 0.3 { f64::NAN } else { 1.0 };
        let err = integrate(&bad, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Quadrature(_)));
        let jumpy = |x: f64| (1.0 / x).sin() / x;
        assert!(integrate_with_tolerance(&jumpy, 1e-9, 1.0, 1e-14).is_err());
    }

    /// Closed form: with maximize_ev the human accepts above a cutoff in e,
    /// so each cell probability is a normal tail. Independent of the quadrature.
    fn closed_form_accept(s: &Scenario) -> [[f64; 2]; 2] {
        let m = BinaryModel::new(s).unwrap();
        let k = (s.payoffs.v_tn - s.payoffs.v_fp) / (s.payoffs.v_tp - s.payoffs.v_fn);
        let prior_odds = s.prior_signal / (1.0 - s.prior_signal);
        let d = s.d_prime_human;
        let mut out = [[0.0; 2]; 2];
        for (yi, ratio) in [m.rates.p_tp / m.rates.p_fp, m.rates.p_fn / m.rates.p_tn]
            .into_iter()
            .enumerate()
        {
            let cut = ((k / prior_odds / ratio).ln() + 0.5 * d * d) / d;
            out[yi] = [normal_sf(cut - d), normal_sf(cut)];
        }
        out
    }

    #[test]
    fn analytic_matches_closed_form() {
        let s = worked_example();
        let a = analytic_resp_z(&s, HumanPolicy::MaximizeEv).unwrap();
        let c = closed_form_accept(&s);
        for (got, want) in a.p_accept.iter().flatten().zip(c.iter().flatten()) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        // frozen from an mpmath evaluation of the closed form
        assert!(
            (a.resp_z - 0.422_521_307_601_835_3).abs() < 1e-8,
            "{}",
            a.resp_z
        );
        assert!((a.h_z_bits - 0.701_413_475_237_289_6).abs() < 1e-8);
        assert!((a.p_accept[0][0] - 0.950_013_841_509_816_4).abs() < 1e-9);
        assert!((a.p_accept[1][1] - 0.015_850_841_063_851_29).abs() < 1e-9);
    }

    #[test]
    fn overwhelming_system_gives_zero() {
        let mut s = worked_example();
        s.d_prime_system = 12.0;
        let a = analytic_resp_z(&s, HumanPolicy::MaximizeEv).unwrap();
        assert!(a.resp_z < 1e-9, "{}", a.resp_z);
    }

    #[test]
    fn useless_system_gives_one() {
        let mut s = worked_example();
        s.d_prime_system = 1e-7;
        s.system_beta = SystemBeta::Value(1.0);
        let a = analytic_resp_z(&s, HumanPolicy::MaximizeEv).unwrap();
        assert!(a.h_z_bits > 0.0);
        assert!((a.resp_z - 1.0).abs() < 1e-9, "{}", a.resp_z);
    }

    #[test]
    fn softmax_policy_is_integrable() {
        let s = worked_example();
        let soft = analytic_resp_z(&s, HumanPolicy::SoftmaxSample).unwrap();
        let hard = analytic_resp_z(&s, HumanPolicy::MaximizeEv).unwrap();
        assert!((0.0..=1.0).contains(&soft.resp_z));
        // a noisier human owns more of the outcome uncertainty
        assert!(soft.resp_z > hard.resp_z);
    }

    #[test]
    fn softmax_simulation_agrees_with_quadrature() {
        let mut s = worked_example();
        s.softmax_temperature = 4.0;
        let a = analytic_resp_z(&s, HumanPolicy::SoftmaxSample).unwrap();
        let cfg = SimConfig {
            scenario: s,
            n_trials: 100_000,
            seed: 3,
            human_policy: HumanPolicy::SoftmaxSample,
        };
        let events = simulate(&cfg).unwrap();
        let r = resp_from_log(&events, 0).unwrap();
        assert!(
            (r.resp_z - a.resp_z).abs() < 0.01,
            "{} vs {}",
            r.resp_z,
            a.resp_z
        );
    }

    #[test]
    fn cell_frequencies_match_quadrature() {
        let s = worked_example();
        let a = analytic_resp_z(&s, HumanPolicy::MaximizeEv).unwrap();
        let cfg = SimConfig {
            scenario: s.clone(),
            n_trials: 200_000,
            seed: 2024,
            human_policy: HumanPolicy::MaximizeEv,
        };
        let events = simulate(&cfg).unwrap();
        let n = events.len() as f64;
        let signals = events
            .iter()
            .filter(|e| e.state == Some(State::Signal))
            .count() as f64;
        let se = (s.prior_signal * (1.0 - s.prior_signal) / n).sqrt();
        assert!((signals / n - s.prior_signal).abs() < 3.0 * se);

        for (yi, y) in [ALERT, NO_ALERT].into_iter().enumerate() {
            for (si, st) in [State::Signal, State::Noise].into_iter().enumerate() {
                let cell: Vec<_> = events
                    .iter()
                    .filter(|e| e.state == Some(st) && e.y_values[ALERT_COLUMN] == y)
                    .collect();
                let k = cell.len() as f64;
                let acc = cell.iter().filter(|e| e.z == ACCEPT).count() as f64 / k;
                let p = a.p_accept[yi][si];
                let se = (p * (1.0 - p) / k).sqrt();
                assert!((acc - p).abs() < 3.0 * se, "{y} {st}: {acc} vs {p}");
            }
        }
    }

    #[test]
    fn sidecar_records_resolved_beta() {
        let cfg = SimConfig {
            scenario: worked_example(),
            n_trials: 10,
            seed: 5,
            human_policy: HumanPolicy::MaximizeEv,
        };
        let side = SimSidecar::new(&cfg).unwrap();
        assert!((side.resolved_beta - 8.0 / 3.0).abs() < 1e-14);
        let json = serde_json::to_value(&side).unwrap();
        assert_eq!(json["scenario"]["system_beta"], "optimal");
        assert_eq!(json["human_policy"], "maximize_ev");
        let back: SimSidecar = serde_json::from_value(json).unwrap();
        assert_eq!(back, side);
        assert_eq!(
            sidecar_path(Path::new("out/events.csv")),
            Path::new("out/events.config.json")
        );
    }
}
