//! `retroresp` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or domain error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use retroresp::event_log::{self, LogReport};
use retroresp::responsibility::{analyze_event, Action, AnalysisReport};
use retroresp::sdt::{self, PayoffMatrix, Scenario, SystemBeta, SystemOutput, NOISE, SIGNAL};
use retroresp::simulator::{self, HumanPolicy, SimConfig};
use retroresp::sweep::{self, AxisRange, GridFormat, HeatmapMetric, SweepSpec};

#[derive(Parser, Debug)]
#[command(
    name = "retroresp",
    version,
    about = "Retrospective human responsibility measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze a single event: posteriors, distances, Resp(x_a), reasonability.
    Event(EventArgs),
    /// Estimate Resp(Z) from an event log.
    Log(LogArgs),
    /// Evaluate Resp(x_a) and reasonability over a sensitivity grid.
    Sweep(SweepArgs),
    /// Simulate an event log from a scenario.
    Simulate(SimulateArgs),
    /// Confusion rates of a thresholded detector.
    Rates(RatesArgs),
}

#[derive(Args, Debug)]
struct EventArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_parser = parse_output)]
    system_output: SystemOutput,
    /// Value observed by the human.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_finite)]
    observed: f64,
    /// Action the human took.
    #[arg(long, value_parser = parse_action)]
    action: Action,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct LogArgs {
    /// Event log CSV.
    #[arg(long)]
    input: PathBuf,
    /// Number of leading events to skip.
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    /// Also report Resp(Z) over sliding windows of this size.
    #[arg(long, requires = "stride")]
    window_size: Option<usize>,
    #[arg(long, requires = "window_size")]
    stride: Option<usize>,
    /// Add-alpha smoothing of the joint table.
    #[arg(long, default_value_t = 0.0, value_parser = parse_nonnegative)]
    smoothing: f64,
    #[arg(long)]
    json: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Svg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
enum Metric {
    RespXa,
    RsnbleAccept,
    RsnbleReject,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Human sensitivity axis as min:max:steps.
    #[arg(long, default_value = "0.6:3.0:61", value_parser = parse_range)]
    d_human: AxisRange,
    /// System sensitivity axis as min:max:steps.
    #[arg(long, default_value = "0.6:3.0:61", value_parser = parse_range)]
    d_system: AxisRange,
    /// Comma-separated observed values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_finite,
          default_value = "-1.5,0,1.5,3,4.5")]
    e: Vec<f64>,
    #[arg(long, default_value = "signal", value_parser = parse_output)]
    system_output: SystemOutput,
    /// Output path; SVG output writes one file per observed value next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Value shown in SVG heatmaps.
    #[arg(long, value_enum, default_value_t = Metric::RespXa)]
    metric: Metric,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
enum Policy {
    MaximizeEv,
    SoftmaxSample,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long)]
    seed: u64,
    /// Event log CSV; the configuration is written beside it as `<stem>.config.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Policy::MaximizeEv)]
    policy: Policy,
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[arg(long, value_parser = parse_positive)]
    d_prime: f64,
    /// Likelihood-ratio criterion, or `optimal` (needs --prior and --payoffs).
    #[arg(long, value_parser = parse_beta)]
    beta: SystemBeta,
    #[arg(long, value_parser = parse_finite)]
    prior: Option<f64>,
    /// Payoffs in the order v_tp,v_tn,v_fp,v_fn.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_payoffs)]
    payoffs: Option<PayoffMatrix>,
    #[arg(long)]
    json: bool,
}

fn parse_finite(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got `{s}`")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match parse_finite(s)? {
        v if v > 0.0 => Ok(v),
        v => Err(format!("must be > 0, got {v}")),
    }
}

fn parse_nonnegative(s: &str) -> Result<f64, String> {
    match parse_finite(s)? {
        v if v >= 0.0 => Ok(v),
        v => Err(format!("must be >= 0, got {v}")),
    }
}

fn parse_output(s: &str) -> Result<SystemOutput, String> {
    s.parse().map_err(|e: retroresp::Error| e.to_string())
}

fn parse_action(s: &str) -> Result<Action, String> {
    s.parse().map_err(|e: retroresp::Error| e.to_string())
}

fn parse_range(s: &str) -> Result<AxisRange, String> {
    s.parse().map_err(|e: retroresp::Error| e.to_string())
}

fn parse_beta(s: &str) -> Result<SystemBeta, String> {
    s.parse().map_err(|e: retroresp::Error| e.to_string())
}

fn parse_payoffs(s: &str) -> Result<PayoffMatrix, String> {
    let v = s
        .split(',')
        .map(parse_finite)
        .collect::<Result<Vec<f64>, String>>()?;
    match v[..] {
        [tp, tn, fp, fnv] => Ok(PayoffMatrix {
            v_tp: tp,
            v_tn: tn,
            v_fp: fp,
            v_fn: fnv,
        }),
        _ => Err(format!("expected four comma-separated values, got `{s}`")),
    }
}

enum Failure {
    Usage(clap::Error),
    Domain(String),
}

impl From<retroresp::Error> for Failure {
    fn from(e: retroresp::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

fn usage<A: Args>(
    subcommand: &'static str,
    kind: ErrorKind,
    msg: impl std::fmt::Display,
) -> Failure {
    let cmd = clap::Command::new(subcommand).bin_name(format!("retroresp {subcommand}"));
    let mut cmd = A::augment_args(cmd);
    Failure::Usage(cmd.error(kind, msg))
}

fn context(path: &Path) -> impl Fn(retroresp::Error) -> Failure + '_ {
    move |e| Failure::Domain(format!("{}: {e}", path.display()))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text).map_err(context(path))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Domain(e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// `%g`-style formatting with six significant digits.
fn g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn run_event(a: EventArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&a.scenario)?;
    let r = analyze_event(&scenario, a.system_output, a.observed, a.action)?;
    if a.json {
        return print_json(&r);
    }
    print!("{}", render_event(&r));
    Ok(())
}

fn render_event(r: &AnalysisReport) -> String {
    let pair = |label: &str, d: &retroresp::ProbDist| {
        format!(
            "{label:<22}{SIGNAL} {}  {NOISE} {}\n",
            g6(d.prob(SIGNAL).unwrap_or(f64::NAN)),
            g6(d.prob(NOISE).unwrap_or(f64::NAN))
        )
    };
    let per_action = |label: &str, m: &std::collections::BTreeMap<String, f64>| {
        let cols: Vec<String> = m.iter().map(|(k, v)| format!("{k} {}", g6(*v))).collect();
        format!("{label:<22}{}\n", cols.join("  "))
    };
    let mut out = String::new();
    out += &pair("x_aS (system only)", &r.x_a_system_only);
    out += &pair("x_aH (human only)", &r.x_a_human_only);
    out += &pair("x_a (combined)", &r.x_a);
    out += &format!("{:<22}{}\n", "D(x_a, x_aS)", g6(r.d_system));
    out += &format!("{:<22}{}\n", "D(x_a, x_aH)", g6(r.d_human));
    out += &format!("{:<22}{}\n", "D_S / D_H", g6(r.d_system / r.d_human));
    out += &format!("{:<22}{}\n", "Resp(x_a)", g6(r.resp_information));
    out += &per_action("expected value", &r.expected_values);
    out += &per_action("softmax probability", &r.softmax);
    out += &per_action("Rsnble", &r.reasonability);
    out += &format!("{:<22}{}\n", "chosen", r.chosen.as_str());
    if !r.flags.is_empty() {
        out += &format!("{:<22}{}\n", "flags", r.flags.join(", "));
    }
    out
}

fn run_log(a: LogArgs) -> Result<(), Failure> {
    let events = event_log::load_events(&a.input).map_err(context(&a.input))?;
    let mut report: LogReport = event_log::resp_from_log_smoothed(&events, a.burn_in, a.smoothing)?;
    if let (Some(w), Some(s)) = (a.window_size, a.stride) {
        report.series = Some(event_log::resp_series(&events, w, s)?);
    }
    if a.json {
        return print_json(&report);
    }
    println!("{:<18}{}", "Resp(Z)", g6(report.resp_z));
    println!("{:<18}{}", "H(Z) bits", g6(report.h_z_bits));
    println!("{:<18}{}", "H(Z|Y) bits", g6(report.h_z_given_y_bits));
    println!("{:<18}{}", "events used", report.n_events);
    println!("{:<18}{}", "burn-in", report.burn_in);
    if let Some(series) = &report.series {
        println!("window start  Resp(Z)");
        for p in series {
            let v = p.resp_z.map(g6).unwrap_or_else(|| "undefined".into());
            println!("{:<14}{v}", p.start);
        }
    }
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Result<(), Failure> {
    let base = load_scenario(&a.scenario)?;
    let spec = SweepSpec {
        d_human: a.d_human,
        d_system: a.d_system,
        e_values: a.e,
        system_output: a.system_output,
        base,
    };
    let grid = sweep::sweep(&spec)?;
    let format = match a.format {
        Format::Csv => GridFormat::Csv,
        Format::Svg => GridFormat::SvgHeatmap(match a.metric {
            Metric::RespXa => HeatmapMetric::RespXa,
            Metric::RsnbleAccept => HeatmapMetric::RsnbleAccept,
            Metric::RsnbleReject => HeatmapMetric::RsnbleReject,
        }),
    };
    let written = sweep::emit_grid(&grid, format, &a.out).map_err(context(&a.out))?;
    println!(
        "{} cells ({} e x {} d_system x {} d_human)",
        grid.cells.len(),
        grid.e_values.len(),
        grid.d_system.len(),
        grid.d_human.len()
    );
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run_simulate(a: SimulateArgs) -> Result<(), Failure> {
    let config = SimConfig {
        scenario: load_scenario(&a.scenario)?,
        n_trials: a.trials,
        seed: a.seed,
        human_policy: match a.policy {
            Policy::MaximizeEv => HumanPolicy::MaximizeEv,
            Policy::SoftmaxSample => HumanPolicy::SoftmaxSample,
        },
    };
    let events = simulator::simulate(&config)?;
    event_log::write_events_to_path(&a.out, &events).map_err(context(&a.out))?;
    let sidecar = simulator::sidecar_path(&a.out);
    simulator::write_sidecar(&sidecar, &config).map_err(context(&sidecar))?;
    println!("wrote {} events to {}", events.len(), a.out.display());
    println!("wrote configuration to {}", sidecar.display());
    Ok(())
}

#[derive(Serialize)]
struct RatesOutput {
    d_prime: f64,
    beta: f64,
    threshold: f64,
    #[serde(flatten)]
    rates: sdt::ConfusionRates,
}

fn run_rates(a: RatesArgs) -> Result<(), Failure> {
    let beta = match a.beta {
        SystemBeta::Value(v) => v,
        SystemBeta::Optimal => {
            let (Some(prior), Some(payoffs)) = (a.prior, a.payoffs) else {
                return Err(usage::<RatesArgs>(
                    "rates",
                    ErrorKind::MissingRequiredArgument,
                    "--beta optimal requires --prior and --payoffs",
                ));
            };
            sdt::optimal_beta(prior, &payoffs)?
        }
    };
    let threshold = sdt::beta_to_threshold(beta, a.d_prime)?;
    let rates = sdt::confusion_rates(a.d_prime, threshold)?;
    let out = RatesOutput {
        d_prime: a.d_prime,
        beta,
        threshold,
        rates,
    };
    if a.json {
        return print_json(&out);
    }
    println!("{:<12}{}", "d'", g6(out.d_prime));
    println!("{:<12}{}", "beta", g6(out.beta));
    println!("{:<12}{}", "threshold", g6(out.threshold));
    println!("{:<12}{}", "P_TP", g6(rates.p_tp));
    println!("{:<12}{}", "P_FN", g6(rates.p_fn));
    println!("{:<12}{}", "P_FP", g6(rates.p_fp));
    println!("{:<12}{}", "P_TN", g6(rates.p_tn));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => return usage_exit(e),
    };
    let result = match cli.command {
        Command::Event(a) => run_event(a),
        Command::Log(a) => run_log(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Rates(a) => run_rates(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => usage_exit(e),
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn usage_exit(e: clap::Error) -> ExitCode {
    let _ = e.print();
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
        _ => ExitCode::from(1),
    }
}
