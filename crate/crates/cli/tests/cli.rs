use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use retroresp::event_log::LogReport;
use retroresp::responsibility::{analyze_event, Action, AnalysisReport};
use retroresp::sdt::{Scenario, SystemOutput};
use retroresp::simulator::{analytic_resp_z, HumanPolicy};
use tempfile::TempDir;

const SCENARIO: &str = r#"{
  "prior_signal": 0.2,
  "d_prime_human": 1.5,
  "d_prime_system": 2.0,
  "system_beta": "optimal",
  "payoffs": {"v_tp": 10, "v_tn": 10, "v_fp": -10, "v_fn": -20}
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retroresp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scenario_file(dir: &TempDir) -> PathBuf {
    let p = dir.path().join("scenario.json");
    fs::write(&p, SCENARIO).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn field(text: &str, label: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(label))
        .unwrap_or_else(|| panic!("no `{label}` line in\n{text}"));
    line[label.len()..].trim().parse().unwrap()
}

#[test]
fn event_worked_example() {
    let dir = TempDir::new().unwrap();
    let sc = scenario_file(&dir);
    let o = run(&[
        "event",
        "--scenario",
        s(&sc),
        "--system-output",
        "signal",
        "--observed",
        "-1.5",
        "--action",
        "reject",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let resp = field(&text, "Resp(x_a)");
    assert!((0.77..=0.81).contains(&resp), "{resp}");
    assert!(text.contains("D_S / D_H"));
    assert!(text
        .lines()
        .any(|l| l.starts_with("Rsnble") && l.contains("reject 1")));
}

#[test]
fn event_json_round_trips() {
    let dir = TempDir::new().unwrap();
    let sc = scenario_file(&dir);
    let o = run(&[
        "event",
        "--scenario",
        s(&sc),
        "--system-output",
        "signal",
        "--observed",
        "-1.5",
        "--action",
        "reject",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let parsed: AnalysisReport = serde_json::from_str(&stdout(&o)).unwrap();
    let scenario = Scenario::from_json(SCENARIO).unwrap();
    let expected = analyze_event(&scenario, SystemOutput::Signal, -1.5, Action::Reject).unwrap();
    assert_eq!(parsed, expected);
    assert_eq!(parsed.reasonability_of(Action::Reject), 1.0);
}

#[test]
fn event_usage_and_data_errors() {
    let dir = TempDir::new().unwrap();
    let sc = scenario_file(&dir);
    let o = run(&[
        "event",
        "--scenario",
        s(&sc),
        "--system-output",
        "signal",
        "--observed",
        "-1.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    assert!(o.stdout.is_empty());

    let o = run(&[
        "event",
        "--scenario",
        s(&sc),
        "--system-output",
        "maybe",
        "--observed",
        "0",
        "--action",
        "accept",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let missing = dir.path().join("absent.json");
    let o = run(&[
        "event",
        "--scenario",
        s(&missing),
        "--system-output",
        "signal",
        "--observed",
        "0",
        "--action",
        "accept",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        SCENARIO.replace("\"prior_signal\"", "\"colour\": 1, \"prior_signal\""),
    )
    .unwrap();
    let o = run(&[
        "event",
        "--scenario",
        s(&bad),
        "--system-output",
        "signal",
        "--observed",
        "0",
        "--action",
        "accept",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn simulate_then_log_matches_quadrature() {
    let dir = TempDir::new().unwrap();
    let sc = scenario_file(&dir);
    let log = dir.path().join("events.csv");
    let o = run(&[
        "simulate",
        "--scenario",
        s(&sc),
        "--trials",
        "100000",
        "--seed",
        "42",
        "--out",
        s(&log),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("events.config.json").exists());

    let o = run(&["log", "--input", s(&log), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: LogReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report.n_events, 100_000);
    let exact = analytic_resp_z(
        &Scenario::from_json(SCENARIO).unwrap(),
        HumanPolicy::MaximizeEv,
    )
    .unwrap();
    assert!(
        (report.resp_z - exact.resp_z).abs() < 0.01,
        "{} vs {}",
        report.resp_z,
        exact.resp_z
    );

    let o = run(&[
        "log",
        "--input",
        s(&log),
        "--window-size",
        "40000",
        "--stride",
        "30000",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report: LogReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report.series.unwrap().len(), 3);

    let o = run(&["log", "--input", s(&log), "--window-size", "10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn log_boundary_cases() {
    let dir = TempDir::new().unwrap();
    let copy = dir.path().join("copy.csv");
    fs::write(
        &copy,
        "y_alert,z\nalert,accept\nnoalert,reject\nalert,accept\nnoalert,reject\n",
    )
    .unwrap();
    let o = run(&["log", "--input", s(&copy)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "Resp(Z)"), 0.0);

    let constant = dir.path().join("constant.csv");
    fs::write(&constant, "y_alert,z\nalert,accept\nnoalert,accept\n").unwrap();
    let o = run(&["log", "--input", s(&constant)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degenerate outcome distribution"));

    let o = run(&["log", "--input", s(&dir.path().join("nope.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_defaults_write_full_grid() {
    let dir = TempDir::new().unwrap();
    let sc = scenario_file(&dir);
    let out = dir.path().join("grid.csv");
    let o = run(&["sweep", "--scenario", s(&sc), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 61 * 61);
    assert_eq!(
        text.lines().next().unwrap(),
        "e,d_human,d_system,resp_xa,rsnble_accept,rsnble_reject"
    );
}

#[test]
fn sweep_svg_per_slice_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let sc = scenario_file(&dir);
    let args = |out: &Path| {
        run(&[
            "sweep",
            "--scenario",
            s(&sc),
            "--out",
            s(out),
            "--format",
            "svg",
            "--e",
            "-1.5,0,1.5",
            "--d-human",
            "0.6:3.0:9",
            "--d-system",
            "0.6:3.0:9",
        ])
    };
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    assert_eq!(args(&a).status.code(), Some(0));
    assert_eq!(args(&b).status.code(), Some(0));
    for e in ["-1.5", "0", "1.5"] {
        let fa = fs::read(dir.path().join(format!("a_e{e}.svg"))).unwrap();
        let fb = fs::read(dir.path().join(format!("b_e{e}.svg"))).unwrap();
        assert_eq!(fa, fb);
    }
}

#[test]
fn sweep_rejects_malformed_range() {
    let dir = TempDir::new().unwrap();
    let sc = scenario_file(&dir);
    let out = dir.path().join("g.csv");
    for bad in ["1:2", "3:1:5", "0.6:3.0:1", "a:b:c"] {
        let o = run(&[
            "sweep",
            "--scenario",
            s(&sc),
            "--out",
            s(&out),
            "--d-human",
            bad,
        ]);
        assert_eq!(o.status.code(), Some(1), "{bad}");
    }
    assert!(!out.exists());
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let sc = scenario_file(&dir);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = run(&[
            "simulate",
            "--scenario",
            s(&sc),
            "--trials",
            "500",
            "--seed",
            "7",
            "--out",
            s(p),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let o = run(&[
        "simulate",
        "--scenario",
        s(&sc),
        "--trials",
        "0",
        "--seed",
        "7",
        "--out",
        s(&a),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulated_rates_match_analytic() {
    let dir = TempDir::new().unwrap();
    let sc = scenario_file(&dir);
    let log = dir.path().join("events.csv");
    let o = run(&[
        "simulate",
        "--scenario",
        s(&sc),
        "--trials",
        "200000",
        "--seed",
        "3",
        "--out",
        s(&log),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let events = retroresp::event_log::load_events(&log).unwrap();
    let (mut n_sig, mut tp, mut n_noise, mut fp) = (0.0, 0.0, 0.0, 0.0);
    for e in &events {
        let alert = (e.y_values["y_alert"] == "alert") as u8 as f64;
        match e.state.unwrap() {
            retroresp::event_log::State::Signal => {
                n_sig += 1.0;
                tp += alert;
            }
            retroresp::event_log::State::Noise => {
                n_noise += 1.0;
                fp += alert;
            }
        }
    }
    let rates = Scenario::from_json(SCENARIO)
        .unwrap()
        .system_rates()
        .unwrap();
    for (hits, n, p) in [(tp, n_sig, rates.p_tp), (fp, n_noise, rates.p_fp)] {
        let se = (p * (1.0 - p) / n).sqrt();
        assert!((hits / n - p).abs() < 3.0 * se, "{} vs {p}", hits / n);
    }
    assert!((rates.p_tp - 0.69).abs() < 0.005 && (rates.p_fp - 0.07).abs() < 0.005);
}

#[test]
fn rates_subcommand() {
    let o = run(&[
        "rates",
        "--d-prime",
        "2",
        "--beta",
        "optimal",
        "--prior",
        "0.2",
        "--payoffs",
        "10,10,-10,-20",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for (label, want) in [
        ("P_TP", 0.69),
        ("P_FN", 0.31),
        ("P_FP", 0.07),
        ("P_TN", 0.93),
    ] {
        assert!((field(&text, label) - want).abs() <= 0.005, "{label}");
    }

    let o = run(&["rates", "--d-prime", "1.5", "--beta", "2.6667", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for (k, want) in [
        ("p_tp", 0.538),
        ("p_fn", 0.462),
        ("p_fp", 0.080),
        ("p_tn", 0.920),
    ] {
        assert!((v[k].as_f64().unwrap() - want).abs() < 5e-4, "{k}");
    }

    assert_eq!(
        run(&["rates", "--d-prime", "0", "--beta", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["rates", "--d-prime", "2", "--beta", "optimal"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["rates", "--d-prime", "2", "--beta", "-1"])
            .status
            .code(),
        Some(1)
    );
    let o = run(&[
        "rates",
        "--d-prime",
        "2",
        "--beta",
        "optimal",
        "--prior",
        "1.5",
        "--payoffs",
        "10,10,-10,-20",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_version_and_missing_subcommand() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["sweep", "--help"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}
