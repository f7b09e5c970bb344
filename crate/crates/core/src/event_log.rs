//! Interaction logs: CSV ingestion and estimation of `Resp(Z)`.
//!
//! Schema: a required `z` column (implemented action), one or more `y_*`
//! columns (discrete system variables), and optional `trial`, `e`, `state`
//! and `x_s` columns. Comma separated, header row first, `.` decimal point.
//!
//! Only the `y_*` columns condition `Resp(Z)`; `e` is never discretized
//! into the conditioning set. When the log lacks some of the system's
//! variables, the estimate is an upper bound on the fully conditioned value.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::info::JointTable;
use crate::responsibility::average_components;
use crate::{Error, Result};

pub const Y_PREFIX: &str = "y_";

/// Ground-truth environment state of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum State {
    Signal,
    Noise,
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            State::Signal => "signal",
            State::Noise => "noise",
        })
    }
}

impl FromStr for State {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signal" => Ok(State::Signal),
            "noise" => Ok(State::Noise),
            other => Err(Error::InvalidArgument(format!(
                "state must be `signal` or `noise`, got `{other}`"
            ))),
        }
    }
}

/// One logged interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub trial: u64,
    /// Keyed by full column name, e.g. `y_alert`.
    pub y_values: BTreeMap<String, String>,
    /// Implemented action.
    pub z: String,
    pub e: Option<f64>,
    pub state: Option<State>,
    /// Action selected by the human, when logged separately from `z`.
    pub x_s: Option<String>,
}

/// Reads and validates events from a CSV file.
pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<EventRecord>> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::EventLog(format!("cannot open {}: {e}", path.display())))?;
    read_events(file)
}

const MAX_REPORTED_ROWS: usize = 10;

/// Reads and validates events from CSV text.
pub fn read_events<R: Read>(reader: R) -> Result<Vec<EventRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();

    let mut z_col = None;
    let mut trial_col = None;
    let mut e_col = None;
    let mut state_col = None;
    let mut xs_col = None;
    let mut y_cols = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        let slot = match h {
            "z" => &mut z_col,
            "trial" => &mut trial_col,
            "e" => &mut e_col,
            "state" => &mut state_col,
            "x_s" => &mut xs_col,
            name if name.starts_with(Y_PREFIX) && name.len() > Y_PREFIX.len() => {
                if y_cols.iter().any(|(_, n): &(usize, String)| n == name) {
                    return Err(Error::EventLog(format!("duplicate column `{name}`")));
                }
                y_cols.push((i, name.to_owned()));
                continue;
            }
            other => {
                return Err(Error::EventLog(format!("unexpected column `{other}`")));
            }
        };
        if slot.replace(i).is_some() {
            return Err(Error::EventLog(format!("duplicate column `{h}`")));
        }
    }
    let z_col = z_col.ok_or_else(|| Error::EventLog("missing required column `z`".into()))?;
    if y_cols.is_empty() {
        return Err(Error::EventLog(format!(
            "no `{Y_PREFIX}*` columns; at least one system variable is required"
        )));
    }

    let mut events = Vec::new();
    let mut problems: Vec<String> = Vec::new();
    let mut last_trial: Option<u64> = None;
    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 2;
        let row = row?;
        match parse_row(
            &row,
            headers.len(),
            z_col,
            trial_col,
            e_col,
            state_col,
            xs_col,
            &y_cols,
            idx,
        ) {
            Ok(ev) => {
                if let Some(prev) = last_trial {
                    if ev.trial <= prev {
                        problems.push(format!(
                            "row {line}: trial {} does not increase (previous {prev})",
                            ev.trial
                        ));
                    }
                }
                last_trial = Some(ev.trial);
                events.push(ev);
            }
            Err(msg) => problems.push(format!("row {line}: {msg}")),
        }
    }
    if !problems.is_empty() {
        let n = problems.len();
        let mut msg = problems
            .into_iter()
            .take(MAX_REPORTED_ROWS)
            .collect::<Vec<_>>()
            .join("; ");
        if n > MAX_REPORTED_ROWS {
            msg.push_str(&format!("; and {} more", n - MAX_REPORTED_ROWS));
        }
        return Err(Error::EventLog(format!("{n} malformed row(s): {msg}")));
    }
    Ok(events)
}

#[allow(clippy::too_many_arguments)]
fn parse_row(
    row: &csv::StringRecord,
    width: usize,
    z_col: usize,
    trial_col: Option<usize>,
    e_col: Option<usize>,
    state_col: Option<usize>,
    xs_col: Option<usize>,
    y_cols: &[(usize, String)],
    idx: usize,
) -> std::result::Result<EventRecord, String> {
    if row.len() != width {
        return Err(format!("expected {width} fields, found {}", row.len()));
    }
    let field = |i: usize| row.get(i).unwrap_or("").trim();
    let optional = |col: Option<usize>| col.map(field).filter(|s| !s.is_empty());

    let z = field(z_col);
    if z.is_empty() {
        return Err("empty `z`".into());
    }
    let mut y_values = BTreeMap::new();
    for (i, name) in y_cols {
        let v = field(*i);
        if v.is_empty() {
            return Err(format!("empty `{name}`"));
        }
        y_values.insert(name.clone(), v.to_owned());
    }
    let trial = match optional(trial_col) {
        Some(t) => t
            .parse::<u64>()
            .map_err(|_| format!("`trial` is not a nonnegative integer: `{t}`"))?,
        None if trial_col.is_some() => return Err("empty `trial`".into()),
        None => idx as u64 + 1,
    };
    let e = match optional(e_col) {
        Some(s) => {
            let v = s
                .parse::<f64>()
                .map_err(|_| format!("`e` is not numeric: `{s}`"))?;
            if !v.is_finite() {
                return Err(format!("`e` is not finite: `{s}`"));
            }
            Some(v)
        }
        None => None,
    };
    let state = optional(state_col)
        .map(|s| s.parse::<State>().map_err(|err| err.to_string()))
        .transpose()?;
    Ok(EventRecord {
        trial,
        y_values,
        z: z.to_owned(),
        e,
        state,
        x_s: optional(xs_col).map(str::to_owned),
    })
}

/// Writes events as CSV. Optional columns are emitted when any record has them.
pub fn write_events<W: Write>(writer: W, events: &[EventRecord]) -> Result<()> {
    let y_names: Vec<String> = events
        .first()
        .map(|e| e.y_values.keys().cloned().collect())
        .unwrap_or_default();
    if let Some(bad) = events
        .iter()
        .find(|e| !e.y_values.keys().eq(y_names.iter()))
    {
        return Err(Error::EventLog(format!(
            "trial {} has y-variables inconsistent with the first record",
            bad.trial
        )));
    }
    let has_e = events.iter().any(|e| e.e.is_some());
    let has_state = events.iter().any(|e| e.state.is_some());
    let has_xs = events.iter().any(|e| e.x_s.is_some());

    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(writer);
    let mut header = vec!["trial".to_owned()];
    header.extend(y_names.iter().cloned());
    header.push("z".into());
    if has_e {
        header.push("e".into());
    }
    if has_state {
        header.push("state".into());
    }
    if has_xs {
        header.push("x_s".into());
    }
    w.write_record(&header)?;
    for ev in events {
        let mut rec = vec![ev.trial.to_string()];
        rec.extend(ev.y_values.values().cloned());
        rec.push(ev.z.clone());
        if has_e {
            rec.push(ev.e.map(|v| v.to_string()).unwrap_or_default());
        }
        if has_state {
            rec.push(ev.state.map(|s| s.to_string()).unwrap_or_default());
        }
        if has_xs {
            rec.push(ev.x_s.clone().unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_to_path(path: impl AsRef<Path>, events: &[EventRecord]) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_events(std::io::BufWriter::new(file), events)
}

fn y_names(events: &[EventRecord]) -> Vec<String> {
    events
        .first()
        .map(|e| e.y_values.keys().cloned().collect())
        .unwrap_or_default()
}

/// Counts of `(y-tuple, z)` over events at positions `>= burn_in`,
/// restricted to the half-open position range `window` when given.
pub fn build_joint(
    events: &[EventRecord],
    burn_in: usize,
    window: Option<(usize, usize)>,
) -> Result<JointTable> {
    if burn_in >= events.len() {
        return Err(Error::EventLog(format!(
            "burn-in {burn_in} leaves no events (log has {})",
            events.len()
        )));
    }
    let (start, end) = match window {
        Some((s, e)) if s > e => {
            return Err(Error::InvalidArgument(format!(
                "window start {s} > end {e}"
            )))
        }
        Some((s, e)) => (s.max(burn_in), e.min(events.len())),
        None => (burn_in, events.len()),
    };
    if start >= end {
        return Err(Error::EventLog("no events selected".into()));
    }
    let names = y_names(events);
    let mut t = JointTable::new(names.clone(), "z");
    for ev in &events[start..end] {
        if !ev.y_values.keys().eq(names.iter()) {
            return Err(Error::EventLog(format!(
                "trial {} has inconsistent y-variables",
                ev.trial
            )));
        }
        let ys: Vec<&str> = ev.y_values.values().map(String::as_str).collect();
        t.add(&ys, &ev.z, 1.0)?;
    }
    Ok(t)
}

/// `Resp(Z)` estimated from a log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReport {
    pub resp_z: f64,
    pub h_z_bits: f64,
    pub h_z_given_y_bits: f64,
    pub n_events: usize,
    pub burn_in: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<SeriesPoint>>,
}

/// Plug-in `Resp(Z)` over events after `burn_in`.
pub fn resp_from_log(events: &[EventRecord], burn_in: usize) -> Result<LogReport> {
    resp_from_log_smoothed(events, burn_in, 0.0)
}

/// As [`resp_from_log`], with add-α smoothing of the joint table.
pub fn resp_from_log_smoothed(
    events: &[EventRecord],
    burn_in: usize,
    alpha: f64,
) -> Result<LogReport> {
    let table = build_joint(events, burn_in, None)?;
    let n_events = table.total() as usize;
    let c = average_components(&table.smoothed(alpha)?)?;
    Ok(LogReport {
        resp_z: c.resp_z,
        h_z_bits: c.h_z_bits,
        h_z_given_y_bits: c.h_z_given_y_bits,
        n_events,
        burn_in,
        series: None,
    })
}

/// One window of [`resp_series`]; `resp_z` is `None` when `H(Z) = 0` in the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub start: usize,
    pub resp_z: Option<f64>,
}

/// `Resp(Z)` over sliding windows `[start, start + window_size)`.
pub fn resp_series(
    events: &[EventRecord],
    window_size: usize,
    stride: usize,
) -> Result<Vec<SeriesPoint>> {
    if window_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "window size must be >= 2, got {window_size}"
        )));
    }
    if stride < 1 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    if window_size > events.len() {
        return Err(Error::InvalidArgument(format!(
            "window size {window_size} exceeds log length {}",
            events.len()
        )));
    }
    let starts: Vec<usize> = (0..=events.len() - window_size).step_by(stride).collect();
    starts
        .into_par_iter()
        .map(|start| {
            let table = build_joint(events, 0, Some((start, start + window_size)))?;
            let resp_z = match average_components(&table) {
                Ok(c) => Some(c.resp_z),
                Err(Error::DegenerateOutcome) => None,
                Err(e) => return Err(e),
            };
            Ok(SeriesPoint { start, resp_z })
        })
        .collect()
}
