//! Grid evaluation of the single-event measures over detection
//! sensitivities and observed values, with CSV and SVG heatmap output.
//!
//! Default axes run from 0.6 to 3.0 in 61 steps. The default observed values
//! are -1.5, 0, 1.5, 3 and 4.5. Only the first three have published
//! reference panels; 3 and 4.5 are inferred to cover the range up to 4.5.
//!
//! Heatmap color ramp: fixed five-stop ramp over `[0, 1]`, linear in sRGB
//! between `#440154` (0), `#3b528b` (0.25), `#21918c` (0.5), `#5ec962`
//! (0.75) and `#fde725` (1).

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::responsibility::{analyze_event, Action};
use crate::sdt::{Scenario, SystemOutput};
use crate::{Error, Result};

/// Evenly spaced axis `min, …, max` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Default for AxisRange {
    fn default() -> Self {
        Self {
            min: 0.6,
            max: 3.0,
            steps: 61,
        }
    }
}

impl AxisRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let r = Self { min, max, steps };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "range needs at least 2 steps, got {}",
                self.steps
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::InvalidArgument(format!(
                "range must satisfy min < max, got {}:{}",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Point `i` is `min + i·(max − min)/(steps − 1)`, so grids whose step
    /// counts differ by a power of two share bit-identical coordinates.
    pub fn values(&self) -> Vec<f64> {
        let n = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + (i as f64 * (self.max - self.min)) / n
                }
            })
            .collect()
    }
}

impl FromStr for AxisRange {
    type Err = Error;

    /// Parses `min:max:steps`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected min:max:steps, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
        Self::new(min, max, steps)
    }
}

pub const DEFAULT_E_VALUES: [f64; 5] = [-1.5, 0.0, 1.5, 3.0, 4.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub d_human: AxisRange,
    pub d_system: AxisRange,
    pub e_values: Vec<f64>,
    pub system_output: SystemOutput,
    /// Prior, payoffs, β rule and temperature; its sensitivities are replaced per cell.
    pub base: Scenario,
}

impl SweepSpec {
    pub fn with_defaults(base: Scenario) -> Self {
        Self {
            d_human: AxisRange::default(),
            d_system: AxisRange::default(),
            e_values: DEFAULT_E_VALUES.to_vec(),
            system_output: SystemOutput::Signal,
            base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.d_human.validate()?;
        self.d_system.validate()?;
        if self.d_human.min <= 0.0 || self.d_system.min <= 0.0 {
            return Err(Error::InvalidArgument(
                "sensitivity ranges must be > 0".into(),
            ));
        }
        if self.e_values.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one e value is required".into(),
            ));
        }
        if let Some(e) = self.e_values.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite e value {e}")));
        }
        self.base.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub e: f64,
    pub d_human: f64,
    pub d_system: f64,
    pub resp_xa: f64,
    pub rsnble_accept: f64,
    pub rsnble_reject: f64,
}

/// Cells ordered by e, then d_system (rows), then d_human (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub e_values: Vec<f64>,
    pub d_system: Vec<f64>,
    pub d_human: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, e_index: usize, s_index: usize, h_index: usize) -> &SweepCell {
        let (ns, nh) = (self.d_system.len(), self.d_human.len());
        &self.cells[(e_index * ns + s_index) * nh + h_index]
    }

    /// Cells of one e-slice, row-major in (d_system, d_human).
    pub fn slice(&self, e_index: usize) -> &[SweepCell] {
        let n = self.d_system.len() * self.d_human.len();
        &self.cells[e_index * n..(e_index + 1) * n]
    }

    /// Rebuilds the axes from cells in canonical order.
    pub fn from_cells(cells: Vec<SweepCell>) -> Result<Self> {
        fn distinct(it: impl Iterator<Item = f64>) -> Vec<f64> {
            let mut out: Vec<f64> = Vec::new();
            for v in it {
                if !out.iter().any(|x| x.to_bits() == v.to_bits()) {
                    out.push(v);
                }
            }
            out
        }
        let e_values = distinct(cells.iter().map(|c| c.e));
        let d_system = distinct(cells.iter().map(|c| c.d_system));
        let d_human = distinct(cells.iter().map(|c| c.d_human));
        let grid = Self {
            e_values,
            d_system,
            d_human,
            cells,
        };
        let expected = grid.e_values.len() * grid.d_system.len() * grid.d_human.len();
        if expected != grid.cells.len() || expected == 0 {
            return Err(Error::InvalidArgument(
                "cells do not form a complete grid".into(),
            ));
        }
        for (ei, &e) in grid.e_values.iter().enumerate() {
            for (si, &s) in grid.d_system.iter().enumerate() {
                for (hi, &h) in grid.d_human.iter().enumerate() {
                    let c = grid.cell(ei, si, hi);
                    if c.e != e || c.d_system != s || c.d_human != h {
                        return Err(Error::InvalidArgument(
                            "cells are not in (e, d_system, d_human) order".into(),
                        ));
                    }
                }
            }
        }
        Ok(grid)
    }
}

/// Evaluates one cell.
pub fn evaluate_cell(
    base: &Scenario,
    output: SystemOutput,
    e: f64,
    d_human: f64,
    d_system: f64,
) -> Result<SweepCell> {
    let run = || -> Result<SweepCell> {
        let scenario = base.with_sensitivities(d_human, d_system)?;
        let report = analyze_event(&scenario, output, e, Action::Accept)?;
        Ok(SweepCell {
            e,
            d_human,
            d_system,
            resp_xa: report.resp_information,
            rsnble_accept: report.reasonability_of(Action::Accept),
            rsnble_reject: report.reasonability_of(Action::Reject),
        })
    };
    run().map_err(|source| Error::SweepCell {
        e,
        d_human,
        d_system,
        source: Box::new(source),
    })
}

/// Evaluates every cell of the grid in parallel; output order is fixed.
pub fn sweep(spec: &SweepSpec) -> Result<SweepGrid> {
    spec.validate()?;
    let d_human = spec.d_human.values();
    let d_system = spec.d_system.values();
    let mut coords = Vec::with_capacity(spec.e_values.len() * d_system.len() * d_human.len());
    for &e in &spec.e_values {
        for &s in &d_system {
            for &h in &d_human {
                coords.push((e, s, h));
            }
        }
    }
    let cells = coords
        .into_par_iter()
        .map(|(e, s, h)| evaluate_cell(&spec.base, spec.system_output, e, h, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        e_values: spec.e_values.clone(),
        d_system,
        d_human,
        cells,
    })
}

/// Counts of adjacent-cell trend violations in one e-slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrendViolations {
    /// `resp_xa` increased along some fixed-d_human row as d_system grew.
    pub increasing_in_d_system: usize,
    /// `resp_xa` decreased along some fixed-d_system column as d_human grew.
    pub decreasing_in_d_human: usize,
}

/// Checks that `resp_xa` is nonincreasing in d_system and nondecreasing in
/// d_human, allowing `slack` for rounding.
pub fn trend_violations(grid: &SweepGrid, e_index: usize, slack: f64) -> TrendViolations {
    let (ns, nh) = (grid.d_system.len(), grid.d_human.len());
    let mut v = TrendViolations::default();
    for si in 0..ns {
        for hi in 0..nh {
            let here = grid.cell(e_index, si, hi).resp_xa;
            if si + 1 < ns && grid.cell(e_index, si + 1, hi).resp_xa > here + slack {
                v.increasing_in_d_system += 1;
            }
            if hi + 1 < nh && grid.cell(e_index, si, hi + 1).resp_xa < here - slack {
                v.decreasing_in_d_human += 1;
            }
        }
    }
    v
}

/// d_human at which `resp_xa` peaks along the row `s_index`.
pub fn resp_peak_d_human(grid: &SweepGrid, e_index: usize, s_index: usize) -> f64 {
    let (best, _) = (0..grid.d_human.len())
        .map(|hi| (hi, grid.cell(e_index, s_index, hi).resp_xa))
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
    grid.d_human[best]
}

pub const CSV_HEADER: &str = "e,d_human,d_system,resp_xa,rsnble_accept,rsnble_reject";

/// Grid as CSV text; values use shortest round-trip formatting.
pub fn grid_to_csv(grid: &SweepGrid) -> String {
    let mut out = String::with_capacity(grid.cells.len() * 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in &grid.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.e, c.d_human, c.d_system, c.resp_xa, c.rsnble_accept, c.rsnble_reject
        );
    }
    out
}

/// Parses CSV written by [`grid_to_csv`].
pub fn read_grid_csv<R: Read>(reader: R) -> Result<SweepGrid> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if headers != CSV_HEADER {
        return Err(Error::InvalidArgument(format!(
            "unexpected header `{headers}`"
        )));
    }
    let mut cells = Vec::new();
    for row in rdr.deserialize() {
        cells.push(row?);
    }
    SweepGrid::from_cells(cells)
}

/// Which cell value a heatmap shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMetric {
    #[default]
    RespXa,
    RsnbleAccept,
    RsnbleReject,
}

impl HeatmapMetric {
    pub fn name(self) -> &'static str {
        match self {
            HeatmapMetric::RespXa => "resp_xa",
            HeatmapMetric::RsnbleAccept => "rsnble_accept",
            HeatmapMetric::RsnbleReject => "rsnble_reject",
        }
    }

    fn of(self, c: &SweepCell) -> f64 {
        match self {
            HeatmapMetric::RespXa => c.resp_xa,
            HeatmapMetric::RsnbleAccept => c.rsnble_accept,
            HeatmapMetric::RsnbleReject => c.rsnble_reject,
        }
    }
}

impl FromStr for HeatmapMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resp_xa" => Ok(HeatmapMetric::RespXa),
            "rsnble_accept" => Ok(HeatmapMetric::RsnbleAccept),
            "rsnble_reject" => Ok(HeatmapMetric::RsnbleReject),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}

const RAMP: [(f64, [u8; 3]); 5] = [
    (0.0, [0x44, 0x01, 0x54]),
    (0.25, [0x3b, 0x52, 0x8b]),
    (0.5, [0x21, 0x91, 0x8c]),
    (0.75, [0x5e, 0xc9, 0x62]),
    (1.0, [0xfd, 0xe7, 0x25]),
];

/// Ramp color for `v`, clamped to `[0, 1]`.
pub fn ramp_color(v: f64) -> String {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let i = RAMP
        .windows(2)
        .position(|w| v <= w[1].0)
        .unwrap_or(RAMP.len() - 2);
    let (t0, c0) = RAMP[i];
    let (t1, c1) = RAMP[i + 1];
    let f = (v - t0) / (t1 - t0);
    let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(c0[0], c1[0]),
        mix(c0[1], c1[1]),
        mix(c0[2], c1[2])
    )
}

const CELL_PX: f64 = 8.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;
const LEGEND_WIDTH: f64 = 90.0;
const TICK_SPACING: f64 = 0.6;

fn ticks(values: &[f64]) -> Vec<f64> {
    let (min, max) = (values[0], values[values.len() - 1]);
    let first = (min / TICK_SPACING - 1e-9).ceil() as i64;
    let last = (max / TICK_SPACING + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * TICK_SPACING).collect()
}

/// One heatmap of an e-slice: d_human on x, d_system on y (increasing upward).
pub fn render_svg(grid: &SweepGrid, e_index: usize, metric: HeatmapMetric) -> String {
    let (nh, ns) = (grid.d_human.len(), grid.d_system.len());
    let plot_w = nh as f64 * CELL_PX;
    let plot_h = ns as f64 * CELL_PX;
    let width = MARGIN_LEFT + plot_w + LEGEND_WIDTH;
    let height = MARGIN_TOP + plot_h + MARGIN_BOTTOM;
    let e = grid.e_values[e_index];

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{} at e = {}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        metric.name(),
        e
    );
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for si in 0..ns {
        for hi in 0..nh {
            let c = grid.cell(e_index, si, hi);
            let x = MARGIN_LEFT + hi as f64 * CELL_PX;
            let y = MARGIN_TOP + (ns - 1 - si) as f64 * CELL_PX;
            let v = metric.of(c);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{CELL_PX}" height="{CELL_PX}" fill="{}"><title>d_human={} d_system={} {}={:.6}</title></rect>"#,
                ramp_color(v),
                c.d_human,
                c.d_system,
                metric.name(),
                v
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let axis_pos = |values: &[f64], v: f64| {
        let (min, max) = (values[0], values[values.len() - 1]);
        (v - min) / (max - min) * (values.len() - 1) as f64 * CELL_PX + CELL_PX / 2.0
    };
    let bottom = MARGIN_TOP + plot_h;
    for t in ticks(&grid.d_human) {
        let x = MARGIN_LEFT + axis_pos(&grid.d_human, t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{bottom:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{t:.1}</text>"#,
            bottom + 4.0,
            bottom + 16.0
        );
    }
    for t in ticks(&grid.d_system) {
        let y = bottom - axis_pos(&grid.d_system, t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{MARGIN_LEFT:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{t:.1}</text>"#,
            MARGIN_LEFT - 4.0,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">d′ human</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        bottom + 36.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">d′ system</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    // legend swatches are paths so that rect count equals cell count
    let lx = MARGIN_LEFT + plot_w + 16.0;
    for (i, (v, _)) in RAMP.iter().enumerate().rev() {
        let y = MARGIN_TOP + (RAMP.len() - 1 - i) as f64 * 18.0;
        let _ = writeln!(
            s,
            r#"<path d="M{lx:.1} {y:.1}h14v14h-14z" fill="{}"/><text x="{:.1}" y="{:.1}">{v:.2}</text>"#,
            ramp_color(*v),
            lx + 20.0,
            y + 11.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Output format of [`emit_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFormat {
    Csv,
    SvgHeatmap(HeatmapMetric),
}

/// Path of the heatmap for one e-value: `out.svg` → `out_e-1.5.svg`.
pub fn svg_slice_path(path: &Path, e: f64) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    path.with_file_name(format!("{stem}_e{e}.svg"))
}

/// Writes the grid; returns every file written.
pub fn emit_grid(grid: &SweepGrid, format: GridFormat, path: &Path) -> Result<Vec<PathBuf>> {
    if grid.cells.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    match format {
        GridFormat::Csv => {
            fs::write(path, grid_to_csv(grid))?;
            Ok(vec![path.to_path_buf()])
        }
        GridFormat::SvgHeatmap(metric) => {
            let mut written = Vec::new();
            for (ei, &e) in grid.e_values.iter().enumerate() {
                let p = svg_slice_path(path, e);
                fs::write(&p, render_svg(grid, ei, metric))?;
                written.push(p);
            }
            Ok(written)
        }
    }
}
