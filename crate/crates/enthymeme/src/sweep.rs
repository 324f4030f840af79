//! Threshold sweeps: one evaluation per (τ_m, τ_c, step type) grid point.
//!
//! Provider scores do not depend on the thresholds, so each step type is
//! prepared once and every grid point only re-thresholds the stored scores.

use std::fmt::Write as _;
use std::io;

use crate::dataset::{binarize, DatasetError, DatasetItem, StepType};
use crate::pipeline::{decide_all, prepare_all, report, EvalReport, RunConfig};
use crate::providers::Providers;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("bad grid {text:?}: {reason}")]
pub struct GridError {
    pub text: String,
    pub reason: String,
}

/// Values rounded to nine decimals so `0.1 * 3` prints as `0.3`.
fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Parses `start:end:step` (inclusive) or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, GridError> {
    let err = |reason: &str| GridError {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(&format!("{s:?} is not a number")));
    let parts: Vec<&str> = text.split(':').collect();
    let values: Vec<f64> = match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (num(start)?, num(end)?, num(step)?);
            if step.is_nan() || step <= 0.0 || end < start {
                return Err(err("need start <= end and a positive step"));
            }
            let n = ((end - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| round9(start + i as f64 * step)).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?.into_iter().map(round9).collect(),
        _ => return Err(err("expected start:end:step or a comma list")),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(err("values must be finite"));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tau_m: f64,
    pub tau_c: f64,
    pub step_type: StepType,
    pub report: EvalReport,
}

pub const CSV_HEADER: [&str; 17] = [
    "tau_m",
    "tau_c",
    "step_type",
    "instances",
    "errored",
    "scored",
    "tp",
    "fp",
    "fn",
    "tn",
    "precision_0",
    "recall_0",
    "f1_0",
    "precision_1",
    "recall_1",
    "f1_1",
    "accuracy",
];

fn threshold(x: f64) -> String {
    let s = format!("{x:.9}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn metric(x: f64) -> String {
    format!("{x:.6}")
}

impl SweepRow {
    pub fn record(&self) -> Vec<String> {
        let r = &self.report;
        let c = &r.confusion;
        let m = &r.metrics;
        vec![
            threshold(self.tau_m),
            threshold(self.tau_c),
            self.step_type.to_string(),
            r.instances.to_string(),
            r.errored.to_string(),
            c.total().to_string(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            c.tn.to_string(),
            metric(m.class0.precision),
            metric(m.class0.recall),
            metric(m.class0.f1),
            metric(m.class1.precision),
            metric(m.class1.recall),
            metric(m.class1.f1),
            metric(m.accuracy),
        ]
    }
}

/// Evaluates every grid point, step type outermost, then τ_c, then τ_m.
/// Flagged items are skipped.
pub fn sweep(
    items: &[DatasetItem],
    tau_m: &[f64],
    tau_c: &[f64],
    step_types: &[StepType],
    base: &RunConfig,
    providers: &Providers,
) -> Result<Vec<SweepRow>, DatasetError> {
    let mut rows = Vec::with_capacity(tau_m.len() * tau_c.len() * step_types.len());
    for &step in step_types {
        let mut instances = Vec::new();
        for item in items.iter().filter(|i| i.flagged.is_none()) {
            instances.extend(binarize(item, step)?);
        }
        let step_config = RunConfig {
            step_type: step,
            ..base.clone()
        };
        let prepared = prepare_all(&instances, &step_config, providers);
        for &c in tau_c {
            for &m in tau_m {
                let config = RunConfig {
                    tau_m: m,
                    tau_c: c,
                    ..step_config.clone()
                };
                let traces = decide_all(&prepared, &config);
                rows.push(SweepRow {
                    tau_m: m,
                    tau_c: c,
                    step_type: step,
                    report: report(&traces, config.exclude_errored),
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_csv(rows: &[SweepRow], out: impl io::Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Accuracy against τ_m with one polyline per (τ_c, step type).
pub fn render_svg(rows: &[SweepRow]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 60.0;
    const RIGHT: f64 = 200.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 50.0;
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);

    let mut series: Vec<((f64, StepType), Vec<(f64, f64)>)> = Vec::new();
    for row in rows {
        let key = (row.tau_c, row.step_type);
        let point = (row.tau_m, row.report.metrics.accuracy);
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push(point),
            None => series.push((key, vec![point])),
        }
    }
    let xs = || rows.iter().map(|r| r.tau_m);
    let (mut x0, mut x1) = (xs().fold(f64::INFINITY, f64::min), xs().fold(f64::NEG_INFINITY, f64::max));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.05, x1 + 0.05);
    }
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (1.0 - y) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{x2}" y2="{py:.2}" stroke="#dddddd"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{y:.1}</text>"##,
            py = py(y),
            x2 = LEFT + pw,
            tx = LEFT - 6.0,
            ty = py(y) + 4.0
        );
    }
    let mut ticks: Vec<f64> = xs().collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for t in &ticks {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{y}" text-anchor="middle">{label}</text>"#,
            x = px(*t),
            y = TOP + ph + 18.0,
            label = threshold(*t)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}" stroke="black"/><line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        b = TOP + ph,
        r = LEFT + pw
    );
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" text-anchor="middle">τ_m</text><text x="16" y="{ym}" text-anchor="middle" transform="rotate(-90 16 {ym})">accuracy</text>"#,
        x = LEFT + pw / 2.0,
        y = H - 12.0,
        ym = TOP + ph / 2.0
    );
    for (i, ((tc, step), pts)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        for (x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, px(*x), py(*y));
        }
        let ly = TOP + 10.0 + i as f64 * 18.0;
        let label = escape_xml(&format!("τ_c={} steps={}", threshold(*tc), step));
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{lx2}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{tx}" y="{ty}">{label}</text>"#,
            lx = LEFT + pw + 15.0,
            lx2 = LEFT + pw + 35.0,
            tx = LEFT + pw + 40.0,
            ty = ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5:0.8:0.05").unwrap(), [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8]);
        assert_eq!(parse_grid("80,90,100").unwrap(), [80.0, 90.0, 100.0]);
        assert_eq!(parse_grid("0.6").unwrap(), [0.6]);
        assert_eq!(parse_grid("0:0.3:0.1").unwrap(), [0.0, 0.1, 0.2, 0.3]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn threshold_formatting() {
        assert_eq!(threshold(0.55), "0.55");
        assert_eq!(threshold(80.0), "80");
        assert_eq!(threshold(0.0), "0");
    }
}
