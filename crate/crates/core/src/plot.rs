//! Static SVG line charts of PDR and delay against node count, one pair per
//! scenario.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::report::{CsvRow, RowKind};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

/// One point per node count: (nodes, pdr, delay).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSeries {
    pub scenario: String,
    pub points: Vec<(usize, f64, f64)>,
}

/// Groups rows by scenario. Aggregate rows are used where present;
/// otherwise per-seed rows are averaged. Points come out in node order.
pub fn series(rows: &[CsvRow]) -> Vec<ScenarioSeries> {
    let mut agg: BTreeMap<(&str, usize), (f64, f64)> = BTreeMap::new();
    let mut runs: BTreeMap<(&str, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        let key = (r.scenario.as_str(), r.nodes);
        match r.kind {
            RowKind::Aggregate => {
                agg.insert(key, (r.pdr, r.avg_delay));
            }
            RowKind::Seed(_) => runs.entry(key).or_default().push((r.pdr, r.avg_delay)),
        }
    }
    for (key, v) in &runs {
        agg.entry(*key).or_insert_with(|| {
            let n = v.len() as f64;
            (v.iter().map(|p| p.0).sum::<f64>() / n, v.iter().map(|p| p.1).sum::<f64>() / n)
        });
    }
    let mut out: Vec<ScenarioSeries> = Vec::new();
    for ((scenario, nodes), (pdr, delay)) in agg {
        match out.last_mut() {
            Some(s) if s.scenario == scenario => s.points.push((nodes, pdr, delay)),
            _ => out.push(ScenarioSeries {
                scenario: scenario.to_string(),
                points: vec![(nodes, pdr, delay)],
            }),
        }
    }
    out
}

/// A 1, 2 or 5 times power-of-ten step giving about `count` intervals.
fn nice_step(span: f64, count: usize) -> f64 {
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let unit = [1.0, 2.0, 5.0, 10.0].into_iter().find(|u| u * mag >= raw).unwrap_or(10.0);
    unit * mag
}

/// Widens `[lo, hi]` outwards to whole steps; returns the range and ticks.
fn nice_axis(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let step = nice_step(hi - lo, 5);
    let lo = (lo / step).floor() * step;
    let hi = (hi / step).ceil() * step;
    let n = ((hi - lo) / step).round() as usize;
    (lo, hi, (0..=n).map(|k| lo + step * k as f64).collect())
}

/// Axis range padded so every value lies inside and the span is non-zero.
fn axis_range(values: impl Iterator<Item = f64> + Clone, floor_at_zero: bool) -> (f64, f64) {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    let lo = if floor_at_zero { lo.min(0.0) } else { lo };
    if hi > lo {
        let pad = if floor_at_zero { 0.0 } else { (hi - lo) * 0.05 };
        (lo - pad, hi + (hi - lo) * 0.05)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a single-series line chart with markers.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let (x0, x1) = axis_range(points.iter().map(|p| p.0), false);
    let (y0, y1) = axis_range(points.iter().map(|p| p.1), true);
    let (y0, y1, y_ticks) = nice_axis(y0, y1);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<g stroke="#444" fill="none"><line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}"/></g>"##,
        b = TOP + plot_h,
        r = LEFT + plot_w
    );
    for y in y_ticks {
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{r}" y2="{py:.2}" stroke="#ddd"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{}</text>"##,
            format_tick(y),
            r = LEFT + plot_w,
            tx = LEFT - 6.0,
            ty = py + 4.0
        );
    }
    for &(x, _) in points {
        let px = sx(x);
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{ty}" text-anchor="middle">{x}</text>"#,
            ty = TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{cy}" text-anchor="middle" transform="rotate(-90 20 {cy})">{}</text>"#,
        escape(y_label),
        cy = TOP + plot_h / 2.0
    );
    let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="2" points="{}"/>"##,
        coords.join(" ")
    );
    for &(x, y) in points {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="#1f5fa8"><title>{x}: {y}</title></circle>"##,
            sx(x),
            sy(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `pdr_scenario{S}.svg` and `delay_scenario{S}.svg` per scenario into
/// `out_dir`; returns the paths written. Nothing is written for empty input.
pub fn write_plots(rows: &[CsvRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let all = series(rows);
    if all.is_empty() {
        return Err(Error::NoData(out_dir.display().to_string()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for s in &all {
        let pdr: Vec<(f64, f64)> = s.points.iter().map(|p| (p.0 as f64, p.1)).collect();
        let delay: Vec<(f64, f64)> = s.points.iter().map(|p| (p.0 as f64, p.2)).collect();
        let charts = [
            (
                format!("pdr_scenario{}.svg", s.scenario),
                line_chart(
                    &format!("Packet Delivery Ratio for scenario {}", s.scenario),
                    "Number of nodes",
                    "Packet delivery ratio",
                    &pdr,
                ),
            ),
            (
                format!("delay_scenario{}.svg", s.scenario),
                line_chart(
                    &format!("Average End-to-End Delay for scenario {}", s.scenario),
                    "Number of nodes",
                    "Average delay (s)",
                    &delay,
                ),
            ),
        ];
        for (name, svg) in charts {
            let path = out_dir.join(name);
            fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scenario: &str, nodes: usize, kind: RowKind, pdr: f64, delay: f64) -> CsvRow {
        CsvRow {
            scenario: scenario.into(),
            nodes,
            kind,
            pdr,
            avg_delay: delay,
            sent: 10,
            received: 9,
            collisions: 0,
            discoveries: 1,
        }
    }

    fn polyline_points(svg: &str) -> Vec<(f64, f64)> {
        let start = svg.find("<polyline").unwrap();
        let attr = &svg[start..];
        let p = attr.find("points=\"").unwrap() + 8;
        let end = attr[p..].find('"').unwrap();
        attr[p..p + end]
            .split(' ')
            .map(|xy| {
                let (x, y) = xy.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn six_points_in_node_order() {
        let rows: Vec<CsvRow> = [150, 25, 100, 50, 125, 75]
            .iter()
            .map(|&n| row("1", n, RowKind::Aggregate, 1.0 - n as f64 / 1000.0, 0.1))
            .collect();
        let s = series(&rows);
        assert_eq!(s.len(), 1);
        let nodes: Vec<usize> = s[0].points.iter().map(|p| p.0).collect();
        assert_eq!(nodes, [25, 50, 75, 100, 125, 150]);
        let pts: Vec<(f64, f64)> = s[0].points.iter().map(|p| (p.0 as f64, p.1)).collect();
        let svg = line_chart("t", "x", "y", &pts);
        let drawn = polyline_points(&svg);
        assert_eq!(drawn.len(), 6);
        assert!(drawn.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn every_point_lies_inside_the_plot_area() {
        let pts = [(25.0, 3.5), (50.0, 0.0), (75.0, 0.01), (150.0, 12.0)];
        let svg = line_chart("t", "x", "y", &pts);
        for (x, y) in polyline_points(&svg) {
            assert!((LEFT - 1e-9..=WIDTH - RIGHT + 1e-9).contains(&x), "{x}");
            assert!((TOP - 1e-9..=HEIGHT - BOTTOM + 1e-9).contains(&y), "{y}");
        }
        // degenerate single point still renders
        let one = line_chart("t", "x", "y", &[(25.0, 0.5)]);
        assert_eq!(polyline_points(&one).len(), 1);
    }

    #[test]
    fn per_seed_rows_are_averaged_when_no_aggregate() {
        let rows = [
            row("2", 25, RowKind::Seed(1), 0.8, 1.0),
            row("2", 25, RowKind::Seed(2), 0.6, 3.0),
        ];
        let s = series(&rows);
        assert_eq!(s[0].points, vec![(25, 0.7, 2.0)]);
    }

    #[test]
    fn writes_two_files_per_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let rows = [
            row("1", 25, RowKind::Aggregate, 0.9, 0.2),
            row("3", 25, RowKind::Aggregate, 0.8, 0.3),
        ];
        let files = write_plots(&rows, dir.path()).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            ["pdr_scenario1.svg", "delay_scenario1.svg", "pdr_scenario3.svg", "delay_scenario3.svg"]
        );
        assert!(fs::read_to_string(&files[0]).unwrap().starts_with("<svg"));
    }

    #[test]
    fn empty_rows_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("plots");
        assert!(matches!(write_plots(&[], &out), Err(Error::NoData(_))));
        assert!(!out.exists());
    }
}
