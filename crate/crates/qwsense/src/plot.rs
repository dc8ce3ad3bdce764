//! Standalone SVG views of data files. Rendering reads only the CSV bytes, so a plot
//! can always be regenerated from its data.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Log-log series with a power-law guide.
    Scaling,
    /// Phase diagram or Fisher surface.
    Heatmap,
    /// Ensemble mean with a one-sigma band.
    Band,
    /// One posterior curve per time.
    Posterior,
}

/// Fill for gapless phase-diagram cells; no other cell uses it.
pub const GAPLESS_COLOR: &str = "#ff00ff";
/// Fill for surface cells whose value is flagged or not positive.
pub const FLAGGED_COLOR: &str = "#d9d9d9";

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(path: &Path, bytes: &[u8]) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let data = |e: csv::Error| CliError::Data { path: path.to_path_buf(), message: e.to_string() };
        let header = r.headers().map_err(data)?.iter().map(str::to_owned).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_owned).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(data)?;
        Ok(Table { header, rows })
    }

    fn has(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }

    fn column(&self, path: &Path, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::MissingColumn { path: path.to_path_buf(), column: name.to_owned() })
    }

    fn floats(&self, path: &Path, col: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let s = r.get(col).map(String::as_str).unwrap_or("");
                s.parse::<f64>().map_err(|_| CliError::Data {
                    path: path.to_path_buf(),
                    message: format!("row {}: `{}` is not a number in column `{}`", i + 1, s, self.header[col]),
                })
            })
            .collect()
    }

    fn texts(&self, col: usize) -> Vec<&str> {
        self.rows.iter().map(|r| r.get(col).map(String::as_str).unwrap_or("")).collect()
    }
}

#[derive(Clone, Copy)]
enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    scale: Scale,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, scale: Scale) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = match scale {
                Scale::Log if v > 0.0 => v.log10(),
                Scale::Log => continue,
                Scale::Linear => v,
            };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            return Axis { lo: 0.0, hi: 1.0, scale };
        }
        match scale {
            Scale::Log => {
                lo = lo.floor();
                hi = hi.ceil();
                if hi <= lo {
                    hi = lo + 1.0;
                }
            }
            Scale::Linear => {
                if hi <= lo {
                    lo -= 0.5;
                    hi += 0.5;
                }
            }
        }
        Axis { lo, hi, scale }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        let v = match self.scale {
            Scale::Log if v > 0.0 => v.log10(),
            Scale::Log => return None,
            Scale::Linear => v,
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            Scale::Log => {
                let (a, b) = (self.lo as i32, self.hi as i32);
                let stride = ((b - a) / 8).max(1);
                (a..=b)
                    .step_by(stride as usize)
                    .map(|k| ((k as f64 - self.lo) / (self.hi - self.lo), format!("1e{k}")))
                    .collect()
            }
            Scale::Linear => {
                let step = nice_step((self.hi - self.lo) / 5.0);
                let first = (self.lo / step).ceil() as i64;
                let last = (self.hi / step).floor() as i64;
                (first..=last)
                    .map(|i| {
                        let v = i as f64 * step;
                        ((v - self.lo) / (self.hi - self.lo), label(v))
                    })
                    .collect()
            }
        }
    }
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    mag * if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    }
}

fn label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Canvas {
    body: String,
    x: Axis,
    y: Axis,
}

impl Canvas {
    fn new(x: Axis, y: Axis) -> Self {
        Canvas { body: String::new(), x, y }
    }

    fn px(&self, v: f64) -> Option<f64> {
        self.x.unit(v).map(|u| LEFT + u * (W - LEFT - RIGHT))
    }

    fn py(&self, v: f64) -> Option<f64> {
        self.y.unit(v).map(|u| H - BOTTOM - u * (H - TOP - BOTTOM))
    }

    fn point(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        Some((self.px(x)?, self.py(y)?))
    }

    /// Each run of drawable points becomes its own polyline.
    fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for &(x, y) in pts {
            match self.point(x, y) {
                Some(p) => runs.last_mut().expect("non-empty").push(p),
                None => runs.push(Vec::new()),
            }
        }
        for run in runs.into_iter().filter(|r| r.len() > 1) {
            let d: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(self.body, r#"<polyline fill="none" {style} points="{}"/>"#, d.join(" "));
        }
    }

    fn markers(&mut self, pts: &[(f64, f64)], color: &str) {
        for &(x, y) in pts {
            if let Some((cx, cy)) = self.point(x, y) {
                let _ = writeln!(self.body, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="1.8" fill="{color}"/>"#);
            }
        }
    }

    fn finish(self, title: &str, xlabel: &str, ylabel: &str, empty: bool, legend: &[(String, String)]) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        s.push_str(&self.body);
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        for (u, l) in self.x.ticks() {
            let x = x0 + u * (x1 - x0);
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y1 + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y1 + 19.0, escape(&l));
        }
        for (u, l) in self.y.ticks() {
            let y = y1 - u * (y1 - y0);
            let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, escape(&l));
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            H - 12.0,
            escape(xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            (x0 + x1) / 2.0,
            escape(title)
        );
        for (i, (color, name)) in legend.iter().enumerate() {
            let y = y0 + 14.0 + 16.0 * i as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="12" height="4" fill="{color}"/>"#, x1 - 130.0, y - 6.0);
            let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, x1 - 112.0, escape(name));
        }
        if empty {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" font-size="16" fill="gray">no data</text>"#,
                (x0 + x1) / 2.0,
                (y0 + y1) / 2.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Renders the data file at `path` (already read into `bytes`).
pub fn render_plot(path: &Path, bytes: &[u8], kind: PlotKind) -> Result<String> {
    let table = Table::parse(path, bytes)?;
    match kind {
        PlotKind::Scaling => scaling(path, &table),
        PlotKind::Heatmap if table.has("winding") || table.has("status") => phase_heatmap(path, &table),
        PlotKind::Heatmap => surface_heatmap(path, &table),
        PlotKind::Band => band(path, &table),
        PlotKind::Posterior => posterior(path, &table),
    }
}

pub fn render_file(data: &Path, kind: PlotKind) -> Result<String> {
    let bytes = std::fs::read(data).map_err(|e| CliError::io(data, e))?;
    render_plot(data, &bytes, kind)
}

fn scaling(path: &Path, table: &Table) -> Result<String> {
    let t = table.floats(path, table.column(path, "t")?)?;
    let (ycol, power, ylabel) = if table.has("msre") {
        ("msre", -2.0, "mean squared relative error")
    } else {
        ("value", 2.0, "Fisher information")
    };
    let y = table.floats(path, table.column(path, ycol)?)?;
    let pts: Vec<(f64, f64)> = t.iter().copied().zip(y.iter().copied()).collect();
    let positive = || pts.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0);
    // guide t^power through the point that bounds the data from the favourable side
    let anchor = positive().map(|&(t, y)| y / t.powf(power)).fold(None, |acc: Option<f64>, c| {
        Some(match acc {
            None => c,
            Some(a) if power > 0.0 => a.max(c),
            Some(a) => a.min(c),
        })
    });
    let mut c = Canvas::new(Axis::fit(t.iter().copied(), Scale::Log), Axis::fit(y.iter().copied(), Scale::Log));
    let mut legend = vec![(PALETTE[0].to_owned(), ycol.to_owned())];
    if let Some(a) = anchor {
        let (lo, hi) = (10f64.powf(c.x.lo), 10f64.powf(c.x.hi));
        let guide: Vec<(f64, f64)> =
            (0..=64).map(|i| lo * (hi / lo).powf(i as f64 / 64.0)).map(|t| (t, a * t.powf(power))).collect();
        c.polyline(&clip_y(&guide, &c.y), r#"stroke="black" stroke-width="1.2""#);
        legend.push(("black".into(), if power > 0.0 { "t^2".into() } else { "t^-2".into() }));
    }
    c.polyline(&pts, &format!(r#"stroke="{}" stroke-width="1.4""#, PALETTE[0]));
    c.markers(&pts, PALETTE[0]);
    Ok(c.finish(&format!("{ycol} vs t"), "t", ylabel, positive().next().is_none(), &legend))
}

fn clip_y(pts: &[(f64, f64)], y: &Axis) -> Vec<(f64, f64)> {
    let (lo, hi) = (10f64.powf(y.lo), 10f64.powf(y.hi));
    pts.iter().map(|&(t, v)| (t, if v < lo || v > hi { f64::NAN } else { v })).collect()
}

fn distinct(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Cell rectangles on the grid spanned by the distinct coordinates.
fn cells(c: &mut Canvas, xs: &[f64], ys: &[f64], fills: &[String]) {
    let (ux, uy) = (distinct(xs), distinct(ys));
    let half = |u: &[f64], i: usize| -> (f64, f64) {
        let lo = if i == 0 { u[0] - (u.get(1).map_or(0.5, |n| n - u[0])) / 2.0 } else { (u[i - 1] + u[i]) / 2.0 };
        let hi = if i + 1 == u.len() {
            u[i] + (u[i] - if i > 0 { u[i - 1] } else { u[i] - 1.0 }) / 2.0
        } else {
            (u[i] + u[i + 1]) / 2.0
        };
        (lo, hi)
    };
    for ((x, y), fill) in xs.iter().zip(ys).zip(fills) {
        let (Some(i), Some(j)) = (ux.iter().position(|u| u == x), uy.iter().position(|u| u == y)) else { continue };
        let (x0, x1) = half(&ux, i);
        let (y0, y1) = half(&uy, j);
        if let (Some((a, b)), Some((d, e))) = (c.point(x0, y1), c.point(x1, y0)) {
            let _ = writeln!(
                c.body,
                r#"<rect x="{a:.2}" y="{b:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                d - a,
                e - b
            );
        }
    }
}

fn span(values: &[f64]) -> Axis {
    let u = distinct(values);
    if u.len() < 2 {
        return Axis::fit(values.iter().copied(), Scale::Linear);
    }
    let (a, b) = (u[0] - (u[1] - u[0]) / 2.0, u[u.len() - 1] + (u[u.len() - 1] - u[u.len() - 2]) / 2.0);
    Axis { lo: a, hi: b, scale: Scale::Linear }
}

fn winding_color(w: &str, status: &str) -> String {
    if status == "gapless" || w.is_empty() {
        return GAPLESS_COLOR.into();
    }
    match w.parse::<i32>() {
        Ok(1) => "#e66101",
        Ok(0) => "#bababa",
        Ok(-1) => "#5e3c99",
        _ => "#4dac26",
    }
    .into()
}

fn phase_heatmap(path: &Path, table: &Table) -> Result<String> {
    let x = table.floats(path, table.column(path, "theta1_over_pi")?)?;
    let y = table.floats(path, table.column(path, "theta2_over_pi")?)?;
    let w = table.texts(table.column(path, "winding")?);
    let status = table.texts(table.column(path, "status")?);
    let fills: Vec<String> = w.iter().zip(&status).map(|(w, s)| winding_color(w, s)).collect();
    let mut c = Canvas::new(span(&x), span(&y));
    cells(&mut c, &x, &y, &fills);
    let legend =
        [("#e66101", "winding +1"), ("#bababa", "winding 0"), ("#5e3c99", "winding -1"), (GAPLESS_COLOR, "gapless")]
            .map(|(a, b)| (a.to_owned(), b.to_owned()));
    Ok(c.finish("winding number", "theta1 / pi", "theta2 / pi", x.is_empty(), &legend))
}

/// Piecewise-linear blue to yellow ramp on `u` in `[0, 1]`.
fn ramp(u: f64) -> String {
    const STOPS: [[f64; 3]; 5] =
        [[68.0, 1.0, 84.0], [59.0, 82.0, 139.0], [33.0, 145.0, 140.0], [94.0, 201.0, 98.0], [253.0, 231.0, 37.0]];
    let u = u.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (u.floor() as usize).min(STOPS.len() - 2);
    let f = u - i as f64;
    let ch = |k: usize| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

fn surface_heatmap(path: &Path, table: &Table) -> Result<String> {
    let pcol = table
        .header
        .iter()
        .position(|h| h.ends_with("_over_pi"))
        .ok_or_else(|| CliError::MissingColumn { path: path.to_path_buf(), column: "theta1_over_pi".into() })?;
    let x = table.floats(path, pcol)?;
    let t = table.floats(path, table.column(path, "t")?)?;
    let v = table.floats(path, table.column(path, "value")?)?;
    let flagged: Vec<bool> = match table.column(path, "flagged") {
        Ok(i) => table.texts(i).iter().map(|s| *s == "true").collect(),
        Err(_) => vec![false; v.len()],
    };
    let logs: Vec<f64> = v.iter().filter(|&&x| x > 0.0).map(|x| x.log10()).collect();
    let (lo, hi) =
        (logs.iter().copied().fold(f64::INFINITY, f64::min), logs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let fills: Vec<String> = v
        .iter()
        .zip(&flagged)
        .map(|(&x, &f)| {
            if f || x <= 0.0 {
                FLAGGED_COLOR.into()
            } else {
                ramp(if hi > lo { (x.log10() - lo) / (hi - lo) } else { 1.0 })
            }
        })
        .collect();
    let mut c = Canvas::new(span(&x), span(&t));
    cells(&mut c, &x, &t, &fills);
    let mut legend = vec![(FLAGGED_COLOR.to_owned(), "flagged".to_owned())];
    if lo.is_finite() {
        legend.insert(0, (ramp(1.0), format!("1e{:.1}", hi)));
        legend.insert(1, (ramp(0.0), format!("1e{:.1}", lo)));
    }
    let name = table.header[pcol].trim_end_matches("_over_pi").to_owned();
    Ok(c.finish("Fisher information (log color)", &format!("{name} / pi"), "t", x.is_empty(), &legend))
}

fn band(path: &Path, table: &Table) -> Result<String> {
    let t = table.floats(path, table.column(path, "t")?)?;
    let mean = table.floats(path, table.column(path, "mean")?)?;
    let std = table.floats(path, table.column(path, "std")?)?;
    let upper: Vec<f64> = mean.iter().zip(&std).map(|(m, s)| m + s).collect();
    let lower: Vec<f64> = mean.iter().zip(&std).map(|(m, s)| m - s).collect();
    let mut c = Canvas::new(
        Axis::fit(t.iter().copied(), Scale::Linear),
        Axis::fit(upper.iter().chain(&lower).copied(), Scale::Linear),
    );
    let outline: Vec<(f64, f64)> =
        t.iter().zip(&upper).map(|(&a, &b)| (a, b)).chain(t.iter().zip(&lower).rev().map(|(&a, &b)| (a, b))).collect();
    let poly: Vec<String> =
        outline.iter().filter_map(|&(x, y)| c.point(x, y)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    if poly.len() > 2 {
        let _ = writeln!(
            c.body,
            r#"<polygon fill="{}" fill-opacity="0.25" stroke="none" points="{}"/>"#,
            PALETTE[0],
            poly.join(" ")
        );
    }
    let line: Vec<(f64, f64)> = t.iter().copied().zip(mean.iter().copied()).collect();
    c.polyline(&line, &format!(r#"stroke="{}" stroke-width="1.4""#, PALETTE[0]));
    let legend = [(PALETTE[0].to_owned(), "mean +/- std".to_owned())];
    Ok(c.finish("ensemble mean", "t", "mean", t.is_empty(), &legend))
}

fn posterior(path: &Path, table: &Table) -> Result<String> {
    let t = table.floats(path, table.column(path, "t")?)?;
    let x = table.floats(path, table.column(path, "theta02_over_pi")?)?;
    let w = table.floats(path, table.column(path, "weight")?)?;
    let mut c = Canvas::new(
        Axis::fit(x.iter().copied(), Scale::Linear),
        Axis::fit(w.iter().copied().chain([0.0]), Scale::Linear),
    );
    let times = distinct(&t);
    let mut legend = Vec::new();
    for (k, &tk) in times.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = (0..t.len()).filter(|&i| t[i] == tk).map(|i| (x[i], w[i])).collect();
        c.polyline(&pts, &format!(r#"stroke="{color}" stroke-width="1.4""#));
        legend.push((color.to_owned(), format!("t = {}", crate::format::time(tk))));
    }
    Ok(c.finish("posterior", "theta02 / pi", "weight", t.is_empty(), &legend))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_ends() {
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
    }

    #[test]
    fn gapless_cells_use_the_sentinel() {
        let csv =
            b"theta1_over_pi,theta2_over_pi,winding,min_gap,status\n0.75,0.75,,0.0,gapless\n0.9,0.75,1,0.1,gapped\n";
        let svg = render_plot(Path::new("p.csv"), csv, PlotKind::Heatmap).unwrap();
        assert_eq!(svg.matches(&format!("fill=\"{GAPLESS_COLOR}\"")).count(), 2);
        // one cell, one legend swatch
    }
}
