//! Self-contained SVG figures drawn from a run's CSV outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::numerics::fit::fit_line;

use super::manifest::RunManifest;
use super::tables::{self, read_csv, TableSchema};
use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PlotKind {
    Spectrum,
    ResidualTrend,
    ScanHeatmap,
    FlowPortrait,
}

impl PlotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::Spectrum => "spectrum",
            PlotKind::ResidualTrend => "residual_trend",
            PlotKind::ScanHeatmap => "scan_heatmap",
            PlotKind::FlowPortrait => "flow_portrait",
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

/// Axes-and-frame builder; data coordinates are mapped linearly onto the plot area.
struct Figure {
    x: (f64, f64),
    y: (f64, f64),
    title: String,
    xlabel: String,
    ylabel: String,
    body: String,
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= 0.0 {
        let d = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - d, hi + d);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Figure {
    fn new(x: (f64, f64), y: (f64, f64), title: &str, xlabel: &str, ylabel: &str) -> Self {
        Self { x, y, title: title.into(), xlabel: xlabel.into(), ylabel: ylabel.into(), body: String::new() }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn circle(&mut self, class: &str, x: f64, y: f64, r: f64) {
        let _ = writeln!(self.body, r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{r}"/>"#, self.px(x), self.py(y));
    }

    fn diamond(&mut self, class: &str, x: f64, y: f64, r: f64) {
        let (cx, cy) = (self.px(x), self.py(y));
        let _ = writeln!(
            self.body,
            r#"<path class="{class}" d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} Z"/>"#,
            cx,
            cy - r,
            cx + r,
            cy,
            cx,
            cy + r,
            cx - r,
            cy
        );
    }

    fn line(&mut self, class: &str, a: (f64, f64), b: (f64, f64)) {
        let _ = writeln!(
            self.body,
            r#"<line class="{class}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
            self.px(a.0),
            self.py(a.1),
            self.px(b.0),
            self.py(b.1)
        );
    }

    fn polyline(&mut self, class: &str, pts: &[(f64, f64)]) {
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, self.px(*x), self.py(*y));
        }
        let _ = writeln!(self.body, r#"<path class="{class}" d="{d}"/>"#);
    }

    /// Filled triangle at `at` pointing along `dir` (data coordinates).
    fn arrow(&mut self, class: &str, at: (f64, f64), dir: (f64, f64)) {
        let (cx, cy) = (self.px(at.0), self.py(at.1));
        let (dx, dy) = (self.px(at.0 + dir.0) - cx, self.py(at.1 + dir.1) - cy);
        let n = (dx * dx + dy * dy).sqrt();
        if !(n > 0.0) {
            return;
        }
        let (ux, uy) = (dx / n * 7.0, dy / n * 7.0);
        let _ = writeln!(
            self.body,
            r#"<path class="{class}" d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} Z"/>"#,
            cx + ux,
            cy + uy,
            cx - ux - 0.6 * uy,
            cy - uy + 0.6 * ux,
            cx - ux + 0.6 * uy,
            cy - uy - 0.6 * ux
        );
    }

    fn rect(&mut self, class: &str, x0: f64, y0: f64, x1: f64, y1: f64, fill: &str) {
        let (a, b) = (self.px(x0), self.px(x1));
        let (c, d) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.body,
            r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            a.min(b),
            c.min(d),
            (b - a).abs(),
            (d - c).abs()
        );
    }

    fn text(&mut self, class: &str, x: f64, y: f64, s: &str) {
        let _ = writeln!(self.body, r#"<text class="{class}" x="{:.2}" y="{:.2}">{}</text>"#, self.px(x), self.py(y), escape(s));
    }

    fn note(&mut self, s: &str) {
        let _ = writeln!(self.body, r#"<text class="note" x="{:.2}" y="{:.2}">{}</text>"#, LEFT + 8.0, TOP + 16.0, escape(s));
    }

    fn finish(self) -> String {
        let mut out = String::new();
        let (w, h) = (WIDTH, HEIGHT);
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        out.push_str(
            "<style>\n\
             text { font-family: sans-serif; font-size: 12px; fill: #222; }\n\
             .title { font-size: 15px; text-anchor: middle; }\n\
             .xlabel { text-anchor: middle; }\n\
             .ylabel { text-anchor: middle; }\n\
             .tick { font-size: 10px; fill: #555; }\n\
             .frame { fill: none; stroke: #222; }\n\
             .grid { stroke: #ddd; }\n\
             .qnf { fill: #1f5fa8; }\n\
             .quasimode { fill: #d35400; }\n\
             .match-link { stroke: #d35400; stroke-dasharray: 3 2; }\n\
             .real-axis { stroke: #888; }\n\
             .residual { fill: #1f5fa8; }\n\
             .fit { stroke: #c0392b; stroke-width: 1.5; }\n\
             .trajectory { fill: none; stroke: #1f5fa8; stroke-width: 1; opacity: 0.8; }\n\
             .backward { stroke: #7f8c8d; }\n\
             .arrow { fill: #1f5fa8; }\n\
             .horizon { stroke: #c0392b; stroke-dasharray: 5 3; }\n\
             .inner-edge { stroke: #888; stroke-dasharray: 2 2; }\n\
             .radial-set { fill: #c0392b; }\n\
             .source-arrow { fill: #c0392b; }\n\
             </style>\n",
        );
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            let _ = writeln!(out, r#"<line class="grid" x1="{xp:.2}" y1="{y0:.2}" x2="{xp:.2}" y2="{y1:.2}"/>"#);
            let _ = writeln!(out, r#"<line class="grid" x1="{x0:.2}" y1="{yp:.2}" x2="{x1:.2}" y2="{yp:.2}"/>"#);
            let _ = writeln!(
                out,
                r#"<text class="tick" x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y1 + 14.0,
                tick_label(xv)
            );
            let _ = writeln!(
                out,
                r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                yp + 3.0,
                tick_label(yv)
            );
        }
        let _ = writeln!(out, r#"<clipPath id="plot-area"><rect x="{x0}" y="{y0}" width="{:.2}" height="{:.2}"/></clipPath>"#, x1 - x0, y1 - y0);
        let _ = writeln!(out, r#"<g clip-path="url(#plot-area)">"#);
        out.push_str(&self.body);
        out.push_str("</g>\n");
        let _ = writeln!(out, r#"<rect class="frame" x="{x0}" y="{y0}" width="{:.2}" height="{:.2}"/>"#, x1 - x0, y1 - y0);
        let _ = writeln!(out, r#"<text class="title" x="{:.2}" y="24">{}</text>"#, 0.5 * (x0 + x1), escape(&self.title));
        let _ = writeln!(out, r#"<text class="xlabel" x="{:.2}" y="{:.2}">{}</text>"#, 0.5 * (x0 + x1), h - 14.0, escape(&self.xlabel));
        let _ = writeln!(
            out,
            r#"<text class="ylabel" x="18" y="{:.2}" transform="rotate(-90 18 {:.2})">{}</text>"#,
            0.5 * (y0 + y1),
            0.5 * (y0 + y1),
            escape(&self.ylabel)
        );
        out.push_str("</svg>\n");
        out
    }
}

fn load(manifest: &RunManifest, schema: TableSchema) -> Result<Vec<Vec<String>>, CliError> {
    if !manifest.has_output(schema.file) {
        return Err(CliError::MissingStageOutput(format!("{} is not among the run's outputs", schema.file)));
    }
    Ok(read_csv(&manifest.output_dir.join(schema.file))?.1)
}

fn f(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

fn spectrum(manifest: &RunManifest) -> Result<String, CliError> {
    let rows = load(manifest, tables::QNF)?;
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r[5] == "true").map(|r| (f(&r[2]), f(&r[3]))).collect();
    let matches: Vec<(f64, Option<(f64, f64)>)> = if manifest.has_output(tables::MATCH.file) {
        load(manifest, tables::MATCH)?
            .iter()
            .map(|r| (f(&r[1]), (!r[3].is_empty()).then(|| (f(&r[3]), f(&r[4])))))
            .collect()
    } else {
        Vec::new()
    };
    let xs = range(pts.iter().map(|p| p.0).chain(matches.iter().map(|m| m.0)));
    let ys = range(pts.iter().map(|p| p.1).chain(std::iter::once(0.0)));
    let mut fig = Figure::new(padded(xs.0, xs.1), padded(ys.0, ys.1), "Quasinormal spectrum", "Re λ", "Im λ");
    fig.line("real-axis", (fig.x.0, 0.0), (fig.x.1, 0.0));
    for (lam, pole) in &matches {
        if let Some(p) = pole {
            fig.line("match-link", (*lam, 0.0), *p);
        }
    }
    for &(x, y) in &pts {
        fig.circle("qnf", x, y, 3.0);
    }
    for (lam, _) in &matches {
        fig.diamond("quasimode", *lam, 0.0, 5.0);
    }
    fig.note(&format!("{} converged QNFs, {} quasimodes", pts.len(), matches.len()));
    Ok(fig.finish())
}

fn residual_trend(manifest: &RunManifest) -> Result<String, CliError> {
    let rows = load(manifest, tables::QUASIMODES)?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (f(&r[0]), f(&r[2]).log10())).collect();
    let xs = range(pts.iter().map(|p| p.0));
    let ys = range(pts.iter().map(|p| p.1));
    let mut fig = Figure::new(padded(xs.0, xs.1), padded(ys.0, ys.1), "Quasimode residuals", "ℓ", "log10 residual");
    for &(x, y) in &pts {
        fig.circle("residual", x, y, 3.5);
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    // The criterion is stated for ln(residual); the plot axis is log10.
    let ln: Vec<f64> = y.iter().map(|v| v * std::f64::consts::LN_10).collect();
    match fit_line(&x, &ln) {
        Some(fit) => {
            let to10 = |v: f64| v / std::f64::consts::LN_10;
            fig.line("fit", (xs.0, to10(fit.eval(xs.0))), (xs.1, to10(fit.eval(xs.1))));
            fig.note(&format!("fitted slope d ln(residual)/dℓ = {:.4}", fit.slope));
        }
        None => fig.note("too few points for a fit"),
    }
    Ok(fig.finish())
}

fn color(t: f64) -> String {
    // Dark blue to yellow.
    let t = t.clamp(0.0, 1.0);
    let r = (30.0 + 225.0 * t) as u8;
    let g = (40.0 + 190.0 * t) as u8;
    let b = (110.0 - 80.0 * t) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn scan_heatmap(manifest: &RunManifest) -> Result<String, CliError> {
    let rows = load(manifest, tables::SCAN)?;
    let pts: Vec<(f64, f64, f64)> = rows.iter().map(|r| (f(&r[0]), f(&r[1]), f(&r[2]).log10())).collect();
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 1.0 };
    let (dx, dy) = (step(&xs), step(&ys));
    let xr = (xs.first().copied().unwrap_or(0.0) - 0.5 * dx, xs.last().copied().unwrap_or(1.0) + 0.5 * dx);
    let yr = (ys.first().copied().unwrap_or(0.0) - 0.5 * dy, ys.last().copied().unwrap_or(1.0) + 0.5 * dy);
    let (lo, hi) = range(pts.iter().map(|p| p.2));
    let mut fig = Figure::new(xr, yr, "Resolvent scan 1/σ_min", "Re z", "Im z");
    for &(x, y, v) in &pts {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        let fill = if v.is_finite() { color(t) } else { "#ffffff".to_string() };
        fig.rect("cell", x - 0.5 * dx, y - 0.5 * dy, x + 0.5 * dx, y + 0.5 * dy, &fill);
    }
    fig.note(&format!("log10(1/σ_min) from {} to {}", tick_label(lo), tick_label(hi)));
    Ok(fig.finish())
}

fn flow_portrait(manifest: &RunManifest) -> Result<String, CliError> {
    let files: Vec<&String> = manifest.outputs.iter().filter(|o| o.starts_with("flow/seed_")).collect();
    if files.is_empty() {
        return Err(CliError::MissingStageOutput("no trajectory files among the run's outputs".into()));
    }
    let h = manifest.horizon.ok_or_else(|| CliError::MissingStageOutput("horizon data".into()))?;
    let delta = manifest.config.grid.delta_factor * h.r_plus;
    let mut curves = Vec::new();
    for rel in &files {
        let (_, rows) = read_csv(&manifest.output_dir.join(rel))?;
        let mut pts: Vec<(f64, f64, f64)> = rows
            .iter()
            .map(|r| {
                let (xr, xt, xp) = (f(&r[3]), f(&r[4]), f(&r[5]));
                let bracket = (1.0 + xr * xr + xt * xt + xp * xp).sqrt();
                (f(&r[0]), f(&r[1]), xr / bracket)
            })
            .filter(|p| p.1.is_finite() && p.2.is_finite())
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let stride = pts.len().div_ceil(400).max(1);
        let thin: Vec<(f64, f64)> = pts.iter().step_by(stride).chain(pts.last()).map(|p| (p.1, p.2)).collect();
        curves.push((rel.contains("backward"), thin));
    }
    let xr = padded(h.r_plus - delta, h.r_plus + delta);
    let mut fig = Figure::new(xr, (-1.1, 1.1), "Characteristic flow near the horizon", "r", "ξ_r / ⟨ξ⟩");
    fig.line("horizon", (h.r_plus, -1.1), (h.r_plus, 1.1));
    fig.line("inner-edge", (h.r_plus - delta, -1.1), (h.r_plus - delta, 1.1));
    for (backward, pts) in &curves {
        fig.polyline(if *backward { "trajectory backward" } else { "trajectory" }, pts);
        if pts.len() >= 3 {
            let m = pts.len() / 2;
            let dir = (pts[m + 1].0 - pts[m - 1].0, pts[m + 1].1 - pts[m - 1].1);
            fig.arrow("arrow", pts[m], dir);
        }
    }
    // L₊ sits at fiber infinity over r₊ with ξ_r > 0; the flow leaves it.
    fig.circle("radial-set", h.r_plus, 1.0, 4.5);
    let d = 0.25 * delta;
    fig.arrow("source-arrow", (h.r_plus - d, 0.97), (-1.0, 0.0));
    fig.arrow("source-arrow", (h.r_plus + d, 0.97), (1.0, 0.0));
    fig.text("label", h.r_plus + 0.05 * delta, 0.86, "L₊ (source)");
    fig.note(&format!("{} trajectories on Σ₊", curves.len()));
    Ok(fig.finish())
}

/// Draw `kind` from the run described by `manifest` into `<output_dir>/plots/<kind>.svg`.
pub fn plot(manifest: &RunManifest, kind: PlotKind) -> Result<PathBuf, CliError> {
    let svg = match kind {
        PlotKind::Spectrum => spectrum(manifest)?,
        PlotKind::ResidualTrend => residual_trend(manifest)?,
        PlotKind::ScanHeatmap => scan_heatmap(manifest)?,
        PlotKind::FlowPortrait => flow_portrait(manifest)?,
    };
    let dir = manifest.output_dir.join("plots");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{}.svg", kind.as_str()));
    std::fs::write(&path, svg)?;
    Ok(path)
}

/// Plot path for `kind` under `dir`.
pub fn plot_path(dir: &Path, kind: PlotKind) -> PathBuf {
    dir.join("plots").join(format!("{}.svg", kind.as_str()))
}
