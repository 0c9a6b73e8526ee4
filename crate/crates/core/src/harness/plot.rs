//! Learning-curve figures as standalone SVG.
//!
//! Each seed's extrinsic returns are smoothed with a trailing moving average
//! over episodes and held constant between episode ends. Curves are sampled
//! on a common grid of global steps, from the first step at which every seed
//! has finished an episode to the last episode end of any seed; the band is
//! the cross-seed min/max at each grid step and the line is the mean.

use std::fmt::Write as _;

use super::run::EpisodeRecord;

pub const DEFAULT_GRID_POINTS: usize = 400;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub label: String,
    pub steps: Vec<f64>,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Trailing moving average; `window` 1 returns the input.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..xs.len())
        .map(|i| {
            let tail = &xs[(i + 1).saturating_sub(w)..=i];
            tail.iter().sum::<f64>() / tail.len() as f64
        })
        .collect()
}

/// Smoothed value of one seed at `step`: the latest episode ending at or before it.
fn value_at(steps: &[u64], smoothed: &[f64], step: f64) -> f64 {
    let k = steps.partition_point(|&s| (s as f64) <= step);
    smoothed[k - 1]
}

/// Cross-seed curve of one variant; `None` when any seed has no episodes.
pub fn learning_curve(label: &str, per_seed: &[Vec<EpisodeRecord>], window: usize, grid_points: usize) -> Option<LearningCurve> {
    if per_seed.is_empty() || per_seed.iter().any(|r| r.is_empty()) {
        return None;
    }
    let seeds: Vec<(Vec<u64>, Vec<f64>)> = per_seed
        .iter()
        .map(|recs| {
            let steps = recs.iter().map(|r| r.global_step).collect();
            let rets: Vec<f64> = recs.iter().map(|r| r.return_ext).collect();
            (steps, moving_average(&rets, window))
        })
        .collect();
    let start = seeds.iter().map(|(s, _)| s[0]).max().unwrap() as f64;
    let end = seeds.iter().map(|(s, _)| *s.last().unwrap()).max().unwrap() as f64;
    let n = if end > start { grid_points.max(2) } else { 1 };
    let mut curve = LearningCurve { label: label.to_string(), steps: vec![], mean: vec![], min: vec![], max: vec![] };
    for g in 0..n {
        let x = if n == 1 { start } else { start + (end - start) * g as f64 / (n - 1) as f64 };
        let vals: Vec<f64> = seeds.iter().map(|(s, v)| value_at(s, v, x)).collect();
        curve.steps.push(x);
        curve.mean.push(vals.iter().sum::<f64>() / vals.len() as f64);
        curve.min.push(vals.iter().cloned().fold(f64::INFINITY, f64::min));
        curve.max.push(vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    Some(curve)
}

/// Output of [`plot_learning_curves`]: the figure, the plotted data, and the
/// labels of record sets that were skipped because they had no episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub svg: String,
    pub curves: Vec<LearningCurve>,
    pub skipped: Vec<String>,
}

pub fn plot_learning_curves(sets: &[(String, Vec<Vec<EpisodeRecord>>)], window: usize) -> Figure {
    let mut curves = Vec::new();
    let mut skipped = Vec::new();
    for (label, recs) in sets {
        match learning_curve(label, recs, window, DEFAULT_GRID_POINTS) {
            Some(c) => curves.push(c),
            None => skipped.push(label.clone()),
        }
    }
    let svg = render_svg(&curves, window, &skipped);
    Figure { svg, curves, skipped }
}

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= n as f64).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1e4 {
        format!("{:.0}k", v / 1e3)
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub fn render_svg(curves: &[LearningCurve], window: usize, skipped: &[String]) -> String {
    let (w, h) = (800.0, 500.0);
    let (left, right, top, bottom) = (70.0, 180.0, 30.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let xs = curves.iter().flat_map(|c| c.steps.iter().copied());
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let ys = curves.iter().flat_map(|c| c.min.iter().chain(&c.max).copied());
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    x0 = x0.min(0.0);
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    for label in skipped {
        let _ = writeln!(s, "<!-- skipped {}: no episodes -->", escape(label));
    }
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in nice_ticks(x0, x1, 6) {
        let x = sx(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, top + ph, top + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, top + ph + 18.0, fmt_tick(t));
    }
    for t in nice_ticks(y0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, left - 8.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">global steps</text>"#, left + pw / 2.0, h - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">extrinsic return (moving average, window {window})</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut band = String::new();
        for (x, y) in c.steps.iter().zip(&c.max) {
            let _ = write!(band, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        for (x, y) in c.steps.iter().zip(&c.min).rev() {
            let _ = write!(band, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.trim_end());
        let line: Vec<String> = c.steps.iter().zip(&c.mean).map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, line.join(" "));
        let ly = top + 10.0 + 20.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&c.label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
