//! CSV tables and SVG plots.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use sburgers_core::analysis::{ErrorTable, RateFit};

/// Shortest round-trip decimal; scientific notation at or beyond 1e6 and at
/// or below 1e-4 in magnitude.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let a = x.abs();
    if a >= 1e6 || a <= 1e-4 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

pub fn errors_table(table: &ErrorTable) -> Table {
    let mut t = Table::new(&["resolution", "error", "ci_halfwidth", "M", "p"]);
    for r in &table.rows {
        t.push(vec![
            fmt_num(r.resolution),
            fmt_num(r.error),
            fmt_num(r.ci_half_width),
            r.samples.to_string(),
            fmt_num(r.moment),
        ]);
    }
    t
}

pub fn rates_table(fit: &RateFit) -> Table {
    let mut t = Table::new(&["slope", "stderr", "r2"]);
    t.push(vec![
        fmt_num(fit.slope),
        fmt_num(fit.slope_stderr),
        fmt_num(fit.r_squared),
    ]);
    t
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x.log10() - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y.log10() - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Log-log plot of an error table with its fitted line and a reference
/// slope anchored at the first row.
pub fn rate_plot(table: &ErrorTable, fit: Option<&RateFit>, guide: f64, xlabel: &str) -> String {
    let rows: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.error > 0.0 && r.error.is_finite() && r.resolution > 0.0)
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if rows.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{LEFT}" y="{TOP}">no positive errors to plot</text>"#
        );
        svg.push_str("</svg>\n");
        return svg;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.resolution.log10()).collect();
    let lo: Vec<f64> = rows
        .iter()
        .map(|r| {
            let l = r.error - r.ci_half_width;
            if l > 0.0 { l } else { r.error / 2.0 }.log10()
        })
        .collect();
    let hi: Vec<f64> = rows
        .iter()
        .map(|r| (r.error + r.ci_half_width).log10())
        .collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (xa, xb) = (min(&xs) - 0.1, max(&xs) + 0.1);
    let (ya, yb) = (min(&lo).floor(), max(&hi).ceil());
    let ax = Axes {
        x0: xa,
        x1: xb,
        y0: ya,
        y1: if yb > ya { yb } else { ya + 1.0 },
    };

    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<rect x="{l}" y="{t}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for e in (ax.y0 as i32)..=(ax.y1 as i32) {
        let y = ax.py(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{l}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            l - 6.0,
            y + 4.0
        );
    }
    for row in &rows {
        let x = ax.px(row.resolution);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            b + 18.0,
            fmt_num(row.resolution)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">strong error</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0
    );

    let line = |svg: &mut String, slope: f64, x_a: f64, y_a: f64, style: &str| {
        let (xl, xr) = (10f64.powf(ax.x0), 10f64.powf(ax.x1));
        let at = |x: f64| y_a * (x / x_a).powf(slope);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" {style}/>"#,
            ax.px(xl),
            ax.py(at(xl)),
            ax.px(xr),
            ax.py(at(xr))
        );
    };
    let _ = writeln!(
        svg,
        r#"<clipPath id="frame"><rect x="{l}" y="{t}" width="{:.2}" height="{:.2}"/></clipPath><g clip-path="url(#frame)">"#,
        r - l,
        b - t
    );
    let first = rows[0];
    line(
        &mut svg,
        guide,
        first.resolution,
        first.error,
        r##"stroke="#888" stroke-dasharray="6 4""##,
    );
    if let Some(fit) = fit {
        line(
            &mut svg,
            fit.slope,
            1.0,
            fit.intercept.exp2(),
            r##"stroke="#c33""##,
        );
    }
    for (row, (lo, hi)) in rows.iter().zip(lo.iter().zip(&hi)) {
        let x = ax.px(row.resolution);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><circle cx="{x:.2}" cy="{:.2}" r="3.5"/>"#,
            ax.py(10f64.powf(*lo)),
            ax.py(10f64.powf(*hi)),
            ax.py(row.error)
        );
    }
    svg.push_str("</g>\n");
    let mut legend = format!("guide slope {}", fmt_num(guide));
    if let Some(fit) = fit {
        let _ = write!(
            legend,
            "; fitted slope {:.3} ± {:.3}, R² {:.3}",
            fit.slope, fit.slope_stderr, fit.r_squared
        );
    }
    let _ = writeln!(svg, r#"<text x="{l}" y="{:.2}">{legend}</text>"#, t - 12.0);
    svg.push_str("</svg>\n");
    svg
}
