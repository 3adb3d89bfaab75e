//! Minimal SVG line plots for quick-look output from the CLI and examples.
//!
//! Deliberately small: axes, optional log scales, up to a handful of
//! polyline series. Not a plotting library.

use std::io::Write;

use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One polyline.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

/// Plot configuration.
pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series<'a>>,
}

fn fmt(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.1e}")
    }
}

impl<'a> Plot<'a> {
    /// Render the plot as an SVG document.
    pub fn render<W: Write>(&self, mut out: W) -> Result<()> {
        let map = |v: f64, log: bool| if log { v.ln() } else { v };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y) in s.points {
                if (self.log_x && x <= 0.0) || (self.log_y && y <= 0.0) {
                    continue;
                }
                xs.push(map(x, self.log_x));
                ys.push(map(y, self.log_y));
            }
        }
        if xs.is_empty() {
            return Err(Error::config("no plottable points"));
        }
        let (x_min, x_max) = bounds(&xs);
        let (y_min, y_max) = bounds(&ys);
        let to_px = |x: f64, y: f64| {
            let px = MARGIN + (x - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
            let py = HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);
            (px, py)
        };

        writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
        )?;
        writeln!(
            out,
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
        )?;
        // axes
        let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
        writeln!(
            out,
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>",
            WIDTH - MARGIN
        )?;
        writeln!(
            out,
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{MARGIN}\" stroke=\"black\"/>"
        )?;
        // tick labels (ends only; quick-look output)
        let unmap = |v: f64, log: bool| if log { v.exp() } else { v };
        writeln!(
            out,
            "<text x=\"{x0}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            y0 + 20.0,
            fmt(unmap(x_min, self.log_x))
        )?;
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            WIDTH - MARGIN,
            y0 + 20.0,
            fmt(unmap(x_max, self.log_x))
        )?;
        writeln!(
            out,
            "<text x=\"{}\" y=\"{y0}\" text-anchor=\"end\">{}</text>",
            x0 - 8.0,
            fmt(unmap(y_min, self.log_y))
        )?;
        writeln!(
            out,
            "<text x=\"{}\" y=\"{MARGIN}\" text-anchor=\"end\">{}</text>",
            x0 - 8.0,
            fmt(unmap(y_max, self.log_y))
        )?;
        writeln!(
            out,
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
            WIDTH / 2.0,
            xml_escape(self.title)
        )?;
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            WIDTH / 2.0,
            HEIGHT - 12.0,
            xml_escape(self.x_label)
        )?;
        writeln!(
            out,
            "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>",
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            xml_escape(self.y_label)
        )?;
        for (idx, s) in self.series.iter().enumerate() {
            let color = COLORS[idx % COLORS.len()];
            let mut path = String::new();
            for &(x, y) in s.points {
                if (self.log_x && x <= 0.0) || (self.log_y && y <= 0.0) {
                    continue;
                }
                let (px, py) = to_px(map(x, self.log_x), map(y, self.log_y));
                if path.is_empty() {
                    path.push_str(&format!("M{px:.2},{py:.2}"));
                } else {
                    path.push_str(&format!(" L{px:.2},{py:.2}"));
                }
            }
            writeln!(
                out,
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>"
            )?;
            writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
                WIDTH - MARGIN - 140.0,
                MARGIN + 18.0 * (idx as f64 + 1.0),
                xml_escape(s.label)
            )?;
        }
        writeln!(out, "</svg>")?;
        Ok(())
    }
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
