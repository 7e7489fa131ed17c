//! Minimal self-contained SVG line charts: fixed canvas, axes with
//! ticks, line series with a legend, optional shaded bands, point
//! markers, and a reference diagonal. No external assets, so the files
//! render identically everywhere and diff cleanly.

use std::fs;
use std::path::Path;

use crate::error::Result;

pub const WIDTH: u32 = 640;
pub const HEIGHT: u32 = 480;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 48.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct LineSeries {
    label: String,
    x: Vec<f64>,
    y: Vec<f64>,
}

struct BandSeries {
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    color_slot: usize,
}

pub struct SvgPlot {
    title: String,
    x_label: String,
    y_label: String,
    x_range: Option<(f64, f64)>,
    y_range: Option<(f64, f64)>,
    diagonal: bool,
    lines: Vec<LineSeries>,
    bands: Vec<BandSeries>,
    markers: Vec<(f64, f64)>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        "0".to_string() // avoid "-0"
    } else {
        format!("{r}")
    }
}

impl SvgPlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            x_range: None,
            y_range: None,
            diagonal: false,
            lines: Vec::new(),
            bands: Vec::new(),
            markers: Vec::new(),
        }
    }

    /// Fix both axis ranges (otherwise they come from the data).
    pub fn with_ranges(mut self, x: (f64, f64), y: (f64, f64)) -> Self {
        self.x_range = Some(x);
        self.y_range = Some(y);
        self
    }

    /// Draw the y = x reference diagonal (chance line for ROC plots).
    pub fn with_diagonal(mut self) -> Self {
        self.diagonal = true;
        self
    }

    pub fn add_line(&mut self, label: &str, x: &[f64], y: &[f64]) {
        self.lines.push(LineSeries {
            label: label.to_string(),
            x: x.to_vec(),
            y: y.to_vec(),
        });
    }

    /// Shaded band tied to the color of the line added at `color_slot`
    /// (the index of an `add_line` call).
    pub fn add_band(&mut self, color_slot: usize, x: &[f64], lower: &[f64], upper: &[f64]) {
        self.bands.push(BandSeries {
            x: x.to_vec(),
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            color_slot,
        });
    }

    pub fn add_marker(&mut self, x: f64, y: f64) {
        self.markers.push((x, y));
    }

    fn data_range(&self) -> ((f64, f64), (f64, f64)) {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = xr;
        let mut feed = |x: &[f64], y: &[f64]| {
            for &v in x {
                if v.is_finite() {
                    xr.0 = xr.0.min(v);
                    xr.1 = xr.1.max(v);
                }
            }
            for &v in y {
                if v.is_finite() {
                    yr.0 = yr.0.min(v);
                    yr.1 = yr.1.max(v);
                }
            }
        };
        for l in &self.lines {
            feed(&l.x, &l.y);
        }
        for b in &self.bands {
            feed(&b.x, &b.lower);
            feed(&b.x, &b.upper);
        }
        for &(x, y) in &self.markers {
            feed(&[x], &[y]);
        }
        let fix = |r: (f64, f64)| -> (f64, f64) {
            if r.0 > r.1 {
                (0.0, 1.0)
            } else if r.0 == r.1 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                r
            }
        };
        (fix(xr), fix(yr))
    }

    pub fn render(&self) -> String {
        let (dxr, dyr) = self.data_range();
        let xr = self.x_range.unwrap_or(dxr);
        let yr = self.y_range.unwrap_or(dyr);
        let (x0, x1) = (xr.0, xr.1.max(xr.0 + f64::MIN_POSITIVE));
        let (y0, y1) = (yr.0, yr.1.max(yr.0 + f64::MIN_POSITIVE));
        let pw = WIDTH as f64 - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT as f64 - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |v: f64| MARGIN_LEFT + (v - x0) / (x1 - x0) * pw;
        let sy = |v: f64| HEIGHT as f64 - MARGIN_BOTTOM - (v - y0) / (y1 - y0) * ph;

        let mut s = String::with_capacity(16 * 1024);
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
        ));
        s.push_str(&format!(
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
            MARGIN_LEFT + pw / 2.0,
            escape(&self.title)
        ));

        // axes, ticks, grid
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let vx = x0 + t * (x1 - x0);
            let vy = y0 + t * (y1 - y0);
            let px = sx(vx);
            let py = sy(vy);
            s.push_str(&format!(
                "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>\n",
                sy(y0), sy(y1)
            ));
            s.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#dddddd\"/>\n",
                sx(x0), sx(x1)
            ));
            s.push_str(&format!(
                "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
                HEIGHT as f64 - MARGIN_BOTTOM + 16.0,
                fmt_tick(vx)
            ));
            s.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
                MARGIN_LEFT - 6.0,
                py + 4.0,
                fmt_tick(vy)
            ));
        }
        s.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT:.1}\" y=\"{MARGIN_TOP:.1}\" width=\"{pw:.1}\" height=\"{ph:.1}\" \
             fill=\"none\" stroke=\"black\"/>\n"
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
            MARGIN_LEFT + pw / 2.0,
            HEIGHT as f64 - 10.0,
            escape(&self.x_label)
        ));
        s.push_str(&format!(
            "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\" \
             transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
            MARGIN_TOP + ph / 2.0,
            MARGIN_TOP + ph / 2.0,
            escape(&self.y_label)
        ));

        if self.diagonal {
            s.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
                 stroke=\"#999999\" stroke-dasharray=\"5,4\"/>\n",
                sx(x0.max(y0)),
                sy(x0.max(y0)),
                sx(x1.min(y1)),
                sy(x1.min(y1))
            ));
        }

        for b in &self.bands {
            let color = PALETTE[b.color_slot % PALETTE.len()];
            let mut pts = String::new();
            for (x, y) in b.x.iter().zip(&b.upper) {
                pts.push_str(&format!("{:.2},{:.2} ", sx(*x), sy(*y)));
            }
            for (x, y) in b.x.iter().zip(&b.lower).rev() {
                pts.push_str(&format!("{:.2},{:.2} ", sx(*x), sy(*y)));
            }
            s.push_str(&format!(
                "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n",
                pts.trim_end()
            ));
        }

        for (slot, l) in self.lines.iter().enumerate() {
            let color = PALETTE[slot % PALETTE.len()];
            let pts: Vec<String> = l
                .x
                .iter()
                .zip(&l.y)
                .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                .collect();
            s.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>\n",
                pts.join(" ")
            ));
        }

        for &(x, y) in &self.markers {
            s.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"black\"/>\n",
                sx(x),
                sy(y)
            ));
        }

        // legend in the lower-right corner of the plot area
        if !self.lines.is_empty() {
            let lh = 17.0;
            let ly0 = HEIGHT as f64 - MARGIN_BOTTOM - 10.0 - lh * self.lines.len() as f64;
            for (slot, l) in self.lines.iter().enumerate() {
                let y = ly0 + lh * (slot as f64 + 0.5);
                let x = MARGIN_LEFT + pw - 180.0;
                s.push_str(&format!(
                    "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
                     stroke=\"{}\" stroke-width=\"2\"/>\n",
                    x + 22.0,
                    PALETTE[slot % PALETTE.len()]
                ));
                s.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
                    x + 28.0,
                    y + 4.0,
                    escape(&l.label)
                ));
            }
        }

        s.push_str("</svg>\n");
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}
