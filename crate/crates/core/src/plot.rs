//! Minimal static SVG line plots for locus curves and convergence diagrams.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// Non-finite points break the line.
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, markers: false }
    }

    pub fn with_markers(mut self) -> Self {
        self.markers = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    log_x: bool,
    log_y: bool,
    origin_axes: bool,
    equal_aspect: bool,
    series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            origin_axes: false,
            equal_aspect: false,
            series: Vec::new(),
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn with_axes_through_origin(mut self) -> Self {
        self.origin_axes = true;
        self
    }

    pub fn with_equal_aspect(mut self) -> Self {
        self.equal_aspect = true;
        self
    }

    pub fn series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn transform(&self, (x, y): (f64, f64)) -> Option<(f64, f64)> {
        let x = if self.log_x { x.log10() } else { x };
        let y = if self.log_y { y.log10() } else { y };
        (x.is_finite() && y.is_finite()).then_some((x, y))
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in self.series.iter().flat_map(|s| s.points.iter()).filter_map(|p| self.transform(*p)) {
            b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        if self.origin_axes {
            b = (b.0.min(0.0), b.1.max(0.0), b.2.min(0.0), b.3.max(0.0));
        }
        let pad = |lo: f64, hi: f64| {
            let span = if hi > lo { hi - lo } else { 1.0 };
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        let (x0, x1) = pad(b.0, b.1);
        let (y0, y1) = pad(b.2, b.3);
        if self.equal_aspect {
            let sx = (x1 - x0) / (WIDTH - 2.0 * MARGIN);
            let sy = (y1 - y0) / (HEIGHT - 2.0 * MARGIN);
            let s = sx.max(sy);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            let hw = 0.5 * s * (WIDTH - 2.0 * MARGIN);
            let hh = 0.5 * s * (HEIGHT - 2.0 * MARGIN);
            return (cx - hw, cx + hw, cy - hh, cy + hh);
        }
        (x0, x1, y0, y1)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            MARGIN / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );

        for (value, log) in ticks(x0, x1, self.log_x) {
            let x = px(value);
            let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, HEIGHT - MARGIN, HEIGHT - MARGIN + 4.0);
            let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, HEIGHT - MARGIN + 18.0, tick_label(value, log));
        }
        for (value, log) in ticks(y0, y1, self.log_y) {
            let y = py(value);
            let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{MARGIN}" y2="{y:.2}" stroke="black"/>"#, MARGIN - 4.0);
            let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN - 6.0, y + 4.0, tick_label(value, log));
        }

        if self.origin_axes {
            if x0 < 0.0 && x1 > 0.0 {
                let x = px(0.0);
                let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{}" stroke="#888"/>"##, HEIGHT - MARGIN);
            }
            if y0 < 0.0 && y1 > 0.0 {
                let y = py(0.0);
                let _ = writeln!(svg, r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#888"/>"##, WIDTH - MARGIN);
            }
        }

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut segment: Vec<String> = Vec::new();
            let flush = |segment: &mut Vec<String>, svg: &mut String| {
                if segment.len() > 1 {
                    let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, segment.join(" "));
                }
                segment.clear();
            };
            for p in &s.points {
                match self.transform(*p) {
                    Some((x, y)) => {
                        segment.push(format!("{:.2},{:.2}", px(x), py(y)));
                        if s.markers {
                            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
                        }
                    }
                    None => flush(&mut segment, &mut svg),
                }
            }
            flush(&mut segment, &mut svg);
            let ly = MARGIN + 14.0 + 16.0 * i as f64;
            let lx = WIDTH - MARGIN - 120.0;
            let _ = writeln!(svg, r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#, ly - 4.0, lx + 20.0, ly - 4.0);
            let _ = writeln!(svg, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 26.0, escape(&s.label));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, bool)> {
    if log {
        let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
        return (a..=b).map(|e| (e as f64, true)).collect();
    }
    let raw = (hi - lo) / 5.0;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|s| *s >= raw)
        .unwrap_or(raw);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| (i as f64 * step, false)).collect()
}

fn tick_label(value: f64, log: bool) -> String {
    if log {
        format!("1e{}", value as i64)
    } else if value == 0.0 || (value.abs() >= 1e-3 && value.abs() < 1e4) {
        let s = format!("{value:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{value:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
