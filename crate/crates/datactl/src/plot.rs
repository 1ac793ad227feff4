//! Static SVG line charts for KL time series.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Horizontal reference line, e.g. a threshold.
pub struct Level<'a> {
    pub name: &'a str,
    pub value: f64,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Plots each series against its index. Non-finite points break the line.
pub fn line_chart(title: &str, y_label: &str, series: &[Series<'_>], levels: &[Level<'_>]) -> String {
    let finite = series
        .iter()
        .flat_map(|s| s.values.iter())
        .chain(levels.iter().map(|l| &l.value))
        .copied()
        .filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    lo = lo.min(0.0);
    if hi - lo <= 0.0 {
        hi = lo + 1.0;
    }
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0).max(2);
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let px = |i: usize| MARGIN + pw * i as f64 / (n - 1) as f64;
    let py = |v: f64| MARGIN + ph * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{m},{m} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for (v, anchor_y) in [(lo, HEIGHT - MARGIN), (hi, MARGIN)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            MARGIN - 4.0,
            anchor_y + 4.0,
            v
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">window</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    for l in levels.iter().filter(|l| l.value.is_finite()) {
        let y = py(l.value);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#888" stroke-dasharray="4 3"/><text x="{}" y="{:.2}" fill="#555">{}</text>"##,
            WIDTH - MARGIN,
            WIDTH - MARGIN - 60.0,
            y - 3.0,
            escape(l.name)
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (i, v) in s.values.iter().enumerate() {
            if v.is_finite() {
                let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { 'L' } else { 'M' }, px(i), py(*v));
                pen_down = true;
            } else {
                pen_down = false;
            }
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (k + 1) as f64,
            escape(s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_split_the_path() {
        let v = [0.1, f64::NAN, 0.3, 0.2];
        let svg = line_chart("kl", "nats", &[Series { name: "a<b", values: &v }], &[Level { name: "theta", value: 0.25 }]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        let path = svg.lines().find(|l| l.contains("stroke-width")).unwrap();
        assert_eq!(path.matches('M').count(), 2);
    }

    #[test]
    fn empty_series_still_renders() {
        let svg = line_chart("empty", "nats", &[], &[]);
        assert!(svg.contains("</svg>"));
    }
}
