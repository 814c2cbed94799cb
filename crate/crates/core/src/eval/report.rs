use std::fmt::Write as _;

/// One labelled value trace for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSeries {
    pub label: String,
    pub values: Vec<f64>,
}

/// `t,value` rows with 1-based t.
pub fn trace_csv(values: &[f64]) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{v}", t + 1);
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Static line chart of value traces against time.
pub fn trace_svg(title: &str, series: &[TraceSeries]) -> String {
    let (w, h, pad) = (640.0, 400.0, 48.0);
    let t_max = series.iter().map(|s| s.values.len()).max().unwrap_or(2).max(2) as f64;
    let finite = series.iter().flat_map(|s| &s.values).copied().filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((0.0f64, 1.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let margin = 0.05 * (hi - lo);
    lo -= margin;
    hi += margin;
    let x = |t: usize| pad + (w - 2.0 * pad) * t as f64 / (t_max - 1.0);
    let y = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<polyline points="{pad},{pad} {pad},{b} {r},{b}" fill="none" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    );
    if lo < 0.0 && hi > 0.0 {
        let _ = writeln!(svg, r#"<line x1="{pad}" y1="{z:.2}" x2="{r}" y2="{z:.2}" stroke="gray" stroke-dasharray="4 4"/>"#, z = y(0.0), r = w - pad);
    }
    for (label, v) in [(format!("{lo:.2}"), lo), (format!("{hi:.2}"), hi)] {
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#, pad - 4.0, y(v) + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">t</text>"#, w / 2.0, h - 12.0);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(t, &v)| format!("{:.2},{:.2}", x(t), y(v)))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, points.join(" "));
        let ly = pad + 16.0 * i as f64;
        let _ = writeln!(svg, r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#, w - pad - 140.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        assert_eq!(trace_csv(&[0.0, 0.5]), "t,value\n1,0\n2,0.5\n");
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let s = trace_svg(
            "a < b",
            &[
                TraceSeries { label: "success".into(), values: vec![0.0, 0.4, 1.0] },
                TraceSeries { label: "failure".into(), values: vec![0.0, -0.2, 0.1] },
            ],
        );
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("stroke-width=\"2\"").count(), 2);
        assert!(s.contains("a &lt; b"));
    }
}
