//! Small SVG renderers for confusion matrices and learning curves.

use std::fmt::Write;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Row-normalized confusion matrix as a heat map with cell values.
pub fn confusion_svg(labels: &[String], normalized: &[Vec<f64>], title: &str) -> String {
    let k = labels.len();
    let cell = 56.0;
    let left = 130.0;
    let top = 60.0;
    let w = left + cell * k as f64 + 20.0;
    let h = top + cell * k as f64 + 120.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#, w / 2.0, esc(title));
    for (g, row) in normalized.iter().enumerate() {
        for (p, &v) in row.iter().enumerate() {
            let x = left + cell * p as f64;
            let y = top + cell * g as f64;
            let shade = (255.0 * (1.0 - v.clamp(0.0, 1.0))).round() as u8;
            let fg = if v > 0.5 { "white" } else { "black" };
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="#ccc"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{fg}">{v:.2}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 6.0,
            top + cell * g as f64 + cell / 2.0 + 4.0,
            esc(&labels[g])
        );
    }
    for (p, l) in labels.iter().enumerate() {
        let x = left + cell * p as f64 + cell / 2.0;
        let y = top + cell * k as f64 + 8.0;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" transform="rotate(45 {x} {y})">{}</text>"#,
            esc(l)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">actual</text>"#,
        top + cell * k as f64 / 2.0,
        top + cell * k as f64 / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">predicted</text>"#,
        left + cell * k as f64 / 2.0,
        h - 10.0
    );
    s.push_str("</svg>\n");
    s
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

/// One line per series over x in (0, 1], y in percent.
pub fn curve_svg(xs: &[f64], series: &[(String, Vec<Option<f64>>)], title: &str) -> String {
    let (w, h) = (640.0, 400.0);
    let (l, r, t, b) = (50.0, 160.0, 40.0, 40.0);
    let px = |x: f64| l + x * (w - l - r);
    let py = |y: f64| h - b - y / 100.0 * (h - t - b);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#, (w - r + l) / 2.0, esc(title));
    let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, px(0.0), py(0.0), px(1.0), py(0.0));
    let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, px(0.0), py(0.0), px(0.0), py(100.0));
    for tick in (0..=100).step_by(20) {
        let y = py(tick as f64);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{tick}</text>"#, px(0.0) - 4.0, y + 4.0);
        let _ = writeln!(s, r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#eee"/>"##, px(0.0), px(1.0));
    }
    for &x in xs {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x}</text>"#, px(x), py(0.0) + 14.0);
    }
    for (i, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter_map(|(&x, y)| y.map(|y| format!("{:.1},{:.1}", px(x), py(y))))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        let ly = t + 16.0 * i as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, w - r + 10.0, ly);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - r + 24.0, ly + 9.0, esc(name));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">training fraction</text>"#, px(0.5), h - 6.0);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svgs_are_well_formed_enough() {
        let s = confusion_svg(&["A".into(), "B<".into()], &[vec![1.0, 0.0], vec![0.25, 0.75]], "t");
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("B&lt;") && s.contains("0.75"));
        let c = curve_svg(&[0.5, 1.0], &[("macro".into(), vec![Some(40.0), None])], "c");
        assert_eq!(c.matches("<polyline").count(), 1);
    }
}
