//! Static SVG scatter plots: three axis-aligned orthographic projections of
//! up to three clouds on shared axes.

use std::fmt::Write as _;

use deformnet::PointCloud;

const PANEL: f64 = 300.0;
const MARGIN: f64 = 24.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];
const VIEWS: [(&str, usize, usize); 3] = [("x-y", 0, 1), ("x-z", 0, 2), ("y-z", 1, 2)];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(clouds: &[(String, PointCloud)]) -> String {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, c) in clouds {
        for p in c.points() {
            for v in p.to_array() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let span = (hi - lo).max(1e-12);
    let to_px = |v: f64| (v - lo) / span * (PANEL - 2.0 * MARGIN) + MARGIN;

    let width = 3.0 * PANEL;
    let height = PANEL + 20.0 * clouds.len() as f64 + 10.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (v, (label, a, b)) in VIEWS.iter().enumerate() {
        let x0 = v as f64 * PANEL;
        let _ = writeln!(out, r#"<g transform="translate({x0},0)">"#);
        let _ = writeln!(
            out,
            r##"<rect x="{m}" y="{m}" width="{s}" height="{s}" fill="none" stroke="#999"/>"##,
            m = MARGIN,
            s = PANEL - 2.0 * MARGIN
        );
        let _ = writeln!(out, r#"<text x="{}" y="16" font-family="sans-serif" font-size="12">{label}</text>"#, MARGIN);
        for (i, (_, cloud)) in clouds.iter().enumerate() {
            let _ = writeln!(out, r#"<g fill="{}" fill-opacity="0.7">"#, COLORS[i % COLORS.len()]);
            for p in cloud.points() {
                let q = p.to_array();
                // SVG y grows downward.
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5"/>"#, to_px(q[*a]), PANEL - to_px(q[*b]));
            }
            out.push_str("</g>\n");
        }
        out.push_str("</g>\n");
    }
    for (i, (name, cloud)) in clouds.iter().enumerate() {
        let y = PANEL + 20.0 * i as f64 + 10.0;
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="5" fill="{}"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{} ({} points)</text>"#,
            MARGIN,
            y - 4.0,
            COLORS[i % COLORS.len()],
            MARGIN + 12.0,
            y,
            escape(name),
            cloud.len()
        );
    }
    out.push_str("</svg>\n");
    out
}
