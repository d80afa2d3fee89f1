//! Minimal SVG emission for log-log sweep plots: a frame, the fitted line
//! and the measured points, written as plain path/line/text elements.

/// Render a log-log plot of (eps, g) pairs with the fitted slope in the
/// caption. Zero entries are skipped (they sit below the floor).
pub fn log_log_plot(eps: &[f64], g: &[f64], slope: f64, title: &str) -> String {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(g)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&e, &v)| (e.ln(), v.ln()))
        .collect();
    let (w, h, m) = (480.0, 360.0, 48.0);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"black\"/>\n",
        w - 2.0 * m,
        h - 2.0 * m
    ));
    svg.push_str(&format!(
        "<text x=\"{m}\" y=\"24\" font-size=\"14\">{title} (slope {slope:.3})</text>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">log eps</text>\n",
        w / 2.0 - 24.0,
        h - 12.0
    ));
    if pts.len() >= 2 {
        let (x0, x1) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.0), b.max(p.0))
            });
        let (y0, y1) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.1), b.max(p.1))
            });
        let (xs, ys) = ((x1 - x0).max(1e-12), (y1 - y0).max(1e-12));
        let map = |p: &(f64, f64)| {
            (
                m + (p.0 - x0) / xs * (w - 2.0 * m),
                h - m - (p.1 - y0) / ys * (h - 2.0 * m),
            )
        };
        let mut path = String::from("M");
        for (i, p) in pts.iter().enumerate() {
            let (px, py) = map(p);
            if i > 0 {
                path.push_str(" L");
            }
            path.push_str(&format!(" {px:.2} {py:.2}"));
        }
        svg.push_str(&format!(
            "<path d=\"{path}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n"
        ));
        for p in &pts {
            let (px, py) = map(p);
            svg.push_str(&format!(
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"crimson\"/>\n"
            ));
        }
    } else {
        svg.push_str(&format!(
            "<text x=\"{m}\" y=\"{}\" font-size=\"12\">all values below the \
             measurement floor</text>\n",
            h / 2.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
