//! Standalone SVG scatter plot of a snapshot.
//!
//! Each pattern is drawn as a `+` at its wall-projected position with its
//! item list next to it, over a frame showing the unit square.

use std::fmt::Write;

use super::snapshot::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotOptions {
    /// Patterns younger than this are left out.
    pub min_age: u64,
    pub hide_singletons: bool,
    /// Side of the plotting area in pixels.
    pub size: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            min_age: 0,
            hide_singletons: true,
            size: 600.0,
        }
    }
}

const MARGIN: f64 = 40.0;
const ARM: f64 = 4.0;

pub fn render_plot(snapshot: &Snapshot, options: &PlotOptions) -> String {
    let side = options.size;
    let total = side + 2.0 * MARGIN;
    // y grows upwards in the model, downwards in SVG
    let px = |x: f64| MARGIN + x.clamp(0.0, 1.0) * side;
    let py = |y: f64| MARGIN + (1.0 - y.clamp(0.0, 1.0)) * side;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(svg, r#"<title>model at record {}</title>"#, snapshot.clock);
    let _ = writeln!(
        svg,
        r#"<rect width="{total}" height="{total}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<rect class="frame" x="{MARGIN}" y="{MARGIN}" width="{side}" height="{side}" fill="none" stroke="black"/>"#
    );
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{tick}</text>"#,
            px(tick),
            MARGIN + side + 15.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{tick}</text>"#,
            MARGIN - 5.0,
            py(tick) + 3.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{:.1}">record {}</text>"#,
        MARGIN - 12.0,
        snapshot.clock
    );

    for row in snapshot
        .rows
        .iter()
        .filter(|r| r.age >= options.min_age)
        .filter(|r| !(options.hide_singletons && r.items.len() == 1))
    {
        let (x, y) = (px(row.x), py(row.y));
        let _ = writeln!(
            svg,
            r#"<g class="pattern"><path d="M{:.2} {y:.2}H{:.2}M{x:.2} {:.2}V{:.2}" stroke="black"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            x - ARM,
            x + ARM,
            y - ARM,
            y + ARM,
            x + ARM + 2.0,
            y - ARM,
            row.items
        );
    }
    svg.push_str("</svg>\n");
    svg
}
