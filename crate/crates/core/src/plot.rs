//! Standalone SVG output: a coverage map (stations, gateways and their
//! connections colored by SF) and an SF distribution bar chart.

use std::fmt::Write;

use crate::bench::SfHistogram;
use crate::graph::{PlacementSolution, VisibilityGraph};
use crate::radio::SpreadingFactor;
use crate::topo::Topology;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlotError {
    #[error("topology has {topology} nodes but the graph has {graph}")]
    GraphSize { topology: usize, graph: usize },
    #[error("solution refers to node {id} but the topology has {nodes} nodes")]
    UnknownNode { id: usize, nodes: usize },
    #[error("connection {0}-{1} is not an edge of the visibility graph")]
    MissingLink(usize, usize),
}

const SF_COLORS: [&str; 6] = [
    "#1a9850", "#91cf60", "#d9ef8b", "#fee08b", "#fc8d59", "#d73027",
];

pub fn sf_color(sf: SpreadingFactor) -> &'static str {
    SF_COLORS[sf.index()]
}

const MARGIN: f64 = 60.0;
const PLOT_WIDTH: f64 = 800.0;

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">
<rect class="background" x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    );
}

/// Maps area coordinates onto the canvas, y pointing up.
struct Frame {
    scale: f64,
    plot_height: f64,
}

impl Frame {
    fn new(area_width: f64, area_height: f64) -> Self {
        let w = if area_width > 0.0 { area_width } else { 1.0 };
        let h = if area_height > 0.0 { area_height } else { 1.0 };
        let scale = PLOT_WIDTH / w;
        Self {
            scale,
            plot_height: h * scale,
        }
    }

    fn x(&self, x: f64) -> f64 {
        MARGIN + x * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        MARGIN + self.plot_height - y * self.scale
    }
}

/// Coverage map of a solved topology.
///
/// One `point` glyph per node (gateways carry the extra class `gateway`) and
/// one `link` segment per connection.
pub fn coverage_map_svg(
    topology: &Topology,
    graph: &VisibilityGraph,
    solution: &PlacementSolution,
) -> Result<String, PlotError> {
    let n = topology.len();
    if graph.node_count() != n {
        return Err(PlotError::GraphSize {
            topology: n,
            graph: graph.node_count(),
        });
    }
    let ids = solution
        .gateways
        .iter()
        .chain(solution.connections.iter().flat_map(|(a, b)| [a, b]));
    if let Some(&id) = ids.into_iter().find(|&&id| id >= n) {
        return Err(PlotError::UnknownNode { id, nodes: n });
    }
    let mut links = Vec::with_capacity(solution.connections.len());
    for &(a, b) in &solution.connections {
        let sf = graph.link(a, b).ok_or(PlotError::MissingLink(a, b))?;
        links.push((a, b, sf));
    }

    // stretch to cover every node, including any outside the nominal area
    let area_w = topology
        .nodes()
        .iter()
        .map(|p| p.x)
        .fold(topology.width(), f64::max);
    let area_h = topology
        .nodes()
        .iter()
        .map(|p| p.y)
        .fold(topology.height(), f64::max);
    let min_x = topology.nodes().iter().map(|p| p.x).fold(0.0, f64::min);
    let min_y = topology.nodes().iter().map(|p| p.y).fold(0.0, f64::min);
    let frame = Frame::new(area_w - min_x, area_h - min_y);
    let width = PLOT_WIDTH + 2.0 * MARGIN;
    let height = frame.plot_height + 2.0 * MARGIN;

    let mut out = String::new();
    header(&mut out, width, height);
    axes(&mut out, &frame, area_w - min_x, area_h - min_y);

    let node = |id: usize| {
        let p = topology.nodes()[id];
        (frame.x(p.x - min_x), frame.y(p.y - min_y))
    };
    out.push_str("<g class=\"links\">\n");
    for (a, b, sf) in links {
        let (x1, y1) = node(a);
        let (x2, y2) = node(b);
        let _ = writeln!(
            out,
            r#"<line class="link sf{}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{}" stroke-width="1"/>"#,
            sf.value(),
            sf_color(sf)
        );
    }
    out.push_str("</g>\n<g class=\"nodes\">\n");
    let is_gateway = solution.gateway_mask(n);
    for (id, &gateway) in is_gateway.iter().enumerate() {
        let (cx, cy) = node(id);
        if gateway {
            let _ = writeln!(
                out,
                r#"<rect class="point gateway" x="{:.2}" y="{:.2}" width="8" height="8" fill="black"/>"#,
                cx - 4.0,
                cy - 4.0
            );
        } else {
            let _ = writeln!(
                out,
                r##"<circle class="point station" cx="{cx:.2}" cy="{cy:.2}" r="2" fill="#3060c0"/>"##
            );
        }
    }
    out.push_str("</g>\n");
    legend(&mut out, MARGIN + 10.0, 14.0);
    out.push_str("</svg>\n");
    Ok(out)
}

fn axes(out: &mut String, frame: &Frame, area_w: f64, area_h: f64) {
    let (x0, y0) = (frame.x(0.0), frame.y(0.0));
    let (x1, y1) = (frame.x(area_w), frame.y(area_h));
    let _ = writeln!(
        out,
        r#"<g class="axes" stroke="black" stroke-width="1">
<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>
<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>
</g>
<g class="ticks" font-family="sans-serif" font-size="11">"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.0}</text>"#,
            frame.x(t * area_w),
            y0 + 16.0,
            t * area_w
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.0}</text>"#,
            x0 - 6.0,
            frame.y(t * area_h) + 4.0,
            t * area_h
        );
    }
    out.push_str("</g>\n");
}

fn legend(out: &mut String, x: f64, y: f64) {
    out.push_str("<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n");
    for (i, sf) in SpreadingFactor::ALL.iter().enumerate() {
        let lx = x + i as f64 * 70.0;
        let _ = writeln!(
            out,
            r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="12" fill="{}"/><text x="{:.2}" y="{:.2}">{sf}</text>"#,
            y,
            sf_color(*sf),
            lx + 16.0,
            y + 10.0
        );
    }
    out.push_str("</g>\n");
}

/// Bar chart of SF fractions, one `bar` per spreading factor.
pub fn sf_histogram_svg(histogram: &SfHistogram) -> String {
    let plot_h = 300.0;
    let bar_w = 80.0;
    let gap = 20.0;
    let plot_w = 6.0 * (bar_w + gap) + gap;
    let width = plot_w + 2.0 * MARGIN;
    let height = plot_h + 2.0 * MARGIN;
    let base = MARGIN + plot_h;

    let mut out = String::new();
    header(&mut out, width, height);
    let _ = writeln!(
        out,
        r#"<g class="axes" stroke="black" stroke-width="1">
<line class="axis" x1="{MARGIN}" y1="{base}" x2="{:.2}" y2="{base}"/>
<line class="axis" x1="{MARGIN}" y1="{base}" x2="{MARGIN}" y2="{MARGIN}"/>
</g>"#,
        MARGIN + plot_w
    );
    out.push_str("<g class=\"bars\" font-family=\"sans-serif\" font-size=\"12\">\n");
    for sf in SpreadingFactor::ALL {
        let fraction = histogram.fraction(sf);
        let h = fraction * plot_h;
        let x = MARGIN + gap + sf.index() as f64 * (bar_w + gap);
        let _ = writeln!(
            out,
            r#"<rect class="bar sf{}" x="{x:.2}" y="{:.2}" width="{bar_w}" height="{h:.2}" fill="{}"/>"#,
            sf.value(),
            base - h,
            sf_color(sf)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{sf}</text><text x="{:.2}" y="{:.2}" text-anchor="middle">{:.1}%</text>"#,
            x + bar_w / 2.0,
            base + 18.0,
            x + bar_w / 2.0,
            (base - h - 6.0).max(MARGIN - 6.0),
            fraction * 100.0
        );
    }
    out.push_str("</g>\n");
    if histogram.is_empty() {
        let _ = writeln!(
            out,
            r#"<text class="note" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif">no stations: every node is a gateway</text>"#,
            width / 2.0,
            MARGIN / 2.0
        );
    }
    out.push_str("</svg>\n");
    out
}
