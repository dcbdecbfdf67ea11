//! Static SVG rendering of instances, region decompositions and solutions.

use crate::geometry::Position;
use crate::instance::Instance;
use crate::region_graph::RegionGraph;
use crate::solution::SolutionFile;
use std::fmt::Write;

#[derive(Clone, Copy, Debug)]
pub struct SvgLayers {
    pub regions: bool,
    pub poses: bool,
    pub paths: bool,
}

impl Default for SvgLayers {
    fn default() -> Self {
        Self {
            regions: true,
            poses: true,
            paths: true,
        }
    }
}

/// Long side of the drawing in pixels.
const CANVAS_PX: f64 = 800.0;

const PATH_COLORS: [&str; 8] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324",
];

/// Fill for a region overlapping `k` poses: white for none, darker blue as
/// `k` grows.
fn region_fill(k: usize) -> String {
    let t = (k.min(8) as f64) / 8.0;
    let shade = |free: f64, full: f64| (free + (full - free) * t).round() as u8;
    format!(
        "rgb({},{},{})",
        shade(255.0, 40.0),
        shade(255.0, 70.0),
        shade(255.0, 160.0)
    )
}

struct Canvas {
    height: f64,
    out: String,
}

impl Canvas {
    /// World y grows upward; SVG y grows downward.
    fn y(&self, y: f64) -> f64 {
        self.height - y
    }

    fn disc(&mut self, p: &Position, r: f64, style: &str) {
        let _ = writeln!(
            self.out,
            r#"<circle cx="{:.4}" cy="{:.4}" r="{:.4}" {style}/>"#,
            p.x,
            self.y(p.y),
            r
        );
    }

    fn label(&mut self, p: &Position, size: f64, text: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{:.4}" y="{:.4}" font-size="{:.4}" text-anchor="middle" dominant-baseline="central">{text}</text>"#,
            p.x,
            self.y(p.y),
            size
        );
    }
}

/// Renders a standalone SVG 1.1 document.
pub fn render(
    inst: &Instance,
    graph: Option<&RegionGraph>,
    solution: Option<&SolutionFile>,
    layers: SvgLayers,
) -> String {
    let (w, h) = (inst.workspace.width, inst.workspace.height);
    let scale = CANVAS_PX / w.max(h);
    let r = inst.radius;
    let stroke = r / 15.0;
    let mut c = Canvas {
        height: h,
        out: String::new(),
    };
    let _ = writeln!(c.out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.0}" height="{:.0}" viewBox="0 0 {w} {h}">"#,
        w * scale,
        h * scale
    );
    let _ = writeln!(
        c.out,
        r##"<rect id="workspace" x="0" y="0" width="{w}" height="{h}" fill="#ffffff" stroke="#000000" stroke-width="{stroke:.4}"/>"##
    );
    if let (true, Some(g)) = (layers.regions, graph) {
        let grid = &g.grid;
        let _ = writeln!(c.out, r#"<g id="regions" stroke="none">"#);
        for row in 0..grid.rows {
            let mut col = 0;
            while col < grid.cols {
                let k = g.regions[g.cell_region(grid.cell_index(col, row))]
                    .interference
                    .len();
                let mut end = col + 1;
                while end < grid.cols
                    && g.regions[g.cell_region(grid.cell_index(end, row))]
                        .interference
                        .len()
                        == k
                {
                    end += 1;
                }
                if k > 0 {
                    let x0 = grid.bounds.min_x + col as f64 * grid.cell_w;
                    let y1 = grid.bounds.min_y + (row + 1) as f64 * grid.cell_h;
                    let _ = writeln!(
                        c.out,
                        r#"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="{}"/>"#,
                        x0,
                        c.y(y1),
                        (end - col) as f64 * grid.cell_w,
                        grid.cell_h,
                        region_fill(k)
                    );
                }
                col = end;
            }
        }
        let _ = writeln!(c.out, "</g>");
    }
    if layers.poses {
        let font = r * 0.8;
        let _ = writeln!(c.out, r#"<g id="poses">"#);
        for (k, b) in inst.buffers.iter().enumerate() {
            c.disc(
                b,
                r,
                &format!(
                    r##"fill="none" stroke="#808080" stroke-width="{stroke:.4}" stroke-dasharray="{:.4}""##,
                    stroke * 3.0
                ),
            );
            c.label(b, font * 0.7, &format!("b{k}"));
        }
        for (i, g) in inst.goals.iter().enumerate() {
            c.disc(
                g,
                r,
                &format!(r##"fill="none" stroke="#d62728" stroke-width="{stroke:.4}""##),
            );
            c.label(g, font, &format!("g{i}"));
        }
        for (i, s) in inst.starts.iter().enumerate() {
            c.disc(
                s,
                r,
                &format!(
                    r##"fill="#1f77b4" fill-opacity="0.5" stroke="#1f77b4" stroke-width="{stroke:.4}""##
                ),
            );
            c.label(s, font, &format!("s{i}"));
        }
        let _ = writeln!(c.out, "</g>");
    }
    if let (true, Some(sol)) = (layers.paths, solution) {
        let _ = writeln!(c.out, r#"<g id="paths" fill="none">"#);
        for (k, a) in sol.actions.iter().enumerate() {
            let color = PATH_COLORS[a.object % PATH_COLORS.len()];
            let mut points = String::new();
            for p in &a.polyline {
                let _ = write!(points, "{:.4},{:.4} ", p[0], c.y(p[1]));
            }
            let _ = writeln!(
                c.out,
                r#"<polyline points="{}" stroke="{color}" stroke-width="{:.4}"/>"#,
                points.trim_end(),
                stroke * 2.0
            );
            if let Some(mid) = a.polyline.get(a.polyline.len() / 2) {
                let _ = writeln!(
                    c.out,
                    r#"<text x="{:.4}" y="{:.4}" font-size="{:.4}" fill="{color}">{}</text>"#,
                    mid[0],
                    c.y(mid[1]),
                    r * 0.6,
                    k + 1
                );
            }
        }
        let _ = writeln!(c.out, "</g>");
    }
    c.out.push_str("</svg>\n");
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Workspace;
    use crate::monotone::{solve_monotone, Deadline};
    use crate::region_graph::GraphOptions;

    fn inst() -> Instance {
        Instance::new(
            Workspace::new(10.0, 10.0),
            0.5,
            vec![Position::new(2.0, 2.0), Position::new(2.0, 5.0)],
            vec![Position::new(8.0, 2.0), Position::new(8.0, 5.0)],
            vec![Position::new(5.0, 8.0)],
        )
        .unwrap()
    }

    #[test]
    fn instance_only_has_no_paths() {
        let i = inst();
        let g = RegionGraph::from_instance(&i, GraphOptions::default()).unwrap();
        let svg = render(&i, Some(&g), None, SvgLayers::default());
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains(r#"version="1.1""#));
        assert!(svg.contains(r#"<g id="regions""#));
        assert_eq!(svg.matches("<circle").count(), 5);
        assert!(!svg.contains("<polyline"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn one_polyline_per_action() {
        let i = inst();
        let g = RegionGraph::from_instance(&i, GraphOptions::default()).unwrap();
        let (_, sol) = solve_monotone(&i, &g, Deadline::none()).unwrap();
        let file = sol.unwrap().to_file();
        let svg = render(&i, Some(&g), Some(&file), SvgLayers::default());
        assert_eq!(svg.matches("<polyline").count(), file.actions.len());
    }

    #[test]
    fn fill_darkens_with_overlap() {
        assert_eq!(region_fill(0), "rgb(255,255,255)");
        assert_ne!(region_fill(1), region_fill(2));
    }
}
