//! Static circle diagrams of cores, multicones, invariant directions and generator actions.
//!
//! A point of P¹ at angle `θ ∈ [0, π)` is drawn at angle `2θ` on the circle, so the diagram is a
//! faithful picture of the cyclic order.

use hypercone::multicone::{ClosedArc, CoreSet};
use hypercone::sl2core::{classify, invariant_dirs};
use hypercone::symdyn::letter;
use hypercone::{Mat2, MatClass, MultiCone, ProjPoint};
use std::fmt::Write;

const SIZE: f64 = 480.0;
const CENTER: f64 = SIZE / 2.0;
const RADIUS: f64 = 150.0;
const CONE_RADIUS: f64 = 164.0;
const LABEL_RADIUS: f64 = 188.0;
const ARROW_RADIUS: f64 = 215.0;

fn xy(theta: f64, r: f64) -> (f64, f64) {
    let phi = 2.0 * theta;
    (CENTER + r * phi.cos(), CENTER - r * phi.sin())
}

fn arc_path(start: f64, len: f64, r: f64) -> String {
    let (x0, y0) = xy(start, r);
    if len <= 1e-12 {
        return format!("M {x0:.3} {y0:.3} L {x0:.3} {y0:.3}");
    }
    let (x1, y1) = xy(start + len, r);
    let large = if 2.0 * len > std::f64::consts::PI { 1 } else { 0 };
    format!("M {x0:.3} {y0:.3} A {r:.3} {r:.3} 0 {large} 0 {x1:.3} {y1:.3}")
}

/// Counts of the drawn elements, reported next to the diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct DiagramSummary {
    pub u_arcs: usize,
    pub s_arcs: usize,
    pub multicone_arcs: usize,
    pub points: usize,
    pub arrows: usize,
}

/// Render the diagram. Labels and arrows are placed at fixed radii, so equal inputs give equal
/// documents.
pub fn render(tuple: &[Mat2], cores: &CoreSet, cone: Option<&MultiCone>) -> (String, DiagramSummary) {
    let mut out = String::new();
    let mut summary = DiagramSummary { u_arcs: cores.u.len(), s_arcs: cores.s.len(), multicone_arcs: 0, points: 0, arrows: 0 };
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(
        out,
        r##"<defs><marker id="head" markerWidth="8" markerHeight="8" refX="6" refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#555"/></marker></defs>"##
    );
    let _ = writeln!(out, r##"<circle cx="{CENTER}" cy="{CENTER}" r="{RADIUS}" fill="none" stroke="#bbb" stroke-width="1"/>"##);
    if let Some(m) = cone {
        for a in m.arcs() {
            summary.multicone_arcs += 1;
            let d = arc_path(a.start.angle(), a.len(), CONE_RADIUS);
            let _ = writeln!(out, r##"<path class="multicone" d="{d}" fill="none" stroke="#999" stroke-width="3"/>"##);
        }
    }
    let mut draw_arcs = |arcs: &[ClosedArc], class: &str, colour: &str| {
        for (k, a) in arcs.iter().enumerate() {
            let d = arc_path(a.start, a.len, RADIUS);
            let _ = writeln!(
                out,
                r#"<path class="{class}" id="{class}{k}" d="{d}" fill="none" stroke="{colour}" stroke-width="6" stroke-linecap="round"/>"#
            );
        }
    };
    draw_arcs(&cores.u, "u-core", "#c0392b");
    draw_arcs(&cores.s, "s-core", "#2471a3");
    for (i, m) in tuple.iter().enumerate() {
        if classify(m) != MatClass::Hyperbolic {
            continue;
        }
        let Ok((u, s)) = invariant_dirs(m) else { continue };
        for (p, name, colour) in [(u, "u", "#c0392b"), (s, "s", "#2471a3")] {
            summary.points += 1;
            let (x, y) = xy(p.angle(), RADIUS);
            let (lx, ly) = xy(p.angle(), LABEL_RADIUS);
            let _ = writeln!(out, r#"<circle class="point" cx="{x:.3}" cy="{y:.3}" r="3.5" fill="{colour}"/>"#);
            let _ = writeln!(
                out,
                r#"<text x="{lx:.3}" y="{ly:.3}" font-size="12" text-anchor="middle" dominant-baseline="middle">{name}_{}</text>"#,
                letter(i)
            );
        }
        for a in &cores.u {
            let from = a.start + a.len / 2.0;
            let to = m.act(ProjPoint::new(from)).angle();
            let (x0, y0) = xy(from, RADIUS + 4.0);
            let (x1, y1) = xy(to, RADIUS + 4.0);
            let mid = from + hypercone::projgeom::fwd(from, to) / 2.0;
            let (cx, cy) = xy(mid, ARROW_RADIUS + 10.0 * i as f64);
            summary.arrows += 1;
            let _ = writeln!(
                out,
                r##"<path class="action" data-generator="{}" d="M {x0:.3} {y0:.3} Q {cx:.3} {cy:.3} {x1:.3} {y1:.3}" fill="none" stroke="#555" stroke-width="1" marker-end="url(#head)"/>"##,
                letter(i)
            );
        }
    }
    out.push_str("</svg>\n");
    (out, summary)
}
