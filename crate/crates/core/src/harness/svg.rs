//! Deterministic SVG plots of streamlines, islands and critical points.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use crate::field::ScalarField;
use crate::topology::{trace_level_set, Contour, CriticalKind, CriticalPoint, IslandReport};

pub const WIDTH: f64 = 960.0;
pub const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 20.0;
pub const DEFAULT_LEVELS: usize = 20;
const BOUNDARY_SAMPLES: usize = 512;

struct View {
    y_lo: f64,
    y_hi: f64,
}

impl View {
    fn px(&self, x: f64) -> f64 {
        MARGIN + x / TAU * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        MARGIN + (self.y_hi - y) / (self.y_hi - self.y_lo) * (HEIGHT - 2.0 * MARGIN)
    }
}

/// Equally spaced interior levels of a field.
pub fn default_levels(field: &ScalarField, count: usize) -> Vec<f64> {
    let (lo, hi) = field.min_max();
    (0..count).map(|k| lo + (k as f64 + 0.5) * (hi - lo) / count as f64).collect()
}

fn polyline(out: &mut String, view: &View, pts: &[(f64, f64)], style: &str) {
    if pts.len() < 2 {
        return;
    }
    out.push_str("<polyline points=\"");
    for (k, &(x, y)) in pts.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{:.2},{:.2}", view.px(x), view.py(y));
    }
    let _ = writeln!(out, "\" {style}/>");
}

/// Draw a contour with x wrapped into one period, breaking the line at the seam.
fn wrapped_contour(out: &mut String, view: &View, c: &Contour, style: &str) {
    let mut run: Vec<(f64, f64)> = Vec::new();
    let mut last_x: Option<f64> = None;
    for &(x, y) in &c.points {
        let xw = x.rem_euclid(TAU);
        if let Some(px) = last_x {
            if (xw - px).abs() > TAU / 2.0 {
                polyline(out, view, &run, style);
                run.clear();
            }
        }
        run.push((xw, y));
        last_x = Some(xw);
    }
    polyline(out, view, &run, style);
}

fn island_fill(out: &mut String, view: &View, c: &Contour) {
    let (lo, hi) = c.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    // draw every periodic copy that meets the plotted period
    for k in -2i32..=2 {
        let shift = k as f64 * TAU;
        if hi + shift < 0.0 || lo + shift > TAU {
            continue;
        }
        out.push_str("<polygon points=\"");
        for (n, &(x, y)) in c.points.iter().enumerate() {
            if n > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.2},{:.2}", view.px(x + shift), view.py(y));
        }
        out.push_str("\" fill=\"#f4a261\" fill-opacity=\"0.6\" stroke=\"#e76f51\" stroke-width=\"1\"/>\n");
    }
}

fn marker(out: &mut String, view: &View, p: &CriticalPoint) {
    let (cx, cy) = (view.px(p.x), view.py(p.y));
    match p.kind {
        CriticalKind::Max => {
            let _ = writeln!(out, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4\" fill=\"#d62828\"/>");
        }
        CriticalKind::Min => {
            let _ = writeln!(out, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4\" fill=\"#1d4ed8\"/>");
        }
        CriticalKind::Saddle => {
            let _ = writeln!(
                out,
                "<path d=\"M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}\" stroke=\"#000\" stroke-width=\"2\"/>",
                cx - 4.0,
                cy - 4.0,
                cx + 4.0,
                cy + 4.0,
                cx - 4.0,
                cy + 4.0,
                cx + 4.0,
                cy - 4.0
            );
        }
        CriticalKind::Degenerate => {
            let _ = writeln!(out, "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"3\" height=\"3\" fill=\"#888\"/>", cx - 1.5, cy - 1.5);
        }
    }
}

/// Render walls, the given level curves, filled islands (largest probed level)
/// and critical points.
pub fn render_svg(field: &ScalarField, contours: &[Contour], islands: &[IslandReport], critical: &[CriticalPoint]) -> String {
    let shape = &field.grid.shape;
    let xs: Vec<f64> = (0..=BOUNDARY_SAMPLES).map(|k| TAU * k as f64 / BOUNDARY_SAMPLES as f64).collect();
    let bottom: Vec<(f64, f64)> = xs.iter().map(|&x| (x, shape.bottom(x))).collect();
    let top: Vec<(f64, f64)> = xs.iter().map(|&x| (x, shape.top(x))).collect();
    let y_lo = bottom.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_hi = top.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let view = View { y_lo, y_hi };
    let mut out = String::new();
    let _ = writeln!(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">");
    let _ = writeln!(
        out,
        "<!-- viewport: x in [0, 2pi] -> [{MARGIN}, {}], y in [{y_lo:.6}, {y_hi:.6}] -> [{}, {MARGIN}] -->",
        WIDTH - MARGIN,
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        out,
        "<clipPath id=\"period\"><rect x=\"{MARGIN}\" y=\"0\" width=\"{}\" height=\"{HEIGHT}\"/></clipPath>",
        WIDTH - 2.0 * MARGIN
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n<g clip-path=\"url(#period)\">\n");
    for isl in islands {
        if let Some(level) = isl.levels.last().or(isl.core.as_ref()) {
            island_fill(&mut out, &view, &level.contour);
        }
    }
    for c in contours {
        wrapped_contour(&mut out, &view, c, "fill=\"none\" stroke=\"#457b9d\" stroke-width=\"0.8\"");
    }
    out.push_str("</g>\n");
    polyline(&mut out, &view, &bottom, "fill=\"none\" stroke=\"#000\" stroke-width=\"1.5\"");
    polyline(&mut out, &view, &top, "fill=\"none\" stroke=\"#000\" stroke-width=\"1.5\"");
    for p in critical {
        marker(&mut out, &view, p);
    }
    out.push_str("</svg>\n");
    out
}

/// [`render_svg`] with the default family of level curves.
pub fn render_default(field: &ScalarField, islands: &[IslandReport], critical: &[CriticalPoint]) -> String {
    let contours: Vec<Contour> = default_levels(field, DEFAULT_LEVELS)
        .into_iter()
        .flat_map(|l| trace_level_set(field, l))
        .collect();
    render_svg(field, &contours, islands, critical)
}

pub fn emit_svg(field: &ScalarField, contours: &[Contour], islands: &[IslandReport], critical: &[CriticalPoint], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, render_svg(field, contours, islands, critical))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryShape, MappedGrid};
    use crate::topology::ContourKind;

    #[test]
    fn shear_draws_only_wrapping_curves() {
        let g = MappedGrid::build(&BoundaryShape::flat(), 32, 33).unwrap();
        let f = ScalarField::from_xy(&g, |_, y| 0.5 * (1.0 - y * y));
        let contours: Vec<Contour> = default_levels(&f, DEFAULT_LEVELS).into_iter().flat_map(|l| trace_level_set(&f, l)).collect();
        assert!(contours.iter().all(|c| c.kind == ContourKind::Wrapping));
        let svg = render_svg(&f, &contours, &[], &[]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("<polygon"));
        assert_eq!(svg, render_svg(&f, &contours, &[], &[]));
    }

    #[test]
    fn empty_plot_has_boundaries() {
        let g = MappedGrid::build(&BoundaryShape::flat(), 16, 17).unwrap();
        let svg = render_svg(&ScalarField::zeros(&g), &[], &[], &[]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("viewport"));
    }
}
