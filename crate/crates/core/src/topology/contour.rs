//! Marching squares on lattices that are periodic in x.
//!
//! Contours are returned as polylines in physical coordinates with an
//! unwrapped x coordinate, so the net x displacement of a closed loop tells
//! contractible loops (0) from loops that wrap the channel (±2pi).

use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::Serialize;

use super::interp::FieldInterp;
use crate::field::ScalarField;

/// Values on a lattice of `nx` periodic columns and `nr` rows.
///
/// Column `i` sits at `x[i]` (uniform, spacing `2pi / nx`); node `(i, r)` has
/// physical height `y[i * nr + r]`, increasing in `r`.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub nx: usize,
    pub nr: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub values: Vec<f64>,
}

impl Lattice {
    /// The grid nodes of a field.
    pub fn from_field(field: &ScalarField) -> Self {
        let g = &field.grid;
        let mut y = Vec::with_capacity(g.len());
        for i in 0..g.nx {
            for j in 0..g.ns {
                y.push(g.y(i, j));
            }
        }
        Lattice {
            nx: g.nx,
            nr: g.ns,
            x: g.x.clone(),
            y,
            values: field.values.clone(),
        }
    }

    /// Resample an interpolant on `nx` columns covering one period from `x0` and
    /// `nr` uniformly spaced heights in `[y_lo, y_hi]` (clipped to the walls).
    pub fn resample(interp: &FieldInterp, x0: f64, nx: usize, nr: usize, y_lo: f64, y_hi: f64) -> Self {
        let dx = TAU / nx as f64;
        let x: Vec<f64> = (0..nx).map(|i| x0 + i as f64 * dx).collect();
        let mut y = Vec::with_capacity(nx * nr);
        let mut values = Vec::with_capacity(nx * nr);
        let shape = &interp.grid.shape;
        for &xi in &x {
            let (lo, hi) = (y_lo.max(shape.bottom(xi)), y_hi.min(shape.top(xi)));
            for r in 0..nr {
                let yr = lo + (hi - lo) * r as f64 / (nr - 1) as f64;
                y.push(yr);
                values.push(interp.value(xi, interp.grid.s_at(xi, yr)));
            }
        }
        Lattice { nx, nr, x, y, values }
    }

    #[inline]
    fn v(&self, i: usize, r: usize) -> f64 {
        self.values[i * self.nr + r]
    }

    #[inline]
    fn yv(&self, i: usize, r: usize) -> f64 {
        self.y[i * self.nr + r]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourKind {
    /// Closed with zero net x displacement.
    Contractible,
    /// Closed after going once (or more) around the channel.
    Wrapping,
    /// Ends on the top or bottom edge of the lattice.
    Open,
}

#[derive(Debug, Clone, Serialize)]
pub struct Contour {
    pub level: f64,
    /// Polyline in physical coordinates with continuous (unwrapped) x.
    pub points: Vec<(f64, f64)>,
    pub kind: ContourKind,
    /// Net x displacement divided by 2pi.
    pub winding: i32,
}

impl Contour {
    pub fn is_closed(&self) -> bool {
        self.kind != ContourKind::Open
    }

    pub fn height(&self) -> f64 {
        let (lo, hi) = self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
        hi - lo
    }

    pub fn width(&self) -> f64 {
        let (lo, hi) = self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        hi - lo
    }

    /// Distance between the first and last point once the net displacement is removed.
    pub fn closure_gap(&self) -> f64 {
        let (Some(a), Some(b)) = (self.points.first(), self.points.last()) else {
            return 0.0;
        };
        (b.0 - a.0 - self.winding as f64 * TAU).hypot(b.1 - a.1)
    }

    /// Even-odd test for a contractible contour, trying the periodic copies of `x`.
    pub fn encloses(&self, x: f64, y: f64) -> bool {
        if self.kind != ContourKind::Contractible {
            return false;
        }
        let (lo, hi) = self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let mut xs = x - ((x - lo) / TAU).floor() * TAU;
        while xs <= hi {
            if point_in_polygon(&self.points, xs, y) {
                return true;
            }
            xs += TAU;
        }
        false
    }
}

fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    for k in 0..n {
        let (xa, ya) = poly[k];
        let (xb, yb) = poly[(k + 1) % n];
        if (ya > y) != (yb > y) {
            let xc = xa + (y - ya) / (yb - ya) * (xb - xa);
            if x < xc {
                inside = !inside;
            }
        }
    }
    inside
}

/// Edge identifiers: horizontal edges join `(i, r)` to `(i + 1, r)`, vertical
/// edges join `(i, r)` to `(i, r + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Crossing point of `level` on an edge, x measured from the column `i` of the cell
/// that owns the segment (so a right edge of the last column sits at `x + 2pi`).
fn crossing(lat: &Lattice, level: f64, e: Edge, cell_i: usize) -> (f64, f64) {
    let dx = TAU / lat.nx as f64;
    let xbase = lat.x[cell_i];
    match e {
        Edge::H(i, r) => {
            let i1 = (i + 1) % lat.nx;
            let (v0, v1) = (lat.v(i, r), lat.v(i1, r));
            let t = (level - v0) / (v1 - v0);
            let (y0, y1) = (lat.yv(i, r), lat.yv(i1, r));
            (xbase + t * dx, y0 + t * (y1 - y0))
        }
        Edge::V(i, r) => {
            let (v0, v1) = (lat.v(i, r), lat.v(i, r + 1));
            let t = (level - v0) / (v1 - v0);
            let x = if i == cell_i { xbase } else { xbase + dx };
            (x, lat.yv(i, r) + t * (lat.yv(i, r + 1) - lat.yv(i, r)))
        }
    }
}

/// Segments of one cell as pairs of edges; ambiguous saddle cells are resolved
/// by comparing the cell-centre average with the level.
fn cell_segments(lat: &Lattice, level: f64, i: usize, r: usize, out: &mut Vec<(Edge, Edge)>) {
    let i1 = (i + 1) % lat.nx;
    let corners = [lat.v(i, r), lat.v(i1, r), lat.v(i1, r + 1), lat.v(i, r + 1)];
    let above = corners.map(|v| v > level);
    let code = (above[0] as u8) | (above[1] as u8) << 1 | (above[2] as u8) << 2 | (above[3] as u8) << 3;
    let bottom = Edge::H(i, r);
    let right = Edge::V(i1, r);
    let top = Edge::H(i, r + 1);
    let left = Edge::V(i, r);
    match code {
        0 | 15 => {}
        1 | 14 => out.push((left, bottom)),
        2 | 13 => out.push((bottom, right)),
        3 | 12 => out.push((left, right)),
        4 | 11 => out.push((right, top)),
        6 | 9 => out.push((bottom, top)),
        7 | 8 => out.push((left, top)),
        5 | 10 => {
            let centre = 0.25 * corners.iter().sum::<f64>();
            // corners 0 and 2 are diagonal; a centre on their side joins them through the middle
            let centre_like_0 = (centre > level) == above[0];
            if centre_like_0 {
                out.push((left, top));
                out.push((bottom, right));
            } else {
                out.push((left, bottom));
                out.push((right, top));
            }
        }
        _ => unreachable!(),
    }
}

/// All level curves of `level` on the lattice.
pub fn trace_lattice(lat: &Lattice, level: f64) -> Vec<Contour> {
    // adjacency: edge -> list of (other edge, owning cell column)
    let mut adj: HashMap<Edge, Vec<(Edge, usize)>> = HashMap::new();
    let mut segs = Vec::new();
    for i in 0..lat.nx {
        for r in 0..lat.nr - 1 {
            segs.clear();
            cell_segments(lat, level, i, r, &mut segs);
            for &(a, b) in &segs {
                adj.entry(a).or_default().push((b, i));
                adj.entry(b).or_default().push((a, i));
            }
        }
    }
    let mut keys: Vec<Edge> = adj.keys().copied().collect();
    keys.sort();
    let mut used: HashMap<(Edge, Edge, usize), bool> = HashMap::new();
    let take = |a: Edge, b: Edge, c: usize, used: &mut HashMap<(Edge, Edge, usize), bool>| -> bool {
        let key = if a < b { (a, b, c) } else { (b, a, c) };
        if used.contains_key(&key) {
            false
        } else {
            used.insert(key, true);
            true
        }
    };
    let mut contours = Vec::new();
    // open chains start at degree-one edges, then the remaining cycles
    let starts: Vec<Edge> = keys
        .iter()
        .copied()
        .filter(|e| adj[e].len() == 1)
        .chain(keys.iter().copied())
        .collect();
    for start in starts {
        let Some(&(first_next, first_cell)) = adj[&start].iter().find(|&&(b, c)| {
            let key = if start < b { (start, b, c) } else { (b, start, c) };
            !used.contains_key(&key)
        }) else {
            continue;
        };
        let open_start = adj[&start].len() == 1;
        let mut points = Vec::new();
        let p0 = crossing(lat, level, start, first_cell);
        points.push(p0);
        let mut x_unwrapped = p0.0;
        let mut current = start;
        let mut next = first_next;
        let mut cell = first_cell;
        let mut returned = false;
        loop {
            take(current, next, cell, &mut used);
            let a = crossing(lat, level, current, cell);
            let b = crossing(lat, level, next, cell);
            x_unwrapped += b.0 - a.0;
            points.push((x_unwrapped, b.1));
            if next == start {
                returned = true;
                break;
            }
            let Some(&(after, after_cell)) = adj[&next].iter().find(|&&(e, c)| {
                let key = if next < e { (next, e, c) } else { (e, next, c) };
                !used.contains_key(&key)
            }) else {
                break;
            };
            current = next;
            next = after;
            cell = after_cell;
        }
        let closed = returned && !open_start;
        let net = points.last().unwrap().0 - p0.0;
        let winding = (net / TAU).round() as i32;
        let kind = if !closed {
            ContourKind::Open
        } else if winding == 0 {
            ContourKind::Contractible
        } else {
            ContourKind::Wrapping
        };
        contours.push(Contour {
            level,
            points,
            kind,
            winding,
        });
    }
    contours
}

/// Level curves of a field on its own grid.
pub fn trace_level_set(field: &ScalarField, level: f64) -> Vec<Contour> {
    trace_lattice(&Lattice::from_field(field), level)
}
