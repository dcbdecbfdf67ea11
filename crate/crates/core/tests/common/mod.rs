//! Shared corpus builders and brute-force oracles for the integration tests.
#![allow(dead_code)]

use disc_rearrange::geometry::discs_collide;
use disc_rearrange::instance::generate_instance;
use disc_rearrange::labels::LabelSet;
use disc_rearrange::region_graph::Grid;
use disc_rearrange::{GraphOptions, Instance, Position, RegionGraph, Workspace};

pub fn workspace() -> Workspace {
    Workspace::new(10.0, 10.0)
}

pub fn graph(inst: &Instance) -> RegionGraph {
    RegionGraph::from_instance(inst, GraphOptions::default()).unwrap()
}

pub fn graph_with_cell(inst: &Instance, cell: f64) -> RegionGraph {
    RegionGraph::from_instance(inst, GraphOptions::with_cell_size(cell)).unwrap()
}

/// Generated instances over every `(n, density)` pair, `per_pair` seeds each.
pub fn corpus(ns: &[usize], densities: &[f64], per_pair: u64, seed_base: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    for &n in ns {
        for &d in densities {
            for s in 0..per_pair {
                let seed = seed_base + 1000 * n as u64 + (d * 100.0) as u64 * 100_000 + s;
                if let Ok(inst) = generate_instance(n, d, workspace(), seed) {
                    out.push(inst);
                }
            }
        }
    }
    out
}

/// Monotone corpus: n in 3..=6 at densities 0.1 and 0.2, 25 seeds each.
pub fn small_corpus() -> Vec<Instance> {
    corpus(&[3, 4, 5, 6], &[0.1, 0.2], 25, 0)
}

/// Cell label computed from scratch: the union of the exact interference of
/// the poses inside the cell, or the interference of the cell center when
/// the cell holds no pose.
pub fn brute_force_cell_label(inst: &Instance, grid: &Grid, cell: usize) -> LabelSet {
    let poses = inst.poses();
    let (lo, hi) = grid.cell_rect(cell);
    let (col, row) = grid.cell_coords(cell);
    let inside: Vec<Position> = poses
        .iter()
        .map(|(_, p)| *p)
        .filter(|p| {
            let c = (((p.x - grid.bounds.min_x) / grid.cell_w).floor() as isize)
                .clamp(0, grid.cols as isize - 1) as usize;
            let r = (((p.y - grid.bounds.min_y) / grid.cell_h).floor() as isize)
                .clamp(0, grid.rows as isize - 1) as usize;
            c == col && r == row
        })
        .collect();
    let queries = if inside.is_empty() {
        vec![Position::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0)]
    } else {
        inside
    };
    let mut s = LabelSet::empty(poses.len());
    for (k, (_, p)) in poses.iter().enumerate() {
        if queries.iter().any(|q| discs_collide(q, p, inst.radius)) {
            s.insert(k);
        }
    }
    s
}

/// Whether the segment `a`-`b` passes through the open interior of the
/// axis-aligned rectangle `lo`-`hi` (Liang-Barsky clipping).
pub fn segment_hits_rect(a: &Position, b: &Position, lo: &Position, hi: &Position) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-dx, a.x - lo.x),
        (dx, hi.x - a.x),
        (-dy, a.y - lo.y),
        (dy, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q <= 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    t0 < t1 || (dx == 0.0 && dy == 0.0 && {
        a.x > lo.x && a.x < hi.x && a.y > lo.y && a.y < hi.y
    })
}

/// Cells whose interior a polyline crosses, by testing every cell in each
/// segment's bounding box.
pub fn brute_force_cells(grid: &Grid, polyline: &[Position]) -> Vec<usize> {
    let mut cells = Vec::new();
    let segments: Vec<(Position, Position)> = if polyline.len() == 1 {
        vec![(polyline[0], polyline[0])]
    } else {
        polyline.windows(2).map(|w| (w[0], w[1])).collect()
    };
    let col_of = |x: f64| {
        (((x - grid.bounds.min_x) / grid.cell_w).floor() as isize).clamp(0, grid.cols as isize - 1)
            as usize
    };
    let row_of = |y: f64| {
        (((y - grid.bounds.min_y) / grid.cell_h).floor() as isize).clamp(0, grid.rows as isize - 1)
            as usize
    };
    for (a, b) in segments {
        let (c0, c1) = (col_of(a.x.min(b.x)), col_of(a.x.max(b.x)));
        let (r0, r1) = (row_of(a.y.min(b.y)), row_of(a.y.max(b.y)));
        for row in r0..=r1 {
            for col in c0..=c1 {
                let cell = grid.cell_index(col, row);
                let (lo, hi) = grid.cell_rect(cell);
                if segment_hits_rect(&a, &b, &lo, &hi) {
                    cells.push(cell);
                }
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    cells
}

/// Interference of a polyline from brute-force traversal and labels.
pub fn brute_force_polyline_interference(
    inst: &Instance,
    grid: &Grid,
    polyline: &[Position],
) -> LabelSet {
    let mut s = LabelSet::empty(inst.num_labels());
    for c in brute_force_cells(grid, polyline) {
        s.union_with(&brute_force_cell_label(inst, grid, c));
    }
    s
}
