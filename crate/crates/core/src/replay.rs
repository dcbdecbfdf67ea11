//! Independent replay of a solution file against its instance.
//!
//! Every intermediate arrangement is checked with exact disc geometry. A
//! path is accepted when every grid cell its polyline crosses is free of
//! the other objects: a cell holding instance poses is blocked by a disc
//! overlapping any of those poses, any other cell by a disc overlapping its
//! center.

use crate::geometry::{arrangement_feasible, discs_collide, Position};
use crate::instance::Instance;
use crate::region_graph::RegionGraph;
use crate::solution::{ActionKind, SolutionFile};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayError {
    #[error("action {action}: object {object} does not exist")]
    UnknownObject { action: usize, object: usize },
    #[error("action {action}: object {object} is not at the stated source")]
    WrongSource { action: usize, object: usize },
    #[error("action {action}: polyline does not join the source and destination")]
    DetachedPolyline { action: usize },
    #[error("action {action}: point outside the configuration space")]
    OutOfBounds { action: usize },
    #[error("action {action}: object {object} collides with object {other}")]
    PathCollision {
        action: usize,
        object: usize,
        other: usize,
    },
    #[error("action {action}: resulting arrangement overlaps")]
    Overlap { action: usize },
    #[error("action {action}: kind does not match destination")]
    WrongKind { action: usize },
    #[error("object {0} does not end at its goal")]
    NotAtGoal(usize),
    #[error("stated counts do not match the action list")]
    CountMismatch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    pub num_actions: usize,
    pub num_buffers: usize,
    /// Smallest distance between a moving center and another center along
    /// any polyline vertex or segment.
    pub min_clearance: f64,
}

const ENDPOINT_TOL: f64 = 1e-9;

fn same_point(a: &Position, b: &Position) -> bool {
    a.distance(b) <= ENDPOINT_TOL
}

fn segment_point_distance(a: &Position, b: &Position, q: &Position) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        (((q.x - a.x) * dx + (q.y - a.y) * dy) / len_sq).clamp(0.0, 1.0)
    };
    a.lerp(b, t).distance(q)
}

/// Replays `sol` from the start poses and checks it ends at the goals.
pub fn replay(
    inst: &Instance,
    g: &RegionGraph,
    sol: &SolutionFile,
) -> Result<ReplayReport, ReplayError> {
    let r = inst.radius;
    let bounds = inst.config_rect();
    let mut pose_cells: HashMap<usize, Vec<Position>> = HashMap::new();
    for (_, p) in inst.poses() {
        if let Ok(c) = g.grid.cell_of(&p) {
            pose_cells.entry(c).or_default().push(p);
        }
    }
    let blocks = |cell: usize, q: &Position| match pose_cells.get(&cell) {
        Some(ps) => ps.iter().any(|p| discs_collide(p, q, r)),
        None => discs_collide(&g.grid.cell_center(cell), q, r),
    };
    let mut positions = inst.starts.clone();
    let mut min_clearance = f64::INFINITY;
    for (k, a) in sol.actions.iter().enumerate() {
        let o = a.object;
        if o >= positions.len() {
            return Err(ReplayError::UnknownObject {
                action: k,
                object: o,
            });
        }
        let from = Position::from(a.from);
        let to = Position::from(a.to);
        if !same_point(&positions[o], &from) {
            return Err(ReplayError::WrongSource {
                action: k,
                object: o,
            });
        }
        let poly: Vec<Position> = a.polyline.iter().map(|&p| Position::from(p)).collect();
        match (poly.first(), poly.last()) {
            (Some(s), Some(e)) if same_point(s, &from) && same_point(e, &to) => {}
            _ => return Err(ReplayError::DetachedPolyline { action: k }),
        }
        if poly.iter().any(|p| !bounds.contains(p)) {
            return Err(ReplayError::OutOfBounds { action: k });
        }
        let cells = g.grid.traverse_polyline(&poly);
        for (j, q) in positions.iter().enumerate() {
            if j == o {
                continue;
            }
            if cells.iter().any(|&c| blocks(c, q)) {
                return Err(ReplayError::PathCollision {
                    action: k,
                    object: o,
                    other: j,
                });
            }
            let d = if poly.len() == 1 {
                poly[0].distance(q)
            } else {
                poly.windows(2)
                    .map(|s| segment_point_distance(&s[0], &s[1], q))
                    .fold(f64::INFINITY, f64::min)
            };
            min_clearance = min_clearance.min(d);
        }
        let at_goal = same_point(&to, &inst.goals[o]);
        if (a.kind == ActionKind::ToGoal) != at_goal {
            return Err(ReplayError::WrongKind { action: k });
        }
        positions[o] = to;
        if !arrangement_feasible(&positions, r, &bounds).unwrap_or(false) {
            return Err(ReplayError::Overlap { action: k });
        }
    }
    for (i, p) in positions.iter().enumerate() {
        if !same_point(p, &inst.goals[i]) {
            return Err(ReplayError::NotAtGoal(i));
        }
    }
    let num_buffers = sol
        .actions
        .iter()
        .filter(|a| a.kind == ActionKind::ToBuffer)
        .count();
    if sol.num_actions != sol.actions.len() || sol.num_buffers != num_buffers {
        return Err(ReplayError::CountMismatch);
    }
    Ok(ReplayReport {
        num_actions: sol.num_actions,
        num_buffers,
        min_clearance,
    })
}
