//! Solutions: ordered object actions with their realized paths, and the
//! solution file format.

use crate::geometry::Position;
use crate::instance::{Arrangement, Instance, PoseLabel};
use crate::region_graph::{GraphError, RegionGraph, Walk};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    ToGoal,
    ToBuffer,
}

/// One transfer of an object between two poses, before realization.
#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub object: usize,
    pub from: PoseLabel,
    pub to: PoseLabel,
    pub walk: Walk,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub object: usize,
    pub kind: ActionKind,
    pub from_label: PoseLabel,
    pub to_label: PoseLabel,
    pub from: Position,
    pub to: Position,
    pub walk: Walk,
    pub polyline: Vec<Position>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub actions: Vec<Action>,
    pub num_actions: usize,
    pub num_buffers: usize,
    pub time_s: f64,
    pub seed: u64,
}

impl Solution {
    /// Realizes each move's walk as a polyline between its pose centers.
    pub fn from_moves(
        inst: &Instance,
        g: &RegionGraph,
        target: &Arrangement,
        moves: Vec<Move>,
    ) -> Result<Self, GraphError> {
        let mut actions = Vec::with_capacity(moves.len());
        for m in moves {
            let from = inst.pose(m.from);
            let to = inst.pose(m.to);
            let polyline = g.walk_to_curve(&m.walk, Some(from), Some(to))?;
            let kind = if m.to == target.get(m.object) {
                ActionKind::ToGoal
            } else {
                ActionKind::ToBuffer
            };
            actions.push(Action {
                object: m.object,
                kind,
                from_label: m.from,
                to_label: m.to,
                from,
                to,
                walk: m.walk,
                polyline,
            });
        }
        let num_buffers = actions
            .iter()
            .filter(|a| a.kind == ActionKind::ToBuffer)
            .count();
        Ok(Self {
            num_actions: actions.len(),
            num_buffers,
            actions,
            time_s: 0.0,
            seed: 0,
        })
    }

    pub fn to_file(&self) -> SolutionFile {
        SolutionFile {
            actions: self
                .actions
                .iter()
                .map(|a| ActionRecord {
                    object: a.object,
                    kind: a.kind,
                    from: a.from.into(),
                    to: a.to.into(),
                    walk: a.walk.regions.clone(),
                    polyline: a.polyline.iter().map(|&p| p.into()).collect(),
                })
                .collect(),
            num_actions: self.num_actions,
            num_buffers: self.num_buffers,
            time_s: self.time_s,
            seed: self.seed,
        }
    }

    pub fn to_json(&self) -> String {
        self.to_file().to_json()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub object: usize,
    pub kind: ActionKind,
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub walk: Vec<usize>,
    pub polyline: Vec<[f64; 2]>,
}

/// On-disk form of a [`Solution`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub actions: Vec<ActionRecord>,
    pub num_actions: usize,
    pub num_buffers: usize,
    pub time_s: f64,
    pub seed: u64,
}

impl SolutionFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}
