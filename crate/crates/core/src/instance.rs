//! Problem instances, arrangements and their JSON file format.

use crate::geometry::{arrangement_feasible, discs_collide, ConfigRect, Position, Workspace};
use crate::labels::LabelSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Per-position rejection-sampling budget used by [`generate_instance`].
pub const MAX_ATTEMPTS_PER_POSITION: usize = 2000;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid instance: {0}")]
    Validation(String),
    #[error("instance generation failed: {0}")]
    GenerationFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A labeled pose. Start and goal poses belong to an object; buffer slots
/// belong to nobody.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PoseLabel {
    Start(usize),
    Goal(usize),
    Buffer(usize),
}

impl PoseLabel {
    /// Owning object, `None` for buffer slots.
    pub fn object(&self) -> Option<usize> {
        match *self {
            PoseLabel::Start(i) | PoseLabel::Goal(i) => Some(i),
            PoseLabel::Buffer(_) => None,
        }
    }
}

impl fmt::Display for PoseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoseLabel::Start(i) => write!(f, "s{i}"),
            PoseLabel::Goal(i) => write!(f, "g{i}"),
            PoseLabel::Buffer(i) => write!(f, "b{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub workspace: Workspace,
    pub radius: f64,
    pub starts: Vec<Position>,
    pub goals: Vec<Position>,
    pub buffers: Vec<Position>,
}

impl Instance {
    pub fn new(
        workspace: Workspace,
        radius: f64,
        starts: Vec<Position>,
        goals: Vec<Position>,
        buffers: Vec<Position>,
    ) -> Result<Self, InstanceError> {
        let inst = Self {
            workspace,
            radius,
            starts,
            goals,
            buffers,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_buffers(mut self, buffers: Vec<Position>) -> Result<Self, InstanceError> {
        self.buffers = buffers;
        self.validate()?;
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.starts.len()
    }

    pub fn config_rect(&self) -> ConfigRect {
        self.workspace
            .config_rect(self.radius)
            .expect("validated instance has a nonempty configuration rectangle")
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let v = |m: String| Err(InstanceError::Validation(m));
        if !(self.workspace.width > 0.0 && self.workspace.height > 0.0) {
            return v("workspace dimensions must be positive".into());
        }
        if !(self.radius > 0.0) {
            return v("radius must be positive".into());
        }
        let Some(rect) = self.workspace.config_rect(self.radius) else {
            return v("workspace too small for the disc radius".into());
        };
        if self.starts.len() != self.goals.len() {
            return v(format!(
                "{} starts but {} goals",
                self.starts.len(),
                self.goals.len()
            ));
        }
        for (name, list) in [
            ("start", &self.starts),
            ("goal", &self.goals),
            ("buffer", &self.buffers),
        ] {
            if let Some((i, p)) = list.iter().enumerate().find(|(_, p)| !rect.contains(p)) {
                return v(format!("{name} {i} at ({}, {}) is out of bounds", p.x, p.y));
            }
        }
        for (name, list) in [("starts", &self.starts), ("goals", &self.goals)] {
            if !arrangement_feasible(list, self.radius, &rect).unwrap_or(false) {
                return v(format!("{name} do not form a feasible arrangement"));
            }
        }
        Ok(())
    }

    pub fn density(&self) -> f64 {
        density_of(self.n(), self.radius, &self.workspace)
    }

    #[inline]
    pub fn num_labels(&self) -> usize {
        2 * self.n() + self.buffers.len()
    }

    /// Dense index of a label: starts, then goals, then buffers.
    #[inline]
    pub fn label_index(&self, l: PoseLabel) -> usize {
        match l {
            PoseLabel::Start(i) => i,
            PoseLabel::Goal(i) => self.n() + i,
            PoseLabel::Buffer(k) => 2 * self.n() + k,
        }
    }

    pub fn label_at(&self, idx: usize) -> PoseLabel {
        let n = self.n();
        if idx < n {
            PoseLabel::Start(idx)
        } else if idx < 2 * n {
            PoseLabel::Goal(idx - n)
        } else {
            PoseLabel::Buffer(idx - 2 * n)
        }
    }

    pub fn pose(&self, l: PoseLabel) -> Position {
        match l {
            PoseLabel::Start(i) => self.starts[i],
            PoseLabel::Goal(i) => self.goals[i],
            PoseLabel::Buffer(k) => self.buffers[k],
        }
    }

    /// Every labeled pose in label-index order.
    pub fn poses(&self) -> Vec<(PoseLabel, Position)> {
        (0..self.num_labels())
            .map(|i| {
                let l = self.label_at(i);
                (l, self.pose(l))
            })
            .collect()
    }

    /// Label indices owned by object `i`.
    pub fn object_labels(&self, i: usize) -> LabelSet {
        LabelSet::from_indices(
            self.num_labels(),
            [
                self.label_index(PoseLabel::Start(i)),
                self.label_index(PoseLabel::Goal(i)),
            ],
        )
    }

    pub fn initial(&self) -> Arrangement {
        Arrangement::new((0..self.n()).map(PoseLabel::Start).collect())
    }

    pub fn target(&self) -> Arrangement {
        Arrangement::new((0..self.n()).map(PoseLabel::Goal).collect())
    }

    /// Objects whose start and goal coincide need no action.
    pub fn trivially_placed(&self, i: usize) -> bool {
        self.starts[i] == self.goals[i]
    }

    /// Initial arrangement with trivially placed objects already at goal.
    pub fn root(&self) -> Arrangement {
        Arrangement::new(
            (0..self.n())
                .map(|i| {
                    if self.trivially_placed(i) {
                        PoseLabel::Goal(i)
                    } else {
                        PoseLabel::Start(i)
                    }
                })
                .collect(),
        )
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            workspace: self.workspace,
            radius: self.radius,
            n: self.n(),
            starts: self.starts.iter().map(|&p| p.into()).collect(),
            goals: self.goals.iter().map(|&p| p.into()).collect(),
            buffers: self.buffers.iter().map(|&p| p.into()).collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| InstanceError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        if file.n != file.starts.len() || file.n != file.goals.len() {
            return Err(InstanceError::Validation(format!(
                "n = {} but {} starts and {} goals",
                file.n,
                file.starts.len(),
                file.goals.len()
            )));
        }
        Instance::new(
            file.workspace,
            file.radius,
            file.starts.into_iter().map(Position::from).collect(),
            file.goals.into_iter().map(Position::from).collect(),
            file.buffers.into_iter().map(Position::from).collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    workspace: Workspace,
    radius: f64,
    n: usize,
    starts: Vec<[f64; 2]>,
    goals: Vec<[f64; 2]>,
    #[serde(default)]
    buffers: Vec<[f64; 2]>,
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    Instance::from_json(&std::fs::read_to_string(path)?)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    std::fs::write(path, inst.to_json())?;
    Ok(())
}

pub fn density_of(n: usize, radius: f64, ws: &Workspace) -> f64 {
    n as f64 * PI * radius * radius / ws.area()
}

/// Disc radius giving `density` for `n` objects in `ws`.
pub fn radius_for_density(n: usize, density: f64, ws: &Workspace) -> f64 {
    (density * ws.area() / (n as f64 * PI)).sqrt()
}

/// Samples a random instance by per-arrangement rejection sampling.
pub fn generate_instance(
    n: usize,
    density: f64,
    workspace: Workspace,
    seed: u64,
) -> Result<Instance, InstanceError> {
    if n == 0 {
        return Err(InstanceError::GenerationFailure(
            "at least one object is required".into(),
        ));
    }
    if !(density > 0.0 && density < 0.9) {
        return Err(InstanceError::GenerationFailure(format!(
            "density {density} outside (0, 0.9)"
        )));
    }
    let radius = radius_for_density(n, density, &workspace);
    let rect = workspace.config_rect(radius).ok_or_else(|| {
        InstanceError::GenerationFailure("disc radius exceeds the workspace".into())
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = sample_arrangement(n, radius, &rect, &mut rng)
        .ok_or_else(|| InstanceError::GenerationFailure("no space left for a start".into()))?;
    let goals = sample_arrangement(n, radius, &rect, &mut rng)
        .ok_or_else(|| InstanceError::GenerationFailure("no space left for a goal".into()))?;
    Instance::new(workspace, radius, starts, goals, Vec::new())
}

/// Uniform point in `rect`.
pub fn sample_in(rect: &ConfigRect, rng: &mut impl Rng) -> Position {
    Position::new(
        rng.gen_range(rect.min_x..=rect.max_x),
        rng.gen_range(rect.min_y..=rect.max_y),
    )
}

fn sample_arrangement(
    n: usize,
    r: f64,
    rect: &ConfigRect,
    rng: &mut impl Rng,
) -> Option<Vec<Position>> {
    let mut out: Vec<Position> = Vec::with_capacity(n);
    for _ in 0..n {
        let p = (0..MAX_ATTEMPTS_PER_POSITION)
            .map(|_| sample_in(rect, rng))
            .find(|p| out.iter().all(|q| !discs_collide(p, q, r)))?;
        out.push(p);
    }
    Some(out)
}

/// Where every object currently sits, as pose labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arrangement {
    labels: Vec<PoseLabel>,
}

impl Arrangement {
    pub fn new(labels: Vec<PoseLabel>) -> Self {
        Self { labels }
    }

    #[inline]
    pub fn labels(&self) -> &[PoseLabel] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, i: usize) -> PoseLabel {
        self.labels[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, l: PoseLabel) {
        self.labels[i] = l;
    }

    pub fn with(&self, i: usize, l: PoseLabel) -> Self {
        let mut a = self.clone();
        a.labels[i] = l;
        a
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn at_goal(&self, i: usize) -> bool {
        self.labels[i] == PoseLabel::Goal(i)
    }

    pub fn objects_at_goal(&self) -> usize {
        (0..self.len()).filter(|&i| self.at_goal(i)).count()
    }

    pub fn holder_of(&self, l: PoseLabel) -> Option<usize> {
        self.labels.iter().position(|&x| x == l)
    }

    pub fn positions(&self, inst: &Instance) -> Vec<Position> {
        self.labels.iter().map(|&l| inst.pose(l)).collect()
    }

    /// Labels held by every object except `moving`.
    pub fn occupied_except(&self, inst: &Instance, moving: usize) -> LabelSet {
        let mut s = LabelSet::empty(inst.num_labels());
        for (j, &l) in self.labels.iter().enumerate() {
            if j != moving {
                s.insert(inst.label_index(l));
            }
        }
        s
    }

    /// Geometric feasibility plus at-most-one-object-per-label.
    pub fn is_feasible(&self, inst: &Instance) -> bool {
        let mut seen = std::collections::HashSet::new();
        if !self.labels.iter().all(|l| seen.insert(*l)) {
            return false;
        }
        arrangement_feasible(&self.positions(inst), inst.radius, &inst.config_rect())
            .unwrap_or(false)
    }
}
