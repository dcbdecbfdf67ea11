//! Memoized depth-first search over goal subsets (`DFS_DP`) and the shared
//! local-planner engine that also drives the one-buffer extension.
//!
//! A local planner runs from an arrangement `from` toward a target
//! arrangement. Every object not yet at its target sits at a fixed pose, so
//! a node is identified by the set of objects already moved to target and,
//! when a perturbation is active, by whether the perturbed object currently
//! rests in its buffer.

use crate::instance::{Arrangement, Instance, PoseLabel};
use crate::labels::LabelSet;
use crate::region_graph::{GraphError, RegionGraph, Walk};
use crate::solution::{Move, Solution};
use std::collections::HashMap;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("arrangement is not part of the tree")]
    KeyAbsent,
    #[error("buffer {0} is already occupied")]
    BufferOccupied(PoseLabel),
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
    #[error("too many objects for a bitmask key ({0} > 64)")]
    TooManyObjects(usize),
}

/// Wall-clock budget checked cooperatively by the planners.
#[derive(Clone, Copy, Debug)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Self(None)
    }

    pub fn after(d: Duration) -> Self {
        Self(Instant::now().checked_add(d))
    }

    pub fn after_secs(s: f64) -> Self {
        Self::after(Duration::from_secs_f64(s))
    }

    #[inline]
    pub fn expired(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}

/// Walks found so far, per `(object, from, to)` query.
#[derive(Clone, Debug)]
pub struct PathDictionary {
    entries: HashMap<(usize, PoseLabel, PoseLabel), Vec<Walk>>,
    enabled: bool,
    /// Number of `rg_dfs` invocations.
    pub searches: usize,
    /// Queries answered from stored walks.
    pub hits: usize,
}

impl Default for PathDictionary {
    fn default() -> Self {
        Self::new()
    }
}

impl PathDictionary {
    pub fn new() -> Self {
        Self {
            entries: HashMap::new(),
            enabled: true,
            searches: 0,
            hits: 0,
        }
    }

    /// A dictionary that never answers from storage.
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::new()
        }
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn walks(&self) -> impl Iterator<Item = (&(usize, PoseLabel, PoseLabel), &Walk)> {
        self.entries
            .iter()
            .flat_map(|(k, ws)| ws.iter().map(move |w| (k, w)))
    }

    /// First stored walk whose interference avoids `occupied`, else a fresh
    /// `rg_dfs` result (stored on success).
    pub fn lookup_or_search(
        &mut self,
        g: &RegionGraph,
        moving: usize,
        from: PoseLabel,
        to: PoseLabel,
        occupied: &LabelSet,
    ) -> Result<Option<Walk>, GraphError> {
        let key = (moving, from, to);
        if self.enabled {
            if let Some(w) = self
                .entries
                .get(&key)
                .and_then(|ws| ws.iter().find(|w| w.interference.is_disjoint(occupied)))
            {
                self.hits += 1;
                return Ok(Some(w.clone()));
            }
        }
        self.searches += 1;
        let found = g.rg_dfs(from, to, occupied)?;
        if let (true, Some(w)) = (self.enabled, &found) {
            self.entries.entry(key).or_default().push(w.clone());
        }
        Ok(found)
    }
}

/// Moving `object` to `buffer` as an intermediate stop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perturbation {
    pub object: usize,
    pub buffer: PoseLabel,
}

/// Local node key: bit `i` of `mask` is set once object `i` is at target;
/// `at_buffer` marks the perturbed object resting in its buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ArrangementKey {
    pub mask: u64,
    pub at_buffer: bool,
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub key: ArrangementKey,
    pub arrangement: Arrangement,
    pub parent: Option<(usize, Move)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlannerStatus {
    /// The target arrangement is in the tree.
    Reached,
    /// Every accessible node was expanded without reaching the target.
    Exhausted,
    /// Stopped early; the tree is partial.
    DeadlineExceeded,
}

/// Search tree of one local-planner run, rooted at its `from` arrangement.
#[derive(Clone, Debug)]
pub struct MonotoneTree {
    pub nodes: Vec<TreeNode>,
    index: HashMap<ArrangementKey, usize>,
    pub target: Arrangement,
    pub perturbation: Option<Perturbation>,
    pub status: PlannerStatus,
    /// Number of recursive expansions performed.
    pub expansions: usize,
}

impl MonotoneTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn reached(&self) -> bool {
        self.status == PlannerStatus::Reached
    }

    pub fn node(&self, key: &ArrangementKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn contains(&self, a: &Arrangement) -> bool {
        self.nodes.iter().any(|n| &n.arrangement == a)
    }

    pub fn target_key(&self) -> ArrangementKey {
        ArrangementKey {
            mask: full_mask(self.target.len()),
            at_buffer: false,
        }
    }

    pub fn target_node(&self) -> Option<usize> {
        self.node(&self.target_key())
    }

    /// Moves along the parent links from the root to `node`.
    pub fn moves_to(&self, node: usize) -> Vec<Move> {
        let mut moves = Vec::new();
        let mut cur = node;
        while let Some((parent, m)) = &self.nodes[cur].parent {
            moves.push(m.clone());
            cur = *parent;
        }
        moves.reverse();
        moves
    }

    pub fn extract_solution(
        &self,
        inst: &Instance,
        g: &RegionGraph,
        key: &ArrangementKey,
    ) -> Result<Solution, PlanError> {
        let node = self.node(key).ok_or(PlanError::KeyAbsent)?;
        Ok(Solution::from_moves(
            inst,
            g,
            &self.target,
            self.moves_to(node),
        )?)
    }
}

#[inline]
fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

struct LocalPlanner<'a> {
    inst: &'a Instance,
    g: &'a RegionGraph,
    dict: &'a mut PathDictionary,
    deadline: Deadline,
    pert: Option<Perturbation>,
    tree: MonotoneTree,
    full: u64,
}

impl LocalPlanner<'_> {
    /// Next pose of `o` in node `node`, `None` when `o` is done.
    fn next_pose(&self, key: ArrangementKey, o: usize) -> Option<(PoseLabel, ArrangementKey)> {
        if key.mask & (1 << o) != 0 {
            return None;
        }
        let to_target = ArrangementKey {
            mask: key.mask | (1 << o),
            at_buffer: key.at_buffer,
        };
        match self.pert {
            Some(p) if p.object == o => {
                if key.at_buffer {
                    Some((
                        self.tree.target.get(o),
                        ArrangementKey {
                            mask: key.mask | (1 << o),
                            at_buffer: false,
                        },
                    ))
                } else {
                    Some((
                        p.buffer,
                        ArrangementKey {
                            mask: key.mask,
                            at_buffer: true,
                        },
                    ))
                }
            }
            _ => Some((self.tree.target.get(o), to_target)),
        }
    }

    /// Returns `true` when the search must stop (target reached or deadline).
    fn dfs(&mut self, node: usize) -> Result<bool, PlanError> {
        self.tree.expansions += 1;
        if self.deadline.expired() {
            self.tree.status = PlannerStatus::DeadlineExceeded;
            return Ok(true);
        }
        let key = self.tree.nodes[node].key;
        let arrangement = self.tree.nodes[node].arrangement.clone();
        for o in 0..arrangement.len() {
            let Some((dest, new_key)) = self.next_pose(key, o) else {
                continue;
            };
            if self.tree.index.contains_key(&new_key) || arrangement.holder_of(dest).is_some() {
                continue;
            }
            let occupied = arrangement.occupied_except(self.inst, o);
            let from = arrangement.get(o);
            let Some(walk) = self
                .dict
                .lookup_or_search(self.g, o, from, dest, &occupied)?
            else {
                continue;
            };
            let child = self.tree.nodes.len();
            self.tree.nodes.push(TreeNode {
                key: new_key,
                arrangement: arrangement.with(o, dest),
                parent: Some((
                    node,
                    Move {
                        object: o,
                        from,
                        to: dest,
                        walk,
                    },
                )),
            });
            self.tree.index.insert(new_key, child);
            if new_key.mask == self.full && !new_key.at_buffer {
                self.tree.status = PlannerStatus::Reached;
                return Ok(true);
            }
            if self.dfs(child)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Runs the local planner from `from` toward `to`, optionally with a
/// mandatory buffer visit.
pub(crate) fn run_local_planner(
    inst: &Instance,
    g: &RegionGraph,
    from: &Arrangement,
    to: &Arrangement,
    pert: Option<Perturbation>,
    dict: &mut PathDictionary,
    deadline: Deadline,
) -> Result<MonotoneTree, PlanError> {
    let n = from.len();
    if n > 64 {
        return Err(PlanError::TooManyObjects(n));
    }
    let mut mask = 0u64;
    for i in 0..n {
        if from.get(i) == to.get(i) {
            mask |= 1 << i;
        }
    }
    if let Some(p) = pert {
        if p.object >= n {
            return Err(PlanError::InvalidPerturbation(format!(
                "object {} out of range",
                p.object
            )));
        }
        if mask & (1 << p.object) != 0 {
            return Err(PlanError::InvalidPerturbation(format!(
                "object {} is already at its target",
                p.object
            )));
        }
        if p.buffer == to.get(p.object) {
            return Err(PlanError::InvalidPerturbation(
                "buffer is the object's own target".into(),
            ));
        }
        if from.labels().contains(&p.buffer) {
            return Err(PlanError::BufferOccupied(p.buffer));
        }
        g.pose_region(p.buffer)?;
    }
    let root_key = ArrangementKey {
        mask,
        at_buffer: false,
    };
    let mut tree = MonotoneTree {
        nodes: vec![TreeNode {
            key: root_key,
            arrangement: from.clone(),
            parent: None,
        }],
        index: HashMap::from([(root_key, 0)]),
        target: to.clone(),
        perturbation: pert,
        status: PlannerStatus::Exhausted,
        expansions: 0,
    };
    let full = full_mask(n);
    if mask == full {
        tree.status = PlannerStatus::Reached;
        return Ok(tree);
    }
    let mut planner = LocalPlanner {
        inst,
        g,
        dict,
        deadline,
        pert,
        tree,
        full,
    };
    planner.dfs(0)?;
    Ok(planner.tree)
}

/// Monotone solver: every object not at target moves straight to it once.
pub fn dfs_dp(
    inst: &Instance,
    g: &RegionGraph,
    from: &Arrangement,
    to: &Arrangement,
    dict: &mut PathDictionary,
    deadline: Deadline,
) -> Result<MonotoneTree, PlanError> {
    run_local_planner(inst, g, from, to, None, dict, deadline)
}

/// Solves an instance monotonically from its root arrangement.
pub fn solve_monotone(
    inst: &Instance,
    g: &RegionGraph,
    deadline: Deadline,
) -> Result<(MonotoneTree, Option<Solution>), PlanError> {
    let mut dict = PathDictionary::new();
    let tree = dfs_dp(inst, g, &inst.root(), &inst.target(), &mut dict, deadline)?;
    let sol = if tree.reached() {
        Some(tree.extract_solution(inst, g, &tree.target_key())?)
    } else {
        None
    };
    Ok((tree, sol))
}
