//! One-buffer local planner (`EDFS_DP`) and the perturbation search that
//! drives it on non-monotone instances.
//!
//! The search tree is partitioned into super nodes: sets of arrangements
//! reachable by goal moves from a common root, where every root except the
//! initial arrangement is the result of moving an object into a buffer.
//! Expansion always launches the local planner from a super-node root.

use crate::geometry::discs_collide;
use crate::instance::{sample_in, Arrangement, Instance, PoseLabel};
use crate::monotone::{
    dfs_dp, run_local_planner, Deadline, MonotoneTree, PathDictionary, Perturbation, PlanError,
    PlannerStatus,
};
use crate::region_graph::RegionGraph;
use crate::solution::{Move, Solution};
use crate::Position;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet};
use std::time::Instant;

pub const DEFAULT_SAMPLES_PER_SLOT: usize = 100;

/// One-buffer extension of [`dfs_dp`]: `pert.object` must visit
/// `pert.buffer` before reaching its target; every other object moves
/// straight to target.
pub fn edfs_dp(
    inst: &Instance,
    g: &RegionGraph,
    from: &Arrangement,
    to: &Arrangement,
    pert: Perturbation,
    dict: &mut PathDictionary,
    deadline: Deadline,
) -> Result<MonotoneTree, PlanError> {
    run_local_planner(inst, g, from, to, Some(pert), dict, deadline)
}

/// Objects not at target at `current`, most constraining and constrained
/// first. An object is charged one point for every other such object whose
/// goal its current pose overlaps, and one for every such object whose
/// current pose overlaps its goal.
pub fn rank_perturbation_objects(
    inst: &Instance,
    current: &Arrangement,
    target: &Arrangement,
) -> Vec<usize> {
    let pending: Vec<usize> = (0..current.len())
        .filter(|&i| current.get(i) != target.get(i))
        .collect();
    let blocks = |j: usize, i: usize| {
        discs_collide(
            &inst.pose(current.get(i)),
            &inst.pose(target.get(j)),
            inst.radius,
        )
    };
    let mut scored: Vec<(usize, usize)> = pending
        .iter()
        .map(|&i| {
            let inner = pending.iter().filter(|&&j| j != i && blocks(j, i)).count();
            let outer = pending.iter().filter(|&&j| j != i && blocks(i, j)).count();
            (inner + outer, i)
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, i)| i).collect()
}

/// Number of starts, goals and already chosen buffers a disc at `p` overlaps.
fn overlap_score(inst: &Instance, chosen: &[Position], p: &Position) -> usize {
    inst.starts
        .iter()
        .chain(inst.goals.iter())
        .chain(chosen.iter())
        .filter(|q| discs_collide(p, q, inst.radius))
        .count()
}

/// Greedy buffer placement: each slot keeps the least-overlapping of
/// `samples_per_slot` uniform samples (first drawn wins ties).
pub fn generate_candidate_buffers(
    inst: &Instance,
    count: usize,
    samples_per_slot: usize,
    seed: u64,
) -> Vec<Position> {
    let rect = inst.config_rect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<Position> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best: Option<(usize, Position)> = None;
        for _ in 0..samples_per_slot.max(1) {
            let p = sample_in(&rect, &mut rng);
            let s = overlap_score(inst, &chosen, &p);
            if best.is_none_or(|(bs, _)| s < bs) {
                best = Some((s, p));
            }
        }
        chosen.push(best.unwrap().1);
    }
    chosen
}

/// Candidate buffer `k` overlaps no start or goal.
pub fn buffer_is_clean(inst: &Instance, k: usize) -> bool {
    let b = inst.buffers[k];
    inst.starts
        .iter()
        .chain(inst.goals.iter())
        .all(|q| !discs_collide(&b, q, inst.radius))
}

/// `inst` with `count` generated candidate buffers (default one per object)
/// when it carries none; otherwise an unchanged copy.
pub fn with_candidate_buffers(inst: &Instance, count: Option<usize>, seed: u64) -> Instance {
    if !inst.buffers.is_empty() {
        return inst.clone();
    }
    let buffers = generate_candidate_buffers(
        inst,
        count.unwrap_or(inst.n()).max(1),
        DEFAULT_SAMPLES_PER_SLOT,
        seed,
    );
    let mut out = inst.clone();
    out.buffers = buffers;
    out
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Try every object and buffer at every node, depth by depth.
    pub exhaustive: bool,
    pub max_objects_per_node: usize,
    pub max_buffers_per_object: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            exhaustive: false,
            max_objects_per_node: 5,
            max_buffers_per_object: 5,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn exhaustive() -> Self {
        Self {
            exhaustive: true,
            ..Self::default()
        }
    }
}

/// Buffer poses for perturbing `object` at `current`, in priority order:
/// clean candidate buffers reachable from the object's pose, starts of
/// objects already at goal, then unoccupied goals of other objects.
///
/// In exhaustive mode every unoccupied candidate buffer is listed (clean
/// ones first) without the reachability filter, and nothing is truncated.
pub fn rank_buffers(
    inst: &Instance,
    g: &RegionGraph,
    current: &Arrangement,
    target: &Arrangement,
    object: usize,
    config: &SearchConfig,
    dict: &mut PathDictionary,
) -> Result<Vec<PoseLabel>, PlanError> {
    let held: HashSet<PoseLabel> = current.labels().iter().copied().collect();
    let here = inst.pose(current.get(object));
    let mut out = Vec::new();
    let free_buffers = (0..inst.buffers.len()).filter(|k| !held.contains(&PoseLabel::Buffer(*k)));
    if config.exhaustive {
        let (clean, dirty): (Vec<usize>, Vec<usize>) =
            free_buffers.partition(|&k| buffer_is_clean(inst, k));
        out.extend(clean.into_iter().chain(dirty).map(PoseLabel::Buffer));
    } else {
        let occupied = current.occupied_except(inst, object);
        for k in free_buffers.filter(|&k| buffer_is_clean(inst, k)) {
            let b = PoseLabel::Buffer(k);
            if dict
                .lookup_or_search(g, object, current.get(object), b, &occupied)?
                .is_some()
            {
                out.push(b);
            }
        }
    }
    for j in 0..current.len() {
        let s = PoseLabel::Start(j);
        if j != object
            && current.get(j) == target.get(j)
            && !inst.trivially_placed(j)
            && !held.contains(&s)
            && s != target.get(object)
        {
            out.push(s);
        }
    }
    for j in 0..current.len() {
        let goal = target.get(j);
        if j != object && !held.contains(&goal) {
            out.push(goal);
        }
    }
    // A pose at the object's own position would be a zero-length move.
    out.retain(|&l| inst.pose(l) != here);
    if !config.exhaustive {
        out.truncate(config.max_buffers_per_object);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    pub arrangement: Arrangement,
    pub parent: Option<(usize, Move)>,
    pub super_node: usize,
}

#[derive(Clone, Debug)]
pub struct SuperNode {
    pub id: usize,
    pub root: usize,
    pub perturbation_count: usize,
    pub members: Vec<usize>,
}

/// Pending perturbations of a node, computed on first expansion.
#[derive(Clone, Debug, Default)]
struct Agenda {
    candidates: Option<Vec<Perturbation>>,
    tried: HashSet<Perturbation>,
}

impl Agenda {
    fn exhausted(&self) -> bool {
        self.candidates
            .as_ref()
            .is_some_and(|c| c.iter().all(|p| self.tried.contains(p)))
    }

    fn untried(&self) -> Vec<Perturbation> {
        self.candidates
            .iter()
            .flatten()
            .filter(|p| !self.tried.contains(p))
            .copied()
            .collect()
    }
}

/// Arrangement-space tree grown by the perturbation search.
#[derive(Clone, Debug)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
    pub supers: Vec<SuperNode>,
    index: HashMap<Arrangement, usize>,
    agendas: HashMap<usize, Agenda>,
    target: Arrangement,
}

impl SearchTree {
    pub fn new(root: Arrangement, target: Arrangement) -> Self {
        Self {
            nodes: vec![SearchNode {
                arrangement: root.clone(),
                parent: None,
                super_node: 0,
            }],
            supers: vec![SuperNode {
                id: 0,
                root: 0,
                perturbation_count: 0,
                members: vec![0],
            }],
            index: HashMap::from([(root, 0)]),
            agendas: HashMap::new(),
            target,
        }
    }

    pub fn node_of(&self, a: &Arrangement) -> Option<usize> {
        self.index.get(a).copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds the nodes of a local tree launched at `launch`. Arrangements
    /// already present keep their first-seen node. Returns the global id of
    /// every local node.
    pub fn merge(&mut self, launch: usize, local: &MonotoneTree) -> Vec<usize> {
        debug_assert_eq!(self.nodes[launch].arrangement, local.root().arrangement);
        let mut map = vec![launch; local.nodes.len()];
        for (idx, node) in local.nodes.iter().enumerate().skip(1) {
            if let Some(existing) = self.node_of(&node.arrangement) {
                map[idx] = existing;
                continue;
            }
            let (lp, mv) = node.parent.as_ref().expect("non-root local node has a parent");
            let parent = map[*lp];
            let parent_super = self.nodes[parent].super_node;
            let id = self.nodes.len();
            let super_node = if mv.to == self.target.get(mv.object) {
                parent_super
            } else {
                let sid = self.supers.len();
                self.supers.push(SuperNode {
                    id: sid,
                    root: id,
                    perturbation_count: self.supers[parent_super].perturbation_count + 1,
                    members: Vec::new(),
                });
                sid
            };
            self.supers[super_node].members.push(id);
            self.nodes.push(SearchNode {
                arrangement: node.arrangement.clone(),
                parent: Some((parent, mv.clone())),
                super_node,
            });
            self.index.insert(node.arrangement.clone(), id);
            map[idx] = id;
        }
        map
    }

    pub fn moves_to(&self, node: usize) -> Vec<Move> {
        let mut moves = Vec::new();
        let mut cur = node;
        while let Some((p, m)) = &self.nodes[cur].parent {
            moves.push(m.clone());
            cur = *p;
        }
        moves.reverse();
        moves
    }

    /// Perturbation edges on the path from the initial arrangement.
    pub fn perturbations_to(&self, node: usize) -> usize {
        self.moves_to(node)
            .iter()
            .filter(|m| m.to != self.target.get(m.object))
            .count()
    }

    fn root_exhausted(&self, node: usize) -> bool {
        self.agendas.get(&node).is_some_and(Agenda::exhausted)
    }

    /// Most objects at goal, first-seen on ties.
    pub fn best_arrangement(&self) -> &Arrangement {
        let mut best = &self.nodes[0].arrangement;
        for n in &self.nodes {
            if n.arrangement.objects_at_goal() > best.objects_at_goal() {
                best = &n.arrangement;
            }
        }
        best
    }
}

/// Super-node root to expand next: fewest perturbations, then most objects
/// at goal, then insertion order. `None` when every root is exhausted.
pub fn select_expansion_node(tree: &SearchTree) -> Option<usize> {
    tree.supers
        .iter()
        .filter(|s| !tree.root_exhausted(s.root))
        .min_by_key(|s| {
            (
                s.perturbation_count,
                std::cmp::Reverse(tree.nodes[s.root].arrangement.objects_at_goal()),
                s.id,
            )
        })
        .map(|s| s.root)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpansionPolicy {
    /// Ranked nodes, objects and buffers.
    Informed,
    /// Uniformly random super-node root, object and buffer.
    Random,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub local_planner_calls: usize,
    pub expansions: usize,
    pub rg_dfs_calls: usize,
}

#[derive(Debug)]
pub enum SearchResult {
    Solved {
        solution: Solution,
        tree: SearchTree,
        stats: SearchStats,
    },
    Failed {
        tree: SearchTree,
        best: Arrangement,
        deadline_exceeded: bool,
        stats: SearchStats,
    },
}

impl SearchResult {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SearchResult::Solved { solution, .. } => Some(solution),
            SearchResult::Failed { .. } => None,
        }
    }

    pub fn stats(&self) -> &SearchStats {
        match self {
            SearchResult::Solved { stats, .. } | SearchResult::Failed { stats, .. } => stats,
        }
    }
}

struct Search<'a> {
    inst: &'a Instance,
    g: &'a RegionGraph,
    config: &'a SearchConfig,
    policy: ExpansionPolicy,
    deadline: Deadline,
    dict: PathDictionary,
    rng: ChaCha8Rng,
    tree: SearchTree,
    stats: SearchStats,
    started: Instant,
    /// Set once the capped agendas run dry; later agendas are uncapped.
    widened: bool,
}

enum Step {
    Solved(Solution),
    Continue,
    Timeout,
}

impl Search<'_> {
    fn candidates(&mut self, node: usize) -> Result<Vec<Perturbation>, PlanError> {
        let current = self.tree.nodes[node].arrangement.clone();
        let target = self.tree.target.clone();
        let mut objects = rank_perturbation_objects(self.inst, &current, &target);
        let buffer_config;
        let config = match self.policy {
            ExpansionPolicy::Informed if self.widened => {
                buffer_config = SearchConfig::exhaustive();
                &buffer_config
            }
            ExpansionPolicy::Informed => {
                if !self.config.exhaustive {
                    objects.truncate(self.config.max_objects_per_node);
                }
                self.config
            }
            ExpansionPolicy::Random => {
                objects.sort_unstable();
                buffer_config = SearchConfig::exhaustive();
                &buffer_config
            }
        };
        let mut out = Vec::new();
        for o in objects {
            for b in rank_buffers(self.inst, self.g, &current, &target, o, config, &mut self.dict)? {
                out.push(Perturbation {
                    object: o,
                    buffer: b,
                });
            }
        }
        Ok(out)
    }

    fn ensure_agenda(&mut self, node: usize) -> Result<(), PlanError> {
        if self
            .tree
            .agendas
            .get(&node)
            .is_none_or(|a| a.candidates.is_none())
        {
            let c = self.candidates(node)?;
            self.tree.agendas.entry(node).or_default().candidates = Some(c);
        }
        Ok(())
    }

    fn try_perturbation(&mut self, node: usize, pert: Perturbation) -> Result<Step, PlanError> {
        self.tree
            .agendas
            .entry(node)
            .or_default()
            .tried
            .insert(pert);
        let from = self.tree.nodes[node].arrangement.clone();
        let target = self.tree.target.clone();
        let local = match edfs_dp(
            self.inst,
            self.g,
            &from,
            &target,
            pert,
            &mut self.dict,
            self.deadline,
        ) {
            Ok(t) => t,
            Err(PlanError::BufferOccupied(_)) | Err(PlanError::InvalidPerturbation(_)) => {
                return Ok(Step::Continue)
            }
            Err(e) => return Err(e),
        };
        self.stats.local_planner_calls += 1;
        self.stats.expansions += local.expansions;
        if let Some(goal) = local.target_node() {
            let mut moves = self.tree.moves_to(node);
            moves.extend(local.moves_to(goal));
            self.tree.merge(node, &local);
            let solution = Solution::from_moves(self.inst, self.g, &target, moves)?;
            return Ok(Step::Solved(solution));
        }
        self.tree.merge(node, &local);
        if local.status == PlannerStatus::DeadlineExceeded {
            return Ok(Step::Timeout);
        }
        Ok(Step::Continue)
    }

    /// Expands every pending perturbation of `node` in ranked order.
    fn expand_all(&mut self, node: usize) -> Result<Step, PlanError> {
        self.ensure_agenda(node)?;
        for pert in self.tree.agendas[&node].untried() {
            if self.deadline.expired() {
                return Ok(Step::Timeout);
            }
            match self.try_perturbation(node, pert)? {
                Step::Continue => {}
                other => return Ok(other),
            }
        }
        Ok(Step::Continue)
    }

    /// Random node among those that may still have untried perturbations.
    fn random_open_node(&mut self, roots_only: bool) -> Result<Option<usize>, PlanError> {
        loop {
            let open: Vec<usize> = if roots_only {
                self.tree
                    .supers
                    .iter()
                    .map(|s| s.root)
                    .filter(|&r| !self.tree.root_exhausted(r))
                    .collect()
            } else {
                (0..self.tree.nodes.len())
                    .filter(|&r| !self.tree.root_exhausted(r))
                    .collect()
            };
            let Some(&node) = open.choose(&mut self.rng) else {
                return Ok(None);
            };
            self.ensure_agenda(node)?;
            if !self.tree.agendas[&node].exhausted() {
                return Ok(Some(node));
            }
        }
    }

    fn step(&mut self) -> Result<Option<Step>, PlanError> {
        match self.policy {
            ExpansionPolicy::Informed => {
                let node = match select_expansion_node(&self.tree) {
                    Some(n) => Some(n),
                    None => self.random_open_node(false)?,
                };
                let Some(node) = node else {
                    if self.config.exhaustive || self.widened {
                        return Ok(None);
                    }
                    self.widened = true;
                    for agenda in self.tree.agendas.values_mut() {
                        agenda.candidates = None;
                    }
                    return Ok(Some(Step::Continue));
                };
                Ok(Some(self.expand_all(node)?))
            }
            ExpansionPolicy::Random => {
                let node = match self.random_open_node(true)? {
                    Some(n) => Some(n),
                    None => self.random_open_node(false)?,
                };
                let Some(node) = node else {
                    return Ok(None);
                };
                let untried = self.tree.agendas[&node].untried();
                let mut objects: Vec<usize> = untried.iter().map(|p| p.object).collect();
                objects.dedup();
                let o = *objects.choose(&mut self.rng).unwrap();
                let buffers: Vec<Perturbation> =
                    untried.into_iter().filter(|p| p.object == o).collect();
                let pert = buffers[self.rng.gen_range(0..buffers.len())];
                Ok(Some(self.try_perturbation(node, pert)?))
            }
        }
    }

    fn run(mut self) -> Result<SearchResult, PlanError> {
        let root = self.inst.root();
        let target = self.tree.target.clone();
        let initial = dfs_dp(
            self.inst,
            self.g,
            &root,
            &target,
            &mut self.dict,
            self.deadline,
        )?;
        self.stats.local_planner_calls += 1;
        self.stats.expansions += initial.expansions;
        if let Some(goal) = initial.target_node() {
            let solution =
                Solution::from_moves(self.inst, self.g, &target, initial.moves_to(goal))?;
            self.tree.merge(0, &initial);
            return Ok(self.finish_solved(solution));
        }
        self.tree.merge(0, &initial);
        let mut timed_out = initial.status == PlannerStatus::DeadlineExceeded;
        while !timed_out {
            if self.deadline.expired() {
                timed_out = true;
                break;
            }
            match self.step()? {
                None => break,
                Some(Step::Solved(s)) => return Ok(self.finish_solved(s)),
                Some(Step::Timeout) => timed_out = true,
                Some(Step::Continue) => {}
            }
        }
        self.stats.rg_dfs_calls = self.dict.searches;
        Ok(SearchResult::Failed {
            best: self.tree.best_arrangement().clone(),
            tree: self.tree,
            deadline_exceeded: timed_out,
            stats: self.stats,
        })
    }

    fn finish_solved(mut self, mut solution: Solution) -> SearchResult {
        self.stats.rg_dfs_calls = self.dict.searches;
        solution.time_s = self.started.elapsed().as_secs_f64();
        solution.seed = self.config.seed;
        SearchResult::Solved {
            solution,
            tree: self.tree,
            stats: self.stats,
        }
    }
}

/// Perturbation search with the given expansion policy.
pub fn perturbation_search(
    inst: &Instance,
    g: &RegionGraph,
    deadline: Deadline,
    config: &SearchConfig,
    policy: ExpansionPolicy,
) -> Result<SearchResult, PlanError> {
    let search = Search {
        inst,
        g,
        config,
        policy,
        deadline,
        dict: PathDictionary::new(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        tree: SearchTree::new(inst.root(), inst.target()),
        stats: SearchStats::default(),
        started: Instant::now(),
        widened: false,
    };
    search.run()
}

/// Informed search: monotone attempt first, then ranked perturbations at
/// super-node roots, depth by depth. Outside exhaustive mode the per-node
/// caps apply until every capped agenda is spent; the search then continues
/// with uncapped agendas instead of giving up early.
pub fn informed_search(
    inst: &Instance,
    g: &RegionGraph,
    deadline: Deadline,
    config: &SearchConfig,
) -> Result<SearchResult, PlanError> {
    perturbation_search(inst, g, deadline, config, ExpansionPolicy::Informed)
}

/// Outcome of [`one_buffer_search`].
#[derive(Debug)]
pub struct OneBufferResult {
    pub solution: Option<Solution>,
    pub deadline_exceeded: bool,
    pub local_planner_calls: usize,
}

/// Monotone attempt, then every single perturbation from the initial
/// arrangement in ranked order, without deeper search.
pub fn one_buffer_search(
    inst: &Instance,
    g: &RegionGraph,
    deadline: Deadline,
) -> Result<OneBufferResult, PlanError> {
    let mut dict = PathDictionary::new();
    let root = inst.root();
    let target = inst.target();
    let mut calls = 1;
    let tree = dfs_dp(inst, g, &root, &target, &mut dict, deadline)?;
    let mut deadline_exceeded = tree.status == PlannerStatus::DeadlineExceeded;
    let mut found = tree.target_node().map(|t| tree.moves_to(t));
    if found.is_none() && !deadline_exceeded {
        let config = SearchConfig::exhaustive();
        'outer: for o in rank_perturbation_objects(inst, &root, &target) {
            for b in rank_buffers(inst, g, &root, &target, o, &config, &mut dict)? {
                let pert = Perturbation {
                    object: o,
                    buffer: b,
                };
                calls += 1;
                let local = edfs_dp(inst, g, &root, &target, pert, &mut dict, deadline)?;
                if let Some(t) = local.target_node() {
                    found = Some(local.moves_to(t));
                    break 'outer;
                }
                if local.status == PlannerStatus::DeadlineExceeded {
                    deadline_exceeded = true;
                    break 'outer;
                }
            }
        }
    }
    let solution = found
        .map(|moves| Solution::from_moves(inst, g, &target, moves))
        .transpose()?;
    Ok(OneBufferResult {
        solution,
        deadline_exceeded,
        local_planner_calls: calls,
    })
}
