//! Reference solvers: exhaustive breadth-first search over action count,
//! backtracking over object orderings, and a random-choice variant of the
//! perturbation search.

use crate::instance::{Arrangement, Instance, PoseLabel};
use crate::monotone::{Deadline, PathDictionary, PlanError};
use crate::nonmonotone::{perturbation_search, ExpansionPolicy, SearchConfig, SearchResult};
use crate::region_graph::RegionGraph;
use crate::solution::{Move, Solution};
use std::collections::{HashMap, VecDeque};

#[derive(Debug)]
pub enum OracleOutcome {
    /// A minimal-action solution within the buffer-visit bound.
    Solved(Solution),
    /// No solution exists within the bound.
    Infeasible,
    DeadlineExceeded,
}

impl OracleOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            OracleOutcome::Solved(s) => Some(s),
            _ => None,
        }
    }

    pub fn min_actions(&self) -> Option<usize> {
        self.solution().map(|s| s.num_actions)
    }
}

/// Poses an object may occupy: its start, its goal and every candidate
/// buffer.
fn modes(inst: &Instance, object: usize) -> Vec<PoseLabel> {
    let mut out = vec![PoseLabel::Start(object), PoseLabel::Goal(object)];
    out.extend((0..inst.buffers.len()).map(PoseLabel::Buffer));
    out
}

/// Breadth-first search over action count on the full arrangement space.
/// Any move to a pose other than the object's goal is a buffer visit; at
/// most `max_buffer_visits` are allowed.
pub fn brute_force_optimal(
    inst: &Instance,
    g: &RegionGraph,
    max_buffer_visits: usize,
    deadline: Deadline,
) -> Result<OracleOutcome, PlanError> {
    type State = (Arrangement, usize);
    let root: State = (inst.root(), 0);
    let target = inst.target();
    let all_modes: Vec<Vec<PoseLabel>> = (0..inst.n()).map(|i| modes(inst, i)).collect();
    let mut parent: HashMap<State, Option<(State, Move)>> = HashMap::from([(root.clone(), None)]);
    let mut queue = VecDeque::from([root]);
    let mut dict = PathDictionary::new();
    let mut found = None;
    'search: while let Some(state) = queue.pop_front() {
        if deadline.expired() {
            return Ok(OracleOutcome::DeadlineExceeded);
        }
        let (arr, visits) = &state;
        if *arr == target {
            found = Some(state);
            break;
        }
        for o in 0..arr.len() {
            let from = arr.get(o);
            let occupied = arr.occupied_except(inst, o);
            for &dest in &all_modes[o] {
                if dest == from || arr.holder_of(dest).is_some() {
                    continue;
                }
                let v = visits + usize::from(dest != target.get(o));
                if v > max_buffer_visits {
                    continue;
                }
                let next: State = (arr.with(o, dest), v);
                if parent.contains_key(&next) {
                    continue;
                }
                let Some(walk) = dict.lookup_or_search(g, o, from, dest, &occupied)? else {
                    continue;
                };
                let m = Move {
                    object: o,
                    from,
                    to: dest,
                    walk,
                };
                parent.insert(next.clone(), Some((state.clone(), m)));
                if next.0 == target {
                    found = Some(next);
                    break 'search;
                }
                queue.push_back(next);
            }
        }
    }
    let Some(mut cur) = found else {
        return Ok(OracleOutcome::Infeasible);
    };
    let mut moves = Vec::new();
    while let Some(Some((prev, m))) = parent.get(&cur) {
        moves.push(m.clone());
        cur = prev.clone();
    }
    moves.reverse();
    Ok(OracleOutcome::Solved(Solution::from_moves(
        inst, g, &target, moves,
    )?))
}

#[derive(Debug)]
pub struct MrsResult {
    pub solution: Option<Solution>,
    /// Number of orderings prefixes visited.
    pub expansions: usize,
    pub deadline_exceeded: bool,
}

struct Mrs<'a> {
    inst: &'a Instance,
    g: &'a RegionGraph,
    target: Arrangement,
    dict: &'a mut PathDictionary,
    deadline: Deadline,
    expansions: usize,
    timed_out: bool,
    moves: Vec<Move>,
}

impl Mrs<'_> {
    fn search(&mut self, arr: &Arrangement) -> Result<bool, PlanError> {
        self.expansions += 1;
        if self.deadline.expired() {
            self.timed_out = true;
            return Ok(false);
        }
        if *arr == self.target {
            return Ok(true);
        }
        for o in 0..arr.len() {
            let from = arr.get(o);
            let dest = self.target.get(o);
            if from == dest || arr.holder_of(dest).is_some() {
                continue;
            }
            let occupied = arr.occupied_except(self.inst, o);
            let Some(walk) = self
                .dict
                .lookup_or_search(self.g, o, from, dest, &occupied)?
            else {
                continue;
            };
            self.moves.push(Move {
                object: o,
                from,
                to: dest,
                walk,
            });
            if self.search(&arr.with(o, dest))? {
                return Ok(true);
            }
            self.moves.pop();
            if self.timed_out {
                return Ok(false);
            }
        }
        Ok(false)
    }
}

/// Backtracking over orderings of direct start-to-goal moves, without
/// memoization of visited subsets.
pub fn mrs_backtracking(
    inst: &Instance,
    g: &RegionGraph,
    dict: &mut PathDictionary,
    deadline: Deadline,
) -> Result<MrsResult, PlanError> {
    let target = inst.target();
    let mut mrs = Mrs {
        inst,
        g,
        target: target.clone(),
        dict,
        deadline,
        expansions: 0,
        timed_out: false,
        moves: Vec::new(),
    };
    let solved = mrs.search(&inst.root())?;
    let solution = if solved {
        Some(Solution::from_moves(
            inst,
            g,
            &target,
            std::mem::take(&mut mrs.moves),
        )?)
    } else {
        None
    };
    Ok(MrsResult {
        solution,
        expansions: mrs.expansions,
        deadline_exceeded: mrs.timed_out,
    })
}

/// Perturbation search with uniformly random root, object and buffer
/// choices.
pub fn random_ablation_search(
    inst: &Instance,
    g: &RegionGraph,
    deadline: Deadline,
    seed: u64,
) -> Result<SearchResult, PlanError> {
    let config = SearchConfig {
        seed,
        ..SearchConfig::default()
    };
    perturbation_search(inst, g, deadline, &config, ExpansionPolicy::Random)
}
