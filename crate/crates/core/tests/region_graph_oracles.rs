mod common;

use common::*;
use disc_rearrange::instance::sample_in;
use disc_rearrange::labels::LabelSet;
use disc_rearrange::monotone::{dfs_dp, Deadline, PathDictionary};
use disc_rearrange::region_graph::Grid;
use disc_rearrange::{Instance, PoseLabel, Position, RegionGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap};

fn some_instances() -> Vec<Instance> {
    corpus(&[3, 5], &[0.1, 0.25], 3, 77)
}

#[test]
fn cell_labels_match_brute_force() {
    for inst in some_instances() {
        let g = graph(&inst);
        for cell in 0..g.grid.num_cells() {
            assert_eq!(
                g.grid.cell_label(cell),
                brute_force_cell_label(&inst, &g.grid, cell),
                "cell {cell}"
            );
        }
    }
}

/// Regions must be exactly the 4-connected components of equal labels.
#[test]
fn regions_match_flood_fill() {
    for inst in some_instances() {
        let g = graph(&inst);
        let grid = &g.grid;
        let labels: Vec<LabelSet> = (0..grid.num_cells())
            .map(|c| brute_force_cell_label(&inst, grid, c))
            .collect();
        let mut comp = vec![usize::MAX; grid.num_cells()];
        let mut count = 0;
        for seed in 0..grid.num_cells() {
            if comp[seed] != usize::MAX {
                continue;
            }
            comp[seed] = count;
            let mut stack = vec![seed];
            while let Some(c) = stack.pop() {
                let (col, row) = grid.cell_coords(c);
                let mut nbrs = Vec::new();
                if col > 0 {
                    nbrs.push(c - 1);
                }
                if col + 1 < grid.cols {
                    nbrs.push(c + 1);
                }
                if row > 0 {
                    nbrs.push(c - grid.cols);
                }
                if row + 1 < grid.rows {
                    nbrs.push(c + grid.cols);
                }
                for nb in nbrs {
                    if comp[nb] == usize::MAX && labels[nb] == labels[c] {
                        comp[nb] = count;
                        stack.push(nb);
                    }
                }
            }
            count += 1;
        }
        assert_eq!(count, g.regions.len());
        let mut map: HashMap<usize, usize> = HashMap::new();
        for c in 0..grid.num_cells() {
            let r = g.cell_region(c);
            assert_eq!(*map.entry(r).or_insert(comp[c]), comp[c]);
            assert_eq!(g.regions[r].interference, labels[c]);
        }
    }
}

/// Connected components of equal brute-force labels: component id per cell
/// and the number of components.
fn flood_fill_components(inst: &Instance, grid: &Grid) -> (Vec<usize>, Vec<LabelSet>) {
    let labels: Vec<LabelSet> = (0..grid.num_cells())
        .map(|c| brute_force_cell_label(inst, grid, c))
        .collect();
    let mut comp = vec![usize::MAX; grid.num_cells()];
    let mut comp_labels = Vec::new();
    for seed in 0..grid.num_cells() {
        if comp[seed] != usize::MAX {
            continue;
        }
        let id = comp_labels.len();
        comp_labels.push(labels[seed].clone());
        comp[seed] = id;
        let mut stack = vec![seed];
        while let Some(c) = stack.pop() {
            for nb in grid.neighbors(c) {
                if comp[nb] == usize::MAX && labels[nb] == labels[c] {
                    comp[nb] = id;
                    stack.push(nb);
                }
            }
        }
    }
    (comp, comp_labels)
}

/// Pairs of adjacent label sets differing in exactly one label, as sorted
/// index lists. Pairs meeting only where boundaries cross depend on the
/// resolution and are left out.
fn adjacent_label_pairs(grid: &Grid, comp: &[usize], labels: &[LabelSet]) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    let mut out = BTreeSet::new();
    for c in 0..grid.num_cells() {
        for nb in grid.neighbors(c) {
            if comp[nb] != comp[c] && labels[comp[c]].symmetric_difference_len(&labels[comp[nb]]) == 1 {
                let a: Vec<usize> = labels[comp[c]].iter().collect();
                let b: Vec<usize> = labels[comp[nb]].iter().collect();
                out.insert(if a < b { (a, b) } else { (b, a) });
            }
        }
    }
    out
}

/// Three mutually overlapping conflict discs: seven bounded regions plus the
/// exterior, with the same adjacency as a decomposition twice as fine.
#[test]
fn three_disc_decomposition_is_resolution_independent() {
    let inst = Instance::new(
        disc_rearrange::Workspace::new(12.0, 12.0),
        1.0,
        vec![Position::new(5.0, 5.0), Position::new(7.2, 5.3)],
        vec![Position::new(6.1, 7.1), Position::new(9.5, 9.5)],
        vec![],
    )
    .unwrap();
    let coarse = graph(&inst);
    let fine = graph_with_cell(&inst, inst.radius / 20.0);
    let (cc, cl) = flood_fill_components(&inst, &coarse.grid);
    let (fc, fl) = flood_fill_components(&inst, &fine.grid);
    assert_eq!(coarse.regions.len(), cl.len());
    assert_eq!(fine.regions.len(), fl.len());
    assert_eq!(cl.len(), fl.len());
    assert_eq!(
        adjacent_label_pairs(&coarse.grid, &cc, &cl),
        adjacent_label_pairs(&fine.grid, &fc, &fl)
    );
    let three: Vec<&LabelSet> = cl.iter().filter(|l| l.len() == 3).collect();
    assert_eq!(three.len(), 1);
}

/// Whether a 4-connected flood fill over cells free of `occupied` joins the
/// cells of `a` and `b`.
fn flood_fill_connects(g: &RegionGraph, a: &Position, b: &Position, occupied: &LabelSet) -> bool {
    let grid = &g.grid;
    let free = |c: usize| grid.cell_label(c).is_disjoint(occupied);
    let (s, t) = (grid.cell_of(a).unwrap(), grid.cell_of(b).unwrap());
    if !free(s) || !free(t) {
        return false;
    }
    let mut seen = vec![false; grid.num_cells()];
    seen[s] = true;
    let mut stack = vec![s];
    while let Some(c) = stack.pop() {
        if c == t {
            return true;
        }
        for nb in grid.neighbors(c) {
            if !seen[nb] && free(nb) {
                seen[nb] = true;
                stack.push(nb);
            }
        }
    }
    false
}

#[test]
fn rg_dfs_agrees_with_flood_fill() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut agree, mut total) = (0usize, 0usize);
    for inst in corpus(&[4, 6], &[0.1, 0.2, 0.3], 5, 300) {
        let g = graph(&inst);
        for _ in 0..20 {
            let o = rng.gen_range(0..inst.n());
            let mut arr = inst.initial();
            for j in 0..inst.n() {
                if rng.gen_bool(0.5) {
                    arr.set(j, PoseLabel::Goal(j));
                }
            }
            let from = arr.get(o);
            let to = if from == PoseLabel::Goal(o) {
                PoseLabel::Start(o)
            } else {
                PoseLabel::Goal(o)
            };
            let occupied = arr.occupied_except(&inst, o);
            let walk = g.rg_dfs(from, to, &occupied).unwrap();
            let flood = flood_fill_connects(&g, &inst.pose(from), &inst.pose(to), &occupied);
            total += 1;
            agree += usize::from(walk.is_some() == flood);
            if let Some(w) = walk {
                assert!(w.interference.is_disjoint(&occupied));
            }
        }
    }
    let frac = agree as f64 / total as f64;
    assert!(frac >= 0.99, "agreement {frac} over {total} queries");
}

#[test]
fn stored_walks_realize_and_round_trip() {
    for inst in small_corpus().into_iter().take(40) {
        let g = graph(&inst);
        let mut dict = PathDictionary::new();
        dfs_dp(&inst, &g, &inst.root(), &inst.target(), &mut dict, Deadline::none()).unwrap();
        for (&(_, from, to), w) in dict.walks() {
            let poly = g
                .walk_to_curve(w, Some(inst.pose(from)), Some(inst.pose(to)))
                .unwrap();
            let back = g.curve_to_walk(&poly).unwrap();
            assert_eq!(back.regions, w.regions);
        }
    }
}

fn random_polyline(inst: &Instance, rng: &mut ChaCha8Rng, k: usize) -> Vec<Position> {
    let rect = inst.config_rect();
    (0..k).map(|_| sample_in(&rect, rng)).collect()
}

fn check_traversal(inst: &Instance, g: &RegionGraph, poly: &[Position]) {
    let mut exact = g.grid.traverse_polyline(poly);
    exact.sort_unstable();
    exact.dedup();
    assert_eq!(exact, brute_force_cells(&g.grid, poly));
    let traversal = g.grid.traverse_polyline(poly);
    for w in traversal.windows(2) {
        assert!(g.grid.neighbors(w[0]).any(|c| c == w[1]), "cells not 4-adjacent");
    }
    assert_eq!(
        g.curve_to_walk(poly).unwrap().interference,
        brute_force_polyline_interference(inst, &g.grid, poly)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn traversal_matches_brute_force(seed in 0u64..10_000, k in 1usize..6) {
        let inst = &some_instances()[(seed % 4) as usize];
        let g = graph(inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = random_polyline(inst, &mut rng, k);
        check_traversal(inst, &g, &poly);
    }

    #[test]
    fn polylines_from_poses_match_brute_force(seed in 0u64..10_000) {
        let inst = &some_instances()[(seed % 4) as usize];
        let g = graph(inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut poly = vec![inst.starts[0]];
        poly.extend(random_polyline(inst, &mut rng, 2));
        poly.push(inst.goals[0]);
        check_traversal(inst, &g, &poly);
    }
}
