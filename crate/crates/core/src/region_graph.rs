//! Raster decomposition of the configuration space into regions of uniform
//! interference, the region graph over them, and the maps between continuous
//! curves and region walks.
//!
//! The configuration rectangle is covered by a grid of cells. Each cell is
//! labeled with the interference set of a representative point: the cell
//! center, or the labeled pose(s) whose center falls in the cell. Cells with
//! equal labels are grouped into 4-connected components, which are the
//! regions. Two regions are adjacent when some pair of their cells are
//! 4-neighbors; with the one-label restriction enabled only adjacencies
//! whose interference sets differ by a single pose are searched by
//! [`RegionGraph::rg_dfs`].

use crate::geometry::{discs_collide, ConfigRect, GeometryError, Position, Workspace};
use crate::instance::{Instance, PoseLabel};
use crate::labels::LabelSet;
use std::collections::{BTreeSet, HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("cell size {cell_size} exceeds the resolution floor r/4 = {floor}")]
    ResolutionTooCoarse { cell_size: f64, floor: f64 },
    #[error("pose ({x}, {y}) lies outside the configuration rectangle")]
    PoseOutOfBounds { x: f64, y: f64 },
    #[error("workspace too small for radius {0}")]
    EmptyConfigSpace(f64),
    #[error("pose {0} is not part of the decomposition")]
    UnmappedPose(PoseLabel),
    #[error("walk could not be realized: {0}")]
    RealizationFailure(String),
}

impl From<GeometryError> for GraphError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::PositionOutOfBounds { x, y } => GraphError::PoseOutOfBounds { x, y },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphOptions {
    /// Nominal cell edge; `None` selects `r / 10`.
    pub cell_size: Option<f64>,
    /// Search only adjacencies whose interference sets differ by one pose.
    pub one_label_adjacency: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            cell_size: None,
            one_label_adjacency: true,
        }
    }
}

impl GraphOptions {
    pub fn with_cell_size(cell_size: f64) -> Self {
        Self {
            cell_size: Some(cell_size),
            ..Self::default()
        }
    }

    pub fn resolved_cell_size(&self, r: f64) -> f64 {
        self.cell_size.unwrap_or(r / 10.0)
    }
}

/// Cell raster over the configuration rectangle. Cells are
/// `cell_w x cell_h`, both at most the nominal cell size, and tile the
/// rectangle exactly.
#[derive(Clone, Debug)]
pub struct Grid {
    pub cell_size: f64,
    pub cols: usize,
    pub rows: usize,
    pub cell_w: f64,
    pub cell_h: f64,
    pub bounds: ConfigRect,
    words: usize,
    bits: Vec<u64>,
}

impl Grid {
    fn new(bounds: ConfigRect, cell_size: f64, universe: usize) -> Self {
        let cols = ((bounds.width() / cell_size).ceil() as usize).max(1);
        let rows = ((bounds.height() / cell_size).ceil() as usize).max(1);
        let words = universe.div_ceil(64).max(1);
        Self {
            cell_size,
            cols,
            rows,
            cell_w: bounds.width() / cols as f64,
            cell_h: bounds.height() / rows as f64,
            bounds,
            words,
            bits: vec![0; cols * rows * words],
        }
    }

    #[inline]
    pub fn num_cells(&self) -> usize {
        self.cols * self.rows
    }

    #[inline]
    pub fn cell_index(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }

    #[inline]
    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.cols, cell / self.cols)
    }

    /// Continuous grid coordinates (in cell units) of a point.
    #[inline]
    fn grid_uv(&self, p: &Position) -> (f64, f64) {
        (
            (p.x - self.bounds.min_x) / self.cell_w,
            (p.y - self.bounds.min_y) / self.cell_h,
        )
    }

    #[inline]
    fn clamp_col(&self, u: f64) -> usize {
        (u.floor().max(0.0) as usize).min(self.cols - 1)
    }

    #[inline]
    fn clamp_row(&self, v: f64) -> usize {
        (v.floor().max(0.0) as usize).min(self.rows - 1)
    }

    /// Cell owning `p`. Points on the far edges belong to the last cell.
    pub fn cell_of(&self, p: &Position) -> Result<usize, GraphError> {
        self.bounds.check(p)?;
        let (u, v) = self.grid_uv(p);
        Ok(self.cell_index(self.clamp_col(u), self.clamp_row(v)))
    }

    pub fn cell_center(&self, cell: usize) -> Position {
        let (c, r) = self.cell_coords(cell);
        Position::new(
            self.bounds.min_x + (c as f64 + 0.5) * self.cell_w,
            self.bounds.min_y + (r as f64 + 0.5) * self.cell_h,
        )
    }

    /// `(min, max)` corners of a cell.
    pub fn cell_rect(&self, cell: usize) -> (Position, Position) {
        let (c, r) = self.cell_coords(cell);
        let x0 = self.bounds.min_x + c as f64 * self.cell_w;
        let y0 = self.bounds.min_y + r as f64 * self.cell_h;
        (
            Position::new(x0, y0),
            Position::new(x0 + self.cell_w, y0 + self.cell_h),
        )
    }

    #[inline]
    pub fn cell_bits(&self, cell: usize) -> &[u64] {
        &self.bits[cell * self.words..(cell + 1) * self.words]
    }

    #[inline]
    fn cell_bits_mut(&mut self, cell: usize) -> &mut [u64] {
        &mut self.bits[cell * self.words..(cell + 1) * self.words]
    }

    pub fn cell_label(&self, cell: usize) -> LabelSet {
        LabelSet::from_words(self.cell_bits(cell))
    }

    /// 4-neighbors of a cell.
    pub fn neighbors(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let (c, r) = self.cell_coords(cell);
        let left = (c > 0).then(|| cell - 1);
        let right = (c + 1 < self.cols).then(|| cell + 1);
        let down = (r > 0).then(|| cell - self.cols);
        let up = (r + 1 < self.rows).then(|| cell + self.cols);
        [left, right, down, up].into_iter().flatten()
    }

    /// Cells crossed by the segment `a -> b`, in order, each a 4-neighbor of
    /// the previous one.
    pub fn traverse_segment(&self, a: &Position, b: &Position, mut visit: impl FnMut(usize)) {
        let (ua, va) = self.grid_uv(a);
        let (ub, vb) = self.grid_uv(b);
        let (mut cx, mut cy) = (self.clamp_col(ua) as i64, self.clamp_row(va) as i64);
        let (ex, ey) = (self.clamp_col(ub) as i64, self.clamp_row(vb) as i64);
        visit(self.cell_index(cx as usize, cy as usize));
        let (du, dv) = (ub - ua, vb - va);
        let step_x = if ex > cx { 1 } else { -1 };
        let step_y = if ey > cy { 1 } else { -1 };
        let first_cross = |start: f64, cell: i64, d: f64, step: i64| -> f64 {
            if d == 0.0 {
                f64::INFINITY
            } else if step > 0 {
                ((cell + 1) as f64 - start) / d
            } else {
                (start - cell as f64) / -d
            }
        };
        let mut t_x = first_cross(ua, cx, du, step_x);
        let mut t_y = first_cross(va, cy, dv, step_y);
        let dt_x = if du == 0.0 { f64::INFINITY } else { 1.0 / du.abs() };
        let dt_y = if dv == 0.0 { f64::INFINITY } else { 1.0 / dv.abs() };
        let steps = (ex - cx).abs() + (ey - cy).abs();
        for _ in 0..steps {
            let move_x = if cx == ex {
                false
            } else if cy == ey {
                true
            } else {
                t_x <= t_y
            };
            if move_x {
                cx += step_x;
                t_x += dt_x;
            } else {
                cy += step_y;
                t_y += dt_y;
            }
            visit(self.cell_index(cx as usize, cy as usize));
        }
    }

    /// Cells crossed by a polyline, consecutive duplicates removed.
    pub fn traverse_polyline(&self, polyline: &[Position]) -> Vec<usize> {
        let mut cells: Vec<usize> = Vec::new();
        let mut push = |c: usize| {
            if cells.last() != Some(&c) {
                cells.push(c);
            }
        };
        match polyline {
            [] => {}
            [p] => push(self.clamp_cell(p)),
            _ => {
                for w in polyline.windows(2) {
                    self.traverse_segment(&w[0], &w[1], &mut push);
                }
            }
        }
        cells
    }

    fn clamp_cell(&self, p: &Position) -> usize {
        let (u, v) = self.grid_uv(p);
        self.cell_index(self.clamp_col(u), self.clamp_row(v))
    }
}

#[derive(Clone, Debug)]
pub struct Region {
    pub id: usize,
    pub interference: LabelSet,
    pub cells: Vec<usize>,
}

/// A walk on the region graph together with its aggregate interference.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Walk {
    pub regions: Vec<usize>,
    pub interference: LabelSet,
}

#[derive(Clone, Debug)]
pub struct RegionGraph {
    pub grid: Grid,
    pub radius: f64,
    pub regions: Vec<Region>,
    pub one_label_adjacency: bool,
    labels: Vec<PoseLabel>,
    label_lookup: HashMap<PoseLabel, usize>,
    positions: Vec<Position>,
    cell_region: Vec<u32>,
    /// All cell-level adjacencies, sorted by neighbor id.
    touching: Vec<Vec<usize>>,
    /// Adjacencies searched by `rg_dfs`, ordered by ascending interference
    /// cardinality then id.
    edges: Vec<Vec<usize>>,
    pose_region: Vec<usize>,
}

impl RegionGraph {
    pub fn from_instance(inst: &Instance, opts: GraphOptions) -> Result<Self, GraphError> {
        decompose(inst.workspace, inst.radius, &inst.poses(), opts)
    }

    #[inline]
    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[PoseLabel] {
        &self.labels
    }

    pub fn label_index(&self, l: PoseLabel) -> Option<usize> {
        self.label_lookup.get(&l).copied()
    }

    pub fn pose_position(&self, l: PoseLabel) -> Option<Position> {
        self.label_index(l).map(|i| self.positions[i])
    }

    pub fn pose_region(&self, l: PoseLabel) -> Result<usize, GraphError> {
        self.label_index(l)
            .map(|i| self.pose_region[i])
            .ok_or(GraphError::UnmappedPose(l))
    }

    #[inline]
    pub fn cell_region(&self, cell: usize) -> usize {
        self.cell_region[cell] as usize
    }

    pub fn region_of(&self, p: &Position) -> Result<usize, GraphError> {
        Ok(self.cell_region(self.grid.cell_of(p)?))
    }

    /// Searched adjacency of region `id`.
    pub fn edges(&self, id: usize) -> &[usize] {
        &self.edges[id]
    }

    /// Every cell-level adjacency of region `id`.
    pub fn touching(&self, id: usize) -> &[usize] {
        &self.touching[id]
    }

    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Labels owned by `moving` (its start and goal).
    pub fn own_labels(&self, moving: usize) -> LabelSet {
        LabelSet::from_indices(
            self.num_labels(),
            self.labels
                .iter()
                .enumerate()
                .filter(|(_, l)| l.object() == Some(moving))
                .map(|(i, _)| i),
        )
    }

    pub fn walk_interference(&self, regions: &[usize]) -> LabelSet {
        let mut s = LabelSet::empty(self.num_labels());
        for &r in regions {
            s.union_with(&self.regions[r].interference);
        }
        s
    }

    /// Depth-first search for a walk between two poses
    /// through regions free of `occupied` labels. The returned interference
    /// excludes the two endpoint labels, so a stored walk can be checked
    /// for reuse against any later occupancy.
    pub fn rg_dfs(
        &self,
        from: PoseLabel,
        to: PoseLabel,
        occupied: &LabelSet,
    ) -> Result<Option<Walk>, GraphError> {
        let start = self.pose_region(from)?;
        let goal = self.pose_region(to)?;
        let free = |r: usize| self.regions[r].interference.is_disjoint(occupied);
        if !free(start) || !free(goal) {
            return Ok(None);
        }
        let path = if start == goal {
            vec![start]
        } else {
            let mut visited = vec![false; self.regions.len()];
            visited[start] = true;
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            let mut found = false;
            while let Some(top) = stack.last_mut() {
                let (r, next) = *top;
                if let Some(&nb) = self.edges[r].get(next) {
                    top.1 += 1;
                    if visited[nb] || !free(nb) {
                        continue;
                    }
                    visited[nb] = true;
                    stack.push((nb, 0));
                    if nb == goal {
                        found = true;
                        break;
                    }
                } else {
                    stack.pop();
                }
            }
            if !found {
                return Ok(None);
            }
            stack.into_iter().map(|(r, _)| r).collect()
        };
        let mut interference = self.walk_interference(&path);
        for l in [from, to] {
            interference.remove(self.label_index(l).ok_or(GraphError::UnmappedPose(l))?);
        }
        Ok(Some(Walk {
            regions: path,
            interference,
        }))
    }

    /// Region walk traced by a polyline (repeats compressed). Consecutive
    /// regions are cell-adjacent.
    pub fn curve_to_walk(&self, polyline: &[Position]) -> Result<Walk, GraphError> {
        if polyline.is_empty() {
            return Err(GraphError::RealizationFailure("empty polyline".into()));
        }
        for p in polyline {
            self.grid.bounds.check(p)?;
        }
        let mut regions: Vec<usize> = Vec::new();
        for c in self.grid.traverse_polyline(polyline) {
            let r = self.cell_region(c);
            if regions.last() != Some(&r) {
                regions.push(r);
            }
        }
        let interference = self.walk_interference(&regions);
        Ok(Walk {
            regions,
            interference,
        })
    }

    /// Realizes a walk as a polyline through cell centers that visits the
    /// walk's regions in order. Endpoints default to a seed cell of the first
    /// and last region.
    pub fn walk_to_curve(
        &self,
        walk: &Walk,
        from: Option<Position>,
        to: Option<Position>,
    ) -> Result<Vec<Position>, GraphError> {
        let fail = |m: String| GraphError::RealizationFailure(m);
        let first = *walk.regions.first().ok_or_else(|| fail("empty walk".into()))?;
        let last = *walk.regions.last().unwrap();
        let start_cell = match from {
            Some(p) => self.grid.cell_of(&p)?,
            None => self.regions[first].cells[0],
        };
        let end_cell = match to {
            Some(p) => self.grid.cell_of(&p)?,
            None => self.regions[last].cells[0],
        };
        if self.cell_region(start_cell) != first {
            return Err(fail(format!("start point is not in region {first}")));
        }
        if self.cell_region(end_cell) != last {
            return Err(fail(format!("end point is not in region {last}")));
        }

        let mut scratch = BfsScratch::new(self.grid.num_cells());
        let mut cells = vec![start_cell];
        let mut current = start_cell;
        for pair in walk.regions.windows(2) {
            let (here, next) = (pair[0], pair[1]);
            let segment = scratch
                .search(self, here, current, |c| {
                    self.grid.neighbors(c).any(|nb| self.cell_region(nb) == next)
                })
                .ok_or_else(|| fail(format!("regions {here} and {next} do not touch")))?;
            cells.extend_from_slice(&segment[1..]);
            let exit = *segment.last().unwrap();
            current = self
                .grid
                .neighbors(exit)
                .find(|&nb| self.cell_region(nb) == next)
                .unwrap();
            cells.push(current);
        }
        let tail = scratch
            .search(self, last, current, |c| c == end_cell)
            .ok_or_else(|| fail(format!("end cell unreachable inside region {last}")))?;
        cells.extend_from_slice(&tail[1..]);

        let mut polyline = Vec::with_capacity(cells.len() + 2);
        polyline.push(from.unwrap_or_else(|| self.grid.cell_center(start_cell)));
        polyline.extend(cells.iter().map(|&c| self.grid.cell_center(c)));
        polyline.push(to.unwrap_or_else(|| self.grid.cell_center(end_cell)));
        Ok(simplify_polyline(polyline))
    }
}

/// Drops repeated points and interior points of axis-aligned straight runs.
fn simplify_polyline(points: Vec<Position>) -> Vec<Position> {
    let mut out: Vec<Position> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() == Some(&p) {
            continue;
        }
        if out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            let same_row = a.y == b.y && b.y == p.y && (a.x < b.x) == (b.x < p.x);
            let same_col = a.x == b.x && b.x == p.x && (a.y < b.y) == (b.y < p.y);
            if same_row || same_col {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

struct BfsScratch {
    stamp: Vec<u32>,
    parent: Vec<u32>,
    generation: u32,
    queue: VecDeque<usize>,
}

impl BfsScratch {
    fn new(cells: usize) -> Self {
        Self {
            stamp: vec![0; cells],
            parent: vec![0; cells],
            generation: 0,
            queue: VecDeque::new(),
        }
    }

    /// Shortest 4-connected cell path inside `region` from `from` to the
    /// first cell satisfying `is_target`.
    fn search(
        &mut self,
        g: &RegionGraph,
        region: usize,
        from: usize,
        is_target: impl Fn(usize) -> bool,
    ) -> Option<Vec<usize>> {
        self.generation += 1;
        let gen = self.generation;
        self.queue.clear();
        self.stamp[from] = gen;
        self.parent[from] = from as u32;
        self.queue.push_back(from);
        while let Some(c) = self.queue.pop_front() {
            if is_target(c) {
                let mut path = vec![c];
                let mut cur = c;
                while cur != from {
                    cur = self.parent[cur] as usize;
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for nb in g.grid.neighbors(c) {
                if self.stamp[nb] != gen && g.cell_region(nb) == region {
                    self.stamp[nb] = gen;
                    self.parent[nb] = c as u32;
                    self.queue.push_back(nb);
                }
            }
        }
        None
    }
}

/// Cell label computation shared by [`decompose`]: interference of the cell
/// center, replaced by the union of the pose interferences for cells that
/// contain a labeled pose.
fn label_cells(grid: &mut Grid, r: f64, poses: &[(PoseLabel, Position)]) {
    let reach = 2.0 * r;
    for (idx, (_, p)) in poses.iter().enumerate() {
        let (u0, v0) = grid.grid_uv(&Position::new(p.x - reach, p.y - reach));
        let (u1, v1) = grid.grid_uv(&Position::new(p.x + reach, p.y + reach));
        let (c0, c1) = (grid.clamp_col(u0), grid.clamp_col(u1));
        let (r0, r1) = (grid.clamp_row(v0), grid.clamp_row(v1));
        for row in r0..=r1 {
            for col in c0..=c1 {
                let cell = grid.cell_index(col, row);
                if discs_collide(&grid.cell_center(cell), p, r) {
                    grid.cell_bits_mut(cell)[idx / 64] |= 1u64 << (idx % 64);
                }
            }
        }
    }
    let mut pose_cells: HashMap<usize, Vec<usize>> = HashMap::new();
    for (idx, (_, p)) in poses.iter().enumerate() {
        pose_cells.entry(grid.clamp_cell(p)).or_default().push(idx);
    }
    for (cell, members) in pose_cells {
        let mut words = vec![0u64; grid.words];
        for m in members {
            let q = poses[m].1;
            for (j, (_, p)) in poses.iter().enumerate() {
                if discs_collide(&q, p, r) {
                    words[j / 64] |= 1u64 << (j % 64);
                }
            }
        }
        grid.cell_bits_mut(cell).copy_from_slice(&words);
    }
}

/// Builds the region graph for a set of labeled poses. Label indices are the
/// positions in `poses`.
pub fn decompose(
    workspace: Workspace,
    r: f64,
    poses: &[(PoseLabel, Position)],
    opts: GraphOptions,
) -> Result<RegionGraph, GraphError> {
    let bounds = workspace
        .config_rect(r)
        .ok_or(GraphError::EmptyConfigSpace(r))?;
    let cell_size = opts.resolved_cell_size(r);
    if !(cell_size > 0.0) || cell_size > r / 4.0 {
        return Err(GraphError::ResolutionTooCoarse {
            cell_size,
            floor: r / 4.0,
        });
    }
    for (_, p) in poses {
        bounds.check(p)?;
    }

    let mut grid = Grid::new(bounds, cell_size, poses.len());
    label_cells(&mut grid, r, poses);

    // Connected components of equal-label cells.
    let n_cells = grid.num_cells();
    let mut cell_region = vec![u32::MAX; n_cells];
    let mut regions: Vec<Region> = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..n_cells {
        if cell_region[seed] != u32::MAX {
            continue;
        }
        let id = regions.len();
        let label = grid.cell_bits(seed).to_vec();
        let mut cells = Vec::new();
        cell_region[seed] = id as u32;
        queue.push_back(seed);
        while let Some(c) = queue.pop_front() {
            cells.push(c);
            for nb in grid.neighbors(c) {
                if cell_region[nb] == u32::MAX && grid.cell_bits(nb) == label.as_slice() {
                    cell_region[nb] = id as u32;
                    queue.push_back(nb);
                }
            }
        }
        regions.push(Region {
            id,
            interference: LabelSet::from_words(&label),
            cells,
        });
    }

    let mut touching_set: BTreeSet<(usize, usize)> = BTreeSet::new();
    for c in 0..n_cells {
        let (col, row) = grid.cell_coords(c);
        let a = cell_region[c] as usize;
        for nb in [
            (col + 1 < grid.cols).then(|| c + 1),
            (row + 1 < grid.rows).then(|| c + grid.cols),
        ]
        .into_iter()
        .flatten()
        {
            let b = cell_region[nb] as usize;
            if a != b {
                touching_set.insert((a.min(b), a.max(b)));
            }
        }
    }

    // Poses at identical coordinates have identical conflict discs and always
    // enter or leave a region together; count them once.
    let class: Vec<usize> = poses
        .iter()
        .map(|(_, p)| poses.iter().position(|(_, q)| q == p).unwrap())
        .collect();
    let distinct_difference = |a: &LabelSet, b: &LabelSet| -> usize {
        let classes: BTreeSet<usize> = a.symmetric_difference(b).iter().map(|i| class[i]).collect();
        classes.len()
    };

    let mut touching = vec![Vec::new(); regions.len()];
    let mut edges = vec![Vec::new(); regions.len()];
    for &(a, b) in &touching_set {
        touching[a].push(b);
        touching[b].push(a);
        let keep = !opts.one_label_adjacency
            || distinct_difference(&regions[a].interference, &regions[b].interference) == 1;
        if keep {
            edges[a].push(b);
            edges[b].push(a);
        }
    }
    for list in &mut edges {
        list.sort_by_key(|&r| (regions[r].interference.len(), r));
    }

    let labels: Vec<PoseLabel> = poses.iter().map(|(l, _)| *l).collect();
    let label_lookup = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let positions: Vec<Position> = poses.iter().map(|(_, p)| *p).collect();
    let pose_region = positions
        .iter()
        .map(|p| cell_region[grid.clamp_cell(p)] as usize)
        .collect();

    Ok(RegionGraph {
        grid,
        radius: r,
        regions,
        one_label_adjacency: opts.one_label_adjacency,
        labels,
        label_lookup,
        positions,
        cell_region,
        touching,
        edges,
        pose_region,
    })
}
