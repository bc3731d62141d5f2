//! Biconnected-component trees and pebble rearrangement planning on them.
//!
//! Every connected graph collapses onto a tree: each biconnected piece of
//! the underlying graph becomes a star around a fresh trans-shipment
//! vertex that never holds an agent, while cut edges survive unchanged.
//! Rearrangement is planned on that tree first — a prefix parks every
//! pebble on some target cell, a permutation phase then fixes ownership by
//! pairwise exchanges — and each tree move is finally translated back into
//! digraph moves by the exchange constructions.

use crate::graph_core::{underlying_graph, Decomposition, Digraph, Vertex};
use crate::permgroup::one_hole_reachable;
use crate::plan_engine::{swap_config, Config, Move, Plan};
use crate::sbd_solver::{realize_exchange, SbdError};
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeError {
    /// The underlying graph is not connected, so no single tree covers it.
    NotConnected,
    /// The requested rearrangement cannot be realized on the tree.
    InfeasibleInstance,
    /// A pairwise exchange could not be realized; on an instance that
    /// passed the feasibility check this indicates an internal defect.
    InfeasibleSwap,
    /// Translating tree moves into digraph moves needs at least two holes.
    TooFewHoles,
    /// An intermediate state broke an invariant of the construction.
    InvalidIntermediate,
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::NotConnected => write!(f, "underlying graph is not connected"),
            TreeError::InfeasibleInstance => {
                write!(f, "no tree plan reaches the requested placement")
            }
            TreeError::InfeasibleSwap => {
                write!(f, "a required pairwise exchange could not be realized")
            }
            TreeError::TooFewHoles => {
                write!(f, "tree-move conversion requires at least two holes")
            }
            TreeError::InvalidIntermediate => {
                write!(f, "an intermediate state broke a construction invariant")
            }
        }
    }
}

impl core::error::Error for TreeError {}

/// One move on the component tree: along a surviving cut edge, or from one
/// cell of a biconnected piece to another through its star. Agents may
/// pass through a trans-shipment vertex but never stop on one, so the star
/// hop is a single move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TreeMove {
    Direct(Vertex, Vertex),
    ThroughStar(Vertex, Vertex, Vertex),
}

impl TreeMove {
    pub fn from_cell(&self) -> Vertex {
        match *self {
            TreeMove::Direct(u, _) => u,
            TreeMove::ThroughStar(u, _, _) => u,
        }
    }

    pub fn to_cell(&self) -> Vertex {
        match *self {
            TreeMove::Direct(_, v) => v,
            TreeMove::ThroughStar(_, _, v) => v,
        }
    }

    /// The same step walked backwards.
    pub fn reversed(&self) -> TreeMove {
        match *self {
            TreeMove::Direct(u, v) => TreeMove::Direct(v, u),
            TreeMove::ThroughStar(u, s, v) => TreeMove::ThroughStar(v, s, u),
        }
    }
}

pub type TreePlan = Vec<TreeMove>;

/// The component tree of a connected graph: original cells `0..original`,
/// one trans-shipment vertex per biconnected piece of three or more cells,
/// cut edges kept as direct tree edges.
#[derive(Debug, Clone)]
pub struct BctTree {
    original: usize,
    /// Sorted cell lists, one per star; star `i` is tree vertex
    /// `original + i`.
    stars: Vec<Vec<Vertex>>,
    /// Cut edges of the underlying graph, stored with `u < v`.
    direct_edges: Vec<(Vertex, Vertex)>,
}

impl BctTree {
    pub fn original_count(&self) -> usize {
        self.original
    }

    pub fn vertex_count(&self) -> usize {
        self.original + self.stars.len()
    }

    pub fn original_vertices(&self) -> Vec<Vertex> {
        (0..self.original).collect()
    }

    pub fn trans_shipment_vertices(&self) -> Vec<Vertex> {
        (self.original..self.original + self.stars.len()).collect()
    }

    pub fn is_trans_shipment(&self, v: Vertex) -> bool {
        v >= self.original && v < self.vertex_count()
    }

    /// Trans-shipment vertex -> the cells of its biconnected piece.
    pub fn star_map(&self) -> BTreeMap<Vertex, Vec<Vertex>> {
        self.stars
            .iter()
            .enumerate()
            .map(|(i, cells)| (self.original + i, cells.clone()))
            .collect()
    }

    pub fn star_cells(&self, s: Vertex) -> Option<&[Vertex]> {
        if self.is_trans_shipment(s) {
            Some(&self.stars[s - self.original])
        } else {
            None
        }
    }

    /// All tree edges: one per star leaf plus the surviving cut edges.
    pub fn tree_edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut edges: Vec<(Vertex, Vertex)> = Vec::new();
        for (i, cells) in self.stars.iter().enumerate() {
            let s = self.original + i;
            for &c in cells {
                edges.push((c, s));
            }
        }
        edges.extend(self.direct_edges.iter().copied());
        edges.sort();
        edges
    }

    /// Text form: one `t <id>` line per trans-shipment vertex, then one
    /// `e <u> <v>` line per tree edge.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in self.trans_shipment_vertices() {
            out.push_str(&format!("t {}\n", s));
        }
        for (u, v) in self.tree_edges() {
            out.push_str(&format!("e {} {}\n", u, v));
        }
        out
    }
}

/// Build the component tree of `d`'s underlying graph.
pub fn build_bct(d: &Digraph) -> Result<BctTree, TreeError> {
    let n = d.vertex_count();
    let adj: Vec<Vec<Vertex>> = underlying_graph(d)
        .into_iter()
        .map(|s| s.into_iter().collect())
        .collect();

    // Connectivity first: a forest of trees is not one tree.
    if n > 0 {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        if count != n {
            return Err(TreeError::NotConnected);
        }
    }

    // Biconnected pieces of the underlying graph by an iterative
    // depth-first search with an edge stack.
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut time = 0usize;
    let mut edge_stack: Vec<(Vertex, Vertex)> = Vec::new();
    let mut blocks: Vec<BTreeSet<Vertex>> = Vec::new();
    let mut frames: Vec<(usize, usize, usize)> = Vec::new(); // (v, parent, next index)

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        frames.push((root, usize::MAX, 0));
        while let Some(&mut (v, parent, ref mut idx)) = frames.last_mut() {
            if *idx < adj[v].len() {
                let w = adj[v][*idx];
                *idx += 1;
                if w == parent {
                    continue;
                }
                if disc[w] == usize::MAX {
                    edge_stack.push((v, w));
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    frames.push((w, v, 0));
                } else if disc[w] < disc[v] {
                    edge_stack.push((v, w));
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                frames.pop();
                if let Some(&mut (p, _, _)) = frames.last_mut() {
                    low[p] = low[p].min(low[v]);
                    if low[v] >= disc[p] {
                        let mut block = BTreeSet::new();
                        while let Some(&(a, b)) = edge_stack.last() {
                            edge_stack.pop();
                            block.insert(a);
                            block.insert(b);
                            if (a, b) == (p, v) {
                                break;
                            }
                        }
                        blocks.push(block);
                    }
                }
            }
        }
    }

    let mut stars: Vec<Vec<Vertex>> = Vec::new();
    let mut direct_edges: Vec<(Vertex, Vertex)> = Vec::new();
    for block in blocks {
        let cells: Vec<Vertex> = block.into_iter().collect();
        if cells.len() >= 3 {
            stars.push(cells);
        } else if cells.len() == 2 {
            direct_edges.push((cells[0], cells[1]));
        }
    }
    stars.sort();
    direct_edges.sort();
    let t = BctTree { original: n, stars, direct_edges };
    debug_assert_eq!(t.tree_edges().len() + 1, t.vertex_count().max(1));
    Ok(t)
}

/// Tree occupancy of a digraph configuration. Cells keep their agents as
/// they are; trans-shipment vertices lie outside the cell range and are
/// therefore never occupied.
pub fn lift_config(a: &Config) -> Config {
    a.clone()
}

/// Apply one tree move to a configuration over the original cells: the
/// step must follow a tree edge (or star pair) into a hole.
pub fn apply_tree_move(t: &BctTree, a: &Config, m: TreeMove) -> Result<Config, TreeError> {
    let nav = TreeNav::new(t);
    let mut cur = a.clone();
    if nav.step(&mut cur, m) {
        Ok(cur)
    } else {
        Err(TreeError::InvalidIntermediate)
    }
}

/// Apply a whole tree plan, validating every step.
pub fn apply_tree_plan(t: &BctTree, a: &Config, plan: &[TreeMove]) -> Result<Config, TreeError> {
    let nav = TreeNav::new(t);
    let mut cur = a.clone();
    for &m in plan {
        if !nav.step(&mut cur, m) {
            return Err(TreeError::InvalidIntermediate);
        }
    }
    Ok(cur)
}

/// Motion structure of a component tree: which cell pairs are one tree
/// move apart, and which move realizes each pair.
struct TreeNav {
    adj: Vec<Vec<Vertex>>,
    kind: BTreeMap<(Vertex, Vertex), TreeMove>,
}

impl TreeNav {
    fn new(t: &BctTree) -> TreeNav {
        let n = t.original;
        let mut adj: Vec<BTreeSet<Vertex>> = vec![BTreeSet::new(); n];
        let mut kind = BTreeMap::new();
        for &(u, v) in &t.direct_edges {
            adj[u].insert(v);
            adj[v].insert(u);
            kind.insert((u, v), TreeMove::Direct(u, v));
            kind.insert((v, u), TreeMove::Direct(v, u));
        }
        for (i, cells) in t.stars.iter().enumerate() {
            let s = n + i;
            for &u in cells {
                for &v in cells {
                    if u != v {
                        adj[u].insert(v);
                        kind.entry((u, v)).or_insert(TreeMove::ThroughStar(u, s, v));
                    }
                }
            }
        }
        for (i, cells) in t.stars.iter().enumerate() {
            let s = n + i;
            for &u in cells {
                for &v in cells {
                    if u != v {
                        debug_assert!(kind.contains_key(&(u, v)));
                        let _ = s;
                    }
                }
            }
        }
        TreeNav { adj: adj.into_iter().map(|s| s.into_iter().collect()).collect(), kind }
    }

    fn cell_count(&self) -> usize {
        self.adj.len()
    }

    fn step_move(&self, u: Vertex, v: Vertex) -> Option<TreeMove> {
        self.kind.get(&(u, v)).copied()
    }

    /// Validate and apply one move: the step must exist and the target
    /// cell must hold a hole, any occupant (pebble or hole) may slide.
    fn step(&self, cur: &mut Config, m: TreeMove) -> bool {
        let (u, v) = (m.from_cell(), m.to_cell());
        if self.step_move(u, v) != Some(m) && self.step_move(u, v).map(|k| k.to_cell()) != Some(v)
        {
            return false;
        }
        if self.step_move(u, v).is_none() || !cur.is_hole_at(v) || u == v {
            return false;
        }
        *cur = swap_config(cur, u, v);
        true
    }

    /// The digraph whose arcs are the tree moves in both directions.
    fn motion_digraph(&self) -> Digraph {
        let mut arcs: Vec<(Vertex, Vertex)> = Vec::new();
        for (u, nbrs) in self.adj.iter().enumerate() {
            for &v in nbrs {
                arcs.push((u, v));
            }
        }
        Digraph::new(self.cell_count(), &arcs)
    }

    /// Coordinates along the motion graph when it is a simple path.
    fn path_coordinates(&self) -> Option<Vec<usize>> {
        let n = self.cell_count();
        if n == 0 {
            return Some(Vec::new());
        }
        let edge_count: usize = self.adj.iter().map(|nbrs| nbrs.len()).sum::<usize>() / 2;
        if edge_count + 1 != n || self.adj.iter().any(|nbrs| nbrs.len() > 2) {
            return None;
        }
        let start = (0..n).find(|&v| self.adj[v].len() <= 1)?;
        let mut coord = vec![usize::MAX; n];
        let mut prev = usize::MAX;
        let mut at = start;
        for c in 0..n {
            coord[at] = c;
            let next = self.adj[at].iter().copied().find(|&w| w != prev);
            match next {
                Some(w) => {
                    prev = at;
                    at = w;
                }
                None => break,
            }
        }
        if coord.iter().any(|&c| c == usize::MAX) {
            return None;
        }
        Some(coord)
    }

    fn bfs_path(&self, from: Vertex, to: Vertex, avoid: &BTreeSet<Vertex>) -> Option<Vec<Vertex>> {
        if avoid.contains(&from) || avoid.contains(&to) {
            return None;
        }
        if from == to {
            return Some(vec![from]);
        }
        let mut parent: BTreeMap<Vertex, Vertex> = BTreeMap::new();
        let mut queue = VecDeque::from([from]);
        parent.insert(from, from);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if avoid.contains(&w) || parent.contains_key(&w) {
                    continue;
                }
                parent.insert(w, v);
                if w == to {
                    let mut path = vec![to];
                    let mut c = to;
                    while c != from {
                        c = parent[&c];
                        path.push(c);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(w);
            }
        }
        None
    }

    /// Walk the nearest reachable hole onto `dest`, never touching cells
    /// in `avoid`. Appends the sliding moves and updates `cur`.
    fn bring_hole(
        &self,
        cur: &mut Config,
        plan: &mut TreePlan,
        dest: Vertex,
        avoid: &BTreeSet<Vertex>,
    ) -> bool {
        if avoid.contains(&dest) {
            return false;
        }
        if cur.is_hole_at(dest) {
            return true;
        }
        let mut parent: BTreeMap<Vertex, Vertex> = BTreeMap::new();
        parent.insert(dest, dest);
        let mut queue = VecDeque::from([dest]);
        let mut found = None;
        while let Some(v) = queue.pop_front() {
            if cur.is_hole_at(v) {
                found = Some(v);
                break;
            }
            for &w in &self.adj[v] {
                if avoid.contains(&w) || parent.contains_key(&w) {
                    continue;
                }
                parent.insert(w, v);
                queue.push_back(w);
            }
        }
        let Some(hole) = found else { return false };
        // Cells from dest out to the hole; slide contents outward so the
        // hole drifts inward onto dest.
        let mut chain = vec![hole];
        let mut c = hole;
        while c != dest {
            c = parent[&c];
            chain.push(c);
        }
        chain.reverse(); // dest .. hole
        for i in (0..chain.len() - 1).rev() {
            let m = match self.step_move(chain[i], chain[i + 1]) {
                Some(m) => m,
                None => return false,
            };
            if !self.step(cur, m) {
                return false;
            }
            plan.push(m);
        }
        true
    }

    /// Escort pebble `p` to `dest`, holes leading the way; cells in
    /// `frozen` are never entered or disturbed.
    fn route_pebble(
        &self,
        cur: &mut Config,
        plan: &mut TreePlan,
        p: usize,
        dest: Vertex,
        frozen: &BTreeSet<Vertex>,
    ) -> bool {
        let mut guard = self.cell_count() * self.cell_count() + 4;
        while cur.pebble_position(p) != dest {
            if guard == 0 {
                return false;
            }
            guard -= 1;
            let pos = cur.pebble_position(p);
            let Some(path) = self.bfs_path(pos, dest, frozen) else { return false };
            let next = path[1];
            let mut avoid = frozen.clone();
            avoid.insert(pos);
            if !self.bring_hole(cur, plan, next, &avoid) {
                return false;
            }
            let Some(m) = self.step_move(pos, next) else { return false };
            if !self.step(cur, m) {
                return false;
            }
            plan.push(m);
        }
        true
    }

    /// Walk `lead` to `dest` with `trail` stepping into every cell the
    /// leader vacates, so the two travel as an unbroken pair. The trailer
    /// must start adjacent to the leader.
    fn route_pair(
        &self,
        cur: &mut Config,
        plan: &mut TreePlan,
        lead: usize,
        trail: usize,
        dest: Vertex,
        frozen: &BTreeSet<Vertex>,
    ) -> bool {
        let mut guard = self.cell_count() * self.cell_count() + 4;
        while cur.pebble_position(lead) != dest {
            if guard == 0 {
                return false;
            }
            guard -= 1;
            let pos = cur.pebble_position(lead);
            let back = cur.pebble_position(trail);
            let mut avoid_path = frozen.clone();
            avoid_path.insert(back);
            let Some(path) = self.bfs_path(pos, dest, &avoid_path) else { return false };
            let next = path[1];
            let mut avoid = frozen.clone();
            avoid.insert(pos);
            avoid.insert(back);
            if !self.bring_hole(cur, plan, next, &avoid) {
                return false;
            }
            for (f, to) in [(pos, next), (back, pos)] {
                let Some(m) = self.step_move(f, to) else { return false };
                if !self.step(cur, m) {
                    return false;
                }
                plan.push(m);
            }
        }
        true
    }

    /// Hop counts from `from` to every cell, ignoring occupancy.
    fn distances(&self, from: Vertex) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.cell_count()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v].unwrap_or(0);
            for &w in &self.adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

fn assert_targets(a: &Config, targets: &BTreeMap<usize, Vertex>) {
    assert_eq!(targets.len(), a.pebble_count(), "targets must cover every pebble");
    let cells: BTreeSet<Vertex> = targets.values().copied().collect();
    assert_eq!(cells.len(), targets.len(), "targets must be injective");
}

/// Decide whether the tree instance can be rearranged as requested.
///
/// With no holes nothing moves. With one hole the reachable placements
/// form a coset of the vacancy-walk group, answered exactly by the group
/// engine. With two or more holes, pebbles on a path-shaped motion graph
/// can never pass one another, so their order along the path must already
/// match; every other shape is decided constructively, by running the
/// parking and exchange phases on a scratch copy and keeping the answer.
pub fn pmt_feasible(t: &BctTree, a: &Config, targets: &BTreeMap<usize, Vertex>) -> bool {
    assert_targets(a, targets);
    assert_eq!(a.agent_count(), t.original_count(), "configuration covers the cells");
    let nav = TreeNav::new(t);
    match a.hole_count() {
        0 => (0..a.pebble_count()).all(|p| a.pebble_position(p) == targets[&p]),
        1 => one_hole_reachable(&nav.motion_digraph(), a, targets),
        _ => match nav.path_coordinates() {
            Some(coord) => {
                let mut by_pos: Vec<(usize, usize)> =
                    (0..a.pebble_count()).map(|p| (coord[a.pebble_position(p)], p)).collect();
                let mut by_target: Vec<(usize, usize)> =
                    (0..a.pebble_count()).map(|p| (coord[targets[&p]], p)).collect();
                by_pos.sort();
                by_target.sort();
                by_pos
                    .iter()
                    .zip(by_target.iter())
                    .all(|(&(_, p), &(_, q))| p == q)
            }
            None => pmt_solve(t, a, targets).is_ok(),
        },
    }
}

/// Run both tree phases back to back — park every pebble on a target
/// cell, then permute them home — and return the combined tree plan.
pub fn pmt_solve(
    t: &BctTree,
    a: &Config,
    targets: &BTreeMap<usize, Vertex>,
) -> Result<TreePlan, TreeError> {
    let (mut plan, ppt) = pmt_to_ppt(t, a, targets)?;
    let tail = ppt_solve(t, &ppt)?;
    plan.extend(tail);
    Ok(plan)
}

/// The permutation phase left over once every pebble stands on some
/// target cell: same pebbles, same targets, start occupying exactly the
/// target set.
#[derive(Debug, Clone)]
pub struct PptInstance {
    pub start: Config,
    pub targets: BTreeMap<usize, Vertex>,
}

/// After freezing the newest parked cell, the unparked pebbles, the
/// unfilled target cells, and at least one hole must all share one
/// connected piece of the unfrozen motion graph, or later routing would
/// starve.
fn parking_keeps_rest_reachable(
    nav: &TreeNav,
    cur: &Config,
    frozen: &BTreeSet<Vertex>,
    remaining: &[Vertex],
    parked: &BTreeSet<usize>,
) -> bool {
    let Some(&seed) = remaining.first() else {
        return true;
    };
    let mut piece: BTreeSet<Vertex> = BTreeSet::new();
    piece.insert(seed);
    let mut queue = VecDeque::from([seed]);
    while let Some(v) = queue.pop_front() {
        for &w in &nav.adj[v] {
            if frozen.contains(&w) || !piece.insert(w) {
                continue;
            }
            queue.push_back(w);
        }
    }
    if remaining.iter().any(|t| !piece.contains(t)) {
        return false;
    }
    let mut spots: BTreeSet<Vertex> = BTreeSet::new();
    for p in 0..cur.pebble_count() {
        if parked.contains(&p) {
            continue;
        }
        let v = cur.pebble_position(p);
        if !piece.contains(&v) {
            return false;
        }
        spots.insert(v);
    }
    let targets: BTreeSet<Vertex> = remaining.iter().copied().collect();
    if spots == targets {
        return true;
    }
    piece.iter().any(|&v| cur.is_hole_at(v))
}

/// Park every pebble on some target cell and return the parking prefix
/// together with the residual permutation instance.
///
/// Targets are filled deepest first (root chosen at a path end when one
/// exists, ties by smallest cell id), each by the nearest pebble that can
/// still reach it with the already-filled cells frozen; on a path the
/// pairing is forced by pebble order instead. A fill is postponed when
/// freezing its cell would split the rest of the job across pieces.
/// Parking ignores which pebble owns which target, so success here says
/// nothing yet about the permutation phase that follows.
pub fn pmt_to_ppt(
    t: &BctTree,
    a: &Config,
    targets: &BTreeMap<usize, Vertex>,
) -> Result<(TreePlan, PptInstance), TreeError> {
    assert_targets(a, targets);
    let nav = TreeNav::new(t);
    let n = nav.cell_count();
    let root = (0..n).find(|&v| nav.adj[v].len() <= 1).unwrap_or(0);
    let mut depth = vec![usize::MAX; n];
    depth[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &nav.adj[v] {
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                queue.push_back(w);
            }
        }
    }

    let mut order: Vec<Vertex> = targets.values().copied().collect();
    order.sort_by_key(|&c| (usize::MAX - depth[c], c));

    // On a path the k-th pebble along it must take the k-th target cell;
    // anywhere else any assignment of pebbles to target cells works.
    let forced: Option<BTreeMap<Vertex, usize>> = nav.path_coordinates().map(|coord| {
        let mut pebbles: Vec<(usize, usize)> =
            (0..a.pebble_count()).map(|p| (coord[a.pebble_position(p)], p)).collect();
        let mut cells: Vec<(usize, Vertex)> =
            targets.values().map(|&c| (coord[c], c)).collect();
        pebbles.sort();
        cells.sort();
        cells
            .into_iter()
            .zip(pebbles)
            .map(|((_, cell), (_, p))| (cell, p))
            .collect()
    });

    let mut cur = a.clone();
    let mut plan: TreePlan = Vec::new();
    let mut frozen: BTreeSet<Vertex> = BTreeSet::new();
    let mut parked: BTreeSet<usize> = BTreeSet::new();
    let mut remaining: Vec<Vertex> = order;
    while !remaining.is_empty() {
        let mut committed: Option<(usize, usize, Config, TreePlan)> = None;
        // First pass insists the freeze keeps the rest of the job in one
        // unfrozen piece (a target on a cut cell must wait for the far
        // side to finish); the second pass drops that guard as a net.
        'search: for careful in [true, false] {
            for (i, &c) in remaining.iter().enumerate() {
                let candidates: Vec<usize> = match &forced {
                    Some(map) => vec![map[&c]],
                    None => {
                        // Nearest first: breadth-first distances from the
                        // target over unfrozen cells.
                        let mut dist: BTreeMap<Vertex, usize> = BTreeMap::new();
                        dist.insert(c, 0);
                        let mut queue = VecDeque::from([c]);
                        while let Some(v) = queue.pop_front() {
                            let dv = dist[&v];
                            for &w in &nav.adj[v] {
                                if frozen.contains(&w) || dist.contains_key(&w) {
                                    continue;
                                }
                                dist.insert(w, dv + 1);
                                queue.push_back(w);
                            }
                        }
                        let mut ranked: Vec<(usize, usize)> = (0..a.pebble_count())
                            .filter(|p| !parked.contains(p))
                            .filter_map(|p| {
                                dist.get(&cur.pebble_position(p)).map(|&d| (d, p))
                            })
                            .collect();
                        ranked.sort();
                        ranked.into_iter().map(|(_, p)| p).collect()
                    }
                };
                for p in candidates {
                    let mut trial = cur.clone();
                    let mut steps: TreePlan = Vec::new();
                    if !nav.route_pebble(&mut trial, &mut steps, p, c, &frozen) {
                        continue;
                    }
                    if careful {
                        let mut frozen2 = frozen.clone();
                        frozen2.insert(c);
                        let left: Vec<Vertex> = remaining
                            .iter()
                            .copied()
                            .filter(|&t| t != c)
                            .collect();
                        let mut parked2 = parked.clone();
                        parked2.insert(p);
                        if !parking_keeps_rest_reachable(&nav, &trial, &frozen2, &left, &parked2)
                        {
                            continue;
                        }
                    }
                    committed = Some((i, p, trial, steps));
                    break 'search;
                }
            }
        }
        let Some((i, p, next, steps)) = committed else {
            return Err(TreeError::InfeasibleInstance);
        };
        let c = remaining.remove(i);
        cur = next;
        plan.extend(steps);
        frozen.insert(c);
        parked.insert(p);
    }

    let target_cells: BTreeSet<Vertex> = targets.values().copied().collect();
    let occupied: BTreeSet<Vertex> =
        (0..cur.pebble_count()).map(|p| cur.pebble_position(p)).collect();
    if occupied != target_cells {
        return Err(TreeError::InvalidIntermediate);
    }
    Ok((plan, PptInstance { start: cur, targets: targets.clone() }))
}

/// Solve the permutation phase: walk each pebble home along a tree path,
/// pushing unsettled blockers aside when spare room exists and otherwise
/// trading places with them through an adjacent exchange that restores
/// all bystanders. Pebbles aiming at the deepest cells settle first;
/// settled ones are walls for pushing, and a settled pebble bumped away
/// by an exchange re-enters the queue. When every queued pebble is
/// wedged, the residue goes to an exact bounded placement search.
pub fn ppt_solve(t: &BctTree, inst: &PptInstance) -> Result<TreePlan, TreeError> {
    let nav = TreeNav::new(t);
    let a = &inst.start;
    assert_targets(a, &inst.targets);
    let target_cells: BTreeSet<Vertex> = inst.targets.values().copied().collect();
    let occupied: BTreeSet<Vertex> =
        (0..a.pebble_count()).map(|p| a.pebble_position(p)).collect();
    if occupied != target_cells {
        return Err(TreeError::InvalidIntermediate);
    }
    let pebbles = a.pebble_count();
    let root = (0..nav.cell_count()).find(|&c| nav.adj[c].len() <= 1).unwrap_or(0);
    let depth = nav.distances(root);
    let mut order: Vec<usize> = (0..pebbles).collect();
    order.sort_by_key(|&p| (Reverse(depth[inst.targets[&p]].unwrap_or(0)), p));
    let mut queue: VecDeque<usize> = order.into();
    let mut settled: BTreeSet<usize> = BTreeSet::new();
    let mut cur = a.clone();
    let mut plan: TreePlan = Vec::new();
    let n = nav.cell_count();
    let mut guard = (n + 2) * (n + 2) * (pebbles + 2);
    // Consecutive deferrals without any motion: once every queued pebble
    // has stalled through two full rounds the position cannot change any
    // more, so give up early instead of burning the whole guard.
    let mut stalls = 0usize;
    'drive: while let Some(p) = queue.pop_front() {
        settled.remove(&p);
        let home = inst.targets[&p];
        while cur.pebble_position(p) != home {
            if guard == 0 {
                let tail = finish_by_search(&nav, &cur, &inst.targets)?;
                plan.extend(tail);
                return Ok(plan);
            }
            guard -= 1;
            let pos = cur.pebble_position(p);
            let walls: BTreeSet<Vertex> =
                settled.iter().map(|&q| cur.pebble_position(q)).collect();
            // Prefer a corridor around the settled pebbles; when none
            // exists, walk the direct path and exchange through them.
            let path = match nav.bfs_path(pos, home, &walls) {
                Some(path) => path,
                None => nav
                    .bfs_path(pos, home, &BTreeSet::new())
                    .ok_or(TreeError::InfeasibleSwap)?,
            };
            let next = path[1];
            if !cur.is_hole_at(next) {
                // Push: open the next cell by sliding its occupant and
                // whoever stands beyond it one step toward a spare hole,
                // leaving the walker and every settled pebble in place.
                let mut avoid = walls.clone();
                avoid.insert(pos);
                if !nav.bring_hole(&mut cur, &mut plan, next, &avoid) {
                    let b = cur.occupant_index(next);
                    if b < pebbles && swap_adjacent(&nav, &mut cur, &mut plan, p, b) {
                        // The blocker moved, and the exchange may have
                        // shoved bystanders as well; anyone now off a
                        // finished target goes back in the queue.
                        stalls = 0;
                        settled.remove(&b);
                        if cur.pebble_position(b) != inst.targets[&b]
                            && !queue.contains(&b)
                        {
                            queue.push_back(b);
                        }
                        let displaced: Vec<usize> = settled
                            .iter()
                            .copied()
                            .filter(|&q| cur.pebble_position(q) != inst.targets[&q])
                            .collect();
                        for q in displaced {
                            settled.remove(&q);
                            if !queue.contains(&q) {
                                queue.push_back(q);
                            }
                        }
                        continue;
                    }
                    // Wedged for now: let another pebble rearrange the
                    // region before this one tries again. Once a full
                    // round of the queue has stalled with no motion the
                    // position is stable and the exchange repertoire is
                    // out of ideas; hand the remainder to the exact
                    // bounded search.
                    stalls += 1;
                    if queue.is_empty() || stalls > queue.len() + 2 {
                        let tail = finish_by_search(&nav, &cur, &inst.targets)?;
                        plan.extend(tail);
                        return Ok(plan);
                    }
                    queue.push_back(p);
                    continue 'drive;
                }
            }
            let m = nav.step_move(pos, next).ok_or(TreeError::InvalidIntermediate)?;
            if !nav.step(&mut cur, m) {
                return Err(TreeError::InvalidIntermediate);
            }
            plan.push(m);
            stalls = 0;
        }
        settled.insert(p);
    }
    for p in 0..pebbles {
        if cur.pebble_position(p) != inst.targets[&p] {
            return Err(TreeError::InfeasibleSwap);
        }
    }
    Ok(plan)
}

/// Exact completion for the rare junction jams the exchange repertoire
/// cannot untangle — a pebble that must trade with a hub sitter while the
/// spare branch can only empty through that same hub. Breadth-first
/// search over whole placements, bounded so only small position spaces
/// are ever explored; within the bound the answer is exact, beyond it
/// the instance is reported unsolved.
fn finish_by_search(
    nav: &TreeNav,
    start: &Config,
    targets: &BTreeMap<usize, Vertex>,
) -> Result<TreePlan, TreeError> {
    let m = start.pebble_count();
    let begin: Vec<Vertex> = (0..m).map(|p| start.pebble_position(p)).collect();
    let goal: Vec<Vertex> = (0..m).map(|p| targets[&p]).collect();
    if begin == goal {
        return Ok(Vec::new());
    }
    let cap = 200_000usize;
    // The whole position space is enumerable up front; refuse immediately
    // when it cannot fit under the cap rather than churn up to it.
    let n = nav.cell_count();
    let mut bound = 1usize;
    for i in 0..m {
        bound = bound.saturating_mul(n - i);
        if bound > cap {
            return Err(TreeError::InfeasibleSwap);
        }
    }
    let mut parent: BTreeMap<Vec<Vertex>, (Vec<Vertex>, TreeMove)> = BTreeMap::new();
    let mut queue: VecDeque<Vec<Vertex>> = VecDeque::from([begin.clone()]);
    let mut seen: BTreeSet<Vec<Vertex>> = [begin.clone()].into_iter().collect();
    while let Some(state) = queue.pop_front() {
        for p in 0..m {
            for &w in &nav.adj[state[p]] {
                if state.contains(&w) {
                    continue;
                }
                let Some(mv) = nav.step_move(state[p], w) else { continue };
                let mut next = state.clone();
                next[p] = w;
                if !seen.insert(next.clone()) {
                    continue;
                }
                parent.insert(next.clone(), (state.clone(), mv));
                if next == goal {
                    let mut taken: Vec<TreeMove> = Vec::new();
                    let mut at = goal.clone();
                    while at != begin {
                        let (prev, mv) = parent[&at].clone();
                        taken.push(mv);
                        at = prev;
                    }
                    taken.reverse();
                    return Ok(taken);
                }
                if seen.len() > cap {
                    return Err(TreeError::InfeasibleSwap);
                }
                queue.push_back(next);
            }
        }
    }
    Err(TreeError::InfeasibleSwap)
}

/// Staging orders for the junction maneuver: the pair walk and the two
/// branch clearings interleave differently depending on where the spare
/// room sits, so every order is worth a try.
#[derive(Clone, Copy)]
enum StageOrder {
    PushThenClear,
    ClearThenPush,
    ClearPushClear,
}

/// Exchange two pebbles standing on adjacent cells, restoring every other
/// agent. First choice is a three-move rotation through a shared spare
/// cell; otherwise the pair walks to a junction, two side branches are
/// emptied, a six-move spin trades the pair, and the walk unwinds.
fn swap_adjacent(
    nav: &TreeNav,
    cur: &mut Config,
    plan: &mut TreePlan,
    s: usize,
    t: usize,
) -> bool {
    let a = cur.pebble_position(s);
    let b = cur.pebble_position(t);
    debug_assert!(nav.adj[a].contains(&b), "swap partners must be adjacent");
    // Rotation through a third cell adjacent to both: three moves once
    // that cell is free, and it can be freed by sliding its occupant off
    // toward a spare hole first. Bystanders may move; the caller checks.
    for clear_first in [false, true] {
        for &z in &nav.adj[a] {
            if z == b || !nav.adj[b].contains(&z) {
                continue;
            }
            let mut next = cur.clone();
            let mut moved: TreePlan = Vec::new();
            if !next.is_hole_at(z) {
                if !clear_first {
                    continue;
                }
                let keep: BTreeSet<Vertex> = [a, b].into_iter().collect();
                if !nav.bring_hole(&mut next, &mut moved, z, &keep) {
                    continue;
                }
            }
            let mut ok = true;
            for (f, to) in [(a, z), (b, a), (z, b)] {
                match nav.step_move(f, to) {
                    Some(m) if nav.step(&mut next, m) => moved.push(m),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                plan.extend(moved);
                *cur = next;
                return true;
            }
        }
    }
    let dist = nav.distances(a);
    let mut junctions: Vec<(usize, Vertex)> = (0..nav.cell_count())
        .filter(|&w| nav.adj[w].len() >= 3)
        .filter_map(|w| dist[w].map(|d| (d, w)))
        .collect();
    junctions.sort();
    junctions.truncate(3);
    for &(_, w) in &junctions {
        let nbrs: Vec<Vertex> = nav.adj[w].iter().copied().take(4).collect();
        for &(lead, trail) in &[(s, t), (t, s)] {
            for &n1 in &nbrs {
                for &n2 in &nbrs {
                    if n1 == n2 {
                        continue;
                    }
                    for order in [
                        StageOrder::PushThenClear,
                        StageOrder::ClearThenPush,
                        StageOrder::ClearPushClear,
                    ] {
                        if let Some((steps, next)) =
                            attempt_junction_swap(nav, cur, lead, trail, w, n1, n2, order)
                        {
                            plan.extend(steps);
                            *cur = next;
                            return true;
                        }
                    }
                }
            }
        }
    }
    false
}

/// One staging attempt: bring `lead` onto the junction `w` with `trail`
/// right behind, holes on neighbours `n1` and `n2`, spin the pair through
/// the junction, then reverse the staging walk. Returns the full move
/// list and the resulting configuration, in which exactly the two
/// walkers have traded cells.
#[allow(clippy::too_many_arguments)]
fn attempt_junction_swap(
    nav: &TreeNav,
    base: &Config,
    lead: usize,
    trail: usize,
    w: Vertex,
    n1: Vertex,
    n2: Vertex,
    order: StageOrder,
) -> Option<(TreePlan, Config)> {
    let mut cur = base.clone();
    let mut staging: TreePlan = Vec::new();
    let push = |cur: &mut Config, staging: &mut TreePlan, frozen: &BTreeSet<Vertex>| {
        nav.route_pair(cur, staging, lead, trail, w, frozen)
    };
    let clear = |cur: &mut Config, staging: &mut TreePlan, cell: Vertex, keep: &[Vertex]| {
        let mut avoid: BTreeSet<Vertex> = keep.iter().copied().collect();
        avoid.insert(cur.pebble_position(lead));
        avoid.insert(cur.pebble_position(trail));
        nav.bring_hole(cur, staging, cell, &avoid)
    };
    let staged = match order {
        StageOrder::PushThenClear => {
            push(&mut cur, &mut staging, &BTreeSet::new())
                && clear(&mut cur, &mut staging, n1, &[])
                && clear(&mut cur, &mut staging, n2, &[n1])
        }
        StageOrder::ClearThenPush => {
            clear(&mut cur, &mut staging, n1, &[])
                && clear(&mut cur, &mut staging, n2, &[n1])
                && push(&mut cur, &mut staging, &[n1, n2].into_iter().collect())
        }
        StageOrder::ClearPushClear => {
            clear(&mut cur, &mut staging, n1, &[])
                && push(&mut cur, &mut staging, &[n1].into_iter().collect())
                && clear(&mut cur, &mut staging, n2, &[n1])
        }
    };
    if !staged {
        return None;
    }
    let n_in = cur.pebble_position(trail);
    if cur.pebble_position(lead) != w
        || !nav.adj[w].contains(&n_in)
        || n_in == n1
        || n_in == n2
        || !cur.is_hole_at(n1)
        || !cur.is_hole_at(n2)
    {
        return None;
    }
    let mut full = staging.clone();
    // Six moves spin the pair through the junction and park both holes
    // back where they waited.
    for (from, to) in [(w, n1), (n_in, w), (w, n2), (n1, w), (w, n_in), (n2, w)] {
        let m = nav.step_move(from, to)?;
        if !nav.step(&mut cur, m) {
            return None;
        }
        full.push(m);
    }
    // Unwind the staging walk; hole positions mirror the forward pass
    // exactly, so each reversed step is legal.
    for m in staging.iter().rev() {
        let r = m.reversed();
        if !nav.step(&mut cur, r) {
            return None;
        }
        full.push(r);
    }
    for r in 0..base.pebble_count() {
        let expected = if r == lead {
            base.pebble_position(trail)
        } else if r == trail {
            base.pebble_position(lead)
        } else {
            base.pebble_position(r)
        };
        if cur.pebble_position(r) != expected {
            return None;
        }
    }
    Some((full, cur))
}

/// Translate a tree plan into a digraph plan with the same effect on
/// pebbles. Direct moves ride the (necessarily two-way) cut edge; star
/// hops become exact pebble–hole exchanges inside the component; hops
/// whose mover is itself a hole change nothing and vanish.
pub fn convert_path(
    tp: &[TreeMove],
    d: &Digraph,
    dec: &Decomposition,
    t: &BctTree,
    a: &Config,
) -> Result<Plan, TreeError> {
    if a.hole_count() < 2 {
        return Err(TreeError::TooFewHoles);
    }
    let nav = TreeNav::new(t);
    let mut shadow = a.clone();
    let mut cur = a.clone();
    let mut plan: Plan = Vec::new();
    for &m in tp {
        let (u, v) = (m.from_cell(), m.to_cell());
        if !nav.step(&mut shadow, m) {
            return Err(TreeError::InvalidIntermediate);
        }
        if cur.is_hole_at(u) {
            // A hole slides to a hole: nothing observable moves.
            if !cur.is_hole_at(v) {
                return Err(TreeError::InvalidIntermediate);
            }
            continue;
        }
        match m {
            TreeMove::Direct(_, _) => {
                if !d.has_arc(u, v) || !cur.is_hole_at(v) {
                    return Err(TreeError::InvalidIntermediate);
                }
                cur = swap_config(&cur, u, v);
                plan.push(Move::new(u, v));
            }
            TreeMove::ThroughStar(_, _, _) => {
                let stage = realize_exchange(d, dec, &cur, u, v).map_err(|e| match e {
                    SbdError::TooFewHoles | SbdError::NoHoles => TreeError::TooFewHoles,
                    _ => TreeError::InvalidIntermediate,
                })?;
                cur = swap_config(&cur, u, v);
                plan.extend(stage);
            }
        }
        // The digraph copy must keep shadowing the tree's pebble cells.
        if (0..cur.pebble_count())
            .any(|p| cur.pebble_position(p) != shadow.pebble_position(p))
        {
            return Err(TreeError::InvalidIntermediate);
        }
    }
    Ok(plan)
}
