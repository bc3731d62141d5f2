//! Directed graphs and their structure: strong connectivity, the split into
//! strongly biconnected components and corridors, ear decompositions, and
//! chains of cycles that the motion primitives ride along.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Vertices are dense indices `0..n`.
pub type Vertex = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphError {
    NotStronglyConnected,
    NotStronglyBiconnected,
    VertexNotInComponent,
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::NotStronglyConnected => write!(f, "digraph is not strongly connected"),
            GraphError::NotStronglyBiconnected => {
                write!(f, "subgraph is not strongly biconnected")
            }
            GraphError::VertexNotInComponent => write!(f, "vertex does not belong to component"),
        }
    }
}

impl core::error::Error for GraphError {}

/// A simple directed graph without self-loops.
#[derive(Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    out: Vec<Vec<Vertex>>,
    inn: Vec<Vec<Vertex>>,
    arcs: BTreeSet<(Vertex, Vertex)>,
}

impl fmt::Debug for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digraph(n={}, m={})", self.n, self.arcs.len())
    }
}

impl Digraph {
    /// Builds a digraph on `n` vertices from an arc list. Duplicate arcs are
    /// collapsed; self-loops and out-of-range endpoints are programming
    /// errors.
    pub fn new(n: usize, arcs: &[(Vertex, Vertex)]) -> Self {
        let mut set = BTreeSet::new();
        for &(u, v) in arcs {
            assert!(u < n && v < n, "arc ({u}, {v}) out of range for n={n}");
            assert!(u != v, "self-loop at vertex {u}");
            set.insert((u, v));
        }
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for &(u, v) in &set {
            out[u].push(v);
            inn[v].push(u);
        }
        Digraph { n, out, inn, arcs: set }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn has_arc(&self, u: Vertex, v: Vertex) -> bool {
        self.arcs.contains(&(u, v))
    }

    pub fn out_neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.out[v]
    }

    pub fn in_neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.inn[v]
    }

    pub fn arcs(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.arcs.iter().copied()
    }

    /// Undirected edge set of the underlying graph, each edge as `(min, max)`.
    pub fn underlying_edges(&self) -> BTreeSet<(Vertex, Vertex)> {
        self.arcs
            .iter()
            .map(|&(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect()
    }

    /// The digraph with every arc doubled: `(u, v)` and `(v, u)` for each
    /// underlying edge.
    pub fn bidirectionalized(&self) -> Digraph {
        let mut arcs = Vec::new();
        for (u, v) in self.underlying_edges() {
            arcs.push((u, v));
            arcs.push((v, u));
        }
        Digraph::new(self.n, &arcs)
    }
}

/// Adjacency sets of the underlying undirected graph.
pub fn underlying_graph(d: &Digraph) -> Vec<BTreeSet<Vertex>> {
    let mut adj = vec![BTreeSet::new(); d.vertex_count()];
    for (u, v) in d.arcs() {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    adj
}

pub fn is_strongly_connected(d: &Digraph) -> bool {
    let n = d.vertex_count();
    if n <= 1 {
        return true;
    }
    let reach = |forward: bool| -> usize {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        seen[0] = true;
        queue.push_back(0);
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            let nbrs = if forward { d.out_neighbors(v) } else { d.in_neighbors(v) };
            for &w in nbrs {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count
    };
    reach(true) == n && reach(false) == n
}

/// A non-trivial strongly biconnected component: at least three vertices,
/// underlying graph 2-connected, induced directed subgraph strongly
/// connected.
#[derive(Debug, Clone)]
pub struct Component {
    vertices: Vec<Vertex>,
    vset: BTreeSet<Vertex>,
    out: BTreeMap<Vertex, Vec<Vertex>>,
    inn: BTreeMap<Vertex, Vec<Vertex>>,
    arcs: BTreeSet<(Vertex, Vertex)>,
}

impl Component {
    fn from_vertices(d: &Digraph, vset: BTreeSet<Vertex>) -> Component {
        let vertices: Vec<Vertex> = vset.iter().copied().collect();
        let mut out: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
        let mut inn: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
        let mut arcs = BTreeSet::new();
        for &v in &vertices {
            out.insert(v, Vec::new());
            inn.insert(v, Vec::new());
        }
        for &v in &vertices {
            for &w in d.out_neighbors(v) {
                if vset.contains(&w) {
                    arcs.insert((v, w));
                    out.get_mut(&v).unwrap().push(w);
                    inn.get_mut(&w).unwrap().push(v);
                }
            }
        }
        Component { vertices, vset, out, inn, arcs }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vset.contains(&v)
    }

    pub fn has_arc(&self, u: Vertex, v: Vertex) -> bool {
        self.arcs.contains(&(u, v))
    }

    pub fn out_neighbors(&self, v: Vertex) -> &[Vertex] {
        self.out.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn in_neighbors(&self, v: Vertex) -> &[Vertex] {
        self.inn.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn arcs(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn underlying_edge_count(&self) -> usize {
        self.arcs
            .iter()
            .map(|&(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// A maximal chain of bridge edges; `vertices` lists the path in order. The
/// two end vertices may also belong to components or to other corridors;
/// interior vertices belong to nothing else.
#[derive(Debug, Clone)]
pub struct Corridor {
    pub vertices: Vec<Vertex>,
}

/// The split of a strongly connected digraph into non-trivial strongly
/// biconnected components and corridors, glued at articulation points.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub components: Vec<Component>,
    pub corridors: Vec<Corridor>,
    pub articulation_points: Vec<Vertex>,
}

impl Decomposition {
    /// Indices of the components containing `v` (an articulation point can
    /// sit in several).
    pub fn components_with(&self, v: Vertex) -> Vec<usize> {
        (0..self.components.len()).filter(|&i| self.components[i].contains(v)).collect()
    }
}

/// Underlying biconnected structure via an iterative lowpoint search.
/// Returns `(blocks, articulation points)` where each block is the vertex
/// set of one biconnected component of the underlying graph.
fn underlying_blocks(d: &Digraph) -> (Vec<BTreeSet<Vertex>>, BTreeSet<Vertex>) {
    let n = d.vertex_count();
    let adj: Vec<Vec<Vertex>> =
        underlying_graph(d).into_iter().map(|s| s.into_iter().collect()).collect();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut timer = 0usize;
    let mut blocks: Vec<BTreeSet<Vertex>> = Vec::new();
    let mut cut = BTreeSet::new();
    let mut edge_stack: Vec<(Vertex, Vertex)> = Vec::new();

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // frame: (vertex, parent, next neighbor index)
        let mut stack: Vec<(Vertex, Vertex, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        let mut root_children = 0usize;
        while let Some(&mut (v, parent, ref mut idx)) = stack.last_mut() {
            if *idx < adj[v].len() {
                let w = adj[v][*idx];
                *idx += 1;
                if disc[w] == usize::MAX {
                    edge_stack.push((v, w));
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    if v == root {
                        root_children += 1;
                    }
                    stack.push((w, v, 0));
                } else if w != parent && disc[w] < disc[v] {
                    edge_stack.push((v, w));
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&mut (u, _, _)) = stack.last_mut() {
                    low[u] = low[u].min(low[v]);
                    if low[v] >= disc[u] {
                        // `u` separates the block that ends with edge (u, v).
                        let mut block = BTreeSet::new();
                        while let Some(&(x, y)) = edge_stack.last() {
                            if disc[x] >= disc[v] || (x, y) == (u, v) {
                                edge_stack.pop();
                                block.insert(x);
                                block.insert(y);
                                if (x, y) == (u, v) {
                                    break;
                                }
                            } else {
                                break;
                            }
                        }
                        if !block.is_empty() {
                            blocks.push(block);
                        }
                        if u != root || root_children > 1 {
                            cut.insert(u);
                        }
                    }
                }
            }
        }
    }
    (blocks, cut)
}

/// Splits a strongly connected digraph into its non-trivial strongly
/// biconnected components and its corridors.
pub fn decompose(d: &Digraph) -> Result<Decomposition, GraphError> {
    if !is_strongly_connected(d) {
        return Err(GraphError::NotStronglyConnected);
    }
    let (blocks, cut) = underlying_blocks(d);
    let mut components = Vec::new();
    let mut bridges: Vec<(Vertex, Vertex)> = Vec::new();
    for block in blocks {
        if block.len() >= 3 {
            components.push(Component::from_vertices(d, block));
        } else if block.len() == 2 {
            let mut it = block.into_iter();
            let u = it.next().unwrap();
            let v = it.next().unwrap();
            bridges.push((u, v));
        }
    }
    components.sort_by(|a, b| a.vertices().cmp(b.vertices()));

    // Chain bridges into corridors. A vertex is corridor-interior when it
    // touches exactly two bridges and no component.
    let mut bridge_adj: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    for &(u, v) in &bridges {
        bridge_adj.entry(u).or_default().push(v);
        bridge_adj.entry(v).or_default().push(u);
    }
    let in_component: BTreeSet<Vertex> =
        components.iter().flat_map(|c| c.vertices().iter().copied()).collect();
    let interior = |v: Vertex| -> bool {
        !in_component.contains(&v) && bridge_adj.get(&v).map(Vec::len) == Some(2)
    };
    let mut used: BTreeSet<(Vertex, Vertex)> = BTreeSet::new();
    let mut corridors = Vec::new();
    let mut endpoints: Vec<Vertex> = bridge_adj.keys().copied().filter(|&v| !interior(v)).collect();
    endpoints.sort_unstable();
    for &start in &endpoints {
        for i in 0..bridge_adj[&start].len() {
            let mut prev = start;
            let mut cur = bridge_adj[&start][i];
            if used.contains(&ord(prev, cur)) {
                continue;
            }
            let mut path = vec![prev];
            loop {
                used.insert(ord(prev, cur));
                path.push(cur);
                if !interior(cur) {
                    break;
                }
                let next = *bridge_adj[&cur].iter().find(|&&x| x != prev).unwrap();
                prev = cur;
                cur = next;
            }
            corridors.push(Corridor { vertices: path });
        }
    }
    corridors.sort_by(|a, b| a.vertices.cmp(&b.vertices));

    // Corridor-interior cut vertices are bookkept inside their corridor; the
    // reported articulation points are the glue vertices where components or
    // corridors meet.
    let articulation_points = cut.into_iter().filter(|&v| !interior(v)).collect();

    Ok(Decomposition {
        components,
        corridors,
        articulation_points,
    })
}

fn ord(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    /// The underlying graph is a simple cycle (some arcs may be doubled).
    PartiallyBidirectionalCycle,
    /// Everything else: admits a regular open ear decomposition.
    RegularOed,
}

/// Classifies a strongly biconnected component.
pub fn classify_component(c: &Component) -> Result<ComponentKind, GraphError> {
    if c.len() < 3 {
        return Err(GraphError::NotStronglyBiconnected);
    }
    let sub = component_digraph(c).0;
    if !is_strongly_connected(&sub) {
        return Err(GraphError::NotStronglyBiconnected);
    }
    let (blocks, _) = underlying_blocks(&sub);
    if blocks.len() != 1 || blocks[0].len() != sub.vertex_count() {
        return Err(GraphError::NotStronglyBiconnected);
    }
    if c.underlying_edge_count() == c.len() {
        Ok(ComponentKind::PartiallyBidirectionalCycle)
    } else {
        Ok(ComponentKind::RegularOed)
    }
}

/// Local copy of the component as a digraph plus the vertex relabelling
/// (`local -> global`, `global -> local`).
fn component_digraph(c: &Component) -> (Digraph, Vec<Vertex>, BTreeMap<Vertex, usize>) {
    let to_global: Vec<Vertex> = c.vertices().to_vec();
    let to_local: BTreeMap<Vertex, usize> =
        to_global.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let arcs: Vec<(usize, usize)> =
        c.arcs().map(|(u, v)| (to_local[&u], to_local[&v])).collect();
    (Digraph::new(to_global.len(), &arcs), to_global, to_local)
}

/// For a component whose underlying graph is a simple cycle, returns the
/// vertices in directed ring order: every consecutive pair (wrapping) is an
/// arc of the component.
pub fn directed_ring(c: &Component) -> Option<Vec<Vertex>> {
    let l = c.len();
    if l < 3 || c.underlying_edge_count() != l {
        return None;
    }
    let mut und: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    for (u, v) in c.arcs() {
        und.entry(u).or_default().push(v);
        und.entry(v).or_default().push(u);
    }
    for v in c.vertices() {
        let mut nb: Vec<Vertex> = und.get(v)?.clone();
        nb.sort_unstable();
        nb.dedup();
        if nb.len() != 2 {
            return None;
        }
    }
    let start = c.vertices()[0];
    'dir: for &second in c.out_neighbors(start) {
        let mut ring = vec![start, second];
        loop {
            let cur = *ring.last().unwrap();
            let prev = ring[ring.len() - 2];
            let mut nb: Vec<Vertex> = und[&cur].clone();
            nb.sort_unstable();
            nb.dedup();
            let next = *nb.iter().find(|&&x| x != prev)?;
            if next == start {
                if ring.len() == l && c.has_arc(cur, start) {
                    return Some(ring);
                }
                continue 'dir;
            }
            if !c.has_arc(cur, next) {
                continue 'dir;
            }
            ring.push(next);
            if ring.len() > l {
                continue 'dir;
            }
        }
    }
    None
}

/// An open ear decomposition. `ears[0]` is the basic cycle in ring order;
/// each later ear is a directed path `s, x1, ..., t` whose endpoints were
/// already covered and whose interior vertices are new. Single-arc ears
/// (just `[s, t]`) fill in the remaining arcs.
#[derive(Debug, Clone)]
pub struct EarDecomposition {
    pub ears: Vec<Vec<Vertex>>,
}

/// The pair a regular decomposition is built around: the basic cycle and a
/// non-trivial ear whose endpoints both lie on it.
#[derive(Debug, Clone)]
pub struct SwapGadget {
    pub basic_cycle: Vec<Vertex>,
    pub ear: Vec<Vertex>,
}

impl EarDecomposition {
    pub fn basic_cycle(&self) -> &[Vertex] {
        &self.ears[0]
    }

    /// Regular means: the basic cycle has at least three vertices and some
    /// ear has interior vertices with both endpoints on the basic cycle.
    pub fn is_regular(&self) -> bool {
        self.swap_gadget().is_some()
    }

    pub fn swap_gadget(&self) -> Option<SwapGadget> {
        let cycle: BTreeSet<Vertex> = self.ears[0].iter().copied().collect();
        if cycle.len() < 3 {
            return None;
        }
        for ear in &self.ears[1..] {
            if ear.len() >= 3 && cycle.contains(&ear[0]) && cycle.contains(ear.last().unwrap()) {
                return Some(SwapGadget { basic_cycle: self.ears[0].clone(), ear: ear.clone() });
            }
        }
        None
    }
}

/// Shortest directed path `from -> ... -> to` inside the vertex set accepted
/// by `allowed`, avoiding `avoid`. Returns the full vertex sequence.
pub(crate) fn shortest_path_where(
    out: impl Fn(Vertex) -> Vec<Vertex>,
    from: Vertex,
    to: Vertex,
    avoid: &BTreeSet<Vertex>,
) -> Option<Vec<Vertex>> {
    if avoid.contains(&from) || avoid.contains(&to) {
        return None;
    }
    if from == to {
        return Some(vec![from]);
    }
    let mut parent: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    let mut queue = VecDeque::new();
    queue.push_back(from);
    parent.insert(from, from);
    while let Some(v) = queue.pop_front() {
        for w in out(v) {
            if avoid.contains(&w) || parent.contains_key(&w) {
                continue;
            }
            parent.insert(w, v);
            if w == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = parent[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(w);
        }
    }
    None
}

pub(crate) fn shortest_path_in_digraph(
    d: &Digraph,
    from: Vertex,
    to: Vertex,
    avoid: &BTreeSet<Vertex>,
) -> Option<Vec<Vertex>> {
    shortest_path_where(|v| d.out_neighbors(v).to_vec(), from, to, avoid)
}

/// Shortest directed cycle through `v` with at least `min_len` vertices,
/// restricted to the component.
fn shortest_cycle_through(c: &Component, v: Vertex, min_len: usize) -> Option<Vec<Vertex>> {
    let mut best: Option<Vec<Vertex>> = None;
    for &w in c.out_neighbors(v) {
        // Path w -> v, optionally forbidding the direct arc by length demand.
        let avoid = BTreeSet::new();
        if let Some(path) = shortest_path_where(
            |x| {
                c.out_neighbors(x)
                    .iter()
                    .copied()
                    .filter(|&y| !(x == w && y == v && min_len > 2))
                    .collect()
            },
            w,
            v,
            &avoid,
        ) {
            let mut cycle = vec![v];
            cycle.extend(&path[..path.len() - 1]);
            if cycle.len() >= min_len
                && best.as_ref().map(|b: &Vec<Vertex>| cycle.len() < b.len()).unwrap_or(true)
            {
                best = Some(cycle);
            }
        }
    }
    best
}

fn cycle_arcs(cycle: &[Vertex]) -> Vec<(Vertex, Vertex)> {
    (0..cycle.len()).map(|i| (cycle[i], cycle[(i + 1) % cycle.len()])).collect()
}

/// Computes an open ear decomposition of a strongly biconnected component.
/// When the component is not a partially bidirectional cycle, the result is
/// regular.
pub fn open_ear_decomposition(c: &Component) -> Result<EarDecomposition, GraphError> {
    let kind = classify_component(c)?;
    if kind == ComponentKind::PartiallyBidirectionalCycle {
        let ring = directed_ring(c).ok_or(GraphError::NotStronglyBiconnected)?;
        let mut ears = vec![ring.clone()];
        let ring_arcs: BTreeSet<(Vertex, Vertex)> = cycle_arcs(&ring).into_iter().collect();
        for (u, v) in c.arcs() {
            if !ring_arcs.contains(&(u, v)) {
                ears.push(vec![u, v]);
            }
        }
        return Ok(EarDecomposition { ears });
    }

    // Regular case: try basic cycles until a decomposition whose first ear is
    // non-trivial with both endpoints on the cycle comes out.
    let mut starts: Vec<Vertex> = c.vertices().to_vec();
    starts.sort_unstable();
    let mut fallback: Option<EarDecomposition> = None;
    for &s in &starts {
        let Some(cycle) = shortest_cycle_through(c, s, 3) else { continue };
        if let Some(ed) = try_ears_from(c, &cycle) {
            if ed.is_regular() {
                return Ok(ed);
            }
            if fallback.is_none() {
                fallback = Some(ed);
            }
        }
    }
    // Second pass: longer basic cycles sometimes leave room for a regular
    // first ear when the shortest ones do not.
    for &s in &starts {
        for len in 4..=c.len() {
            let Some(cycle) = shortest_cycle_through(c, s, len) else { break };
            if cycle.len() < len {
                continue;
            }
            if let Some(ed) = try_ears_from(c, &cycle) {
                if ed.is_regular() {
                    return Ok(ed);
                }
                if fallback.is_none() {
                    fallback = Some(ed);
                }
            }
        }
    }
    fallback.ok_or(GraphError::NotStronglyBiconnected)
}

/// Greedy open-ear construction from a fixed basic cycle: repeatedly attach
/// the shortest directed path that starts and ends on covered vertices,
/// runs through new interior, and has distinct endpoints; then absorb the
/// remaining arcs between covered vertices as single-arc ears.
fn try_ears_from(c: &Component, cycle: &[Vertex]) -> Option<EarDecomposition> {
    let mut covered: BTreeSet<Vertex> = cycle.iter().copied().collect();
    let mut covered_arcs: BTreeSet<(Vertex, Vertex)> = cycle_arcs(cycle).into_iter().collect();
    let mut ears = vec![cycle.to_vec()];
    let mut want_regular = true;

    while covered.len() < c.len() {
        let mut best: Option<Vec<Vertex>> = None;
        let anchor: Vec<Vertex> = if want_regular {
            cycle.to_vec()
        } else {
            covered.iter().copied().collect()
        };
        for &s in &anchor {
            for &x in c.out_neighbors(s) {
                if covered.contains(&x) {
                    continue;
                }
                // Shortest path from x back to a covered vertex != s through
                // uncovered interior.
                let target_set: BTreeSet<Vertex> = if want_regular {
                    cycle.iter().copied().filter(|&t| t != s).collect()
                } else {
                    covered.iter().copied().filter(|&t| t != s).collect()
                };
                if let Some(path) = bfs_to_set(c, x, &target_set, &covered) {
                    let mut ear = vec![s];
                    ear.extend(path);
                    if best.as_ref().map(|b: &Vec<Vertex>| ear.len() < b.len()).unwrap_or(true) {
                        best = Some(ear);
                    }
                }
            }
        }
        match best {
            Some(ear) => {
                for &v in &ear {
                    covered.insert(v);
                }
                for i in 0..ear.len() - 1 {
                    covered_arcs.insert((ear[i], ear[i + 1]));
                }
                ears.push(ear);
                want_regular = false;
            }
            None => {
                if want_regular {
                    // No ear anchored on the basic cycle alone; allow any.
                    want_regular = false;
                    if covered.len() == cycle.len() && covered.len() < c.len() {
                        continue;
                    }
                    continue;
                }
                return None;
            }
        }
    }
    for (u, v) in c.arcs() {
        if !covered_arcs.contains(&(u, v)) {
            ears.push(vec![u, v]);
        }
    }
    Some(EarDecomposition { ears })
}

/// BFS from `from` through uncovered vertices to any vertex of `targets`;
/// the returned path starts at `from` and ends at the reached target.
fn bfs_to_set(
    c: &Component,
    from: Vertex,
    targets: &BTreeSet<Vertex>,
    covered: &BTreeSet<Vertex>,
) -> Option<Vec<Vertex>> {
    if targets.contains(&from) {
        return Some(vec![from]);
    }
    if covered.contains(&from) {
        return None;
    }
    let mut parent: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    let mut queue = VecDeque::new();
    parent.insert(from, from);
    queue.push_back(from);
    while let Some(v) = queue.pop_front() {
        for &w in c.out_neighbors(v) {
            if parent.contains_key(&w) {
                continue;
            }
            if targets.contains(&w) {
                let mut path = vec![w, v];
                let mut cur = v;
                while cur != from {
                    cur = parent[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            if covered.contains(&w) {
                continue;
            }
            parent.insert(w, v);
            queue.push_back(w);
        }
    }
    None
}

/// A chain of simple directed cycles; consecutive cycles share the arc
/// recorded in `links`, so a pair of holes can hand a rider from one cycle
/// to the next by rotations alone.
#[derive(Debug, Clone)]
pub struct CycleChain {
    pub cycles: Vec<Vec<Vertex>>,
    /// `links[i]` is an arc lying on both `cycles[i]` and `cycles[i + 1]`.
    pub links: Vec<(Vertex, Vertex)>,
}

/// All ear cycles of a decomposition: the basic cycle itself, plus, for each
/// later ear, the simple cycle formed by the ear and a shortest return path
/// through earlier ears.
pub(crate) fn ear_cycles(c: &Component, ed: &EarDecomposition) -> Vec<Vec<Vertex>> {
    let mut cycles = vec![ed.ears[0].clone()];
    let mut arcs_so_far: BTreeSet<(Vertex, Vertex)> =
        cycle_arcs(&ed.ears[0]).into_iter().collect();
    for ear in &ed.ears[1..] {
        let s = ear[0];
        let t = *ear.last().unwrap();
        let prior = arcs_so_far.clone();
        let ret = shortest_path_where(
            |v| {
                prior
                    .iter()
                    .filter(|&&(a, _)| a == v)
                    .map(|&(_, b)| b)
                    .collect()
            },
            t,
            s,
            &BTreeSet::new(),
        );
        if let Some(ret) = ret {
            // Ear vertices s..t followed by return interior t..s (exclusive).
            let mut cyc = ear.clone();
            cyc.extend(ret.iter().skip(1).take(ret.len().saturating_sub(2)));
            if is_simple_cycle(c, &cyc) {
                cycles.push(cyc);
            }
        }
        for i in 0..ear.len() - 1 {
            arcs_so_far.insert((ear[i], ear[i + 1]));
        }
    }
    cycles
}

fn is_simple_cycle(c: &Component, cyc: &[Vertex]) -> bool {
    if cyc.len() < 2 {
        return false;
    }
    let set: BTreeSet<Vertex> = cyc.iter().copied().collect();
    if set.len() != cyc.len() {
        return false;
    }
    (0..cyc.len()).all(|i| c.has_arc(cyc[i], cyc[(i + 1) % cyc.len()]))
}

/// Builds a chain of cycles leading from `v` to `w` inside the component:
/// `v` lies on the first cycle, `w` on the last, and consecutive cycles
/// share an arc. `forbidden` vertices may not appear on any chosen cycle.
pub fn cycle_sequence(
    c: &Component,
    ed: &EarDecomposition,
    v: Vertex,
    w: Vertex,
) -> Result<CycleChain, GraphError> {
    cycle_sequence_avoiding(c, ed, v, w, &BTreeSet::new())
}

pub(crate) fn cycle_sequence_avoiding(
    c: &Component,
    ed: &EarDecomposition,
    v: Vertex,
    w: Vertex,
    forbidden: &BTreeSet<Vertex>,
) -> Result<CycleChain, GraphError> {
    if !c.contains(v) || !c.contains(w) {
        return Err(GraphError::VertexNotInComponent);
    }
    let all = ear_cycles(c, ed);
    let usable: Vec<&Vec<Vertex>> =
        all.iter().filter(|cyc| cyc.iter().all(|x| !forbidden.contains(x))).collect();
    let arc_sets: Vec<BTreeSet<(Vertex, Vertex)>> =
        usable.iter().map(|cyc| cycle_arcs(cyc).into_iter().collect()).collect();
    let starts: Vec<usize> =
        (0..usable.len()).filter(|&i| usable[i].contains(&v)).collect();
    if starts.is_empty() {
        return Err(GraphError::VertexNotInComponent);
    }
    // BFS over cycles, adjacency = shared arc.
    let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &s in &starts {
        parent.insert(s, s);
        queue.push_back(s);
    }
    let mut goal = None;
    'bfs: while let Some(i) = queue.pop_front() {
        if usable[i].contains(&w) {
            goal = Some(i);
            break 'bfs;
        }
        for j in 0..usable.len() {
            if parent.contains_key(&j) {
                continue;
            }
            if arc_sets[i].intersection(&arc_sets[j]).next().is_some() {
                parent.insert(j, i);
                queue.push_back(j);
            }
        }
    }
    let Some(goal) = goal else {
        return Err(GraphError::VertexNotInComponent);
    };
    let mut order = vec![goal];
    let mut cur = goal;
    while parent[&cur] != cur {
        cur = parent[&cur];
        order.push(cur);
    }
    order.reverse();
    let cycles: Vec<Vec<Vertex>> = order.iter().map(|&i| usable[i].clone()).collect();
    let mut links = Vec::new();
    for k in 0..order.len().saturating_sub(1) {
        let shared = *arc_sets[order[k]]
            .intersection(&arc_sets[order[k + 1]])
            .next()
            .expect("adjacent chain cycles share an arc");
        links.push(shared);
    }
    Ok(CycleChain { cycles, links })
}
