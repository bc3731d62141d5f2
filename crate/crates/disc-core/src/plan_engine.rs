//! Configurations, moves, plans, and the algebra over them: applying and
//! reversing plans, and deciding exact plan equivalence.
//!
//! Every vertex holds exactly one agent. Agents are pebbles (whose final
//! positions matter) or holes (labelled free space). A move `u -> v` is legal
//! when `(u, v)` is an arc and `v` currently holds a hole; it exchanges the
//! occupants of `u` and `v`, so the hole travels against the arc.

use crate::graph_core::{is_strongly_connected, shortest_path_in_digraph, Digraph, Vertex};
use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// A labelled agent: pebbles and holes each carry their own id space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AgentLabel {
    Pebble(usize),
    Hole(usize),
}

impl AgentLabel {
    pub fn is_hole(&self) -> bool {
        matches!(self, AgentLabel::Hole(_))
    }
}

/// One slide along an arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub from: Vertex,
    pub to: Vertex,
}

impl Move {
    pub fn new(from: Vertex, to: Vertex) -> Move {
        Move { from, to }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} -> {})", self.from, self.to)
    }
}

/// A plan is a (possibly empty) sequence of moves, applied left to right.
pub type Plan = Vec<Move>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveError {
    /// The move does not follow an arc of the digraph.
    NoSuchEdge,
    /// The target vertex holds a pebble, so nothing can slide into it.
    TargetOccupied,
}

impl fmt::Display for MoveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MoveError::NoSuchEdge => write!(f, "move does not follow an arc"),
            MoveError::TargetOccupied => write!(f, "move target holds a pebble"),
        }
    }
}

impl core::error::Error for MoveError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanError {
    /// Some prefix of the plan is not applicable; `index` is the first
    /// failing move.
    InvalidPlan { index: usize, error: MoveError },
    /// Reversal requires strong connectivity.
    NotStronglyConnected,
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::InvalidPlan { index, error } => {
                write!(f, "move #{index} is invalid: {error}")
            }
            PlanError::NotStronglyConnected => write!(f, "digraph is not strongly connected"),
        }
    }
}

impl core::error::Error for PlanError {}

/// A bijection between agents and vertices. Agents are stored flat: indices
/// `0..pebbles` are the pebbles (in label order), the rest are the holes.
#[derive(Clone, PartialEq, Eq)]
pub struct Config {
    to_vertex: Vec<Vertex>,
    at_vertex: Vec<usize>,
    pebbles: usize,
}

impl fmt::Debug for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Config[")?;
        for (i, &v) in self.to_vertex.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match self.label(i) {
                AgentLabel::Pebble(id) => write!(f, "p{id}@{v}")?,
                AgentLabel::Hole(id) => write!(f, "h{id}@{v}")?,
            }
        }
        write!(f, "]")
    }
}

impl Config {
    /// Builds a configuration from the full agent-to-vertex assignment:
    /// `to_vertex[i]` is the vertex of agent `i`, the first `pebbles` agents
    /// being pebbles. The assignment must be a bijection onto `0..n`.
    pub fn new(pebbles: usize, to_vertex: Vec<Vertex>) -> Config {
        let n = to_vertex.len();
        assert!(pebbles <= n, "more pebbles than vertices");
        let mut at_vertex = vec![usize::MAX; n];
        for (agent, &v) in to_vertex.iter().enumerate() {
            assert!(v < n, "agent {agent} placed on nonexistent vertex {v}");
            assert!(at_vertex[v] == usize::MAX, "two agents on vertex {v}");
            at_vertex[v] = agent;
        }
        Config { to_vertex, at_vertex, pebbles }
    }

    /// Places pebble `i` on `pebble_positions[i]` and fills every remaining
    /// vertex with holes in ascending vertex order.
    pub fn from_pebble_positions(n: usize, pebble_positions: &[Vertex]) -> Config {
        let pebbles = pebble_positions.len();
        let taken: BTreeSet<Vertex> = pebble_positions.iter().copied().collect();
        assert_eq!(taken.len(), pebbles, "pebble positions must be distinct");
        let mut to_vertex = pebble_positions.to_vec();
        to_vertex.extend((0..n).filter(|v| !taken.contains(v)));
        Config::new(pebbles, to_vertex)
    }

    pub fn agent_count(&self) -> usize {
        self.to_vertex.len()
    }

    pub fn pebble_count(&self) -> usize {
        self.pebbles
    }

    pub fn hole_count(&self) -> usize {
        self.to_vertex.len() - self.pebbles
    }

    pub fn label(&self, agent: usize) -> AgentLabel {
        if agent < self.pebbles {
            AgentLabel::Pebble(agent)
        } else {
            AgentLabel::Hole(agent - self.pebbles)
        }
    }

    pub fn agent_index(&self, label: AgentLabel) -> usize {
        match label {
            AgentLabel::Pebble(id) => {
                assert!(id < self.pebbles);
                id
            }
            AgentLabel::Hole(id) => {
                assert!(self.pebbles + id < self.to_vertex.len());
                self.pebbles + id
            }
        }
    }

    /// Vertex of a pebble.
    pub fn pebble_position(&self, id: usize) -> Vertex {
        self.to_vertex[self.agent_index(AgentLabel::Pebble(id))]
    }

    /// Vertex of an agent by flat index.
    pub fn position(&self, agent: usize) -> Vertex {
        self.to_vertex[agent]
    }

    pub fn vertex_of(&self, label: AgentLabel) -> Vertex {
        self.to_vertex[self.agent_index(label)]
    }

    /// Flat agent index at a vertex.
    pub fn occupant_index(&self, v: Vertex) -> usize {
        self.at_vertex[v]
    }

    pub fn occupant(&self, v: Vertex) -> AgentLabel {
        self.label(self.at_vertex[v])
    }

    pub fn is_hole_at(&self, v: Vertex) -> bool {
        self.at_vertex[v] >= self.pebbles
    }

    /// Hole positions in ascending vertex order.
    pub fn hole_set(&self) -> BTreeSet<Vertex> {
        self.to_vertex[self.pebbles..].iter().copied().collect()
    }

    /// True when every pebble of `self` stands where it stands in `other`;
    /// hole labels are ignored. This is the success test for pathfinding.
    pub fn pebbles_match(&self, other: &Config) -> bool {
        self.pebbles == other.pebbles
            && self.to_vertex[..self.pebbles] == other.to_vertex[..other.pebbles]
    }

    pub(crate) fn swap_vertices_in_place(&mut self, u: Vertex, v: Vertex) {
        let a = self.at_vertex[u];
        let b = self.at_vertex[v];
        self.at_vertex[u] = b;
        self.at_vertex[v] = a;
        self.to_vertex[a] = v;
        self.to_vertex[b] = u;
    }

    #[cfg(any(test, debug_assertions))]
    pub(crate) fn check_bijection(&self) {
        let mut seen = vec![false; self.to_vertex.len()];
        for (agent, &v) in self.to_vertex.iter().enumerate() {
            assert!(!seen[v], "configuration broke the one-agent-per-vertex invariant");
            seen[v] = true;
            assert_eq!(self.at_vertex[v], agent, "position tables out of sync");
        }
    }
}

/// The configuration with the occupants of `u` and `v` exchanged; everything
/// else stays put. `u = v` returns the input unchanged.
pub fn swap_config(a: &Config, u: Vertex, v: Vertex) -> Config {
    let mut out = a.clone();
    out.swap_vertices_in_place(u, v);
    out
}

/// Applies one move: the occupant of `m.from` slides along the arc into the
/// hole at `m.to` (the hole travels the other way). Moving a hole onto
/// another hole is legal and exchanges the two hole labels.
pub fn apply_move(a: &Config, m: Move, d: &Digraph) -> Result<Config, MoveError> {
    if !d.has_arc(m.from, m.to) {
        return Err(MoveError::NoSuchEdge);
    }
    if !a.is_hole_at(m.to) {
        return Err(MoveError::TargetOccupied);
    }
    let out = swap_config(a, m.from, m.to);
    #[cfg(any(test, debug_assertions))]
    out.check_bijection();
    Ok(out)
}

/// Applies a whole plan left to right. The empty plan returns the input.
pub fn apply_plan(a: &Config, f: &[Move], d: &Digraph) -> Result<Config, PlanError> {
    let mut cur = a.clone();
    for (index, &m) in f.iter().enumerate() {
        if !d.has_arc(m.from, m.to) {
            return Err(PlanError::InvalidPlan { index, error: MoveError::NoSuchEdge });
        }
        if !cur.is_hole_at(m.to) {
            return Err(PlanError::InvalidPlan { index, error: MoveError::TargetOccupied });
        }
        cur.swap_vertices_in_place(m.from, m.to);
    }
    #[cfg(any(test, debug_assertions))]
    cur.check_bijection();
    Ok(cur)
}

/// Builds a plan that undoes `f` exactly: applied after `f` it returns every
/// pebble *and every hole* to its initial vertex.
///
/// Moves are undone in reverse order. A move whose opposite arc exists is
/// undone by that single flipped move. Otherwise the arc `(u, v)` is closed
/// into a directed cycle via a shortest return path and the remaining
/// `l(l-1) - 1` one-step hole rotations of the full cycle rotation are
/// emitted, which restores all occupants of the cycle.
pub fn reverse_plan(d: &Digraph, a: &Config, f: &[Move]) -> Result<Plan, PlanError> {
    if !is_strongly_connected(d) {
        return Err(PlanError::NotStronglyConnected);
    }
    let mut cur = apply_plan(a, f, d)?;
    let mut out = Plan::new();
    for &m in f.iter().rev() {
        if d.has_arc(m.to, m.from) {
            let back = Move::new(m.to, m.from);
            cur = apply_move(&cur, back, d).expect("flipped move undoes its original");
            out.push(back);
            continue;
        }
        // Close (from, to) into a cycle with a shortest path to -> from; the
        // original move was the first step of a full-cycle rotation, so the
        // remaining steps complete the identity.
        let path = shortest_path_in_digraph(d, m.to, m.from, &BTreeSet::new())
            .expect("strongly connected digraphs admit a return path");
        let mut cycle = vec![m.from];
        cycle.extend(&path[..path.len() - 1]);
        let l = cycle.len();
        let pred = |v: Vertex| {
            let i = cycle.iter().position(|&x| x == v).unwrap();
            cycle[(i + l - 1) % l]
        };
        let mut vac = m.from;
        for _ in 0..l * (l - 1) - 1 {
            let p = pred(vac);
            let step = Move::new(p, vac);
            cur = apply_move(&cur, step, d).expect("rotation step stays valid");
            out.push(step);
            vac = p;
        }
    }
    debug_assert_eq!(&cur, a);
    Ok(out)
}

/// Exact plan equivalence: true iff every configuration on which *both*
/// plans are executable is reconfigured identically by them (hole labels
/// included). Concrete move sequences realizing the same abstract motion
/// often have different validity domains — a rotation written for a hole
/// at one cell is undefined when the hole starts elsewhere — so outcomes
/// are compared on the common domain.
///
/// Only the vertices touched by either plan matter, so the check enumerates
/// hole subsets of that touched set — exponential in its size, fine for the
/// small plans this is meant for (a test and verification utility).
pub fn plans_equivalent(d: &Digraph, f: &[Move], g: &[Move]) -> bool {
    let mut touched: BTreeSet<Vertex> = BTreeSet::new();
    for m in f.iter().chain(g.iter()) {
        touched.insert(m.from);
        touched.insert(m.to);
    }
    let cells: Vec<Vertex> = touched.iter().copied().collect();
    assert!(cells.len() <= 20, "plans touch too many vertices for exact equivalence checking");

    // Contents are (initial cell index, is_hole); one labelling per hole
    // subset suffices because a defined plan applies the same positional
    // permutation whatever the labels are.
    let simulate = |plan: &[Move], holes: u32| -> Option<Vec<(usize, bool)>> {
        let mut content: Vec<(usize, bool)> =
            (0..cells.len()).map(|i| (i, holes >> i & 1 == 1)).collect();
        for m in plan {
            if !d.has_arc(m.from, m.to) {
                return None;
            }
            let fi = cells.binary_search(&m.from).unwrap();
            let ti = cells.binary_search(&m.to).unwrap();
            if !content[ti].1 {
                return None;
            }
            content.swap(fi, ti);
        }
        Some(content)
    };

    for holes in 0..(1u32 << cells.len()) {
        if let (Some(rf), Some(rg)) = (simulate(f, holes), simulate(g, holes)) {
            if rf != rg {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{sample_strongly_connected, Rng};

    /// Directed 5-cycle; vertex k here stands for the walkthrough's vertex
    /// k + 1.
    fn five_cycle() -> Digraph {
        Digraph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
    }

    /// One pebble on vertex 1 (the walkthrough's vertex 2), holes elsewhere.
    fn one_pebble_at_1() -> Config {
        Config::from_pebble_positions(5, &[1])
    }

    #[test]
    fn single_move_slides_pebble_into_hole() {
        let d = five_cycle();
        let a = one_pebble_at_1();
        let b = apply_move(&a, Move::new(1, 2), &d).unwrap();
        assert_eq!(b.pebble_position(0), 2);
        assert!(b.is_hole_at(1));
    }

    #[test]
    fn move_errors() {
        let d = five_cycle();
        let a = Config::from_pebble_positions(5, &[1, 2]);
        assert_eq!(apply_move(&a, Move::new(2, 1), &d), Err(MoveError::NoSuchEdge));
        assert_eq!(apply_move(&a, Move::new(1, 2), &d), Err(MoveError::TargetOccupied));
    }

    #[test]
    fn hole_to_hole_move_swaps_hole_labels() {
        let d = five_cycle();
        let a = one_pebble_at_1();
        let h_at_2 = a.occupant(2);
        let h_at_3 = a.occupant(3);
        let b = apply_move(&a, Move::new(2, 3), &d).unwrap();
        assert_eq!(b.occupant(3), h_at_2);
        assert_eq!(b.occupant(2), h_at_3);
        assert_eq!(b.pebble_position(0), 1);
    }

    #[test]
    fn three_step_plan_walks_pebble_around() {
        let d = five_cycle();
        let a = one_pebble_at_1();
        let f = vec![Move::new(1, 2), Move::new(2, 3), Move::new(3, 4)];
        let b = apply_plan(&a, &f, &d).unwrap();
        assert_eq!(b.pebble_position(0), 4);
    }

    #[test]
    fn redundant_plan_reaches_the_same_pebble_outcome() {
        let d = five_cycle();
        let a = one_pebble_at_1();
        let short = vec![Move::new(1, 2), Move::new(2, 3), Move::new(3, 4)];
        let long = vec![
            Move::new(1, 2),
            Move::new(2, 3),
            Move::new(3, 4),
            Move::new(4, 0),
            Move::new(0, 1),
            Move::new(1, 2),
            Move::new(2, 3),
            Move::new(3, 4),
        ];
        let b1 = apply_plan(&a, &short, &d).unwrap();
        let b2 = apply_plan(&a, &long, &d).unwrap();
        assert_eq!(b1.pebble_position(0), b2.pebble_position(0));
    }

    #[test]
    fn empty_plan_is_identity() {
        let d = five_cycle();
        let a = one_pebble_at_1();
        assert_eq!(apply_plan(&a, &[], &d).unwrap(), a);
    }

    #[test]
    fn apply_plan_reports_failing_index() {
        let d = five_cycle();
        let a = one_pebble_at_1();
        let f = vec![Move::new(2, 3), Move::new(3, 2)];
        assert_eq!(
            apply_plan(&a, &f, &d),
            Err(PlanError::InvalidPlan { index: 1, error: MoveError::NoSuchEdge })
        );
    }

    #[test]
    fn swap_config_is_involution_and_matches_moves() {
        let d = five_cycle();
        let a = one_pebble_at_1();
        assert_eq!(swap_config(&a, 2, 2), a);
        assert_eq!(swap_config(&swap_config(&a, 1, 2), 1, 2), a);
        let via_move = apply_move(&a, Move::new(1, 2), &d).unwrap();
        assert_eq!(via_move, swap_config(&a, 1, 2));
    }

    #[test]
    fn reverse_of_empty_is_empty() {
        let d = five_cycle();
        let a = one_pebble_at_1();
        assert_eq!(reverse_plan(&d, &a, &[]).unwrap(), Plan::new());
    }

    #[test]
    fn reverse_single_move_on_cycle_round_trips_exactly() {
        let d = five_cycle();
        let a = one_pebble_at_1();
        let f = vec![Move::new(1, 2)];
        let r = reverse_plan(&d, &a, &f).unwrap();
        let mid = apply_plan(&a, &f, &d).unwrap();
        let back = apply_plan(&mid, &r, &d).unwrap();
        assert_eq!(back, a, "every pebble and hole returns home");
    }

    #[test]
    fn reverse_uses_flipped_moves_on_bidirectional_edges() {
        let d = Digraph::new(3, &[(0, 1), (1, 0), (1, 2), (2, 1), (2, 0), (0, 2)]);
        let a = Config::from_pebble_positions(3, &[0]);
        let f = vec![Move::new(0, 1), Move::new(1, 2)];
        let r = reverse_plan(&d, &a, &f).unwrap();
        assert_eq!(r, vec![Move::new(2, 1), Move::new(1, 0)]);
    }

    #[test]
    fn reverse_requires_strong_connectivity() {
        let d = Digraph::new(3, &[(0, 1), (1, 2)]);
        let a = Config::from_pebble_positions(3, &[0]);
        assert_eq!(reverse_plan(&d, &a, &[]), Err(PlanError::NotStronglyConnected));
    }

    #[test]
    fn reverse_random_plans_round_trip() {
        let mut rng = Rng::new(0x5eed_1001);
        for _ in 0..200 {
            let d = sample_strongly_connected(&mut rng, 7);
            let n = d.vertex_count();
            let pebbles = 1 + rng.below(n - 1);
            let mut verts: Vec<Vertex> = (0..n).collect();
            rng.shuffle(&mut verts);
            let a = Config::from_pebble_positions(n, &verts[..pebbles]);
            // Random valid walk.
            let mut cur = a.clone();
            let mut f = Plan::new();
            for _ in 0..rng.below(12) {
                let candidates: Vec<Move> = d
                    .arcs()
                    .filter(|&(_, v)| cur.is_hole_at(v))
                    .map(|(u, v)| Move::new(u, v))
                    .collect();
                if candidates.is_empty() {
                    break;
                }
                let m = *rng.pick(&candidates);
                cur = apply_move(&cur, m, &d).unwrap();
                f.push(m);
            }
            let r = reverse_plan(&d, &a, &f).unwrap();
            let back = apply_plan(&cur, &r, &d).unwrap();
            assert_eq!(back, a);
        }
    }

    #[test]
    fn plan_concatenation_is_associative() {
        let d = five_cycle();
        let a = one_pebble_at_1();
        let f = vec![Move::new(1, 2)];
        let g = vec![Move::new(2, 3), Move::new(3, 4)];
        let fg: Plan = f.iter().chain(g.iter()).copied().collect();
        let step = apply_plan(&apply_plan(&a, &f, &d).unwrap(), &g, &d).unwrap();
        let joined = apply_plan(&a, &fg, &d).unwrap();
        assert_eq!(step, joined);
    }

    #[test]
    fn equivalence_basics() {
        let d = five_cycle();
        let f = vec![Move::new(1, 2)];
        assert!(plans_equivalent(&d, &f, &f));
        let g = vec![Move::new(1, 2), Move::new(2, 3)];
        assert!(!plans_equivalent(&d, &f, &g));
    }

    #[test]
    fn full_rotation_is_equivalent_to_empty_plan() {
        let d = five_cycle();
        // One-step hole rotations: vacancy walks backward l(l-1) times.
        let cycle = [0usize, 1, 2, 3, 4];
        let l = cycle.len();
        let mut plan = Plan::new();
        let mut vac = 0usize;
        for _ in 0..l * (l - 1) {
            let p = cycle[(cycle.iter().position(|&x| x == vac).unwrap() + l - 1) % l];
            plan.push(Move::new(p, vac));
            vac = p;
        }
        assert!(plans_equivalent(&d, &plan, &[]));
        // A partial rotation is not the identity.
        assert!(!plans_equivalent(&d, &plan[..l - 1], &[]));
    }
}
