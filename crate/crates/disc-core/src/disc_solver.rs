//! The top-level solver: decide whether an instance is feasible, produce a
//! verified plan for it, and post-process plans.
//!
//! A strongly connected digraph whose underlying graph is one simple cycle
//! is planned directly by caravan scheduling (which needs only one hole).
//! Every other digraph goes through the component-tree pipeline — build the
//! tree, park the pebbles on target cells, permute them home, convert the
//! tree plan into digraph moves — which needs at least two holes. Instances
//! with fewer holes still get an exact feasibility verdict (no holes:
//! nothing moves; one hole: the vacancy-walk group engine), but a feasible
//! one-hole instance on a non-cycle graph is answered `Unsupported` rather
//! than planned.
//!
//! Every plan handed out by [`solve`] is replayed against the instance
//! before it is returned; a plan that fails that replay is a defect in the
//! construction, never an output.

use crate::graph_core::{
    classify_component, decompose, directed_ring, is_strongly_connected, Component,
    ComponentKind, Decomposition, Digraph, Vertex,
};
use crate::permgroup::one_hole_reachable;
use crate::plan_engine::{apply_move, apply_plan, Config, Move, Plan};
use crate::sbd_solver::solve_pb_cycle;
use crate::tree_solver::{build_bct, convert_path, lift_config, pmt_feasible, pmt_solve};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiscError {
    /// The solver only covers strongly connected digraphs.
    NotStronglyConnected,
    /// The instance is structurally broken (bad sizes, duplicate or
    /// out-of-range targets); the message says which check failed.
    BadInstance(String),
}

impl fmt::Display for DiscError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscError::NotStronglyConnected => write!(f, "digraph is not strongly connected"),
            DiscError::BadInstance(why) => write!(f, "bad instance: {why}"),
        }
    }
}

impl core::error::Error for DiscError {}

/// A full problem statement: the graph, where everyone starts, and where
/// each pebble has to end up. Hole end positions are unconstrained.
#[derive(Debug, Clone)]
pub struct Instance {
    pub digraph: Digraph,
    pub start: Config,
    pub targets: BTreeMap<usize, Vertex>,
}

impl Instance {
    pub fn new(
        digraph: Digraph,
        start: Config,
        targets: BTreeMap<usize, Vertex>,
    ) -> Result<Instance, DiscError> {
        let inst = Instance { digraph, start, targets };
        inst.validate()?;
        Ok(inst)
    }

    /// Structural checks: the configuration covers the graph, every pebble
    /// has exactly one in-range target, no two pebbles share one, and the
    /// graph is strongly connected.
    pub fn validate(&self) -> Result<(), DiscError> {
        let n = self.digraph.vertex_count();
        if self.start.agent_count() != n {
            return Err(DiscError::BadInstance(format!(
                "configuration covers {} cells but the graph has {n}",
                self.start.agent_count()
            )));
        }
        let m = self.start.pebble_count();
        if self.targets.len() != m {
            return Err(DiscError::BadInstance(format!(
                "{} targets for {m} pebbles",
                self.targets.len()
            )));
        }
        let mut cells: BTreeSet<Vertex> = BTreeSet::new();
        for (&p, &v) in &self.targets {
            if p >= m {
                return Err(DiscError::BadInstance(format!("target for unknown pebble {p}")));
            }
            if v >= n {
                return Err(DiscError::BadInstance(format!(
                    "pebble {p} targets vertex {v}, out of range"
                )));
            }
            if !cells.insert(v) {
                return Err(DiscError::BadInstance(format!("two pebbles target vertex {v}")));
            }
        }
        if !is_strongly_connected(&self.digraph) {
            return Err(DiscError::NotStronglyConnected);
        }
        Ok(())
    }
}

/// Size counters for a produced plan. `tree_move_count` is the length of
/// the intermediate tree plan (zero when planning bypassed the tree, as on
/// cycles and already-solved instances).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PlanStats {
    pub move_count: usize,
    pub tree_move_count: usize,
}

/// What [`solve`] says about an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    /// A plan that replays cleanly and puts every pebble on its target.
    Feasible(Plan, PlanStats),
    /// No plan exists; the string says which obstruction was found.
    Infeasible(String),
    /// A plan may exist, but this solver does not construct plans for the
    /// instance's shape (a single hole on a non-cycle graph).
    Unsupported(String),
}

impl SolveOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SolveOutcome::Feasible(..))
    }

    pub fn plan(&self) -> Option<&Plan> {
        match self {
            SolveOutcome::Feasible(f, _) => Some(f),
            _ => None,
        }
    }
}

fn already_solved(a: &Config, targets: &BTreeMap<usize, Vertex>) -> bool {
    (0..a.pebble_count()).all(|p| a.pebble_position(p) == targets[&p])
}

/// The sole strongly biconnected component when it covers the whole graph
/// and is a (partially bidirectional) cycle. Such graphs skip the tree
/// pipeline: their component tree is a star whose moves overstate what a
/// cycle allows, so they are planned by rotation instead.
fn whole_graph_cycle<'a>(d: &Digraph, dec: &'a Decomposition) -> Option<&'a Component> {
    let [c] = dec.components.as_slice() else {
        return None;
    };
    if c.len() == d.vertex_count()
        && classify_component(c) == Ok(ComponentKind::PartiallyBidirectionalCycle)
    {
        Some(c)
    } else {
        None
    }
}

/// Feasibility on a cycle: pebbles can never overtake one another, so with
/// a hole present a placement is reachable exactly when the pebbles read in
/// ring order spell the same cyclic word at the start and at the targets.
/// With no hole nothing moves and the instance must already be solved.
fn cycle_feasible(c: &Component, a: &Config, targets: &BTreeMap<usize, Vertex>) -> bool {
    let ring = directed_ring(c).expect("classified as a cycle");
    let ids_by_pos: Vec<usize> = ring
        .iter()
        .filter_map(|&cell| {
            let agent = a.occupant_index(cell);
            (agent < a.pebble_count()).then_some(agent)
        })
        .collect();
    let m = ids_by_pos.len();
    if m == 0 {
        return true;
    }
    if m == ring.len() {
        return already_solved(a, targets);
    }
    let at: BTreeMap<Vertex, usize> = ring.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut by_target: Vec<(usize, usize)> =
        ids_by_pos.iter().map(|&id| (at[&targets[&id]], id)).collect();
    by_target.sort_unstable();
    let ids_by_target: Vec<usize> = by_target.into_iter().map(|(_, id)| id).collect();
    let Some(shift) = ids_by_target.iter().position(|&id| id == ids_by_pos[0]) else {
        return false;
    };
    (0..m).all(|k| ids_by_target[(k + shift) % m] == ids_by_pos[k])
}

/// Exact feasibility verdict for the instance.
///
/// Already-solved instances are feasible and hole-free ones are otherwise
/// not. Whole-graph cycles are decided by the cyclic-order rule. A single
/// hole is decided by the vacancy-walk group engine directly on the
/// digraph. With two or more holes the verdict is delegated to the
/// component-tree relaxation, which is exact in that regime.
pub fn check_feasibility(inst: &Instance) -> Result<bool, DiscError> {
    inst.validate()?;
    let (d, a) = (&inst.digraph, &inst.start);
    if already_solved(a, &inst.targets) {
        return Ok(true);
    }
    if a.hole_count() == 0 {
        return Ok(false);
    }
    let dec = decompose(d).expect("strongly connected graphs decompose");
    if let Some(c) = whole_graph_cycle(d, &dec) {
        return Ok(cycle_feasible(c, a, &inst.targets));
    }
    if a.hole_count() == 1 {
        return Ok(one_hole_reachable(d, a, &inst.targets));
    }
    let t = build_bct(d).expect("strongly connected graphs have a component tree");
    Ok(pmt_feasible(&t, &lift_config(a), &inst.targets))
}

/// Plan the instance end to end.
///
/// Whole-graph cycles are scheduled as a caravan (one hole suffices).
/// Otherwise, with at least two holes, the instance is lifted onto the
/// component tree, parked, permuted, and converted back into digraph
/// moves; a pipeline refusal is reconciled against [`check_feasibility`]
/// and reported as `Infeasible`. Feasible one-hole non-cycle instances
/// are `Unsupported`: the exchange constructions all need two holes.
/// Every returned plan has been replayed against the instance first.
pub fn solve(inst: &Instance) -> Result<SolveOutcome, DiscError> {
    inst.validate()?;
    let (d, a, targets) = (&inst.digraph, &inst.start, &inst.targets);
    if already_solved(a, targets) {
        return Ok(SolveOutcome::Feasible(Plan::new(), PlanStats::default()));
    }
    if a.hole_count() == 0 {
        return Ok(SolveOutcome::Infeasible(String::from(
            "no holes: no move is legal and some pebble is off its target",
        )));
    }
    let dec = decompose(d).expect("strongly connected graphs decompose");
    if let Some(c) = whole_graph_cycle(d, &dec) {
        let scheduled =
            solve_pb_cycle(c, a, targets).expect("caravan scheduling is total on cycles");
        return Ok(match scheduled {
            Some(f) => {
                assert!(verify(inst, &f), "defect: cycle plan failed verification");
                let stats = PlanStats { move_count: f.len(), tree_move_count: 0 };
                SolveOutcome::Feasible(f, stats)
            }
            None => SolveOutcome::Infeasible(String::from(
                "pebbles on a cycle keep their cyclic order, and the targets permute it",
            )),
        });
    }
    if a.hole_count() < 2 {
        return Ok(if one_hole_reachable(d, a, targets) {
            SolveOutcome::Unsupported(String::from(
                "planning here needs at least 2 holes (feasibility itself holds)",
            ))
        } else {
            SolveOutcome::Infeasible(String::from(
                "the single vacancy's walk group cannot realize the requested permutation",
            ))
        });
    }
    let t = build_bct(d).expect("strongly connected graphs have a component tree");
    let lifted = lift_config(a);
    match pmt_solve(&t, &lifted, targets) {
        Ok(tp) => {
            let f = convert_path(&tp, d, &dec, &t, a)
                .expect("tree plans convert with two holes present");
            assert!(verify(inst, &f), "defect: converted plan failed verification");
            let stats = PlanStats { move_count: f.len(), tree_move_count: tp.len() };
            Ok(SolveOutcome::Feasible(f, stats))
        }
        Err(_) => {
            assert!(
                !pmt_feasible(&t, &lifted, targets),
                "defect: pipeline refused an instance the feasibility check accepts"
            );
            Ok(SolveOutcome::Infeasible(String::from(
                "the component-tree relaxation cannot realize the requested placement",
            )))
        }
    }
}

/// True when the plan replays cleanly from the instance's start and leaves
/// every pebble on its target (holes land wherever they may).
pub fn verify(inst: &Instance, f: &[Move]) -> bool {
    verify_report(inst, f).is_ok()
}

/// Like [`verify`], but says what went wrong.
pub fn verify_report(inst: &Instance, f: &[Move]) -> Result<(), String> {
    inst.validate().map_err(|e| format!("{e}"))?;
    let end =
        apply_plan(&inst.start, f, &inst.digraph).map_err(|e| format!("plan is illegal: {e}"))?;
    for p in 0..end.pebble_count() {
        let (got, want) = (end.pebble_position(p), inst.targets[&p]);
        if got != want {
            return Err(format!("pebble {p} ends at {got}, its target is {want}"));
        }
    }
    Ok(())
}

/// Shorten a plan without changing what it does to pebbles: first drop
/// every move that slides a hole (a legal move's destination is a hole, so
/// such a move swaps two holes and leaves occupancy untouched), then cancel
/// out-and-back move pairs with one linear stack pass — `(u -> v)(v -> u)`
/// restores both cells exactly, and removing a pair may expose an older one
/// around it, which the stack catches in the same sweep. Not an optimizer:
/// the result merely never exceeds the input and has the same effect. Plans
/// that do not replay on the instance are returned unchanged.
pub fn compress(f: &[Move], inst: &Instance) -> Plan {
    if apply_plan(&inst.start, f, &inst.digraph).is_err() {
        return f.to_vec();
    }
    let mut cur = inst.start.clone();
    let mut kept = Plan::with_capacity(f.len());
    for &m in f {
        let hole_shuffle = cur.is_hole_at(m.from);
        cur = apply_move(&cur, m, &inst.digraph).expect("replay validated above");
        if !hole_shuffle {
            kept.push(m);
        }
    }
    let mut out = Plan::with_capacity(kept.len());
    for m in kept {
        if out.last() == Some(&Move::new(m.to, m.from)) {
            out.pop();
        } else {
            out.push(m);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{sample_strongly_connected, Rng};
    use alloc::collections::VecDeque;
    use alloc::vec;
    use std::string::ToString;

    fn ring_digraph(n: usize) -> Digraph {
        let arcs: Vec<(usize, usize)> = (0..n).map(|v| (v, (v + 1) % n)).collect();
        Digraph::new(n, &arcs)
    }

    fn bidirectional(n: usize, edges: &[(usize, usize)]) -> Digraph {
        let mut arcs = Vec::new();
        for &(u, v) in edges {
            arcs.push((u, v));
            arcs.push((v, u));
        }
        Digraph::new(n, &arcs)
    }

    fn instance(d: &Digraph, starts: &[Vertex], goals: &[Vertex]) -> Instance {
        let targets: BTreeMap<usize, Vertex> =
            goals.iter().enumerate().map(|(p, &v)| (p, v)).collect();
        Instance::new(
            d.clone(),
            Config::from_pebble_positions(d.vertex_count(), starts),
            targets,
        )
        .unwrap()
    }

    /// Ground truth: breadth-first search over pebble position tuples.
    fn search_reachable(d: &Digraph, a: &Config, targets: &BTreeMap<usize, Vertex>) -> bool {
        let goal: Vec<Vertex> = (0..a.pebble_count()).map(|p| targets[&p]).collect();
        reachable_placements(d, a).contains(&goal)
    }

    fn reachable_placements(d: &Digraph, a: &Config) -> BTreeSet<Vec<Vertex>> {
        let start: Vec<Vertex> = (0..a.pebble_count()).map(|p| a.pebble_position(p)).collect();
        let mut seen: BTreeSet<Vec<Vertex>> = [start.clone()].into_iter().collect();
        let mut queue: VecDeque<Vec<Vertex>> = [start].into_iter().collect();
        while let Some(state) = queue.pop_front() {
            for p in 0..state.len() {
                for &w in d.out_neighbors(state[p]) {
                    if state.contains(&w) {
                        continue;
                    }
                    let mut next = state.clone();
                    next[p] = w;
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
        seen
    }

    fn placements(n: usize, m: usize) -> Vec<Vec<Vertex>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(n: usize, m: usize, cur: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>) {
            if cur.len() == m {
                out.push(cur.clone());
                return;
            }
            for v in 0..n {
                if !cur.contains(&v) {
                    cur.push(v);
                    rec(n, m, cur, out);
                    cur.pop();
                }
            }
        }
        rec(n, m, &mut cur, &mut out);
        out
    }

    #[test]
    fn walking_one_pebble_around_a_cycle_takes_the_short_way() {
        // A directed 5-cycle, one pebble two arcs short of its target: the
        // plan should ride those arcs directly instead of detouring through
        // any reduction, so it has exactly 3 moves (the reduction-style
        // route spends 8).
        let d = ring_digraph(5);
        let inst = instance(&d, &[1], &[4]);
        assert_eq!(check_feasibility(&inst), Ok(true));
        let SolveOutcome::Feasible(f, stats) = solve(&inst).unwrap() else {
            panic!("expected a plan");
        };
        assert_eq!(f, vec![Move::new(1, 2), Move::new(2, 3), Move::new(3, 4)]);
        assert_eq!(stats.move_count, 3);
        assert!(stats.move_count < 8);
        assert!(verify(&inst, &f));
    }

    #[test]
    fn solved_instances_need_no_moves_even_without_holes() {
        let d = ring_digraph(4);
        let inst = instance(&d, &[0, 1, 2, 3], &[0, 1, 2, 3]);
        assert_eq!(check_feasibility(&inst), Ok(true));
        assert_eq!(solve(&inst).unwrap(), SolveOutcome::Feasible(Plan::new(), PlanStats::default()));
    }

    #[test]
    fn hole_free_instances_with_work_left_are_infeasible() {
        let d = bidirectional(3, &[(0, 1), (1, 2), (2, 0)]);
        let inst = instance(&d, &[0, 1, 2], &[1, 0, 2]);
        assert_eq!(check_feasibility(&inst), Ok(false));
        assert!(matches!(solve(&inst).unwrap(), SolveOutcome::Infeasible(_)));
    }

    #[test]
    fn cycles_preserve_cyclic_order() {
        // Three pebbles on a directed 5-cycle: transposing two of them
        // while the third stays put breaks the cyclic order, so no plan
        // exists; plain rotations remain schedulable.
        let d = ring_digraph(5);
        let cross = instance(&d, &[0, 1, 2], &[0, 2, 1]);
        assert!(!search_reachable(&cross.digraph, &cross.start, &cross.targets));
        assert_eq!(check_feasibility(&cross), Ok(false));
        assert!(matches!(solve(&cross).unwrap(), SolveOutcome::Infeasible(_)));

        let rotate = instance(&d, &[0, 1, 2], &[2, 3, 4]);
        assert_eq!(check_feasibility(&rotate), Ok(true));
        let SolveOutcome::Feasible(f, _) = solve(&rotate).unwrap() else {
            panic!("rotation is schedulable");
        };
        assert!(verify(&rotate, &f));

        // Two pebbles, by contrast, can always trade on a ring — one simply
        // rides the cycle all the way around the other.
        let trade = instance(&ring_digraph(4), &[0, 1], &[1, 0]);
        assert!(search_reachable(&trade.digraph, &trade.start, &trade.targets));
        assert_eq!(check_feasibility(&trade), Ok(true));
        let SolveOutcome::Feasible(f, _) = solve(&trade).unwrap() else {
            panic!("riding around is schedulable");
        };
        assert!(verify(&trade, &f));

        // Doubling the arcs does not unlock reordering: on a bidirectional
        // square the same three-pebble transposition stays impossible.
        let sq = bidirectional(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let jam = instance(&sq, &[0, 1, 2], &[0, 2, 1]);
        assert!(!search_reachable(&jam.digraph, &jam.start, &jam.targets));
        assert_eq!(check_feasibility(&jam), Ok(false));
        assert!(matches!(solve(&jam).unwrap(), SolveOutcome::Infeasible(_)));
    }

    #[test]
    fn single_hole_instances_get_verdicts_but_only_cycles_get_plans() {
        // Bidirectional K4 with one hole: any rearrangement is reachable,
        // but the constructive pipeline refuses to plan it.
        let k4 = bidirectional(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let inst = instance(&k4, &[0, 1, 2], &[1, 0, 2]);
        assert!(search_reachable(&inst.digraph, &inst.start, &inst.targets));
        assert_eq!(check_feasibility(&inst), Ok(true));
        assert!(matches!(solve(&inst).unwrap(), SolveOutcome::Unsupported(_)));

        // A complete bipartite 2x3 graph with one hole only reaches half of
        // all placements; a plain two-pebble trade falls in the wrong half.
        let k23 = bidirectional(5, &[(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)]);
        let jam = instance(&k23, &[0, 1, 2, 3], &[1, 0, 2, 3]);
        assert!(!search_reachable(&jam.digraph, &jam.start, &jam.targets));
        assert_eq!(check_feasibility(&jam), Ok(false));
        assert!(matches!(solve(&jam).unwrap(), SolveOutcome::Infeasible(_)));
    }

    #[test]
    fn feasibility_agrees_with_search_exhaustively_on_small_graphs() {
        // Structured shapes plus sampled graphs, exhaustive over every
        // start/goal placement at one to three holes.
        let mut shapes: Vec<Digraph> = vec![
            ring_digraph(5),
            bidirectional(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]),
            bidirectional(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]),
            bidirectional(5, &[(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)]),
        ];
        let mut rng = Rng::new(47);
        while shapes.len() < 9 {
            let d = sample_strongly_connected(&mut rng, 5);
            if d.vertex_count() >= 4 {
                shapes.push(d);
            }
        }
        for d in &shapes {
            let n = d.vertex_count();
            for holes in 1..=3usize {
                if holes >= n {
                    continue;
                }
                let m = n - holes;
                for start in placements(n, m) {
                    let a = Config::from_pebble_positions(n, &start);
                    let reach = reachable_placements(d, &a);
                    for goal in placements(n, m) {
                        let inst = instance(d, &start, &goal);
                        assert_eq!(
                            check_feasibility(&inst),
                            Ok(reach.contains(&goal)),
                            "arcs {:?} start {start:?} goal {goal:?}",
                            d.arcs().collect::<Vec<_>>(),
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn solve_matches_search_and_always_verifies_on_sampled_instances() {
        let mut rng = Rng::new(2101);
        let mut feasible_seen = 0;
        let mut infeasible_seen = 0;
        for _ in 0..60 {
            let d = sample_strongly_connected(&mut rng, 6);
            let n = d.vertex_count();
            if n < 4 {
                continue;
            }
            let m = n - 2;
            for _ in 0..6 {
                let mut cells: Vec<Vertex> = (0..n).collect();
                rng.shuffle(&mut cells);
                let start = cells[..m].to_vec();
                let mut goal_cells: Vec<Vertex> = (0..n).collect();
                rng.shuffle(&mut goal_cells);
                let goal = goal_cells[..m].to_vec();
                let inst = instance(&d, &start, &goal);
                let truth = search_reachable(&d, &inst.start, &inst.targets);
                assert_eq!(check_feasibility(&inst), Ok(truth));
                match solve(&inst).unwrap() {
                    SolveOutcome::Feasible(f, stats) => {
                        assert!(truth, "planned an unreachable instance");
                        assert!(verify(&inst, &f));
                        assert_eq!(stats.move_count, f.len());
                        feasible_seen += 1;
                    }
                    SolveOutcome::Infeasible(_) => {
                        assert!(!truth, "refused a reachable instance");
                        infeasible_seen += 1;
                    }
                    SolveOutcome::Unsupported(why) => {
                        panic!("two-hole instances are always in scope: {why}")
                    }
                }
            }
        }
        assert!(feasible_seen > 50, "sweep too easy: {feasible_seen} feasible");
        assert!(infeasible_seen > 10, "sweep too easy: {infeasible_seen} infeasible");
    }

    #[test]
    fn solve_is_deterministic() {
        let mut rng = Rng::new(7305);
        for _ in 0..10 {
            let d = sample_strongly_connected(&mut rng, 6);
            let n = d.vertex_count();
            if n < 4 {
                continue;
            }
            let m = n - 2;
            let mut cells: Vec<Vertex> = (0..n).collect();
            rng.shuffle(&mut cells);
            let start = cells[..m].to_vec();
            let mut goal_cells: Vec<Vertex> = (0..n).collect();
            rng.shuffle(&mut goal_cells);
            let inst = instance(&d, &start, &goal_cells[..m]);
            assert_eq!(solve(&inst).unwrap(), solve(&inst).unwrap());
        }
    }

    #[test]
    fn verify_rejects_short_and_illegal_plans() {
        let d = ring_digraph(5);
        let inst = instance(&d, &[1], &[4]);
        let full = vec![Move::new(1, 2), Move::new(2, 3), Move::new(3, 4)];
        assert!(verify(&inst, &full));
        assert!(!verify(&inst, &full[..2]));
        assert!(verify_report(&inst, &full[..2]).unwrap_err().contains("pebble 0"));
        // Riding an arc that does not exist.
        let illegal = vec![Move::new(1, 0)];
        assert!(verify_report(&inst, &illegal).unwrap_err().contains("illegal"));
    }

    #[test]
    fn compress_drops_hole_shuffles_and_out_and_back_noise() {
        let d = bidirectional(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        // One pebble walks right while holes shuffle and the pebble jitters.
        let inst = instance(&d, &[0], &[2]);
        let noisy = vec![
            Move::new(3, 4), // hole shuffle
            Move::new(0, 1),
            Move::new(1, 2),
            Move::new(2, 1), // out-and-back with the previous move
            Move::new(1, 2),
            Move::new(4, 3), // hole shuffle
        ];
        assert!(verify(&inst, &noisy));
        let tight = compress(&noisy, &inst);
        assert_eq!(tight, vec![Move::new(0, 1), Move::new(1, 2)]);
        assert!(verify(&inst, &tight));
    }

    #[test]
    fn compress_preserves_outcomes_on_generated_plans() {
        let mut rng = Rng::new(515);
        let mut shortened = 0;
        for _ in 0..25 {
            let d = sample_strongly_connected(&mut rng, 6);
            let n = d.vertex_count();
            if n < 4 {
                continue;
            }
            let m = n - 2;
            let mut cells: Vec<Vertex> = (0..n).collect();
            rng.shuffle(&mut cells);
            let start = cells[..m].to_vec();
            let mut goal_cells: Vec<Vertex> = (0..n).collect();
            rng.shuffle(&mut goal_cells);
            let inst = instance(&d, &start, &goal_cells[..m]);
            let SolveOutcome::Feasible(f, _) = solve(&inst).unwrap() else {
                continue;
            };
            let tight = compress(&f, &inst);
            assert!(tight.len() <= f.len());
            assert!(verify(&inst, &tight));
            if tight.len() < f.len() {
                shortened += 1;
            }
        }
        assert!(shortened > 0, "compression never fired on generated plans");
    }

    #[test]
    fn malformed_instances_are_reported_not_planned() {
        let d = ring_digraph(4);
        let dup = Instance {
            digraph: d.clone(),
            start: Config::from_pebble_positions(4, &[0, 1]),
            targets: [(0, 2), (1, 2)].into_iter().collect(),
        };
        assert!(matches!(dup.validate(), Err(DiscError::BadInstance(_))));
        assert!(solve(&dup).is_err());
        assert!(check_feasibility(&dup).is_err());

        let split = Instance {
            digraph: Digraph::new(4, &[(0, 1), (1, 0), (2, 3), (3, 2)]),
            start: Config::from_pebble_positions(4, &[0]),
            targets: [(0, 3)].into_iter().collect(),
        };
        assert_eq!(split.validate(), Err(DiscError::NotStronglyConnected));
        assert_eq!(solve(&split), Err(DiscError::NotStronglyConnected));
        assert!(DiscError::NotStronglyConnected.to_string().contains("strongly"));
    }
}
