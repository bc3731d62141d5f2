//! Solvers inside a single strongly biconnected component, plus the exchange
//! constructions that move a pebble onto a designated hole while restoring
//! every other agent exactly: entry through an attached arc, swaps inside a
//! component with a regular open ear decomposition, swaps across an attached
//! bidirectional edge, and swaps across two components joined by an
//! articulation point.
//!
//! All constructions are validated move-by-move while they are composed; a
//! candidate that fails validation is discarded and the builder falls back to
//! the next candidate (other second holes, other routes), finishing with an
//! exhaustive search on very small worlds. An emitted plan always replays
//! cleanly from the starting configuration and ends in the exact target.

use crate::graph_core::{
    classify_component, cycle_sequence_avoiding, directed_ring, open_ear_decomposition,
    shortest_path_in_digraph, Component, ComponentKind, CycleChain, Decomposition, Digraph,
    Vertex,
};
use crate::motion_primitives::{
    bring_hole_avoiding, composite_rotation, cycle_rotation, inverse_rotation, RotationSpec,
};
use crate::plan_engine::{apply_move, apply_plan, swap_config, Config, Move, Plan};
use crate::smallbfs;
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbdError {
    /// The instance has no hole where at least one is required.
    NoHoles,
    /// The operation needs a second hole and none is available.
    TooFewHoles,
    /// The component kind does not admit this operation.
    WrongKind,
    /// The attached-component geometry does not match the operation.
    NotAttached,
    /// The two endpoints do not lie in components joined by an articulation
    /// point.
    NotJoinedByArticulationPoint,
    /// Every candidate construction failed validation.
    ConstructionFailed,
}

impl fmt::Display for SbdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SbdError::NoHoles => write!(f, "configuration has no hole"),
            SbdError::TooFewHoles => write!(f, "operation requires a second hole"),
            SbdError::WrongKind => write!(f, "component kind does not admit this operation"),
            SbdError::NotAttached => write!(f, "attached-component geometry mismatch"),
            SbdError::NotJoinedByArticulationPoint => {
                write!(f, "endpoints are not in components joined by an articulation point")
            }
            SbdError::ConstructionFailed => write!(f, "no candidate construction validated"),
        }
    }
}

impl core::error::Error for SbdError {}

/// How an external vertex hangs off a strongly biconnected component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttachMode {
    /// Only the arc (external, attach) exists.
    EntryEdge,
    /// Both arcs (external, attach) and (attach, external) exist.
    AttachedEdge,
}

/// A strongly biconnected component together with one external vertex wired
/// to a component vertex by an entry arc or a bidirectional edge.
#[derive(Debug, Clone)]
pub struct AttachedComponent {
    pub component: Component,
    pub external_vertex: Vertex,
    pub attach_vertex: Vertex,
    pub mode: AttachMode,
}

impl AttachedComponent {
    /// The digraph the constructions move on: the component arcs plus the
    /// attachment arc(s), padded to `n` vertices so global configurations
    /// apply unchanged.
    pub fn world(&self, n: usize) -> Digraph {
        let mut arcs: Vec<(Vertex, Vertex)> = self.component.arcs().collect();
        arcs.push((self.external_vertex, self.attach_vertex));
        if self.mode == AttachMode::AttachedEdge {
            arcs.push((self.attach_vertex, self.external_vertex));
        }
        Digraph::new(n, &arcs)
    }
}

// ---------------------------------------------------------------------------
// Shared machinery
// ---------------------------------------------------------------------------

fn component_world(c: &Component, n: usize) -> Digraph {
    let arcs: Vec<(Vertex, Vertex)> = c.arcs().collect();
    Digraph::new(n, &arcs)
}

fn vertex_set(c: &Component) -> BTreeSet<Vertex> {
    c.vertices().iter().copied().collect()
}

fn only(v: Vertex) -> BTreeSet<Vertex> {
    [v].into_iter().collect()
}

fn pair(u: Vertex, v: Vertex) -> BTreeSet<Vertex> {
    [u, v].into_iter().collect()
}

fn ring_index(ring: &[Vertex], v: Vertex) -> usize {
    ring.iter().position(|&x| x == v).expect("vertex lies on the ring")
}

/// Forward steps from `u` to `v` along a cycle given in ring order.
fn ring_dist(ring: &[Vertex], u: Vertex, v: Vertex) -> usize {
    let l = ring.len();
    (ring_index(ring, v) + l - ring_index(ring, u)) % l
}

fn ring_succ(ring: &[Vertex], v: Vertex) -> Vertex {
    ring[(ring_index(ring, v) + 1) % ring.len()]
}

/// Holes of `a` whose position satisfies `keep`, in ascending agent order.
fn holes_by_agent(a: &Config, keep: impl Fn(Vertex) -> bool) -> Vec<(usize, Vertex)> {
    (a.pebble_count()..a.agent_count())
        .map(|agent| (agent, a.position(agent)))
        .filter(|&(_, v)| keep(v))
        .collect()
}

/// Rotation amounts that carry the occupant of `start` (on the first cycle)
/// to `target` (on the last), handing it across the shared arcs in between.
fn chain_spec(chain: &CycleChain, start: Vertex, target: Vertex) -> RotationSpec {
    let m = chain.cycles.len();
    let mut amounts = Vec::with_capacity(m);
    let mut from = start;
    for i in 0..m {
        let to = if i + 1 < m { chain.links[i].0 } else { target };
        amounts.push(ring_dist(&chain.cycles[i], from, to));
        from = to;
    }
    RotationSpec { cycles: chain.cycles.clone(), amounts }
}

/// Applies `stage` to `cur` on `world`, appending its moves to `total`.
/// Any invalid move aborts the candidate.
fn push_stage(world: &Digraph, cur: &mut Config, total: &mut Plan, stage: Plan) -> Option<()> {
    *cur = apply_plan(cur, &stage, world).ok()?;
    total.extend(stage);
    Some(())
}

fn push_move(world: &Digraph, cur: &mut Config, total: &mut Plan, m: Move) -> Option<()> {
    *cur = apply_move(cur, m, world).ok()?;
    total.push(m);
    Some(())
}

/// The exact reverse of `plan` (run from `base` on `world`): flips each move
/// when the opposite arc exists and otherwise completes the move's cycle with
/// `l(l-1)-1` further rotation steps, choosing completion paths clear of
/// `avoid`. Returns `None` when a completion would have to touch `avoid`.
fn safe_reverse(
    world: &Digraph,
    base: &Config,
    plan: &[Move],
    avoid: &BTreeSet<Vertex>,
) -> Option<Plan> {
    let mut cur = apply_plan(base, plan, world).ok()?;
    let mut out = Plan::new();
    for &m in plan.iter().rev() {
        if world.has_arc(m.to, m.from) {
            let back = Move::new(m.to, m.from);
            cur = apply_move(&cur, back, world).ok()?;
            out.push(back);
            continue;
        }
        if avoid.contains(&m.from) || avoid.contains(&m.to) {
            return None;
        }
        let path = shortest_path_in_digraph(world, m.to, m.from, avoid)?;
        let mut cycle = vec![m.from];
        cycle.extend(&path[..path.len() - 1]);
        let l = cycle.len();
        let mut vac = m.from;
        for _ in 0..l * (l - 1) - 1 {
            let i = cycle.iter().position(|&x| x == vac).unwrap();
            let prev = cycle[(i + l - 1) % l];
            let step = Move::new(prev, vac);
            cur = apply_move(&cur, step, world).ok()?;
            out.push(step);
            vac = prev;
        }
    }
    (cur == *base).then_some(out)
}

/// Final gate for every public construction: the composed plan must replay
/// from `a` and land exactly on `want`.
fn validated(world: &Digraph, a: &Config, plan: Plan, want: &Config) -> Option<Plan> {
    (apply_plan(a, &plan, world).ok()? == *want).then_some(plan)
}

/// Accepts a plan whose pebble outcome matches `want`; hole labels are free
/// to land on any free cell (holes are indistinguishable to the model).
fn validated_pebbles(world: &Digraph, a: &Config, plan: Plan, want: &Config) -> Option<Plan> {
    apply_plan(a, &plan, world).ok()?.pebbles_match(want).then_some(plan)
}

/// Nearest hole reachable from `from` along world arcs that stay clear of
/// `avoid`; `from` itself counts when it holds a hole.
fn nearest_hole(
    world: &Digraph,
    a: &Config,
    from: Vertex,
    avoid: &BTreeSet<Vertex>,
) -> Option<Vertex> {
    if avoid.contains(&from) {
        return None;
    }
    if a.is_hole_at(from) {
        return Some(from);
    }
    let mut seen = only(from);
    let mut queue: VecDeque<Vertex> = VecDeque::new();
    queue.push_back(from);
    while let Some(v) = queue.pop_front() {
        for &w in world.out_neighbors(v) {
            if avoid.contains(&w) || !seen.insert(w) {
                continue;
            }
            if a.is_hole_at(w) {
                return Some(w);
            }
            queue.push_back(w);
        }
    }
    None
}

/// Routes some hole to `target` along arcs clear of `avoid`.
fn hole_to(
    world: &Digraph,
    a: &Config,
    target: Vertex,
    avoid: &BTreeSet<Vertex>,
) -> Option<Plan> {
    let z = nearest_hole(world, a, target, avoid)?;
    bring_hole_avoiding(a, world, z, target, avoid).ok()
}

/// Exchanges the pebble standing at `v` (outside the ring) with the hole at
/// ring cell `z`, crossing at `y`, restoring everyone else: rotate the hole
/// to `y`, step `v -> y`, complete the lap.
fn ring_entry(
    world: &Digraph,
    ring: &[Vertex],
    a: &Config,
    v: Vertex,
    y: Vertex,
    z: Vertex,
) -> Option<(Plan, Config)> {
    let l = ring.len();
    let k = ring_dist(ring, z, y);
    let mut cur = a.clone();
    let mut plan = Plan::new();
    let stage = cycle_rotation(&cur, ring, k).ok()?;
    push_stage(world, &mut cur, &mut plan, stage)?;
    push_move(world, &mut cur, &mut plan, Move::new(v, y))?;
    let stage = cycle_rotation(&cur, ring, l - k).ok()?;
    push_stage(world, &mut cur, &mut plan, stage)?;
    Some((plan, cur))
}

/// Exchanges the pebble at ring cell `z` with the hole standing at `v`
/// (outside the ring), crossing at `y`, restoring everyone else.
fn ring_exit(
    world: &Digraph,
    ring: &[Vertex],
    a: &Config,
    v: Vertex,
    y: Vertex,
    z: Vertex,
) -> Option<(Plan, Config)> {
    let l = ring.len();
    let k = ring_dist(ring, z, y);
    let mut cur = a.clone();
    let mut plan = Plan::new();
    let stage = cycle_rotation(&cur, ring, k).ok()?;
    push_stage(world, &mut cur, &mut plan, stage)?;
    push_move(world, &mut cur, &mut plan, Move::new(y, v))?;
    let stage = cycle_rotation(&cur, ring, l - k).ok()?;
    push_stage(world, &mut cur, &mut plan, stage)?;
    Some((plan, cur))
}

/// Exhaustive fallback on tiny worlds.
fn rescue_exchange(
    world: &Digraph,
    cells: &BTreeSet<Vertex>,
    a: &Config,
    want: &Config,
) -> Option<Plan> {
    if cells.len() > 9 {
        return None;
    }
    smallbfs::exchange_by_search(world, cells, a, want, 2_000_000)
}

// ---------------------------------------------------------------------------
// Partially bidirectional cycles: the caravan scheduler
// ---------------------------------------------------------------------------

/// Solves a full reconfiguration on a partially bidirectional cycle. Every
/// pebble on the cycle must appear in `targets` with a target on the cycle.
/// Returns `Ok(None)` when the instance is infeasible, which happens exactly
/// when the cyclic order of the pebbles differs between start and targets:
/// moves never let one pebble overtake another on a cycle.
pub fn solve_pb_cycle(
    c: &Component,
    a_start: &Config,
    targets: &BTreeMap<usize, Vertex>,
) -> Result<Option<Plan>, SbdError> {
    let ring = directed_ring(c).expect("component is a partially bidirectional cycle");
    let l = ring.len();
    let on_ring: BTreeSet<Vertex> = ring.iter().copied().collect();

    let mut pebs: Vec<(usize, usize)> = Vec::new(); // (ring index, pebble id)
    for (i, &cell) in ring.iter().enumerate() {
        let agent = a_start.occupant_index(cell);
        if agent < a_start.pebble_count() {
            pebs.push((i, agent));
        }
    }
    if pebs.len() == l {
        return Err(SbdError::NoHoles);
    }
    for &(_, id) in &pebs {
        let t = targets.get(&id).expect("every cycle pebble has a target");
        assert!(on_ring.contains(t), "target lies on the cycle");
    }
    let m = pebs.len();
    if m == 0 {
        return Ok(Some(Plan::new()));
    }

    // Cyclic order must match between positions and targets.
    let ids_by_pos: Vec<usize> = pebs.iter().map(|&(_, id)| id).collect();
    let mut by_target: Vec<(usize, usize)> =
        pebs.iter().map(|&(_, id)| (ring_index(&ring, targets[&id]), id)).collect();
    by_target.sort_unstable();
    let ids_by_target: Vec<usize> = by_target.iter().map(|&(_, id)| id).collect();
    let shift = match ids_by_target.iter().position(|&id| id == ids_by_pos[0]) {
        Some(s) => s,
        None => return Ok(None),
    };
    if (0..m).any(|k| ids_by_target[(shift + k) % m] != ids_by_pos[k]) {
        return Ok(None);
    }

    // Unrolled final positions: each pebble advances to the first copy of its
    // target residue that keeps the caravan ordered and collision-free.
    let xs: Vec<i64> = pebs.iter().map(|&(i, _)| i as i64).collect();
    let ts: Vec<i64> =
        pebs.iter().map(|&(_, id)| ring_index(&ring, targets[&id]) as i64).collect();
    let li = l as i64;
    let mut fs = vec![0i64; m];
    fs[0] = xs[0] + (ts[0] - xs[0]).rem_euclid(li);
    for k in 1..m {
        let base = fs[k - 1] + 1;
        fs[k] = base + (ts[k] - base).rem_euclid(li);
    }
    if (0..m).any(|k| fs[k] < xs[k]) {
        for f in &mut fs {
            *f += li;
        }
    }
    let mut rem: Vec<i64> = (0..m).map(|k| fs[k] - xs[k]).collect();
    debug_assert!(rem.iter().all(|&r| r >= 0));

    // Greedy schedule: advance any unfinished pebble whose next ring cell is
    // a hole; the caravan ordering guarantees progress until all are done.
    let mut at: Vec<usize> = pebs.iter().map(|&(i, _)| i).collect();
    let mut occupied: Vec<Option<usize>> = vec![None; l];
    for (slot, &(i, _)) in pebs.iter().enumerate() {
        occupied[i] = Some(slot);
    }
    let mut plan = Plan::new();
    loop {
        let mut moved = false;
        let mut done = true;
        let mut pick: Option<(usize, usize)> = None; // (pebble id, slot)
        for slot in 0..m {
            if rem[slot] == 0 {
                continue;
            }
            done = false;
            let next = (at[slot] + 1) % l;
            if occupied[next].is_none() {
                let id = pebs[slot].1;
                if pick.map(|(best, _)| id < best).unwrap_or(true) {
                    pick = Some((id, slot));
                }
            }
        }
        if done {
            break;
        }
        if let Some((_, slot)) = pick {
            let from = at[slot];
            let to = (from + 1) % l;
            plan.push(Move::new(ring[from], ring[to]));
            occupied[from] = None;
            occupied[to] = Some(slot);
            at[slot] = to;
            rem[slot] -= 1;
            moved = true;
        }
        if !moved {
            return Err(SbdError::ConstructionFailed);
        }
    }

    let world = component_world(c, a_start.agent_count());
    let end = apply_plan(a_start, &plan, &world).map_err(|_| SbdError::ConstructionFailed)?;
    for (&id, &t) in targets {
        if end.pebble_position(id) != t {
            return Err(SbdError::ConstructionFailed);
        }
    }
    Ok(Some(plan))
}

// ---------------------------------------------------------------------------
// Motion planning for one pebble
// ---------------------------------------------------------------------------

/// Steers pebble `p` onto `v` inside the component. Other agents may end up
/// anywhere. Works with a single hole; on a partially bidirectional cycle
/// a plain rotation suffices, otherwise the pebble is escorted stepwise along
/// a shortest route by feeding holes ahead of it (rotating a covering ear
/// cycle when the hole cannot approach directly, squeezing the pebble one
/// cell forward when even that fails).
pub fn mpp_solve(c: &Component, a: &Config, p: usize, v: Vertex) -> Result<Plan, SbdError> {
    assert!(c.contains(v), "destination lies in the component");
    let start_pos = a.pebble_position(p);
    assert!(c.contains(start_pos), "pebble starts in the component");
    let cells = vertex_set(c);
    if holes_by_agent(a, |x| cells.contains(&x)).is_empty() {
        return Err(SbdError::NoHoles);
    }
    if start_pos == v {
        return Ok(Plan::new());
    }
    let world = component_world(c, a.agent_count());

    if classify_component(c) == Ok(ComponentKind::PartiallyBidirectionalCycle) {
        let ring = directed_ring(c).ok_or(SbdError::ConstructionFailed)?;
        let k = ring_dist(&ring, start_pos, v);
        let plan = cycle_rotation(a, &ring, k).map_err(|_| SbdError::ConstructionFailed)?;
        let end = apply_plan(a, &plan, &world).map_err(|_| SbdError::ConstructionFailed)?;
        debug_assert_eq!(end.pebble_position(p), v);
        return Ok(plan);
    }

    let ed = open_ear_decomposition(c).map_err(|_| SbdError::ConstructionFailed)?;
    let ecycles = crate::graph_core::ear_cycles(c, &ed);
    let mut cur = a.clone();
    let mut plan = Plan::new();
    let guard = 4 * c.len() * c.len() + 16;
    for _ in 0..guard {
        let pos = cur.pebble_position(p);
        if pos == v {
            return Ok(plan);
        }
        let path = shortest_path_in_digraph(&world, pos, v, &BTreeSet::new())
            .ok_or(SbdError::ConstructionFailed)?;
        let x = path[1];

        // Feed a hole to the next cell without disturbing the pebble.
        if let Some(feed) = hole_to(&world, &cur, x, &only(pos)) {
            if push_stage(&world, &mut cur, &mut plan, feed).is_some()
                && push_move(&world, &mut cur, &mut plan, Move::new(pos, x)).is_some()
            {
                continue;
            }
            return Err(SbdError::ConstructionFailed);
        }

        // Rotate an ear cycle that covers the arc (pos, x) by one step.
        let covering = ecycles.iter().find(|cyc| {
            (0..cyc.len()).any(|i| cyc[i] == pos && cyc[(i + 1) % cyc.len()] == x)
        });
        if let Some(cyc) = covering {
            let has_hole = cyc.iter().any(|&t| cur.is_hole_at(t));
            let fed = if has_hole {
                Some(Plan::new())
            } else {
                cyc.iter()
                    .filter(|&&t| t != pos)
                    .find_map(|&t| hole_to(&world, &cur, t, &only(pos)))
            };
            if let Some(feed) = fed {
                if push_stage(&world, &mut cur, &mut plan, feed).is_some() {
                    if let Ok(turn) = cycle_rotation(&cur, cyc, 1) {
                        if push_stage(&world, &mut cur, &mut plan, turn).is_some() {
                            continue;
                        }
                    }
                }
                return Err(SbdError::ConstructionFailed);
            }
        }

        // Squeeze: route a hole onto the pebble's own cell, shifting the
        // pebble one step along the hole's approach path.
        match hole_to(&world, &cur, pos, &BTreeSet::new()) {
            Some(squeeze) if !squeeze.is_empty() => {
                if push_stage(&world, &mut cur, &mut plan, squeeze).is_none() {
                    return Err(SbdError::ConstructionFailed);
                }
            }
            _ => break,
        }
    }

    // Exhaustive rescue on tiny components.
    if cells.len() <= 9 {
        if let Some(tail) = smallbfs::steer_pebble_by_search(&world, &cells, &cur, p, v, 2_000_000)
        {
            let mut total = plan;
            if push_stage(&world, &mut cur, &mut total, tail).is_some()
                && cur.pebble_position(p) == v
            {
                return Ok(total);
            }
        }
    }
    Err(SbdError::ConstructionFailed)
}

// ---------------------------------------------------------------------------
// Exchange constructions
// ---------------------------------------------------------------------------

/// Moves the pebble standing at the external vertex onto the hole at `w`
/// inside the component, leaves the vacated external vertex to that hole, and
/// restores every other agent exactly.
pub fn entry_swap(ac: &AttachedComponent, a: &Config, w: Vertex) -> Result<Plan, SbdError> {
    if ac.mode != AttachMode::EntryEdge {
        return Err(SbdError::NotAttached);
    }
    let c = &ac.component;
    let v = ac.external_vertex;
    let y = ac.attach_vertex;
    if !c.contains(w) || c.contains(v) || !c.contains(y) {
        return Err(SbdError::NotAttached);
    }
    if a.is_hole_at(v) || !a.is_hole_at(w) {
        return Err(SbdError::NotAttached);
    }
    let cells = vertex_set(c);
    let comp_holes = holes_by_agent(a, |x| cells.contains(&x));
    if comp_holes.len() < 2 {
        return Err(SbdError::TooFewHoles);
    }
    let world = ac.world(a.agent_count());
    let want = swap_config(a, v, w);

    if classify_component(c) == Ok(ComponentKind::PartiallyBidirectionalCycle) {
        let ring = directed_ring(c).ok_or(SbdError::ConstructionFailed)?;
        if let Some((plan, _)) = ring_entry(&world, &ring, a, v, y, w) {
            if let Some(plan) = validated(&world, a, plan, &want) {
                return Ok(plan);
            }
        }
    } else if let Ok(ed) = open_ear_decomposition(c) {
        if let Ok(chain) = cycle_sequence_avoiding(c, &ed, w, y, &BTreeSet::new()) {
            let sigma = ring_succ(&chain.cycles[0], w);
            let h1 = a.occupant_index(w);
            for &(_, z) in comp_holes.iter().filter(|&&(agent, _)| agent != h1) {
                let attempt = || -> Option<Plan> {
                    let mut cur = a.clone();
                    let mut plan = Plan::new();
                    let park = if z == sigma {
                        Plan::new()
                    } else {
                        bring_hole_avoiding(a, &world, z, sigma, &only(w)).ok()?
                    };
                    push_stage(&world, &mut cur, &mut plan, park.clone())?;
                    let spec = chain_spec(&chain, w, y);
                    let stage = composite_rotation(&cur, &spec).ok()?;
                    push_stage(&world, &mut cur, &mut plan, stage)?;
                    push_move(&world, &mut cur, &mut plan, Move::new(v, y))?;
                    let stage = composite_rotation(&cur, &inverse_rotation(&spec)).ok()?;
                    push_stage(&world, &mut cur, &mut plan, stage)?;
                    let unpark = safe_reverse(&world, a, &park, &only(w))?;
                    push_stage(&world, &mut cur, &mut plan, unpark)?;
                    validated(&world, a, plan, &want)
                };
                if let Some(plan) = attempt() {
                    return Ok(plan);
                }
            }
        }
    }

    let mut search_cells = cells;
    search_cells.insert(v);
    rescue_exchange(&world, &search_cells, a, &want).ok_or(SbdError::ConstructionFailed)
}

/// Exchanges the pebble at `v` with the hole at `w`, both inside a component
/// with a regular open ear decomposition, restoring every other agent. The
/// pebble is handed one step to a neighbor cell `g` after a chain of cycle
/// rotations steers the hole there; the complementary rotations then carry
/// the pebble to `w` while returning every spectator.
pub fn stay_in_swap(c: &Component, a: &Config, v: Vertex, w: Vertex) -> Result<Plan, SbdError> {
    match classify_component(c) {
        Ok(ComponentKind::RegularOed) => {}
        Ok(ComponentKind::PartiallyBidirectionalCycle) => return Err(SbdError::WrongKind),
        Err(_) => return Err(SbdError::ConstructionFailed),
    }
    assert!(c.contains(v) && c.contains(w), "both endpoints lie in the component");
    assert!(!a.is_hole_at(v), "a pebble stands at the first endpoint");
    assert!(a.is_hole_at(w), "a hole sits at the second endpoint");
    let cells = vertex_set(c);
    let comp_holes = holes_by_agent(a, |x| cells.contains(&x));
    if comp_holes.len() < 2 {
        return Err(SbdError::TooFewHoles);
    }
    let world = component_world(c, a.agent_count());
    let want = swap_config(a, v, w);

    if c.has_arc(v, w) {
        let plan = vec![Move::new(v, w)];
        if let Some(plan) = validated(&world, a, plan, &want) {
            return Ok(plan);
        }
    }

    if let Ok(ed) = open_ear_decomposition(c) {
        let h1 = a.occupant_index(w);
        for &g in c.out_neighbors(v) {
            if g == w {
                continue;
            }
            let chain = match cycle_sequence_avoiding(c, &ed, w, g, &only(v)) {
                Ok(chain) => chain,
                Err(_) => continue,
            };
            let sigma = ring_succ(&chain.cycles[0], w);
            for &(_, z) in comp_holes.iter().filter(|&&(agent, _)| agent != h1) {
                let attempt = || -> Option<Plan> {
                    let mut cur = a.clone();
                    let mut plan = Plan::new();
                    let park = if z == sigma {
                        Plan::new()
                    } else {
                        bring_hole_avoiding(a, &world, z, sigma, &pair(w, v)).ok()?
                    };
                    push_stage(&world, &mut cur, &mut plan, park.clone())?;
                    let spec = chain_spec(&chain, w, g);
                    let stage = composite_rotation(&cur, &spec).ok()?;
                    push_stage(&world, &mut cur, &mut plan, stage)?;
                    push_move(&world, &mut cur, &mut plan, Move::new(v, g))?;
                    let stage = composite_rotation(&cur, &inverse_rotation(&spec)).ok()?;
                    push_stage(&world, &mut cur, &mut plan, stage)?;
                    let unpark = safe_reverse(&world, a, &park, &only(w))?;
                    push_stage(&world, &mut cur, &mut plan, unpark)?;
                    validated(&world, a, plan, &want)
                };
                if let Some(plan) = attempt() {
                    return Ok(plan);
                }
            }
        }
    }

    rescue_exchange(&world, &cells, a, &want).ok_or(SbdError::ConstructionFailed)
}

/// Exchanges the pebble at `u` with the hole at `w` across a component that
/// carries an attached bidirectional edge at `ac.attach_vertex`, restoring
/// everyone else. On a partially bidirectional cycle the pebble leaves the
/// ring over the attached edge, waits outside while rotations redistribute
/// the ring, and re-enters to land on `w`; components with a regular open
/// ear decomposition swap in place instead.
pub fn attached_edge_swap(
    ac: &AttachedComponent,
    a: &Config,
    u: Vertex,
    w: Vertex,
) -> Result<Plan, SbdError> {
    if ac.mode != AttachMode::AttachedEdge {
        return Err(SbdError::NotAttached);
    }
    let c = &ac.component;
    let v = ac.external_vertex;
    let y = ac.attach_vertex;
    if !c.contains(u) || !c.contains(w) || c.contains(v) {
        return Err(SbdError::NotAttached);
    }
    assert!(!a.is_hole_at(u), "a pebble stands at the first endpoint");
    assert!(a.is_hole_at(w), "a hole sits at the second endpoint");
    let cells = vertex_set(c);
    let mut world_cells = cells.clone();
    world_cells.insert(v);
    let world_holes = holes_by_agent(a, |x| world_cells.contains(&x));
    if world_holes.len() < 2 {
        return Err(SbdError::TooFewHoles);
    }
    let world = ac.world(a.agent_count());
    let want = swap_config(a, u, w);

    match classify_component(c) {
        Ok(ComponentKind::RegularOed) => {
            let comp_holes = holes_by_agent(a, |x| cells.contains(&x));
            if comp_holes.len() >= 2 {
                if let Ok(inner) = stay_in_swap(c, a, u, w) {
                    if let Some(plan) = validated(&world, a, inner, &want) {
                        return Ok(plan);
                    }
                }
            } else if a.is_hole_at(v) {
                // Import the external hole, swap inside, send it back.
                for &t in c.vertices() {
                    if t == u || t == w {
                        continue;
                    }
                    let attempt = || -> Option<Plan> {
                        let mut cur = a.clone();
                        let mut plan = Plan::new();
                        let import = bring_hole_avoiding(a, &world, v, t, &pair(u, w)).ok()?;
                        push_stage(&world, &mut cur, &mut plan, import.clone())?;
                        let inner = stay_in_swap(c, &cur, u, w).ok()?;
                        push_stage(&world, &mut cur, &mut plan, inner)?;
                        let back = safe_reverse(&world, a, &import, &only(w))?;
                        push_stage(&world, &mut cur, &mut plan, back)?;
                        validated(&world, a, plan, &want)
                    };
                    if let Some(plan) = attempt() {
                        return Ok(plan);
                    }
                }
            }
        }
        Ok(ComponentKind::PartiallyBidirectionalCycle) => {
            if let Some(ring) = directed_ring(c) {
                let attempt = || -> Option<Plan> {
                    let l = ring.len();
                    let mut cur = a.clone();
                    let mut plan = Plan::new();
                    // Ensure a hole stands at the external vertex, remembering
                    // which ring cell lent its pebble out.
                    let lent: Option<Vertex> = if a.is_hole_at(v) {
                        None
                    } else {
                        let h1 = a.occupant_index(w);
                        let (_, z) = *holes_by_agent(&cur, |x| cells.contains(&x))
                            .iter()
                            .find(|&&(agent, _)| agent != h1)?;
                        let (p1, c1) = ring_entry(&world, &ring, &cur, v, y, z)?;
                        plan.extend(p1);
                        cur = c1;
                        Some(z)
                    };
                    // Core: four rotations, three crossings; the pebble waits
                    // outside while the ring turns underneath it, and the two
                    // holes trade places so labels come home exact.
                    let a1 = ring_dist(&ring, u, y);
                    let d1 = ring_dist(&ring, y, u);
                    let b1 = (d1 + l - ring_dist(&ring, y, w)) % l;
                    let c2 = (l - b1) % l;
                    let stage = cycle_rotation(&cur, &ring, a1).ok()?;
                    push_stage(&world, &mut cur, &mut plan, stage)?;
                    push_move(&world, &mut cur, &mut plan, Move::new(y, v))?;
                    let stage = cycle_rotation(&cur, &ring, b1).ok()?;
                    push_stage(&world, &mut cur, &mut plan, stage)?;
                    push_move(&world, &mut cur, &mut plan, Move::new(v, y))?;
                    let stage = cycle_rotation(&cur, &ring, c2).ok()?;
                    push_stage(&world, &mut cur, &mut plan, stage)?;
                    push_move(&world, &mut cur, &mut plan, Move::new(y, v))?;
                    let stage = cycle_rotation(&cur, &ring, d1).ok()?;
                    push_stage(&world, &mut cur, &mut plan, stage)?;
                    // Send the lent pebble home.
                    if let Some(z) = lent {
                        let (p2, end) = ring_exit(&world, &ring, &cur, v, y, z)?;
                        plan.extend(p2);
                        cur = end;
                        let _ = &cur;
                    }
                    validated(&world, a, plan, &want)
                };
                if let Some(plan) = attempt() {
                    return Ok(plan);
                }
            }
        }
        Err(_) => return Err(SbdError::ConstructionFailed),
    }

    rescue_exchange(&world, &world_cells, a, &want).ok_or(SbdError::ConstructionFailed)
}

/// Exchanges the labels of the two holes at `x` and `y` while restoring every
/// other agent: walk the `x` hole next to `y`, slide `y`'s hole across (a
/// hole-to-hole move trades exactly the two labels), then walk back.
pub(crate) fn hole_label_swap(
    world: &Digraph,
    cells: &BTreeSet<Vertex>,
    a: &Config,
    x: Vertex,
    y: Vertex,
    protect: &BTreeSet<Vertex>,
) -> Result<Plan, SbdError> {
    assert!(a.is_hole_at(x) && a.is_hole_at(y), "both endpoints hold holes");
    assert_ne!(x, y);
    let want = swap_config(a, x, y);

    for (walker, slider) in [(x, y), (y, x)] {
        let mut zs: Vec<Vertex> = world
            .out_neighbors(slider)
            .iter()
            .copied()
            .filter(|z| cells.contains(z) && !protect.contains(z) && *z != slider)
            .collect();
        zs.sort_unstable_by_key(|&z| (z != walker) as usize);
        for z in zs {
            let attempt = || -> Option<Plan> {
                let mut avoid = protect.clone();
                avoid.insert(slider);
                avoid.remove(&walker);
                avoid.remove(&z);
                let mut cur = a.clone();
                let mut plan = Plan::new();
                let walk = if z == walker {
                    Plan::new()
                } else {
                    bring_hole_avoiding(a, world, walker, z, &avoid).ok()?
                };
                push_stage(world, &mut cur, &mut plan, walk.clone())?;
                push_move(world, &mut cur, &mut plan, Move::new(slider, z))?;
                let back = safe_reverse(world, a, &walk, &avoid)?;
                push_stage(world, &mut cur, &mut plan, back)?;
                validated(world, a, plan, &want)
            };
            if let Some(plan) = attempt() {
                return Ok(plan);
            }
        }
    }

    rescue_exchange(world, cells, a, &want).ok_or(SbdError::ConstructionFailed)
}

// ---------------------------------------------------------------------------
// Two components joined by an articulation point
// ---------------------------------------------------------------------------

/// Exact exchange of a pebble in `b1 \ {v}` with a hole in `b2 \ {v}`, where
/// `v` is the articulation point the two components share. A second hole is
/// parked at `v`, rotations along `b2`'s cycle chain pull the target hole to
/// `v`, the pebble crosses, the complementary rotations carry it to the
/// hole's cell, and replayed reversals restore both components; a final
/// hole-label exchange puts the two holes' identities home.
fn cross_component_exchange(
    d: &Digraph,
    a: &Config,
    b1: &Component,
    b2: &Component,
    v: Vertex,
    a_v: Vertex,
    b_v: Vertex,
) -> Result<Plan, SbdError> {
    assert!(b1.contains(a_v) && a_v != v && b1.contains(v));
    assert!(b2.contains(b_v) && b_v != v && b2.contains(v));
    assert!(!a.is_hole_at(a_v), "a pebble stands at the source");
    assert!(a.is_hole_at(b_v), "a hole sits at the destination");
    if a.hole_count() < 2 {
        return Err(SbdError::TooFewHoles);
    }
    let p = a.occupant_index(a_v);
    let h1 = a.occupant_index(b_v);
    let n = a.agent_count();
    let w1 = component_world(b1, n);
    let w2 = component_world(b2, n);
    let cells1 = vertex_set(b1);
    let want = swap_config(a, a_v, b_v);
    let kind1 = classify_component(b1).map_err(|_| SbdError::ConstructionFailed)?;
    let ring1 = directed_ring(b1);
    let ed2 = open_ear_decomposition(b2).map_err(|_| SbdError::ConstructionFailed)?;

    let cands: Vec<(usize, Vertex)> = if a.is_hole_at(v) {
        vec![(a.occupant_index(v), v)]
    } else {
        holes_by_agent(a, |_| true).into_iter().filter(|&(agent, _)| agent != h1).collect()
    };

    for &(_, z) in &cands {
        for strict in [true, false] {
            let avoid0 = if strict { pair(a_v, b_v) } else { only(b_v) };
            let attempt = || -> Option<Plan> {
                let mut cur = a.clone();
                let mut plan = Plan::new();
                // Park the second hole at the articulation point.
                let s0 = if z == v {
                    Plan::new()
                } else {
                    bring_hole_avoiding(a, d, z, v, &avoid0).ok()?
                };
                push_stage(d, &mut cur, &mut plan, s0.clone())?;
                let abar = cur.position(p);
                if !b1.contains(abar) || abar == v {
                    return None;
                }
                let cur0 = cur.clone();
                // Steer the target hole to the articulation point along a
                // cycle chain. On a chain of several cycles the parked hole
                // must first step off the articulation point to trail the
                // target hole (it relays the driving role on the way back);
                // on a single cycle it already rides the rotations from `v`.
                let chain = cycle_sequence_avoiding(b2, &ed2, b_v, v, &BTreeSet::new()).ok()?;
                let single = chain.cycles.len() == 1;
                let s1 = if single {
                    Plan::new()
                } else {
                    let sigma = ring_succ(&chain.cycles[0], b_v);
                    bring_hole_avoiding(&cur, &w2, v, sigma, &only(b_v)).ok()?
                };
                push_stage(&w2, &mut cur, &mut plan, s1.clone())?;
                let spec = chain_spec(&chain, b_v, v);
                let stage = composite_rotation(&cur, &spec).ok()?;
                push_stage(&w2, &mut cur, &mut plan, stage)?;
                // Route the pebble onto the articulation point.
                let cur2 = cur.clone();
                let (s3, k1) = match kind1 {
                    ComponentKind::PartiallyBidirectionalCycle => {
                        let ring = ring1.as_ref()?;
                        let k = ring_dist(ring, abar, v);
                        (cycle_rotation(&cur, ring, k).ok()?, k)
                    }
                    ComponentKind::RegularOed => (mpp_solve(b1, &cur, p, v).ok()?, 0),
                };
                push_stage(&w1, &mut cur, &mut plan, s3.clone())?;
                if cur.position(p) != v {
                    return None;
                }
                // Carry the pebble out to the hole's cell; spectators lap.
                let stage = composite_rotation(&cur, &inverse_rotation(&spec)).ok()?;
                push_stage(&w2, &mut cur, &mut plan, stage)?;
                let s5 = if single {
                    Plan::new()
                } else {
                    safe_reverse(&w2, &cur0, &s1, &only(b_v))?
                };
                push_stage(&w2, &mut cur, &mut plan, s5)?;
                // Restore the pebble's component.
                let s6 = match kind1 {
                    ComponentKind::PartiallyBidirectionalCycle => {
                        let ring = ring1.as_ref()?;
                        cycle_rotation(&cur, ring, ring.len() - k1).ok()?
                    }
                    ComponentKind::RegularOed => safe_reverse(&w1, &cur2, &s3, &BTreeSet::new())?,
                };
                push_stage(&w1, &mut cur, &mut plan, s6)?;
                // The restore necessarily traded the two holes' labels.
                if !(cur.is_hole_at(v) && cur.is_hole_at(abar)) {
                    return None;
                }
                let s7 = hole_label_swap(&w1, &cells1, &cur, v, abar, &BTreeSet::new()).ok()?;
                push_stage(&w1, &mut cur, &mut plan, s7)?;
                // Unpark the second hole.
                let s8 = safe_reverse(d, a, &s0, &only(b_v))?;
                push_stage(d, &mut cur, &mut plan, s8)?;
                validated(d, a, plan, &want)
            };
            if let Some(plan) = attempt() {
                return Ok(plan);
            }
        }
    }

    let all: BTreeSet<Vertex> = (0..d.vertex_count()).collect();
    rescue_exchange(d, &all, a, &want).ok_or(SbdError::ConstructionFailed)
}

/// Exact exchange of a pebble and a hole lying in the same component, using a
/// neighboring component or an attached edge for elbow room when the
/// component is a partially bidirectional cycle, and importing a second hole
/// when the component holds only one.
fn same_component_exchange(
    d: &Digraph,
    dec: &Decomposition,
    ci: usize,
    a: &Config,
    x: Vertex,
    y: Vertex,
    exact: bool,
) -> Result<Plan, SbdError> {
    let c = &dec.components[ci];
    let cells = vertex_set(c);
    let want = swap_config(a, x, y);
    if a.hole_count() < 2 {
        return Err(SbdError::TooFewHoles);
    }
    let h1 = a.occupant_index(y);
    let p = a.occupant_index(x);
    let kind = classify_component(c).map_err(|_| SbdError::ConstructionFailed)?;
    // With `exact` the plan must restore every hole label too; without it
    // any plan placing the pebbles right is accepted.
    let accept = |plan: Plan| -> Option<Plan> {
        if exact {
            validated(d, a, plan, &want)
        } else {
            validated_pebbles(d, a, plan, &want)
        }
    };

    if kind == ComponentKind::RegularOed {
        let comp_holes = holes_by_agent(a, |t| cells.contains(&t));
        if comp_holes.len() >= 2 {
            return stay_in_swap(c, a, x, y);
        }
        // One hole inside: import a second one, swap, send it back.
        let outside: Vec<(usize, Vertex)> = holes_by_agent(a, |t| !cells.contains(&t));
        for &(_, z) in &outside {
            for &t in c.vertices() {
                if t == x || t == y {
                    continue;
                }
                let attempt = || -> Option<Plan> {
                    let mut cur = a.clone();
                    let mut plan = Plan::new();
                    let import = bring_hole_avoiding(a, d, z, t, &pair(x, y)).ok()?;
                    push_stage(d, &mut cur, &mut plan, import.clone())?;
                    let inner = stay_in_swap(c, &cur, x, y).ok()?;
                    push_stage(d, &mut cur, &mut plan, inner)?;
                    let back = safe_reverse(d, a, &import, &only(y))?;
                    push_stage(d, &mut cur, &mut plan, back)?;
                    validated(d, a, plan, &want)
                };
                if let Some(plan) = attempt() {
                    return Ok(plan);
                }
            }
        }
        // Allow the import walk to displace the pebble inside the component.
        for &(_, z) in &outside {
            for &t in c.vertices() {
                if t == y {
                    continue;
                }
                let attempt = || -> Option<Plan> {
                    let mut cur = a.clone();
                    let mut plan = Plan::new();
                    let import = bring_hole_avoiding(a, d, z, t, &only(y)).ok()?;
                    push_stage(d, &mut cur, &mut plan, import.clone())?;
                    let moved = cur.position(p);
                    if !cells.contains(&moved) || moved == y {
                        return None;
                    }
                    let inner = stay_in_swap(c, &cur, moved, y).ok()?;
                    push_stage(d, &mut cur, &mut plan, inner)?;
                    let back = safe_reverse(d, a, &import, &only(y))?;
                    push_stage(d, &mut cur, &mut plan, back)?;
                    validated(d, a, plan, &want)
                };
                if let Some(plan) = attempt() {
                    return Ok(plan);
                }
            }
        }
    } else {
        // A cycle cannot reorder its occupants, but it can shift them: when
        // moving the pebble from x to y keeps the cyclic pebble order, the
        // holes circulating the ring realize the exchange without leaving
        // the component at all.
        let in_ring = || -> Option<Plan> {
            let mut sub_targets: BTreeMap<usize, Vertex> = BTreeMap::new();
            for &cell in c.vertices() {
                let agent = a.occupant_index(cell);
                if agent < a.pebble_count() {
                    sub_targets.insert(agent, if cell == x { y } else { cell });
                }
            }
            let plan = solve_pb_cycle(c, a, &sub_targets).ok()??;
            accept(plan)
        };
        if let Some(plan) = in_ring() {
            return Ok(plan);
        }
        // Borrow room next door: a neighboring component across an
        // articulation point, crossed twice, with a final hole-label
        // exchange to put the two holes' identities home.
        for (cj, other) in dec.components.iter().enumerate() {
            if cj == ci {
                continue;
            }
            let shared: Vec<Vertex> =
                other.vertices().iter().copied().filter(|&t| c.contains(t)).collect();
            let Some(&v) = shared.first() else { continue };
            if x == v || y == v {
                continue;
            }
            let holes: Vec<(usize, Vertex)> =
                holes_by_agent(a, |_| true).into_iter().filter(|&(ag, _)| ag != h1).collect();
            for &(_, z) in &holes {
                let landings: Vec<Vertex> = if other.contains(z) && z != v {
                    vec![z]
                } else {
                    other.vertices().iter().copied().filter(|&t| t != v).collect()
                };
                for z2 in landings {
                    let attempt = || -> Option<Plan> {
                        let mut cur = a.clone();
                        let mut plan = Plan::new();
                        let pre = if z == z2 {
                            Plan::new()
                        } else {
                            bring_hole_avoiding(a, d, z, z2, &pair(x, y)).ok()?
                        };
                        push_stage(d, &mut cur, &mut plan, pre.clone())?;
                        let e1 = cross_component_exchange(d, &cur, c, other, v, x, z2).ok()?;
                        push_stage(d, &mut cur, &mut plan, e1)?;
                        let e2 = cross_component_exchange(d, &cur, other, c, v, z2, y).ok()?;
                        push_stage(d, &mut cur, &mut plan, e2)?;
                        if !(cur.is_hole_at(x) && cur.is_hole_at(z2)) {
                            return None;
                        }
                        let all: BTreeSet<Vertex> = (0..d.vertex_count()).collect();
                        let fix = hole_label_swap(d, &all, &cur, x, z2, &only(y)).ok()?;
                        push_stage(d, &mut cur, &mut plan, fix)?;
                        let unpre = safe_reverse(d, a, &pre, &pair(x, y))?;
                        push_stage(d, &mut cur, &mut plan, unpre)?;
                        validated(d, a, plan, &want)
                    };
                    if let Some(plan) = attempt() {
                        return Ok(plan);
                    }
                }
            }
        }
        // Second choice: an external cell joined to the ring by a
        // bidirectional edge.
        let mut anchors: Vec<(Vertex, Vertex)> = Vec::new();
        for &t in c.vertices() {
            for &ext in d.out_neighbors(t) {
                if !cells.contains(&ext) && d.has_arc(ext, t) {
                    anchors.push((ext, t));
                }
            }
        }
        for (ext, att) in anchors {
            let ac = AttachedComponent {
                component: c.clone(),
                external_vertex: ext,
                attach_vertex: att,
                mode: AttachMode::AttachedEdge,
            };
            let mut world_cells = cells.clone();
            world_cells.insert(ext);
            let near = holes_by_agent(a, |t| world_cells.contains(&t));
            if near.len() >= 2 {
                if let Ok(plan) = attached_edge_swap(&ac, a, x, y) {
                    if let Some(plan) = validated(d, a, plan, &want) {
                        return Ok(plan);
                    }
                }
            } else {
                let outside: Vec<(usize, Vertex)> =
                    holes_by_agent(a, |t| !world_cells.contains(&t));
                for &(_, z) in &outside {
                    let attempt = || -> Option<Plan> {
                        let mut cur = a.clone();
                        let mut plan = Plan::new();
                        let imp = bring_hole_avoiding(a, d, z, ext, &pair(x, y)).ok()?;
                        push_stage(d, &mut cur, &mut plan, imp.clone())?;
                        let inner = attached_edge_swap(&ac, &cur, x, y).ok()?;
                        push_stage(d, &mut cur, &mut plan, inner)?;
                        let back = safe_reverse(d, a, &imp, &pair(x, y))?;
                        push_stage(d, &mut cur, &mut plan, back)?;
                        validated(d, a, plan, &want)
                    };
                    if let Some(plan) = attempt() {
                        return Ok(plan);
                    }
                }
            }
        }
        // Last structured resort, for hops the repertoire above cannot
        // stage (say, the only articulation point is an endpoint of the
        // exchange): exact search over the ring plus one neighboring
        // component. The region stays small, so the search is cheap.
        for (cj, other) in dec.components.iter().enumerate() {
            if cj == ci || !other.vertices().iter().any(|&t| cells.contains(&t)) {
                continue;
            }
            let mut region = cells.clone();
            region.extend(other.vertices().iter().copied());
            if region.len() > 14 {
                continue;
            }
            let found = if exact {
                smallbfs::exchange_by_search(d, &region, a, &want, 2_000_000)
            } else {
                smallbfs::exchange_pebbles_by_search(d, &region, a, &want, 2_000_000)
            };
            if let Some(plan) = found.and_then(&accept) {
                return Ok(plan);
            }
        }
    }

    let all: BTreeSet<Vertex> = (0..d.vertex_count()).collect();
    rescue_exchange(d, &all, a, &want).ok_or(SbdError::ConstructionFailed)
}

/// Exchanges the pebble at `a_v` with the hole at `b_v` across the component
/// structure of `d`, restoring every other agent exactly. The endpoints may
/// lie in two components joined by an articulation point or in the same
/// component; in the latter case a neighboring component or attached edge
/// supplies the room to reorder.
pub fn two_bcc_swap(
    d: &Digraph,
    dec: &Decomposition,
    a: &Config,
    a_v: Vertex,
    b_v: Vertex,
) -> Result<Plan, SbdError> {
    assert_ne!(a_v, b_v);
    assert!(!a.is_hole_at(a_v), "a pebble stands at the source");
    assert!(a.is_hole_at(b_v), "a hole sits at the destination");
    if a.hole_count() < 2 {
        return Err(SbdError::TooFewHoles);
    }
    let of_a = dec.components_with(a_v);
    let of_b = dec.components_with(b_v);
    if let Some(&ci) = of_a.iter().find(|&&ci| of_b.contains(&ci)) {
        return same_component_exchange(d, dec, ci, a, a_v, b_v, true);
    }
    let mut joined = false;
    for &ci in &of_a {
        for &cj in &of_b {
            let b1 = &dec.components[ci];
            let b2 = &dec.components[cj];
            let shared: Vec<Vertex> =
                b1.vertices().iter().copied().filter(|&t| b2.contains(t)).collect();
            let Some(&v) = shared.first() else { continue };
            joined = true;
            if let Ok(plan) = cross_component_exchange(d, a, b1, b2, v, a_v, b_v) {
                return Ok(plan);
            }
        }
    }
    if !joined {
        return Err(SbdError::NotJoinedByArticulationPoint);
    }
    Err(SbdError::ConstructionFailed)
}

/// Pebble–hole exchange anywhere in a decomposed digraph: single arc hops,
/// in-component swaps, and cross-component swaps, chosen by where the two
/// endpoints sit. The workhorse behind tree-move conversion. Every pebble
/// other than the mover is restored exactly; hole labels may come back
/// permuted, which no later move can observe — holes are interchangeable.
pub(crate) fn realize_exchange(
    d: &Digraph,
    dec: &Decomposition,
    a: &Config,
    x: Vertex,
    y: Vertex,
) -> Result<Plan, SbdError> {
    assert!(!a.is_hole_at(x), "a pebble stands at the source");
    assert!(a.is_hole_at(y), "a hole sits at the destination");
    let want = swap_config(a, x, y);
    if d.has_arc(x, y) {
        return Ok(vec![Move::new(x, y)]);
    }
    if a.hole_count() < 2 {
        return Err(SbdError::TooFewHoles);
    }
    let of_x = dec.components_with(x);
    let of_y = dec.components_with(y);
    for &ci in &of_x {
        if of_y.contains(&ci) {
            if let Ok(plan) = same_component_exchange(d, dec, ci, a, x, y, false) {
                return Ok(plan);
            }
        }
    }
    for &ci in &of_x {
        for &cj in &of_y {
            if ci == cj {
                continue;
            }
            let b1 = &dec.components[ci];
            let b2 = &dec.components[cj];
            let shared: Vec<Vertex> =
                b1.vertices().iter().copied().filter(|&t| b2.contains(t)).collect();
            let Some(&v) = shared.first() else { continue };
            if x == v || y == v {
                continue;
            }
            if let Ok(plan) = cross_component_exchange(d, a, b1, b2, v, x, y) {
                return Ok(plan);
            }
        }
    }
    let all: BTreeSet<Vertex> = (0..d.vertex_count()).collect();
    rescue_exchange(d, &all, a, &want).ok_or(SbdError::ConstructionFailed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_core::decompose;
    use crate::plan_engine::Config;
    use std::collections::VecDeque as StdVecDeque;
    use std::vec::Vec as StdVec;

    fn ring_digraph(l: usize) -> Digraph {
        let arcs: StdVec<(Vertex, Vertex)> = (0..l).map(|i| (i, (i + 1) % l)).collect();
        Digraph::new(l, &arcs)
    }

    fn sole_component(d: &Digraph) -> Component {
        let dec = decompose(d).unwrap();
        assert_eq!(dec.components.len(), 1);
        dec.components[0].clone()
    }

    /// A six-vertex theta graph: the pentagon 0..4 plus the chord ear 1-5-3.
    fn theta6() -> Digraph {
        Digraph::new(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 5), (5, 3)])
    }

    /// All the vertices of `n` except `holes`, in ascending order.
    fn pebbles_except(n: usize, holes: &[Vertex]) -> StdVec<Vertex> {
        (0..n).filter(|v| !holes.contains(v)).collect()
    }

    /// Pebble-outcome reachability by brute force: holes are interchangeable,
    /// every pebble must reach its own target.
    fn pebbles_reachable(d: &Digraph, starts: &[Vertex], targets: &[Vertex]) -> bool {
        let mut seen: BTreeSet<StdVec<Vertex>> = BTreeSet::new();
        let mut queue: StdVecDeque<StdVec<Vertex>> = StdVecDeque::new();
        seen.insert(starts.to_vec());
        queue.push_back(starts.to_vec());
        while let Some(state) = queue.pop_front() {
            if state == targets {
                return true;
            }
            for i in 0..state.len() {
                for &q in d.out_neighbors(state[i]) {
                    if state.contains(&q) {
                        continue;
                    }
                    let mut next = state.clone();
                    next[i] = q;
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
        false
    }

    /// All ordered tuples of `m` distinct values drawn from `0..l`.
    fn tuples(l: usize, m: usize) -> StdVec<StdVec<usize>> {
        let mut out = StdVec::new();
        let mut cur = StdVec::new();
        fn rec(l: usize, m: usize, cur: &mut StdVec<usize>, out: &mut StdVec<StdVec<usize>>) {
            if cur.len() == m {
                out.push(cur.clone());
                return;
            }
            for v in 0..l {
                if !cur.contains(&v) {
                    cur.push(v);
                    rec(l, m, cur, out);
                    cur.pop();
                }
            }
        }
        rec(l, m, &mut cur, &mut out);
        out
    }

    #[test]
    fn caravan_walks_one_pebble_around_a_five_cycle() {
        let d = ring_digraph(5);
        let c = sole_component(&d);
        let a = Config::from_pebble_positions(5, &[1]);
        let targets: BTreeMap<usize, Vertex> = [(0, 4)].into_iter().collect();
        let plan = solve_pb_cycle(&c, &a, &targets).unwrap().unwrap();
        assert_eq!(plan, vec![Move::new(1, 2), Move::new(2, 3), Move::new(3, 4)]);
    }

    #[test]
    fn caravan_accepts_identity_targets_with_no_moves_needed() {
        let d = ring_digraph(4);
        let c = sole_component(&d);
        let a = Config::from_pebble_positions(4, &[0, 2]);
        let targets: BTreeMap<usize, Vertex> = [(0, 0), (1, 2)].into_iter().collect();
        let plan = solve_pb_cycle(&c, &a, &targets).unwrap().unwrap();
        assert!(plan.is_empty());
    }

    #[test]
    fn two_pebbles_trade_places_on_a_four_cycle() {
        let d = ring_digraph(4);
        let c = sole_component(&d);
        let starts = [0usize, 1];
        let goals = [1usize, 0];
        assert!(pebbles_reachable(&d, &starts, &goals));
        let a = Config::from_pebble_positions(4, &starts);
        let targets: BTreeMap<usize, Vertex> = [(0, 1), (1, 0)].into_iter().collect();
        let plan = solve_pb_cycle(&c, &a, &targets).unwrap().expect("cyclic order matches");
        let end = apply_plan(&a, &plan, &d).unwrap();
        assert_eq!(end.pebble_position(0), 1);
        assert_eq!(end.pebble_position(1), 0);
    }

    #[test]
    fn caravan_requires_a_hole() {
        let d = ring_digraph(3);
        let c = sole_component(&d);
        let a = Config::from_pebble_positions(3, &[0, 1, 2]);
        let targets: BTreeMap<usize, Vertex> =
            [(0, 0), (1, 1), (2, 2)].into_iter().collect();
        assert_eq!(solve_pb_cycle(&c, &a, &targets), Err(SbdError::NoHoles));
    }

    #[test]
    fn caravan_agrees_with_brute_force_on_small_cycles() {
        for l in 3..=6 {
            let d = ring_digraph(l);
            let c = sole_component(&d);
            for m in 1..l {
                let starts: StdVec<usize> = (0..m).collect();
                let a = Config::from_pebble_positions(l, &starts);
                for goal in tuples(l, m) {
                    let feasible = pebbles_reachable(&d, &starts, &goal);
                    let targets: BTreeMap<usize, Vertex> =
                        goal.iter().copied().enumerate().collect();
                    match solve_pb_cycle(&c, &a, &targets).unwrap() {
                        Some(plan) => {
                            assert!(feasible, "l={l} m={m} goal={goal:?}");
                            let end = apply_plan(&a, &plan, &d).unwrap();
                            for (id, &t) in goal.iter().enumerate() {
                                assert_eq!(end.pebble_position(id), t);
                            }
                        }
                        None => assert!(!feasible, "l={l} m={m} goal={goal:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn caravan_handles_a_backward_arc_the_same_as_brute_force() {
        let d = Digraph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (2, 1)]);
        let c = sole_component(&d);
        let starts = [0usize, 1];
        let a = Config::from_pebble_positions(4, &starts);
        for goal in tuples(4, 2) {
            let feasible = pebbles_reachable(&d, &starts, &goal);
            let targets: BTreeMap<usize, Vertex> = goal.iter().copied().enumerate().collect();
            match solve_pb_cycle(&c, &a, &targets).unwrap() {
                Some(plan) => {
                    assert!(feasible, "goal={goal:?}");
                    let end = apply_plan(&a, &plan, &d).unwrap();
                    assert_eq!(end.pebble_position(0), goal[0]);
                    assert_eq!(end.pebble_position(1), goal[1]);
                }
                None => assert!(!feasible, "goal={goal:?}"),
            }
        }
    }

    #[test]
    fn pebble_rides_a_rotation_on_a_cycle_component() {
        let d = ring_digraph(5);
        let c = sole_component(&d);
        let a = Config::from_pebble_positions(5, &[0]);
        let plan = mpp_solve(&c, &a, 0, 3).unwrap();
        let end = apply_plan(&a, &plan, &d).unwrap();
        assert_eq!(end.pebble_position(0), 3);
    }

    #[test]
    fn single_hole_steering_reaches_every_target_on_a_theta_graph() {
        let d = theta6();
        let c = sole_component(&d);
        assert_eq!(classify_component(&c), Ok(ComponentKind::RegularOed));
        for hole in 0..6 {
            for target in 0..6 {
                if target == hole {
                    continue;
                }
                for start in 0..6 {
                    if start == hole {
                        continue;
                    }
                    let mut order = vec![start];
                    order.extend((0..6).filter(|&v| v != start && v != hole));
                    let a = Config::from_pebble_positions(6, &order);
                    let plan = mpp_solve(&c, &a, 0, target).unwrap_or_else(|e| {
                        panic!("hole={hole} start={start} target={target}: {e}")
                    });
                    let end = apply_plan(&a, &plan, &d).unwrap();
                    assert_eq!(end.pebble_position(0), target);
                }
            }
        }
    }

    #[test]
    fn steering_reports_a_component_without_holes() {
        let d = theta6();
        let c = sole_component(&d);
        let a = Config::from_pebble_positions(6, &[0, 1, 2, 3, 4, 5]);
        assert_eq!(mpp_solve(&c, &a, 0, 3), Err(SbdError::NoHoles));
    }

    #[test]
    fn hole_labels_trade_places_and_nothing_else_moves() {
        let d = theta6();
        let c = sole_component(&d);
        let cells = vertex_set(&c);
        for x in 0..6usize {
            for y in 0..6usize {
                if x == y {
                    continue;
                }
                let a = Config::from_pebble_positions(6, &pebbles_except(6, &[x, y]));
                let plan =
                    hole_label_swap(&d, &cells, &a, x, y, &BTreeSet::new()).unwrap();
                let end = apply_plan(&a, &plan, &d).unwrap();
                assert_eq!(end, swap_config(&a, x, y), "x={x} y={y}");
            }
        }
    }

    #[test]
    fn in_component_swap_is_exact_for_every_placement_on_a_theta_graph() {
        let d = theta6();
        let c = sole_component(&d);
        for v in 0..6usize {
            for w in 0..6usize {
                if v == w {
                    continue;
                }
                for z in 0..6usize {
                    if z == v || z == w {
                        continue;
                    }
                    let a = Config::from_pebble_positions(6, &pebbles_except(6, &[w, z]));
                    let plan = stay_in_swap(&c, &a, v, w)
                        .unwrap_or_else(|e| panic!("v={v} w={w} z={z}: {e}"));
                    let end = apply_plan(&a, &plan, &d).unwrap();
                    assert_eq!(end, swap_config(&a, v, w), "v={v} w={w} z={z}");
                }
            }
        }
    }

    #[test]
    fn in_component_swap_is_exact_on_a_four_vertex_component() {
        let d = Digraph::new(4, &[(0, 1), (1, 2), (2, 0), (1, 3), (3, 0)]);
        let c = sole_component(&d);
        assert_eq!(classify_component(&c), Ok(ComponentKind::RegularOed));
        for v in 0..4usize {
            for w in 0..4usize {
                if v == w {
                    continue;
                }
                for z in 0..4usize {
                    if z == v || z == w {
                        continue;
                    }
                    let a = Config::from_pebble_positions(4, &pebbles_except(4, &[w, z]));
                    let plan = stay_in_swap(&c, &a, v, w)
                        .unwrap_or_else(|e| panic!("v={v} w={w} z={z}: {e}"));
                    let end = apply_plan(&a, &plan, &d).unwrap();
                    assert_eq!(end, swap_config(&a, v, w), "v={v} w={w} z={z}");
                }
            }
        }
    }

    #[test]
    fn in_component_swap_rejects_cycle_components_and_single_holes() {
        let ring = ring_digraph(5);
        let rc = sole_component(&ring);
        let a = Config::from_pebble_positions(5, &[0, 1, 2]);
        assert_eq!(stay_in_swap(&rc, &a, 0, 3), Err(SbdError::WrongKind));

        let d = theta6();
        let c = sole_component(&d);
        let one_hole = Config::from_pebble_positions(6, &pebbles_except(6, &[3]));
        assert_eq!(stay_in_swap(&c, &one_hole, 0, 3), Err(SbdError::TooFewHoles));
    }

    #[test]
    fn entry_follows_the_chain_of_cycles_on_the_worked_example() {
        let arcs = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 0),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 3),
            (6, 8),
            (8, 9),
            (9, 5),
        ];
        let d = Digraph::new(10, &arcs);
        let c = sole_component(&d);
        assert_eq!(classify_component(&c), Ok(ComponentKind::RegularOed));

        let ed = open_ear_decomposition(&c).unwrap();
        let chain = cycle_sequence_avoiding(&c, &ed, 8, 0, &BTreeSet::new()).unwrap();
        let spec = chain_spec(&chain, 8, 0);
        assert_eq!(spec.amounts, vec![2, 3, 2]);

        let ac = AttachedComponent {
            component: c.clone(),
            external_vertex: 10,
            attach_vertex: 0,
            mode: AttachMode::EntryEdge,
        };
        let world = ac.world(11);
        let a = Config::from_pebble_positions(11, &pebbles_except(11, &[8, 9]));

        let mut expected = composite_rotation(&a, &spec).unwrap();
        let mut mid = apply_plan(&a, &expected, &world).unwrap();
        mid = apply_move(&mid, Move::new(10, 0), &world).unwrap();
        expected.push(Move::new(10, 0));
        expected.extend(composite_rotation(&mid, &inverse_rotation(&spec)).unwrap());

        let plan = entry_swap(&ac, &a, 8).unwrap();
        assert_eq!(plan, expected);
        let end = apply_plan(&a, &plan, &world).unwrap();
        assert_eq!(end, swap_config(&a, 10, 8));
    }

    #[test]
    fn entry_is_exact_for_every_placement_on_a_cycle_component() {
        let ring = ring_digraph(5);
        let c = sole_component(&ring);
        let ac = AttachedComponent {
            component: c,
            external_vertex: 5,
            attach_vertex: 0,
            mode: AttachMode::EntryEdge,
        };
        let world = ac.world(6);
        for w in 0..5usize {
            for z in 0..5usize {
                if z == w {
                    continue;
                }
                let a = Config::from_pebble_positions(6, &pebbles_except(6, &[w, z]));
                let plan = entry_swap(&ac, &a, w)
                    .unwrap_or_else(|e| panic!("w={w} z={z}: {e}"));
                let end = apply_plan(&a, &plan, &world).unwrap();
                assert_eq!(end, swap_config(&a, 5, w), "w={w} z={z}");
            }
        }
    }

    #[test]
    fn entry_is_exact_for_every_placement_on_a_theta_component() {
        let d = theta6();
        let c = sole_component(&d);
        let ac = AttachedComponent {
            component: c,
            external_vertex: 6,
            attach_vertex: 0,
            mode: AttachMode::EntryEdge,
        };
        let world = ac.world(7);
        for w in 0..6usize {
            for z in 0..6usize {
                if z == w {
                    continue;
                }
                let a = Config::from_pebble_positions(7, &pebbles_except(7, &[w, z]));
                let plan = entry_swap(&ac, &a, w)
                    .unwrap_or_else(|e| panic!("w={w} z={z}: {e}"));
                let end = apply_plan(&a, &plan, &world).unwrap();
                assert_eq!(end, swap_config(&a, 6, w), "w={w} z={z}");
            }
        }
    }

    #[test]
    fn entry_requires_a_second_hole_in_the_component() {
        let ring = ring_digraph(5);
        let c = sole_component(&ring);
        let ac = AttachedComponent {
            component: c,
            external_vertex: 5,
            attach_vertex: 0,
            mode: AttachMode::EntryEdge,
        };
        let a = Config::from_pebble_positions(6, &pebbles_except(6, &[2]));
        assert_eq!(entry_swap(&ac, &a, 2), Err(SbdError::TooFewHoles));
    }

    #[test]
    fn attached_edge_swap_matches_the_worked_seven_vertex_example() {
        let d = Digraph::new(
            7,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (4, 6), (6, 4)],
        );
        let dec = decompose(&d).unwrap();
        let c = dec
            .components
            .iter()
            .find(|c| c.len() == 6)
            .expect("the six-cycle is a component")
            .clone();
        let ac = AttachedComponent {
            component: c,
            external_vertex: 6,
            attach_vertex: 4,
            mode: AttachMode::AttachedEdge,
        };
        let world = ac.world(7);
        let a = Config::from_pebble_positions(7, &[0, 1, 3, 4, 5]);
        let plan = attached_edge_swap(&ac, &a, 5, 2).unwrap();
        let end = apply_plan(&a, &plan, &world).unwrap();
        assert_eq!(end, swap_config(&a, 5, 2));
    }

    #[test]
    fn attached_edge_swap_is_exact_for_every_placement_on_a_six_cycle() {
        let d = Digraph::new(
            7,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (4, 6), (6, 4)],
        );
        let dec = decompose(&d).unwrap();
        let c = dec.components.iter().find(|c| c.len() == 6).unwrap().clone();
        let ac = AttachedComponent {
            component: c,
            external_vertex: 6,
            attach_vertex: 4,
            mode: AttachMode::AttachedEdge,
        };
        let world = ac.world(7);
        for u in 0..6usize {
            for w in 0..6usize {
                if u == w {
                    continue;
                }
                for z in 0..7usize {
                    if z == u || z == w {
                        continue;
                    }
                    let a = Config::from_pebble_positions(7, &pebbles_except(7, &[w, z]));
                    let plan = attached_edge_swap(&ac, &a, u, w)
                        .unwrap_or_else(|e| panic!("u={u} w={w} z={z}: {e}"));
                    let end = apply_plan(&a, &plan, &world).unwrap();
                    assert_eq!(end, swap_config(&a, u, w), "u={u} w={w} z={z}");
                }
            }
        }
    }

    #[test]
    fn attached_edge_swap_is_exact_for_every_placement_on_a_theta_component() {
        let mut arcs: StdVec<(Vertex, Vertex)> = theta6().arcs().collect();
        arcs.push((0, 6));
        arcs.push((6, 0));
        let d = Digraph::new(7, &arcs);
        let dec = decompose(&d).unwrap();
        let c = dec.components.iter().find(|c| c.len() == 6).unwrap().clone();
        let ac = AttachedComponent {
            component: c,
            external_vertex: 6,
            attach_vertex: 0,
            mode: AttachMode::AttachedEdge,
        };
        let world = ac.world(7);
        for u in 0..6usize {
            for w in 0..6usize {
                if u == w {
                    continue;
                }
                for z in 0..7usize {
                    if z == u || z == w {
                        continue;
                    }
                    let a = Config::from_pebble_positions(7, &pebbles_except(7, &[w, z]));
                    let plan = attached_edge_swap(&ac, &a, u, w)
                        .unwrap_or_else(|e| panic!("u={u} w={w} z={z}: {e}"));
                    let end = apply_plan(&a, &plan, &world).unwrap();
                    assert_eq!(end, swap_config(&a, u, w), "u={u} w={w} z={z}");
                }
            }
        }
    }

    #[test]
    fn cross_component_swap_is_exact_on_the_three_component_example() {
        let d = Digraph::new(
            13,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 0),
                (2, 4),
                (4, 2),
                (4, 5),
                (5, 4),
                (5, 6),
                (6, 7),
                (7, 8),
                (8, 5),
                (8, 9),
                (9, 10),
                (10, 6),
                (10, 11),
                (11, 12),
                (12, 10),
            ],
        );
        let dec = decompose(&d).unwrap();
        let a = Config::from_pebble_positions(13, &pebbles_except(13, &[0, 11]));
        let plan = two_bcc_swap(&d, &dec, &a, 6, 11).unwrap();
        let end = apply_plan(&a, &plan, &d).unwrap();
        assert_eq!(end, swap_config(&a, 6, 11));
    }

    #[test]
    fn exchanges_restore_every_pebble_on_two_triangles_sharing_a_vertex() {
        let d = Digraph::new(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]);
        let dec = decompose(&d).unwrap();
        assert_eq!(dec.components.len(), 2);
        for x in 0..5usize {
            for y in 0..5usize {
                if x == y {
                    continue;
                }
                for z in 0..5usize {
                    if z == x || z == y {
                        continue;
                    }
                    let a = Config::from_pebble_positions(5, &pebbles_except(5, &[y, z]));
                    let plan = realize_exchange(&d, &dec, &a, x, y)
                        .unwrap_or_else(|e| panic!("x={x} y={y} z={z}: {e}"));
                    let end = apply_plan(&a, &plan, &d).unwrap();
                    assert!(
                        end.pebbles_match(&swap_config(&a, x, y)),
                        "x={x} y={y} z={z}"
                    );
                }
            }
        }
    }

    #[test]
    fn exchanges_are_exact_everywhere_on_a_theta_joined_to_a_triangle() {
        // Pentagon 0..4 with the chord ear 1-5-3, plus a triangle 2-6-7
        // sharing only the articulation vertex 2.
        let d = Digraph::new(
            8,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 0),
                (1, 5),
                (5, 3),
                (2, 6),
                (6, 7),
                (7, 2),
            ],
        );
        let dec = decompose(&d).unwrap();
        assert_eq!(dec.components.len(), 2);
        for x in 0..8usize {
            for y in 0..8usize {
                if x == y {
                    continue;
                }
                for z in 0..8usize {
                    if z == x || z == y {
                        continue;
                    }
                    let a = Config::from_pebble_positions(8, &pebbles_except(8, &[y, z]));
                    let plan = realize_exchange(&d, &dec, &a, x, y)
                        .unwrap_or_else(|e| panic!("x={x} y={y} z={z}: {e}"));
                    let end = apply_plan(&a, &plan, &d).unwrap();
                    assert_eq!(end, swap_config(&a, x, y), "x={x} y={y} z={z}");
                }
            }
        }
    }

    #[test]
    fn cross_component_swap_needs_a_shared_articulation_point() {
        let d = Digraph::new(
            7,
            &[
                (0, 1),
                (1, 2),
                (2, 0),
                (2, 3),
                (3, 2),
                (3, 4),
                (4, 3),
                (4, 5),
                (5, 6),
                (6, 4),
            ],
        );
        let dec = decompose(&d).unwrap();
        let a = Config::from_pebble_positions(7, &pebbles_except(7, &[5, 1]));
        assert_eq!(
            two_bcc_swap(&d, &dec, &a, 0, 5),
            Err(SbdError::NotJoinedByArticulationPoint)
        );
    }
}
