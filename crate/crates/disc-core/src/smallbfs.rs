//! Exact search over labelled configurations restricted to a small vertex
//! set. Used as a last-resort construction for exchange plans on tiny
//! components where the structured builders give up.

use crate::graph_core::{Digraph, Vertex};
use crate::plan_engine::{Config, Move, Plan};
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

/// Breadth-first search over the labelled occupancies of `cells`: finds a
/// plan of moves along `world` arcs inside `cells` turning `start` into
/// `target` (exact agent labels, holes included), touching nothing outside.
/// Gives up after `cap` expanded states.
pub(crate) fn exchange_by_search(
    world: &Digraph,
    cells: &BTreeSet<Vertex>,
    start: &Config,
    target: &Config,
    cap: usize,
) -> Option<Plan> {
    let cell_list: Vec<Vertex> = cells.iter().copied().collect();
    let index_of: BTreeMap<Vertex, usize> =
        cell_list.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    // Agents outside `cells` must already agree.
    for agent in 0..start.agent_count() {
        let s = start.position(agent);
        if !cells.contains(&s) {
            if target.position(agent) != s {
                return None;
            }
        } else if !cells.contains(&target.position(agent)) {
            return None;
        }
    }
    let restrict = |c: &Config| -> Vec<usize> {
        cell_list.iter().map(|&v| c.occupant_index(v)).collect()
    };
    let arcs: Vec<(usize, usize, Vertex, Vertex)> = world
        .arcs()
        .filter(|&(u, v)| cells.contains(&u) && cells.contains(&v))
        .map(|(u, v)| (index_of[&u], index_of[&v], u, v))
        .collect();

    let start_state = restrict(start);
    let goal_state = restrict(target);
    if start_state == goal_state {
        return Some(Plan::new());
    }
    let pebbles = start.pebble_count();
    let is_hole = |agent: usize| agent >= pebbles;

    let mut parent: BTreeMap<Vec<usize>, (Vec<usize>, Move)> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    seen.insert(start_state.clone());
    queue.push_back(start_state.clone());
    let mut expanded = 0usize;
    while let Some(state) = queue.pop_front() {
        expanded += 1;
        if expanded > cap {
            return None;
        }
        for &(fi, ti, fv, tv) in &arcs {
            if !is_hole(state[ti]) {
                continue;
            }
            let mut next = state.clone();
            next.swap(fi, ti);
            if seen.contains(&next) {
                continue;
            }
            seen.insert(next.clone());
            parent.insert(next.clone(), (state.clone(), Move::new(fv, tv)));
            if next == goal_state {
                let mut plan = Plan::new();
                let mut cur = next;
                while cur != start_state {
                    let (prev, mv) = parent.get(&cur).unwrap().clone();
                    plan.push(mv);
                    cur = prev;
                }
                plan.reverse();
                return Some(plan);
            }
            queue.push_back(next);
        }
    }
    None
}

/// Like `exchange_by_search`, but matches pebbles only: the plan must put
/// every pebble where `target` puts it, while hole labels may land on any
/// free cell. Searching the hole-label quotient keeps the space small.
pub(crate) fn exchange_pebbles_by_search(
    world: &Digraph,
    cells: &BTreeSet<Vertex>,
    start: &Config,
    target: &Config,
    cap: usize,
) -> Option<Plan> {
    const HOLE: usize = usize::MAX;
    let cell_list: Vec<Vertex> = cells.iter().copied().collect();
    let index_of: BTreeMap<Vertex, usize> =
        cell_list.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let pebbles = start.pebble_count();
    for agent in 0..pebbles {
        let s = start.position(agent);
        if !cells.contains(&s) {
            if target.position(agent) != s {
                return None;
            }
        } else if !cells.contains(&target.position(agent)) {
            return None;
        }
    }
    let restrict = |c: &Config| -> Vec<usize> {
        cell_list
            .iter()
            .map(|&v| {
                let agent = c.occupant_index(v);
                if agent < pebbles {
                    agent
                } else {
                    HOLE
                }
            })
            .collect()
    };
    let arcs: Vec<(usize, usize, Vertex, Vertex)> = world
        .arcs()
        .filter(|&(u, v)| cells.contains(&u) && cells.contains(&v))
        .map(|(u, v)| (index_of[&u], index_of[&v], u, v))
        .collect();

    let start_state = restrict(start);
    let goal_state = restrict(target);
    if start_state == goal_state {
        return Some(Plan::new());
    }
    let mut parent: BTreeMap<Vec<usize>, (Vec<usize>, Move)> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    seen.insert(start_state.clone());
    queue.push_back(start_state.clone());
    let mut expanded = 0usize;
    while let Some(state) = queue.pop_front() {
        expanded += 1;
        if expanded > cap {
            return None;
        }
        for &(fi, ti, fv, tv) in &arcs {
            // Hole-onto-hole moves are identity in the quotient: skip them.
            if state[ti] != HOLE || state[fi] == HOLE {
                continue;
            }
            let mut next = state.clone();
            next.swap(fi, ti);
            if seen.contains(&next) {
                continue;
            }
            seen.insert(next.clone());
            parent.insert(next.clone(), (state.clone(), Move::new(fv, tv)));
            if next == goal_state {
                let mut plan = Plan::new();
                let mut cur = next;
                while cur != start_state {
                    let (prev, mv) = parent.get(&cur).unwrap().clone();
                    plan.push(mv);
                    cur = prev;
                }
                plan.reverse();
                return Some(plan);
            }
            queue.push_back(next);
        }
    }
    None
}

/// Breadth-first search that steers pebble `p` onto vertex `v` using moves
/// inside `cells` only, with no constraint on where the other agents end up.
/// Gives up after `cap` expanded states.
pub(crate) fn steer_pebble_by_search(
    world: &Digraph,
    cells: &BTreeSet<Vertex>,
    start: &Config,
    p: usize,
    v: Vertex,
    cap: usize,
) -> Option<Plan> {
    let cell_list: Vec<Vertex> = cells.iter().copied().collect();
    let index_of: BTreeMap<Vertex, usize> =
        cell_list.iter().enumerate().map(|(i, &w)| (w, i)).collect();
    let goal_cell = *index_of.get(&v)?;
    if !cells.contains(&start.pebble_position(p)) {
        return None;
    }
    let restrict = |c: &Config| -> Vec<usize> {
        cell_list.iter().map(|&w| c.occupant_index(w)).collect()
    };
    let arcs: Vec<(usize, usize, Vertex, Vertex)> = world
        .arcs()
        .filter(|&(u, w)| cells.contains(&u) && cells.contains(&w))
        .map(|(u, w)| (index_of[&u], index_of[&w], u, w))
        .collect();

    let start_state = restrict(start);
    if start_state[goal_cell] == p {
        return Some(Plan::new());
    }
    let pebbles = start.pebble_count();
    let is_hole = |agent: usize| agent >= pebbles;

    let mut parent: BTreeMap<Vec<usize>, (Vec<usize>, Move)> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    seen.insert(start_state.clone());
    queue.push_back(start_state.clone());
    let mut expanded = 0usize;
    while let Some(state) = queue.pop_front() {
        expanded += 1;
        if expanded > cap {
            return None;
        }
        for &(fi, ti, fv, tv) in &arcs {
            if !is_hole(state[ti]) {
                continue;
            }
            let mut next = state.clone();
            next.swap(fi, ti);
            if seen.contains(&next) {
                continue;
            }
            seen.insert(next.clone());
            parent.insert(next.clone(), (state.clone(), Move::new(fv, tv)));
            if next[goal_cell] == p {
                let mut plan = Plan::new();
                let mut cur = next;
                while cur != start_state {
                    let (prev, mv) = parent.get(&cur).unwrap().clone();
                    plan.push(mv);
                    cur = prev;
                }
                plan.reverse();
                return Some(plan);
            }
            queue.push_back(next);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan_engine::{apply_plan, swap_config};

    #[test]
    fn finds_exact_exchange_on_triangle_with_tail() {
        // Triangle 0-1-2 plus bidirectional tail 2-3.
        let d = Digraph::new(4, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 2)]);
        let cells: BTreeSet<Vertex> = [0, 1, 2, 3].into_iter().collect();
        let a = Config::from_pebble_positions(4, &[0, 1]);
        let target = swap_config(&a, 0, 2);
        let plan = exchange_by_search(&d, &cells, &a, &target, 100_000).unwrap();
        assert_eq!(apply_plan(&a, &plan, &d).unwrap(), target);
    }

    #[test]
    fn steers_a_pebble_across_a_triangle() {
        let d = Digraph::new(3, &[(0, 1), (1, 2), (2, 0)]);
        let cells: BTreeSet<Vertex> = [0, 1, 2].into_iter().collect();
        let a = Config::from_pebble_positions(3, &[0, 1]);
        let plan = steer_pebble_by_search(&d, &cells, &a, 0, 2, 100_000).unwrap();
        let end = apply_plan(&a, &plan, &d).unwrap();
        assert_eq!(end.pebble_position(0), 2);
    }

    #[test]
    fn detects_unreachable_targets() {
        // Plain directed triangle with one pebble and one hole position
        // frozen outside the cell set.
        let d = Digraph::new(3, &[(0, 1), (1, 2), (2, 0)]);
        let cells: BTreeSet<Vertex> = [0, 1].into_iter().collect();
        let a = Config::from_pebble_positions(3, &[0]);
        let target = swap_config(&a, 0, 2);
        assert!(exchange_by_search(&d, &cells, &a, &target, 100_000).is_none());
    }
}
