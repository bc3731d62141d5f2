//! The basic plan builders everything else is assembled from: routing a hole
//! along a path, rotating cycles, and composing rotations over chains of
//! cycles.

use crate::graph_core::{shortest_path_in_digraph, Digraph, Vertex};
use crate::plan_engine::{reverse_plan, Config, Move, Plan, PlanError};
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionError {
    /// The vertex that should hold the travelling hole holds a pebble.
    VertexNotHole,
    /// No directed path exists under the requested constraints.
    Unreachable,
    /// A rotation was asked of a cycle carrying no hole; the index tells
    /// which cycle of a composite rotation failed.
    NoHoleOnCycle { cycle: usize },
}

impl fmt::Display for MotionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotionError::VertexNotHole => write!(f, "designated vertex does not hold a hole"),
            MotionError::Unreachable => write!(f, "no directed path under the given constraints"),
            MotionError::NoHoleOnCycle { cycle } => {
                write!(f, "cycle #{cycle} holds no hole when its rotation starts")
            }
        }
    }
}

impl core::error::Error for MotionError {}

/// A sequence of cycle rotations: rotate `cycles[i]` forward by
/// `amounts[i]`, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationSpec {
    pub cycles: Vec<Vec<Vertex>>,
    pub amounts: Vec<usize>,
}

/// Routes the hole at `v` to `w`: walks it backwards along a shortest
/// directed path `w ⇝ v`, shifting each path occupant one step toward `v`.
/// Agents off the path do not move.
pub fn bring_hole(a: &Config, d: &Digraph, v: Vertex, w: Vertex) -> Result<Plan, MotionError> {
    bring_hole_avoiding(a, d, v, w, &BTreeSet::new())
}

/// `bring_hole` along a shortest path that stays clear of `avoid`.
pub(crate) fn bring_hole_avoiding(
    a: &Config,
    d: &Digraph,
    v: Vertex,
    w: Vertex,
    avoid: &BTreeSet<Vertex>,
) -> Result<Plan, MotionError> {
    if !a.is_hole_at(v) {
        return Err(MotionError::VertexNotHole);
    }
    if v == w {
        return Ok(Plan::new());
    }
    let path =
        shortest_path_in_digraph(d, w, v, avoid).ok_or(MotionError::Unreachable)?;
    Ok(moves_toward_hole(&path))
}

/// The moves that realize a hole walk along `path = [w, ..., v]` (hole at
/// `v`): last arc first, so the hole steps backwards to `w`.
pub(crate) fn moves_toward_hole(path: &[Vertex]) -> Plan {
    (0..path.len() - 1).rev().map(|j| Move::new(path[j], path[j + 1])).collect()
}

/// The plan that undoes a hole-routing plan exactly, returning every pebble
/// and hole to where it stood before `h_plan` ran from `a`.
pub fn bring_back_hole(d: &Digraph, a: &Config, h_plan: &[Move]) -> Result<Plan, PlanError> {
    reverse_plan(d, a, h_plan)
}

/// Routes the hole at `v` toward `w` but stops one step short: the hole
/// lands on `w`'s successor along the chosen shortest path `w ⇝ v`, leaving
/// `w` itself untouched. Returns the plan and the landing vertex.
pub fn bring_hole_to_successor(
    a: &Config,
    d: &Digraph,
    v: Vertex,
    w: Vertex,
) -> Result<(Plan, Vertex), MotionError> {
    bring_hole_to_successor_avoiding(a, d, v, w, &BTreeSet::new())
}

pub(crate) fn bring_hole_to_successor_avoiding(
    a: &Config,
    d: &Digraph,
    v: Vertex,
    w: Vertex,
    avoid: &BTreeSet<Vertex>,
) -> Result<(Plan, Vertex), MotionError> {
    if !a.is_hole_at(v) {
        return Err(MotionError::VertexNotHole);
    }
    if v == w {
        return Err(MotionError::Unreachable);
    }
    let mut avoid2 = avoid.clone();
    avoid2.remove(&w);
    let path =
        shortest_path_in_digraph(d, w, v, &avoid2).ok_or(MotionError::Unreachable)?;
    let landing = path[1];
    Ok((moves_toward_hole(&path[1..]), landing))
}

/// Applies a move without validity checks; rotation internals only, where
/// the moves are cycle arcs onto a tracked vacancy by construction.
fn slide(cur: &mut Config, plan: &mut Plan, from: Vertex, to: Vertex) {
    debug_assert!(cur.is_hole_at(to));
    cur.swap_vertices_in_place(from, to);
    plan.push(Move::new(from, to));
}

/// One forward rotation step of a cycle: the designated hole (smallest
/// vertex id holding a hole) walks backwards once around, advancing every
/// occupant of the cycle one position forward.
fn rotate_once(cur: &mut Config, plan: &mut Plan, c: &[Vertex]) -> Result<(), ()> {
    let l = c.len();
    let vac = c.iter().copied().filter(|&v| cur.is_hole_at(v)).min().ok_or(())?;
    let mut idx = c.iter().position(|&x| x == vac).unwrap();
    for _ in 1..l {
        let prev = (idx + l - 1) % l;
        slide(cur, plan, c[prev], c[idx]);
        idx = prev;
    }
    Ok(())
}

/// The `k`-fold forward rotation of a cycle given in ring order: every
/// occupant advances `k` positions along the cycle. Costs `k (l - 1)` moves.
pub fn cycle_rotation(a: &Config, c: &[Vertex], k: usize) -> Result<Plan, MotionError> {
    let mut cur = a.clone();
    let mut plan = Plan::new();
    for _ in 0..k {
        rotate_once(&mut cur, &mut plan, c)
            .map_err(|_| MotionError::NoHoleOnCycle { cycle: 0 })?;
    }
    Ok(plan)
}

/// Rotations of several cycles run back to back; each cycle must carry a
/// hole at the moment its own rotation starts.
pub fn composite_rotation(a: &Config, spec: &RotationSpec) -> Result<Plan, MotionError> {
    assert_eq!(spec.cycles.len(), spec.amounts.len(), "one amount per cycle");
    let mut cur = a.clone();
    let mut plan = Plan::new();
    for (i, c) in spec.cycles.iter().enumerate() {
        for _ in 0..spec.amounts[i] {
            rotate_once(&mut cur, &mut plan, c)
                .map_err(|_| MotionError::NoHoleOnCycle { cycle: i })?;
        }
    }
    Ok(plan)
}

/// The complementary rotation sequence: cycles in reverse order, each turned
/// by the amount that completes its full length. Running a spec and then its
/// inverse restores every occupant.
pub fn inverse_rotation(spec: &RotationSpec) -> RotationSpec {
    let mut cycles: Vec<Vec<Vertex>> = spec.cycles.clone();
    let mut amounts: Vec<usize> = spec
        .cycles
        .iter()
        .zip(&spec.amounts)
        .map(|(c, &k)| {
            assert!(k <= c.len(), "rotation amount exceeds cycle length");
            c.len() - k
        })
        .collect();
    cycles.reverse();
    amounts.reverse();
    RotationSpec { cycles, amounts }
}
