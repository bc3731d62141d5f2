//! Permutation-group membership via a stabilizer chain. The feasibility
//! check for one-hole instances reduces to asking whether a required
//! permutation lies in the group generated by the net effects of closed
//! hole walks; this module answers such membership queries exactly.

use crate::graph_core::{Digraph, Vertex};
use crate::plan_engine::Config;
use alloc::collections::BTreeMap;
use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// A permutation of `0..n`, stored as its image table.
pub(crate) type Perm = Vec<usize>;

pub(crate) fn identity(n: usize) -> Perm {
    (0..n).collect()
}

/// Apply `p` first, then `q`.
pub(crate) fn compose(p: &Perm, q: &Perm) -> Perm {
    p.iter().map(|&i| q[i]).collect()
}

pub(crate) fn invert(p: &Perm) -> Perm {
    let mut inv = vec![0; p.len()];
    for (i, &img) in p.iter().enumerate() {
        inv[img] = i;
    }
    inv
}

pub(crate) fn is_identity(p: &Perm) -> bool {
    p.iter().enumerate().all(|(i, &img)| i == img)
}

/// Stabilizer chain (Schreier–Sims) over `0..degree`, built incrementally
/// and closed by a fixpoint pass; membership tests are exact.
pub(crate) struct StabilizerChain {
    degree: usize,
    /// Stabilized points, one per level.
    base: Vec<usize>,
    /// Strong generators attached at each level; gens[l] fix base[0..l].
    gens: Vec<Vec<Perm>>,
    /// level -> (point in orbit of base[level] -> element mapping
    /// base[level] to that point).
    transversals: Vec<BTreeMap<usize, Perm>>,
}

impl StabilizerChain {
    pub(crate) fn new(degree: usize) -> Self {
        StabilizerChain {
            degree,
            base: Vec::new(),
            gens: Vec::new(),
            transversals: Vec::new(),
        }
    }

    /// Strip `p` through the chain: returns the residue and the level at
    /// which stripping stopped (== chain length when fully stripped).
    fn strip(&self, p: &Perm) -> (Perm, usize) {
        let mut cur = p.clone();
        for level in 0..self.base.len() {
            let img = cur[self.base[level]];
            match self.transversals[level].get(&img) {
                Some(rep) => cur = compose(&cur, &invert(rep)),
                None => return (cur, level),
            }
        }
        (cur, self.base.len())
    }

    pub(crate) fn contains(&self, p: &Perm) -> bool {
        assert_eq!(p.len(), self.degree);
        let (residue, level) = self.strip(p);
        level == self.base.len() && is_identity(&residue)
    }

    /// Record a residue as a strong generator at `level`, extending the
    /// base first if the residue fixes every current base point.
    fn install(&mut self, residue: Perm, level: usize) {
        if level == self.base.len() {
            let moved = residue
                .iter()
                .enumerate()
                .find(|&(i, &img)| i != img)
                .map(|(i, _)| i)
                .expect("non-identity residue moves some point");
            self.base.push(moved);
            self.gens.push(Vec::new());
            self.transversals.push(BTreeMap::new());
        }
        self.gens[level].push(residue);
    }

    pub(crate) fn add_generator(&mut self, p: Perm) {
        assert_eq!(p.len(), self.degree);
        let (residue, level) = self.strip(&p);
        if level == self.base.len() && is_identity(&residue) {
            return;
        }
        self.install(residue, level);
        self.rebuild();
    }

    /// Recompute every transversal and chase Schreier generators until no
    /// new strong generator appears.
    fn rebuild(&mut self) {
        loop {
            for level in 0..self.base.len() {
                let acting = self.acting_generators(level);
                let mut transversal = BTreeMap::new();
                transversal.insert(self.base[level], identity(self.degree));
                let mut frontier = vec![self.base[level]];
                while let Some(pt) = frontier.pop() {
                    let rep = transversal[&pt].clone();
                    for g in &acting {
                        let img = g[pt];
                        if !transversal.contains_key(&img) {
                            transversal.insert(img, compose(&rep, g));
                            frontier.push(img);
                        }
                    }
                }
                self.transversals[level] = transversal;
            }
            match self.first_missing_schreier_generator() {
                Some((residue, level)) => self.install(residue, level),
                None => break,
            }
        }
    }

    /// Generators that act at `level`: strong generators from any level
    /// that fix the base prefix base[0..level].
    fn acting_generators(&self, level: usize) -> Vec<Perm> {
        self.gens
            .iter()
            .flatten()
            .filter(|g| (0..level).all(|l| g[self.base[l]] == self.base[l]))
            .cloned()
            .collect()
    }

    fn first_missing_schreier_generator(&self) -> Option<(Perm, usize)> {
        for level in 0..self.base.len() {
            let acting = self.acting_generators(level);
            let transversal = &self.transversals[level];
            for rep in transversal.values() {
                for g in &acting {
                    let carried = compose(rep, g);
                    let to_rep = &transversal[&carried[self.base[level]]];
                    let schreier = compose(&carried, &invert(to_rep));
                    if is_identity(&schreier) {
                        continue;
                    }
                    let (residue, lv) = self.strip(&schreier);
                    if !(lv == self.base.len() && is_identity(&residue)) {
                        return Some((residue, lv));
                    }
                }
            }
        }
        None
    }
}

fn swap_two(n: usize, i: usize, j: usize) -> Perm {
    let mut p = identity(n);
    p.swap(i, j);
    p
}

/// Decide whether a one-hole instance can reach the requested pebble
/// placement. With a single vacancy every move slides one occupant into
/// it, so a whole plan is a walk of the vacancy (stepping from `v` to `u`
/// exactly when the arc `(u, v)` exists). Closed walks based at the
/// vacancy's start generate a permutation group; walks to the forced final
/// vacancy cell form one coset of it, and the instance is solvable exactly
/// when the required positional permutation lies in that coset.
///
/// The group is assembled from one generator per vacancy-graph arc
/// (out-tree path to the arc, the arc itself, in-tree path back) plus one
/// per vertex (out-tree path chased straight into the in-tree); membership
/// is then a stabilizer-chain query.
pub(crate) fn one_hole_reachable(
    d: &Digraph,
    a: &Config,
    targets: &BTreeMap<usize, Vertex>,
) -> bool {
    let n = d.vertex_count();
    assert_eq!(a.hole_count(), 1, "one-hole reachability needs exactly one hole");
    assert_eq!(targets.len(), a.pebble_count(), "total target map");
    let z = a.hole_set().into_iter().next().expect("the hole cell");

    // Required positional permutation: each pebble's start cell maps to its
    // target cell; the vacancy is forced onto the one uncovered cell.
    let mut sigma = identity(n);
    let mut covered = vec![false; n];
    for p in 0..a.pebble_count() {
        let to = targets[&p];
        sigma[a.pebble_position(p)] = to;
        assert!(!covered[to], "targets must be injective");
        covered[to] = true;
    }
    let z_end = (0..n).find(|&v| !covered[v]).expect("one uncovered cell");
    sigma[z] = z_end;

    // Vacancy graph: the vacancy at v may step to u when (u, v) is an arc.
    let mut fwd: Vec<Vec<Vertex>> = vec![Vec::new(); n];
    let mut back: Vec<Vec<Vertex>> = vec![Vec::new(); n];
    for (u, v) in d.arcs() {
        fwd[v].push(u);
        back[u].push(v);
    }

    // Out-tree from z: walk_to[x] is the net effect of a fixed vacancy walk
    // z -> x (each step composes one cell transposition).
    let mut walk_to: Vec<Option<Perm>> = vec![None; n];
    walk_to[z] = Some(identity(n));
    let mut queue = VecDeque::from([z]);
    while let Some(x) = queue.pop_front() {
        let acc = walk_to[x].clone().expect("visited");
        for &y in &fwd[x] {
            if walk_to[y].is_none() {
                walk_to[y] = Some(compose(&acc, &swap_two(n, x, y)));
                queue.push_back(y);
            }
        }
    }
    // In-tree to z: walk_from[y] is the net effect of a fixed walk y -> z.
    let mut walk_from: Vec<Option<Perm>> = vec![None; n];
    walk_from[z] = Some(identity(n));
    queue.push_back(z);
    while let Some(x) = queue.pop_front() {
        let acc = walk_from[x].clone().expect("visited");
        for &y in &back[x] {
            if walk_from[y].is_none() {
                walk_from[y] = Some(compose(&swap_two(n, y, x), &acc));
                queue.push_back(y);
            }
        }
    }
    if walk_to.iter().any(|w| w.is_none()) || walk_from.iter().any(|w| w.is_none()) {
        // The vacancy cannot tour the graph; only the identity placement
        // (with the vacancy already home) could ever hold, and strong
        // connectivity of callers rules this out anyway.
        return sigma == identity(n);
    }

    let mut chain = StabilizerChain::new(n);
    for x in 0..n {
        let px = walk_to[x].as_ref().expect("out-tree is total");
        let qx = walk_from[x].as_ref().expect("in-tree is total");
        chain.add_generator(compose(px, qx));
        for &y in &fwd[x] {
            let qy = walk_from[y].as_ref().expect("in-tree is total");
            chain.add_generator(compose(&compose(px, &swap_two(n, x, y)), qy));
        }
    }

    let w0 = walk_to[z_end].as_ref().expect("out-tree is total");
    chain.contains(&compose(&sigma, &invert(w0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::Rng;

    fn transposition(n: usize, i: usize, j: usize) -> Perm {
        swap_two(n, i, j)
    }

    fn cycle(n: usize) -> Perm {
        (0..n).map(|i| (i + 1) % n).collect()
    }

    #[test]
    fn symmetric_group_contains_everything() {
        let n = 6;
        let mut chain = StabilizerChain::new(n);
        chain.add_generator(transposition(n, 0, 1));
        chain.add_generator(cycle(n));
        let mut rng = Rng::new(11);
        let mut perm = identity(n);
        for _ in 0..50 {
            rng.shuffle(&mut perm);
            assert!(chain.contains(&perm));
        }
    }

    #[test]
    fn alternating_group_excludes_odd_permutations() {
        let n = 5;
        let mut chain = StabilizerChain::new(n);
        // 3-cycles generate the alternating group.
        let mut g1 = identity(n);
        g1[0] = 1;
        g1[1] = 2;
        g1[2] = 0;
        let mut g2 = identity(n);
        g2[2] = 3;
        g2[3] = 4;
        g2[4] = 2;
        chain.add_generator(g1.clone());
        chain.add_generator(g2.clone());
        assert!(chain.contains(&g1));
        assert!(chain.contains(&compose(&g1, &g2)));
        assert!(!chain.contains(&transposition(n, 0, 1)));
        assert!(!chain.contains(&transposition(n, 3, 4)));
    }

    #[test]
    fn cyclic_group_membership_is_exact() {
        let n = 7;
        let mut chain = StabilizerChain::new(n);
        chain.add_generator(cycle(n));
        let mut power = identity(n);
        for _ in 0..n {
            assert!(chain.contains(&power));
            power = compose(&power, &cycle(n));
        }
        assert!(!chain.contains(&transposition(n, 0, 1)));
    }

    fn injective_maps(n: usize, m: usize) -> Vec<Vec<usize>> {
        fn rec(n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
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
        let mut out = Vec::new();
        rec(n, m, &mut Vec::new(), &mut out);
        out
    }

    /// Breadth-first search over pebble position tuples: the ground truth
    /// for one-hole reachability on small graphs.
    fn one_hole_oracle(d: &Digraph, a: &Config, targets: &BTreeMap<usize, usize>) -> bool {
        let n = d.vertex_count();
        let m = a.pebble_count();
        let start: Vec<usize> = (0..m).map(|p| a.pebble_position(p)).collect();
        let goal: Vec<usize> = (0..m).map(|p| targets[&p]).collect();
        let mut seen: alloc::collections::BTreeSet<Vec<usize>> =
            [start.clone()].into_iter().collect();
        let mut queue: VecDeque<Vec<usize>> = [start].into_iter().collect();
        while let Some(state) = queue.pop_front() {
            if state == goal {
                return true;
            }
            let hole = (0..n).find(|v| !state.contains(v)).expect("one free cell");
            for p in 0..m {
                if d.has_arc(state[p], hole) {
                    let mut next = state.clone();
                    next[p] = hole;
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
        false
    }

    fn to_map(assignment: &[usize]) -> BTreeMap<usize, usize> {
        assignment.iter().copied().enumerate().collect()
    }

    #[test]
    fn one_hole_on_a_directed_ring_reaches_exactly_the_rotations() {
        let l = 5;
        let arcs: Vec<(usize, usize)> = (0..l).map(|i| (i, (i + 1) % l)).collect();
        let d = Digraph::new(l, &arcs);
        let a = Config::from_pebble_positions(l, &[0, 1, 2, 3]);
        let mut reachable = 0;
        for assignment in injective_maps(l, 4) {
            let targets = to_map(&assignment);
            let fast = one_hole_reachable(&d, &a, &targets);
            assert_eq!(fast, one_hole_oracle(&d, &a, &targets));
            if fast {
                reachable += 1;
            }
        }
        // A lone vacancy on a directed ring only ever rotates the caravan:
        // any vacancy cell, any cyclic shift of the fixed pebble order.
        assert_eq!(reachable, l * (l - 1));
    }

    #[test]
    fn one_hole_on_a_two_eared_graph_agrees_with_search_everywhere() {
        let d = Digraph::new(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 5), (5, 3)]);
        let a = Config::from_pebble_positions(6, &[0, 1, 2, 3, 4]);
        let mut reachable = 0;
        for assignment in injective_maps(6, 5) {
            let targets = to_map(&assignment);
            let fast = one_hole_reachable(&d, &a, &targets);
            assert_eq!(fast, one_hole_oracle(&d, &a, &targets));
            if fast {
                reachable += 1;
            }
        }
        // The extra ear must unlock more than bare ring rotations.
        assert!(reachable > 6);
    }

    #[test]
    fn one_hole_on_a_two_way_path_preserves_pebble_order() {
        let d = Digraph::new(4, &[(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)]);
        let a = Config::from_pebble_positions(4, &[0, 1, 2]);
        let mut reachable = Vec::new();
        for assignment in injective_maps(4, 3) {
            let targets = to_map(&assignment);
            let fast = one_hole_reachable(&d, &a, &targets);
            assert_eq!(fast, one_hole_oracle(&d, &a, &targets));
            if fast {
                reachable.push(assignment);
            }
        }
        // Sliding along a path can never reorder pebbles: exactly the
        // order-preserving placements remain.
        assert_eq!(reachable.len(), 4);
        for assignment in &reachable {
            assert!(assignment[0] < assignment[1] && assignment[1] < assignment[2]);
        }
    }

    #[test]
    fn one_hole_membership_agrees_with_search_on_random_digraphs() {
        let mut rng = Rng::new(2024);
        for _ in 0..25 {
            let d = crate::test_support::sample_strongly_connected(&mut rng, 6);
            let n = d.vertex_count();
            let mut cells: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut cells);
            let a = Config::from_pebble_positions(n, &cells[..n - 1]);
            for _ in 0..30 {
                let mut goal: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut goal);
                let targets = to_map(&goal[..n - 1]);
                assert_eq!(
                    one_hole_reachable(&d, &a, &targets),
                    one_hole_oracle(&d, &a, &targets)
                );
            }
        }
    }

    #[test]
    fn membership_agrees_with_brute_force_closure() {
        // Small random generator sets on 5 points: compare chain
        // membership against an explicit closure.
        let mut rng = Rng::new(99);
        for _ in 0..20 {
            let n = 5;
            let mut gens = Vec::new();
            for _ in 0..2 {
                let mut p = identity(n);
                rng.shuffle(&mut p);
                gens.push(p);
            }
            let mut closure: alloc::collections::BTreeSet<Perm> =
                [identity(n)].into_iter().collect();
            loop {
                let mut grew = false;
                let snapshot: Vec<Perm> = closure.iter().cloned().collect();
                for a in &snapshot {
                    for g in &gens {
                        let c = compose(a, g);
                        if closure.insert(c) {
                            grew = true;
                        }
                    }
                }
                if !grew {
                    break;
                }
            }
            let mut chain = StabilizerChain::new(n);
            for g in &gens {
                chain.add_generator(g.clone());
            }
            let mut probe = identity(n);
            for _ in 0..40 {
                rng.shuffle(&mut probe);
                assert_eq!(chain.contains(&probe), closure.contains(&probe));
            }
            for g in &closure {
                assert!(chain.contains(g));
            }
        }
    }
}
