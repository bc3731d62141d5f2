//! Shared helpers for the unit tests: a tiny deterministic RNG and samplers
//! for random strongly connected digraphs. Test-only code.

use crate::graph_core::{is_strongly_connected, Digraph, Vertex};
use alloc::vec::Vec;

/// xorshift64* — small, seedable, good enough for test sampling.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    /// Uniform value in `0..bound` (bound > 0).
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }

    pub fn chance(&mut self, num: u32, den: u32) -> bool {
        self.next_u64() % (den as u64) < num as u64
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }
}

/// Random strongly connected digraph with 3..=max_n vertices: a random
/// directed Hamiltonian cycle plus a sprinkling of extra arcs.
pub fn sample_strongly_connected(rng: &mut Rng, max_n: usize) -> Digraph {
    let n = 3 + rng.below(max_n.saturating_sub(2));
    let mut order: Vec<Vertex> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut arcs: Vec<(Vertex, Vertex)> = (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
    let extra = rng.below(2 * n + 1);
    for _ in 0..extra {
        let u = rng.below(n);
        let v = rng.below(n);
        if u != v {
            arcs.push((u, v));
        }
    }
    let d = Digraph::new(n, &arcs);
    debug_assert!(is_strongly_connected(&d));
    d
}

/// Random strongly connected digraph that usually has several components:
/// chains 2–3 small strongly connected pieces with corridors.
pub fn sample_composite(rng: &mut Rng, max_piece: usize) -> Digraph {
    let pieces = 2 + rng.below(2);
    let mut arcs: Vec<(Vertex, Vertex)> = Vec::new();
    let mut total = 0usize;
    let mut anchors: Vec<Vertex> = Vec::new();
    for _ in 0..pieces {
        let part = sample_strongly_connected(rng, max_piece);
        let base = total;
        for (u, v) in part.arcs() {
            arcs.push((base + u, base + v));
        }
        anchors.push(base + rng.below(part.vertex_count()));
        total += part.vertex_count();
    }
    // Join consecutive pieces with a bidirectional corridor of length 0–2.
    for w in anchors.windows(2) {
        let (mut a, b) = (w[0], w[1]);
        let hops = rng.below(3);
        for _ in 0..hops {
            let mid = total;
            total += 1;
            arcs.push((a, mid));
            arcs.push((mid, a));
            a = mid;
        }
        arcs.push((a, b));
        arcs.push((b, a));
    }
    let d = Digraph::new(total, &arcs);
    debug_assert!(is_strongly_connected(&d));
    d
}
