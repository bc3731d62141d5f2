//! Random instance generation, the brute-force oracle, and the benchmark
//! runner.
//!
//! Graphs are generated by the protocol the solver is benchmarked under:
//! draw a connected small-world graph, take a maximum spanning tree rooted
//! at a hub, then walk it breadth-first turning every node that has more
//! than one child into a strongly biconnected component (a directed cycle
//! over part of the family plus directed ears absorbing the rest); tree
//! edges that survive the walk become bidirectional arc pairs. The result
//! is strongly connected by construction, with several biconnected
//! components glued by corridors.
//!
//! The oracle answers feasibility exactly — breadth-first search over
//! pebble placements — and returns a shortest plan, making it the ground
//! truth the solver is validated against wherever the state space is small
//! enough to enumerate.

use disc_core::disc_solver::{solve, Instance, PlanStats, SolveOutcome};
use disc_core::plan_engine::Config;
use disc_core::{Digraph, Move, Plan, Vertex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabError {
    /// Generator parameters out of range, or no connected draw found.
    DegenerateParams(String),
    /// More agents requested than the instance shape supports.
    TooManyAgents,
    /// The oracle refused: too many placements to enumerate.
    StateSpaceTooLarge,
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::DegenerateParams(why) => write!(f, "degenerate parameters: {why}"),
            LabError::TooManyAgents => {
                write!(f, "too many agents: at least two vertices must stay free")
            }
            LabError::StateSpaceTooLarge => {
                write!(f, "state space too large for exhaustive search")
            }
        }
    }
}

impl std::error::Error for LabError {}

/// Parameters for one random digraph draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub node_count: usize,
    pub seed: u64,
    /// Ring-lattice neighbor count of the small-world draw (even, < nodes).
    pub ws_k: usize,
    /// Rewiring probability of the small-world draw, in [0, 1].
    pub ws_p: f64,
}

impl GenParams {
    /// The default knobs: `ws_k` 4 and `ws_p` 0.3.
    pub fn new(node_count: usize, seed: u64) -> GenParams {
        GenParams { node_count, seed, ws_k: 4, ws_p: 0.3 }
    }

    fn validate(&self) -> Result<(), LabError> {
        if self.node_count < 3 {
            return Err(LabError::DegenerateParams(format!(
                "need at least 3 nodes, got {}",
                self.node_count
            )));
        }
        if self.ws_k < 2 || self.ws_k % 2 != 0 || self.ws_k >= self.node_count {
            return Err(LabError::DegenerateParams(format!(
                "ws_k must be even, at least 2, and below the node count; got {}",
                self.ws_k
            )));
        }
        if !(0.0..=1.0).contains(&self.ws_p) {
            return Err(LabError::DegenerateParams(format!(
                "ws_p must lie in [0, 1], got {}",
                self.ws_p
            )));
        }
        Ok(())
    }
}

fn undirected_connected(adj: &[BTreeSet<usize>]) -> bool {
    let n = adj.len();
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// One small-world draw: ring lattice plus per-edge rewiring. `None` when
/// the draw came out disconnected.
fn ws_draw(n: usize, k: usize, p: f64, rng: &mut ChaCha8Rng) -> Option<Vec<BTreeSet<usize>>> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.gen::<f64>() >= p || !adj[u].contains(&v) {
                continue;
            }
            // Redirect the far end to a fresh random vertex; give up on
            // this edge after a few collisions, as the reference generator
            // effectively does on saturated nodes.
            for _ in 0..2 * n {
                let w = rng.gen_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    adj[u].remove(&v);
                    adj[v].remove(&u);
                    adj[u].insert(w);
                    adj[w].insert(u);
                    break;
                }
            }
        }
    }
    undirected_connected(&adj).then_some(adj)
}

/// Maximum spanning tree of the draw. The draw is unweighted, where a
/// maximum tree would be meaningless, so edges are weighted by endpoint
/// degree sum: the tree hugs the hubs, which is what gives the later
/// breadth-first pass its multi-child nodes. Deterministic (Kruskal with
/// full tie ordering).
fn max_spanning_tree(adj: &[BTreeSet<usize>]) -> Vec<(usize, usize)> {
    let n = adj.len();
    let deg: Vec<usize> = adj.iter().map(|s| s.len()).collect();
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    for u in 0..n {
        for &v in &adj[u] {
            if u < v {
                edges.push((deg[u] + deg[v], u, v));
            }
        }
    }
    edges.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    for (_, u, v) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            tree.push((u, v));
        }
    }
    tree
}

/// Walk the tree breadth-first from `root` and convert every node that has
/// more than one child, together with its children, into a strongly
/// biconnected component: a directed cycle through the node and a random
/// part of its children, then directed ears (random length, random distinct
/// endpoints among the members so far) absorbing the children left over.
/// Tree edges not replaced this way become bidirectional pairs.
pub fn tree_to_digraph(n: usize, tree: &[(usize, usize)], root: usize, seed: u64) -> Digraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    directify(n, tree, root, &mut rng)
}

fn directify(n: usize, tree: &[(usize, usize)], root: usize, rng: &mut ChaCha8Rng) -> Digraph {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(u, v) in tree {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    let mut order = Vec::with_capacity(n);
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    debug_assert_eq!(order.len(), n, "tree spans every vertex");

    let mut remaining: BTreeSet<(usize, usize)> =
        tree.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    for &u in &order {
        let mut kids: Vec<usize> =
            adj[u].iter().copied().filter(|&v| parent[v] == Some(u)).collect();
        if kids.len() < 2 {
            continue;
        }
        for &c in &kids {
            remaining.remove(&(u.min(c), u.max(c)));
        }
        kids.shuffle(rng);
        let total = kids.len() + 1;
        let cycle_len = rng.gen_range(3..=total);
        let mut members = vec![u];
        members.extend(kids.drain(..cycle_len - 1));
        for i in 0..cycle_len {
            arcs.push((members[i], members[(i + 1) % cycle_len]));
        }
        while !kids.is_empty() {
            let len = rng.gen_range(1..=kids.len());
            let from = members[rng.gen_range(0..members.len())];
            let to = loop {
                let t = members[rng.gen_range(0..members.len())];
                if t != from {
                    break t;
                }
            };
            let mut prev = from;
            for x in kids.drain(..len) {
                arcs.push((prev, x));
                members.push(x);
                prev = x;
            }
            arcs.push((prev, to));
        }
    }
    for (u, v) in remaining {
        arcs.push((u, v));
        arcs.push((v, u));
    }
    Digraph::new(n, &arcs)
}

/// Draw one strongly connected digraph. Deterministic per parameter set.
pub fn gen_digraph(params: &GenParams) -> Result<Digraph, LabError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.node_count;
    let mut adj = None;
    for _ in 0..100 {
        if let Some(a) = ws_draw(n, params.ws_k, params.ws_p, &mut rng) {
            adj = Some(a);
            break;
        }
    }
    let adj = adj.ok_or_else(|| {
        LabError::DegenerateParams("no connected small-world draw in 100 tries".into())
    })?;
    let tree = max_spanning_tree(&adj);
    // Root at the best-connected vertex so the breadth-first pass sees the
    // fan-out early (ties to the smallest id, for determinism).
    let root = (0..n).max_by_key(|&v| (adj[v].len(), n - v)).unwrap_or(0);
    Ok(directify(n, &tree, root, &mut rng))
}

/// Attach a random instance to the digraph: distinct start vertices and
/// distinct target vertices, drawn uniformly. At least two vertices must
/// remain free so the solver's constructive pipeline applies.
pub fn gen_instance(d: &Digraph, agent_count: usize, seed: u64) -> Result<Instance, LabError> {
    let n = d.vertex_count();
    if agent_count + 2 > n {
        return Err(LabError::TooManyAgents);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells: Vec<Vertex> = (0..n).collect();
    cells.shuffle(&mut rng);
    let starts = cells[..agent_count].to_vec();
    cells.shuffle(&mut rng);
    let targets = cells[..agent_count].iter().enumerate().map(|(p, &v)| (p, v)).collect();
    Ok(Instance {
        digraph: d.clone(),
        start: Config::from_pebble_positions(n, &starts),
        targets,
    })
}

/// Exact ground truth by breadth-first search over pebble placements
/// (hole labels are quotiented out: they never matter to feasibility or to
/// plan length). Returns a shortest plan on feasible instances. Refuses
/// instances whose placement count exceeds about a million.
pub fn oracle_solve(inst: &Instance) -> Result<SolveOutcome, LabError> {
    const CAP: usize = 1_000_000;
    inst.validate().expect("oracle needs a structurally valid instance");
    let d = &inst.digraph;
    let n = d.vertex_count();
    let m = inst.start.pebble_count();
    let mut bound = 1usize;
    for i in 0..m {
        bound = bound.saturating_mul(n - i);
        if bound > CAP {
            return Err(LabError::StateSpaceTooLarge);
        }
    }
    let start: Vec<Vertex> = (0..m).map(|p| inst.start.pebble_position(p)).collect();
    let goal: Vec<Vertex> = (0..m).map(|p| inst.targets[&p]).collect();
    if start == goal {
        return Ok(SolveOutcome::Feasible(Plan::new(), PlanStats::default()));
    }
    let mut parent: HashMap<Vec<Vertex>, (Vec<Vertex>, Move)> = HashMap::new();
    let mut queue: VecDeque<Vec<Vertex>> = VecDeque::from([start.clone()]);
    parent.insert(start.clone(), (start.clone(), Move::new(0, 0)));
    while let Some(state) = queue.pop_front() {
        for p in 0..m {
            for &w in d.out_neighbors(state[p]) {
                if state.contains(&w) {
                    continue;
                }
                let mut next = state.clone();
                next[p] = w;
                if parent.contains_key(&next) {
                    continue;
                }
                parent.insert(next.clone(), (state.clone(), Move::new(state[p], w)));
                if next == goal {
                    let mut plan = Plan::new();
                    let mut at = next;
                    while at != start {
                        let (prev, mv) = parent[&at].clone();
                        plan.push(mv);
                        at = prev;
                    }
                    plan.reverse();
                    let stats = PlanStats { move_count: plan.len(), tree_move_count: 0 };
                    return Ok(SolveOutcome::Feasible(plan, stats));
                }
                queue.push_back(next);
            }
        }
    }
    Ok(SolveOutcome::Infeasible(format!(
        "exhausted {} reachable placements without hitting the goal",
        parent.len()
    )))
}

// ---------------------------------------------------------------------------
// Benchmarks
// ---------------------------------------------------------------------------

/// A benchmark grid: every node count crossed with every agent count,
/// `reps` instances per cell. The same `reps` graphs are reused across
/// agent counts at a fixed node count, mirroring the reference protocol.
#[derive(Debug, Clone)]
pub struct BenchSweep {
    pub node_counts: Vec<usize>,
    pub agent_counts: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub workers: usize,
    pub ws_k: usize,
    pub ws_p: f64,
}

impl BenchSweep {
    /// The node sweep: 20 to 100 nodes in steps of 5, 10 agents, 200
    /// graphs per node count.
    pub fn node_sweep(seed: u64) -> BenchSweep {
        BenchSweep {
            node_counts: (20..=100).step_by(5).collect(),
            agent_counts: vec![10],
            reps: 200,
            seed,
            workers: default_workers(),
            ws_k: 4,
            ws_p: 0.3,
        }
    }

    /// The agent sweep: 1 to 14 agents on the 200 40-node graphs.
    pub fn agent_sweep(seed: u64) -> BenchSweep {
        BenchSweep {
            node_counts: vec![40],
            agent_counts: (1..=14).collect(),
            reps: 200,
            seed,
            workers: default_workers(),
            ws_k: 4,
            ws_p: 0.3,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1)
}

/// One solved (or refused) benchmark instance. `seed` regenerates the
/// graph; `ms` is the wall-clock time of the solve call alone; `moves`
/// counts the emitted plan (0 unless feasible). `check_ms` times the
/// standalone feasibility decision on the same instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub nodes: usize,
    pub agents: usize,
    pub seed: u64,
    pub moves: usize,
    pub ms: f64,
    pub check_ms: f64,
    pub feasible: bool,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn graph_seed(sweep_seed: u64, nodes: usize, rep: usize) -> u64 {
    splitmix(splitmix(sweep_seed ^ (nodes as u64) << 32) ^ rep as u64)
}

fn instance_seed(sweep_seed: u64, nodes: usize, agents: usize, rep: usize) -> u64 {
    splitmix(graph_seed(sweep_seed, nodes, rep) ^ (agents as u64) << 16)
}

/// Run the whole sweep on a bounded worker pool. Results come back in a
/// deterministic order (node count, then agent count, then repetition)
/// regardless of scheduling; everything but the timing fields is
/// reproducible bit-exactly for a fixed sweep seed.
pub fn run_bench(sweep: &BenchSweep) -> Vec<BenchRecord> {
    let mut jobs: Vec<(usize, usize, usize)> = Vec::new();
    for &nodes in &sweep.node_counts {
        for &agents in &sweep.agent_counts {
            for rep in 0..sweep.reps {
                jobs.push((nodes, agents, rep));
            }
        }
    }
    let workers = sweep.workers.max(1).min(jobs.len().max(1));
    let mut slots: Vec<Option<BenchRecord>> = vec![None; jobs.len()];
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers {
            let jobs = &jobs;
            handles.push(scope.spawn(move || {
                let mut local: Vec<(usize, BenchRecord)> = Vec::new();
                let mut idx = w;
                while idx < jobs.len() {
                    let (nodes, agents, rep) = jobs[idx];
                    local.push((idx, bench_one(sweep, nodes, agents, rep)));
                    idx += workers;
                }
                local
            }));
        }
        for h in handles {
            for (idx, rec) in h.join().expect("bench worker panicked") {
                slots[idx] = Some(rec);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every job ran")).collect()
}

fn bench_one(sweep: &BenchSweep, nodes: usize, agents: usize, rep: usize) -> BenchRecord {
    let gseed = graph_seed(sweep.seed, nodes, rep);
    let params = GenParams { node_count: nodes, seed: gseed, ws_k: sweep.ws_k, ws_p: sweep.ws_p };
    let d = gen_digraph(&params).expect("benchmark parameters are sane");
    let inst = gen_instance(&d, agents, instance_seed(sweep.seed, nodes, agents, rep))
        .expect("agent counts leave two holes");
    let t0 = Instant::now();
    let outcome = solve(&inst);
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    let t1 = Instant::now();
    let _ = disc_core::disc_solver::check_feasibility(&inst);
    let check_ms = t1.elapsed().as_secs_f64() * 1e3;
    let (moves, feasible) = match outcome {
        Ok(SolveOutcome::Feasible(f, _)) => (f.len(), true),
        _ => (0, false),
    };
    BenchRecord { nodes, agents, seed: gseed, moves, ms, check_ms, feasible }
}

/// Per-cell medians over the feasible rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub nodes: usize,
    pub agents: usize,
    pub median_moves: f64,
    pub median_ms: f64,
    pub median_check_ms: f64,
    pub feasible_count: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN medians"));
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        (xs[mid - 1] + xs[mid]) / 2.0
    }
}

pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut cells: Vec<(usize, usize)> = records.iter().map(|r| (r.nodes, r.agents)).collect();
    cells.sort_unstable();
    cells.dedup();
    cells
        .into_iter()
        .map(|(nodes, agents)| {
            let rows: Vec<&BenchRecord> = records
                .iter()
                .filter(|r| r.nodes == nodes && r.agents == agents && r.feasible)
                .collect();
            SummaryRow {
                nodes,
                agents,
                median_moves: median(rows.iter().map(|r| r.moves as f64).collect()),
                median_ms: median(rows.iter().map(|r| r.ms).collect()),
                median_check_ms: median(rows.iter().map(|r| r.check_ms).collect()),
                feasible_count: rows.len(),
            }
        })
        .collect()
}

pub fn records_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from("nodes,agents,seed,moves,ms,feasible\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{:.3},{}\n",
            r.nodes, r.agents, r.seed, r.moves, r.ms, r.feasible
        ));
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("nodes,agents,median_moves,median_ms\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.3}\n",
            r.nodes, r.agents, r.median_moves, r.median_ms
        ));
    }
    out
}
