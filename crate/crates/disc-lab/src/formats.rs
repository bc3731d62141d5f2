//! Line-oriented text formats for graphs, instances, and plans.
//!
//! Graph: `n <vertex_count>` once, then `e <u> <v>` per directed edge.
//! Instance: a graph plus `p <id> <vertex>` pebble starts, optional
//! `h <id> <vertex>` hole placements, and `t <pebble-id> <vertex>` targets.
//! Plan: `m <from> <to>` per move, conventionally closed by a
//! `# moves=<count>` comment. Blank lines and `#` comments are ignored
//! everywhere; parse errors carry 1-based line numbers.

use disc_core::disc_solver::Instance;
use disc_core::plan_engine::Config;
use disc_core::{Digraph, Move, Plan, Vertex};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> ParseError {
        ParseError { line, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Split the text into (1-based line number, keyword, fields) triples,
/// skipping blanks and comments.
fn rows(text: &str) -> impl Iterator<Item = (usize, &str, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap();
        Some((i + 1, key, parts.collect()))
    })
}

fn number(line: usize, field: &str, what: &str) -> Result<usize, ParseError> {
    field
        .parse::<usize>()
        .map_err(|_| ParseError::new(line, format!("{what} is not a number: {field:?}")))
}

fn two(line: usize, fields: &[&str], what: &str) -> Result<(usize, usize), ParseError> {
    if fields.len() != 2 {
        return Err(ParseError::new(line, format!("{what} takes 2 fields, got {}", fields.len())));
    }
    Ok((number(line, fields[0], what)?, number(line, fields[1], what)?))
}

/// Parse a graph file. Exactly one `n` line must come before any `e` line.
pub fn parse_graph(text: &str) -> Result<Digraph, ParseError> {
    let mut n: Option<usize> = None;
    let mut arcs: Vec<(Vertex, Vertex)> = Vec::new();
    for (line, key, fields) in rows(text) {
        match key {
            "n" => {
                if n.is_some() {
                    return Err(ParseError::new(line, "second n line"));
                }
                if fields.len() != 1 {
                    return Err(ParseError::new(line, "n takes 1 field"));
                }
                n = Some(number(line, fields[0], "vertex count")?);
            }
            "e" => {
                let (u, v) = two(line, &fields, "edge")?;
                let n = n.ok_or_else(|| ParseError::new(line, "edge before the n line"))?;
                if u >= n || v >= n {
                    return Err(ParseError::new(line, format!("edge ({u}, {v}) out of range")));
                }
                arcs.push((u, v));
            }
            other => return Err(ParseError::new(line, format!("unknown keyword {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| ParseError::new(1, "missing n line"))?;
    Ok(Digraph::new(n, &arcs))
}

/// Parse an instance file: graph lines plus `p`/`h`/`t` placements.
///
/// Pebble and hole ids must each start at 0 and be contiguous. Vertices
/// not claimed by any `p` or `h` line become holes with the next free ids,
/// in vertex order, so listing holes is optional. The instance is
/// validated structurally before it is returned (strong connectivity
/// included).
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut n: Option<usize> = None;
    let mut arcs: Vec<(Vertex, Vertex)> = Vec::new();
    let mut pebbles: BTreeMap<usize, (usize, Vertex)> = BTreeMap::new();
    let mut holes: BTreeMap<usize, (usize, Vertex)> = BTreeMap::new();
    let mut targets_raw: BTreeMap<usize, (usize, Vertex)> = BTreeMap::new();
    for (line, key, fields) in rows(text) {
        match key {
            "n" => {
                if n.is_some() {
                    return Err(ParseError::new(line, "second n line"));
                }
                if fields.len() != 1 {
                    return Err(ParseError::new(line, "n takes 1 field"));
                }
                n = Some(number(line, fields[0], "vertex count")?);
            }
            "e" => {
                let (u, v) = two(line, &fields, "edge")?;
                let n = n.ok_or_else(|| ParseError::new(line, "edge before the n line"))?;
                if u >= n || v >= n {
                    return Err(ParseError::new(line, format!("edge ({u}, {v}) out of range")));
                }
                arcs.push((u, v));
            }
            "p" | "h" | "t" => {
                let what = match key {
                    "p" => "pebble",
                    "h" => "hole",
                    _ => "target",
                };
                let (id, v) = two(line, &fields, what)?;
                let book = match key {
                    "p" => &mut pebbles,
                    "h" => &mut holes,
                    _ => &mut targets_raw,
                };
                if book.insert(id, (line, v)).is_some() {
                    return Err(ParseError::new(line, format!("{what} {id} listed twice")));
                }
            }
            other => return Err(ParseError::new(line, format!("unknown keyword {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| ParseError::new(1, "missing n line"))?;
    let digraph = Digraph::new(n, &arcs);

    let mut to_vertex: Vec<Option<Vertex>> = vec![None; pebbles.len() + holes.len()];
    let mut taken: Vec<Option<&str>> = vec![None; n];
    let mut claim = |agent: usize,
                     line: usize,
                     v: Vertex,
                     what: &'static str,
                     to_vertex: &mut Vec<Option<Vertex>>,
                     taken: &mut Vec<Option<&'static str>>|
     -> Result<(), ParseError> {
        if v >= n {
            return Err(ParseError::new(line, format!("vertex {v} out of range")));
        }
        if let Some(prev) = taken[v] {
            return Err(ParseError::new(line, format!("vertex {v} already holds a {prev}")));
        }
        taken[v] = Some(what);
        to_vertex[agent] = Some(v);
        Ok(())
    };
    for (want, (&id, &(line, v))) in pebbles.iter().enumerate() {
        if id != want {
            return Err(ParseError::new(line, format!("pebble ids must be 0.., missing {want}")));
        }
        claim(id, line, v, "pebble", &mut to_vertex, &mut taken)?;
    }
    let m = pebbles.len();
    for (want, (&id, &(line, v))) in holes.iter().enumerate() {
        if id != want {
            return Err(ParseError::new(line, format!("hole ids must be 0.., missing {want}")));
        }
        claim(m + id, line, v, "hole", &mut to_vertex, &mut taken)?;
    }
    // Unclaimed vertices become the remaining holes, in vertex order.
    let mut flat: Vec<Vertex> = to_vertex.iter().map(|s| s.unwrap_or(usize::MAX)).collect();
    for v in 0..n {
        if taken[v].is_none() {
            flat.push(v);
        }
    }
    if flat.len() != n {
        return Err(ParseError::new(
            1,
            format!("{} placements for {n} vertices", flat.len()),
        ));
    }
    let start = Config::new(m, flat);

    let mut targets: BTreeMap<usize, Vertex> = BTreeMap::new();
    for (&id, &(line, v)) in &targets_raw {
        if id >= m {
            return Err(ParseError::new(line, format!("target for unknown pebble {id}")));
        }
        if v >= n {
            return Err(ParseError::new(line, format!("target vertex {v} out of range")));
        }
        targets.insert(id, v);
    }
    for p in 0..m {
        if !targets.contains_key(&p) {
            return Err(ParseError::new(1, format!("pebble {p} has no target line")));
        }
    }
    Instance::new(digraph, start, targets).map_err(|e| ParseError::new(1, format!("{e}")))
}

/// Render an instance in the format [`parse_instance`] reads.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let d = &inst.digraph;
    out.push_str(&format!("n {}\n", d.vertex_count()));
    for (u, v) in d.arcs() {
        out.push_str(&format!("e {u} {v}\n"));
    }
    let a = &inst.start;
    for p in 0..a.pebble_count() {
        out.push_str(&format!("p {p} {}\n", a.pebble_position(p)));
    }
    for (i, v) in a.hole_set().into_iter().enumerate() {
        out.push_str(&format!("h {i} {v}\n"));
    }
    for (p, v) in &inst.targets {
        out.push_str(&format!("t {p} {v}\n"));
    }
    out
}

/// Parse a plan file: `m <from> <to>` lines.
pub fn parse_plan(text: &str) -> Result<Plan, ParseError> {
    let mut plan = Plan::new();
    for (line, key, fields) in rows(text) {
        if key != "m" {
            return Err(ParseError::new(line, format!("unknown keyword {key:?}")));
        }
        let (u, v) = two(line, &fields, "move")?;
        plan.push(Move::new(u, v));
    }
    Ok(plan)
}

/// Render a plan, closing with the `# moves=<n>` stats comment.
pub fn serialize_plan(plan: &[Move]) -> String {
    let mut out = String::new();
    for m in plan {
        out.push_str(&format!("m {} {}\n", m.from, m.to));
    }
    out.push_str(&format!("# moves={}\n", plan.len()));
    out
}
