//! Instance files, random instance generation, a brute-force oracle, and a
//! benchmark harness around the multi-agent pathfinding solver in
//! `disc-core`.

pub mod formats;
pub mod instance_lab;
