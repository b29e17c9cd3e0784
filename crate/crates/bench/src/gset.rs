//! Gset edge-list format: a header line `n m`, then `m` lines `i j w` with
//! 1-based vertex indices.

use std::collections::HashSet;
use std::fmt::Write;

use rdrsom::problems::{MaxcutInstance, ProblemError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GsetError {
    #[error("empty input")]
    Empty,
    #[error("line {line}: malformed entry {content:?}")]
    Malformed { line: usize, content: String },
    #[error("header declares {declared} edges but {found} were given")]
    EdgeCount { declared: usize, found: usize },
    #[error("line {line}: duplicate edge ({i}, {j})")]
    Duplicate { line: usize, i: usize, j: usize },
    #[error("line {line}: vertex index out of range 1..={n} in edge ({i}, {j})")]
    OutOfRange { line: usize, i: usize, j: usize, n: usize },
    #[error("line {line}: self-loop at vertex {i}")]
    SelfLoop { line: usize, i: usize },
}

/// Weighted undirected graph with 1-based edges stored as `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GsetGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

fn malformed(line: usize, content: &str) -> GsetError {
    GsetError::Malformed {
        line,
        content: content.trim().to_string(),
    }
}

pub fn parse_gset(text: &str) -> Result<GsetGraph, GsetError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(GsetError::Empty)?;
    let mut tok = header.split_whitespace();
    let (n, m) = match (tok.next(), tok.next(), tok.next()) {
        (Some(a), Some(b), None) => match (a.parse::<usize>(), b.parse::<usize>()) {
            (Ok(n), Ok(m)) => (n, m),
            _ => return Err(malformed(hline, header)),
        },
        _ => return Err(malformed(hline, header)),
    };

    let mut edges = Vec::with_capacity(m);
    let mut seen = HashSet::with_capacity(m);
    for (line, content) in lines {
        let tok: Vec<&str> = content.split_whitespace().collect();
        if tok.len() != 3 {
            return Err(malformed(line, content));
        }
        let (Ok(a), Ok(b), Ok(w)) = (tok[0].parse::<usize>(), tok[1].parse::<usize>(), tok[2].parse::<f64>()) else {
            return Err(malformed(line, content));
        };
        if !w.is_finite() {
            return Err(malformed(line, content));
        }
        if a == 0 || b == 0 || a > n || b > n {
            return Err(GsetError::OutOfRange { line, i: a, j: b, n });
        }
        if a == b {
            return Err(GsetError::SelfLoop { line, i: a });
        }
        let (i, j) = (a.min(b), a.max(b));
        if !seen.insert((i, j)) {
            return Err(GsetError::Duplicate { line, i, j });
        }
        edges.push((i, j, w));
    }
    if edges.len() != m {
        return Err(GsetError::EdgeCount {
            declared: m,
            found: edges.len(),
        });
    }
    Ok(GsetGraph { n, edges })
}

/// Writes the graph back in Gset format. Integral weights print without a
/// fractional part.
pub fn emit_gset(graph: &GsetGraph) -> String {
    let mut out = format!("{} {}\n", graph.n, graph.edges.len());
    for &(i, j, w) in &graph.edges {
        writeln!(out, "{i} {j} {w}").unwrap();
    }
    out
}

impl GsetGraph {
    /// Zero-based edge list for the Laplacian builder.
    pub fn zero_based_edges(&self) -> Vec<(usize, usize, f64)> {
        self.edges.iter().map(|&(i, j, w)| (i - 1, j - 1, w)).collect()
    }

    pub fn to_instance(&self, r: Option<usize>) -> Result<MaxcutInstance, ProblemError> {
        MaxcutInstance::from_edges(self.n, &self.zero_based_edges(), r)
    }
}
