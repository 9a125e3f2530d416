//! Text formats for lattices and graphs. Lines starting with `#` and blank
//! lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::{Graph, IsingLattice};
use crate::error::{Error, Result};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split_whitespace().collect()))
}

/// A parsed lattice together with whether `0/1` values were mapped to `∓1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedLattice {
    pub lattice: IsingLattice,
    pub mapped_binary: bool,
}

/// Rows of whitespace-separated `±1` values, or `0/1` values mapped to
/// `−1/+1` (reported through `mapped_binary`).
pub fn parse_lattice(text: &str) -> Result<ParsedLattice> {
    let mut rows: Vec<Vec<i64>> = Vec::new();
    for (line, tokens) in data_lines(text) {
        let row = tokens
            .iter()
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|_| Error::Parse(format!("line {line}: '{t}' is not an integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {line}: expected {} values, found {}",
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("lattice file has no data rows".into()));
    }
    let values: Vec<i64> = rows.iter().flatten().copied().collect();
    let binary = values.iter().all(|&v| v == 0 || v == 1) && values.contains(&0);
    let spins = values
        .iter()
        .map(|&v| match (v, binary) {
            (0, true) => Ok(-1),
            (1, _) => Ok(1),
            (-1, false) => Ok(-1),
            _ => Err(Error::Parse(format!("spin value {v} is not +1/-1 or 0/1"))),
        })
        .collect::<Result<Vec<i8>>>()?;
    Ok(ParsedLattice {
        lattice: IsingLattice::new(rows.len(), rows[0].len(), spins)?,
        mapped_binary: binary,
    })
}

pub fn format_lattice(lattice: &IsingLattice) -> String {
    let mut out = String::new();
    for r in 0..lattice.rows() {
        let row: Vec<String> = (0..lattice.cols())
            .map(|c| lattice.get(r, c).to_string())
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Square `0/1` adjacency matrix, or an edge list of `i j` pairs
/// (0-indexed). An edge list needs `nodes` unless the largest index
/// should define the node count.
pub fn parse_graph(text: &str, nodes: Option<usize>) -> Result<Graph> {
    let lines: Vec<(usize, Vec<&str>)> = data_lines(text).collect();
    if lines.is_empty() {
        return Err(Error::Parse("graph file has no data rows".into()));
    }
    let numbers = |line: usize, toks: &[&str]| -> Result<Vec<usize>> {
        toks.iter()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {line}: '{t}' is not a node index or 0/1")))
            })
            .collect()
    };
    let square = lines.iter().all(|(_, t)| t.len() == lines.len());
    if square {
        let mut adj = Vec::new();
        for (line, toks) in &lines {
            adj.extend(numbers(*line, toks)?);
        }
        let n = lines.len();
        let matrix = adj
            .iter()
            .all(|&v| v <= 1)
            .then(|| Graph::from_adjacency(n, adj.iter().map(|&v| v as u8).collect()));
        match matrix {
            Some(Ok(g)) => {
                if let Some(expected) = nodes.filter(|&e| e != n) {
                    return Err(Error::Parse(format!(
                        "adjacency matrix has {n} nodes, expected {expected}"
                    )));
                }
                return Ok(g);
            }
            // Two lines of two indices may also be an edge list.
            Some(Err(e)) if n != 2 => return Err(Error::Parse(e.to_string())),
            _ => {}
        }
    }
    let mut edges = Vec::with_capacity(lines.len());
    for (line, toks) in &lines {
        if toks.len() != 2 {
            return Err(Error::Parse(format!(
                "line {line}: edge lists need two indices per line"
            )));
        }
        let v = numbers(*line, toks)?;
        edges.push((v[0], v[1]));
    }
    let inferred = edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
    let n = nodes.unwrap_or(inferred);
    Graph::from_edges(n, &edges).map_err(|e| Error::Parse(e.to_string()))
}

pub fn format_adjacency(graph: &Graph) -> String {
    let n = graph.nodes();
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<&str> = (0..n)
            .map(|j| if graph.has_edge(i, j) { "1" } else { "0" })
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_lattice(path: &Path) -> Result<ParsedLattice> {
    parse_lattice(&std::fs::read_to_string(path)?)
}

pub fn read_graph(path: &Path, nodes: Option<usize>) -> Result<Graph> {
    parse_graph(&std::fs::read_to_string(path)?, nodes)
}
