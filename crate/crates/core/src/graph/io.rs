//! Plain-text graph formats.
//!
//! Edge lists hold one edge per line as `i j` or `i j w` (0-based ids,
//! whitespace separated, optional positive weight defaulting to 1). Label
//! files hold `i k` lines, value files `i y` lines. Lines whose first
//! non-blank character is `#` are comments; blank lines are skipped. A
//! `# nodes N` comment in an edge list declares trailing isolated nodes.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{BlockAssignment, Graph, GraphBuilder};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn declared_nodes(comment: &str) -> Option<usize> {
    let rest = comment.trim_start_matches('#').trim();
    rest.strip_prefix("nodes")?.trim().parse().ok()
}

/// Yields `(line_number, fields)` for every non-comment, non-blank line.
/// `on_comment` sees each comment line.
fn records<R: BufRead>(
    reader: R,
    mut on_comment: impl FnMut(&str),
) -> impl Iterator<Item = Result<(usize, Vec<String>)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(idx, line)| {
            let lineno = idx + 1;
            match line {
                Err(e) => Some(Err(parse_err(lineno, e.to_string()))),
                Ok(text) => {
                    let t = text.trim();
                    if t.starts_with('#') {
                        on_comment(t);
                        None
                    } else if t.is_empty() {
                        None
                    } else {
                        Some(Ok((
                            lineno,
                            t.split_whitespace().map(str::to_owned).collect(),
                        )))
                    }
                }
            }
        })
}

fn parse_id(line: usize, field: &str) -> Result<usize> {
    field
        .parse::<usize>()
        .map_err(|_| parse_err(line, format!("invalid node id {field:?}")))
}

/// Reads an edge list; the node count is one more than the largest id seen.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut max_id = None;
    let mut declared = 0;
    for rec in records(reader, |c| {
        if let Some(n) = declared_nodes(c) {
            declared = declared.max(n);
        }
    }) {
        let (line, fields) = rec?;
        if fields.len() != 2 && fields.len() != 3 {
            return Err(parse_err(
                line,
                format!("expected `i j` or `i j w`, found {} fields", fields.len()),
            ));
        }
        let i = parse_id(line, &fields[0])?;
        let j = parse_id(line, &fields[1])?;
        let w = match fields.get(2) {
            None => 1.0,
            Some(f) => {
                let w: f64 = f
                    .parse()
                    .map_err(|_| parse_err(line, format!("invalid weight {f:?}")))?;
                if !(w.is_finite() && w > 0.0) {
                    return Err(parse_err(line, format!("weight must be positive, got {w}")));
                }
                w
            }
        };
        let key = (i.min(j), i.max(j));
        if let Some(first) = seen.insert(key, line) {
            return Err(parse_err(
                line,
                format!("duplicate edge {{{i}, {j}}} (first on line {first})"),
            ));
        }
        max_id = max_id.max(Some(i.max(j)));
        edges.push((i, j, w));
    }
    let n = max_id.map_or(0, |m| m + 1).max(declared);
    let mut b = GraphBuilder::with_capacity(n, edges.len());
    for (i, j, w) in edges {
        b.push_unchecked(i, j, w);
    }
    Ok(b.build_unchecked())
}

fn load_pairs<R: BufRead, T>(
    reader: R,
    node_count: usize,
    mut parse: impl FnMut(usize, &str) -> Result<T>,
) -> Result<Vec<T>> {
    let mut values: Vec<Option<T>> = (0..node_count).map(|_| None).collect();
    for rec in records(reader, |_| {}) {
        let (line, fields) = rec?;
        if fields.len() != 2 {
            return Err(parse_err(
                line,
                format!("expected `i value`, found {} fields", fields.len()),
            ));
        }
        let i = parse_id(line, &fields[0])?;
        if i >= node_count {
            return Err(parse_err(
                line,
                format!("node {i} out of range for {node_count} nodes"),
            ));
        }
        let v = parse(line, &fields[1])?;
        if values[i].replace(v).is_some() {
            return Err(parse_err(line, format!("node {i} listed twice")));
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| parse_err(0, format!("node {i} has no entry"))))
        .collect()
}

/// Reads `i k` label lines for nodes `0..node_count`; `K` is the largest label plus one.
pub fn load_labels<R: BufRead>(reader: R, node_count: usize) -> Result<BlockAssignment> {
    let labels = load_pairs(reader, node_count, |line, f| {
        f.parse::<usize>()
            .map_err(|_| parse_err(line, format!("invalid block label {f:?}")))
    })?;
    let k = labels.iter().copied().max().map_or(1, |m| m + 1);
    BlockAssignment::new(labels, k)
}

/// Reads `i y` lines with a finite real value per node.
pub fn load_values<R: BufRead>(reader: R, node_count: usize) -> Result<Vec<f64>> {
    load_pairs(reader, node_count, |line, f| {
        let v: f64 = f
            .parse()
            .map_err(|_| parse_err(line, format!("invalid value {f:?}")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("value must be finite, got {v}")));
        }
        Ok(v)
    })
}

pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# nodes {}", g.node_count())?;
    for (i, j, w) in g.edges() {
        if w == 1.0 {
            writeln!(out, "{i} {j}")?;
        } else {
            writeln!(out, "{i} {j} {w}")?;
        }
    }
    Ok(())
}

pub fn write_labels<W: Write>(labels: &BlockAssignment, mut out: W) -> std::io::Result<()> {
    for (i, k) in labels.labels().iter().enumerate() {
        writeln!(out, "{i} {k}")?;
    }
    Ok(())
}
