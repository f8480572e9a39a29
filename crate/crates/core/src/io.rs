//! Text formats for graphs, QUBO matrices, and constraints.
//!
//! All three are line based. `#` starts a comment that runs to the end of
//! the line, and blank lines are ignored. Graph and QUBO files open with the
//! variable count on its own line.
//!
//! ```text
//! # star with three leaves
//! 4
//! 0 1 1.0
//! 0 2 1.0
//! 0 3 1.0
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::problem::{MaxCutGraph, QuboProblem};

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?;
    tok.parse().map_err(|_| Error::Parse { line, msg: format!("invalid {what} {tok:?}") })
}

fn no_trailing<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match toks.next() {
        Some(t) => Err(Error::Parse { line, msg: format!("unexpected trailing token {t:?}") }),
        None => Ok(()),
    }
}

/// Header count followed by `i j value` triples.
fn parse_triples(text: &str) -> Result<(usize, Vec<(usize, usize, f64)>)> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input, expected the variable count".into() })?;
    let mut toks = header.split_whitespace();
    let n: usize = field(toks.next(), hl, "variable count")?;
    no_trailing(toks, hl)?;
    let mut triples = Vec::new();
    for (ln, l) in lines {
        let mut toks = l.split_whitespace();
        let i: usize = field(toks.next(), ln, "first index")?;
        let j: usize = field(toks.next(), ln, "second index")?;
        let v: f64 = field(toks.next(), ln, "value")?;
        no_trailing(toks, ln)?;
        if i >= n || j >= n {
            return Err(Error::Parse { line: ln, msg: format!("index out of range for {n} variables") });
        }
        if !v.is_finite() {
            return Err(Error::Parse { line: ln, msg: format!("non-finite value {v}") });
        }
        triples.push((i, j, v));
    }
    Ok((n, triples))
}

pub fn parse_graph(text: &str) -> Result<MaxCutGraph> {
    let (n, edges) = parse_triples(text)?;
    MaxCutGraph::new(n, edges)
}

pub fn parse_qubo(text: &str) -> Result<QuboProblem> {
    let (n, entries) = parse_triples(text)?;
    QuboProblem::from_entries(n, entries)
}

/// One `i j` pair per line.
pub fn parse_constraints(text: &str) -> Result<Vec<Constraint>> {
    content_lines(text)
        .map(|(ln, l)| {
            let mut toks = l.split_whitespace();
            let i: usize = field(toks.next(), ln, "first index")?;
            let j: usize = field(toks.next(), ln, "second index")?;
            no_trailing(toks, ln)?;
            Constraint::new(i, j).map_err(|e| Error::Parse { line: ln, msg: e.to_string() })
        })
        .collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))
}

pub fn read_graph(path: &Path) -> Result<MaxCutGraph> {
    parse_graph(&read(path)?)
}

pub fn read_qubo(path: &Path) -> Result<QuboProblem> {
    parse_qubo(&read(path)?)
}

pub fn read_constraints(path: &Path) -> Result<Vec<Constraint>> {
    parse_constraints(&read(path)?)
}

pub fn write_graph(g: &MaxCutGraph) -> String {
    let mut out = format!("{}\n", g.n_nodes());
    for &(i, j, w) in g.edges() {
        let _ = writeln!(out, "{i} {j} {w}");
    }
    out
}

pub fn write_qubo(q: &QuboProblem) -> String {
    let mut out = format!("{}\n", q.n());
    for (i, j, v) in q.entries() {
        let _ = writeln!(out, "{i} {j} {v}");
    }
    out
}

pub fn write_constraints(cs: &[Constraint]) -> String {
    cs.iter().map(|c| format!("{} {}\n", c.i, c.j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_with_comments() {
        let g = parse_graph("# header\n3  # nodes\n\n0 1 1.5\n1 2 2 # trailing\n").unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.edges(), &[(0, 1, 1.5), (1, 2, 2.0)]);
    }

    #[test]
    fn malformed_line_reports_number() {
        match parse_graph("3\n0 1 1\n0 x 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_graph("3\n0 1\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("value"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_graph("3\n0 5 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_graph(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_graph("3\n0 1 1 7\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn qubo_roundtrip() {
        let q = parse_qubo("3\n0 0 -1\n0 2 2.5\n1 1 0.25\n").unwrap();
        assert_eq!(q.get(0, 2), 2.5);
        assert_eq!(parse_qubo(&write_qubo(&q)).unwrap(), q);
    }

    #[test]
    fn graph_roundtrip() {
        let g = MaxCutGraph::new(4, vec![(0, 1, 0.5), (2, 3, 1.25)]).unwrap();
        assert_eq!(parse_graph(&write_graph(&g)).unwrap(), g);
    }

    #[test]
    fn constraints_parse() {
        let cs = parse_constraints("# pairs\n0 2\n\n3 4 # second\n").unwrap();
        assert_eq!(cs, vec![Constraint { i: 0, j: 2 }, Constraint { i: 3, j: 4 }]);
        assert_eq!(parse_constraints(&write_constraints(&cs)).unwrap(), cs);
        assert!(matches!(parse_constraints("1 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_constraints("0\n"), Err(Error::Parse { line: 1, .. })));
    }
}
