//! Edge-list text format and the graph spec grammar.
//!
//! Edge lists: first non-comment line `N M`, then `M` lines `u v` with 0-based
//! ids. Lines starting with `#` are comments.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::{generate, Family, Graph};
use crate::{Error, Result};

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("missing `N M` header".into()))?;
    let header = parse_pair(header, 1)?;
    let (n, m) = header;
    let mut edges = Vec::with_capacity(m);
    for (lineno, line) in lines {
        edges.push(parse_pair(line, lineno + 1)?);
    }
    if edges.len() != m {
        return Err(Error::Parse(format!("header declares {m} edges, found {}", edges.len())));
    }
    Graph::from_edges(n, &edges)
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(|t| {
        t.parse::<usize>().map_err(|e| Error::Parse(format!("line {lineno}: `{t}`: {e}")))
    });
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a?, b?)),
        _ => Err(Error::Parse(format!("line {lineno}: expected two integers"))),
    }
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.num_vertices(), g.num_edges());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

/// `cycle:N`, `path:N`, `torus2d:AxB`, `complete:N`, `regular:N:d` or
/// `file:PATH`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    Family(Family),
    File(PathBuf),
}

impl GraphSpec {
    pub fn build(&self, seed: Option<u64>) -> Result<Graph> {
        match self {
            GraphSpec::Family(f) => generate(*f, seed),
            GraphSpec::File(path) => parse_edge_list(&std::fs::read_to_string(path)?),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid graph spec `{s}`"));
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let family = match kind {
            "cycle" => Family::Cycle(num(rest)?),
            "path" => Family::Path(num(rest)?),
            "complete" => Family::Complete(num(rest)?),
            "torus2d" => {
                let (a, b) = rest.split_once('x').ok_or_else(bad)?;
                Family::Torus2d(num(a)?, num(b)?)
            }
            "regular" => {
                let (n, d) = rest.split_once(':').ok_or_else(bad)?;
                Family::RandomRegular { n: num(n)?, d: num(d)? }
            }
            "file" if !rest.is_empty() => return Ok(GraphSpec::File(PathBuf::from(rest))),
            _ => return Err(bad()),
        };
        Ok(GraphSpec::Family(family))
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Family(Family::Cycle(n)) => write!(f, "cycle:{n}"),
            GraphSpec::Family(Family::Path(n)) => write!(f, "path:{n}"),
            GraphSpec::Family(Family::Complete(n)) => write!(f, "complete:{n}"),
            GraphSpec::Family(Family::Torus2d(a, b)) => write!(f, "torus2d:{a}x{b}"),
            GraphSpec::Family(Family::RandomRegular { n, d }) => write!(f, "regular:{n}:{d}"),
            GraphSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_with_comments() {
        let g = parse_edge_list("# triangle\n3 3\n0 1\n1 2\n# closing edge\n2 0\n").unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(write_edge_list(&g), "3 3\n0 1\n0 2\n1 2\n");
        assert_eq!(parse_edge_list(&write_edge_list(&g)).unwrap(), g);
    }

    #[test]
    fn edge_list_errors() {
        assert!(parse_edge_list("").is_err());
        assert!(parse_edge_list("3 2\n0 1\n").is_err());
        assert!(parse_edge_list("2 1\n0 x\n").is_err());
        assert!(matches!(parse_edge_list("4 2\n0 1\n2 3\n"), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn spec_grammar() {
        for s in ["cycle:6", "path:4", "torus2d:3x4", "complete:5", "regular:10:3", "file:/tmp/g.txt"] {
            let spec: GraphSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("cycle".parse::<GraphSpec>().is_err());
        assert!("torus2d:3".parse::<GraphSpec>().is_err());
        assert!("hypercube:3".parse::<GraphSpec>().is_err());
        assert_eq!("torus2d:3x3".parse::<GraphSpec>().unwrap().build(None).unwrap().num_vertices(), 9);
    }
}
