//! PACE 2017 `.gr` instance format.

use std::fmt::Write as _;
use std::io::BufRead;

use super::Graph;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `p tw <n> <m>` header")]
    MissingHeader,
    #[error("read error: {0}")]
    Io(String),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Parses a `.gr` instance. Nodes are `1..=n`; duplicate edges and
/// self-loops are dropped silently. The edge count in the header is not
/// enforced.
pub fn parse_gr(input: impl BufRead) -> Result<Graph, ParseError> {
    let mut graph: Option<Graph> = None;
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| ParseError::Io(e.to_string()))?;
        let mut tok = line.split_whitespace();
        let Some(first) = tok.next() else { continue };
        match first {
            "c" => continue,
            "p" => {
                if graph.is_some() {
                    return Err(syntax(lineno, "duplicate header"));
                }
                if tok.next() != Some("tw") {
                    return Err(syntax(lineno, "expected `p tw <n> <m>`"));
                }
                let n: usize = parse_num(tok.next(), lineno, "node count")?;
                let _m: usize = parse_num(tok.next(), lineno, "edge count")?;
                if tok.next().is_some() {
                    return Err(syntax(lineno, "trailing tokens in header"));
                }
                graph = Some(Graph::with_nodes(n));
            }
            _ => {
                let g = graph.as_mut().ok_or(ParseError::MissingHeader)?;
                let n = g.node_count();
                let u: usize = parse_num(Some(first), lineno, "edge endpoint")?;
                let v: usize = parse_num(tok.next(), lineno, "edge endpoint")?;
                if tok.next().is_some() {
                    return Err(syntax(lineno, "trailing tokens in edge line"));
                }
                for x in [u, v] {
                    if x == 0 || x > n {
                        return Err(syntax(lineno, format!("endpoint {x} out of range 1..={n}")));
                    }
                }
                if u != v {
                    g.add_edge(u, v).expect("range checked");
                }
            }
        }
    }
    graph.ok_or(ParseError::MissingHeader)
}

fn parse_num(tok: Option<&str>, line: usize, what: &str) -> Result<usize, ParseError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| syntax(line, format!("invalid {what} `{tok}`")))
}

/// Serialises `g` as `.gr`. Node ids are written as-is, so the graph should
/// use labels `1..=n` for the output to be a valid instance; see
/// [`Graph::index_map`] for compacting arbitrary labels.
pub fn write_gr(g: &Graph) -> String {
    let mut out = String::new();
    let n = g.nodes().max().unwrap_or(0).max(g.node_count());
    writeln!(out, "p tw {} {}", n, g.edge_count()).unwrap();
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}
