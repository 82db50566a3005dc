//! Text formats for graphs, qubit sets and decoder traces.
//!
//! Graph files start with `n m deltaV deltaC` followed by one line per left
//! vertex listing its neighbors in ascending order. Qubit files hold one
//! qubit per line, `VV a b` or `CC a b`; blank lines and `#` comments are
//! skipped. Traces are one `key=value` record per line.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{BipartiteGraph, GraphError};
use crate::hgp::{Generator, HgpCode, Qubit, QubitSet};
use crate::ssfind::TraceRecord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("unexpected end of input: {0}")]
    Eof(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn line_err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Line { line, msg: msg.into() }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize, ParseError> {
    tok.parse().map_err(|_| line_err(line, format!("bad {what} `{tok}`")))
}

pub fn write_graph(g: &BipartiteGraph) -> String {
    let mut out = format!("{} {} {} {}\n", g.n(), g.m(), g.delta_v(), g.delta_c());
    for v in 0..g.n() {
        let nbrs: Vec<String> = g.nbrs_v(v).iter().map(usize::to_string).collect();
        out.push_str(&nbrs.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_graph(text: &str) -> Result<BipartiteGraph, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hl, header) = lines.next().ok_or_else(|| ParseError::Eof("missing header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(line_err(hl, "header must be `n m deltaV deltaC`"));
    }
    let n = parse_usize(fields[0], hl, "n")?;
    let m = parse_usize(fields[1], hl, "m")?;
    let dv = parse_usize(fields[2], hl, "deltaV")?;
    let dc = parse_usize(fields[3], hl, "deltaC")?;

    let mut adj = Vec::with_capacity(n);
    for v in 0..n {
        let (ln, l) = lines.next().ok_or_else(|| ParseError::Eof(format!("expected {n} adjacency lines, found {v}")))?;
        let nbrs = l
            .split_whitespace()
            .map(|t| parse_usize(t, ln, "neighbor"))
            .collect::<Result<Vec<_>, _>>()?;
        if nbrs.len() != dv {
            return Err(line_err(ln, format!("vertex {v} lists {} neighbors, header says {dv}", nbrs.len())));
        }
        if nbrs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(line_err(ln, "neighbors must be strictly ascending"));
        }
        if let Some(&c) = nbrs.iter().find(|&&c| c >= m) {
            return Err(line_err(ln, format!("neighbor {c} out of range for m={m}")));
        }
        adj.push(nbrs);
    }
    if let Some((ln, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(line_err(ln, format!("trailing content `{}`", l.trim())));
    }
    let g = BipartiteGraph::from_adjacency(m, adj)?;
    if g.delta_c() != dc && n > 0 {
        return Err(line_err(hl, format!("header says deltaC={dc}, adjacency gives {}", g.delta_c())));
    }
    Ok(g)
}

pub fn write_qubits(s: &QubitSet) -> String {
    s.iter().fold(String::new(), |mut out, q| {
        let _ = writeln!(out, "{q}");
        out
    })
}

impl FromStr for Qubit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        let [kind, a, b] = toks[..] else {
            return Err(format!("expected `VV a b` or `CC a b`, got `{}`", s.trim()));
        };
        let a: usize = a.parse().map_err(|_| format!("bad index `{a}`"))?;
        let b: usize = b.parse().map_err(|_| format!("bad index `{b}`"))?;
        match kind {
            "VV" => Ok(Qubit::VV(a, b)),
            "CC" => Ok(Qubit::CC(a, b)),
            other => Err(format!("unknown qubit kind `{other}`")),
        }
    }
}

/// Parses a qubit file. With a code, indices are range-checked too.
/// Repeated lines toggle, so a qubit listed twice cancels.
pub fn parse_qubits(text: &str, code: Option<&HgpCode>) -> Result<QubitSet, ParseError> {
    let mut set = QubitSet::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let q: Qubit = l.parse().map_err(|e: String| line_err(i + 1, e))?;
        if let Some(c) = code {
            if !c.is_valid_qubit(q) {
                return Err(line_err(i + 1, format!("qubit `{q}` out of range")));
            }
        }
        set.toggle(q);
    }
    Ok(set)
}

pub fn format_trace_record(r: &TraceRecord) -> String {
    format!(
        "iteration={} generator={},{} mask={:#x} score_num={} score_den={} envelope={} suspicious={} envelope_nbhd={} envelope_norm={}",
        r.iteration,
        r.generator.0,
        r.generator.1,
        r.mask,
        r.score_num,
        r.score_den,
        r.envelope_size,
        r.suspicious_size,
        r.envelope_nbhd_size,
        r.envelope_scaled_norm
    )
}

pub fn write_trace(trace: &[TraceRecord]) -> String {
    trace.iter().map(|r| format_trace_record(r) + "\n").collect()
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, ParseError> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let ln = i + 1;
        if l.trim().is_empty() {
            continue;
        }
        let mut rec = TraceRecord {
            iteration: 0,
            generator: Generator(0, 0),
            mask: 0,
            score_num: 0,
            score_den: 0,
            envelope_size: 0,
            suspicious_size: 0,
            envelope_nbhd_size: 0,
            envelope_scaled_norm: 0,
        };
        let mut seen = 0;
        for field in l.split_whitespace() {
            let (k, v) = field.split_once('=').ok_or_else(|| line_err(ln, format!("field `{field}` is not key=value")))?;
            let num = |v: &str| parse_usize(v, ln, k);
            match k {
                "iteration" => rec.iteration = num(v)?,
                "generator" => {
                    let (c, g) = v.split_once(',').ok_or_else(|| line_err(ln, "generator must be `c,v`"))?;
                    rec.generator = Generator(num(c)?, num(g)?);
                }
                "mask" => {
                    let hex = v.strip_prefix("0x").ok_or_else(|| line_err(ln, "mask must be hex"))?;
                    rec.mask = u32::from_str_radix(hex, 16).map_err(|_| line_err(ln, format!("bad mask `{v}`")))?;
                }
                "score_num" => rec.score_num = num(v)?,
                "score_den" => rec.score_den = num(v)?,
                "envelope" => rec.envelope_size = num(v)?,
                "suspicious" => rec.suspicious_size = num(v)?,
                "envelope_nbhd" => rec.envelope_nbhd_size = num(v)?,
                "envelope_norm" => rec.envelope_scaled_norm = num(v)?,
                _ => return Err(line_err(ln, format!("unknown field `{k}`"))),
            }
            seen += 1;
        }
        if seen != 9 {
            return Err(line_err(ln, format!("expected 9 fields, found {seen}")));
        }
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_biregular;
    use proptest::prelude::*;

    #[test]
    fn graph_round_trip_is_exact() {
        for seed in 0..10 {
            let g = gen_biregular(24, 3, 6, seed).unwrap();
            let text = write_graph(&g);
            let back = parse_graph(&text).unwrap();
            assert_eq!(back, g);
            assert_eq!(write_graph(&back), text);
        }
    }

    #[test]
    fn graph_parse_errors_name_the_line() {
        let good = write_graph(&gen_biregular(2, 1, 2, 0).unwrap());
        assert_eq!(good, "2 1 1 2\n0\n0\n");
        let err = parse_graph("2 1 1 2\n0\nx\n").unwrap_err();
        assert!(err.to_string().starts_with("line 3"), "{err}");
        assert!(matches!(parse_graph("2 1 1\n"), Err(ParseError::Line { line: 1, .. })));
        assert!(matches!(parse_graph("2 1 1 2\n0\n"), Err(ParseError::Eof(_))));
        assert!(matches!(parse_graph("2 3 2 2\n1 0\n0 1\n"), Err(ParseError::Line { line: 2, .. })));
        assert!(matches!(parse_graph("2 1 1 2\n0\n0\n5\n"), Err(ParseError::Line { line: 4, .. })));
        assert!(matches!(parse_graph("2 1 1 2\n0\n1\n"), Err(ParseError::Line { line: 3, .. })));
    }

    #[test]
    fn qubit_files() {
        let code = HgpCode::new(gen_biregular(2, 1, 2, 0).unwrap());
        assert!(parse_qubits("", Some(&code)).unwrap().is_empty());
        let s = parse_qubits("# error\nVV 0 0\n\nCC 0 0\n", Some(&code)).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(write_qubits(&s), "VV 0 0\nCC 0 0\n");
        assert_eq!(parse_qubits(&write_qubits(&s), None).unwrap(), s);
        let err = parse_qubits("VV 0 0\nXX 1 1\n", None).unwrap_err();
        assert!(matches!(err, ParseError::Line { line: 2, .. }));
        assert!(matches!(parse_qubits("VV 0\n", None), Err(ParseError::Line { line: 1, .. })));
        assert!(matches!(parse_qubits("CC 3 0\n", Some(&code)), Err(ParseError::Line { line: 1, .. })));
    }

    #[test]
    fn trace_records_round_trip() {
        let r = TraceRecord {
            iteration: 3,
            generator: Generator(4, 17),
            mask: 0x23,
            score_num: 2,
            score_den: 9,
            envelope_size: 5,
            suspicious_size: 12,
            envelope_nbhd_size: 10,
            envelope_scaled_norm: 21,
        };
        let text = write_trace(&[r.clone(), r.clone()]);
        assert_eq!(
            text.lines().next().unwrap(),
            "iteration=3 generator=4,17 mask=0x23 score_num=2 score_den=9 envelope=5 suspicious=12 envelope_nbhd=10 envelope_norm=21"
        );
        assert_eq!(parse_trace(&text).unwrap(), vec![r.clone(), r]);
        assert!(parse_trace("iteration=1\n").is_err());
    }

    proptest! {
        #[test]
        fn qubit_sets_round_trip(vv in proptest::collection::btree_set((0usize..50, 0usize..50), 0..20),
                                 cc in proptest::collection::btree_set((0usize..50, 0usize..50), 0..20)) {
            let s: QubitSet = vv.iter().map(|&(a, b)| Qubit::VV(a, b))
                .chain(cc.iter().map(|&(a, b)| Qubit::CC(a, b)))
                .collect();
            prop_assert_eq!(parse_qubits(&write_qubits(&s), None).unwrap(), s);
        }
    }
}
