//! Pajek network (`.net`) and partition (`.clu`) files.
//!
//! ```text
//! *Vertices 2
//! 1 "A"
//! 2 "B"
//! *Edges
//! 1 2 3
//! ```
//!
//! Vertices are numbered from 1. Edges are written once each, `i < j`, in
//! ascending order; the reader accepts any order and a missing weight (1).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::community::Partition;
use crate::error::{Error, Result};
use crate::graph::CoauthNetwork;

pub fn write_net<W: Write>(net: &CoauthNetwork, mut out: W) -> Result<()> {
    writeln!(out, "*Vertices {}", net.node_count())?;
    for (i, node) in net.nodes().iter().enumerate() {
        if node.key.contains('"') || node.key.contains('\n') {
            return Err(Error::InvalidArgument(format!(
                "label `{}` cannot be written to a .net file",
                node.key
            )));
        }
        writeln!(out, "{} \"{}\"", i + 1, node.key)?;
    }
    writeln!(out, "*Edges")?;
    for (i, j, w) in net.edges() {
        writeln!(out, "{} {} {}", i + 1, j + 1, w)?;
    }
    Ok(())
}

pub fn write_net_file(net: &CoauthNetwork, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_net(net, &mut out)?;
    out.flush()?;
    Ok(())
}

fn header_count(line: &str, header: &str, line_no: usize) -> Result<Option<usize>> {
    let mut parts = line.split_whitespace();
    match parts.next() {
        Some(h) if h.eq_ignore_ascii_case(header) => {}
        _ => return Ok(None),
    }
    let n = parts
        .next()
        .ok_or_else(|| Error::parse(line_no, format!("{header} needs a count")))?
        .parse::<usize>()
        .map_err(|_| Error::parse(line_no, format!("bad {header} count")))?;
    Ok(Some(n))
}

fn parse_index(tok: Option<&str>, n: usize, line_no: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::parse(line_no, "missing vertex index"))?;
    let i: usize = tok
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad vertex index `{tok}`")))?;
    if i == 0 || i > n {
        return Err(Error::parse(
            line_no,
            format!("vertex index {i} out of range 1..={n}"),
        ));
    }
    Ok(i - 1)
}

/// Reads a `.net` file. Node sizes are not part of the format and come back
/// as zero.
pub fn read_net<R: BufRead>(input: R) -> Result<CoauthNetwork> {
    enum State {
        Start,
        Vertices { n: usize, seen: usize },
        Edges { n: usize },
    }
    let mut state = State::Start;
    let mut net = CoauthNetwork::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if line.starts_with('*') {
            match state {
                State::Start => {
                    let n = header_count(line, "*Vertices", line_no)?
                        .ok_or_else(|| Error::parse(line_no, "expected *Vertices header"))?;
                    state = State::Vertices { n, seen: 0 };
                }
                State::Vertices { n, seen } => {
                    if !line.eq_ignore_ascii_case("*Edges") {
                        return Err(Error::parse(line_no, format!("unexpected section `{line}`")));
                    }
                    if seen != n {
                        return Err(Error::parse(line_no, format!("expected {n} vertices, found {seen}")));
                    }
                    state = State::Edges { n };
                }
                State::Edges { .. } => {
                    return Err(Error::parse(line_no, format!("unexpected section `{line}`")));
                }
            }
            continue;
        }
        match &mut state {
            State::Start => return Err(Error::parse(line_no, "expected *Vertices header")),
            State::Vertices { n, seen } => {
                let (num, rest) = line
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| Error::parse(line_no, "vertex line needs an index and a label"))?;
                let i = parse_index(Some(num), *n, line_no)?;
                if i != *seen {
                    return Err(Error::parse(line_no, format!("expected vertex {}, found {}", *seen + 1, i + 1)));
                }
                let rest = rest.trim();
                let label = rest
                    .strip_prefix('"')
                    .and_then(|r| r.split_once('"'))
                    .map(|(l, _)| l)
                    .or_else(|| rest.split_whitespace().next())
                    .ok_or_else(|| Error::parse(line_no, "missing vertex label"))?;
                net.add_node(label, 0.0, 0)
                    .map_err(|e| Error::parse(line_no, e.to_string()))?;
                *seen += 1;
            }
            State::Edges { n } => {
                let mut parts = line.split_whitespace();
                let i = parse_index(parts.next(), *n, line_no)?;
                let j = parse_index(parts.next(), *n, line_no)?;
                let w = match parts.next() {
                    None => 1,
                    Some(tok) => tok
                        .parse::<u64>()
                        .map_err(|_| Error::parse(line_no, format!("bad edge weight `{tok}`")))?,
                };
                if net.weight(i, j).is_some() {
                    return Err(Error::parse(line_no, "duplicate edge"));
                }
                net.add_edge(i, j, w)
                    .map_err(|e| Error::parse(line_no, e.to_string()))?;
            }
        }
    }
    match state {
        State::Start => Err(Error::parse(0, "missing *Vertices header")),
        State::Vertices { n, seen } if seen != n => {
            Err(Error::parse(0, format!("expected {n} vertices, found {seen}")))
        }
        _ => Ok(net),
    }
}

pub fn read_net_file(path: impl AsRef<Path>) -> Result<CoauthNetwork> {
    read_net(BufReader::new(File::open(path)?))
}

/// Writes one 1-based community id per node of `order`. `keys[i]` is the
/// node that `partition` assigns at index `i`.
pub fn write_partition<W, S, T>(partition: &Partition, keys: &[S], order: &[T], mut out: W) -> Result<()>
where
    W: Write,
    S: AsRef<str>,
    T: AsRef<str>,
{
    if keys.len() != partition.len() {
        return Err(Error::InvalidArgument(format!(
            "partition covers {} nodes but {} keys were given",
            partition.len(),
            keys.len()
        )));
    }
    let lookup: std::collections::HashMap<&str, usize> =
        keys.iter().enumerate().map(|(i, k)| (k.as_ref(), i)).collect();
    let mut ids = Vec::with_capacity(order.len());
    for key in order {
        let i = lookup
            .get(key.as_ref())
            .ok_or_else(|| Error::InvalidArgument(format!("node `{}` is not covered by the partition", key.as_ref())))?;
        ids.push(partition.community_of(*i) + 1);
    }
    writeln!(out, "*Vertices {}", ids.len())?;
    for id in ids {
        writeln!(out, "{id}")?;
    }
    Ok(())
}

/// Reads a `.clu` file as 0-based community ids in file order.
pub fn read_partition<R: BufRead>(input: R) -> Result<Vec<usize>> {
    let mut expected = None;
    let mut ids = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if expected.is_none() {
            expected = Some(
                header_count(line, "*Vertices", line_no)?
                    .ok_or_else(|| Error::parse(line_no, "expected *Vertices header"))?,
            );
            continue;
        }
        let id: usize = line
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad community id `{line}`")))?;
        if id == 0 {
            return Err(Error::parse(line_no, "community ids start at 1"));
        }
        ids.push(id - 1);
    }
    match expected {
        None => Err(Error::parse(0, "missing *Vertices header")),
        Some(n) if n != ids.len() => Err(Error::parse(0, format!("expected {n} ids, found {}", ids.len()))),
        Some(_) => Ok(ids),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_string(net: &CoauthNetwork) -> String {
        let mut buf = Vec::new();
        write_net(net, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn two_node_file() {
        let net = CoauthNetwork::from_edges([("A", "B", 3)]).unwrap();
        assert_eq!(to_string(&net), "*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n1 2 3\n");
    }

    #[test]
    fn index_zero_names_line() {
        let err = read_net("*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n0 2 1\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reader_errors() {
        assert!(read_net("*Edges\n".as_bytes()).is_err());
        assert!(read_net("*Vertices x\n".as_bytes()).is_err());
        assert!(read_net("*Vertices 2\n1 \"A\"\n*Edges\n".as_bytes()).is_err());
        assert!(read_net("*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n1 3 1\n".as_bytes()).is_err());
        assert!(read_net("*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n1 2 1\n2 1 1\n".as_bytes()).is_err());
        assert!(read_net("".as_bytes()).is_err());
    }

    #[test]
    fn labels_with_spaces_and_missing_weight() {
        let net = read_net("*vertices 2\n1 \"NEW ZEALAND\"\n2 \"AUSTRALIA\"\n*edges\n2 1\n".as_bytes()).unwrap();
        assert_eq!(net.weight_by_key("NEW ZEALAND", "AUSTRALIA"), Some(1));
    }

    #[test]
    fn quote_in_label_is_rejected() {
        let net = CoauthNetwork::from_edges([("A\"", "B", 1)]).unwrap();
        assert!(write_net(&net, Vec::new()).is_err());
    }

    #[test]
    fn partition_file() {
        let p = Partition::from_assignment(&[0, 0, 1]);
        let keys = ["a", "b", "c"];
        let mut buf = Vec::new();
        write_partition(&p, &keys, &keys, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "*Vertices 3\n1\n1\n2\n");
        assert_eq!(read_partition(buf.as_slice()).unwrap(), vec![0, 0, 1]);

        let mut permuted = Vec::new();
        write_partition(&p, &keys, &["c", "a", "b"], &mut permuted).unwrap();
        assert_eq!(String::from_utf8(permuted).unwrap(), "*Vertices 3\n2\n1\n1\n");

        assert!(write_partition(&p, &keys, &["a", "zz"], Vec::new()).is_err());
        assert!(read_partition("*Vertices 2\n1\n".as_bytes()).is_err());
        assert!(read_partition("*Vertices 1\n0\n".as_bytes()).is_err());
    }
}
