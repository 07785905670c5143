use std::ops::Range;
use std::path::Path;

use super::{check_range, Graph, GraphError};
use crate::numeric::Matrix;

const BIAS: u8 = 63;
const SHORT_MAX: usize = 62;
const MEDIUM_MAX: usize = 258_047;
const HEADER: &[u8] = b">>graph6<<";

/// Decodes one graph6 string. A trailing newline is tolerated.
pub fn parse_graph6(bytes: &[u8]) -> Result<Graph, GraphError> {
    let bytes = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let bytes = bytes.strip_suffix(b"\r").unwrap_or(bytes);
    let bytes = bytes.strip_prefix(HEADER).unwrap_or(bytes);
    let (n, body) = parse_size(bytes)?;
    let nbits = n * n.saturating_sub(1) / 2;
    let expected = nbits.div_ceil(6);
    if body.len() < expected {
        return Err(GraphError::TruncatedBitVector { expected, found: body.len() });
    }
    if body.len() > expected {
        return Err(GraphError::TrailingBytes(body.len() - expected));
    }
    let mut sextets = Vec::with_capacity(expected);
    for &b in body {
        if !(BIAS..=BIAS + 63).contains(&b) {
            return Err(GraphError::InvalidByte(b));
        }
        sextets.push(b - BIAS);
    }
    let bit = |k: usize| (sextets[k / 6] >> (5 - k % 6)) & 1 == 1;
    if (nbits..expected * 6).any(bit) {
        return Err(GraphError::NonCanonicalPadding);
    }
    let mut a = Matrix::zeros(n, n);
    let mut k = 0;
    for j in 1..n {
        for i in 0..j {
            if bit(k) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
            k += 1;
        }
    }
    Graph::from_adjacency(a)
}

fn parse_size(bytes: &[u8]) -> Result<(usize, &[u8]), GraphError> {
    let sextet = |b: u8| {
        if (BIAS..=BIAS + 63).contains(&b) {
            Ok((b - BIAS) as usize)
        } else {
            Err(GraphError::MalformedHeader)
        }
    };
    let wide = |digits: &[u8]| digits.iter().try_fold(0usize, |acc, &b| Ok((acc << 6) | sextet(b)?));
    match bytes {
        [] => Err(GraphError::MalformedHeader),
        [b'~', b'~', rest @ ..] => {
            if rest.len() < 6 {
                return Err(GraphError::MalformedHeader);
            }
            let n = wide(&rest[..6])?;
            if n <= MEDIUM_MAX {
                return Err(GraphError::MalformedHeader);
            }
            Ok((n, &rest[6..]))
        }
        [b'~', rest @ ..] => {
            if rest.len() < 3 {
                return Err(GraphError::MalformedHeader);
            }
            let n = wide(&rest[..3])?;
            if n <= SHORT_MAX {
                return Err(GraphError::MalformedHeader);
            }
            Ok((n, &rest[3..]))
        }
        [first, rest @ ..] => Ok((sextet(*first)?, rest)),
    }
}

/// Encodes a simple graph in graph6 (no trailing newline).
pub fn write_graph6(g: &Graph) -> Result<Vec<u8>, GraphError> {
    if !g.is_simple() {
        return Err(GraphError::NotSimple);
    }
    let n = g.n();
    let mut out = Vec::new();
    if n <= SHORT_MAX {
        out.push(n as u8 + BIAS);
    } else if n <= MEDIUM_MAX {
        out.push(b'~');
        out.extend((0..3).rev().map(|s| ((n >> (6 * s)) & 63) as u8 + BIAS));
    } else {
        out.extend_from_slice(b"~~");
        out.extend((0..6).rev().map(|s| ((n >> (6 * s)) & 63) as u8 + BIAS));
    }
    let mut acc = 0u8;
    let mut filled = 0;
    for j in 1..n {
        for i in 0..j {
            acc = (acc << 1) | (g.adjacency()[(i, j)] != 0.0) as u8;
            filled += 1;
            if filled == 6 {
                out.push(acc + BIAS);
                acc = 0;
                filled = 0;
            }
        }
    }
    if filled > 0 {
        out.push((acc << (6 - filled)) + BIAS);
    }
    Ok(out)
}

/// Reads a graph6 file, one graph per line; blank lines are skipped.
/// `lines` selects a range of graphs (0-based, end exclusive).
pub fn load_graph6(path: &Path, lines: Option<Range<usize>>) -> Result<Vec<Graph>, GraphError> {
    let data = std::fs::read(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
    let mut graphs = Vec::new();
    for (k, line) in data.split(|&b| b == b'\n').enumerate() {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let g = parse_graph6(line).map_err(|e| GraphError::Line { line: k + 1, source: Box::new(e) })?;
        graphs.push(g);
    }
    match lines {
        None => Ok(graphs),
        Some(r) => {
            check_range(&r, graphs.len())?;
            Ok(graphs.drain(r).collect())
        }
    }
}
