use std::collections::BTreeSet;

use super::{Graph, GraphError};
use crate::numeric::Matrix;

pub const MAX_ENUMERATION_NODES: usize = 7;
const MAX_CODE_NODES: usize = 11;

/// Bitset adjacency: bit `j` of `rows[i]` is the edge `{i, j}`.
#[derive(Clone)]
struct BitGraph {
    n: usize,
    rows: Vec<u16>,
}

impl BitGraph {
    fn from_graph(g: &Graph) -> Self {
        let n = g.n();
        let rows =
            (0..n).map(|i| (0..n).filter(|&j| g.adjacency()[(i, j)] != 0.0).fold(0u16, |r, j| r | (1 << j))).collect();
        BitGraph { n, rows }
    }

    fn has(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    fn to_graph(&self) -> Graph {
        let mut a = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.has(i, j) {
                    a[(i, j)] = 1.0;
                }
            }
        }
        Graph::from_adjacency(a).expect("bitset adjacency is symmetric")
    }

    /// Graph with the rows laid out by a code: bits in graph6 order, first bit most significant.
    fn from_code(n: usize, code: u64) -> Self {
        let nbits = n * n.saturating_sub(1) / 2;
        let mut rows = vec![0u16; n];
        let mut k = 0;
        for j in 1..n {
            for i in 0..j {
                if code >> (nbits - 1 - k) & 1 == 1 {
                    rows[i] |= 1 << j;
                    rows[j] |= 1 << i;
                }
                k += 1;
            }
        }
        BitGraph { n, rows }
    }

    /// Ordered vertex partition from iterated colour refinement. Colours are
    /// renamed by sorting signatures, so the partition is isomorphism-invariant.
    fn ordered_cells(&self) -> Vec<Vec<usize>> {
        let n = self.n;
        let mut colour: Vec<usize> = vec![0; n];
        let mut classes = 1;
        loop {
            let signatures: Vec<(usize, Vec<usize>)> = (0..n)
                .map(|i| {
                    let mut nb: Vec<usize> = (0..n).filter(|&j| self.has(i, j)).map(|j| colour[j]).collect();
                    nb.sort_unstable();
                    (colour[i], nb)
                })
                .collect();
            let distinct: BTreeSet<&(usize, Vec<usize>)> = signatures.iter().collect();
            let distinct: Vec<_> = distinct.into_iter().collect();
            let next: Vec<usize> = signatures.iter().map(|s| distinct.binary_search(&s).unwrap()).collect();
            let count = distinct.len();
            colour = next;
            if count == classes {
                break;
            }
            classes = count;
        }
        let mut cells = vec![Vec::new(); classes];
        for (v, &c) in colour.iter().enumerate() {
            cells[c].push(v);
        }
        cells
    }
}

/// Minimal adjacency bit string over all labelings consistent with the
/// refined degree partition, as an integer (first graph6 bit most significant).
/// Two simple graphs are isomorphic iff their codes are equal.
pub fn canonical_code(g: &Graph) -> Result<u64, GraphError> {
    if g.n() > MAX_CODE_NODES {
        return Err(GraphError::TooLarge { n: g.n(), max: MAX_CODE_NODES });
    }
    if !g.is_simple() {
        return Err(GraphError::NotSimple);
    }
    Ok(code_of(&BitGraph::from_graph(g)))
}

fn code_of(g: &BitGraph) -> u64 {
    let n = g.n;
    let cells = g.ordered_cells();
    let mut slot_cell = Vec::with_capacity(n);
    for (c, cell) in cells.iter().enumerate() {
        slot_cell.extend(std::iter::repeat_n(c, cell.len()));
    }
    let mut search = Search {
        g,
        cells: &cells,
        slot_cell,
        placed: Vec::with_capacity(n),
        used: vec![false; n],
        best: None,
        nbits: n * n.saturating_sub(1) / 2,
    };
    search.extend(0);
    search.best.unwrap_or(0)
}

struct Search<'a> {
    g: &'a BitGraph,
    cells: &'a [Vec<usize>],
    slot_cell: Vec<usize>,
    placed: Vec<usize>,
    used: Vec<bool>,
    best: Option<u64>,
    nbits: usize,
}

impl Search<'_> {
    /// `prefix` holds the bits for columns `1..placed.len()`.
    fn extend(&mut self, prefix: u64) {
        let j = self.placed.len();
        if j == self.g.n {
            if self.best.is_none_or(|b| prefix < b) {
                self.best = Some(prefix);
            }
            return;
        }
        let column_end = (j + 1) * j / 2;
        for idx in 0..self.cells[self.slot_cell[j]].len() {
            let v = self.cells[self.slot_cell[j]][idx];
            if self.used[v] {
                continue;
            }
            let mut next = prefix;
            for &u in &self.placed {
                next = (next << 1) | self.g.has(u, v) as u64;
            }
            if let Some(b) = self.best {
                // compare against the same-length prefix of the best code
                if next > b >> (self.nbits - column_end) {
                    continue;
                }
            }
            self.used[v] = true;
            self.placed.push(v);
            self.extend(next);
            self.placed.pop();
            self.used[v] = false;
        }
    }
}

/// One representative per isomorphism class of connected simple graphs on
/// `n` nodes, each laid out in its canonical labeling, sorted by code.
///
/// Classes on `n` nodes are grown from those on `n − 1` by attaching a new
/// vertex to every non-empty neighbour set; every connected graph has a
/// vertex whose removal leaves it connected, so nothing is missed.
pub fn enumerate_connected(n: usize) -> Result<Vec<Graph>, GraphError> {
    if n > MAX_ENUMERATION_NODES {
        return Err(GraphError::TooLarge { n, max: MAX_ENUMERATION_NODES });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut level: BTreeSet<u64> = BTreeSet::from([0]);
    for m in 2..=n {
        let mut next = BTreeSet::new();
        for &code in &level {
            let base = BitGraph::from_code(m - 1, code);
            for mask in 1u16..(1 << (m - 1)) {
                let mut rows = base.rows.clone();
                for (i, row) in rows.iter_mut().enumerate() {
                    if mask >> i & 1 == 1 {
                        *row |= 1 << (m - 1);
                    }
                }
                rows.push(mask);
                next.insert(code_of(&BitGraph { n: m, rows }));
            }
        }
        level = next;
    }
    Ok(level.into_iter().map(|c| BitGraph::from_code(n, c).to_graph()).collect())
}
