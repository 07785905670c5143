use std::ops::Range;

use super::{Matrix, NumericError};

pub const DEFAULT_TAU_LEX: f64 = 1e-6;

/// A tolerant lexicographic ordering of matrix rows.
///
/// `order[pos]` is the row placed at position `pos`. `blocks` are maximal
/// runs of positions whose rows are indistinguishable at the tolerance;
/// inside a block rows appear in increasing row index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieBlocks {
    pub order: Vec<usize>,
    pub blocks: Vec<Range<usize>>,
}

impl TieBlocks {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn block_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().map(|b| b.len())
    }

    /// `∏ blocks (size!)`, `None` on `u128` overflow.
    pub fn tie_count(&self) -> Option<u128> {
        self.block_sizes().try_fold(1u128, |acc, s| (1..=s as u128).try_fold(acc, |a, k| a.checked_mul(k)))
    }
}

/// Orders the rows of `s` ascending by column 0, then column 1, and so on,
/// treating entries within `tau` of each other as equal.
///
/// Works column by column: every current block is sorted by the next column
/// and split wherever consecutive values differ by more than `tau`. The
/// resulting ordered partition depends only on the multiset of rows.
pub fn lex_rank_rows(s: &Matrix, tau: f64) -> Result<TieBlocks, NumericError> {
    if s.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(NumericError::NonFinite);
    }
    let n = s.rows();
    let mut order: Vec<usize> = (0..n).collect();
    #[allow(clippy::single_range_in_vec_init)]
    let mut blocks: Vec<Range<usize>> = if n == 0 { Vec::new() } else { vec![0..n] };

    for c in 0..s.cols() {
        let mut refined = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.len() == 1 {
                refined.push(block);
                continue;
            }
            let slot = &mut order[block.clone()];
            slot.sort_by(|&a, &b| s[(a, c)].total_cmp(&s[(b, c)]).then(a.cmp(&b)));
            let mut start = block.start;
            for pos in (block.start + 1)..block.end {
                if s[(order[pos], c)] - s[(order[pos - 1], c)] > tau {
                    refined.push(start..pos);
                    start = pos;
                }
            }
            refined.push(start..block.end);
        }
        blocks = refined;
    }
    for block in &blocks {
        order[block.clone()].sort_unstable();
    }
    Ok(TieBlocks { order, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_column_with_tie() {
        let s = Matrix::from_rows(&[[2.0], [1.0], [1.0]]);
        let t = lex_rank_rows(&s, DEFAULT_TAU_LEX).unwrap();
        assert_eq!(t.order, vec![1, 2, 0]);
        assert_eq!(t.blocks, vec![0..2, 2..3]);
        assert_eq!(t.tie_count(), Some(2));
    }

    #[test]
    fn path_graph_s_matrix() {
        let s =
            Matrix::from_rows(&[[1.0 / 3.0, 0.5, 1.0 / 6.0], [1.0 / 3.0, 0.0, 2.0 / 3.0], [1.0 / 3.0, 0.5, 1.0 / 6.0]]);
        let t = lex_rank_rows(&s, DEFAULT_TAU_LEX).unwrap();
        assert_eq!(t.order, vec![1, 0, 2]);
        assert_eq!(t.blocks, vec![0..1, 1..3]);
    }

    #[test]
    fn complete_tie_is_one_block() {
        let s = Matrix::from_rows(&[[0.5, 0.25]; 4]);
        let t = lex_rank_rows(&s, DEFAULT_TAU_LEX).unwrap();
        assert_eq!(t.blocks, vec![0..4]);
        assert_eq!(t.tie_count(), Some(24));
    }

    #[test]
    fn noise_below_tolerance_ties() {
        let s = Matrix::from_rows(&[[1.0, 0.3], [1.0 + 1e-9, 0.2], [1.0 - 1e-9, 0.2 + 1e-10]]);
        let t = lex_rank_rows(&s, DEFAULT_TAU_LEX).unwrap();
        assert_eq!(t.blocks, vec![0..2, 2..3]);
        assert_eq!(t.order, vec![1, 2, 0]);
    }

    #[test]
    fn empty_matrix() {
        let t = lex_rank_rows(&Matrix::zeros(0, 2), DEFAULT_TAU_LEX).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.tie_count(), Some(1));
    }
}
