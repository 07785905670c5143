use std::ops::Range;

use crate::group::{GroupElement, GroupKind, Permutation};
use crate::numeric::{Rng, TieBlocks};

use super::{Convention, Frame};

/// Uniform draws from a frame, enumerated or not.
pub trait FrameSampler<G>: Send + Sync {
    fn draw(&self, rng: &mut Rng) -> G;
    fn convention(&self) -> Convention;
    fn fingerprint(&self) -> Option<u64>;
    /// Number of frame elements, `None` if it does not fit in `u128`.
    fn size(&self) -> Option<u128>;
}

impl<G: GroupElement> FrameSampler<G> for Frame<G> {
    fn draw(&self, rng: &mut Rng) -> G {
        self.elements()[rng.index(self.len())].clone()
    }

    fn convention(&self) -> Convention {
        Frame::convention(self)
    }

    fn fingerprint(&self) -> Option<u64> {
        Frame::fingerprint(self)
    }

    fn size(&self) -> Option<u128> {
        Some(self.len() as u128)
    }
}

/// `k` independent uniform draws.
pub fn frame_sample<G>(frame: &(impl FrameSampler<G> + ?Sized), rng: &mut Rng, k: usize) -> Vec<G> {
    (0..k).map(|_| frame.draw(rng)).collect()
}

/// A sorting frame described by one sorted order plus its tie blocks.
///
/// Every frame element sends the nodes of each block, in some order, to that
/// block's positions; a draw shuffles each block independently.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingFrame {
    order: Vec<usize>,
    blocks: Vec<Range<usize>>,
    fingerprint: u64,
}

impl SamplingFrame {
    pub fn new(ties: TieBlocks, fingerprint: u64) -> Self {
        SamplingFrame { order: ties.order, blocks: ties.blocks, fingerprint }
    }

    /// `order[pos]` is the node sent to position `pos` by the base element.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// The element sending `order[pos]` to `pos`.
    pub fn base(&self) -> Permutation {
        element_from_order(&self.order)
    }

    /// Whether `g` belongs to the frame: it must place every block's nodes on that block's positions.
    pub fn contains(&self, g: &Permutation) -> bool {
        g.len() == self.order.len()
            && self.blocks.iter().all(|b| self.order[b.clone()].iter().all(|&v| b.contains(&g.image(v))))
    }
}

pub(crate) fn element_from_order(order: &[usize]) -> Permutation {
    let mut map = vec![0; order.len()];
    for (pos, &v) in order.iter().enumerate() {
        map[v] = pos;
    }
    Permutation::from_map_unchecked(map)
}

impl FrameSampler<Permutation> for SamplingFrame {
    fn draw(&self, rng: &mut Rng) -> Permutation {
        let mut order = self.order.clone();
        for b in &self.blocks {
            rng.shuffle(&mut order[b.clone()]);
        }
        element_from_order(&order)
    }

    fn convention(&self) -> Convention {
        Convention::Right
    }

    fn fingerprint(&self) -> Option<u64> {
        Some(self.fingerprint)
    }

    fn size(&self) -> Option<u128> {
        self.blocks.iter().try_fold(1u128, |acc, b| (1..=b.len() as u128).try_fold(acc, |a, k| a.checked_mul(k)))
    }
}

/// Uniform draws from all of `S_n`, the group-averaging baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniformPermutations {
    pub n: usize,
}

impl FrameSampler<Permutation> for UniformPermutations {
    fn draw(&self, rng: &mut Rng) -> Permutation {
        Permutation::from_map_unchecked(rng.permutation_map(self.n))
    }

    fn convention(&self) -> Convention {
        Convention::Left
    }

    fn fingerprint(&self) -> Option<u64> {
        None
    }

    fn size(&self) -> Option<u128> {
        (1..=self.n as u128).try_fold(1u128, |a, k| a.checked_mul(k))
    }
}

impl UniformPermutations {
    pub fn group(&self) -> GroupKind {
        GroupKind::Symmetric
    }
}
