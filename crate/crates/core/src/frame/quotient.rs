use std::collections::HashMap;

use crate::group::{Action, GroupElement, GroupKind, OrbitKey};

use super::{Convention, Frame, FrameError};

/// One representative per stabilizer orbit of a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientFrame<G> {
    pub representatives: Vec<G>,
    pub orbit_size: usize,
    pub convention: Convention,
    pub group: GroupKind,
    pub fingerprint: Option<u64>,
}

impl<G> QuotientFrame<G> {
    /// Number of distinct averaging terms.
    pub fn m_f(&self) -> usize {
        self.representatives.len()
    }

    pub fn frame_size(&self) -> usize {
        self.representatives.len() * self.orbit_size
    }
}

/// Groups frame elements by the input they produce (`ρ(g)⁻¹X` for left
/// frames, `ρ(g)X` for right frames). Elements in one group differ by a
/// stabilizer element and give identical averaging terms.
///
/// Representatives keep the frame's canonical order (first member of each
/// group). Fails with `UnequalOrbits` if the groups differ in size.
pub fn quotient<G, X>(frame: &Frame<G>, x: &X) -> Result<QuotientFrame<G>, FrameError>
where
    G: GroupElement,
    X: Action<G> + OrbitKey,
{
    let mut slots: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut representatives = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for g in frame.elements() {
        let moved = match frame.convention() {
            Convention::Left => x.act_inverse(g)?,
            Convention::Right => x.act(g)?,
        };
        let next = representatives.len();
        let slot = *slots.entry(moved.orbit_key()).or_insert(next);
        if slot == next {
            representatives.push(g.clone());
            sizes.push(0);
        }
        sizes[slot] += 1;
    }
    let orbit_size = sizes[0];
    if sizes.iter().any(|&s| s != orbit_size) {
        return Err(FrameError::UnequalOrbits { sizes });
    }
    Ok(QuotientFrame {
        representatives,
        orbit_size,
        convention: frame.convention(),
        group: frame.group(),
        fingerprint: frame.fingerprint(),
    })
}
