//! Tunneling splittings in flat two-dimensional double wells.
//!
//! Builds six mirror-symmetric double-well billiards, solves their spectra
//! per parity sector, pairs symmetric and antisymmetric states into
//! splittings, traces the classical single-well bounce maps and projects
//! states onto coherent states along the barrier.

pub mod billiards;
pub mod geometry;
pub mod husimi;
pub mod oned;
pub mod qsolver;
pub mod spectra;

/// SplitMix64 finalizer; derives independent stream seeds from `(seed, id)`.
pub fn mix_seed(seed: u64, id: u64) -> u64 {
    let mut z = seed ^ id.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
