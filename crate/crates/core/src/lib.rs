//! Value-network MCTS for abstract board games, end to end: game rules
//! behind one interface, UCT search with tree reuse, two from-scratch
//! value-network architectures (attention encoder and a convolutional
//! baseline) with reverse-mode gradients and Adam, parallel dataset
//! generation from UCT-vs-UCT play, training, and a match harness with
//! confidence intervals.
//!
//! The numerical core is generic over the scalar type ([`Scalar`]):
//! `f32` everywhere in production, `f64` when checking gradients.

pub mod datagen;
pub mod eval;
pub mod games;
pub mod mcts;
pub mod neural;
pub mod scalar;
pub mod train;

pub use scalar::Scalar;

/// Production-precision network.
pub type ValueNet32 = neural::ValueNet<f32>;
/// Checking-precision network, used by the gradient checker.
pub type ValueNet64 = neural::ValueNet<f64>;
/// Production-precision tile encoding.
pub type TileEncoding32 = games::TileEncoding<f32>;

/// SplitMix64 finalizer; decorrelates structured seed inputs (game
/// index, ply, role) into independent RNG streams.
#[inline]
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
