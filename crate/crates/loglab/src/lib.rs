//! Similarity learning for multi-channel depth series (well logs).
//!
//! The crate covers the complete pipeline: CSV ingestion and a synthetic
//! corpus generator ([`corpus`]), the fixed cleaning/normalization steps
//! ([`preprocess`]), interval and pair/triplet sampling ([`sampler`]), a
//! small reverse-mode autodiff engine with LSTM encoders ([`autodiff`]),
//! the siamese/triplet architectures plus classic baselines ([`models`]),
//! training loops including end-to-end aggregation and domain adaptation
//! ([`training`]), classification and clustering metrics ([`metrics`]),
//! and well-level similarity aggregation ([`wellsim`]).

pub mod autodiff;
pub mod corpus;
pub mod metrics;
pub mod models;
pub mod preprocess;
pub mod sampler;
pub mod training;
pub mod wellsim;

#[cfg(test)]
pub(crate) mod testutil;

/// Splitmix-style seed derivation so that independent substreams can be
/// spawned from one user-facing seed deterministically.
pub fn derive_seed(base: u64, tag: &str, k: u64) -> u64 {
    let mut z = base ^ 0x9e37_79b9_7f4a_7c15;
    for byte in tag.as_bytes() {
        z = (z ^ u64::from(*byte)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z ^= z >> 27;
    }
    z = z.wrapping_add(k.wrapping_mul(0x94d0_49bb_1331_11eb));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
