//! Rough angles on finite metric spaces.
//!
//! The crate decides the small-rough-angle condition SRA(α) on finite metric spaces,
//! finds maximum SRA(α) subspaces, verifies and generates discrete self-expanding (DSE)
//! spaces and self-contracted curves, evaluates the explicit constants that appear in
//! the extraction argument, and realizes the finite constructions around them (snowflake
//! transform, distance-to-net embeddings, pigeonhole freeness bounds).
//!
//! Indices are 0-based everywhere. Randomized routines take an explicit `u64` seed and
//! are deterministic for a fixed seed regardless of the rayon thread count.

pub(crate) mod bitset;
pub mod constants;
pub mod curves;
pub mod dse;
pub mod extract;
pub mod io;
pub mod metric;
pub mod net;
pub mod sra;

pub use curves::SampledCurve;
pub use dse::DseSpace;
pub use metric::{FiniteMetricSpace, ModelKind, ModelSpace, PointCloud};
pub use sra::{SraVerdict, SubsetCertificate};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG used by every seeded routine.
pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
