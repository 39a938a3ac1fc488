//! Seeded inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tgalab::SparseVec;

/// `k` entries on `1..=n`, moduli spread over three decades.
pub fn random_vector(seed: u64, n: usize, k: usize) -> SparseVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = rand::seq::index::sample(&mut rng, n, k.min(n));
    SparseVec::from_pairs(
        idx.into_iter()
            .map(|i| {
                (
                    i + 1,
                    rng.gen_range(-1.0..1.0) * 10f64.powf(rng.gen_range(-3.0..0.0)),
                )
            })
            .collect::<Vec<_>>(),
    )
    .expect("distinct indices")
}
