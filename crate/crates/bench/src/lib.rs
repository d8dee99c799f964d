//! Fixtures shared by the kernel benchmarks in `benches/`.

use charsum_core::ntcore::{primes_in_range, Residue};
use charsum_core::QuadChar;

/// Smallest prime `q ≡ 3 (mod 8)` at or above each size, so runs are
/// comparable across machines.
pub fn moduli(sizes: &[u64]) -> Vec<QuadChar> {
    sizes
        .iter()
        .map(|&lo| {
            let q = primes_in_range(lo, lo.saturating_mul(2), Some(Residue::new(3, 8)))
                .next()
                .expect("prime = 3 mod 8 in [n, 2n)");
            QuadChar::new(q).expect("prime modulus")
        })
        .collect()
}
