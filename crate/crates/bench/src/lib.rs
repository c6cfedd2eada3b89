//! Benchmark fixtures shared by the criterion targets.

use las_core::RngStream;

/// Sparse means plus unit noise: `nonzero` signals of size `c`, rest zero.
pub fn sparse_observations(n: usize, nonzero: usize, c: f64, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0);
    (0..n)
        .map(|i| if i < nonzero { c } else { 0.0 } + rng.standard_normal())
        .collect()
}
