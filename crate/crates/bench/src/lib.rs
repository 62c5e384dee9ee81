//! Fixtures shared by the criterion benches.

use lagrange_ising::ising::random_instance;
use lagrange_ising::IsingInstance;

/// Random `±1` instance with edge density 0.5.
pub fn bench_instance(n: usize, seed: u64) -> IsingInstance {
    random_instance(n, 0.5, &[1.0, -1.0], seed).expect("valid density")
}
