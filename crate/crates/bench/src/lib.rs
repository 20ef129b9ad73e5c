//! Shared fixtures for the benchmarks.

use lrpop::polyrep::bernstein_instance;
use lrpop::CpPoly;

/// Variable counts of the scaling benchmarks.
pub const SIZES: [usize; 4] = [10, 50, 100, 200];

/// The rank-two Bernstein instance with `n` variables used throughout.
pub fn bernstein(n: usize) -> CpPoly {
    bernstein_instance(n, 2, 2, 1.0, 0)
}
