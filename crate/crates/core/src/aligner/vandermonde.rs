use alloc::vec::Vec;

use super::{exponents, SchemeDims};
use crate::channel::ChannelRealization;
use crate::linalg::{CMatrix, C64};

/// Generator entries closer than this are treated as colliding.
pub const DISTINCT_GAP: f64 = 1e-7;

/// Normalized composite delay of the product generator for `(receiver, transmitter)`:
/// `τ^{[i]}_{0,j} + τ^{[0]}_{j,2} + τ^{[1]}_{2,0}`, divided by `T_s`.
///
/// `(0, 0)` gives the delay of `F`, a pair `(i, j)` with `i ≠ j` that of
/// `T_{i,j}`, and `(i, i)` that of receiver `i`'s own generator.
pub fn composite_delay(r: &ChannelRealization, receiver: usize, transmitter: usize) -> f64 {
    let sum = r.relative_delay(receiver, 0, transmitter)
        + r.relative_delay(0, transmitter, 2)
        + r.relative_delay(1, 2, 0);
    sum / r.symbol_interval()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeProbe {
    /// `θ^α Π φ_t^{β_t}`: the `(n+1)^κ` entries with `α = 0` first, then the
    /// `n^κ` entries with `α = 1`, each block in lexicographic `β` order.
    pub entries: Vec<C64>,
    pub distinct: bool,
    pub min_gap: f64,
}

/// Enumerates the generator vector of the receiver's Vandermonde matrix.
pub fn vandermonde_probe(theta: C64, phis: &[C64], dims: &SchemeDims) -> VandermondeProbe {
    let product = |alpha: usize, beta: &[usize]| {
        beta.iter()
            .zip(phis)
            .fold(theta.powu(alpha as u32), |acc, (&b, phi)| {
                acc * phi.powu(b as u32)
            })
    };
    let mut entries: Vec<C64> = exponents(dims.order + 1, dims.kappa)
        .iter()
        .map(|beta| product(0, beta))
        .collect();
    entries.extend(
        exponents(dims.order, dims.kappa)
            .iter()
            .map(|beta| product(1, beta)),
    );

    let mut min_gap = f64::INFINITY;
    for p in 0..entries.len() {
        for q in p + 1..entries.len() {
            min_gap = min_gap.min((entries[p] - entries[q]).norm());
        }
    }
    VandermondeProbe {
        distinct: min_gap > DISTINCT_GAP,
        entries,
        min_gap,
    }
}

/// Square Vandermonde matrix with `(p, c)` entry `entries[c]^p`.
pub fn vandermonde_matrix(entries: &[C64]) -> CMatrix {
    CMatrix::from_fn(entries.len(), entries.len(), |p, c| {
        entries[c].powu(p as u32)
    })
}
