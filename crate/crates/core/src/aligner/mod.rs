//! Delay-driven precoder synthesis and verification of the alignment and
//! full-rank conditions.
//!
//! Users are indexed from zero. User 0 sends `(n+1)^κ` streams on `V_0 = A`;
//! every other user sends `n^κ` streams on `V_j = S_j B`. At receiver 0 all
//! interference lines up with `Γ_{0,2} V_2`; at receiver `i ≥ 1` the
//! interference of users `j ≥ 1` falls inside the span of `Γ_{i,0} A`.

mod vandermonde;

use alloc::vec::Vec;

pub use vandermonde::{composite_delay, vandermonde_matrix, vandermonde_probe, VandermondeProbe};

use crate::channel::ChannelSet;
use crate::error::{invalid, Error, Result};
use crate::linalg::{dft_matrix, inverse, rank_ratio, CMatrix, CVector, C64, RANK_THRESHOLD};

/// Derived sizes of the scheme for `K` users and alignment order `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeDims {
    pub users: usize,
    pub order: usize,
    /// `κ = (K−1)(K−2) − 1`, the number of product generators.
    pub kappa: usize,
    /// `(n+1)^κ`, streams of user 0.
    pub primary_streams: usize,
    /// `n^κ`, streams of every other user.
    pub secondary_streams: usize,
    /// `N = (n+1)^κ + n^κ`.
    pub length: usize,
}

pub fn scheme_dims(users: usize, order: usize) -> Result<SchemeDims> {
    if users < 3 {
        return Err(invalid("K", "the alignment scheme needs at least 3 users"));
    }
    if order == 0 {
        return Err(invalid("n", "alignment order must be at least 1"));
    }
    let kappa = (users - 1) * (users - 2) - 1;
    let too_big = || invalid("n", "codeword length overflows for this K and n");
    let exp = u32::try_from(kappa).map_err(|_| too_big())?;
    let primary = (order + 1).checked_pow(exp).ok_or_else(too_big)?;
    let secondary = order.checked_pow(exp).ok_or_else(too_big)?;
    let length = primary.checked_add(secondary).ok_or_else(too_big)?;
    Ok(SchemeDims {
        users,
        order,
        kappa,
        primary_streams: primary,
        secondary_streams: secondary,
        length,
    })
}

impl SchemeDims {
    /// `s_j`.
    pub fn streams(&self, user: usize) -> usize {
        if user == 0 {
            self.primary_streams
        } else {
            self.secondary_streams
        }
    }

    /// `s_1 + (K−1) s_2`.
    pub fn total_streams(&self) -> usize {
        self.primary_streams + (self.users - 1) * self.secondary_streams
    }

    /// Streams per channel use without cyclic extension, `(s_1 + (K−1)s_2) / N`.
    pub fn band_limited_factor(&self) -> f64 {
        self.total_streams() as f64 / self.length as f64
    }

    /// Streams per channel use when each block carries `2(u+1)` CPS symbols.
    pub fn cps_factor(&self, half_support: u32) -> f64 {
        self.total_streams() as f64 / (self.length + cps_overhead(half_support)) as f64
    }

    /// The `(i, j)` pairs that index the product generators `T_{i,j}`, in
    /// lexicographic order: `i, j ≥ 1`, `i ≠ j`, `(i, j) ≠ (1, 2)`.
    pub fn generator_pairs(&self) -> Vec<(usize, usize)> {
        let k = self.users;
        (1..k)
            .flat_map(|i| (1..k).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && (i, j) != (1, 2))
            .collect()
    }
}

/// `2(u+1)` symbols of cyclic prefix and suffix.
pub fn cps_overhead(half_support: u32) -> usize {
    2 * (half_support as usize + 1)
}

/// Exponent vectors in `{0..base−1}^κ`, lexicographic with the first coordinate most significant.
pub fn exponents(base: usize, kappa: usize) -> Vec<Vec<usize>> {
    let count = base.pow(kappa as u32);
    (0..count)
        .map(|mut idx| {
            let mut beta = alloc::vec![0; kappa];
            for slot in beta.iter_mut().rev() {
                *slot = idx % base;
                idx /= base;
            }
            beta
        })
        .collect()
}

fn exponent_index(beta: &[usize], base: usize) -> usize {
    beta.iter().fold(0, |acc, &b| acc * base + b)
}

/// The matrices `S_j`, `T_{i,j}` and the receive-side products they are built from.
#[derive(Debug, Clone)]
pub struct Generators {
    /// `S_j = Γ_{0,j}⁻¹ Γ_{0,2} Γ_{1,2}⁻¹ Γ_{1,0}`; `S_0` is the matrix `F`.
    pub shaping: Vec<CMatrix>,
    /// `T_{i,j} = Γ_{i,0}⁻¹ Γ_{i,j} S_j`, one per entry of `pairs`.
    pub products: Vec<CMatrix>,
    pub pairs: Vec<(usize, usize)>,
    /// `Γ_{i,0}⁻¹` for every receiver.
    pub first_inverse: Vec<CMatrix>,
}

impl Generators {
    /// `F = S_0`.
    pub fn feedback(&self) -> &CMatrix {
        &self.shaping[0]
    }

    /// Position of `T_{i,j}` in `products`.
    pub fn pair_index(&self, i: usize, j: usize) -> Option<usize> {
        self.pairs.iter().position(|&p| p == (i, j))
    }
}

fn checked_inverse(chan: &ChannelSet, i: usize, j: usize) -> Result<CMatrix> {
    let m = chan.link(i, j);
    let ratio = rank_ratio(m);
    if ratio <= RANK_THRESHOLD {
        return Err(Error::DegenerateChannel {
            receiver: i,
            transmitter: j,
            ratio,
        });
    }
    inverse(m).ok_or(Error::DegenerateChannel {
        receiver: i,
        transmitter: j,
        ratio,
    })
}

pub fn build_generators(chan: &ChannelSet, dims: &SchemeDims) -> Result<Generators> {
    let k = dims.users;
    if chan.users() != k || chan.len() != dims.length {
        return Err(Error::Dimension(alloc::format!(
            "channel set is {}-user length {}, scheme needs {k}-user length {}",
            chan.users(),
            chan.len(),
            dims.length
        )));
    }
    let first_inverse = (0..k)
        .map(|i| checked_inverse(chan, i, 0))
        .collect::<Result<Vec<_>>>()?;
    let core = chan.link(0, 2) * checked_inverse(chan, 1, 2)? * chan.link(1, 0);
    let mut shaping = Vec::with_capacity(k);
    for j in 0..k {
        shaping.push(checked_inverse(chan, 0, j)? * &core);
    }
    let pairs = dims.generator_pairs();
    let products = pairs
        .iter()
        .map(|&(i, j)| &first_inverse[i] * chan.link(i, j) * &shaping[j])
        .collect();
    Ok(Generators {
        shaping,
        products,
        pairs,
        first_inverse,
    })
}

/// Seed vector `w = U†·1`, whose DFT is the all-ones vector.
pub fn seed_vector(length: usize) -> CVector {
    dft_matrix(length).adjoint() * CVector::from_element(length, C64::new(1.0, 0.0))
}

/// Transmit directions of every user.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    pub dims: SchemeDims,
    /// `A = V_0`, columns `Π T^β w` for `β ∈ {0..n}^κ`.
    pub a: CMatrix,
    /// `B`, columns `Π T^β w` for `β ∈ {0..n−1}^κ`.
    pub b: CMatrix,
    /// `V_0 = A`, `V_j = S_j B`.
    pub directions: Vec<CMatrix>,
}

impl PrecoderSet {
    pub fn direction(&self, user: usize) -> &CMatrix {
        &self.directions[user]
    }

    /// Column of `A` holding the product with exponent vector `beta`.
    pub fn a_column(&self, beta: &[usize]) -> usize {
        exponent_index(beta, self.dims.order + 1)
    }
}

pub fn build_precoders(
    dims: &SchemeDims,
    gens: &Generators,
    seed: &CVector,
) -> Result<PrecoderSet> {
    if seed.len() != dims.length {
        return Err(Error::LengthMismatch {
            expected: dims.length,
            found: seed.len(),
        });
    }
    if gens.products.len() != dims.kappa {
        return Err(Error::LengthMismatch {
            expected: dims.kappa,
            found: gens.products.len(),
        });
    }
    let base = dims.order + 1;
    let full = exponents(base, dims.kappa);
    let mut a = CMatrix::zeros(dims.length, full.len());
    a.set_column(0, seed);
    for (col, beta) in full.iter().enumerate().skip(1) {
        let t = beta
            .iter()
            .rposition(|&b| b > 0)
            .expect("non-zero exponent");
        let mut prev = beta.clone();
        prev[t] -= 1;
        let from = a.column(exponent_index(&prev, base)).into_owned();
        a.set_column(col, &(&gens.products[t] * from));
    }
    let reduced = exponents(dims.order, dims.kappa);
    let mut b = CMatrix::zeros(dims.length, reduced.len());
    for (col, beta) in reduced.iter().enumerate() {
        b.set_column(col, &a.column(exponent_index(beta, base)));
    }
    let mut directions = Vec::with_capacity(dims.users);
    directions.push(a.clone());
    for j in 1..dims.users {
        directions.push(&gens.shaping[j] * &b);
    }
    Ok(PrecoderSet {
        dims: *dims,
        a,
        b,
        directions,
    })
}

/// Worst relative alignment error at receiver 0 and at the other receivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentResidual {
    /// `max_j ‖Γ_{0,j}V_j − Γ_{0,2}V_2‖ / ‖Γ_{0,2}V_2‖`.
    pub common: f64,
    /// Worst column distance of `Γ_{i,0}⁻¹ Γ_{i,j} V_j` from its matching column of `A`.
    pub containment: f64,
}

impl AlignmentResidual {
    pub fn worst(&self) -> f64 {
        self.common.max(self.containment)
    }
}

pub fn alignment_residual(
    precoders: &PrecoderSet,
    gens: &Generators,
    chan: &ChannelSet,
) -> AlignmentResidual {
    let dims = &precoders.dims;
    let k = dims.users;
    let reference = chan.link(0, 2) * precoders.direction(2);
    let ref_norm = reference.norm();
    let common = (1..k)
        .map(|j| (chan.link(0, j) * precoders.direction(j) - &reference).norm() / ref_norm)
        .fold(0.0, f64::max);

    let reduced = exponents(dims.order, dims.kappa);
    let mut containment: f64 = 0.0;
    for i in 1..k {
        for j in (1..k).filter(|&j| j != i) {
            let image = &gens.first_inverse[i] * chan.link(i, j) * precoders.direction(j);
            let shift = gens.pair_index(i, j);
            for (col, beta) in reduced.iter().enumerate() {
                let mut target = beta.clone();
                if let Some(t) = shift {
                    target[t] += 1;
                }
                let a_col = precoders.a.column(precoders.a_column(&target));
                let err = (image.column(col) - a_col).norm() / a_col.norm();
                containment = containment.max(err);
            }
        }
    }
    AlignmentResidual {
        common,
        containment,
    }
}

/// The stacked basis whose full rank lets `receiver` separate its streams
/// from the aligned interference.
pub fn receiver_stack(
    precoders: &PrecoderSet,
    gens: &Generators,
    chan: &ChannelSet,
    receiver: usize,
) -> CMatrix {
    let other = if receiver == 0 {
        &gens.first_inverse[0] * chan.link(0, 2) * precoders.direction(2)
    } else {
        &gens.first_inverse[receiver]
            * chan.link(receiver, receiver)
            * precoders.direction(receiver)
    };
    let a = &precoders.a;
    let mut stack = CMatrix::zeros(a.nrows(), a.ncols() + other.ncols());
    stack.view_mut((0, 0), a.shape()).copy_from(a);
    stack
        .view_mut((0, a.ncols()), other.shape())
        .copy_from(&other);
    stack
}

/// `σ_min / σ_max` of the receiver's stacked basis.
pub fn full_rank_check(
    precoders: &PrecoderSet,
    gens: &Generators,
    chan: &ChannelSet,
    receiver: usize,
) -> f64 {
    rank_ratio(&receiver_stack(precoders, gens, chan, receiver))
}

/// Generators, precoders and the dimensions they were built for.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub dims: SchemeDims,
    pub generators: Generators,
    pub precoders: PrecoderSet,
}

/// Designs precoders from a channel set using the all-ones seed.
pub fn align(chan: &ChannelSet, dims: &SchemeDims) -> Result<Alignment> {
    let generators = build_generators(chan, dims)?;
    let precoders = build_precoders(dims, &generators, &seed_vector(dims.length))?;
    Ok(Alignment {
        dims: *dims,
        generators,
        precoders,
    })
}

impl Alignment {
    /// Generator of the receiver's stacked basis: `F` at receiver 0,
    /// `Γ_{i,0}⁻¹ Γ_{i,i} S_i` elsewhere.
    pub fn receiver_generator(&self, chan: &ChannelSet, receiver: usize) -> CMatrix {
        if receiver == 0 {
            self.generators.feedback().clone()
        } else {
            &self.generators.first_inverse[receiver]
                * chan.link(receiver, receiver)
                * &self.generators.shaping[receiver]
        }
    }

    /// Vandermonde probe built from DFT bin 1 of the receiver generator and of every `T_{i,j}`.
    pub fn probe(&self, chan: &ChannelSet, receiver: usize) -> VandermondeProbe {
        let n = self.dims.length;
        let u = dft_matrix(n);
        let bin = |m: &CMatrix| (&u * m * u.adjoint())[(1 % n, 1 % n)];
        let theta = bin(&self.receiver_generator(chan, receiver));
        let phis: Vec<C64> = self.generators.products.iter().map(bin).collect();
        vandermonde_probe(theta, &phis, &self.dims)
    }
}
