//! Dense complex linear algebra helpers shared by the channel, aligner and
//! link-simulation modules.
//!
//! The unitary DFT matrix follows `U(q, s) = exp(-i 2π q s / N) / sqrt(N)` with
//! zero-based indices, and the (unnormalized) DFT of a sequence is
//! `λ(k) = Σ_q g(q) exp(-i 2π q k / N)`. With these conventions a circulant
//! matrix whose first column is `g` factors as `U† diag(λ) U`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Float;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// A matrix is treated as full rank iff `σ_min / σ_max` exceeds this ratio.
pub const RANK_THRESHOLD: f64 = 1e-9;

/// `exp(-i 2π idx / n)`, with the index reduced modulo `n` before the angle is formed.
pub fn twiddle(n: usize, idx: usize) -> C64 {
    let r = idx % n;
    let angle = -2.0 * PI * (r as f64) / (n as f64);
    C64::new(angle.cos(), angle.sin())
}

/// Unnormalized forward DFT.
pub fn dft(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .fold(C64::new(0.0, 0.0), |acc, (q, v)| {
                    acc + v * twiddle(n, q * k)
                })
        })
        .collect()
}

/// Inverse of [`dft`], including the `1/N` factor.
pub fn idft(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    let scale = 1.0 / n as f64;
    (0..n)
        .map(|q| {
            x.iter()
                .enumerate()
                .fold(C64::new(0.0, 0.0), |acc, (k, v)| {
                    acc + v * twiddle(n, q * k).conj()
                })
                * scale
        })
        .collect()
}

/// The unitary DFT matrix `U` of dimension `n`.
pub fn dft_matrix(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |q, s| twiddle(n, q * s) * scale)
}

/// Circulant matrix with first column `g`: entry `(r, c) = g[(r - c) mod N]`.
pub fn circulant(g: &[C64]) -> CMatrix {
    let n = g.len();
    CMatrix::from_fn(n, n, |r, c| g[(r + n - c) % n])
}

/// `U† diag(spectrum) U`, i.e. the circulant matrix with the given eigenvalues.
pub fn from_spectrum(spectrum: &[C64]) -> CMatrix {
    circulant(&idft(spectrum))
}

/// `U m U†`, the representation of `m` on the DFT basis.
pub fn to_frequency(m: &CMatrix) -> CMatrix {
    let u = dft_matrix(m.nrows());
    &u * m * u.adjoint()
}

pub fn diagonal(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    s
}

/// `σ_min / σ_max` over `min(rows, cols)` singular values; zero for the zero matrix.
pub fn rank_ratio(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if max > 0.0 => min / max,
        _ => 0.0,
    }
}

pub fn is_full_rank(m: &CMatrix) -> bool {
    rank_ratio(m) > RANK_THRESHOLD
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Inverse of a square matrix, or `None` when it is numerically singular.
pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    if !is_full_rank(m) {
        return None;
    }
    m.clone().try_inverse()
}

/// Principal square root of a Hermitian positive semidefinite matrix.
///
/// Negative eigenvalues produced by roundoff are clamped to zero.
pub fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let roots: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&l| C64::new(l.max(0.0).sqrt(), 0.0))
        .collect();
    &eig.eigenvectors * diagonal(&roots) * eig.eigenvectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dft_round_trip() {
        let x = vec![
            c(1.0, 0.5),
            c(-0.3, 2.0),
            c(0.0, -1.0),
            c(4.0, 0.0),
            c(0.25, 0.25),
        ];
        let back = idft(&dft(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn dft_matrix_is_unitary() {
        let u = dft_matrix(7);
        let err = (&u * u.adjoint() - CMatrix::identity(7, 7)).norm();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn circulant_diagonalizes_on_dft_basis() {
        let g = vec![
            c(1.0, 0.0),
            c(0.2, -0.1),
            c(0.0, 0.0),
            c(-0.4, 0.3),
            c(0.05, 0.0),
            c(0.7, 0.0),
        ];
        let lambda = dft(&g);
        let u = dft_matrix(g.len());
        let rebuilt = u.adjoint() * diagonal(&lambda) * &u;
        assert!((circulant(&g) - rebuilt).norm() < 1e-12);
    }

    #[test]
    fn rank_ratio_of_singular_matrix_is_tiny() {
        let m = CMatrix::from_fn(3, 3, |r, _| c(r as f64 + 1.0, 0.0));
        assert!(rank_ratio(&m) < RANK_THRESHOLD);
        assert!(!is_full_rank(&m));
        assert!(inverse(&m).is_none());
        assert!(is_full_rank(&CMatrix::identity(4, 4)));
    }

    #[test]
    fn hermitian_sqrt_squares_back() {
        let a = CMatrix::from_fn(4, 4, |r, col| {
            c((r * 3 + col) as f64 * 0.1, (r as f64) - (col as f64))
        });
        let psd = &a * a.adjoint();
        let root = hermitian_sqrt(&psd);
        assert!((&root * &root - &psd).norm() < 1e-10);
    }
}
