use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::linalg::{circulant, CMatrix, C64};
use crate::waveform::{gamma_sequence, GeneratorSequence, Waveform};

/// How DFT bin `k` maps to a frequency in the phase diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyIndex {
    /// Bins above `N/2` stand for negative frequencies `k − N`. This is the
    /// index for which a delayed band-limited pulse is an exact phase ramp.
    #[default]
    Centered,
    /// Raw bin index `k = 0..N−1`.
    Natural,
}

impl FrequencyIndex {
    fn frequency(self, k: usize, n: usize) -> f64 {
        match self {
            FrequencyIndex::Natural => k as f64,
            FrequencyIndex::Centered => {
                if 2 * k <= n {
                    k as f64
                } else {
                    k as f64 - n as f64
                }
            }
        }
    }
}

/// A circulant link matrix together with the sequence that generates it.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantLink {
    pub sequence: GeneratorSequence,
    pub matrix: CMatrix,
}

impl CirculantLink {
    /// Eigenvalues of the link on the DFT basis.
    pub fn spectrum(&self) -> &[C64] {
        self.sequence.spectrum()
    }
}

/// `N × N` Toeplitz matrix with `(r, c)` entry `γ(r − c)` for delay `τ̂`.
///
/// For truncated waveforms this is the banded linear-convolution matrix; for
/// ideal ones every lag up to `N − 1` is populated.
pub fn build_toeplitz(w: &Waveform, tau_hat: f64, n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::Dimension("matrix size must be positive".into()));
    }
    if !(tau_hat.is_finite() && tau_hat.abs() < 1.0) {
        return Err(invalid("tau_hat", "relative delay must lie in (-1, 1)"));
    }
    let ts = w.symbol_interval();
    let lags: Vec<C64> = (0..2 * n - 1)
        .map(|idx| {
            let lag = idx as f64 - (n - 1) as f64;
            w.autocorrelation((lag - tau_hat) * ts)
        })
        .collect();
    Ok(CMatrix::from_fn(n, n, |r, c| lags[r + n - 1 - c]))
}

/// Circulant link matrix whose first column is the wrapped generator sequence.
pub fn build_circulant(w: &Waveform, tau_hat: f64, n: usize) -> Result<CirculantLink> {
    let sequence = gamma_sequence(w, tau_hat, n)?;
    let matrix = circulant(sequence.generator());
    Ok(CirculantLink { sequence, matrix })
}

/// `E(τ̂) = diag{exp(−i 2π f_k τ̂ / N)}` with `f_k` chosen by `index`.
pub fn phase_diagonal(tau_hat: f64, n: usize, index: FrequencyIndex) -> Vec<C64> {
    (0..n)
        .map(|k| {
            let f = index.frequency(k, n);
            C64::from_polar(1.0, -2.0 * PI * f * tau_hat / n as f64)
        })
        .collect()
}

/// `Λ₀ E(τ̂)` on the centred frequency index.
pub fn phase_model(base: &[C64], tau_hat: f64) -> Vec<C64> {
    base.iter()
        .zip(phase_diagonal(
            tau_hat,
            base.len(),
            FrequencyIndex::Centered,
        ))
        .map(|(l, e)| l * e)
        .collect()
}

/// Noise covariance `σ² Γ̃₀` of the matched-filter samples: the Hermitian
/// banded Toeplitz matrix of the zero-delay autocorrelation.
pub fn noise_covariance(w: &Waveform, n: usize, variance: f64) -> Result<CMatrix> {
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(invalid("sigma2", "noise variance must be non-negative"));
    }
    if let Some(u) = w.half_support() {
        if n < 2 * u as usize {
            return Err(Error::Dimension(alloc::format!(
                "N = {n} is shorter than 2u = {}",
                2 * u
            )));
        }
    }
    let band = w.half_support().map_or(n, |u| u as usize);
    let ts = w.symbol_interval();
    let lags: Vec<C64> = (0..band.min(n))
        .map(|k| w.autocorrelation(k as f64 * ts) * variance)
        .collect();
    Ok(CMatrix::from_fn(n, n, |r, c| {
        let d = r.abs_diff(c);
        match lags.get(d) {
            Some(v) if r >= c => *v,
            Some(v) => v.conj(),
            None => C64::new(0.0, 0.0),
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dft, dft_matrix, diagonal};
    use crate::waveform::{sinc, Support, WaveformKind};
    use proptest::prelude::*;

    fn rrc(u: u32) -> Waveform {
        Waveform::new(
            WaveformKind::RootRaisedCosine,
            0.25,
            Support::Truncated(u),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_delay_sinc_toeplitz_is_identity() {
        let t = build_toeplitz(&Waveform::ideal_sinc(), 0.0, 5).unwrap();
        assert!((t - CMatrix::identity(5, 5)).norm() < 1e-15);
    }

    #[test]
    fn half_symbol_sinc_toeplitz_holds_shifted_samples() {
        let t = build_toeplitz(&Waveform::ideal_sinc(), 0.5, 4).unwrap();
        for k in 0..4 {
            let expected = sinc(k as f64 - 0.5);
            assert!((t[(k, 0)].re - expected).abs() < 1e-15);
            assert!((t[(0, k)].re - sinc(-(k as f64) - 0.5)).abs() < 1e-15);
        }
        // frozen: sinc(-0.5), sinc(0.5), sinc(1.5), sinc(2.5)
        let frozen = [
            0.636_619_772_367_581_3,
            0.636_619_772_367_581_3,
            -0.212_206_590_789_193_8,
            0.127_323_954_473_516_27,
        ];
        for (k, v) in frozen.iter().enumerate() {
            assert!((t[(k, 0)].re - v).abs() < 1e-15);
        }
    }

    #[test]
    fn toeplitz_entries_are_shift_invariant() {
        let t = build_toeplitz(&rrc(4), 0.3, 12).unwrap();
        for r in 0..11 {
            for c in 0..11 {
                assert_eq!(t[(r, c)], t[(r + 1, c + 1)]);
            }
        }
        assert_eq!(t[(6, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn zero_delay_ideal_circulant_is_identity() {
        let link = build_circulant(&Waveform::ideal_sinc(), 0.0, 8).unwrap();
        assert!((&link.matrix - CMatrix::identity(8, 8)).norm() < 1e-15);
        for l in link.spectrum() {
            assert!((l - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn truncated_circulant_is_full_rank() {
        let link = build_circulant(&rrc(4), 0.3, 16).unwrap();
        let s = crate::linalg::singular_values(&link.matrix);
        assert!(*s.last().unwrap() > 0.0);
        assert!(crate::linalg::is_full_rank(&link.matrix));
    }

    #[test]
    fn circulant_rows_are_cyclic_shifts_and_diagonalize() {
        let link = build_circulant(&rrc(4), -0.35, 16).unwrap();
        let m = &link.matrix;
        for r in 0..16 {
            for c in 0..16 {
                assert_eq!(m[((r + 1) % 16, (c + 1) % 16)], m[(r, c)]);
            }
        }
        let lambda = dft(link.sequence.generator());
        for (a, b) in lambda.iter().zip(link.spectrum()) {
            assert!((a - b).norm() < 1e-12);
        }
        let u = dft_matrix(16);
        let rebuilt = u.adjoint() * diagonal(link.spectrum()) * &u;
        assert!((m - rebuilt).norm() < 1e-10);
    }

    #[test]
    fn short_circulant_is_a_dimension_error() {
        assert!(matches!(
            build_circulant(&rrc(4), 0.1, 6),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn phase_diagonal_at_zero_is_identity() {
        for e in phase_diagonal(0.0, 9, FrequencyIndex::Centered) {
            assert_eq!(e, C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn natural_index_phases_follow_direct_substitution() {
        let e = phase_diagonal(0.5, 4, FrequencyIndex::Natural);
        for (k, v) in e.iter().enumerate() {
            let expected = C64::from_polar(1.0, -PI * k as f64 / 4.0);
            assert!((v - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn centered_phase_model_is_exact_for_ideal_sinc() {
        let w = Waveform::ideal_sinc();
        for n in [5usize, 9, 17] {
            let base = build_circulant(&w, 0.0, n).unwrap();
            let link = build_circulant(&w, 0.43, n).unwrap();
            let model = phase_model(base.spectrum(), 0.43);
            for (a, b) in model.iter().zip(link.spectrum()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn noise_covariance_is_banded_hermitian_psd() {
        let w = rrc(4);
        let phi = noise_covariance(&w, 16, 1.0).unwrap();
        for r in 0..16 {
            assert!((phi[(r, r)].re - 1.0).abs() < 1e-12);
            for c in 0..16 {
                assert_eq!(phi[(r, c)], phi[(c, r)].conj());
                if r.abs_diff(c) >= 4 {
                    assert_eq!(phi[(r, c)], C64::new(0.0, 0.0));
                }
            }
        }
        let eig = phi.clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
        let scaled = noise_covariance(&w, 16, 0.25).unwrap();
        assert!((scaled - phi * C64::new(0.25, 0.0)).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn phase_diagonals_compose_additively(a in -1.9f64..1.9, b in -1.9f64..1.9, n in 2usize..40) {
            for index in [FrequencyIndex::Centered, FrequencyIndex::Natural] {
                let ea = phase_diagonal(a, n, index);
                let eb = phase_diagonal(b, n, index);
                let eab = phase_diagonal(a + b, n, index);
                for k in 0..n {
                    prop_assert!((ea[k] * eb[k] - eab[k]).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn autocorrelation_is_conjugate_symmetric(tau in -6.0f64..6.0) {
            let w = rrc(6);
            let a = w.autocorrelation(tau);
            let b = w.autocorrelation(-tau);
            prop_assert!((a - b.conj()).norm() < 1e-12);
        }

        #[test]
        fn circulant_links_diagonalize_on_dft_basis(tau in -0.99f64..0.99, u in 1u32..6, extra in 0usize..8) {
            let n = 2 * u as usize + extra;
            let link = build_circulant(&rrc(u), tau, n).unwrap();
            let dft_u = dft_matrix(n);
            let rebuilt = dft_u.adjoint() * diagonal(link.spectrum()) * &dft_u;
            prop_assert!((&link.matrix - rebuilt).norm() < 1e-10);
        }
    }
}
