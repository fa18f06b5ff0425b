//! Norms and error measures for the circulant and phase-model approximations.

use num_traits::Float;

use crate::linalg::{spectral_norm, to_frequency, CMatrix, C64};
use crate::waveform::{DecayEnvelope, GeneratorSequence};

/// Number of explicit terms in a tail sum before the integral remainder takes over.
const TAIL_TERMS: u64 = 1_000_000;

/// `[N⁻¹ trace(A†A)]^{1/2}`, the root-mean-square singular value.
pub fn weak_norm(a: &CMatrix) -> f64 {
    let n = a.nrows().max(1) as f64;
    (a.norm_squared() / n).sqrt()
}

/// Largest singular value.
pub fn strong_norm(a: &CMatrix) -> f64 {
    spectral_norm(a)
}

/// `Σ_{k ≥ start} k^{−η}`: explicit terms up to `start + 10⁶`, then the
/// integral of the remainder. Infinite for `η ≤ 1`.
pub fn tail_sum(start: u64, exponent: f64) -> f64 {
    if exponent <= 1.0 {
        return f64::INFINITY;
    }
    let start = start.max(1);
    let end = start + TAIL_TERMS;
    let explicit: f64 = (start..end).rev().map(|k| (k as f64).powf(-exponent)).sum();
    // ∫_{end − 1/2}^∞ x^{−η} dx (midpoint correction of the remaining terms)
    let edge = end as f64 - 0.5;
    explicit + edge.powf(1.0 - exponent) / (exponent - 1.0)
}

/// `(2a/N) Σ_{k=1}^{N−1} k^{1−η} + 2a Σ_{k≥N} k^{−η}`, the per-entry bound on
/// the circulant approximation error of an `N × N` Toeplitz matrix.
pub fn toeplitz_entry_bound(envelope: &DecayEnvelope, n: usize) -> f64 {
    let a = envelope.constant;
    let eta = envelope.exponent;
    let head: f64 = (1..n).map(|k| (k as f64).powf(1.0 - eta)).sum();
    let tail = tail_sum(n as u64, eta);
    let tail_term = if a == 0.0 { 0.0 } else { 2.0 * a * tail };
    2.0 * a * head / n as f64 + tail_term
}

/// `4a Σ_{k≥u} k^{−η}`, the bound on the phase-model error for half-support `u`.
pub fn phase_model_bound(envelope: &DecayEnvelope, u: u32) -> f64 {
    if envelope.constant == 0.0 {
        return 0.0;
    }
    4.0 * envelope.constant * tail_sum(u as u64, envelope.exponent)
}

/// Decay envelope shared by a delayed sequence and its zero-delay reference,
/// fitted on samples whose argument `q − τ̂` is at least one symbol from the origin.
pub fn phase_model_envelope(
    delayed: &GeneratorSequence,
    reference: &GeneratorSequence,
    exponent: f64,
) -> DecayEnvelope {
    let samples = [delayed, reference].into_iter().flat_map(|seq| {
        let span = seq.span() as i64;
        let tau = seq.relative_delay();
        (-span..=span)
            .map(move |q| (q as f64 - tau, seq.tap(q).norm()))
            .filter(|(x, _)| x.abs() >= 1.0)
    });
    DecayEnvelope::fit(samples, exponent)
}

/// Measured circulant-versus-Toeplitz error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproximationError {
    /// `|Γ̂ − Γ|` in the weak norm.
    pub weak_norm_error: f64,
    /// `max_{q,s} |Υ(q, s)|` with `Υ = U(Γ − Γ̂)U†`.
    pub max_entry: f64,
    /// `max_q |Υ(q, q)|`.
    pub max_diagonal: f64,
    /// Analytic per-entry bound; infinite when no envelope was supplied.
    pub per_entry_bound: f64,
}

/// Compares a Toeplitz matrix with its circulant approximation.
pub fn approximation_error(
    toeplitz: &CMatrix,
    circulant: &CMatrix,
    envelope: Option<&DecayEnvelope>,
) -> ApproximationError {
    let diff = circulant - toeplitz;
    let upsilon = to_frequency(&diff);
    let max_entry = upsilon.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let max_diagonal = upsilon
        .diagonal()
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    ApproximationError {
        weak_norm_error: weak_norm(&diff),
        max_entry,
        max_diagonal,
        per_entry_bound: envelope
            .map_or(f64::INFINITY, |e| toeplitz_entry_bound(e, toeplitz.nrows())),
    }
}

/// `max_k |Λ(k) − Λ₀(k)E_k(τ̂)|`.
pub fn phase_model_error(spectrum: &[C64], model: &[C64]) -> f64 {
    spectrum
        .iter()
        .zip(model)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::links::{build_circulant, build_toeplitz, phase_model};
    use crate::waveform::{Support, Waveform, WaveformKind};
    use alloc::vec::Vec;
    use nalgebra::DMatrix;
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
    fn identity_has_unit_weak_norm() {
        for n in [1usize, 4, 31] {
            assert!((weak_norm(&CMatrix::identity(n, n)) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn strong_norm_of_diagonal_is_largest_entry() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![
            C64::new(3.0, 0.0),
            C64::new(1.0, 0.0)
        ]));
        assert!((strong_norm(&d) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn tail_sum_matches_zeta_three() {
        // ζ(3) = 1.2020569031595942
        assert!((tail_sum(1, 3.0) - 1.202_056_903_159_594_2).abs() < 1e-13);
        let from_four = 1.202_056_903_159_594_2 - 1.0 - 0.125 - 1.0 / 27.0;
        assert!((tail_sum(4, 3.0) - from_four).abs() < 1e-13);
        assert!(tail_sum(4, 1.0).is_infinite());
    }

    #[test]
    fn identical_matrices_have_zero_error() {
        let t = build_toeplitz(&rrc(4), 0.2, 16).unwrap();
        let e = approximation_error(&t, &t, None);
        assert_eq!(e.weak_norm_error, 0.0);
        assert!(e.max_entry < 1e-15);
    }

    #[test]
    fn circulant_error_shrinks_with_length_and_respects_bound() {
        let w = rrc(8);
        let mut errors = Vec::new();
        for n in [64usize, 128, 256, 512] {
            let t = build_toeplitz(&w, 0.37, n).unwrap();
            let c = build_circulant(&w, 0.37, n).unwrap();
            let env = DecayEnvelope::of_sequence(&c.sequence, 3.0);
            let e = approximation_error(&t, &c.matrix, Some(&env));
            if n <= 256 {
                assert!(
                    e.max_entry <= e.per_entry_bound,
                    "n={n}: {} > {}",
                    e.max_entry,
                    e.per_entry_bound
                );
            }
            errors.push(e.weak_norm_error);
        }
        assert!(errors[3] < errors[0]);
        for pair in errors.windows(2) {
            assert!(pair[1] <= pair[0] * 1.1);
        }
    }

    #[test]
    fn ideal_sinc_phase_model_is_exact() {
        let w = Waveform::ideal_sinc();
        let base = build_circulant(&w, 0.0, 33).unwrap();
        let link = build_circulant(&w, -0.61, 33).unwrap();
        let err = phase_model_error(link.spectrum(), &phase_model(base.spectrum(), -0.61));
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn truncated_phase_model_error_levels_off_near_aliasing_floor() {
        // Symbol-rate samples of the excess band alias, so the error settles
        // near |sin(π τ̂)| instead of vanishing as the support grows.
        let tau = 0.4;
        let floor = (core::f64::consts::PI * tau).sin();
        for u in [8u32, 16] {
            let w = rrc(u);
            let base = build_circulant(&w, 0.0, 64).unwrap();
            let link = build_circulant(&w, tau, 64).unwrap();
            let err = phase_model_error(link.spectrum(), &phase_model(base.spectrum(), tau));
            assert!((err - floor).abs() < 0.05, "u={u}: {err}");
        }
    }

    proptest! {
        #[test]
        fn weak_norm_never_exceeds_strong_norm(entries in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 36)) {
            let a = CMatrix::from_iterator(6, 6, entries.into_iter().map(|(r, i)| C64::new(r, i)));
            prop_assert!(weak_norm(&a) <= strong_norm(&a) * (1.0 + 1e-12));
        }
    }
}
