//! Channel realizations and the per-link matrices seen after matched filtering.

pub mod approx;
mod links;
mod realization;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use approx::{
    approximation_error, phase_model_bound, phase_model_envelope, phase_model_error, strong_norm,
    tail_sum, toeplitz_entry_bound, weak_norm, ApproximationError,
};
pub use links::{
    build_circulant, build_toeplitz, noise_covariance, phase_diagonal, phase_model, CirculantLink,
    FrequencyIndex,
};
pub use realization::{draw_realization, ChannelRealization, MIN_GAIN};

use crate::error::{invalid, Error, Result};
use crate::linalg::{from_spectrum, rank_ratio, CMatrix, C64};
use crate::waveform::{gamma_sequence, Waveform};

/// Fidelity of the link model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelMode {
    /// The effective matrix of the physical framing: circulant under CPS for
    /// time-limited pulses, the full Toeplitz matrix for band-limited ones.
    ToeplitzExact,
    /// Circulant matrices of the wrapped generator sequences.
    Circulant,
    /// `U† Λ₀ E(τ̂) U`: the delay acts as a pure phase ramp.
    IdealPhase,
}

impl ModelMode {
    pub const ALL: [ModelMode; 3] = [
        ModelMode::ToeplitzExact,
        ModelMode::Circulant,
        ModelMode::IdealPhase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelMode::ToeplitzExact => "toeplitz-exact",
            ModelMode::Circulant => "circulant",
            ModelMode::IdealPhase => "ideal-phase",
        }
    }
}

impl fmt::Display for ModelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid("mode", alloc::format!("unknown model mode `{s}`")))
    }
}

/// All `K²` link matrices `Γ_{i,j}` of one realization at one fidelity.
///
/// The matrices exclude the fading gains; those enter only at the receiver.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    users: usize,
    length: usize,
    mode: ModelMode,
    delays: Vec<f64>,
    matrices: Vec<CMatrix>,
    spectra: Vec<Option<Vec<C64>>>,
    base_spectrum: Vec<C64>,
}

impl ChannelSet {
    pub fn build(
        realization: &ChannelRealization,
        waveform: &Waveform,
        length: usize,
        mode: ModelMode,
    ) -> Result<Self> {
        let k = realization.users();
        let delays: Vec<f64> = (0..k * k)
            .map(|idx| realization.link_delay(idx / k, idx % k))
            .collect();
        Self::from_link_delays(k, &delays, waveform, length, mode)
    }

    /// Builds the set from normalized link delays `τ̂_{i,j}` in row-major order.
    pub fn from_link_delays(
        users: usize,
        delays: &[f64],
        waveform: &Waveform,
        length: usize,
        mode: ModelMode,
    ) -> Result<Self> {
        if delays.len() != users * users {
            return Err(Error::LengthMismatch {
                expected: users * users,
                found: delays.len(),
            });
        }
        let base_spectrum = gamma_sequence(waveform, 0.0, length)?.spectrum().to_vec();
        let mut matrices = Vec::with_capacity(delays.len());
        let mut spectra = Vec::with_capacity(delays.len());
        for &tau in delays {
            match mode {
                ModelMode::IdealPhase => {
                    let lambda = phase_model(&base_spectrum, tau);
                    matrices.push(from_spectrum(&lambda));
                    spectra.push(Some(lambda));
                }
                ModelMode::ToeplitzExact if !waveform.is_time_limited() => {
                    matrices.push(build_toeplitz(waveform, tau, length)?);
                    spectra.push(None);
                }
                _ => {
                    let link = build_circulant(waveform, tau, length)?;
                    spectra.push(Some(link.spectrum().to_vec()));
                    matrices.push(link.matrix);
                }
            }
        }
        Ok(ChannelSet {
            users,
            length,
            mode,
            delays: delays.to_vec(),
            matrices,
            spectra,
            base_spectrum,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    /// `Γ_{i,j}`.
    pub fn link(&self, i: usize, j: usize) -> &CMatrix {
        &self.matrices[i * self.users + j]
    }

    /// `τ̂^{[i]}_{i,j}`.
    pub fn link_delay(&self, i: usize, j: usize) -> f64 {
        self.delays[i * self.users + j]
    }

    /// Eigenvalues of `Γ_{i,j}` when it is circulant.
    pub fn spectrum(&self, i: usize, j: usize) -> Option<&[C64]> {
        self.spectra[i * self.users + j].as_deref()
    }

    /// `Λ₀`, the spectrum of the zero-delay generator.
    pub fn base_spectrum(&self) -> &[C64] {
        &self.base_spectrum
    }

    /// Smallest `σ_min / σ_max` over all links, with the link that attains it.
    pub fn worst_link(&self) -> (usize, usize, f64) {
        (0..self.users * self.users)
            .map(|idx| {
                (
                    idx / self.users,
                    idx % self.users,
                    rank_ratio(&self.matrices[idx]),
                )
            })
            .fold((0, 0, f64::INFINITY), |best, cur| {
                if cur.2 < best.2 {
                    cur
                } else {
                    best
                }
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dft_matrix, diagonal, is_full_rank, CVector};
    use crate::waveform::{Support, WaveformKind};

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
    fn mode_names_round_trip() {
        for m in ModelMode::ALL {
            assert_eq!(m.name().parse::<ModelMode>().unwrap(), m);
        }
        assert!("toeplitz".parse::<ModelMode>().is_err());
    }

    #[test]
    fn raised_cosine_links_are_full_rank_with_nonzero_spectrum() {
        for seed in 0..100u64 {
            let r = draw_realization(3, 1, seed).unwrap();
            let u = if seed % 2 == 0 { 4 } else { 8 };
            let w = Waveform::new(WaveformKind::RaisedCosine, 0.25, Support::Truncated(u), 1.0)
                .unwrap();
            let set = ChannelSet::build(&r, &w, 64, ModelMode::Circulant).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let min = set
                        .spectrum(i, j)
                        .unwrap()
                        .iter()
                        .map(|l| l.norm())
                        .fold(f64::INFINITY, f64::min);
                    assert!(min > 0.0, "seed {seed} link ({i},{j})");
                    assert!(is_full_rank(set.link(i, j)));
                }
            }
        }
    }

    #[test]
    fn frequency_domain_view_of_circulant_model_is_diagonal() {
        let r = draw_realization(3, 1, 11).unwrap();
        let set = ChannelSet::build(&r, &rrc(4), 24, ModelMode::Circulant).unwrap();
        let u = dft_matrix(24);
        let x = CVector::from_fn(24, |q, _| {
            C64::new((q as f64 * 0.7).sin(), (q as f64 * 0.3).cos())
        });
        let y = set.link(0, 1) * &x;
        let lhs = &u * y;
        let rhs = diagonal(set.spectrum(0, 1).unwrap()) * (&u * &x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn toeplitz_exact_uses_circulant_for_time_limited_and_toeplitz_for_ideal() {
        let r = draw_realization(3, 1, 2).unwrap();
        let a = ChannelSet::build(&r, &rrc(4), 16, ModelMode::ToeplitzExact).unwrap();
        let b = ChannelSet::build(&r, &rrc(4), 16, ModelMode::Circulant).unwrap();
        assert_eq!(a.link(1, 2), b.link(1, 2));
        let ideal =
            ChannelSet::build(&r, &Waveform::ideal_sinc(), 15, ModelMode::ToeplitzExact).unwrap();
        assert!(ideal.spectrum(0, 1).is_none());
        let t = build_toeplitz(&Waveform::ideal_sinc(), r.link_delay(0, 1), 15).unwrap();
        assert_eq!(ideal.link(0, 1), &t);
    }

    #[test]
    fn ideal_phase_links_share_the_base_spectrum_magnitude() {
        let r = draw_realization(4, 1, 5).unwrap();
        let set = ChannelSet::build(&r, &rrc(4), 33, ModelMode::IdealPhase).unwrap();
        for i in 0..4 {
            assert!((set.link(i, i) - from_spectrum(set.base_spectrum())).norm() < 1e-12);
            for j in 0..4 {
                for (l, l0) in set.spectrum(i, j).unwrap().iter().zip(set.base_spectrum()) {
                    assert!((l.norm() - l0.norm()).abs() < 1e-12);
                }
            }
        }
        assert!(set.worst_link().2 > 1e-9);
    }
}
