use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use super::frame::{convolve, frame_block, strip, Framing};
use crate::channel::{noise_covariance, ChannelRealization, ChannelSet, ModelMode};
use crate::error::{invalid, Result};
use crate::linalg::{hermitian_sqrt, CMatrix, CVector, C64};
use crate::waveform::{gamma_sequence, GeneratorSequence, Waveform};

/// Circularly-symmetric complex Gaussian sample with unit variance.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * FRAC_1_SQRT_2
}

/// Receiver noise with covariance `σ² Φ̃` per antenna, antennas independent.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    variance: f64,
    shape: CMatrix,
    root: CMatrix,
}

impl NoiseModel {
    pub fn white(length: usize, variance: f64) -> Result<Self> {
        Self::with_shape(CMatrix::identity(length, length), variance)
    }

    /// Matched-filter noise, `Φ = σ² Γ̃₀`.
    pub fn matched(w: &Waveform, length: usize, variance: f64) -> Result<Self> {
        Self::with_shape(noise_covariance(w, length, 1.0)?, variance)
    }

    /// White in the ideal-phase model, matched-filter colored otherwise.
    pub fn for_mode(mode: ModelMode, w: &Waveform, length: usize, variance: f64) -> Result<Self> {
        match mode {
            ModelMode::IdealPhase => Self::white(length, variance),
            _ => Self::matched(w, length, variance),
        }
    }

    fn with_shape(shape: CMatrix, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(invalid("sigma2", "noise variance must be non-negative"));
        }
        let root = hermitian_sqrt(&shape);
        Ok(NoiseModel {
            variance,
            shape,
            root,
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `Φ̃`, the covariance at unit variance.
    pub fn shape(&self) -> &CMatrix {
        &self.shape
    }

    /// `σ² Φ̃`.
    pub fn covariance(&self) -> CMatrix {
        &self.shape * C64::new(self.variance, 0.0)
    }

    pub fn with_variance(&self, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(invalid("sigma2", "noise variance must be non-negative"));
        }
        Ok(NoiseModel {
            variance,
            shape: self.shape.clone(),
            root: self.root.clone(),
        })
    }

    /// One `N × M` draw (a column per antenna).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, antennas: usize) -> CMatrix {
        let n = self.shape.nrows();
        let white = CMatrix::from_fn(n, antennas, |_, _| complex_normal(rng));
        &self.root * white * C64::new(self.variance.sqrt(), 0.0)
    }
}

/// Applies the K-user channel to precoded blocks at a given model fidelity.
///
/// In `toeplitz-exact` mode with a time-limited waveform the framed block is
/// run through the actual linear convolution and the extension stripped
/// afterwards; every other case multiplies the body by the link matrix.
#[derive(Debug, Clone)]
pub struct LinkSimulator {
    realization: ChannelRealization,
    channel: ChannelSet,
    framing: Framing,
    taps: Option<Vec<GeneratorSequence>>,
}

impl LinkSimulator {
    pub fn new(
        realization: &ChannelRealization,
        waveform: &Waveform,
        length: usize,
        mode: ModelMode,
        framing: Framing,
    ) -> Result<Self> {
        let channel = ChannelSet::build(realization, waveform, length, mode)?;
        let convolves = mode == ModelMode::ToeplitzExact && waveform.is_time_limited();
        if convolves && framing == Framing::None {
            return Err(invalid(
                "framing",
                "time-limited links need a cyclic prefix to be simulated by convolution",
            ));
        }
        let taps = if convolves {
            let k = realization.users();
            Some(
                (0..k * k)
                    .map(|idx| {
                        gamma_sequence(waveform, channel.link_delay(idx / k, idx % k), length)
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(LinkSimulator {
            realization: realization.clone(),
            channel,
            framing,
            taps,
        })
    }

    pub fn realization(&self) -> &ChannelRealization {
        &self.realization
    }

    pub fn channel(&self) -> &ChannelSet {
        &self.channel
    }

    pub fn framing(&self) -> Framing {
        self.framing
    }

    pub fn length(&self) -> usize {
        self.channel.len()
    }

    /// Symbol intervals occupied by one block on air.
    pub fn block_len(&self) -> usize {
        self.framing.block_len(self.channel.len())
    }

    /// Output of link `(i, j)` for a body `x`, before the fading gain.
    pub fn link_output(&self, i: usize, j: usize, x: &CVector) -> CVector {
        match &self.taps {
            Some(taps) => {
                let k = self.channel.users();
                let block = frame_block(x, self.framing).expect("extension fits the block");
                let y = convolve(&taps[i * k + j], &block);
                strip(&y, self.framing, x.len()).expect("block length is consistent")
            }
            None => self.channel.link(i, j) * x,
        }
    }

    /// Noiseless received `N × M` blocks, `Y_i = Σ_j Γ_{i,j} X_j H_{i,j}^T`.
    pub fn propagate(&self, transmitted: &[CMatrix]) -> Vec<CMatrix> {
        (0..self.channel.users())
            .map(|i| self.received_from(i, transmitted, |_| true))
            .collect()
    }

    /// Receiver `i`'s noiseless block restricted to transmitters accepted by `keep`.
    pub fn received_from<F: Fn(usize) -> bool>(
        &self,
        i: usize,
        transmitted: &[CMatrix],
        keep: F,
    ) -> CMatrix {
        let n = self.channel.len();
        let m = self.realization.antennas();
        let mut y = CMatrix::zeros(n, m);
        for (j, x) in transmitted.iter().enumerate().filter(|(j, _)| keep(*j)) {
            let mut through = CMatrix::zeros(n, x.ncols());
            for (p, col) in x.column_iter().enumerate() {
                through.set_column(p, &self.link_output(i, j, &col.into_owned()));
            }
            y += through * self.realization.block(i, j).transpose();
        }
        y
    }

    /// Received blocks with independent noise draws at every receiver.
    pub fn apply_channel<R: Rng + ?Sized>(
        &self,
        transmitted: &[CMatrix],
        noise: &NoiseModel,
        rng: &mut R,
    ) -> Vec<CMatrix> {
        let m = self.realization.antennas();
        self.propagate(transmitted)
            .into_iter()
            .map(|y| {
                if noise.variance() == 0.0 {
                    y
                } else {
                    y + noise.sample(rng, m)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_realization;
    use crate::waveform::{Support, WaveformKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rrc(u: u32) -> Waveform {
        Waveform::new(
            WaveformKind::RootRaisedCosine,
            0.25,
            Support::Truncated(u),
            1.0,
        )
        .unwrap()
    }

    fn random_blocks(k: usize, n: usize, m: usize, seed: u64) -> Vec<CMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..k)
            .map(|_| CMatrix::from_fn(n, m, |_, _| complex_normal(&mut rng)))
            .collect()
    }

    #[test]
    fn trivial_identity_link_passes_the_body() {
        let r = ChannelRealization::from_parts(
            3,
            1.0,
            alloc::vec![C64::new(1.0, 0.0); 9],
            alloc::vec![0.0; 9],
        )
        .unwrap();
        let sim = LinkSimulator::new(
            &r,
            &Waveform::ideal_sinc(),
            8,
            ModelMode::Circulant,
            Framing::None,
        )
        .unwrap();
        let x = random_blocks(1, 8, 1, 3).remove(0);
        let y = sim.received_from(0, core::slice::from_ref(&x), |_| true);
        assert!((y - x).norm() < 1e-14);
    }

    #[test]
    fn cps_convolution_matches_circulant_model() {
        let w = rrc(8);
        for n in [64usize, 128] {
            let r = draw_realization(3, 1, 40).unwrap();
            let exact =
                LinkSimulator::new(&r, &w, n, ModelMode::ToeplitzExact, Framing::Cps(8)).unwrap();
            let circ =
                LinkSimulator::new(&r, &w, n, ModelMode::Circulant, Framing::Cps(8)).unwrap();
            let x = random_blocks(3, n, 1, 9);
            let a = exact.propagate(&x);
            let b = circ.propagate(&x);
            for (ya, yb) in a.iter().zip(&b) {
                let worst = (ya - yb).iter().map(|v| v.norm()).fold(0.0, f64::max);
                assert!(worst < 1e-12, "n={n}: {worst}");
            }
        }
    }

    #[test]
    fn dropping_the_suffix_breaks_circulant_equivalence() {
        let w = rrc(8);
        let r = draw_realization(3, 1, 41).unwrap();
        let x = random_blocks(3, 128, 1, 10);
        let circ = LinkSimulator::new(&r, &w, 128, ModelMode::Circulant, Framing::Cps(8)).unwrap();
        let reference = circ.propagate(&x);
        let mismatch = |framing| {
            let exact = LinkSimulator::new(&r, &w, 128, ModelMode::ToeplitzExact, framing).unwrap();
            exact
                .propagate(&x)
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        };
        let with_cps = mismatch(Framing::Cps(8));
        let prefix_only = mismatch(Framing::PrefixOnly(8));
        assert!(
            prefix_only >= 10.0 * with_cps.max(1e-16),
            "{prefix_only} vs {with_cps}"
        );
        assert!(prefix_only > 1e-2);
    }

    #[test]
    fn convolution_mode_needs_an_extension() {
        let r = draw_realization(3, 1, 1).unwrap();
        assert!(
            LinkSimulator::new(&r, &rrc(4), 16, ModelMode::ToeplitzExact, Framing::None).is_err()
        );
        assert!(LinkSimulator::new(
            &r,
            &Waveform::ideal_sinc(),
            16,
            ModelMode::ToeplitzExact,
            Framing::None
        )
        .is_ok());
    }

    #[test]
    fn empirical_noise_covariance_matches_model() {
        let w = rrc(4);
        let noise = NoiseModel::matched(&w, 8, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let runs = 10_000;
        let mut acc = CMatrix::zeros(8, 8);
        for _ in 0..runs {
            let z = noise.sample(&mut rng, 1);
            acc += &z * z.adjoint();
        }
        acc /= C64::new(runs as f64, 0.0);
        let phi = noise.covariance();
        let rel = (acc - &phi).norm() / phi.norm();
        assert!(rel < 0.05, "{rel}");
    }

    #[test]
    fn ideal_phase_noise_is_white() {
        let noise = NoiseModel::for_mode(ModelMode::IdealPhase, &rrc(4), 16, 2.0).unwrap();
        assert!(
            (noise.covariance() - CMatrix::identity(16, 16) * C64::new(2.0, 0.0)).norm() < 1e-15
        );
    }

    #[test]
    fn received_energy_adds_over_single_user_contributions() {
        let r = draw_realization(3, 1, 5).unwrap();
        let sim =
            LinkSimulator::new(&r, &rrc(4), 16, ModelMode::Circulant, Framing::Cps(4)).unwrap();
        let x = random_blocks(3, 16, 1, 8);
        let total = sim.received_from(0, &x, |_| true);
        let mut sum = CMatrix::zeros(16, 1);
        for j in 0..3 {
            let alone = sim.received_from(0, &x, |t| t == j);
            let expected =
                r.gain(0, j).norm_sqr() * (sim.channel().link(0, j) * &x[j]).norm_squared();
            assert!((alone.norm_squared() - expected).abs() < 1e-10 * expected);
            sum += alone;
        }
        assert!((total - sum).norm() < 1e-12);
    }
}
