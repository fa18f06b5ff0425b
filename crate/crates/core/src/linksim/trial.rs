use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::frame::{unit_columns, Framing};
use super::propagate::{complex_normal, LinkSimulator, NoiseModel};
use super::receiver::{stream_sinr, ZeroForcingReceiver};
use crate::aligner::{align, scheme_dims, Alignment, SchemeDims};
use crate::channel::{draw_realization, ChannelRealization, ChannelSet, ModelMode};
use crate::error::{invalid, Error, Result};
use crate::linalg::{inverse, CMatrix, C64};
use crate::waveform::Waveform;

/// Symbol alphabet for the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Constellation {
    /// Unit-variance circularly-symmetric complex Gaussian codebook entries.
    #[default]
    Gaussian,
    /// Unit-energy QPSK.
    Qpsk,
}

impl Constellation {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_fn(rows, cols, |_, _| match self {
            Constellation::Gaussian => complex_normal(rng),
            Constellation::Qpsk => {
                let bits: u8 = rng.random_range(0..4);
                let re = if bits & 1 == 0 { h } else { -h };
                let im = if bits & 2 == 0 { h } else { -h };
                C64::new(re, im)
            }
        })
    }
}

/// Everything needed to set up one seeded trial.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub users: usize,
    pub antennas: usize,
    pub order: usize,
    pub waveform: Waveform,
    pub mode: ModelMode,
    pub framing: Framing,
    pub seed: u64,
}

impl TrialSetup {
    /// CPS framing for time-limited waveforms, none for band-limited ones.
    pub fn new(
        users: usize,
        antennas: usize,
        order: usize,
        waveform: Waveform,
        mode: ModelMode,
        seed: u64,
    ) -> Self {
        let framing = match waveform.half_support() {
            Some(u) => Framing::Cps(u),
            None => Framing::None,
        };
        TrialSetup {
            users,
            antennas,
            order,
            waveform,
            mode,
            framing,
            seed,
        }
    }

    pub fn with_framing(mut self, framing: Framing) -> Self {
        self.framing = framing;
        self
    }
}

/// One channel draw with precoders and receivers in place.
///
/// Precoders are designed from the ideal-phase model of the draw, which needs
/// only the delays; receivers and propagation use the requested fidelity.
#[derive(Debug, Clone)]
pub struct Trial {
    setup: TrialSetup,
    dims: SchemeDims,
    simulator: LinkSimulator,
    alignment: Alignment,
    directions: Vec<CMatrix>,
    receivers: Vec<ZeroForcingReceiver>,
    noise_shape: NoiseModel,
}

impl Trial {
    pub fn new(setup: TrialSetup) -> Result<Self> {
        let realization = draw_realization(setup.users, setup.antennas, setup.seed)?;
        Self::from_realization(setup, &realization)
    }

    pub fn from_realization(setup: TrialSetup, realization: &ChannelRealization) -> Result<Self> {
        if realization.users() != setup.users || realization.antennas() != setup.antennas {
            return Err(invalid(
                "realization",
                "user or antenna count differs from the setup",
            ));
        }
        let dims = scheme_dims(setup.users, setup.order)?;
        let n = dims.length;
        let design = ChannelSet::build(realization, &setup.waveform, n, ModelMode::IdealPhase)?;
        let alignment = align(&design, &dims)?;
        let directions: Vec<CMatrix> = alignment
            .precoders
            .directions
            .iter()
            .map(unit_columns)
            .collect();
        let simulator =
            LinkSimulator::new(realization, &setup.waveform, n, setup.mode, setup.framing)?;
        let receivers = (0..setup.users)
            .map(|i| ZeroForcingReceiver::design(simulator.channel(), &directions, i))
            .collect::<Result<Vec<_>>>()?;
        let noise_shape = NoiseModel::for_mode(setup.mode, &setup.waveform, n, 1.0)?;
        Ok(Trial {
            setup,
            dims,
            simulator,
            alignment,
            directions,
            receivers,
            noise_shape,
        })
    }

    pub fn setup(&self) -> &TrialSetup {
        &self.setup
    }

    pub fn dims(&self) -> &SchemeDims {
        &self.dims
    }

    pub fn simulator(&self) -> &LinkSimulator {
        &self.simulator
    }

    pub fn alignment(&self) -> &Alignment {
        &self.alignment
    }

    /// Unit-norm transmit directions `V̄_j`.
    pub fn directions(&self) -> &[CMatrix] {
        &self.directions
    }

    pub fn receiver(&self, i: usize) -> &ZeroForcingReceiver {
        &self.receivers[i]
    }

    /// Channel uses per block, `N` or `N + 2(u+1)` under CPS.
    pub fn block_len(&self) -> usize {
        self.simulator.block_len()
    }

    /// Streams delivered per channel use, counting every antenna.
    pub fn efficiency_factor(&self) -> f64 {
        (self.dims.total_streams() * self.setup.antennas) as f64 / self.block_len() as f64
    }

    /// Random `s_j × M` payloads for every user.
    pub fn draw_symbols<R: Rng + ?Sized>(
        &self,
        constellation: Constellation,
        rng: &mut R,
    ) -> Vec<CMatrix> {
        (0..self.setup.users)
            .map(|j| constellation.draw(rng, self.dims.streams(j), self.setup.antennas))
            .collect()
    }

    /// Precoded `N × M` bodies `V̄_j X_j`.
    pub fn precode(&self, symbols: &[CMatrix]) -> Result<Vec<CMatrix>> {
        if symbols.len() != self.setup.users {
            return Err(Error::LengthMismatch {
                expected: self.setup.users,
                found: symbols.len(),
            });
        }
        symbols
            .iter()
            .zip(&self.directions)
            .map(|(x, v)| {
                if x.nrows() != v.ncols() {
                    return Err(Error::LengthMismatch {
                        expected: v.ncols(),
                        found: x.nrows(),
                    });
                }
                Ok(v * x)
            })
            .collect()
    }

    /// Estimates of every user's payload from received blocks.
    pub fn detect(&self, received: &[CMatrix]) -> Result<Vec<CMatrix>> {
        self.receivers
            .iter()
            .zip(received)
            .map(|(rx, y)| {
                rx.separate(
                    y,
                    self.simulator
                        .realization()
                        .block(rx.receiver(), rx.receiver()),
                )
            })
            .collect()
    }

    /// Sends `symbols` through the channel and returns the per-user estimates.
    pub fn run<R: Rng + ?Sized>(
        &self,
        symbols: &[CMatrix],
        variance: f64,
        rng: &mut R,
    ) -> Result<Vec<CMatrix>> {
        let bodies = self.precode(symbols)?;
        let noise = self.noise_shape.with_variance(variance)?;
        let received = self.simulator.apply_channel(&bodies, &noise, rng);
        self.detect(&received)
    }

    /// Per-stream SINR at receiver `i` for noise variance `σ²` (linear).
    pub fn stream_sinr(&self, i: usize, variance: f64) -> Result<Vec<f64>> {
        let r = self.simulator.realization();
        let chan = self.simulator.channel();
        let rx = &self.receivers[i];
        let g_inv =
            inverse(&r.block(i, i).transpose()).ok_or(Error::DegenerateMimo { receiver: i })?;
        let others: Vec<usize> = (0..self.setup.users).filter(|&j| j != i).collect();
        let residuals: Vec<CMatrix> = others
            .iter()
            .map(|&j| rx.filter() * chan.link(i, j) * &self.directions[j])
            .collect();
        let couplings: Vec<CMatrix> = others
            .iter()
            .map(|&j| r.block(i, j).transpose() * &g_inv)
            .collect();
        Ok(stream_sinr(
            rx.filter(),
            &residuals,
            &couplings,
            self.noise_shape.shape(),
            &g_inv,
            variance,
        ))
    }

    /// Mean post-zero-forcing interference power per stream, at unit input power.
    pub fn leakage(&self) -> Result<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for i in 0..self.setup.users {
            for s in self.stream_sinr(i, 0.0)? {
                total += if s.is_infinite() { 0.0 } else { 1.0 / s };
                count += 1;
            }
        }
        Ok(total / count as f64)
    }

    /// Worst `‖W y_p‖/‖y_p‖` over receivers and antennas for interference-only
    /// blocks with random payloads.
    pub fn antenna_leakage<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let symbols = self.draw_symbols(Constellation::Gaussian, rng);
        let bodies = self.precode(&symbols)?;
        let mut worst: f64 = 0.0;
        for rx in &self.receivers {
            let i = rx.receiver();
            let interference = self.simulator.received_from(i, &bodies, |j| j != i);
            for v in rx.antenna_leakage(&interference) {
                worst = worst.max(v);
            }
        }
        Ok(worst)
    }
}

/// Replay metadata carried with every result.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetadata {
    pub seed: u64,
    pub mode: ModelMode,
    pub users: usize,
    pub antennas: usize,
    pub order: usize,
    pub half_support: Option<u32>,
    pub excess_bandwidth: f64,
}

impl TrialMetadata {
    pub fn of(setup: &TrialSetup) -> Self {
        TrialMetadata {
            seed: setup.seed,
            mode: setup.mode,
            users: setup.users,
            antennas: setup.antennas,
            order: setup.order,
            half_support: setup.waveform.half_support(),
            excess_bandwidth: setup.waveform.excess_bandwidth(),
        }
    }
}

/// Measurements of one trial at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub metadata: TrialMetadata,
    pub snr_db: f64,
    /// Per receiver, per-stream SINR in dB.
    pub stream_sinr_db: Vec<Vec<f64>>,
    /// Bits per channel use for each user.
    pub user_rates: Vec<f64>,
    pub sum_rate: f64,
    pub leakage: f64,
    /// Slope of this trial's sum-rate curve against `log₂ρ`; zero for single-SNR runs.
    pub slope: f64,
}

/// `ρ = 10^{dB/10}`.
pub fn snr_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Sum-rate curve of one trial with Gaussian inputs at unit transmit power per
/// stream and noise variance `1/ρ`.
pub fn rate_sweep(trial: &Trial, snr_db: &[f64]) -> Result<Vec<RunResult>> {
    check_grid(snr_db)?;
    let metadata = TrialMetadata::of(trial.setup());
    let leakage = trial.leakage()?;
    let ell = trial.block_len() as f64;
    let mut rows = Vec::with_capacity(snr_db.len());
    for &db in snr_db {
        let variance = 1.0 / snr_linear(db);
        let mut sinr_db = Vec::with_capacity(trial.setup().users);
        let mut user_rates = Vec::with_capacity(trial.setup().users);
        for i in 0..trial.setup().users {
            let sinr = trial.stream_sinr(i, variance)?;
            user_rates.push(sinr.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / ell);
            sinr_db.push(sinr.iter().map(|s| 10.0 * s.log10()).collect());
        }
        rows.push(RunResult {
            metadata: metadata.clone(),
            snr_db: db,
            stream_sinr_db: sinr_db,
            sum_rate: user_rates.iter().sum(),
            user_rates,
            leakage,
            slope: 0.0,
        });
    }
    let rates: Vec<f64> = rows.iter().map(|r| r.sum_rate).collect();
    let slope = dof_slope(snr_db, &rates)?;
    for row in &mut rows {
        row.slope = slope;
    }
    Ok(rows)
}

fn check_grid(snr_db: &[f64]) -> Result<()> {
    if snr_db.len() < 2 {
        return Err(invalid("snr", "the SNR grid needs at least two points"));
    }
    if snr_db.iter().any(|v| !v.is_finite()) || snr_db.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(
            "snr",
            "the SNR grid must be finite and strictly ascending",
        ));
    }
    Ok(())
}

/// Least-squares slope of `rates` against `log₂ρ` over the top half of the grid.
pub fn dof_slope(snr_db: &[f64], rates: &[f64]) -> Result<f64> {
    check_grid(snr_db)?;
    if rates.len() != snr_db.len() {
        return Err(Error::LengthMismatch {
            expected: snr_db.len(),
            found: rates.len(),
        });
    }
    let start = (snr_db.len() / 2).min(snr_db.len() - 2);
    let xs: Vec<f64> = snr_db[start..]
        .iter()
        .map(|&d| snr_linear(d).log2())
        .collect();
    let ys = &rates[start..];
    let count = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / count;
    let my = ys.iter().sum::<f64>() / count;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Outcome of a multi-antenna trial.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoReport {
    pub result: RunResult,
    /// Streams recovered per user, `M · s_i`.
    pub recovered: Vec<usize>,
    /// `‖X̂_i − X_i‖ / ‖X_i‖` per user.
    pub recovery_error: Vec<f64>,
    /// Worst interference residual seen at any antenna after the shared projector.
    pub antenna_leakage: f64,
}

/// Runs one multi-antenna block at `snr_db` (infinite for noiseless).
pub fn mimo_run<R: Rng + ?Sized>(
    trial: &Trial,
    snr_db: f64,
    constellation: Constellation,
    rng: &mut R,
) -> Result<MimoReport> {
    let variance = if snr_db.is_infinite() && snr_db > 0.0 {
        0.0
    } else {
        1.0 / snr_linear(snr_db)
    };
    let symbols = trial.draw_symbols(constellation, rng);
    let estimates = trial.run(&symbols, variance, rng)?;
    let recovery_error = symbols
        .iter()
        .zip(&estimates)
        .map(|(x, e)| (e - x).norm() / x.norm())
        .collect();
    let recovered = (0..trial.setup().users)
        .map(|i| trial.dims().streams(i) * trial.setup().antennas)
        .collect();
    let antenna_leakage = trial.antenna_leakage(rng)?;

    let ell = trial.block_len() as f64;
    let mut stream_sinr_db = Vec::new();
    let mut user_rates = Vec::new();
    for i in 0..trial.setup().users {
        let sinr = trial.stream_sinr(i, variance)?;
        user_rates.push(sinr.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / ell);
        stream_sinr_db.push(sinr.iter().map(|s| 10.0 * s.log10()).collect());
    }
    let result = RunResult {
        metadata: TrialMetadata::of(trial.setup()),
        snr_db,
        stream_sinr_db,
        sum_rate: user_rates.iter().sum(),
        user_rates,
        leakage: trial.leakage()?,
        slope: 0.0,
    };
    Ok(MimoReport {
        result,
        recovered,
        recovery_error,
        antenna_leakage,
    })
}
