use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::linalg::{CMatrix, C64};

/// Gains below this magnitude are redrawn so every link stays non-zero.
pub const MIN_GAIN: f64 = 1e-6;

/// Gains, delays and antenna blocks for one draw of the K-user channel.
///
/// Users are indexed from zero. `delay(i, j)` is the absolute delay `τ_{i,j}`
/// (seconds) of the signal from transmitter `j` at receiver `i`, and
/// `block(i, j)` the `M × M` fading block (`1 × 1` for single antennas).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    users: usize,
    antennas: usize,
    symbol_interval: f64,
    seed: u64,
    gains: Vec<CMatrix>,
    delays: Vec<f64>,
}

/// Draws a realization with unit symbol interval.
pub fn draw_realization(users: usize, antennas: usize, seed: u64) -> Result<ChannelRealization> {
    ChannelRealization::draw(users, antennas, 1.0, seed)
}

impl ChannelRealization {
    /// Gains are circularly-symmetric complex Gaussian with unit variance and
    /// delays uniform on `[0, T_s)`, all from a ChaCha8 stream seeded by `seed`.
    pub fn draw(users: usize, antennas: usize, symbol_interval: f64, seed: u64) -> Result<Self> {
        if users < 3 {
            return Err(invalid("K", "the alignment scheme needs at least 3 users"));
        }
        if antennas == 0 {
            return Err(invalid("M", "at least one antenna per node is required"));
        }
        if !(symbol_interval.is_finite() && symbol_interval > 0.0) {
            return Err(invalid("symbol_interval", "must be positive and finite"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gains = (0..users * users)
            .map(|_| CMatrix::from_fn(antennas, antennas, |_, _| complex_gain(&mut rng)))
            .collect();
        let delays = (0..users * users)
            .map(|_| rng.random::<f64>() * symbol_interval)
            .collect();
        Ok(ChannelRealization {
            users,
            antennas,
            symbol_interval,
            seed,
            gains,
            delays,
        })
    }

    /// Builds a single-antenna realization from explicit gains and delays,
    /// both in row-major `(receiver, transmitter)` order.
    pub fn from_parts(
        users: usize,
        symbol_interval: f64,
        gains: Vec<C64>,
        delays: Vec<f64>,
    ) -> Result<Self> {
        if users == 0 || gains.len() != users * users || delays.len() != users * users {
            return Err(invalid("K", "gains and delays must both hold K² entries"));
        }
        if gains.iter().any(|g| g.norm() < MIN_GAIN) {
            return Err(invalid("gains", "every link gain must be non-zero"));
        }
        if delays
            .iter()
            .any(|&d| !(d.is_finite() && (0.0..symbol_interval).contains(&d)))
        {
            return Err(invalid("delays", "delays must lie in [0, T_s)"));
        }
        Ok(ChannelRealization {
            users,
            antennas: 1,
            symbol_interval,
            seed: 0,
            gains: gains
                .into_iter()
                .map(|g| CMatrix::from_element(1, 1, g))
                .collect(),
            delays,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn symbol_interval(&self) -> f64 {
        self.symbol_interval
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Scalar gain `h_{i,j}` (the `(0, 0)` entry of the block).
    pub fn gain(&self, i: usize, j: usize) -> C64 {
        self.gains[i * self.users + j][(0, 0)]
    }

    pub fn block(&self, i: usize, j: usize) -> &CMatrix {
        &self.gains[i * self.users + j]
    }

    pub fn delay(&self, i: usize, j: usize) -> f64 {
        self.delays[i * self.users + j]
    }

    /// `τ^{[i]}_{m,j} = τ_{i,m} − τ_{i,j}` in seconds.
    pub fn relative_delay(&self, i: usize, m: usize, j: usize) -> f64 {
        self.delay(i, m) - self.delay(i, j)
    }

    /// Normalized delay of link `(i, j)` relative to the desired link: `τ^{[i]}_{i,j} / T_s`.
    pub fn link_delay(&self, i: usize, j: usize) -> f64 {
        self.relative_delay(i, i, j) / self.symbol_interval
    }

    /// Every link delayed by the same `offset` (a fraction of `T_s`).
    pub fn synchronized(mut self, offset: f64) -> Result<Self> {
        if !(offset.is_finite() && (0.0..1.0).contains(&offset)) {
            return Err(invalid("offset", "synchronous offset must lie in [0, 1)"));
        }
        let d = offset * self.symbol_interval;
        self.delays.iter_mut().for_each(|t| *t = d);
        Ok(self)
    }

    /// Adds an artificial delay `offsets[j]` (fraction of `T_s`) at each
    /// transmitter, wrapping the result back into `[0, T_s)`.
    pub fn with_transmitter_delays(mut self, offsets: &[f64]) -> Result<Self> {
        if offsets.len() != self.users {
            return Err(invalid("offsets", "one offset per transmitter is required"));
        }
        let ts = self.symbol_interval;
        for i in 0..self.users {
            for (j, off) in offsets.iter().enumerate() {
                let t = &mut self.delays[i * self.users + j];
                let shifted = *t / ts + off;
                *t = (shifted - shifted.floor()) * ts;
            }
        }
        Ok(self)
    }

    /// Multiplies each link block by `factor(i, j)`.
    pub fn scaled_gains<F: Fn(usize, usize) -> C64>(mut self, factor: F) -> Result<Self> {
        let k = self.users;
        for (idx, g) in self.gains.iter_mut().enumerate() {
            let f = factor(idx / k, idx % k);
            if f.norm() < MIN_GAIN {
                return Err(invalid("gains", "scale factors must be non-zero"));
            }
            *g *= f;
        }
        Ok(self)
    }
}

fn complex_gain(rng: &mut ChaCha8Rng) -> C64 {
    loop {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let g = C64::new(re, im) * FRAC_1_SQRT_2;
        if g.norm() >= MIN_GAIN {
            return g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn draws_are_deterministic() {
        let a = draw_realization(3, 1, 7).unwrap();
        let b = draw_realization(3, 1, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, draw_realization(3, 1, 8).unwrap());
    }

    #[test]
    fn fewer_than_three_users_is_rejected() {
        assert!(draw_realization(2, 1, 0).is_err());
        assert!(draw_realization(3, 0, 0).is_err());
    }

    #[test]
    fn relative_delay_subtracts_absolute_delays() {
        let mut delays = vec![0.0; 9];
        delays[1] = 0.7;
        delays[2] = 0.2;
        let r =
            ChannelRealization::from_parts(3, 1.0, vec![C64::new(1.0, 0.0); 9], delays).unwrap();
        assert!((r.relative_delay(0, 1, 2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn relative_delays_stay_inside_one_symbol_and_are_distinct() {
        for seed in 0..1000 {
            let r = draw_realization(3, 1, seed).unwrap();
            let mut seen = Vec::new();
            for i in 0..3 {
                for m in 0..3 {
                    for j in 0..3 {
                        if m == j {
                            continue;
                        }
                        let d = r.relative_delay(i, m, j);
                        assert!(d.abs() < 1.0);
                        if m < j {
                            seen.push(d);
                        }
                    }
                }
            }
            for a in 0..seen.len() {
                for b in a + 1..seen.len() {
                    assert!(seen[a] != seen[b], "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn gain_blocks_have_antenna_dimension_and_unit_power() {
        let mut power = 0.0;
        let mut count = 0.0;
        for seed in 0..200 {
            let r = draw_realization(3, 2, seed).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let b = r.block(i, j);
                    assert_eq!(b.shape(), (2, 2));
                    power += b.norm_squared();
                    count += 4.0;
                }
            }
        }
        let mean = power / count;
        assert!((mean - 1.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn transmitter_delays_keep_transmitter_only_structure() {
        let r = draw_realization(3, 1, 3)
            .unwrap()
            .synchronized(0.6)
            .unwrap()
            .with_transmitter_delays(&[0.1, 0.55, 0.3])
            .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(r.delay(i, j), r.delay(0, j));
                assert!((0.0..1.0).contains(&r.delay(i, j)));
            }
        }
    }
}
