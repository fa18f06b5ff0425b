//! Shaping waveforms, their autocorrelations, and the sampled generator
//! sequences that define the per-link channel matrices.
//!
//! Time is measured in seconds at the API boundary and in symbol intervals
//! internally. A truncated waveform of half-support `u` lives on `[0, u·T_s]`:
//! the prototype pulse is centred at `u·T_s / 2`, cut to the window and
//! renormalized to unit energy. Ideal (untruncated) waveforms are kept centred
//! at the origin and only exist for kinds whose autocorrelation has a closed
//! form.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use core::fmt;
use core::str::FromStr;

use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dft, idft, C64};

/// Quadrature nodes per symbol interval.
pub const OVERSAMPLING: usize = 64;

/// Nodes per symbol interval used when fitting the decay envelope.
const ENVELOPE_OVERSAMPLING: usize = 1024;

/// Window (in symbol intervals) over which the envelope of an ideal pulse is fitted.
const IDEAL_ENVELOPE_WINDOW: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveformKind {
    Sinc,
    RaisedCosine,
    RootRaisedCosine,
}

impl WaveformKind {
    pub fn name(self) -> &'static str {
        match self {
            WaveformKind::Sinc => "sinc",
            WaveformKind::RaisedCosine => "raised-cosine",
            WaveformKind::RootRaisedCosine => "root-raised-cosine",
        }
    }
}

impl fmt::Display for WaveformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinc" => Ok(WaveformKind::Sinc),
            "raised-cosine" | "rc" => Ok(WaveformKind::RaisedCosine),
            "root-raised-cosine" | "rrc" => Ok(WaveformKind::RootRaisedCosine),
            other => Err(invalid(
                "kind",
                alloc::format!("unknown waveform kind `{other}`"),
            )),
        }
    }
}

/// Time support of a waveform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// Infinite support (band-limited model, no cyclic extension).
    Ideal,
    /// Support `[0, u·T_s]` for the given half-support `u ≥ 1`.
    Truncated(u32),
}

impl Support {
    pub fn half_support(self) -> Option<u32> {
        match self {
            Support::Ideal => None,
            Support::Truncated(u) => Some(u),
        }
    }
}

/// Envelope `|x(t)| ≤ a / |t/T_s|^η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub constant: f64,
    pub exponent: f64,
}

impl DecayEnvelope {
    pub fn bound(&self, t_over_ts: f64) -> f64 {
        self.constant / t_over_ts.abs().powf(self.exponent)
    }

    /// Smallest constant `a` such that `|value| ≤ a / |k|^η` for every sample with `k ≠ 0`.
    pub fn fit<I>(samples: I, exponent: f64) -> Self
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let constant = samples
            .into_iter()
            .filter(|(k, _)| *k != 0.0)
            .map(|(k, v)| v.abs() * k.abs().powf(exponent))
            .fold(0.0, f64::max);
        DecayEnvelope { constant, exponent }
    }

    /// Envelope of a generator sequence's taps, in the integer-lag form used by
    /// the approximation-error bounds.
    pub fn of_sequence(seq: &GeneratorSequence, exponent: f64) -> Self {
        let span = seq.span() as i64;
        DecayEnvelope::fit(
            (-span..=span).map(|q| (q as f64, seq.tap(q).norm())),
            exponent,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    kind: WaveformKind,
    excess_bandwidth: f64,
    symbol_interval: f64,
    support: Support,
    scale: f64,
    decay: DecayEnvelope,
}

/// Validates the parameters and builds a unit-energy waveform.
pub fn make_waveform(
    kind: WaveformKind,
    excess_bandwidth: f64,
    support: Support,
    symbol_interval: f64,
) -> Result<Waveform> {
    Waveform::new(kind, excess_bandwidth, support, symbol_interval)
}

impl Waveform {
    pub fn new(
        kind: WaveformKind,
        excess_bandwidth: f64,
        support: Support,
        symbol_interval: f64,
    ) -> Result<Self> {
        if !(excess_bandwidth.is_finite() && (0.0..1.0).contains(&excess_bandwidth)) {
            return Err(invalid("beta", "excess bandwidth must lie in [0, 1)"));
        }
        if kind == WaveformKind::Sinc && excess_bandwidth != 0.0 {
            return Err(invalid("beta", "the sinc pulse has no excess bandwidth"));
        }
        if !(symbol_interval.is_finite() && symbol_interval > 0.0) {
            return Err(invalid("symbol_interval", "must be positive and finite"));
        }
        match support {
            Support::Truncated(0) => {
                return Err(invalid("u", "half-support must be at least 1"));
            }
            Support::Ideal if kind == WaveformKind::RaisedCosine => {
                return Err(invalid(
                    "u",
                    "an untruncated raised-cosine pulse has no closed-form autocorrelation",
                ));
            }
            _ => {}
        }

        let mut w = Waveform {
            kind,
            excess_bandwidth,
            symbol_interval,
            support,
            scale: 1.0,
            decay: DecayEnvelope {
                constant: 0.0,
                exponent: 1.0,
            },
        };
        if let Support::Truncated(u) = support {
            let energy = simpson(|x| w.shape(x).powi(2), 0.0, u as f64);
            w.scale = 1.0 / energy.sqrt();
        }
        w.decay = w.fit_decay();
        Ok(w)
    }

    /// Ideal sinc pulse with unit symbol interval.
    pub fn ideal_sinc() -> Self {
        Waveform::new(WaveformKind::Sinc, 0.0, Support::Ideal, 1.0).expect("valid parameters")
    }

    pub fn kind(&self) -> WaveformKind {
        self.kind
    }

    pub fn excess_bandwidth(&self) -> f64 {
        self.excess_bandwidth
    }

    pub fn symbol_interval(&self) -> f64 {
        self.symbol_interval
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn half_support(&self) -> Option<u32> {
        self.support.half_support()
    }

    pub fn is_time_limited(&self) -> bool {
        matches!(self.support, Support::Truncated(_))
    }

    /// Decay envelope of the pulse, fitted in centred coordinates for `|t/T_s| ≥ 2`.
    pub fn decay(&self) -> DecayEnvelope {
        self.decay
    }

    /// `ψ(t)` with `t` in seconds.
    pub fn pulse(&self, t: f64) -> f64 {
        self.shape(t / self.symbol_interval) / self.symbol_interval.sqrt()
    }

    /// Unit-energy pulse with the symbol interval normalized to one.
    fn shape(&self, x: f64) -> f64 {
        match self.support {
            Support::Ideal => self.prototype(x),
            Support::Truncated(u) => {
                let u = u as f64;
                if (0.0..=u).contains(&x) {
                    self.scale * self.prototype(x - u / 2.0)
                } else {
                    0.0
                }
            }
        }
    }

    fn prototype(&self, x: f64) -> f64 {
        match self.kind {
            WaveformKind::Sinc => sinc(x),
            WaveformKind::RaisedCosine => raised_cosine(x, self.excess_bandwidth),
            WaveformKind::RootRaisedCosine => root_raised_cosine(x, self.excess_bandwidth),
        }
    }

    /// `∫|ψ(t)|² dt`, evaluated with the same quadrature that normalizes the pulse.
    pub fn energy(&self) -> f64 {
        match self.support {
            Support::Ideal => 1.0,
            Support::Truncated(u) => simpson(|x| self.shape(x).powi(2), 0.0, u as f64),
        }
    }

    /// `γ(τ) = ∫ ψ(t − τ) ψ*(t) dt` with `τ` in seconds.
    pub fn autocorrelation(&self, tau: f64) -> C64 {
        C64::new(self.correlation(tau / self.symbol_interval), 0.0)
    }

    /// Autocorrelation at a lag expressed in symbol intervals.
    pub(crate) fn correlation(&self, x: f64) -> f64 {
        match self.support {
            Support::Ideal => match self.kind {
                WaveformKind::Sinc => sinc(x),
                // The root-raised-cosine autocorrelation is the raised-cosine pulse.
                _ => raised_cosine(x, self.excess_bandwidth),
            },
            Support::Truncated(u) => {
                let u = u as f64;
                if x.abs() >= u {
                    return 0.0;
                }
                let lo = x.max(0.0);
                let hi = u.min(u + x);
                simpson(|t| self.shape(t - x) * self.shape(t), lo, hi)
            }
        }
    }

    /// DTFT of `{γ(q − τ̂)}` sampled at `2πk/N`, for ideal waveforms.
    ///
    /// The autocorrelation spectrum is band-limited to `|f| ≤ (1+β)/2`, so only
    /// the first alias contributes.
    fn folded_spectrum(&self, tau_hat: f64, n: usize) -> Vec<C64> {
        let beta = self.excess_bandwidth;
        (0..n)
            .map(|k| {
                let f = k as f64 / n as f64;
                (-1..=1)
                    .map(|m| {
                        let g = f - m as f64;
                        let mag = raised_cosine_spectrum(g, beta);
                        if mag == 0.0 {
                            C64::new(0.0, 0.0)
                        } else {
                            C64::from_polar(mag, -2.0 * PI * g * tau_hat)
                        }
                    })
                    .fold(C64::new(0.0, 0.0), |a, b| a + b)
            })
            .collect()
    }

    fn fit_decay(&self) -> DecayEnvelope {
        let exponent = match self.kind {
            WaveformKind::RaisedCosine | WaveformKind::RootRaisedCosine
                if self.excess_bandwidth > 0.0 =>
            {
                3.0
            }
            _ => 1.0,
        };
        let (reach, offset) = match self.support {
            Support::Ideal => (IDEAL_ENVELOPE_WINDOW, 0.0),
            Support::Truncated(u) => (u as f64 / 2.0, u as f64 / 2.0),
        };
        if reach < 2.0 {
            return DecayEnvelope {
                constant: 0.0,
                exponent,
            };
        }
        let steps = ((reach - 2.0) * ENVELOPE_OVERSAMPLING as f64).ceil() as usize;
        let samples = (0..=steps).flat_map(|m| {
            let x = (2.0 + m as f64 / ENVELOPE_OVERSAMPLING as f64).min(reach);
            [x, -x].map(|x| (x, self.shape(x + offset)))
        });
        DecayEnvelope::fit(samples, exponent)
    }
}

/// Sampled generator data of one link: the taps `γ(q) = γ((q − τ̂)T_s)` and the
/// wrapped length-`N` generator `[γ(0), …, γ(u), 0, …, 0, γ(−u), …, γ(−1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSequence {
    relative_delay: f64,
    span: usize,
    taps: Vec<C64>,
    generator: Vec<C64>,
    spectrum: Vec<C64>,
}

impl GeneratorSequence {
    pub fn relative_delay(&self) -> f64 {
        self.relative_delay
    }

    pub fn len(&self) -> usize {
        self.generator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generator.is_empty()
    }

    /// Largest lag with a stored tap: `u` when truncated, `N − 1` when ideal.
    pub fn span(&self) -> usize {
        self.span
    }

    /// `γ(q)`; zero outside the stored span.
    pub fn tap(&self, q: i64) -> C64 {
        let span = self.span as i64;
        if q.abs() > span {
            C64::new(0.0, 0.0)
        } else {
            self.taps[(q + span) as usize]
        }
    }

    /// First column of the circulant channel matrix.
    pub fn generator(&self) -> &[C64] {
        &self.generator
    }

    /// Eigenvalues of the circulant channel matrix (DFT of the generator).
    pub fn spectrum(&self) -> &[C64] {
        &self.spectrum
    }

    pub fn absolute_sum(&self) -> f64 {
        self.taps.iter().map(|t| t.norm()).sum()
    }
}

/// Samples the link generator for a normalized relative delay `τ̂ ∈ (−1, 1)`.
pub fn gamma_sequence(w: &Waveform, tau_hat: f64, n: usize) -> Result<GeneratorSequence> {
    if !(tau_hat.is_finite() && tau_hat.abs() < 1.0) {
        return Err(invalid("tau_hat", "relative delay must lie in (-1, 1)"));
    }
    if n == 0 {
        return Err(Error::Dimension(
            "sequence length must be positive".to_string(),
        ));
    }
    match w.support {
        Support::Truncated(u) => {
            let u = u as usize;
            if n < 2 * u {
                return Err(Error::Dimension(alloc::format!(
                    "N = {n} is shorter than 2u = {}",
                    2 * u
                )));
            }
            let taps: Vec<C64> = (-(u as i64)..=u as i64)
                .map(|q| C64::new(w.correlation(q as f64 - tau_hat), 0.0))
                .collect();
            let mut generator = alloc::vec![C64::new(0.0, 0.0); n];
            for (idx, q) in (-(u as i64)..=u as i64).enumerate() {
                generator[q.rem_euclid(n as i64) as usize] += taps[idx];
            }
            let spectrum = dft(&generator);
            Ok(GeneratorSequence {
                relative_delay: tau_hat,
                span: u,
                taps,
                generator,
                spectrum,
            })
        }
        Support::Ideal => {
            let span = n - 1;
            let taps = (-(span as i64)..=span as i64)
                .map(|q| C64::new(w.correlation(q as f64 - tau_hat), 0.0))
                .collect();
            let spectrum = w.folded_spectrum(tau_hat, n);
            let generator = match w.kind {
                WaveformKind::Sinc => (0..n)
                    .map(|q| C64::new(periodic_sinc(q as f64 - tau_hat, n), 0.0))
                    .collect(),
                _ => idft(&spectrum),
            };
            Ok(GeneratorSequence {
                relative_delay: tau_hat,
                span,
                taps,
                generator,
                spectrum,
            })
        }
    }
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Raised-cosine pulse with unit symbol interval (`rc(0) = 1`).
pub fn raised_cosine(x: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return sinc(x);
    }
    let d = 1.0 - (2.0 * beta * x).powi(2);
    if d.abs() < 1e-8 {
        PI / 4.0 * sinc(1.0 / (2.0 * beta))
    } else {
        sinc(x) * (PI * beta * x).cos() / d
    }
}

/// Unit-energy root-raised-cosine pulse with unit symbol interval.
pub fn root_raised_cosine(x: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return sinc(x);
    }
    if x == 0.0 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let d = 1.0 - (4.0 * beta * x).powi(2);
    if d.abs() < 1e-8 {
        let a = PI / (4.0 * beta);
        return beta * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
    num / (PI * x * d)
}

/// Fourier transform of [`raised_cosine`] at frequency `f` (cycles per symbol).
fn raised_cosine_spectrum(f: f64, beta: f64) -> f64 {
    let a = f.abs();
    if beta == 0.0 {
        return if a < 0.5 {
            1.0
        } else if a == 0.5 {
            0.5
        } else {
            0.0
        };
    }
    let lo = (1.0 - beta) / 2.0;
    let hi = (1.0 + beta) / 2.0;
    if a <= lo {
        1.0
    } else if a <= hi {
        0.5 * (1.0 + (PI * (a - lo) / beta).cos())
    } else {
        0.0
    }
}

/// `Σ_m sinc(x + mN)`, the length-`N` periodization of sinc samples.
fn periodic_sinc(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    let r = x - nf * (x / nf).floor();
    if r == 0.0 {
        return 1.0;
    }
    if x.fract() == 0.0 {
        return 0.0;
    }
    let px = PI * x;
    if n % 2 == 1 {
        px.sin() / (nf * (px / nf).sin())
    } else {
        px.sin() / (nf * (px / nf).tan())
    }
}

/// Richardson-extrapolated trapezoid (composite Simpson) over `[lo, hi]` with
/// node spacing close to `1/OVERSAMPLING`.
fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let len = hi - lo;
    if len <= 0.0 {
        return 0.0;
    }
    let mut panels = (len * OVERSAMPLING as f64).ceil() as usize;
    panels = panels.max(2);
    if panels % 2 == 1 {
        panels += 1;
    }
    let h = len / panels as f64;
    let mut acc = f(lo) + f(hi);
    for m in 1..panels {
        let weight = if m % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(lo + m as f64 * h);
    }
    acc * h / 3.0
}
