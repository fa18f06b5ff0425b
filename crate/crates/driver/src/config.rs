//! Experiment configuration: a TOML file with one table per concern, plus
//! command-line overrides applied on top.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use aia_core::aligner::scheme_dims;
use aia_core::channel::ModelMode;
use aia_core::waveform::{Support, Waveform, WaveformKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    AlignCheck,
    ErrorDecay,
    DofSweep,
    MimoDemo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AlignCheck => "align-check",
            ExperimentKind::ErrorDecay => "error-decay",
            ExperimentKind::DofSweep => "dof-sweep",
            ExperimentKind::MimoDemo => "mimo-demo",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Serializes core enums through their `Display`/`FromStr` names.
mod by_name {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let name = String::deserialize(d)?;
        name.parse().map_err(de::Error::custom)
    }
}

/// TOML integers are signed 64-bit; seeds beyond that range are written as
/// decimal strings.
mod seed_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.collect_str(seed),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => {
                u64::try_from(v).map_err(|_| de::Error::custom("seed must be non-negative"))
            }
            Repr::Text(t) => t.parse().map_err(de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(with = "seed_repr")]
    pub seed: u64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            kind: ExperimentKind::AlignCheck,
            seed: 1,
            trials: 20,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub users: usize,
    pub antennas: usize,
    #[serde(with = "by_name")]
    pub mode: ModelMode,
    /// Replace every drawn delay by a common value.
    pub synchronous: bool,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            users: 3,
            antennas: 1,
            mode: ModelMode::IdealPhase,
            synchronous: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub order: usize,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection { order: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSection {
    #[serde(with = "by_name")]
    pub kind: WaveformKind,
    pub beta: f64,
    /// Half-support `u` in symbols; 0 selects the untruncated pulse.
    pub half_support: u32,
}

impl Default for WaveformSection {
    fn default() -> Self {
        WaveformSection {
            kind: WaveformKind::Sinc,
            beta: 0.0,
            half_support: 0,
        }
    }
}

impl WaveformSection {
    pub fn support(&self) -> Support {
        match self.half_support {
            0 => Support::Ideal,
            u => Support::Truncated(u),
        }
    }

    pub fn build(&self) -> aia_core::Result<Waveform> {
        Waveform::new(self.kind, self.beta, self.support(), 1.0)
    }

    pub fn with_support(&self, u: u32) -> aia_core::Result<Waveform> {
        Waveform::new(self.kind, self.beta, Support::Truncated(u), 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub snr_min: f64,
    pub snr_max: f64,
    pub snr_steps: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            snr_min: 40.0,
            snr_max: 60.0,
            snr_steps: 5,
        }
    }
}

impl SweepSection {
    /// Evenly spaced grid in dB, both ends included.
    pub fn grid(&self) -> Vec<f64> {
        let step = (self.snr_max - self.snr_min) / (self.snr_steps - 1) as f64;
        (0..self.snr_steps)
            .map(|k| {
                if k + 1 == self.snr_steps {
                    self.snr_max
                } else {
                    self.snr_min + step * k as f64
                }
            })
            .collect()
    }
}

/// Block lengths and half-supports scanned by `error-decay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaySection {
    pub lengths: Vec<usize>,
    pub supports: Vec<u32>,
    /// Block length used while scanning half-supports.
    pub length: usize,
}

impl Default for DecaySection {
    fn default() -> Self {
        DecaySection {
            lengths: vec![64, 128, 256, 512],
            supports: vec![4, 8, 16],
            length: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub channel: ChannelSection,
    pub scheme: SchemeSection,
    pub waveform: WaveformSection,
    pub sweep: SweepSection,
    pub decay: DecaySection,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Values given on the command line; `None` leaves the config untouched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub mode: Option<ModelMode>,
    pub users: Option<usize>,
    pub antennas: Option<usize>,
    pub order: Option<usize>,
    pub half_support: Option<u32>,
    pub beta: Option<f64>,
    pub waveform: Option<WaveformKind>,
    pub synchronous: bool,
    pub snr_min: Option<f64>,
    pub snr_max: Option<f64>,
    pub snr_steps: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("config tables serialize")
    }

    /// SHA-256 of the rendered config without the output path, so the same
    /// experiment written to different files hashes identically.
    pub fn hash(&self) -> String {
        let mut echo = self.clone();
        echo.experiment.out = None;
        let digest = Sha256::digest(echo.render().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        set(&mut self.experiment.kind, &o.kind);
        set(&mut self.experiment.seed, &o.seed);
        set(&mut self.experiment.trials, &o.trials);
        if o.out.is_some() {
            self.experiment.out = o.out.clone();
        }
        set(&mut self.channel.mode, &o.mode);
        set(&mut self.channel.users, &o.users);
        set(&mut self.channel.antennas, &o.antennas);
        set(&mut self.scheme.order, &o.order);
        set(&mut self.waveform.half_support, &o.half_support);
        set(&mut self.waveform.beta, &o.beta);
        set(&mut self.waveform.kind, &o.waveform);
        self.channel.synchronous |= o.synchronous;
        set(&mut self.sweep.snr_min, &o.snr_min);
        set(&mut self.sweep.snr_max, &o.snr_max);
        set(&mut self.sweep.snr_steps, &o.snr_steps);
    }

    /// Checks every parameter the selected experiment consumes and reports
    /// all problems at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let kind = self.experiment.kind;
        if self.experiment.trials == 0 {
            errs.push("experiment.trials: at least one trial is required".to_string());
        }
        if self.channel.users < 3 {
            errs.push(format!(
                "channel.users: the scheme requires K >= 3, got {}",
                self.channel.users
            ));
        }
        if self.channel.antennas == 0 {
            errs.push("channel.antennas: at least one antenna is required".to_string());
        }
        if kind == ExperimentKind::MimoDemo && self.channel.antennas < 2 {
            errs.push(format!(
                "channel.antennas: mimo-demo needs M >= 2, got {}",
                self.channel.antennas
            ));
        }
        if let Err(e) = self.waveform.build() {
            errs.push(format!("waveform: {e}"));
        }

        if kind == ExperimentKind::ErrorDecay {
            self.validate_decay(&mut errs);
        } else if self.channel.users >= 3 {
            match scheme_dims(self.channel.users, self.scheme.order) {
                Ok(dims) => {
                    let u = self.waveform.half_support as usize;
                    if dims.length < 2 * u {
                        errs.push(format!(
                            "waveform.half_support: block length N = {} is shorter than 2u = {}",
                            dims.length,
                            2 * u
                        ));
                    }
                }
                Err(e) => errs.push(format!("scheme.order: {e}")),
            }
        }

        if matches!(kind, ExperimentKind::DofSweep | ExperimentKind::MimoDemo) {
            let s = &self.sweep;
            if s.snr_steps < 2 {
                errs.push("sweep.snr_steps: the SNR grid needs at least two points".to_string());
            }
            if !(s.snr_min.is_finite() && s.snr_max.is_finite() && s.snr_max > s.snr_min) {
                errs.push(format!(
                    "sweep: need finite snr_min < snr_max, got {} and {}",
                    s.snr_min, s.snr_max
                ));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    fn validate_decay(&self, errs: &mut Vec<String>) {
        let d = &self.decay;
        if self.waveform.half_support == 0 {
            errs.push("waveform.half_support: error-decay needs a truncated pulse".to_string());
        }
        if self.waveform.kind == WaveformKind::Sinc {
            errs.push("waveform.kind: error-decay needs a raised-cosine family pulse".to_string());
        }
        if d.lengths.is_empty() || d.supports.is_empty() {
            errs.push("decay: lengths and supports must be non-empty".to_string());
        }
        let u = self.waveform.half_support as usize;
        for &n in &d.lengths {
            if n < 2 * u.max(1) {
                errs.push(format!(
                    "decay.lengths: N = {n} is shorter than 2u = {}",
                    2 * u
                ));
            }
        }
        for &s in &d.supports {
            if s == 0 {
                errs.push("decay.supports: half-supports must be at least 1".to_string());
            } else if d.length < 2 * s as usize {
                errs.push(format!(
                    "decay.supports: u = {s} needs decay.length >= {}",
                    2 * s
                ));
            }
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "align-check" => Ok(ExperimentKind::AlignCheck),
            "error-decay" => Ok(ExperimentKind::ErrorDecay),
            "dof-sweep" => Ok(ExperimentKind::DofSweep),
            "mimo-demo" => Ok(ExperimentKind::MimoDemo),
            other => Err(format!("unknown experiment `{other}`")),
        }
    }
}
