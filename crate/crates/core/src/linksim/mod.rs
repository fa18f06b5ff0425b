//! Block-level simulation: cyclic framing, channel application at a chosen
//! model fidelity, zero-forcing reception and rate measurement.

mod frame;
mod propagate;
mod receiver;
mod trial;

pub use frame::{convolve, encode_frame, frame_block, strip, unit_columns, Frame, Framing};
pub use propagate::{LinkSimulator, NoiseModel};
pub use receiver::{interference_basis, stream_sinr, ZeroForcingReceiver};
pub use trial::{
    dof_slope, mimo_run, rate_sweep, snr_linear, Constellation, MimoReport, RunResult, Trial,
    TrialMetadata, TrialSetup,
};
