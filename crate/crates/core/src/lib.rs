//! Asynchronous interference alignment for the K-user symbol-asynchronous
//! interference channel.
//!
//! The crate is `no_std` with `alloc`. It covers the pulse and correlation
//! model ([`waveform`]), per-link channel matrices and their approximations
//! ([`channel`]), delay-driven precoder synthesis ([`aligner`]) and frame-level
//! link simulation with zero-forcing reception ([`linksim`]).

#![no_std]
// Float methods resolve to inherent std impls whenever std is linked into the build.
#![cfg_attr(not(target_os = "none"), allow(unused_imports))]

extern crate alloc;

pub mod aligner;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod linksim;
pub mod waveform;

pub use error::{Error, Result};
