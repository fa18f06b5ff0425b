use alloc::vec::Vec;

use super::frame::unit_columns;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{inverse, rank_ratio, CMatrix, CVector, C64, RANK_THRESHOLD};

/// Linear zero-forcing receiver for one user.
///
/// `filter` is the desired block of the inverse of `[Γ_{i,i}V̄_i | interference basis]`,
/// so it passes the desired streams with unit gain and annihilates anything in
/// the span of the aligned interference.
#[derive(Debug, Clone)]
pub struct ZeroForcingReceiver {
    receiver: usize,
    filter: CMatrix,
    stack_ratio: f64,
}

/// Interference basis expected at `receiver`: `Γ_{0,2}V̄_2` at receiver 0 and
/// `Γ_{i,0}V̄_0` elsewhere.
pub fn interference_basis(chan: &ChannelSet, directions: &[CMatrix], receiver: usize) -> CMatrix {
    let source = if receiver == 0 { 2 } else { 0 };
    unit_columns(&(chan.link(receiver, source) * &directions[source]))
}

impl ZeroForcingReceiver {
    /// Designs the filter from the actual link matrices and the normalized directions.
    pub fn design(chan: &ChannelSet, directions: &[CMatrix], receiver: usize) -> Result<Self> {
        let desired = chan.link(receiver, receiver) * &directions[receiver];
        let interference = interference_basis(chan, directions, receiver);
        let n = chan.len();
        let (s, r) = (desired.ncols(), interference.ncols());
        if s + r != n {
            return Err(Error::Dimension(alloc::format!(
                "receiver {receiver}: {s} desired and {r} interference dimensions do not fill length {n}"
            )));
        }
        let mut stack = CMatrix::zeros(n, n);
        stack.view_mut((0, 0), desired.shape()).copy_from(&desired);
        stack
            .view_mut((0, s), interference.shape())
            .copy_from(&interference);
        let ratio = rank_ratio(&stack);
        let degenerate = Error::DegenerateReceiver { receiver, ratio };
        if ratio <= RANK_THRESHOLD {
            return Err(degenerate);
        }
        let inv = inverse(&stack).ok_or(degenerate)?;
        Ok(ZeroForcingReceiver {
            receiver,
            filter: inv.rows(0, s).into_owned(),
            stack_ratio: ratio,
        })
    }

    pub fn receiver(&self) -> usize {
        self.receiver
    }

    pub fn streams(&self) -> usize {
        self.filter.nrows()
    }

    /// `σ_min / σ_max` of the stacked basis the filter inverts.
    pub fn stack_ratio(&self) -> f64 {
        self.stack_ratio
    }

    pub fn filter(&self) -> &CMatrix {
        &self.filter
    }

    /// Single-antenna estimate `W y h_{i,i}⁻¹`.
    pub fn zero_force(&self, y: &CVector, gain: C64) -> CVector {
        let g_inv = C64::new(1.0, 0.0) / gain;
        (&self.filter * y).map(|v| v * g_inv)
    }

    /// Per-antenna zero forcing followed by inversion of the `M × M` direct
    /// gain: `X̂ = W Y (H_{i,i}^T)⁻¹`.
    pub fn separate(&self, y: &CMatrix, direct: &CMatrix) -> Result<CMatrix> {
        let g_inv = inverse(&direct.transpose()).ok_or(Error::DegenerateMimo {
            receiver: self.receiver,
        })?;
        let mut projected = CMatrix::zeros(self.filter.nrows(), y.ncols());
        for (p, col) in y.column_iter().enumerate() {
            projected.set_column(p, &(&self.filter * col));
        }
        Ok(projected * g_inv)
    }

    /// Residual `‖W y_p‖ / ‖y_p‖` for every antenna column of an interference-only block.
    pub fn antenna_leakage(&self, interference: &CMatrix) -> Vec<f64> {
        interference
            .column_iter()
            .map(|col| {
                let norm = col.norm();
                if norm == 0.0 {
                    0.0
                } else {
                    (&self.filter * col).norm() / norm
                }
            })
            .collect()
    }
}

/// Per-stream post-detection SINR with unit-variance inputs.
///
/// `residuals[j]` is `W Γ_{i,j} V̄_j` for every interferer, `couplings[j]` the
/// matching `H_{i,j}^T (H_{i,i}^T)⁻¹`, `noise_shape` the unit-variance noise
/// covariance and `g_inv` the direct gain inverse. Entries are ordered by
/// antenna, then stream.
pub fn stream_sinr(
    filter: &CMatrix,
    residuals: &[CMatrix],
    couplings: &[CMatrix],
    noise_shape: &CMatrix,
    g_inv: &CMatrix,
    variance: f64,
) -> Vec<f64> {
    let s = filter.nrows();
    let m = g_inv.ncols();
    let filtered_noise = filter * noise_shape * filter.adjoint();
    let row_power = |l: &CMatrix, k: usize| l.row(k).iter().map(|v| v.norm_sqr()).sum::<f64>();
    let col_power = |q: &CMatrix, p: usize| q.column(p).iter().map(|v| v.norm_sqr()).sum::<f64>();
    let mut out = Vec::with_capacity(s * m);
    for p in 0..m {
        let noise_gain = col_power(g_inv, p);
        for k in 0..s {
            let interference: f64 = residuals
                .iter()
                .zip(couplings)
                .map(|(l, q)| row_power(l, k) * col_power(q, p))
                .sum();
            let noise = variance * filtered_noise[(k, k)].re * noise_gain;
            let denom = interference + noise;
            out.push(if denom > 0.0 {
                1.0 / denom
            } else {
                f64::INFINITY
            });
        }
    }
    out
}
