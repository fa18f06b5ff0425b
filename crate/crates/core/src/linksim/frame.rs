use crate::error::{invalid, Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::waveform::GeneratorSequence;

/// Cyclic extension applied to each precoded block before transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Framing {
    /// The bare length-`N` block.
    None,
    /// `u+1` symbols of cyclic prefix and `u+1` of cyclic suffix.
    Cps(u32),
    /// Cyclic prefix only; the suffix positions carry nothing.
    PrefixOnly(u32),
}

impl Framing {
    /// Length of the transmitted block for a body of length `n`.
    pub fn block_len(self, n: usize) -> usize {
        match self {
            Framing::None => n,
            Framing::Cps(u) => n + 2 * (u as usize + 1),
            Framing::PrefixOnly(u) => n + u as usize + 1,
        }
    }

    /// Position of the first body symbol inside the block.
    pub fn offset(self) -> usize {
        match self {
            Framing::None => 0,
            Framing::Cps(u) | Framing::PrefixOnly(u) => u as usize + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub symbols: CVector,
    /// Precoded body `V x`.
    pub body: CVector,
    /// Body with its cyclic extension.
    pub block: CVector,
    pub framing: Framing,
}

/// Precodes `symbols` with `precoder` and adds the cyclic extension.
pub fn encode_frame(symbols: &CVector, precoder: &CMatrix, framing: Framing) -> Result<Frame> {
    if symbols.len() != precoder.ncols() {
        return Err(Error::LengthMismatch {
            expected: precoder.ncols(),
            found: symbols.len(),
        });
    }
    let body = precoder * symbols;
    let block = frame_block(&body, framing)?;
    Ok(Frame {
        symbols: symbols.clone(),
        body,
        block,
        framing,
    })
}

/// `[b(N−u−1) … b(N−1) | b(0) … b(N−1) | b(0) … b(u)]` for CPS framing.
pub fn frame_block(body: &CVector, framing: Framing) -> Result<CVector> {
    let n = body.len();
    let ext = framing.offset();
    if ext > n {
        return Err(invalid("u", "cyclic extension is longer than the block"));
    }
    let len = framing.block_len(n);
    Ok(CVector::from_fn(len, |k, _| {
        if k < ext {
            body[n - ext + k]
        } else if k < ext + n {
            body[k - ext]
        } else if matches!(framing, Framing::Cps(_)) {
            body[k - ext - n]
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Discards the cyclic extension from a received block.
pub fn strip(received: &CVector, framing: Framing, n: usize) -> Result<CVector> {
    if received.len() != framing.block_len(n) {
        return Err(Error::LengthMismatch {
            expected: framing.block_len(n),
            found: received.len(),
        });
    }
    Ok(received.rows(framing.offset(), n).into_owned())
}

/// Linear convolution `y(k) = Σ_q γ(q) x(k − q)` evaluated on the block's own
/// index range, with `x` zero outside the block.
pub fn convolve(taps: &GeneratorSequence, block: &CVector) -> CVector {
    let span = taps.span() as i64;
    let len = block.len() as i64;
    CVector::from_fn(block.len(), |k, _| {
        let k = k as i64;
        (-span..=span)
            .filter_map(|q| {
                let idx = k - q;
                (0..len)
                    .contains(&idx)
                    .then(|| taps.tap(q) * block[idx as usize])
            })
            .fold(C64::new(0.0, 0.0), |acc, v| acc + v)
    })
}

/// Copy of `m` with every column scaled to unit Euclidean norm.
pub fn unit_columns(m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::circulant;
    use crate::waveform::{gamma_sequence, Support, Waveform, WaveformKind};

    fn seq(len: usize) -> CVector {
        CVector::from_fn(len, |k, _| C64::new(k as f64, -(k as f64) * 0.5))
    }

    #[test]
    fn cps_layout_repeats_edges() {
        let body = seq(5);
        let block = frame_block(&body, Framing::Cps(1)).unwrap();
        let expected = [3usize, 4, 0, 1, 2, 3, 4, 0, 1];
        assert_eq!(block.len(), 9);
        for (k, &e) in expected.iter().enumerate() {
            assert_eq!(block[k], body[e]);
        }
    }

    #[test]
    fn zero_support_extension_adds_two_symbols() {
        assert_eq!(Framing::Cps(0).block_len(7), 9);
    }

    #[test]
    fn identity_channel_round_trip() {
        let v = CMatrix::identity(6, 6);
        let x = seq(6);
        let frame = encode_frame(&x, &v, Framing::Cps(2)).unwrap();
        let back = strip(&frame.block, Framing::Cps(2), 6).unwrap();
        assert_eq!(back, x);
        assert!(encode_frame(&seq(5), &v, Framing::Cps(2)).is_err());
    }

    #[test]
    fn cps_turns_linear_convolution_into_circulant_product() {
        let w = Waveform::new(
            WaveformKind::RootRaisedCosine,
            0.25,
            Support::Truncated(3),
            1.0,
        )
        .unwrap();
        let g = gamma_sequence(&w, 0.41, 12).unwrap();
        let x = seq(12);
        let framed = frame_block(&x, Framing::Cps(3)).unwrap();
        let y = strip(&convolve(&g, &framed), Framing::Cps(3), 12).unwrap();
        let expected = circulant(g.generator()) * &x;
        assert!((y - &expected).norm() < 1e-12);

        let prefix = frame_block(&x, Framing::PrefixOnly(3)).unwrap();
        let y = strip(&convolve(&g, &prefix), Framing::PrefixOnly(3), 12).unwrap();
        assert!((y - expected).norm() > 1e-3);
    }

    #[test]
    fn unit_columns_normalizes() {
        let m = CMatrix::from_fn(4, 3, |r, c| C64::new((r + c) as f64 + 1.0, r as f64));
        let u = unit_columns(&m);
        for col in u.column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-15);
        }
    }
}
