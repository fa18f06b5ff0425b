use aia_core::aligner::{align, alignment_residual, full_rank_check, scheme_dims};
use aia_core::channel::{draw_realization, ChannelSet, ModelMode};
use aia_core::linalg::{CMatrix, C64, RANK_THRESHOLD};
use aia_core::linksim::{rate_sweep, Constellation, Framing, Trial, TrialSetup};
use aia_core::waveform::{Support, Waveform, WaveformKind};
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

fn qpsk_slice(v: C64) -> C64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    C64::new(h.copysign(v.re), h.copysign(v.im))
}

#[test]
fn design_then_verify_from_public_api() {
    let dims = scheme_dims(3, 2).unwrap();
    assert_eq!((dims.kappa, dims.length, dims.total_streams()), (1, 5, 7));
    let r = draw_realization(3, 1, 2024).unwrap();
    let chan = ChannelSet::build(
        &r,
        &Waveform::ideal_sinc(),
        dims.length,
        ModelMode::IdealPhase,
    )
    .unwrap();
    let al = align(&chan, &dims).unwrap();
    assert!(alignment_residual(&al.precoders, &al.generators, &chan).worst() < 1e-12);
    for i in 0..3 {
        assert!(full_rank_check(&al.precoders, &al.generators, &chan, i) > RANK_THRESHOLD);
    }
}

#[test]
fn qpsk_decisions_are_error_free_at_high_snr() {
    let trial = Trial::new(TrialSetup::new(
        3,
        1,
        1,
        Waveform::ideal_sinc(),
        ModelMode::IdealPhase,
        8,
    ))
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let x = trial.draw_symbols(Constellation::Qpsk, &mut rng);
        let est = trial.run(&x, 1e-8, &mut rng).unwrap();
        for (a, b) in x.iter().zip(&est) {
            assert_eq!(*a, b.map(qpsk_slice));
        }
    }
}

#[test]
fn convolution_with_cps_matches_circulant_reception() {
    let mut estimates = Vec::new();
    for mode in [ModelMode::ToeplitzExact, ModelMode::Circulant] {
        let trial = Trial::new(TrialSetup::new(3, 1, 4, rrc(4), mode, 31)).unwrap();
        assert_eq!(trial.simulator().framing(), Framing::Cps(4));
        assert_eq!(trial.block_len(), 9 + 2 * 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = trial.draw_symbols(Constellation::Gaussian, &mut rng);
        estimates.push(trial.run(&x, 0.0, &mut rng).unwrap());
    }
    for (a, b) in estimates[0].iter().zip(&estimates[1]) {
        let diff: CMatrix = a - b;
        assert!(diff.norm() < 1e-9 * a.norm());
    }
}

#[test]
fn sum_rate_grows_with_snr() {
    let trial = Trial::new(TrialSetup::new(
        3,
        1,
        2,
        Waveform::ideal_sinc(),
        ModelMode::IdealPhase,
        4,
    ))
    .unwrap();
    let rows = rate_sweep(&trial, &[0.0, 10.0, 20.0, 30.0, 40.0]).unwrap();
    for pair in rows.windows(2) {
        assert!(pair[1].sum_rate > pair[0].sum_rate);
    }
}
