//! The four experiment suites. Trials run in parallel; rows come back in
//! trial order.

use aia_core::aligner::{align, alignment_residual, full_rank_check, scheme_dims};
use aia_core::channel::{
    approximation_error, build_circulant, build_toeplitz, draw_realization, phase_model,
    phase_model_bound, phase_model_envelope, phase_model_error, ChannelRealization, ChannelSet,
};
use aia_core::linalg::RANK_THRESHOLD;
use aia_core::linksim::{dof_slope, mimo_run, rate_sweep, Constellation, Trial, TrialSetup};
use aia_core::waveform::DecayEnvelope;
use aia_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::output::{number, Table};

/// Decay exponent `η` assumed for the raised-cosine family.
pub const DECAY_EXPONENT: f64 = 3.0;
/// Largest accepted alignment residual.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Largest accepted noiseless recovery error.
pub const RECOVERY_TOLERANCE: f64 = 1e-6;
/// Largest accepted interference left at any antenna after zero forcing.
pub const LEAKAGE_TOLERANCE: f64 = 1e-9;
/// Relative slack on the measured DoF slope.
pub const SLOPE_TOLERANCE: f64 = 0.1;

/// Output table and the outcome of the gated checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    pub checks: usize,
    pub failures: usize,
    /// One-line summaries for the terminal.
    pub notes: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Seed of trial `index`.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, ConfigError> {
    cfg.validate()?;
    Ok(match cfg.experiment.kind {
        ExperimentKind::AlignCheck => align_check(cfg),
        ExperimentKind::ErrorDecay => error_decay(cfg),
        ExperimentKind::DofSweep => dof_sweep(cfg),
        ExperimentKind::MimoDemo => mimo_demo(cfg),
    })
}

fn status(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "invalid-parameter",
        Error::Dimension(_) => "dimension",
        Error::LengthMismatch { .. } => "length-mismatch",
        Error::DegenerateChannel { .. } => "degenerate-channel",
        Error::DegenerateReceiver { .. } => "degenerate-receiver",
        Error::DegenerateMimo { .. } => "degenerate-mimo",
    }
}

fn realization(cfg: &ExperimentConfig, seed: u64) -> aia_core::Result<ChannelRealization> {
    let r = draw_realization(cfg.channel.users, cfg.channel.antennas, seed)?;
    if cfg.channel.synchronous {
        let common = r.delay(0, 0) / r.symbol_interval();
        r.synchronized(common)
    } else {
        Ok(r)
    }
}

fn trial(cfg: &ExperimentConfig, seed: u64) -> aia_core::Result<Trial> {
    let setup = TrialSetup::new(
        cfg.channel.users,
        cfg.channel.antennas,
        cfg.scheme.order,
        cfg.waveform.build()?,
        cfg.channel.mode,
        seed,
    );
    Trial::from_realization(setup, &realization(cfg, seed)?)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn flag(ok: bool) -> String {
    if ok { "true" } else { "false" }.to_string()
}

fn trials(cfg: &ExperimentConfig) -> Vec<(usize, u64)> {
    (0..cfg.experiment.trials)
        .map(|t| (t, trial_seed(cfg.experiment.seed, t)))
        .collect()
}

/// Per-trial alignment residuals, receiver rank ratios and Vandermonde distinctness.
pub fn align_check(cfg: &ExperimentConfig) -> Report {
    let mut table = Table::new(&[
        "trial",
        "seed",
        "mode",
        "K",
        "n",
        "status",
        "residual_common",
        "residual_containment",
        "min_rank_ratio",
        "min_gap",
        "rank_full",
        "distinct",
        "routes_agree",
        "pass",
    ]);
    let k = cfg.channel.users;
    let n = cfg.scheme.order;
    let mode = cfg.channel.mode;
    let rows: Vec<(Vec<String>, bool)> = trials(cfg)
        .into_par_iter()
        .map(|(t, seed)| {
            let head = vec![
                t.to_string(),
                seed.to_string(),
                mode.to_string(),
                k.to_string(),
                n.to_string(),
            ];
            let outcome = (|| {
                let dims = scheme_dims(k, n)?;
                let w = cfg.waveform.build()?;
                let chan = ChannelSet::build(&realization(cfg, seed)?, &w, dims.length, mode)?;
                let al = align(&chan, &dims)?;
                let residual = alignment_residual(&al.precoders, &al.generators, &chan);
                let ratios: Vec<f64> = (0..k)
                    .map(|i| full_rank_check(&al.precoders, &al.generators, &chan, i))
                    .collect();
                let probes: Vec<_> = (0..k).map(|i| al.probe(&chan, i)).collect();
                Ok::<_, Error>((residual, ratios, probes))
            })();
            match outcome {
                Ok((residual, ratios, probes)) => {
                    let rank_full = ratios.iter().all(|&r| r > RANK_THRESHOLD);
                    let distinct = probes.iter().all(|p| p.distinct);
                    let agree = ratios
                        .iter()
                        .zip(&probes)
                        .all(|(&r, p)| (r > RANK_THRESHOLD) == p.distinct);
                    let pass =
                        residual.worst() <= RESIDUAL_TOLERANCE && rank_full && distinct && agree;
                    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
                    let min_gap = probes
                        .iter()
                        .map(|p| p.min_gap)
                        .fold(f64::INFINITY, f64::min);
                    let mut row = head;
                    row.extend([
                        "ok".to_string(),
                        number(residual.common),
                        number(residual.containment),
                        number(min_ratio),
                        number(min_gap),
                        flag(rank_full),
                        flag(distinct),
                        flag(agree),
                        flag(pass),
                    ]);
                    (row, pass)
                }
                Err(e) => {
                    let mut row = head;
                    row.push(status(&e).to_string());
                    row.extend(std::iter::repeat_n("nan".to_string(), 4));
                    row.extend(["false", "false", "false", "false"].map(String::from));
                    (row, false)
                }
            }
        })
        .collect();
    let passes = rows.iter().filter(|(_, p)| *p).count();
    for (row, _) in rows {
        table.push(row);
    }
    let total = cfg.experiment.trials;
    Report {
        table,
        checks: total,
        failures: total - passes,
        notes: vec![format!(
            "align-check K={k} n={n} mode={mode}: {passes}/{total} trials pass"
        )],
    }
}

/// Toeplitz-versus-circulant error over block lengths and phase-model error
/// over half-supports, each against its analytic bound.
pub fn error_decay(cfg: &ExperimentConfig) -> Report {
    let mut table = Table::new(&[
        "study",
        "trial",
        "seed",
        "mode",
        "beta",
        "u",
        "length",
        "tau_hat",
        "metric",
        "measured",
        "bound",
        "within_bound",
    ]);
    let beta = cfg.waveform.beta;
    let d = &cfg.decay;
    let base_u = cfg.waveform.half_support;
    let tau_of = |seed: u64| {
        draw_realization(3, 1, seed)
            .expect("three users")
            .link_delay(0, 1)
    };
    let mut checks = 0;
    let mut failures = 0;
    let mut notes = Vec::new();

    let w = cfg.waveform.build().expect("validated waveform");
    let per_trial: Vec<Vec<(f64, f64, f64)>> = trials(cfg)
        .into_par_iter()
        .map(|(_, seed)| {
            let tau = tau_of(seed);
            d.lengths
                .iter()
                .map(|&n| {
                    let t = build_toeplitz(&w, tau, n).expect("validated length");
                    let c = build_circulant(&w, tau, n).expect("validated length");
                    let env = DecayEnvelope::of_sequence(&c.sequence, DECAY_EXPONENT);
                    let e = approximation_error(&t, &c.matrix, Some(&env));
                    (e.weak_norm_error, e.max_entry, e.per_entry_bound)
                })
                .collect()
        })
        .collect();
    for ((t, seed), results) in trials(cfg).into_iter().zip(&per_trial) {
        let tau = tau_of(seed);
        for (&n, &(weak, max_entry, bound)) in d.lengths.iter().zip(results) {
            let head = |metric: &str| {
                vec![
                    "length".to_string(),
                    t.to_string(),
                    seed.to_string(),
                    "circulant".to_string(),
                    number(beta),
                    base_u.to_string(),
                    n.to_string(),
                    number(tau),
                    metric.to_string(),
                ]
            };
            let mut row = head("weak-norm");
            row.extend([number(weak), "nan".to_string(), String::new()]);
            table.push(row);
            let ok = max_entry <= bound;
            checks += 1;
            failures += usize::from(!ok);
            let mut row = head("max-entry");
            row.extend([number(max_entry), number(bound), flag(ok)]);
            table.push(row);
        }
    }
    let weak_medians: Vec<f64> = (0..d.lengths.len())
        .map(|idx| median(&mut per_trial.iter().map(|r| r[idx].0).collect::<Vec<_>>()))
        .collect();
    for (&n, &m) in d.lengths.iter().zip(&weak_medians) {
        table.push(vec![
            "length".to_string(),
            "median".to_string(),
            cfg.experiment.seed.to_string(),
            "circulant".to_string(),
            number(beta),
            base_u.to_string(),
            n.to_string(),
            "nan".to_string(),
            "weak-norm".to_string(),
            number(m),
            "nan".to_string(),
            String::new(),
        ]);
    }
    let decreasing = strictly_decreasing(&weak_medians);
    checks += 1;
    failures += usize::from(!decreasing);
    notes.push(format!(
        "error-decay lengths {:?}: median weak-norm error {} ({})",
        d.lengths,
        weak_medians
            .iter()
            .map(|&v| number(v))
            .collect::<Vec<_>>()
            .join(" > "),
        if decreasing {
            "decreasing"
        } else {
            "NOT decreasing"
        }
    ));

    let per_trial: Vec<Vec<(f64, f64)>> = trials(cfg)
        .into_par_iter()
        .map(|(_, seed)| {
            let tau = tau_of(seed);
            d.supports
                .iter()
                .map(|&u| {
                    let w = cfg.waveform.with_support(u).expect("validated support");
                    let base = build_circulant(&w, 0.0, d.length).expect("validated length");
                    let link = build_circulant(&w, tau, d.length).expect("validated length");
                    let err =
                        phase_model_error(link.spectrum(), &phase_model(base.spectrum(), tau));
                    let env = phase_model_envelope(&link.sequence, &base.sequence, DECAY_EXPONENT);
                    (err, phase_model_bound(&env, u))
                })
                .collect()
        })
        .collect();
    for ((t, seed), results) in trials(cfg).into_iter().zip(&per_trial) {
        let tau = tau_of(seed);
        for (&u, &(err, bound)) in d.supports.iter().zip(results) {
            let ok = err <= bound;
            checks += 1;
            failures += usize::from(!ok);
            table.push(vec![
                "support".to_string(),
                t.to_string(),
                seed.to_string(),
                "ideal-phase".to_string(),
                number(beta),
                u.to_string(),
                d.length.to_string(),
                number(tau),
                "max-diagonal".to_string(),
                number(err),
                number(bound),
                flag(ok),
            ]);
        }
    }
    let diag_medians: Vec<f64> = (0..d.supports.len())
        .map(|idx| median(&mut per_trial.iter().map(|r| r[idx].0).collect::<Vec<_>>()))
        .collect();
    for (&u, &m) in d.supports.iter().zip(&diag_medians) {
        table.push(vec![
            "support".to_string(),
            "median".to_string(),
            cfg.experiment.seed.to_string(),
            "ideal-phase".to_string(),
            number(beta),
            u.to_string(),
            d.length.to_string(),
            "nan".to_string(),
            "max-diagonal".to_string(),
            number(m),
            "nan".to_string(),
            String::new(),
        ]);
    }
    let decreasing = strictly_decreasing(&diag_medians);
    checks += 1;
    failures += usize::from(!decreasing);
    notes.push(format!(
        "error-decay supports {:?}: median phase-model error {} ({})",
        d.supports,
        diag_medians
            .iter()
            .map(|&v| number(v))
            .collect::<Vec<_>>()
            .join(", "),
        if decreasing {
            "decreasing"
        } else {
            "NOT decreasing"
        }
    ));
    Report {
        table,
        checks,
        failures,
        notes,
    }
}

/// Block length, efficiency factor and rows of one trial's sweep.
type Sweep = (usize, f64, Vec<aia_core::linksim::RunResult>);

/// Sum-rate curves per trial and their mean, with the high-SNR slope of the
/// mean compared against the scheme's efficiency factor.
pub fn dof_sweep(cfg: &ExperimentConfig) -> Report {
    let mut table = Table::new(&[
        "trial",
        "seed",
        "mode",
        "K",
        "M",
        "n",
        "u",
        "beta",
        "block_len",
        "snr_db",
        "sum_rate",
        "leakage",
        "slope",
        "target",
        "status",
    ]);
    let grid = cfg.sweep.grid();
    let mode = cfg.channel.mode;
    let meta = |t: String, seed: u64| {
        vec![
            t,
            seed.to_string(),
            mode.to_string(),
            cfg.channel.users.to_string(),
            cfg.channel.antennas.to_string(),
            cfg.scheme.order.to_string(),
            cfg.waveform.half_support.to_string(),
            number(cfg.waveform.beta),
        ]
    };
    let outcomes: Vec<(usize, u64, aia_core::Result<Sweep>)> = trials(cfg)
        .into_par_iter()
        .map(|(t, seed)| {
            let out = trial(cfg, seed).and_then(|tr| {
                let rows = rate_sweep(&tr, &grid)?;
                Ok((tr.block_len(), tr.efficiency_factor(), rows))
            });
            (t, seed, out)
        })
        .collect();

    let mut curves = Vec::new();
    let mut shape = None;
    let mut degenerate = 0;
    for (t, seed, out) in &outcomes {
        match out {
            Ok((ell, target, rows)) => {
                shape = Some((*ell, *target));
                for r in rows {
                    let mut row = meta(t.to_string(), *seed);
                    row.extend([
                        ell.to_string(),
                        number(r.snr_db),
                        number(r.sum_rate),
                        number(r.leakage),
                        number(r.slope),
                        number(*target),
                        "ok".to_string(),
                    ]);
                    table.push(row);
                }
                curves.push(rows.iter().map(|r| r.sum_rate).collect::<Vec<_>>());
            }
            Err(e) => {
                degenerate += 1;
                let mut row = meta(t.to_string(), *seed);
                row.extend(["nan"; 6].map(String::from));
                row.push(status(e).to_string());
                table.push(row);
            }
        }
    }

    let total = cfg.experiment.trials;
    let mut notes = Vec::new();
    let failures = match shape {
        Some((ell, target)) => {
            let mean: Vec<f64> = (0..grid.len())
                .map(|k| curves.iter().map(|c| c[k]).sum::<f64>() / curves.len() as f64)
                .collect();
            let slope = dof_slope(&grid, &mean).expect("validated grid");
            for (&db, &rate) in grid.iter().zip(&mean) {
                let mut row = meta("mean".to_string(), cfg.experiment.seed);
                row.extend([
                    ell.to_string(),
                    number(db),
                    number(rate),
                    "nan".to_string(),
                    number(slope),
                    number(target),
                    "ok".to_string(),
                ]);
                table.push(row);
            }
            let ok = (slope - target).abs() <= SLOPE_TOLERANCE * target;
            notes.push(format!(
                "dof-sweep: slope of mean over {}/{total} decodable trials = {} vs target {} ({})",
                curves.len(),
                number(slope),
                number(target),
                if ok { "within 10%" } else { "OUTSIDE 10%" }
            ));
            usize::from(!ok)
        }
        None => {
            notes.push(format!("dof-sweep: all {total} trials degenerate"));
            1
        }
    };
    if degenerate > 0 {
        notes.push(format!(
            "dof-sweep: {degenerate}/{total} trials skipped as degenerate"
        ));
    }
    Report {
        table,
        checks: 1,
        failures,
        notes,
    }
}

/// Noiseless multi-antenna recovery per user, shared-projector leakage, and
/// per-user rate at the top of the SNR grid.
pub fn mimo_demo(cfg: &ExperimentConfig) -> Report {
    let mut table = Table::new(&[
        "trial",
        "seed",
        "mode",
        "K",
        "M",
        "n",
        "u",
        "beta",
        "user",
        "streams",
        "recovery_error",
        "antenna_leakage",
        "snr_db",
        "rate",
        "status",
    ]);
    let grid = cfg.sweep.grid();
    let top = *grid.last().expect("validated grid");
    let mode = cfg.channel.mode;
    let rows: Vec<(Vec<Vec<String>>, bool)> = trials(cfg)
        .into_par_iter()
        .map(|(t, seed)| {
            let meta = vec![
                t.to_string(),
                seed.to_string(),
                mode.to_string(),
                cfg.channel.users.to_string(),
                cfg.channel.antennas.to_string(),
                cfg.scheme.order.to_string(),
                cfg.waveform.half_support.to_string(),
                number(cfg.waveform.beta),
            ];
            let outcome = trial(cfg, seed).and_then(|tr| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1);
                let report = mimo_run(&tr, f64::INFINITY, Constellation::Gaussian, &mut rng)?;
                let rates = rate_sweep(&tr, &grid)?
                    .pop()
                    .expect("non-empty grid")
                    .user_rates;
                Ok((report, rates))
            });
            match outcome {
                Ok((report, rates)) => {
                    let pass = report
                        .recovery_error
                        .iter()
                        .all(|&e| e <= RECOVERY_TOLERANCE)
                        && report.antenna_leakage <= LEAKAGE_TOLERANCE;
                    let rows = (0..cfg.channel.users)
                        .map(|i| {
                            let mut row = meta.clone();
                            row.extend([
                                i.to_string(),
                                report.recovered[i].to_string(),
                                number(report.recovery_error[i]),
                                number(report.antenna_leakage),
                                number(top),
                                number(rates[i]),
                                "ok".to_string(),
                            ]);
                            row
                        })
                        .collect();
                    (rows, pass)
                }
                Err(e) => {
                    let mut row = meta;
                    row.extend(["nan"; 6].map(String::from));
                    row.push(status(&e).to_string());
                    (vec![row], false)
                }
            }
        })
        .collect();
    let passes = rows.iter().filter(|(_, p)| *p).count();
    for (group, _) in rows {
        for row in group {
            table.push(row);
        }
    }
    let total = cfg.experiment.trials;
    Report {
        table,
        checks: total,
        failures: total - passes,
        notes: vec![format!(
            "mimo-demo M={}: {passes}/{total} trials recover every stream",
            cfg.channel.antennas
        )],
    }
}
