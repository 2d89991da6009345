//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary (`harness = false`).

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use transmon_readout::config::ExperimentConfig;
use transmon_readout::discriminate::{
    classify_two_state, fit_projection, truth_table_combine, CombinedLabel, FnnModel, PrimaryLabel,
    SecondaryLabel,
};
use transmon_readout::experiments::{
    configured_ideal_fidelity, run_three_state, run_two_state, RunSummary, ThreeStateSummary,
};
use transmon_readout::levels::{populations, populations_analytic, sample_trajectory};
use transmon_readout::metrics::{
    fit_decay_curves, ideal_fidelity, spam_mitigate, AssignmentMatrix, DecaySeries, FitOptions,
};
use transmon_readout::rng::derive_seed;
use transmon_readout::{DecayRates, Level};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Criterion 1: Single-level decay error at the readout time.
fn decay_error_at_readout() -> Verdict {
    let p = populations(&DecayRates::default(), Level::One, 0.140)
        .unwrap()
        .p[0];
    let pct = 100.0 * p;
    verdict(
        (pct - 2.24).abs() <= 0.005,
        format!("p0(140 ns | 1) = {pct:.5}% (target 2.24% +/- 0.005 pp)"),
    )
}

/// Criterion 2: Closed forms against an RK4 oracle, and jump Monte Carlo against the
/// closed forms.
fn populations_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut draws = 0;
    while draws < 100 {
        let t: [f64; 3] = [
            rng.random_range(1.0..10.0),
            rng.random_range(1.0..10.0),
            rng.random_range(1.0..10.0),
        ];
        let spread = |a: f64, b: f64| (a - b).abs() / a.max(b);
        if spread(t[0], t[1]) < 0.02 || spread(t[0], t[2]) < 0.02 || spread(t[1], t[2]) < 0.02 {
            continue;
        }
        draws += 1;
        let rates = DecayRates::new(t[0], t[1], t[2]).unwrap();
        let level = Level::from_index(rng.random_range(0..4)).unwrap();
        let time = rng.random_range(0.0..20.0);
        let mut p0 = [0.0; 4];
        p0[level.index()] = 1.0;
        let oracle = common::cascade_rk4(t, p0, time, 1e-3);
        let analytic = populations_analytic(&rates, level, time).unwrap();
        for k in 0..4 {
            worst = worst.max((analytic.p[k] - oracle[k]).abs());
        }
    }

    let rates = DecayRates::default();
    let n = 1_000_000u64;
    let times: Vec<f64> = (1..=15).map(|k| k as f64).collect();
    let counts = (0..n)
        .into_par_iter()
        .map(|i| {
            let traj = sample_trajectory(&rates, Level::Three, 15.0, derive_seed(77, i)).unwrap();
            let mut c = vec![[0u64; 4]; times.len()];
            for (k, &t) in times.iter().enumerate() {
                c[k][traj.level_at(t).index()] += 1;
            }
            c
        })
        .reduce(
            || vec![[0u64; 4]; times.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    for l in 0..4 {
                        x[l] += y[l];
                    }
                }
                a
            },
        );
    let mut worst_z: f64 = 0.0;
    let mut mc_ok = true;
    for (k, &t) in times.iter().enumerate() {
        let p = populations(&rates, Level::Three, t).unwrap().p;
        for l in 0..4 {
            let expected = n as f64 * p[l];
            let sd = (n as f64 * p[l] * (1.0 - p[l])).sqrt().max(1.0);
            let z = (counts[k][l] as f64 - expected).abs() / sd;
            worst_z = worst_z.max(z);
            mc_ok &= z <= 4.0;
        }
    }
    verdict(
        worst <= 1e-9 && mc_ok,
        format!(
            "max |analytic - RK4| = {worst:.2e} over 100 draws (tol 1e-9); \
             MC 1e6 trajectories from |3>, worst deviation {worst_z:.2} sigma (tol 4)"
        ),
    )
}

/// Criterion 3: Truth table on all six inputs.
fn truth_table() -> Verdict {
    use CombinedLabel as C;
    use PrimaryLabel as P;
    use SecondaryLabel as S;
    let cases = [
        (P::Zero, S::Zero, C::Zero),
        (P::NotZero, S::One, C::One),
        (P::NotZero, S::TildeTwo, C::Two),
        (P::Zero, S::One, C::OverlapError),
        (P::Zero, S::TildeTwo, C::OverlapError),
        (P::NotZero, S::Zero, C::OverlapError),
    ];
    let ok = cases
        .iter()
        .filter(|(p, s, c)| truth_table_combine(*p, *s) == *c)
        .count();
    verdict(ok == 6, format!("{ok}/6 input pairs match the table"))
}

/// Criterion 4: Two Gaussian blobs: empirical error against the ideal-fidelity formula.
fn two_blob_error() -> Verdict {
    let sigma = 0.1;
    let snr = 3.0;
    let n = 100_000;
    let c0 = Complex64::new(0.2, -0.1);
    let c1 = c0 + Complex64::from_polar(snr * sigma, 0.7);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draw = |c: Complex64, rng: &mut ChaCha8Rng| {
        c + Complex64::new(noise.sample(rng), noise.sample(rng))
    };
    let cal0: Vec<_> = (0..n).map(|_| draw(c0, &mut rng)).collect();
    let cal1: Vec<_> = (0..n).map(|_| draw(c1, &mut rng)).collect();
    let axis = fit_projection(&cal0, &cal1).unwrap();
    let mut errors = 0;
    for _ in 0..n {
        errors += usize::from(classify_two_state(draw(c0, &mut rng), &axis) != PrimaryLabel::Zero);
        errors +=
            usize::from(classify_two_state(draw(c1, &mut rng), &axis) != PrimaryLabel::NotZero);
    }
    let empirical = errors as f64 / (2 * n) as f64;
    let expected = 1.0 - ideal_fidelity(snr);
    let oracle = common::normal_tail(snr / 2.0);
    let sd = (expected * (1.0 - expected) / (2 * n) as f64).sqrt();
    let z = (empirical - expected).abs() / sd;
    verdict(
        z <= 4.0 && (expected - oracle).abs() < 1e-9,
        format!(
            "SNR 3: empirical error {empirical:.5}, 1 - F_id = {expected:.5} \
             (Gaussian tail oracle {oracle:.5}), {z:.2} sigma (tol 4)"
        ),
    )
}

fn two_state_summary(
    config: &ExperimentConfig,
) -> (transmon_readout::experiments::TwoStateSummary, f64) {
    let started = Instant::now();
    let report = run_two_state(config, None).unwrap();
    let RunSummary::TwoState(s) = report.summary else {
        unreachable!()
    };
    (s, started.elapsed().as_secs_f64())
}

/// Criterion 5: Shelved two-state assignment fidelity at the default device parameters.
fn two_state_fidelity() -> Verdict {
    let config = ExperimentConfig::default();
    let f_id = configured_ideal_fidelity(&config).unwrap();
    let (s, secs) = two_state_summary(&config);
    let f = s.shelved.fidelity.assignment_fidelity;
    let reduction = s.error_reduction;
    verdict(
        (0.993..=0.997).contains(&f)
            && reduction >= 0.40
            && secs < 120.0
            && (f_id - 0.9995).abs() < 1e-6,
        format!(
            "configured F_id {:.3}%, shelved F_a {:.3}% (range [99.3, 99.7]), unshelved {:.3}%, \
             error reduction {:.1}% (min 40%), {} shots x {} repetitions in {secs:.1} s (max 120)",
            100.0 * f_id,
            100.0 * f,
            100.0 * s.unshelved.fidelity.assignment_fidelity,
            100.0 * reduction,
            config.run.shots,
            config.run.repetitions
        ),
    )
}

fn three_state(seed: u64) -> (ThreeStateSummary, f64) {
    let mut config = ExperimentConfig::default();
    config.run.seed = seed;
    let started = Instant::now();
    let report = run_three_state(&config, None).unwrap();
    let RunSummary::ThreeState(s) = report.summary else {
        unreachable!()
    };
    (*s, started.elapsed().as_secs_f64())
}

/// Criterion 6: Two-tone three-state readout against the single-tone baseline.
fn three_state_fidelity(s: &ThreeStateSummary, secs: f64) -> Verdict {
    let two_tone = s.headline_assignment_fidelity;
    let single = s.single_tone.fidelity.assignment_fidelity;
    let c = &s.fnn.fidelity.conditional;
    let (p02, p12) = (c[0][2], c[1][2]);
    verdict(
        two_tone >= 0.96 && single < two_tone && p02 > p12 && secs < 300.0,
        format!(
            "two-tone FNN F_a(3) {:.3}% (min 96%), single-tone {:.3}%, P(0|2) {:.3}% > P(1|2) {:.3}%, \
             {secs:.1} s (max 300)",
            100.0 * two_tone,
            100.0 * single,
            100.0 * p02,
            100.0 * p12
        ),
    )
}

/// Criterion 7: FNN overall error against the truth table over five seeds.
fn fnn_vs_truth_table(first: &ThreeStateSummary) -> Verdict {
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 1..=5u64 {
        let s = if seed == 1 {
            first.clone()
        } else {
            three_state(seed).0
        };
        let (nn, tt) = (s.fnn.overall_error, s.truth_table.overall_error);
        wins += usize::from(nn <= tt);
        pairs.push(format!("{:.2}/{:.2}", 100.0 * nn, 100.0 * tt));
    }
    verdict(
        wins >= 4,
        format!(
            "FNN <= truth table in {wins}/5 seeds (min 4); error % FNN/TT: {}",
            pairs.join(", ")
        ),
    )
}

/// Criterion 8: Backpropagated gradients against central differences of an
/// independent forward pass.
fn gradient_check() -> Verdict {
    let model = FnnModel::initialise(8);
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let batch: Vec<([f64; 4], usize)> = (0..32)
        .map(|_| {
            let x = [0.0; 4].map(|_: f64| rng.random_range(-2.0..2.0));
            (x, rng.random_range(0..3))
        })
        .collect();
    let (loss, grads) = model.loss_and_gradients(&batch);
    let loss_gap = (loss - common::cross_entropy(&model, &batch)).abs();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (k, layer) in model.layers.iter().enumerate() {
        for idx in 0..layer.weights.len() + layer.biases.len() {
            let perturbed = |delta: f64| {
                let mut m = model.clone();
                let l = &mut m.layers[k];
                if idx < l.weights.len() {
                    l.weights[idx] += delta;
                } else {
                    l.biases[idx - l.weights.len()] += delta;
                }
                common::cross_entropy(&m, &batch)
            };
            let numeric = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            let g = &grads.layers[k];
            let analytic = if idx < g.weights.len() {
                g.weights[idx]
            } else {
                g.biases[idx - g.weights.len()]
            };
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            count += 1;
        }
    }
    verdict(
        worst < 1e-4 && loss_gap < 1e-12,
        format!("{count} parameters, max relative error {worst:.2e} at step 1e-5 (tol 1e-4)"),
    )
}

/// Criterion 9: Closed-loop recovery of the three lifetimes from noisy curves.
fn fit_recovery() -> Verdict {
    let truth = DecayRates::default();
    let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.5).collect();
    let guess = DecayRates::new(5.0, 6.5, 2.8).unwrap();
    let mut worst: f64 = 0.0;
    let trials = 10;
    let mut ok = true;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + trial);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let series: Vec<DecaySeries> = [Level::One, Level::Two, Level::Three]
            .into_iter()
            .map(|level| DecaySeries {
                prepared: level,
                times: times.clone(),
                p0: times
                    .iter()
                    .map(|&t| {
                        let mut p = [0.0; 4];
                        p[level.index()] = 1.0;
                        common::cascade_rk4([6.18, 5.21, 2.06], p, t, 1e-3)[0]
                            + noise.sample(&mut rng)
                    })
                    .collect(),
            })
            .collect();
        match fit_decay_curves(&series, &guess, &FitOptions::default()) {
            Ok(fit) => {
                for (est, tru) in [
                    (fit.rates.t01, truth.t01),
                    (fit.rates.t12, truth.t12),
                    (fit.rates.t23, truth.t23),
                ] {
                    worst = worst.max((est - tru).abs() / tru);
                }
            }
            Err(_) => ok = false,
        }
    }
    verdict(
        ok && worst <= 0.05,
        format!("{trials} noise realisations (sigma 0.01, 50 points per curve), worst relative error {:.2}% (tol 5%)", 100.0 * worst),
    )
}

/// Criterion 10: SPAM mitigation inverts a known assignment matrix.
fn spam_round_trip() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=4);
        let mut cols = vec![vec![0.0; n]; n];
        for (j, col) in cols.iter_mut().enumerate() {
            for (i, v) in col.iter_mut().enumerate() {
                *v = if i == j {
                    rng.random_range(3.0..6.0)
                } else {
                    rng.random_range(0.0..0.5)
                };
            }
            let s: f64 = col.iter().sum();
            col.iter_mut().for_each(|v| *v /= s);
        }
        let probs: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| cols[j][i]).collect())
            .collect();
        let m = AssignmentMatrix::from_probabilities(probs.clone()).unwrap();
        let mut x: Vec<f64> = (0..n)
            .map(|_| -rng.random_range(1e-3f64..1.0).ln())
            .collect();
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
        let raw: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| probs[i][j] * x[j]).sum())
            .collect();
        let back = spam_mitigate(&raw, &m).unwrap();
        let oracle = common::gauss_solve(probs, raw);
        for k in 0..n {
            worst = worst
                .max((back[k] - x[k]).abs())
                .max((oracle[k] - x[k]).abs());
        }
    }
    verdict(
        worst <= 1e-10,
        format!("100 random matrices (2..4 states), max |x - mitigated| = {worst:.2e} (tol 1e-10)"),
    )
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

/// Criterion 11: Byte-identical CLI outputs for identical config and seed.
fn cli_determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.toml");
    std::fs::write(
        &config,
        "[run]\ncalibration_shots = 4000\n[decay]\ntrajectories = 4000\n\
         [fnn]\nepochs = 20\ntrain_size = 3000\nvalidation_size = 1000\n",
    )
    .unwrap();
    let exe = env!("CARGO_BIN_EXE_transmon-readout");
    let mut identical = 0;
    let commands = ["shelving-decay", "two-state", "three-state", "freq-select"];
    let mut files = 0;
    for cmd in commands {
        let outs: Vec<_> = (0..2)
            .map(|k| {
                let out = tmp.path().join(format!("{cmd}-{k}"));
                let status = Command::new(exe)
                    .args([
                        cmd,
                        "--config",
                        config.to_str().unwrap(),
                        "--seed",
                        "11",
                        "--shots",
                        "4000",
                    ])
                    .arg("--out")
                    .arg(&out)
                    .output()
                    .unwrap();
                assert!(
                    status.status.success(),
                    "{cmd} failed: {}",
                    String::from_utf8_lossy(&status.stderr)
                );
                dir_contents(&out)
            })
            .collect();
        files += outs[0].len();
        identical += usize::from(!outs[0].is_empty() && outs[0] == outs[1]);
    }
    verdict(
        identical == commands.len(),
        format!(
            "{identical}/4 subcommands byte-identical across two runs ({files} files compared)"
        ),
    )
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut record = |n: usize, name: &'static str, v: Verdict| {
        println!(
            "criterion {n:>2} [{}] {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        results.push((n, name, v));
    };
    record(1, "decay error at readout", decay_error_at_readout());
    record(2, "population oracles", populations_oracles());
    record(3, "truth table", truth_table());
    record(4, "two-blob error vs ideal fidelity", two_blob_error());
    record(5, "shelved two-state fidelity", two_state_fidelity());
    let (first, secs) = three_state(1);
    record(
        6,
        "two-tone three-state readout",
        three_state_fidelity(&first, secs),
    );
    record(7, "FNN vs truth table", fnn_vs_truth_table(&first));
    record(8, "FNN gradient check", gradient_check());
    record(9, "decay fit recovery", fit_recovery());
    record(10, "SPAM round trip", spam_round_trip());
    record(11, "CLI determinism", cli_determinism());
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        results.len() - failed.len(),
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
