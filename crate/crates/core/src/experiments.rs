//! The four desk-scale experiments behind the CLI subcommands.
//!
//! Every random draw is seeded from `run.seed` through [`derive_seed`], so a
//! run is a pure function of its config. Reports carry the wall-clock time in
//! memory only; the written JSON stays byte-identical across runs.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DiscriminatorKind, ExperimentConfig, ReadoutMode, ResolvedDevice};
use crate::discriminate::{
    classify_nearest, classify_secondary, classify_two_state, fit_blob, fit_projection,
    fnn_classify, fnn_train, truth_table_combine, Dataset, GaussianBlob, PrimaryLabel,
    ProjectionAxis, SecondaryBlobs, TrainSummary,
};
use crate::error::{ReadoutError, Result};
use crate::io;
use crate::levels::{
    populations, preparation_scheme, sample_trajectory_with, shelve_sample, shelving_scheme, Level,
    Pulse, NUM_LEVELS,
};
use crate::metrics::{
    assignment_matrix, fit_decay_curves, ideal_fidelity, snr, DecayFit, DecaySeries,
    FidelityReport, FitOptions,
};
use crate::readout::{
    critical_photon_check, critical_photon_number, preselect, s21_response,
    select_single_tone_frequency, select_tone_frequencies, separation_curve, simulate_shots,
    IQShot, ShotSpec, ToneConfig, ToneRole, ToneSelection,
};
use crate::rng::derive_seed;

mod tag {
    pub const HERALD: u64 = 1;
    pub const TWO_STATE: u64 = 2;
    pub const THREE_STATE: u64 = 3;
    pub const SINGLE_TONE: u64 = 4;
    pub const FNN: u64 = 5;
    pub const DECAY: u64 = 6;
    pub const CALIBRATION: u64 = 0;
    pub const MEASUREMENT: u64 = 1;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub fidelity: Option<FidelityReport>,
    pub fitted_rates: Option<DecayFit>,
    pub summary: RunSummary,
    /// Files written to the output directory.
    pub outputs: Vec<String>,
    #[serde(skip)]
    pub wall_clock_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunSummary {
    ShelvingDecay(DecaySummary),
    TwoState(TwoStateSummary),
    ThreeState(Box<ThreeStateSummary>),
    FrequencySelection(FrequencySummary),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub readout_time_us: f64,
    /// Analytic `p0(tau_r)` per prepared level.
    pub p0_at_readout_analytic: [f64; NUM_LEVELS],
    /// Monte Carlo `p0(tau_r)` per prepared level.
    pub p0_at_readout_mc: [f64; NUM_LEVELS],
    /// Analytic `p1(tau_r)` after preparing `|3>`.
    pub p1_from_third_at_readout: f64,
    pub trajectories: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStateVariant {
    pub shelving: bool,
    pub fidelity: FidelityReport,
    pub error_rate: f64,
    pub assignment_fidelity_per_repetition: Vec<f64>,
    pub assignment_fidelity_std: f64,
    pub preselection_discard_fraction: f64,
    pub axis: ProjectionAxis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStateSummary {
    pub primary_frequency: f64,
    pub sigma: f64,
    pub shelved: TwoStateVariant,
    pub unshelved: TwoStateVariant,
    /// `1 - error(shelved) / error(unshelved)`.
    pub error_reduction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeStateResult {
    pub fidelity: FidelityReport,
    /// Misassigned plus discarded shots over all shots.
    pub overall_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeStateSummary {
    pub shelving: bool,
    pub mode: ReadoutMode,
    pub discriminator: DiscriminatorKind,
    pub primary_frequency: f64,
    pub secondary_frequency: f64,
    pub single_tone_frequency: f64,
    pub sigma: f64,
    pub headline_assignment_fidelity: f64,
    pub truth_table: ThreeStateResult,
    pub fnn: ThreeStateResult,
    pub single_tone: ThreeStateResult,
    pub preselection_discard_fraction: f64,
    pub secondary_blobs: SecondaryBlobs,
    pub training: Option<TrainSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencySummary {
    pub selection: ToneSelection,
    pub separation_mhz: f64,
    pub critical_photon_number: f64,
    pub total_photon_number: f64,
    pub photon_number_ok: bool,
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    device: ResolvedDevice,
    herald: Option<ProjectionAxis>,
}

impl<'a> Context<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self> {
        let device = config.resolve()?;
        let mut ctx = Context {
            config,
            device,
            herald: None,
        };
        if config.run.preselection {
            // Heralding discriminator: |0> vs |1> at the primary tone.
            let spec = ctx.spec(vec![ctx.device.primary.clone()], Vec::new(), false);
            let n = config.run.calibration_shots;
            let g = simulate_shots(&spec, Level::Zero, n, ctx.seed(&[tag::HERALD, 0]))?;
            let e = simulate_shots(&spec, Level::One, n, ctx.seed(&[tag::HERALD, 1]))?;
            ctx.herald = Some(fit_projection(
                &tone_voltages(&g, 0),
                &tone_voltages(&e, 0),
            )?);
        }
        Ok(ctx)
    }

    fn seed(&self, path: &[u64]) -> u64 {
        path.iter()
            .fold(self.config.run.seed, |s, &t| derive_seed(s, t))
    }

    fn spec(&self, tones: Vec<ToneConfig>, scheme: Vec<Pulse>, herald: bool) -> ShotSpec {
        let d = &self.config.device;
        ShotSpec {
            model: self.config.resonator.clone(),
            tones,
            herald: herald.then(|| self.device.primary.clone()),
            rates: d.rates,
            scheme,
            noise: self.device.noise,
            transfer_error: d.transfer_error,
            preparation_error: d.preparation_error,
            thermal_population: d.thermal_population,
        }
    }

    /// Readout spec; heralded when preselection is on.
    fn readout_spec(&self, tones: Vec<ToneConfig>, shelving: bool) -> ShotSpec {
        let scheme = if shelving {
            shelving_scheme()
        } else {
            Vec::new()
        };
        self.spec(tones, scheme, self.herald.is_some())
    }

    /// Simulated shots that survive preselection, and the number discarded.
    fn shots(
        &self,
        spec: &ShotSpec,
        prepared: Level,
        count: usize,
        path: &[u64],
    ) -> Result<(Vec<IQShot>, usize)> {
        let shots = simulate_shots(spec, prepared, count, self.seed(path))?;
        match &self.herald {
            Some(axis) => {
                let out = preselect(shots, |v| classify_two_state(v, axis) == PrimaryLabel::Zero)?;
                Ok((out.kept, out.discarded))
            }
            None => Ok((shots, 0)),
        }
    }
}

fn tone_voltages(shots: &[IQShot], tone: usize) -> Vec<Complex64> {
    shots.iter().map(|s| s.voltages[tone]).collect()
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

struct Outputs<'p> {
    dir: Option<&'p Path>,
    names: Vec<String>,
}

impl<'p> Outputs<'p> {
    fn new(dir: Option<&'p Path>) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d).map_err(|e| ReadoutError::io(d, e))?;
        }
        Ok(Outputs {
            dir,
            names: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if let Some(d) = self.dir {
            f(&d.join(name))?;
            self.names.push(name.to_string());
        }
        Ok(())
    }

    fn finish(mut self, mut report: RunReport, started: Instant) -> Result<RunReport> {
        let name = format!("{}_report.json", report.experiment);
        if let Some(d) = self.dir {
            self.names.push(name.clone());
            report.outputs = self.names;
            io::write_json(&d.join(&name), &report)?;
        }
        report.wall_clock_s = started.elapsed().as_secs_f64();
        Ok(report)
    }
}

fn report(config: &ExperimentConfig, experiment: &str, summary: RunSummary) -> RunReport {
    RunReport {
        experiment: experiment.to_string(),
        config_hash: config.hash(),
        seed: config.run.seed,
        fidelity: None,
        fitted_rates: None,
        summary,
        outputs: Vec::new(),
        wall_clock_s: 0.0,
    }
}

#[derive(Serialize)]
struct DecayRow {
    t_us: f64,
    prepared: Level,
    p0_mc: f64,
    p0_analytic: f64,
}

/// Monte Carlo ground-state population after preparing each level, the
/// analytic curves and a joint fit of the relaxation times.
pub fn run_shelving_decay(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunReport> {
    let started = Instant::now();
    config.validate()?;
    let mut outputs = Outputs::new(out)?;
    let rates = config.device.rates;
    let times = config.decay.times();
    let tau = config.tones.duration_ns * 1e-3;
    let n = config.decay.trajectories;
    let horizon = config.decay.t_max_us.max(tau);

    // Ground-state counts at every grid time, plus tau_r as the last entry.
    let mut probes = times.clone();
    probes.push(tau);
    let mut series = Vec::new();
    let mut rows = Vec::new();
    let mut p0_analytic = [0.0; NUM_LEVELS];
    let mut p0_mc = [0.0; NUM_LEVELS];
    for level in Level::ALL {
        let master = derive_seed(
            derive_seed(config.run.seed, tag::DECAY),
            level.index() as u64,
        );
        let scheme = preparation_scheme(level);
        let counts = (0..n as u64)
            .into_par_iter()
            .map(|i| -> Result<Vec<u64>> {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, i));
                let start = shelve_sample(
                    Level::Zero,
                    &scheme,
                    config.device.preparation_error,
                    &mut rng,
                );
                let traj = sample_trajectory_with(&rates, start, horizon, &mut rng)?;
                Ok(probes
                    .iter()
                    .map(|&t| u64::from(traj.level_at(t) == Level::Zero))
                    .collect())
            })
            .try_reduce(
                || vec![0; probes.len()],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )?;
        let p0: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        p0_mc[level.index()] = p0[times.len()];
        p0_analytic[level.index()] = populations(&rates, level, tau)?.p[0];
        for (&t, &p) in times.iter().zip(&p0) {
            rows.push(DecayRow {
                t_us: t,
                prepared: level,
                p0_mc: p,
                p0_analytic: populations(&rates, level, t)?.p[0],
            });
        }
        series.push(DecaySeries {
            prepared: level,
            times: times.clone(),
            p0: p0[..times.len()].to_vec(),
        });
    }

    let options = FitOptions {
        fit_baseline: config.decay.fit_baseline,
        ..FitOptions::default()
    };
    let guess = if rates.is_finite() {
        rates
    } else {
        crate::levels::DecayRates::default()
    };
    let fit = fit_decay_curves(&series, &guess, &options)?;
    outputs.write("shelving_decay.csv", |p| io::write_records(p, rows))?;

    let summary = DecaySummary {
        readout_time_us: tau,
        p0_at_readout_analytic: p0_analytic,
        p0_at_readout_mc: p0_mc,
        p1_from_third_at_readout: populations(&rates, Level::Three, tau)?.p[1],
        trajectories: n,
    };
    let mut r = report(config, "shelving-decay", RunSummary::ShelvingDecay(summary));
    r.fitted_rates = Some(fit);
    outputs.finish(r, started)
}

#[derive(Serialize)]
struct HistogramRow {
    shelving: bool,
    bin_low: f64,
    bin_high: f64,
    prepared_0: u64,
    prepared_1: u64,
}

fn histogram(shelving: bool, ground: &[f64], excited: &[f64], bins: usize) -> Vec<HistogramRow> {
    let all = ground.iter().chain(excited);
    let lo = all.clone().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let index = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    let mut counts = vec![[0u64; 2]; bins];
    for &x in ground {
        counts[index(x)][0] += 1;
    }
    for &x in excited {
        counts[index(x)][1] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, [c0, c1])| HistogramRow {
            shelving,
            bin_low: lo + k as f64 * width,
            bin_high: lo + (k + 1) as f64 * width,
            prepared_0: c0,
            prepared_1: c1,
        })
        .collect()
}

struct VariantData {
    summary: TwoStateVariant,
    shots: Vec<IQShot>,
    histogram: Vec<HistogramRow>,
}

fn two_state_variant(ctx: &Context, shelving: bool) -> Result<VariantData> {
    let run = &ctx.config.run;
    let spec = ctx.readout_spec(vec![ctx.device.primary.clone()], shelving);
    let base = [tag::TWO_STATE, u64::from(shelving)];
    let cal = |level: Level| {
        ctx.shots(
            &spec,
            level,
            run.calibration_shots,
            &[base[0], base[1], tag::CALIBRATION, level.index() as u64],
        )
    };
    let (c0, _) = cal(Level::Zero)?;
    let (c1, _) = cal(Level::One)?;
    let axis = fit_projection(&tone_voltages(&c0, 0), &tone_voltages(&c1, 0))?;

    let mut outcomes = Vec::new();
    let mut per_rep = Vec::with_capacity(run.repetitions);
    let mut proj = [Vec::new(), Vec::new()];
    let mut discarded = 0;
    let mut total = 0;
    let mut first = Vec::new();
    let mut histogram_rows = Vec::new();
    for rep in 0..run.repetitions as u64 {
        let mut rep_outcomes = Vec::new();
        let mut rep_proj = [Vec::new(), Vec::new()];
        for (j, level) in [Level::Zero, Level::One].into_iter().enumerate() {
            let path = [base[0], base[1], tag::MEASUREMENT, rep, j as u64];
            let (kept, dropped) = ctx.shots(&spec, level, run.shots, &path)?;
            discarded += dropped;
            total += kept.len() + dropped;
            for s in &kept {
                let v = s.voltages[0];
                let assigned = match classify_two_state(v, &axis) {
                    PrimaryLabel::Zero => 0,
                    PrimaryLabel::NotZero => 1,
                };
                rep_outcomes.push((j, Some(assigned)));
                rep_proj[j].push(axis.project(v));
            }
            if rep == 0 {
                first.extend(kept);
            }
        }
        let m = assignment_matrix(rep_outcomes.iter().copied(), 2)?;
        per_rep.push(FidelityReport::from_matrix(&m, None)?.assignment_fidelity);
        if rep == 0 {
            histogram_rows = histogram(shelving, &rep_proj[0], &rep_proj[1], run.histogram_bins);
        }
        outcomes.extend(rep_outcomes);
        for j in 0..2 {
            proj[j].append(&mut rep_proj[j]);
        }
    }
    let m = assignment_matrix(outcomes, 2)?;
    let s = snr(&proj[0], &proj[1])?;
    let fidelity = FidelityReport::from_matrix(&m, Some(s))?;
    Ok(VariantData {
        summary: TwoStateVariant {
            shelving,
            error_rate: 1.0 - fidelity.assignment_fidelity,
            fidelity,
            assignment_fidelity_std: sample_std(&per_rep),
            assignment_fidelity_per_repetition: per_rep,
            preselection_discard_fraction: discarded as f64 / total as f64,
            axis,
        },
        shots: first,
        histogram: histogram_rows,
    })
}

/// Two-state readout of `|0>` against everything else, with and without
/// shelving, at the primary tone.
pub fn run_two_state(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunReport> {
    let started = Instant::now();
    config.validate()?;
    let discriminator = config.discriminator_or(DiscriminatorKind::Threshold);
    if discriminator != DiscriminatorKind::Threshold {
        return Err(ReadoutError::Config(format!(
            "two-state readout uses the threshold discriminator, got '{discriminator}'"
        )));
    }
    let mut outputs = Outputs::new(out)?;
    let ctx = Context::new(config)?;
    let shelved = two_state_variant(&ctx, true)?;
    let unshelved = two_state_variant(&ctx, false)?;

    outputs.write("two_state_shelved_shots.csv", |p| {
        io::write_shots_csv(p, &shelved.shots)
    })?;
    outputs.write("two_state_unshelved_shots.csv", |p| {
        io::write_shots_csv(p, &unshelved.shots)
    })?;
    outputs.write("two_state_histogram.csv", |p| {
        io::write_records(p, shelved.histogram.iter().chain(&unshelved.histogram))
    })?;

    let error_reduction = 1.0 - shelved.summary.error_rate / unshelved.summary.error_rate;
    let headline = if config.run.shelving {
        &shelved
    } else {
        &unshelved
    };
    let fidelity = headline.summary.fidelity.clone();
    let summary = TwoStateSummary {
        primary_frequency: ctx.device.primary.frequency,
        sigma: ctx.device.noise.sigma,
        shelved: shelved.summary,
        unshelved: unshelved.summary,
        error_reduction,
    };
    let mut r = report(config, "two-state", RunSummary::TwoState(summary));
    r.fidelity = Some(fidelity);
    outputs.finish(r, started)
}

fn three_state_result(outcomes: &[(usize, Option<usize>)]) -> Result<ThreeStateResult> {
    let m = assignment_matrix(outcomes.iter().copied(), 3)?;
    let errors = outcomes.iter().filter(|(j, a)| *a != Some(*j)).count();
    Ok(ThreeStateResult {
        fidelity: FidelityReport::from_matrix(&m, None)?,
        overall_error: errors as f64 / outcomes.len() as f64,
    })
}

/// Preselected two-tone calibration shots, interleaved by class, at least
/// `needed` rows long.
fn simulate_fnn_dataset(ctx: &Context, spec: &ShotSpec, needed: usize) -> Result<Dataset> {
    let mut per_class = needed.div_ceil(3) + needed / 20 + 16;
    for attempt in 0..8u64 {
        let mut kept = Vec::new();
        for j in 0..3u64 {
            let level = Level::from_index(j as usize)?;
            let (shots, _) = ctx.shots(spec, level, per_class, &[tag::FNN, attempt, j])?;
            kept.push(shots);
        }
        let rows = kept.iter().map(Vec::len).min().unwrap_or(0);
        if 3 * rows >= needed {
            let mut data = Dataset::default();
            for k in 0..rows {
                for (j, shots) in kept.iter().enumerate() {
                    data.push(io::two_tone_features(&shots[k])?, j);
                }
            }
            return Ok(data);
        }
        per_class *= 2;
    }
    Err(ReadoutError::Numeric(
        "preselection discards too many shots to build the FNN calibration set".into(),
    ))
}

#[derive(Serialize)]
struct AssignmentRow<'a> {
    discriminator: &'a str,
    assigned: usize,
    prepared_0: f64,
    prepared_1: f64,
    prepared_2: f64,
}

/// Three-state readout of `|0>`, `|1>`, `|2>`: two-tone truth table, two-tone
/// FNN and the single-tone Gaussian baseline.
pub fn run_three_state(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunReport> {
    let started = Instant::now();
    config.validate()?;
    let mode = config.run.mode;
    let default_discriminator = match mode {
        ReadoutMode::SingleTone3State => DiscriminatorKind::Gaussian,
        _ => DiscriminatorKind::Fnn,
    };
    let discriminator = config.discriminator_or(default_discriminator);
    match (mode, discriminator) {
        (ReadoutMode::TwoTone3State, DiscriminatorKind::Fnn | DiscriminatorKind::TruthTable)
        | (ReadoutMode::SingleTone3State, DiscriminatorKind::Gaussian) => {}
        (ReadoutMode::SingleTone2State, _) => {
            return Err(ReadoutError::Config(
                "three-state readout needs mode two-tone-3state or single-tone-3state".into(),
            ))
        }
        _ => {
            return Err(ReadoutError::Config(format!(
                "discriminator '{discriminator}' is not available in the selected readout mode"
            )))
        }
    }
    let mut outputs = Outputs::new(out)?;
    let ctx = Context::new(config)?;
    let run = &config.run;
    let shelving = run.shelving;
    let states = [Level::Zero, Level::One, Level::Two];

    // Two-tone calibration for the truth table.
    let tones = vec![ctx.device.primary.clone(), ctx.device.secondary.clone()];
    let spec = ctx.readout_spec(tones, shelving);
    let cal_levels: &[Level] = if shelving { &states } else { &Level::ALL };
    let mut cal = Vec::new();
    for &level in cal_levels {
        let path = [tag::THREE_STATE, tag::CALIBRATION, level.index() as u64];
        cal.push(ctx.shots(&spec, level, run.calibration_shots, &path)?.0);
    }
    let axis = fit_projection(&tone_voltages(&cal[0], 0), &tone_voltages(&cal[1], 0))?;
    let mut tilde = tone_voltages(&cal[2], 1);
    if !shelving {
        // Without shelving |2> and |3> overlap at the secondary tone.
        tilde.extend(tone_voltages(&cal[3], 1));
    }
    let blobs = SecondaryBlobs {
        zero: fit_blob(&tone_voltages(&cal[0], 1))?,
        one: fit_blob(&tone_voltages(&cal[1], 1))?,
        tilde_two: fit_blob(&tilde)?,
    };

    // FNN: load, or train on a fresh calibration set.
    let train_config = config.fnn.train_config(ctx.seed(&[tag::FNN, u64::MAX]));
    let (model, training) = match &config.fnn.model_path {
        Some(path) => (io::read_model(path)?, None),
        None => {
            let needed = train_config.train_size + train_config.validation_size;
            let data = match &config.fnn.calibration_csv {
                Some(path) => io::shots_to_dataset(&io::read_shots_csv(path)?)?,
                None => simulate_fnn_dataset(&ctx, &spec, needed)?,
            };
            let (model, summary) = fnn_train(&data, &train_config)?;
            (model, Some(summary))
        }
    };

    // Held-out measurement.
    let mut measured = Vec::new();
    let mut discarded = 0;
    let mut total = 0;
    for (j, &level) in states.iter().enumerate() {
        let path = [tag::THREE_STATE, tag::MEASUREMENT, j as u64];
        let (kept, dropped) = ctx.shots(&spec, level, run.shots, &path)?;
        discarded += dropped;
        total += kept.len() + dropped;
        measured.push(kept);
    }
    let mut tt = Vec::new();
    let mut nn = Vec::new();
    for (j, shots) in measured.iter().enumerate() {
        for s in shots {
            let primary = classify_two_state(s.voltages[0], &axis);
            let secondary = classify_secondary(s.voltages[1], &blobs);
            tt.push((j, truth_table_combine(primary, secondary).state_index()));
            let (label, _) = fnn_classify(&model, &io::two_tone_features(s)?);
            nn.push((j, label.state_index()));
        }
    }
    let truth_table = three_state_result(&tt)?;
    let fnn = three_state_result(&nn)?;

    // Conventional single-tone baseline: no shelving, one tone at the
    // frequency that best separates |0>, |1> and |2>.
    let (single_frequency, _) =
        select_single_tone_frequency(&config.resonator, &ctx.device.sweep, &states)?;
    let single_tone = ToneConfig {
        frequency: single_frequency,
        role: ToneRole::Primary,
        ..ctx.device.primary.clone()
    };
    let single_spec = ctx.readout_spec(vec![single_tone], false);
    let mut single_blobs: Vec<(usize, GaussianBlob)> = Vec::new();
    for (j, &level) in states.iter().enumerate() {
        let path = [tag::SINGLE_TONE, tag::CALIBRATION, j as u64];
        let (shots, _) = ctx.shots(&single_spec, level, run.calibration_shots, &path)?;
        single_blobs.push((j, fit_blob(&tone_voltages(&shots, 0))?));
    }
    let mut st = Vec::new();
    for (j, &level) in states.iter().enumerate() {
        let path = [tag::SINGLE_TONE, tag::MEASUREMENT, j as u64];
        let (shots, _) = ctx.shots(&single_spec, level, run.shots, &path)?;
        st.extend(
            shots
                .iter()
                .map(|s| (j, Some(classify_nearest(s.voltages[0], &single_blobs)))),
        );
    }
    let single_tone = three_state_result(&st)?;

    let headline = match discriminator {
        DiscriminatorKind::TruthTable => &truth_table,
        DiscriminatorKind::Gaussian => &single_tone,
        _ => &fnn,
    };
    let fidelity = headline.fidelity.clone();

    outputs.write("three_state_shots.csv", |p| {
        io::write_shots_csv(p, measured.iter().flatten())
    })?;
    outputs.write("three_state_assignment.csv", |p| {
        let mut rows = Vec::new();
        for (name, result) in [
            ("truth-table", &truth_table),
            ("fnn", &fnn),
            ("gaussian", &single_tone),
        ] {
            for (i, row) in result.fidelity.conditional.iter().enumerate() {
                rows.push(AssignmentRow {
                    discriminator: name,
                    assigned: i,
                    prepared_0: row[0],
                    prepared_1: row[1],
                    prepared_2: row[2],
                });
            }
        }
        io::write_records(p, rows)
    })?;
    if training.is_some() {
        outputs.write("fnn_model.json", |p| io::write_model(p, &model))?;
    }

    let summary = ThreeStateSummary {
        shelving,
        mode,
        discriminator,
        primary_frequency: ctx.device.primary.frequency,
        secondary_frequency: ctx.device.secondary.frequency,
        single_tone_frequency: single_frequency,
        sigma: ctx.device.noise.sigma,
        headline_assignment_fidelity: fidelity.assignment_fidelity,
        truth_table,
        fnn,
        single_tone,
        preselection_discard_fraction: discarded as f64 / total as f64,
        secondary_blobs: blobs,
        training,
    };
    let mut r = report(
        config,
        "three-state",
        RunSummary::ThreeState(Box::new(summary)),
    );
    r.fidelity = Some(fidelity);
    outputs.finish(r, started)
}

#[derive(Serialize)]
struct S21Row {
    frequency_ghz: f64,
    level: Level,
    re: f64,
    im: f64,
    magnitude: f64,
}

#[derive(Serialize)]
struct SeparationRow {
    frequency_ghz: f64,
    d01: f64,
    d12: f64,
    d03: f64,
    d23: f64,
}

/// Per-level transmission over the sweep and the selected readout tones.
pub fn run_frequency_selection(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunReport> {
    let started = Instant::now();
    config.validate()?;
    let model = &config.resonator;
    let sweep = config.sweep.grid(model.omega_r);
    let selection = select_tone_frequencies(model, &sweep, config.sweep.min_zero_three)?;
    let mut outputs = Outputs::new(out)?;

    outputs.write("s21.csv", |p| {
        let rows = Level::ALL.iter().flat_map(|&level| {
            sweep.iter().map(move |&w| {
                let s = s21_response(model, w, level);
                S21Row {
                    frequency_ghz: w,
                    level,
                    re: s.re,
                    im: s.im,
                    magnitude: s.norm(),
                }
            })
        });
        io::write_records(p, rows)
    })?;
    outputs.write("separation.csv", |p| {
        let d = |a, b| separation_curve(model, &sweep, a, b);
        let (d01, d12, d03, d23) = (
            d(Level::Zero, Level::One),
            d(Level::One, Level::Two),
            d(Level::Zero, Level::Three),
            d(Level::Two, Level::Three),
        );
        io::write_records(
            p,
            (0..sweep.len()).map(|k| SeparationRow {
                frequency_ghz: sweep[k],
                d01: d01[k],
                d12: d12[k],
                d03: d03[k],
                d23: d23[k],
            }),
        )
    })?;

    let total = config.tones.primary.photon_number + config.tones.secondary.photon_number;
    let summary = FrequencySummary {
        separation_mhz: (selection.primary - selection.secondary).abs() * 1e3,
        selection,
        critical_photon_number: critical_photon_number(model),
        total_photon_number: total,
        photon_number_ok: critical_photon_check(total, model)?,
    };
    let r = report(
        config,
        "freq-select",
        RunSummary::FrequencySelection(summary),
    );
    outputs.finish(r, started)
}

/// Convenience for the two-state ideal fidelity at the configured noise.
pub fn configured_ideal_fidelity(config: &ExperimentConfig) -> Result<f64> {
    let device = config.resolve()?;
    let model = &config.resonator;
    let d = (crate::readout::iq_center(model, &device.primary, Level::Three)
        - crate::readout::iq_center(model, &device.primary, Level::Zero))
    .norm();
    Ok(ideal_fidelity(d / device.noise.sigma))
}
