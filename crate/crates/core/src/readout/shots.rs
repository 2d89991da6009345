use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::resonator::{iq_center, ResonatorModel, ToneConfig};
use crate::error::{ReadoutError, Result};
use crate::levels::{
    check_probability, preparation_scheme, sample_trajectory_with, shelve_sample, DecayRates,
    JumpTrajectory, Level, Pulse,
};
use crate::rng::derive_seed;

/// Circular Gaussian noise on each integrated voltage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation per quadrature; zero gives noiseless shots.
    pub sigma: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(ReadoutError::Config(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreselectFlag {
    Passed,
    Failed,
    Unchecked,
}

impl PreselectFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PreselectFlag::Passed => "passed",
            PreselectFlag::Failed => "failed",
            PreselectFlag::Unchecked => "unchecked",
        }
    }
}

/// One repetition of the readout experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IQShot {
    /// Integrated voltage for each tone, in tone order.
    pub voltages: Vec<Complex64>,
    /// Primary-tone voltage of the heralding measurement, if one was taken.
    pub preselection_record: Option<Complex64>,
    pub preselection: PreselectFlag,
    /// Prepared initial state (ground truth).
    pub prepared: Level,
    /// Level at the start of the readout window, after all pulses (ground
    /// truth; unknown for shots read back from disk).
    pub readout_level: Option<Level>,
}

impl IQShot {
    /// `[I1, Q1, I2, Q2, ...]`.
    pub fn features(&self) -> Vec<f64> {
        self.voltages.iter().flat_map(|v| [v.re, v.im]).collect()
    }
}

/// Everything that stays fixed from shot to shot.
#[derive(Clone, Debug)]
pub struct ShotSpec {
    pub model: ResonatorModel,
    pub tones: Vec<ToneConfig>,
    /// Tone of the heralding readout taken before state preparation.
    pub herald: Option<ToneConfig>,
    pub rates: DecayRates,
    /// Pulses applied after state preparation, e.g. `pi12, pi23` for shelving.
    pub scheme: Vec<Pulse>,
    pub noise: NoiseModel,
    /// Failure probability of each shelving pulse.
    pub transfer_error: f64,
    /// Failure probability of each state-preparation pulse.
    pub preparation_error: f64,
    /// Probability of starting in `|1>` instead of `|0>`.
    pub thermal_population: f64,
}

impl ShotSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.rates.validate()?;
        self.noise.validate()?;
        if self.tones.is_empty() {
            return Err(ReadoutError::Config(
                "at least one readout tone is required".into(),
            ));
        }
        for tone in self.tones.iter().chain(&self.herald) {
            tone.validate()?;
        }
        check_probability(self.transfer_error, "transfer_error")?;
        check_probability(self.preparation_error, "preparation_error")?;
        check_probability(self.thermal_population, "thermal_population")?;
        Ok(())
    }

    fn window(&self) -> f64 {
        self.tones
            .iter()
            .map(ToneConfig::duration_us)
            .fold(0.0, f64::max)
    }
}

/// Time-averaged blob center over the first `window` microseconds of `traj`.
fn integrated_center(
    model: &ResonatorModel,
    tone: &ToneConfig,
    traj: &JumpTrajectory,
    window: f64,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for seg in &traj.segments {
        let dt = seg.end.min(window) - seg.start;
        if dt > 0.0 {
            acc += iq_center(model, tone, seg.level) * dt;
        }
    }
    acc / window
}

fn noisy<R: Rng + ?Sized>(center: Complex64, noise: &Normal<f64>, rng: &mut R) -> Complex64 {
    let i = noise.sample(rng);
    let q = noise.sample(rng);
    center + Complex64::new(i, q)
}

/// Generates one shot.
///
/// The sequence is: thermal initial state, optional heralding readout,
/// preparation pulses, `spec.scheme`, then one decay trajectory shared by all
/// tones. Each tone integrates that trajectory over its own window and adds
/// one Gaussian draw per quadrature.
pub fn simulate_shot(spec: &ShotSpec, prepared: Level, seed: u64) -> Result<IQShot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise =
        Normal::new(0.0, spec.noise.sigma).map_err(|e| ReadoutError::Numeric(e.to_string()))?;

    let thermal = rng.random::<f64>() < spec.thermal_population;
    let mut level = if thermal { Level::One } else { Level::Zero };

    let preselection_record = if let Some(tone) = &spec.herald {
        let traj = sample_trajectory_with(&spec.rates, level, tone.duration_us(), &mut rng)?;
        level = traj.final_level();
        let center = integrated_center(&spec.model, tone, &traj, tone.duration_us());
        Some(noisy(center, &noise, &mut rng))
    } else {
        None
    };

    level = shelve_sample(
        level,
        &preparation_scheme(prepared),
        spec.preparation_error,
        &mut rng,
    );
    level = shelve_sample(level, &spec.scheme, spec.transfer_error, &mut rng);
    let readout_level = level;

    let traj = sample_trajectory_with(&spec.rates, level, spec.window(), &mut rng)?;
    let voltages = spec
        .tones
        .iter()
        .map(|tone| {
            let center = integrated_center(&spec.model, tone, &traj, tone.duration_us());
            noisy(center, &noise, &mut rng)
        })
        .collect();

    Ok(IQShot {
        voltages,
        preselection_record,
        preselection: PreselectFlag::Unchecked,
        prepared,
        readout_level: Some(readout_level),
    })
}

/// `count` shots of `prepared`, shot `i` seeded by `derive_seed(seed, i)`.
/// Generated in parallel; the output order is the shot index.
pub fn simulate_shots(
    spec: &ShotSpec,
    prepared: Level,
    count: usize,
    seed: u64,
) -> Result<Vec<IQShot>> {
    spec.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate_shot(spec, prepared, derive_seed(seed, i)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreselectionOutcome {
    pub kept: Vec<IQShot>,
    pub discarded: usize,
}

impl PreselectionOutcome {
    pub fn discard_fraction(&self) -> f64 {
        let total = self.kept.len() + self.discarded;
        if total == 0 {
            0.0
        } else {
            self.discarded as f64 / total as f64
        }
    }
}

/// Keeps the shots whose heralding record is classified as ground state.
pub fn preselect<F>(shots: Vec<IQShot>, is_ground: F) -> Result<PreselectionOutcome>
where
    F: Fn(Complex64) -> bool,
{
    let mut kept = Vec::with_capacity(shots.len());
    let mut discarded = 0;
    for mut shot in shots {
        let record = shot.preselection_record.ok_or_else(|| {
            ReadoutError::InvalidArgument("shot has no preselection record".into())
        })?;
        if is_ground(record) {
            shot.preselection = PreselectFlag::Passed;
            kept.push(shot);
        } else {
            discarded += 1;
        }
    }
    Ok(PreselectionOutcome { kept, discarded })
}
