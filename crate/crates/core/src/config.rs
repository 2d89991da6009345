//! TOML experiment configuration.
//!
//! Every section is optional; missing fields fall back to the reference
//! device. Unknown keys are rejected so that typos surface as config errors.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::discriminate::TrainConfig;
use crate::error::{ReadoutError, Result};
use crate::levels::{check_probability, DecayRates, Level};
use crate::metrics::snr_for_ideal_fidelity;
use crate::readout::{
    critical_photon_check, iq_center, select_tone_frequencies, NoiseModel, ResonatorModel,
    ToneConfig, ToneRole, ToneSelection,
};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub device: DeviceConfig,
    #[serde(default)]
    pub resonator: ResonatorModel,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub tones: TonesConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub fnn: FnnConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    pub rates: DecayRates,
    /// Probability of starting a shot in `|1>`.
    pub thermal_population: f64,
    /// Failure probability of each state-preparation pulse.
    pub preparation_error: f64,
    /// Failure probability of each shelving pulse.
    pub transfer_error: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig {
            rates: DecayRates::default(),
            thermal_population: 0.01,
            preparation_error: 0.008,
            transfer_error: 0.002,
        }
    }
}

/// Either a fixed `sigma` or a target overlap-limited fidelity from which
/// `sigma` is derived at the primary tone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub sigma: Option<f64>,
    pub target_ideal_fidelity: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma: None,
            target_ideal_fidelity: Some(0.9995),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToneSettings {
    /// Drive frequency in GHz; selected from the sweep when absent.
    pub frequency: Option<f64>,
    pub amplitude: f64,
    pub phase: f64,
    /// Mean intra-resonator photon number driven by this tone.
    pub photon_number: f64,
    pub centers: Option<[[f64; 2]; 4]>,
}

impl Default for ToneSettings {
    fn default() -> Self {
        ToneSettings {
            frequency: None,
            amplitude: 1.0,
            phase: 0.0,
            photon_number: 1.5,
            centers: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TonesConfig {
    /// Integration window shared by both tones (ns).
    pub duration_ns: f64,
    pub primary: ToneSettings,
    pub secondary: ToneSettings,
}

impl Default for TonesConfig {
    fn default() -> Self {
        TonesConfig {
            duration_ns: 140.0,
            primary: ToneSettings::default(),
            secondary: ToneSettings::default(),
        }
    }
}

/// Frequency grid around the bare resonance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Total width in MHz.
    pub span_mhz: f64,
    pub points: usize,
    /// Minimum `|S21(0) - S21(3)|` at the secondary tone.
    pub min_zero_three: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            span_mhz: 30.0,
            points: 3001,
            min_zero_three: 0.3,
        }
    }
}

impl SweepConfig {
    /// Grid in GHz centred on `center`.
    pub fn grid(&self, center: f64) -> Vec<f64> {
        let half = self.span_mhz * 1e-3 / 2.0;
        if self.points == 1 {
            return vec![center];
        }
        let step = 2.0 * half / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| center - half + step * k as f64)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutMode {
    #[serde(rename = "single-tone-2state")]
    SingleTone2State,
    #[serde(rename = "single-tone-3state")]
    SingleTone3State,
    #[serde(rename = "two-tone-3state")]
    TwoTone3State,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscriminatorKind {
    Threshold,
    Gaussian,
    TruthTable,
    Fnn,
}

impl DiscriminatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscriminatorKind::Threshold => "threshold",
            DiscriminatorKind::Gaussian => "gaussian",
            DiscriminatorKind::TruthTable => "truth-table",
            DiscriminatorKind::Fnn => "fnn",
        }
    }
}

impl fmt::Display for DiscriminatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiscriminatorKind {
    type Err = ReadoutError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold" => Ok(DiscriminatorKind::Threshold),
            "gaussian" => Ok(DiscriminatorKind::Gaussian),
            "truth-table" => Ok(DiscriminatorKind::TruthTable),
            "fnn" => Ok(DiscriminatorKind::Fnn),
            other => Err(ReadoutError::Config(format!(
                "unknown discriminator '{other}' (expected threshold, gaussian, truth-table or fnn)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Measurement shots per prepared state and repetition.
    pub shots: usize,
    /// Calibration shots per prepared state.
    pub calibration_shots: usize,
    pub repetitions: usize,
    pub shelving: bool,
    pub preselection: bool,
    /// Readout used for the headline three-state result.
    pub mode: ReadoutMode,
    /// Defaults to `threshold` for two-state and `fnn` for three-state runs.
    pub discriminator: Option<DiscriminatorKind>,
    pub histogram_bins: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            shots: 50_000,
            calibration_shots: 20_000,
            repetitions: 5,
            shelving: true,
            preselection: true,
            mode: ReadoutMode::TwoTone3State,
            discriminator: None,
            histogram_bins: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    /// Last delay (us).
    pub t_max_us: f64,
    pub points: usize,
    /// Monte Carlo trajectories per prepared state.
    pub trajectories: usize,
    pub fit_baseline: bool,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            t_max_us: 30.0,
            points: 50,
            trajectories: 20_000,
            fit_baseline: true,
        }
    }
}

impl DecayConfig {
    pub fn times(&self) -> Vec<f64> {
        let step = self.t_max_us / (self.points - 1) as f64;
        (0..self.points).map(|k| k as f64 * step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FnnConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub train_size: usize,
    pub validation_size: usize,
    /// Pre-trained model; training is skipped when present.
    pub model_path: Option<PathBuf>,
    /// Calibration shots in the shot CSV format; simulated when absent.
    pub calibration_csv: Option<PathBuf>,
}

impl Default for FnnConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        FnnConfig {
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            train_size: t.train_size,
            validation_size: t.validation_size,
            model_path: None,
            calibration_csv: None,
        }
    }
}

impl FnnConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            train_size: self.train_size,
            validation_size: self.validation_size,
            seed,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub discriminator: Option<DiscriminatorKind>,
    pub no_shelving: bool,
}

/// Tones, noise and frequency choice derived from a validated config.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedDevice {
    pub primary: ToneConfig,
    pub secondary: ToneConfig,
    pub noise: NoiseModel,
    /// Present when at least one frequency came from the sweep.
    pub selection: Option<ToneSelection>,
    pub sweep: Vec<f64>,
}

fn positive(value: f64, name: &str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ReadoutError::Config(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

fn nonzero(value: usize, name: &str) -> Result<()> {
    if value == 0 {
        Err(ReadoutError::Config(format!(
            "{name} must be greater than zero"
        )))
    } else {
        Ok(())
    }
}

fn config_probability(value: f64, name: &str) -> Result<()> {
    check_probability(value, name).map_err(|e| ReadoutError::Config(e.to_string()))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| ReadoutError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ReadoutError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ReadoutError::Config(msg) => ReadoutError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.run.seed = seed;
        }
        if let Some(shots) = overrides.shots {
            self.run.shots = shots;
        }
        if let Some(d) = overrides.discriminator {
            self.run.discriminator = Some(d);
        }
        if overrides.no_shelving {
            self.run.shelving = false;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let map = |e: ReadoutError| match e {
            ReadoutError::Config(_) => e,
            other => ReadoutError::Config(other.to_string()),
        };
        self.device.rates.validate().map_err(map)?;
        config_probability(self.device.thermal_population, "device.thermal_population")?;
        config_probability(self.device.preparation_error, "device.preparation_error")?;
        config_probability(self.device.transfer_error, "device.transfer_error")?;
        self.resonator.validate()?;

        match (self.noise.sigma, self.noise.target_ideal_fidelity) {
            (Some(_), Some(_)) => {
                return Err(ReadoutError::Config(
                    "set either noise.sigma or noise.target_ideal_fidelity, not both".into(),
                ))
            }
            (None, None) => {
                return Err(ReadoutError::Config(
                    "noise needs sigma or target_ideal_fidelity".into(),
                ))
            }
            (Some(s), None) => NoiseModel { sigma: s }.validate()?,
            (None, Some(f)) => {
                if !(f > 0.5 && f < 1.0) {
                    return Err(ReadoutError::Config(format!(
                        "noise.target_ideal_fidelity must lie in (0.5, 1), got {f}"
                    )));
                }
            }
        }

        positive(self.tones.duration_ns, "tones.duration_ns")?;
        for (name, t) in [
            ("primary", &self.tones.primary),
            ("secondary", &self.tones.secondary),
        ] {
            if !(t.amplitude >= 0.0) || !t.amplitude.is_finite() {
                return Err(ReadoutError::Config(format!(
                    "tones.{name}.amplitude must be non-negative, got {}",
                    t.amplitude
                )));
            }
            if !(t.photon_number >= 0.0) || !t.photon_number.is_finite() {
                return Err(ReadoutError::Config(format!(
                    "tones.{name}.photon_number must be non-negative, got {}",
                    t.photon_number
                )));
            }
            if t.frequency.is_some_and(|f| !(f > 0.0) || !f.is_finite()) {
                return Err(ReadoutError::Config(format!(
                    "tones.{name}.frequency must be positive"
                )));
            }
        }
        let n_bar = self.tones.primary.photon_number + self.tones.secondary.photon_number;
        if !critical_photon_check(n_bar, &self.resonator)? {
            return Err(ReadoutError::Config(format!(
                "total photon number {n_bar} exceeds the critical photon number {:.3}",
                crate::readout::critical_photon_number(&self.resonator)
            )));
        }

        positive(self.sweep.span_mhz, "sweep.span_mhz")?;
        nonzero(self.sweep.points, "sweep.points")?;
        if !(self.sweep.min_zero_three >= 0.0) {
            return Err(ReadoutError::Config(
                "sweep.min_zero_three must be non-negative".into(),
            ));
        }

        nonzero(self.run.shots, "run.shots")?;
        nonzero(self.run.calibration_shots, "run.calibration_shots")?;
        if self.run.calibration_shots < 2 || self.run.shots < 2 {
            return Err(ReadoutError::Config(
                "run.shots and run.calibration_shots must be at least 2".into(),
            ));
        }
        nonzero(self.run.repetitions, "run.repetitions")?;
        nonzero(self.run.histogram_bins, "run.histogram_bins")?;

        positive(self.decay.t_max_us, "decay.t_max_us")?;
        if self.decay.points < 3 {
            return Err(ReadoutError::Config(
                "decay.points must be at least 3".into(),
            ));
        }
        nonzero(self.decay.trajectories, "decay.trajectories")?;

        self.fnn.train_config(0).validate()?;
        for (name, path) in [
            ("fnn.model_path", &self.fnn.model_path),
            ("fnn.calibration_csv", &self.fnn.calibration_csv),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(ReadoutError::Config(format!(
                        "{name} '{}' does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn tone(&self, settings: &ToneSettings, role: ToneRole, frequency: f64) -> ToneConfig {
        ToneConfig {
            frequency,
            amplitude: settings.amplitude,
            duration_ns: self.tones.duration_ns,
            role,
            phase: settings.phase,
            centers: settings.centers,
        }
    }

    /// Resolves tone frequencies (from the sweep when not given) and the
    /// noise level.
    pub fn resolve(&self) -> Result<ResolvedDevice> {
        self.validate()?;
        let sweep = self.sweep.grid(self.resonator.omega_r);
        let (p, s) = (&self.tones.primary, &self.tones.secondary);
        let selection = if p.frequency.is_none() || s.frequency.is_none() {
            Some(select_tone_frequencies(
                &self.resonator,
                &sweep,
                self.sweep.min_zero_three,
            )?)
        } else {
            None
        };
        let pick = |given: Option<f64>, selected: fn(&ToneSelection) -> f64| {
            given.unwrap_or_else(|| selected(selection.as_ref().expect("selection ran")))
        };
        let primary = self.tone(p, ToneRole::Primary, pick(p.frequency, |s| s.primary));
        let secondary = self.tone(s, ToneRole::Secondary, pick(s.frequency, |s| s.secondary));

        let sigma = match (self.noise.sigma, self.noise.target_ideal_fidelity) {
            (Some(sigma), _) => sigma,
            (None, Some(target)) => {
                let separation = (iq_center(&self.resonator, &primary, Level::Three)
                    - iq_center(&self.resonator, &primary, Level::Zero))
                .norm();
                if !(separation > 0.0) {
                    return Err(ReadoutError::Config(
                        "|0> and |3> coincide at the primary tone; cannot derive sigma".into(),
                    ));
                }
                separation / snr_for_ideal_fidelity(target)?
            }
            (None, None) => unreachable!("validated"),
        };
        Ok(ResolvedDevice {
            primary,
            secondary,
            noise: NoiseModel { sigma },
            selection,
            sweep,
        })
    }

    pub fn discriminator_or(&self, default: DiscriminatorKind) -> DiscriminatorKind {
        self.run.discriminator.unwrap_or(default)
    }
}
