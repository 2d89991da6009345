use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ReadoutError, Result};
use crate::levels::{Level, NUM_LEVELS};

/// Dispersively coupled readout resonator.
///
/// Frequencies: `omega_r` in GHz, every other frequency-like field in MHz.
/// `chi[l]` is the resonator pull when the transmon sits in level `l`, with
/// `chi[0] = 0` as reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonatorModel {
    pub omega_r: f64,
    pub kappa: f64,
    pub chi: [f64; NUM_LEVELS],
    pub g: f64,
    pub delta: f64,
    #[serde(default = "unit")]
    pub amplitude_scale: f64,
    /// External-to-total linewidth ratio; sets the depth of the notch.
    #[serde(default = "default_coupling_ratio")]
    pub coupling_ratio: f64,
}

fn unit() -> f64 {
    1.0
}

fn default_coupling_ratio() -> f64 {
    0.9
}

impl Default for ResonatorModel {
    /// Resonator 2 of the reference device (6.61 GHz, 250 MHz coupling,
    /// transmon at 5.40 GHz). Linewidth and dispersive shifts are synthetic.
    fn default() -> Self {
        ResonatorModel {
            omega_r: 6.61,
            kappa: 4.0,
            chi: [0.0, -4.0, -9.0, -10.5],
            g: 250.0,
            delta: -1210.0,
            amplitude_scale: 1.0,
            coupling_ratio: default_coupling_ratio(),
        }
    }
}

impl ResonatorModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa", self.kappa),
            ("g", self.g),
            ("amplitude_scale", self.amplitude_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ReadoutError::Config(format!(
                    "resonator {name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.delta.abs() > 0.0) || !self.delta.is_finite() {
            return Err(ReadoutError::Config(format!(
                "qubit-resonator detuning must be non-zero, got {}",
                self.delta
            )));
        }
        if !(self.coupling_ratio > 0.0 && self.coupling_ratio <= 1.0) {
            return Err(ReadoutError::Config(format!(
                "coupling_ratio must lie in (0, 1], got {}",
                self.coupling_ratio
            )));
        }
        if self.chi.iter().any(|c| !c.is_finite()) || !self.omega_r.is_finite() {
            return Err(ReadoutError::Config(
                "resonator frequencies must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Resonance frequency (GHz) with the transmon in `level`.
    pub fn dressed_frequency(&self, level: Level) -> f64 {
        self.omega_r + self.chi[level.index()] * 1e-3
    }
}

/// Steady-state transmission past a single-pole notch resonator pulled to
/// `omega_r + chi[level]`. Unity far from resonance.
pub fn s21_response(model: &ResonatorModel, omega_d: f64, level: Level) -> Complex64 {
    let detuning = (omega_d - model.omega_r) * 1e3 - model.chi[level.index()];
    let half = Complex64::new(model.kappa / 2.0, 0.0);
    Complex64::new(1.0, 0.0) - model.coupling_ratio * half / (half + Complex64::i() * detuning)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToneRole {
    Primary,
    Secondary,
}

/// One readout tone: drive frequency (GHz), drive amplitude, integration
/// window (ns) and a phase rotation (rad) applied to the demodulated signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneConfig {
    pub frequency: f64,
    pub amplitude: f64,
    pub duration_ns: f64,
    pub role: ToneRole,
    #[serde(default)]
    pub phase: f64,
    /// Per-level blob centers; when present the resonator model is bypassed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<[[f64; 2]; NUM_LEVELS]>,
}

impl ToneConfig {
    pub fn new(role: ToneRole, frequency: f64, amplitude: f64, duration_ns: f64) -> Self {
        ToneConfig {
            frequency,
            amplitude,
            duration_ns,
            role,
            phase: 0.0,
            centers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_ns > 0.0) || !self.duration_ns.is_finite() {
            return Err(ReadoutError::Config(format!(
                "tone duration must be positive, got {} ns",
                self.duration_ns
            )));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(ReadoutError::Config(format!(
                "tone amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if !self.frequency.is_finite() || !self.phase.is_finite() {
            return Err(ReadoutError::Config(
                "tone frequency and phase must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Integration window in microseconds.
    pub fn duration_us(&self) -> f64 {
        self.duration_ns * 1e-3
    }
}

/// Mean integrated voltage of `level` for `tone`.
pub fn iq_center(model: &ResonatorModel, tone: &ToneConfig, level: Level) -> Complex64 {
    if let Some(centers) = &tone.centers {
        let [i, q] = centers[level.index()];
        return Complex64::new(i, q);
    }
    let rotation = Complex64::from_polar(1.0, tone.phase);
    model.amplitude_scale * tone.amplitude * rotation * s21_response(model, tone.frequency, level)
}

/// `|S21(a) - S21(b)|` at every sweep frequency.
pub fn separation_curve(model: &ResonatorModel, sweep: &[f64], a: Level, b: Level) -> Vec<f64> {
    sweep
        .iter()
        .map(|&w| (s21_response(model, w, a) - s21_response(model, w, b)).norm())
        .collect()
}

/// Outcome of the readout-frequency search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneSelection {
    pub primary: f64,
    pub secondary: f64,
    /// `|S21(0) - S21(1)|` at the primary frequency.
    pub primary_separation: f64,
    /// `|S21(1) - S21(2)|` at the secondary frequency.
    pub secondary_separation: f64,
    /// `|S21(0) - S21(3)|` at the secondary frequency.
    pub secondary_zero_three: f64,
}

const DEGENERATE_SEPARATION: f64 = 1e-12;

fn argmax(values: &[f64], allowed: impl Fn(usize) -> bool) -> Option<usize> {
    // First maximum wins on ties.
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if allowed(i) && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Picks the primary tone at the largest `|0>-|1>` separation and the
/// secondary tone at the largest `|1>-|2>` separation among frequencies where
/// `|0>` and `|3>` stay at least `min_zero_three` apart.
pub fn select_tone_frequencies(
    model: &ResonatorModel,
    sweep: &[f64],
    min_zero_three: f64,
) -> Result<ToneSelection> {
    if sweep.is_empty() {
        return Err(ReadoutError::Config("frequency sweep is empty".into()));
    }
    model.validate()?;
    let zero_one = separation_curve(model, sweep, Level::Zero, Level::One);
    let one_two = separation_curve(model, sweep, Level::One, Level::Two);
    let zero_three = separation_curve(model, sweep, Level::Zero, Level::Three);

    let p = argmax(&zero_one, |_| true).expect("non-empty sweep");
    if zero_one[p] < DEGENERATE_SEPARATION {
        return Err(ReadoutError::Config(
            "|0> and |1> responses are identical (chi0 == chi1); no primary tone exists".into(),
        ));
    }
    let s = argmax(&one_two, |i| zero_three[i] >= min_zero_three).ok_or_else(|| {
        ReadoutError::Config(format!(
            "no sweep frequency keeps |0>-|3> separation above {min_zero_three}"
        ))
    })?;
    if one_two[s] < DEGENERATE_SEPARATION {
        return Err(ReadoutError::Config(
            "|1> and |2> responses are identical (chi1 == chi2); no secondary tone exists".into(),
        ));
    }
    Ok(ToneSelection {
        primary: sweep[p],
        secondary: sweep[s],
        primary_separation: zero_one[p],
        secondary_separation: one_two[s],
        secondary_zero_three: zero_three[s],
    })
}

/// Frequency maximising the smallest pairwise `|S21|` distance among
/// `levels`, for single-tone discrimination of several states. Returns the
/// frequency and that distance.
pub fn select_single_tone_frequency(
    model: &ResonatorModel,
    sweep: &[f64],
    levels: &[Level],
) -> Result<(f64, f64)> {
    if sweep.is_empty() {
        return Err(ReadoutError::Config("frequency sweep is empty".into()));
    }
    if levels.len() < 2 {
        return Err(ReadoutError::InvalidArgument(
            "need at least two levels".into(),
        ));
    }
    let min_distance: Vec<f64> = sweep
        .iter()
        .map(|&w| {
            let mut d = f64::INFINITY;
            for (k, &a) in levels.iter().enumerate() {
                for &b in &levels[k + 1..] {
                    d = d.min((s21_response(model, w, a) - s21_response(model, w, b)).norm());
                }
            }
            d
        })
        .collect();
    let best = argmax(&min_distance, |_| true).expect("non-empty sweep");
    if min_distance[best] < DEGENERATE_SEPARATION {
        return Err(ReadoutError::Config(
            "levels are indistinguishable at every sweep frequency".into(),
        ));
    }
    Ok((sweep[best], min_distance[best]))
}

/// `Delta^2 / (4 g^2)`.
pub fn critical_photon_number(model: &ResonatorModel) -> f64 {
    model.delta * model.delta / (4.0 * model.g * model.g)
}

/// True when the mean photon number stays below the critical photon number.
pub fn critical_photon_check(n_bar: f64, model: &ResonatorModel) -> Result<bool> {
    if !(n_bar >= 0.0) {
        return Err(ReadoutError::InvalidArgument(format!(
            "photon number must be non-negative, got {n_bar}"
        )));
    }
    Ok(n_bar < critical_photon_number(model))
}
