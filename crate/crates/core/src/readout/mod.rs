//! Resonator response and integrated IQ shot generation.

mod resonator;
mod shots;

pub use resonator::{
    critical_photon_check, critical_photon_number, iq_center, s21_response,
    select_single_tone_frequency, select_tone_frequencies, separation_curve, ResonatorModel,
    ToneConfig, ToneRole, ToneSelection,
};
pub use shots::{
    preselect, simulate_shot, simulate_shots, IQShot, NoiseModel, PreselectFlag,
    PreselectionOutcome, ShotSpec,
};
