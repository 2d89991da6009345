mod common;

use num_complex::Complex64;
use transmon_readout::levels::shelving_scheme;
use transmon_readout::readout::{
    critical_photon_check, critical_photon_number, iq_center, s21_response,
    select_single_tone_frequency, select_tone_frequencies, simulate_shots, NoiseModel,
    ResonatorModel, ShotSpec, ToneConfig, ToneRole,
};
use transmon_readout::{DecayRates, Level};

fn sweep(model: &ResonatorModel, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| model.omega_r - 0.015 + 0.03 * k as f64 / (points - 1) as f64)
        .collect()
}

fn oracle(model: &ResonatorModel, level: Level, w: f64) -> Complex64 {
    common::notch_s21(
        model.omega_r,
        model.kappa,
        model.coupling_ratio,
        model.chi[level.index()],
        w,
    )
}

#[test]
fn transmission_matches_lorentzian_notch() {
    let model = ResonatorModel::default();
    for w in sweep(&model, 301) {
        for level in Level::ALL {
            let d = s21_response(&model, w, level) - oracle(&model, level, w);
            assert!(d.norm() < 1e-12, "{level} at {w}");
        }
    }
    // Depth of the dip equals the coupling ratio.
    let dip = s21_response(&model, model.omega_r, Level::Zero);
    assert!((dip.norm() - (1.0 - model.coupling_ratio)).abs() < 1e-12);
}

#[test]
fn tone_selection_matches_exhaustive_scan() {
    let model = ResonatorModel::default();
    let grid = sweep(&model, 3001);
    let sel = select_tone_frequencies(&model, &grid, 0.3).unwrap();

    let dist = |a: Level, b: Level, w: f64| (oracle(&model, a, w) - oracle(&model, b, w)).norm();
    let best_primary = grid
        .iter()
        .map(|&w| dist(Level::Zero, Level::One, w))
        .fold(0.0, f64::max);
    let best_secondary = grid
        .iter()
        .filter(|&&w| dist(Level::Zero, Level::Three, w) >= 0.3)
        .map(|&w| dist(Level::One, Level::Two, w))
        .fold(0.0, f64::max);
    assert!((sel.primary_separation - best_primary).abs() < 1e-12);
    assert!((sel.secondary_separation - best_secondary).abs() < 1e-12);
    assert!(sel.secondary_zero_three >= 0.3);

    // Far off resonance the states are not separable.
    for &w in &grid {
        if ((w - model.omega_r) * 1000.0).abs() > 3.0 * model.kappa + model.chi[3].abs() {
            assert!(dist(Level::Zero, Level::One, w) < sel.primary_separation);
        }
    }
}

#[test]
fn single_tone_frequency_maximises_smallest_distance() {
    let model = ResonatorModel::default();
    let grid = sweep(&model, 1501);
    let levels = [Level::Zero, Level::One, Level::Two];
    let (w, d) = select_single_tone_frequency(&model, &grid, &levels).unwrap();
    let min_pair = |w: f64| {
        let mut m = f64::INFINITY;
        for i in 0..3 {
            for j in i + 1..3 {
                m = m.min((oracle(&model, levels[i], w) - oracle(&model, levels[j], w)).norm());
            }
        }
        m
    };
    assert!((min_pair(w) - d).abs() < 1e-12);
    assert!(grid.iter().all(|&x| min_pair(x) <= d + 1e-12));
}

#[test]
fn degenerate_dispersive_shifts_are_config_errors() {
    let model = ResonatorModel {
        chi: [0.0, 0.0, -9.0, -10.5],
        ..ResonatorModel::default()
    };
    let grid = sweep(&model, 101);
    let err = select_tone_frequencies(&model, &grid, 0.3).unwrap_err();
    assert_eq!(err.category().exit_code(), 2);
}

#[test]
fn critical_photon_number_arithmetic() {
    let model = ResonatorModel::default();
    let n = critical_photon_number(&model);
    assert!((n - 1210.0f64.powi(2) / (4.0 * 250.0f64.powi(2))).abs() < 1e-12);
    assert!(critical_photon_check(3.0, &model).unwrap());
    assert!(!critical_photon_check(6.0, &model).unwrap());
    assert!(critical_photon_check(-1.0, &model).is_err());
}

fn noiseless_spec(scheme: bool) -> ShotSpec {
    let model = ResonatorModel::default();
    ShotSpec {
        tones: vec![
            ToneConfig::new(ToneRole::Primary, 6.608, 1.0, 140.0),
            ToneConfig::new(ToneRole::Secondary, 6.605, 1.0, 140.0),
        ],
        herald: None,
        rates: DecayRates::new(f64::INFINITY, f64::INFINITY, f64::INFINITY).unwrap(),
        scheme: if scheme {
            shelving_scheme()
        } else {
            Vec::new()
        },
        noise: NoiseModel { sigma: 0.0 },
        transfer_error: 0.0,
        preparation_error: 0.0,
        thermal_population: 0.0,
        model,
    }
}

#[test]
fn noiseless_shots_land_on_level_centers() {
    let spec = noiseless_spec(true);
    for (prepared, shelved) in [
        (Level::Zero, Level::Zero),
        (Level::One, Level::Three),
        (Level::Two, Level::One),
    ] {
        for shot in simulate_shots(&spec, prepared, 5, 3).unwrap() {
            assert_eq!(shot.readout_level, Some(shelved));
            for (v, tone) in shot.voltages.iter().zip(&spec.tones) {
                assert!((v - iq_center(&spec.model, tone, shelved)).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn shots_are_seed_deterministic() {
    let mut spec = noiseless_spec(false);
    spec.noise.sigma = 0.1;
    spec.rates = DecayRates::default();
    spec.thermal_population = 0.05;
    let a = simulate_shots(&spec, Level::Two, 500, 9).unwrap();
    let b = simulate_shots(&spec, Level::Two, 500, 9).unwrap();
    let c = simulate_shots(&spec, Level::Two, 500, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
