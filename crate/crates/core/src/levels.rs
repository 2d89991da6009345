//! Cascaded energy relaxation of the lowest four transmon levels.
//!
//! The ladder decays only downwards, one level at a time:
//!
//! ```text
//! dp0/dt =  p1/T01
//! dp1/dt =  p2/T12 - p1/T01
//! dp2/dt =  p3/T23 - p2/T12
//! dp3/dt = -p3/T23
//! ```
//!
//! Times are in microseconds throughout this module.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{ReadoutError, Result};

/// Number of modeled transmon levels.
pub const NUM_LEVELS: usize = 4;

/// Relative spacing below which two decay times count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

/// Relative spacing below which [`populations`] prefers the integrator over the
/// closed forms; the closed forms lose about `eps / spacing^2` to cancellation.
const CONDITIONING_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Level {
    Zero = 0,
    One = 1,
    Two = 2,
    Three = 3,
}

impl Level {
    pub const ALL: [Level; NUM_LEVELS] = [Level::Zero, Level::One, Level::Two, Level::Three];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Level::ALL.get(index).copied().ok_or_else(|| {
            ReadoutError::InvalidArgument(format!("level {index} is outside |0>..|3>"))
        })
    }

    /// The level reached by one downward jump, `None` for the ground state.
    pub fn below(self) -> Option<Level> {
        match self {
            Level::Zero => None,
            Level::One => Some(Level::Zero),
            Level::Two => Some(Level::One),
            Level::Three => Some(Level::Two),
        }
    }
}

impl TryFrom<u8> for Level {
    type Error = ReadoutError;

    fn try_from(value: u8) -> Result<Self> {
        Level::from_index(value as usize)
    }
}

impl From<Level> for u8 {
    fn from(level: Level) -> u8 {
        level as u8
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}>", self.index())
    }
}

/// Relaxation times `T01`, `T12`, `T23` in microseconds.
///
/// `t_ij` is the lifetime of level `j` against decay into level `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub t01: f64,
    pub t12: f64,
    pub t23: f64,
}

impl Default for DecayRates {
    /// `T01` of the reference device; `T12` reproduces a 2.65 % decay over
    /// 140 ns; `T23 = T01 / 3` from the `T01 / j` transmon scaling.
    fn default() -> Self {
        DecayRates {
            t01: 6.18,
            t12: 5.21,
            t23: 2.06,
        }
    }
}

impl DecayRates {
    pub fn new(t01: f64, t12: f64, t23: f64) -> Result<Self> {
        let rates = DecayRates { t01, t12, t23 };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("T01", self.t01), ("T12", self.t12), ("T23", self.t23)] {
            // Infinite lifetimes are allowed: they switch the channel off.
            if !(value > 0.0) {
                return Err(ReadoutError::InvalidArgument(format!(
                    "{name} must be strictly positive, got {value} us"
                )));
            }
        }
        Ok(())
    }

    /// Lifetime of `level` against its single downward decay channel.
    pub fn lifetime(&self, level: Level) -> f64 {
        match level {
            Level::Zero => f64::INFINITY,
            Level::One => self.t01,
            Level::Two => self.t12,
            Level::Three => self.t23,
        }
    }

    /// Decay rate out of `level`, in 1/us.
    pub fn rate(&self, level: Level) -> f64 {
        1.0 / self.lifetime(level)
    }

    /// Multiplies every relaxation time by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        DecayRates {
            t01: self.t01 * factor,
            t12: self.t12 * factor,
            t23: self.t23 * factor,
        }
    }

    fn min_relative_spacing(&self) -> f64 {
        let pairs = [
            (self.t01, self.t12),
            (self.t01, self.t23),
            (self.t12, self.t23),
        ];
        pairs
            .iter()
            .map(|&(a, b)| {
                if a.is_infinite() || b.is_infinite() {
                    if a == b {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    (a - b).abs() / a.max(b)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.t01.is_finite() && self.t12.is_finite() && self.t23.is_finite()
    }

    /// True when two of the relaxation times coincide within
    /// [`DEGENERACY_TOLERANCE`].
    pub fn is_degenerate(&self) -> bool {
        self.min_relative_spacing() < DEGENERACY_TOLERANCE
    }
}

/// Occupation probabilities of `|0>..|3>` at time `t` (us).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelPopulation {
    pub p: [f64; NUM_LEVELS],
    pub t: f64,
}

impl LevelPopulation {
    pub fn new(p: [f64; NUM_LEVELS], t: f64) -> Result<Self> {
        let pop = LevelPopulation { p, t };
        pop.validate()?;
        Ok(pop)
    }

    /// Unit population in `level` at time `t`.
    pub fn pure(level: Level, t: f64) -> Self {
        let mut p = [0.0; NUM_LEVELS];
        p[level.index()] = 1.0;
        LevelPopulation { p, t }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(ReadoutError::InvalidArgument(format!(
                "populations must lie in [0, 1], got {:?}",
                self.p
            )));
        }
        let total: f64 = self.p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ReadoutError::InvalidArgument(format!(
                "populations must sum to 1, got {total}"
            )));
        }
        Ok(())
    }

    pub fn get(&self, level: Level) -> f64 {
        self.p[level.index()]
    }
}

/// Population of `|0>` after time `t` for a transmon initialised in `|2>`.
pub fn ground_population_from_second(rates: &DecayRates, t: f64) -> f64 {
    let (t01, t12) = (rates.t01, rates.t12);
    1.0 - t01 * (-t / t01).exp() / (t01 - t12) + t12 * (-t / t12).exp() / (t01 - t12)
}

/// Population of `|0>` after time `t` for a transmon initialised in `|3>`.
pub fn ground_population_from_third(rates: &DecayRates, t: f64) -> f64 {
    let (t01, t12, t23) = (rates.t01, rates.t12, rates.t23);
    1.0 - t01 * t01 * (-t / t01).exp() / ((t01 - t12) * (t01 - t23))
        + t12 * t12 * (-t / t12).exp() / ((t01 - t12) * (t12 - t23))
        - t23 * t23 * (-t / t23).exp() / ((t01 - t23) * (t12 - t23))
}

/// Population of `|1>` after time `t` for a transmon initialised in `|3>`.
pub fn first_population_from_third(rates: &DecayRates, t: f64) -> f64 {
    let (t01, t12, t23) = (rates.t01, rates.t12, rates.t23);
    t01 * t01 * (-t / t01).exp() / ((t01 - t12) * (t01 - t23))
        - t01 * t12 * (-t / t12).exp() / ((t01 - t12) * (t12 - t23))
        + t01 * t23 * (-t / t23).exp() / ((t01 - t23) * (t12 - t23))
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(ReadoutError::InvalidArgument(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Closed-form populations at time `t` for a transmon prepared in `initial`.
///
/// Fails with [`ReadoutError::DegenerateRates`] when two relaxation times
/// coincide; [`populations_numeric`] handles that case.
pub fn populations_analytic(rates: &DecayRates, initial: Level, t: f64) -> Result<LevelPopulation> {
    rates.validate()?;
    check_time(t)?;
    if !rates.is_finite() {
        return Err(ReadoutError::InvalidArgument(
            "closed-form populations need finite relaxation times".into(),
        ));
    }
    if rates.is_degenerate() {
        return Err(ReadoutError::DegenerateRates(format!(
            "T01={}, T12={}, T23={}",
            rates.t01, rates.t12, rates.t23
        )));
    }
    let (t01, t12, t23) = (rates.t01, rates.t12, rates.t23);
    let e01 = (-t / t01).exp();
    let e12 = (-t / t12).exp();
    let e23 = (-t / t23).exp();

    let p = match initial {
        Level::Zero => [1.0, 0.0, 0.0, 0.0],
        Level::One => [1.0 - e01, e01, 0.0, 0.0],
        Level::Two => {
            let p1 = t01 / (t01 - t12) * (e01 - e12);
            [ground_population_from_second(rates, t), p1, e12, 0.0]
        }
        Level::Three => {
            let p2 = t12 / (t12 - t23) * (e12 - e23);
            [
                ground_population_from_third(rates, t),
                first_population_from_third(rates, t),
                p2,
                e23,
            ]
        }
    };
    Ok(LevelPopulation {
        p: p.map(clamp_unit),
        t,
    })
}

type Mat4 = [[f64; NUM_LEVELS]; NUM_LEVELS];

fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; NUM_LEVELS]; NUM_LEVELS];
    for i in 0..NUM_LEVELS {
        for k in 0..NUM_LEVELS {
            if a[i][k] == 0.0 {
                continue;
            }
            for j in 0..NUM_LEVELS {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn identity() -> Mat4 {
    let mut m = [[0.0; NUM_LEVELS]; NUM_LEVELS];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn generator(rates: &DecayRates) -> Mat4 {
    let mut a = [[0.0; NUM_LEVELS]; NUM_LEVELS];
    for level in &Level::ALL[1..] {
        let j = level.index();
        let k = rates.rate(*level);
        a[j][j] -= k;
        a[j - 1][j] += k;
    }
    a
}

/// Steps per shortest lifetime for the fixed-step integrator.
const STEPS_PER_LIFETIME: f64 = 400.0;

/// Integrates the rate equations with fixed-step classical Runge-Kutta.
///
/// For a linear system one RK4 step is the fourth-order Taylor polynomial of
/// `exp(hA)`; the `n` identical steps are applied by repeated squaring. The
/// step is at most 1/400 of the shortest lifetime, which keeps the global
/// error below 1e-10 per component over dozens of lifetimes.
pub fn populations_numeric(
    rates: &DecayRates,
    initial: &LevelPopulation,
    t: f64,
) -> Result<LevelPopulation> {
    rates.validate()?;
    initial.validate()?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(LevelPopulation { p: initial.p, t });
    }

    let shortest = rates.t01.min(rates.t12).min(rates.t23);
    let steps = (t / shortest * STEPS_PER_LIFETIME).ceil().max(1.0);
    if steps > u64::MAX as f64 {
        return Err(ReadoutError::Numeric(format!(
            "integration span t={t} us is too long for the shortest lifetime {shortest} us"
        )));
    }
    let mut steps = steps as u64;
    let h = t / steps as f64;

    let a = generator(rates);
    let mut ha = a;
    ha.iter_mut().flatten().for_each(|x| *x *= h);
    let mut step = identity();
    let mut term = identity();
    for order in 1..=4 {
        term = mat_mul(&term, &ha);
        let inv = 1.0 / (1..=order).product::<u32>() as f64;
        for i in 0..NUM_LEVELS {
            for j in 0..NUM_LEVELS {
                step[i][j] += term[i][j] * inv;
            }
        }
    }

    let mut propagator = identity();
    let mut base = step;
    while steps > 0 {
        if steps & 1 == 1 {
            propagator = mat_mul(&propagator, &base);
        }
        base = mat_mul(&base, &base);
        steps >>= 1;
    }

    let mut p = [0.0; NUM_LEVELS];
    for (i, out) in p.iter_mut().enumerate() {
        *out = clamp_unit(
            (0..NUM_LEVELS)
                .map(|j| propagator[i][j] * initial.p[j])
                .sum(),
        );
    }
    Ok(LevelPopulation { p, t })
}

/// Populations from a pure initial level, choosing the closed forms when they
/// are well conditioned and the integrator otherwise.
pub fn populations(rates: &DecayRates, initial: Level, t: f64) -> Result<LevelPopulation> {
    if !rates.is_finite() || rates.min_relative_spacing() < CONDITIONING_TOLERANCE {
        populations_numeric(rates, &LevelPopulation::pure(initial, 0.0), t)
    } else {
        populations_analytic(rates, initial, t)
    }
}

/// A constant-level stretch of a jump trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub level: Level,
    pub start: f64,
    pub end: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// One stochastic realisation of the cascade over `[0, duration]` (us).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpTrajectory {
    pub segments: Vec<Segment>,
    pub duration: f64,
}

impl JumpTrajectory {
    pub fn initial_level(&self) -> Level {
        self.segments[0].level
    }

    pub fn final_level(&self) -> Level {
        self.segments[self.segments.len() - 1].level
    }

    /// Level occupied at time `t`; jump instants belong to the later segment.
    pub fn level_at(&self, t: f64) -> Level {
        self.segments
            .iter()
            .rev()
            .find(|s| s.start <= t)
            .unwrap_or(&self.segments[0])
            .level
    }

    /// Time spent in each level.
    pub fn dwell_times(&self) -> [f64; NUM_LEVELS] {
        let mut dwell = [0.0; NUM_LEVELS];
        for s in &self.segments {
            dwell[s.level.index()] += s.duration();
        }
        dwell
    }
}

/// Samples a jump trajectory with exponential waiting times from a seeded RNG.
pub fn sample_trajectory(
    rates: &DecayRates,
    initial: Level,
    duration: f64,
    seed: u64,
) -> Result<JumpTrajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_trajectory_with(rates, initial, duration, &mut rng)
}

/// As [`sample_trajectory`], drawing from a caller-supplied generator.
pub fn sample_trajectory_with<R: Rng + ?Sized>(
    rates: &DecayRates,
    initial: Level,
    duration: f64,
    rng: &mut R,
) -> Result<JumpTrajectory> {
    rates.validate()?;
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(ReadoutError::InvalidArgument(format!(
            "trajectory duration must be positive, got {duration}"
        )));
    }
    let mut segments = Vec::with_capacity(initial.index() + 1);
    let mut level = initial;
    let mut now = 0.0;
    loop {
        let next = level.below();
        let jump = match next {
            Some(_) if rates.lifetime(level).is_finite() => {
                let exp = Exp::new(rates.rate(level))
                    .map_err(|e| ReadoutError::Numeric(e.to_string()))?;
                now + exp.sample(rng)
            }
            _ => f64::INFINITY,
        };
        if jump >= duration {
            segments.push(Segment {
                level,
                start: now,
                end: duration,
            });
            break;
        }
        segments.push(Segment {
            level,
            start: now,
            end: jump,
        });
        now = jump;
        level = next.expect("finite jump implies a lower level");
    }
    Ok(JumpTrajectory { segments, duration })
}

/// A resonant pi pulse swapping levels `i` and `i + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Pulse {
    lower: Level,
}

impl Pulse {
    /// The pulse `pi_{ij}`; requires `j == i + 1` and both levels modeled.
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if j != i + 1 {
            return Err(ReadoutError::InvalidArgument(format!(
                "pi_{i}{j} does not connect neighbouring levels"
            )));
        }
        Level::from_index(j)?;
        Ok(Pulse {
            lower: Level::from_index(i)?,
        })
    }

    pub fn lower(&self) -> Level {
        self.lower
    }

    pub fn upper(&self) -> Level {
        Level::ALL[self.lower.index() + 1]
    }

    /// The level after an ideal pulse.
    pub fn apply(&self, level: Level) -> Level {
        if level == self.lower {
            self.upper()
        } else if level == self.upper() {
            self.lower
        } else {
            level
        }
    }
}

impl fmt::Display for Pulse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pi{}{}", self.lower.index(), self.upper().index())
    }
}

impl std::str::FromStr for Pulse {
    type Err = ReadoutError;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .trim()
            .trim_start_matches("pi")
            .trim_start_matches('_')
            .as_bytes();
        match digits {
            [a, b] if a.is_ascii_digit() && b.is_ascii_digit() => {
                Pulse::new((a - b'0') as usize, (b - b'0') as usize)
            }
            _ => Err(ReadoutError::InvalidArgument(format!(
                "cannot parse pulse '{s}', expected e.g. 'pi12'"
            ))),
        }
    }
}

impl TryFrom<String> for Pulse {
    type Error = ReadoutError;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<Pulse> for String {
    fn from(p: Pulse) -> String {
        p.to_string()
    }
}

/// The shelving sequence `pi12, pi23`.
pub fn shelving_scheme() -> Vec<Pulse> {
    vec![Pulse { lower: Level::One }, Pulse { lower: Level::Two }]
}

/// Pulses preparing `level` from the ground state (`pi01, pi12, ...`).
pub fn preparation_scheme(level: Level) -> Vec<Pulse> {
    Level::ALL[..level.index()]
        .iter()
        .map(|&lower| Pulse { lower })
        .collect()
}

/// Level distribution after applying `scheme` to `initial`; each pulse
/// independently acts as the identity with probability `transfer_error`.
pub fn shelve(initial: Level, scheme: &[Pulse], transfer_error: f64) -> Result<[f64; NUM_LEVELS]> {
    let dist = LevelPopulation::pure(initial, 0.0).p;
    shelve_distribution(dist, scheme, transfer_error)
}

/// As [`shelve`] for a mixed initial distribution.
pub fn shelve_distribution(
    mut dist: [f64; NUM_LEVELS],
    scheme: &[Pulse],
    transfer_error: f64,
) -> Result<[f64; NUM_LEVELS]> {
    check_probability(transfer_error, "transfer error")?;
    for pulse in scheme {
        let (i, j) = (pulse.lower().index(), pulse.upper().index());
        let (pi, pj) = (dist[i], dist[j]);
        dist[i] = (1.0 - transfer_error) * pj + transfer_error * pi;
        dist[j] = (1.0 - transfer_error) * pi + transfer_error * pj;
    }
    Ok(dist)
}

/// Samples the level reached after `scheme`, with per-pulse failure
/// probability `transfer_error`.
pub fn shelve_sample<R: Rng + ?Sized>(
    initial: Level,
    scheme: &[Pulse],
    transfer_error: f64,
    rng: &mut R,
) -> Level {
    scheme.iter().fold(initial, |level, pulse| {
        // Draw for every pulse so the random stream does not depend on the level.
        let failed = rng.random::<f64>() < transfer_error;
        if failed {
            level
        } else {
            pulse.apply(level)
        }
    })
}

pub(crate) fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ReadoutError::InvalidArgument(format!(
            "{what} must be a probability, got {p}"
        )));
    }
    Ok(())
}
