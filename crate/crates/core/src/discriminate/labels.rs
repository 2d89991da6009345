use std::fmt;

use serde::{Deserialize, Serialize};

/// Primary-tone outcome: ground state or anything else.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrimaryLabel {
    Zero,
    NotZero,
}

/// Secondary-tone outcome. `TildeTwo` is the merged class of the two
/// responses the secondary tone cannot tell apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SecondaryLabel {
    Zero,
    One,
    TildeTwo,
}

impl SecondaryLabel {
    pub const ALL: [SecondaryLabel; 3] = [
        SecondaryLabel::Zero,
        SecondaryLabel::One,
        SecondaryLabel::TildeTwo,
    ];
}

/// Inferred initial state of a three-state readout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CombinedLabel {
    Zero,
    One,
    Two,
    /// The two tones disagree; the shot is discarded.
    OverlapError,
}

impl CombinedLabel {
    pub const STATES: [CombinedLabel; 3] =
        [CombinedLabel::Zero, CombinedLabel::One, CombinedLabel::Two];

    /// Index among `Zero, One, Two`; `None` for an overlap error.
    pub fn state_index(self) -> Option<usize> {
        match self {
            CombinedLabel::Zero => Some(0),
            CombinedLabel::One => Some(1),
            CombinedLabel::Two => Some(2),
            CombinedLabel::OverlapError => None,
        }
    }

    pub fn from_state_index(index: usize) -> Option<Self> {
        CombinedLabel::STATES.get(index).copied()
    }
}

impl fmt::Display for CombinedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CombinedLabel::Zero => f.write_str("0"),
            CombinedLabel::One => f.write_str("1"),
            CombinedLabel::Two => f.write_str("2"),
            CombinedLabel::OverlapError => f.write_str("overlap"),
        }
    }
}

/// Selection rule of the two-tone readout.
///
/// | primary | secondary | initial state |
/// |---------|-----------|---------------|
/// | 0       | 0         | 0             |
/// | not 0   | 1         | 1             |
/// | not 0   | ~2        | 2             |
/// | 0       | 1 or ~2   | overlap       |
/// | not 0   | 0         | overlap       |
pub fn truth_table_combine(primary: PrimaryLabel, secondary: SecondaryLabel) -> CombinedLabel {
    use PrimaryLabel as P;
    use SecondaryLabel as S;
    match (primary, secondary) {
        (P::Zero, S::Zero) => CombinedLabel::Zero,
        (P::NotZero, S::One) => CombinedLabel::One,
        (P::NotZero, S::TildeTwo) => CombinedLabel::Two,
        (P::Zero, S::One | S::TildeTwo) | (P::NotZero, S::Zero) => CombinedLabel::OverlapError,
    }
}
