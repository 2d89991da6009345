//! Readout fidelity figures, SPAM mitigation and relaxation-time fitting.

mod assignment;
mod fidelity;
mod fit;
mod spam;

pub use assignment::{assignment_matrix, AssignmentMatrix};
pub use fidelity::{
    fidelity_n_state, fidelity_two_state, ideal_fidelity, snr, snr_for_ideal_fidelity,
    FidelityReport,
};
pub use fit::{fit_decay_curves, DecayFit, DecaySeries, FitOptions};
pub use spam::{project_to_simplex, spam_mitigate};
