//! Single-shot state discrimination in the IQ plane.

mod blobs;
pub mod fnn;
mod labels;
mod projection;

pub use blobs::{classify_nearest, classify_secondary, fit_blob, GaussianBlob, SecondaryBlobs};
pub use fnn::{fnn_classify, fnn_train, Dataset, FnnModel, TrainConfig, TrainSummary};
pub use labels::{truth_table_combine, CombinedLabel, PrimaryLabel, SecondaryLabel};
pub use projection::{classify_two_state, fit_projection, ProjectionAxis};
