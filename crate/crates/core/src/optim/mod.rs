//! Reverse-mode differentiation, Adam, and the reconstruction pipeline.

pub mod ablate;
pub mod adam;
pub mod gradcheck;
pub mod recon;
pub mod tape;

pub use ablate::{ablate_center, ablate_views, AblationReport, CenterAblation, ViewSetResult};
pub use adam::{adam_step, lr_decay, AdamConfig, AdamState};
pub use gradcheck::{gradcheck, GradCheckOptions, GradCheckReport};
pub use recon::{reconstruct, reconstruct_with, ReconConfig, ReconOutcome, ReconProblem, ReconReport, Status};
pub use tape::{Gradients, Tape, Var};
