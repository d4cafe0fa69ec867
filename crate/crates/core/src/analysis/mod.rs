//! Truncation sweeps and the checks built on them.

mod bounds;
mod closed_form;
mod convergence;
mod gco;
mod sweep;

pub use bounds::{bounds_check, bounds_check_sweep, bounds_check_with, BoundsReport, BoundsViolation};
pub use closed_form::{
    class_a_closed_form, class_a_closed_form_with, class_b_closed_form, class_b_closed_form_with,
    spectral_inclusion_gap,
};
pub use convergence::{convergence_stats, hausdorff, uniform_grid, Branch, ConvergenceStats};
pub use gco::{gco_check, Cond1Report, Cond2Report, Cond3Report, GcoParams, GcoReport, SumMethod, Verdict};
pub use sweep::{spectral_sweep, symplectic_sweep, SweepDocument, SweepKind, SweepReport, SweepRow};
