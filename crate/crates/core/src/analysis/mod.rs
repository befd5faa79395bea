//! Instruments that check the estimates behind the mild-solution
//! construction on computed trajectories: pathwise Itô balance for
//! `‖X‖^q`, the elementary power inequality, the stopping times `τ_R` and
//! `σ_R^j`, the root function `f`, and Strichartz ratio estimators.

mod inequality;
mod mass_balance;
mod roots;
pub mod stats;
mod stopping;
mod strichartz;

pub use inequality::{elementary_inequality_check, elementary_ratio, InequalityReport};
pub use mass_balance::{jump_martingale_term, mass_balance, MassBalanceReport};
pub use roots::{f_roots, f_value, RootsReport};
pub use stopping::{sigma_sequence, stopping_report, tau_r, StoppingReport};
pub use strichartz::{
    duhamel_series, estimate_strichartz_constant, gaussian_packets, strichartz_homog, strichartz_inhom,
    strichartz_stoch, InhomogeneousReport, StochasticReport, StrichartzReport,
};
