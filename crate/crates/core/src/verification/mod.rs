//! Quantitative checks: the first Dirichlet eigenvalue, the two-sided bound
//! on `λ* r² f'(u*)`, the window integral bound, and the stability form.

mod bounds;
mod eigen;
mod stability;

pub use bounds::{
    bound_check, cstar_from_table, window_integral_bound, VerificationReport, WindowIntegral,
    WindowOptions, WindowStat, REQUIRED_DEPTH,
};
pub use eigen::{first_eigenvalue, Eigenpair};
pub use stability::{
    quadratic_form, stability_of_potential, stability_quadratic_form, StabilityReport,
    STABILITY_SLACK,
};
