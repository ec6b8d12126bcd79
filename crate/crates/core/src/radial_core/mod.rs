//! Log-radius grids, radial profiles, and the radial calculus shared by all
//! solvers.

mod calculus;
mod grid;
mod profile;
pub(crate) mod stencil;

pub use calculus::{integrate_inward, quad_log, radial_laplacian, BreakpointJump, Laplacian};
pub use grid::{make_log_grid, LogRadialGrid, MIN_INTERVALS_PER_SEGMENT};
pub use profile::RadialProfile;
pub(crate) use profile::{hermite_cubic, hermite_cubic_slope, pchip_slopes};
