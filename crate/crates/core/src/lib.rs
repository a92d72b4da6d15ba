//! Radial self-similar profiles of the focusing semilinear wave equation
//! `u_tt - Δu = |u|^(p-1) u` in the supercritical range.
//!
//! Profiles solve the singular ODE
//!
//! ```text
//! (1-rho^2) u'' + ((N-1)/rho - 2(alpha+1) rho) u' - alpha(alpha+1) u + |u|^(p-1) u = 0,   alpha = 2/(p-1)
//! ```
//!
//! The crate locates regular profiles with a prescribed number of crossings of the
//! singular solution by shooting from both singular points, continues them past the
//! light cone, and carries the diagnostics used to check them. Every routine is
//! generic over [`Real`] (`f32` or `f64`); the aliases below fix `f64`.

pub mod continuation;
pub mod error;
pub mod ground_state;
pub mod integrator;
pub mod io;
pub mod ode;
pub mod oracle;
pub mod params;
pub mod pruefer;
pub mod scalar;
pub mod series;
pub mod shooting;
pub mod verify;

pub use continuation::{barrier_check, extend_and_classify, AsymptoticsReport, Classification, ExtendConfig};
pub use error::{Error, Result};
pub use ground_state::{rescaling_check, solve_q, GroundStateTrace};
pub use integrator::{integrate, integrate_log, Chart, Options, Status, Trajectory};
pub use ode::{LogState, State};
pub use params::{derive_params, Params, Regime};
pub use pruefer::{count_zeros, theta_trace, PrueferTrace};
pub use scalar::Real;
pub use shooting::{find_profile, scan, Search, ShootConfig, ShootResult};

pub type Params64 = Params<f64>;
pub type State64 = State<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type ShootResult64 = ShootResult<f64>;
pub type ShootConfig64 = ShootConfig<f64>;
pub type AsymptoticsReport64 = AsymptoticsReport<f64>;
pub type GroundStateTrace64 = GroundStateTrace<f64>;

pub type Params32 = Params<f32>;
pub type State32 = State<f32>;
pub type Trajectory32 = Trajectory<f32>;
