//! Inter-sub-carrier interference, ergodic capacity and sum-rate of an
//! NB-OFDMA uplink with mobile devices.
//!
//! * [`numerics`]: sinc, sine integral, adaptive Gauss–Legendre quadrature.
//! * [`sysmodel`]: configuration types and random device/path sampling.
//! * [`analytic`]: leakage, ICI power, bounds, approximations, capacity.
//! * [`montecarlo`]: simulation-based estimates of the same quantities.
//! * [`cli`]: sweep configuration, the output registry, CSV/JSON emission.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod sysmodel;

pub use error::{Error, Result};
