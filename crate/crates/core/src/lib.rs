//! Time-harmonic acoustic scattering by sound-soft locally rough surfaces.
//!
//! The crate provides, in dependency order:
//!
//! * [`specialfun`] — Bessel/Hankel cylinder functions of orders 0 and 1,
//! * [`quadrature`] — Gauss-Legendre panels, adaptive Gauss-Kronrod
//!   integration and log-weighted quadrature,
//! * [`surface`] — compactly supported surface profiles and boundary meshes,
//! * [`forward`] — a combined-field boundary integral solver for the direct
//!   scattering problem built on the half-plane Dirichlet Green's function,
//!   with near-field, boundary-trace and far-field evaluation,
//! * [`dataset`] — synthesis, noise models and persistence for phaseless
//!   near-field and full far-field measurement data,
//! * [`imaging`] — the direct imaging indicators, their diagnostic
//!   decompositions, and surface extraction from indicator grids,
//! * [`asymptotics`] — an endpoint stationary-phase expansion engine with
//!   computable error bounds, plus closed-form leading terms used to verify
//!   the imaging theory,
//! * [`verify`] — runnable property suites with machine-readable reports.
//!
//! The data-parallel loops (per-direction solves, field sweeps, indicator
//! grids) run on rayon when the default `parallel` feature is enabled and
//! sequentially otherwise; results are identical either way.

pub mod asymptotics;
pub mod dataset;
pub mod error;
mod exec;
pub mod forward;
pub mod imaging;
pub mod quadrature;
pub mod specialfun;
pub mod surface;
pub mod verify;

pub use error::{Error, Result};
