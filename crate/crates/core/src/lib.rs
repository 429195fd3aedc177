//! Simulation of time-resolved probe absorption on degenerate two-level
//! atomic transitions driven by a strong pump and a weak probe.
//!
//! The crate is organized in four layers:
//!
//! * [`angular`] - half-integer angular momentum algebra: Clebsch-Gordan
//!   coefficients, spherical polarization bases and the normalized lowering
//!   operators that enter the master equation.
//! * [`analytic`] - closed-form three- and four-level reference models
//!   (a Lambda system and an N system) together with the universal transient
//!   lineshape function they share.
//! * [`engine`] - the full Zeeman-resolved master equation: zero-order
//!   (pump only) and first-order (probe response) evolution, steady states,
//!   and a nonperturbative two-field oracle used for validation.
//! * [`spectra`] - observables: probe absorption and four-wave-mixing
//!   channels, delta/time spectrum grids, lineshape metrics.
//!
//! All rates are expressed in units of the excited-state decay rate unless a
//! physical unit is supplied at the interface layer.

pub mod analytic;
pub mod angular;
pub mod engine;
pub mod signal;
pub mod spectra;
