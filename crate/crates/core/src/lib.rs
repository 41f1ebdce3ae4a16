//! Transient power losses in droop-controlled inverter microgrids.
//!
//! The network is a Kron-reduced weighted graph of inverters. Linearized
//! around the flat operating point, the droop and filter dynamics form an LTI
//! system over the state `(δ, ω, V)`, and the resistive losses incurred by
//! non-equilibrium flows are the squared norm of a loss output `y = Cψ`.
//! Under white-noise disturbances the expected loss is the squared H2 norm of
//! the input-output map, which this crate computes three ways:
//!
//! * closed form, from the susceptance Laplacian spectrum ([`h2::h2_norm_analytic`]),
//! * numerically, from the observability Gramian ([`h2::h2_norm_gramian`]),
//! * empirically, by stochastic simulation ([`sim::empirical_h2`]) and by
//!   impulse-response quadrature ([`sim::impulse_energy`]).
//!
//! [`coupled`] measures how much the frequency/voltage cross-coupling of
//! lossy lines changes the norm.

pub mod coupled;
pub mod dynamics;
pub mod error;
pub mod h2;
pub mod linalg;
pub mod network;
pub mod parallel;
pub mod sim;
pub mod spectral;

pub use dynamics::{InverterParams, ModelKind, NodeParams, StateSpaceModel};
pub use error::{Error, Result};
pub use h2::{BoundsReport, H2Method, H2Report};
pub use network::{Edge, LaplacianKind, NetworkGraph, Susceptances, WeightedLaplacian};
pub use spectral::SpectrumReport;
