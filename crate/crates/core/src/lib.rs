//! Damped wave equations with time-dependent damping on flat tori.
//!
//! The crate evolves ∂ₜ²u − Δu + 2W(x,t)∂ₜu = 0 on T¹ and T², computes the
//! geodesic damping functionals that govern its decay, builds Gaussian-beam
//! quasi-solutions, and measures observability and decay rates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod damping;
pub mod geodesic;
pub mod grid;
pub mod observe;
pub mod rates;
pub mod solver;

pub use beam::{BeamError, BeamFrame, BeamSpec};
pub use damping::{DampingError, DampingFamily, DampingProfile, LengthSequence, Side, Window};
pub use geodesic::{Geodesic, GeodesicSampling};
pub use grid::{EnergyTrace, Field, FieldKind, GridError, Point, Spectral, TorusGrid};
pub use observe::{ObservationWindow, ObserveError};
pub use rates::{RateError, RateFit, RateForm, RateModel};
pub use solver::{evolve, energy_identity_check, Evolution, Scheme, SolverConfig, SolverError, WaveState};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/equation.md")]
    mod equation {}
    #[doc = include_str!("../../../book/src/damping.md")]
    mod damping {}
    #[doc = include_str!("../../../book/src/geodesics.md")]
    mod geodesics {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/beams.md")]
    mod beams {}
    #[doc = include_str!("../../../book/src/observability.md")]
    mod observability {}
    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}
}
