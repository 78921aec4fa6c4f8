//! Numerical toolkit for conformal surface immersions built from
//! two-dimensional Dirac spinors, together with the spectral side of the
//! same picture: the hyperbolic Laplacian on the modular fundamental
//! domain, Eisenstein series, the scattering matrix, and automorphic wave
//! evolution with incoming/outgoing cusp subspaces.
//!
//! The crate is organised as a small set of largely independent modules:
//!
//! * [`moebius`] — SL(2,R) fractional-linear action, modular-group words,
//!   fundamental-domain reduction and the automorphy factors.
//! * [`dirac`] — grids, complex fields and the Dirac system
//!   `psi_z = U phi`, `phi_zbar = -U psi`.
//! * [`immersion`] — the surface integrals, induced metric and curvatures,
//!   plus an independent finite-difference fundamental-form oracle.
//! * [`spectral`] — the operator `L = -y^2 (d_xx + d_yy) - 1/4` on the
//!   truncated modular domain, low eigenpairs and spectrum labels.
//! * [`specfun`] — complex Gamma, Riemann zeta and modified Bessel K.
//! * [`eisenstein`] — Eisenstein series (lattice and Fourier routes) and
//!   the scattering matrix on and off the critical line.
//! * [`wave`] — leapfrog evolution of the automorphic wave equation and
//!   the in/out-space checks.
//! * [`cli`] — scenario configs and deterministic file outputs behind the
//!   `wlp` binary.

pub mod cli;
pub mod dirac;
pub mod eisenstein;
mod error;
pub mod grid;
pub mod immersion;
pub mod moebius;
pub mod specfun;
pub mod spectral;
pub mod wave;

pub use error::{Error, Result};
pub use grid::{ComplexField, Grid, RealField, SpinorPair};
pub use moebius::{FundamentalDomainSpec, MoebiusMap, UpperHalfPoint};
