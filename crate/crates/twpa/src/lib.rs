//! Toolkit for three-wave-mixing Josephson travelling-wave parametric
//! amplifiers (TWPAs).
//!
//! The crate covers the full design loop for a TWPA built from a chain of
//! flux-biased Josephson cells:
//!
//! * [`device_models`]: DC working point and mixing coefficients of a
//!   single cell (bare junction, rf-SQUID, SNAIL) and the pump drive
//!   limits the bias imposes.
//! * [`dispersion`]: lattice dispersion laws for the supported chain
//!   geometries, their inverses, band edges and up-conversion
//!   classification.
//! * [`three_mode`]: degenerate and non-degenerate three-mode gain, exact
//!   (lattice determinant) and approximate, plus phase-matching sweet
//!   spots and gain bandwidths.
//! * [`multimode`]: stiff coupled-mode ladders with pump harmonics,
//!   harmonic truncation analysis and physical-unit wrappers.
//! * [`lattice_oracle`]: a direct time-domain simulation of the nonlinear
//!   LC chain, used as an independent cross-check on the coupled-mode
//!   results.
//! * [`fitkit`]: measured gain-trace loading and two-parameter model fits
//!   that translate into device-level drive settings.
//!
//! Frequencies are expressed in units of the relevant cell frequency and
//! wavenumbers in radians per cell unless a function documents otherwise.

pub mod device_models;
pub mod dispersion;
pub mod lattice_oracle;
pub mod multimode;
pub mod numerics;
pub mod three_mode;
