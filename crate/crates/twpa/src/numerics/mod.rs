//! Shared numerical machinery: adaptive ODE integration and root finding.

pub mod ode;
pub mod root;
