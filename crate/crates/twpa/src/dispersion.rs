//! Chain dispersion laws, their inverses and phase-matching helpers.
//!
//! Four geometries are supported:
//!
//! * `Uniform`: the plain LC ladder, omega = 2*omega0*sin(kappa/2).
//! * `UniformWithCJ`: the ladder with a junction capacitance shunting each
//!   inductor, which bends the band down near the cutoff.
//! * `LcOscillator`: every ground capacitor is replaced by a series LC
//!   oscillator, opening a gap; the two branches are labelled by [`Band`].
//! * `Modulated`: a two-periodic chain (alternating cells), described per
//!   node with the upper branch folded out to kappa in [pi/2, pi] so that
//!   both branches together cover kappa in [0, pi] one-to-one.
//!
//! Wavenumbers are radians per cell (per node for `Modulated`); frequencies
//! are in the same units as the model's reference frequencies.

use serde::{Deserialize, Serialize};

use crate::numerics::root::solve_bracketed;

/// Relative tolerance used when deciding whether a frequency sits inside a
/// band: values within this fraction of an edge count as inside.
pub const EDGE_TOL: f64 = 1e-9;

/// Dispersion law of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum DispersionModel {
    /// Plain ladder with cell frequency omega0 = 1/sqrt(L C).
    Uniform { omega0: f64 },
    /// Ladder with junction capacitance; `cj_over_c` is C_J/C and
    /// `omega_bar0` the bare cell frequency.
    UniformWithCj { omega_bar0: f64, cj_over_c: f64 },
    /// Ladder whose ground capacitor is a series LC oscillator with
    /// resonance omega1; `nu` in (0, 1] is the capacitance ratio that sets
    /// the upper-branch asymptote omega1/sqrt(nu).
    LcOscillator { omega0: f64, omega1: f64, nu: f64 },
    /// Two-periodic chain with alternating cell frequencies omega1, omega2,
    /// described per node.
    Modulated { omega1: f64, omega2: f64 },
}

/// Branch selector for the two-band models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Lower,
    Upper,
}

/// Errors from dispersion evaluation and inversion.
#[derive(Debug, Clone, PartialEq)]
pub enum DispersionError {
    /// The frequency lies above the top of the highest band.
    AboveCutoff { omega: f64, cutoff: f64 },
    /// The frequency falls inside the gap of a two-band model.
    InGap { omega: f64, gap: (f64, f64) },
    /// The requested band does not exist for this model, or the wavenumber
    /// lies outside the band's zone range.
    BandUnavailable { band: Band },
    /// A model parameter is outside its physical range.
    InvalidParameter { name: &'static str, value: f64 },
    /// No phase-matched pump frequency exists for these parameters.
    NoSweetSpot,
}

impl std::fmt::Display for DispersionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DispersionError::AboveCutoff { omega, cutoff } => {
                write!(f, "omega = {omega} is above the band top {cutoff}")
            }
            DispersionError::InGap { omega, gap } => {
                write!(f, "omega = {omega} falls in the band gap ({}, {})", gap.0, gap.1)
            }
            DispersionError::BandUnavailable { band } => {
                write!(f, "band {band:?} is not available here")
            }
            DispersionError::InvalidParameter { name, value } => {
                write!(f, "parameter {name} = {value} is out of range")
            }
            DispersionError::NoSweetSpot => write!(f, "no phase-matched pump frequency exists"),
        }
    }
}

impl std::error::Error for DispersionError {}

impl DispersionModel {
    fn validate(&self) -> Result<(), DispersionError> {
        let check = |name: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(DispersionError::InvalidParameter { name, value })
            }
        };
        match *self {
            DispersionModel::Uniform { omega0 } => check("omega0", omega0),
            DispersionModel::UniformWithCj { omega_bar0, cj_over_c } => {
                check("omega_bar0", omega_bar0)?;
                if cj_over_c < 0.0 || !cj_over_c.is_finite() {
                    return Err(DispersionError::InvalidParameter {
                        name: "cj_over_c",
                        value: cj_over_c,
                    });
                }
                Ok(())
            }
            DispersionModel::LcOscillator { omega0, omega1, nu } => {
                check("omega0", omega0)?;
                check("omega1", omega1)?;
                if !(nu > 0.0 && nu <= 1.0) {
                    return Err(DispersionError::InvalidParameter { name: "nu", value: nu });
                }
                Ok(())
            }
            DispersionModel::Modulated { omega1, omega2 } => {
                check("omega1", omega1)?;
                check("omega2", omega2)
            }
        }
    }

    /// True when the model has a second branch.
    pub fn has_upper_band(&self) -> bool {
        matches!(
            self,
            DispersionModel::LcOscillator { .. } | DispersionModel::Modulated { .. }
        )
    }

    /// Frequency range `(omega_min, omega_max)` covered by `band`.
    pub fn band_edges(&self, band: Band) -> Result<(f64, f64), DispersionError> {
        self.validate()?;
        match (*self, band) {
            (DispersionModel::Uniform { omega0 }, Band::Lower) => Ok((0.0, 2.0 * omega0)),
            (DispersionModel::UniformWithCj { omega_bar0, cj_over_c }, Band::Lower) => {
                Ok((0.0, 2.0 * omega_bar0 / (1.0 + 4.0 * cj_over_c).sqrt()))
            }
            (DispersionModel::LcOscillator { .. }, band) => Ok((
                self.omega_of_kappa_unchecked(0.0, band),
                self.omega_of_kappa_unchecked(std::f64::consts::PI, band),
            )),
            (DispersionModel::Modulated { .. }, band) => {
                let (k_lo, k_hi) = match band {
                    Band::Lower => (0.0, std::f64::consts::FRAC_PI_2),
                    Band::Upper => (std::f64::consts::FRAC_PI_2, std::f64::consts::PI),
                };
                Ok((
                    self.omega_of_kappa_unchecked(k_lo, band),
                    self.omega_of_kappa_unchecked(k_hi, band),
                ))
            }
            (_, Band::Upper) => Err(DispersionError::BandUnavailable { band }),
        }
    }

    /// Top of the highest available band.
    pub fn cutoff(&self) -> Result<f64, DispersionError> {
        let band = if self.has_upper_band() { Band::Upper } else { Band::Lower };
        Ok(self.band_edges(band)?.1)
    }

    /// Long-wavelength phase velocity, lim omega/kappa for kappa -> 0 on the
    /// lower branch, in frequency units (cell spacing = 1).
    pub fn long_wave_velocity(&self) -> Result<f64, DispersionError> {
        self.validate()?;
        Ok(match *self {
            DispersionModel::Uniform { omega0 } => omega0,
            DispersionModel::UniformWithCj { omega_bar0, .. } => omega_bar0,
            DispersionModel::LcOscillator { omega0, .. } => omega0,
            DispersionModel::Modulated { omega1, omega2 } => {
                std::f64::consts::SQRT_2 * omega1 * omega2
                    / (omega1 * omega1 + omega2 * omega2).sqrt()
            }
        })
    }

    /// Band evaluation with the range checks already done.
    fn omega_of_kappa_unchecked(&self, kappa: f64, band: Band) -> f64 {
        match *self {
            DispersionModel::Uniform { omega0 } => 2.0 * omega0 * (kappa / 2.0).sin(),
            DispersionModel::UniformWithCj { omega_bar0, cj_over_c } => {
                let s = (kappa / 2.0).sin();
                2.0 * omega_bar0 * s / (1.0 + 4.0 * cj_over_c * s * s).sqrt()
            }
            DispersionModel::LcOscillator { omega0, omega1, nu } => {
                let u = 4.0 * omega0 * omega0 * (kappa / 2.0).sin().powi(2);
                let w1sq = omega1 * omega1;
                let b = w1sq + u;
                let disc = (b * b - 4.0 * nu * w1sq * u).max(0.0).sqrt();
                let upper_sq = (b + disc) / (2.0 * nu);
                match band {
                    Band::Upper => upper_sq.sqrt(),
                    // Product of the two squared roots is w1sq*u/nu, which
                    // avoids the cancellation in (b - disc) at small u.
                    Band::Lower => (w1sq * u / (nu * upper_sq)).sqrt(),
                }
            }
            DispersionModel::Modulated { omega1, omega2 } => {
                let s = omega1 * omega1 + omega2 * omega2;
                let q = 4.0 * omega1 * omega1 * omega2 * omega2;
                let sk = kappa.sin();
                let disc = (s * s - q * sk * sk).max(0.0).sqrt();
                let upper_sq = s + disc;
                match band {
                    Band::Upper => upper_sq.sqrt(),
                    Band::Lower => (q * sk * sk / upper_sq).sqrt(),
                }
            }
        }
    }
}

/// Frequency of the travelling mode with wavenumber `kappa` on `band`.
///
/// `kappa` must lie in the band's zone range: [0, pi] for the single-band
/// models and both `LcOscillator` branches, [0, pi/2] for the `Modulated`
/// lower branch and [pi/2, pi] for its upper branch.
pub fn omega_of_kappa(
    model: &DispersionModel,
    kappa: f64,
    band: Band,
) -> Result<f64, DispersionError> {
    model.validate()?;
    if band == Band::Upper && !model.has_upper_band() {
        return Err(DispersionError::BandUnavailable { band });
    }
    let (k_lo, k_hi) = match (model, band) {
        (DispersionModel::Modulated { .. }, Band::Lower) => (0.0, std::f64::consts::FRAC_PI_2),
        (DispersionModel::Modulated { .. }, Band::Upper) => {
            (std::f64::consts::FRAC_PI_2, std::f64::consts::PI)
        }
        _ => (0.0, std::f64::consts::PI),
    };
    let tol = EDGE_TOL * std::f64::consts::PI;
    if !(k_lo - tol..=k_hi + tol).contains(&kappa) || !kappa.is_finite() {
        return Err(DispersionError::InvalidParameter { name: "kappa", value: kappa });
    }
    Ok(model.omega_of_kappa_unchecked(kappa.clamp(k_lo, k_hi), band))
}

/// Wavenumber of the travelling mode at frequency `omega`, resolved in
/// whichever band contains `omega`.
///
/// Frequencies within a relative [`EDGE_TOL`] of a band edge count as
/// inside. Above the topmost band the error is `AboveCutoff`; between two
/// bands it is `InGap`.
pub fn kappa_of_omega(model: &DispersionModel, omega: f64) -> Result<f64, DispersionError> {
    model.validate()?;
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(DispersionError::InvalidParameter { name: "omega", value: omega });
    }
    let asin_clamped = |x: f64| x.clamp(-1.0, 1.0).asin();
    match *model {
        DispersionModel::Uniform { omega0 } => {
            let cutoff = 2.0 * omega0;
            if omega > cutoff * (1.0 + EDGE_TOL) {
                return Err(DispersionError::AboveCutoff { omega, cutoff });
            }
            Ok(2.0 * asin_clamped(omega / cutoff))
        }
        DispersionModel::UniformWithCj { omega_bar0, cj_over_c } => {
            let cutoff = 2.0 * omega_bar0 / (1.0 + 4.0 * cj_over_c).sqrt();
            if omega > cutoff * (1.0 + EDGE_TOL) {
                return Err(DispersionError::AboveCutoff { omega, cutoff });
            }
            let denom_sq = omega_bar0 * omega_bar0 - cj_over_c * omega * omega;
            Ok(2.0 * asin_clamped(omega / (2.0 * denom_sq.max(f64::MIN_POSITIVE).sqrt())))
        }
        DispersionModel::LcOscillator { omega0, omega1, nu } => {
            let (_, lower_top) = model.band_edges(Band::Lower)?;
            let (upper_bottom, upper_top) = model.band_edges(Band::Upper)?;
            if omega <= lower_top * (1.0 + EDGE_TOL) {
                let u = lc_u(omega, omega1, nu).clamp(0.0, 4.0 * omega0 * omega0);
                Ok(2.0 * asin_clamped(u.sqrt() / (2.0 * omega0)))
            } else if omega < upper_bottom * (1.0 - EDGE_TOL) {
                Err(DispersionError::InGap { omega, gap: (lower_top, upper_bottom) })
            } else if omega <= upper_top * (1.0 + EDGE_TOL) {
                let u = lc_u(omega, omega1, nu).clamp(0.0, 4.0 * omega0 * omega0);
                Ok(2.0 * asin_clamped(u.sqrt() / (2.0 * omega0)))
            } else {
                Err(DispersionError::AboveCutoff { omega, cutoff: upper_top })
            }
        }
        DispersionModel::Modulated { omega1, omega2 } => {
            let (_, lower_top) = model.band_edges(Band::Lower)?;
            let (upper_bottom, upper_top) = model.band_edges(Band::Upper)?;
            let s = omega1 * omega1 + omega2 * omega2;
            let q = 4.0 * omega1 * omega1 * omega2 * omega2;
            let sin_sq = (omega * omega * (2.0 * s - omega * omega) / q).clamp(0.0, 1.0);
            if omega <= lower_top * (1.0 + EDGE_TOL) {
                Ok(asin_clamped(sin_sq.sqrt()))
            } else if omega < upper_bottom * (1.0 - EDGE_TOL) {
                Err(DispersionError::InGap { omega, gap: (lower_top, upper_bottom) })
            } else if omega <= upper_top * (1.0 + EDGE_TOL) {
                Ok(std::f64::consts::PI - asin_clamped(sin_sq.sqrt()))
            } else {
                Err(DispersionError::AboveCutoff { omega, cutoff: upper_top })
            }
        }
    }
}

/// Which band contains `omega`, with the same edge conventions as
/// [`kappa_of_omega`].
pub fn band_of_omega(model: &DispersionModel, omega: f64) -> Result<Band, DispersionError> {
    model.validate()?;
    if !model.has_upper_band() {
        kappa_of_omega(model, omega)?;
        return Ok(Band::Lower);
    }
    let (_, lower_top) = model.band_edges(Band::Lower)?;
    kappa_of_omega(model, omega)?;
    if omega <= lower_top * (1.0 + EDGE_TOL) {
        Ok(Band::Lower)
    } else {
        Ok(Band::Upper)
    }
}

/// The auxiliary quantity u(omega) = omega^2 (nu omega^2 - omega1^2) /
/// (omega^2 - omega1^2) that equals 4 omega0^2 sin^2(kappa/2) on both
/// branches of the `LcOscillator` model.
#[inline]
fn lc_u(omega: f64, omega1: f64, nu: f64) -> f64 {
    let w2 = omega * omega;
    let w1sq = omega1 * omega1;
    w2 * (nu * w2 - w1sq) / (w2 - w1sq)
}

/// Uniform grid of `(kappa, omega)` samples across one band, for plotting
/// and export.
pub fn band_grid(
    model: &DispersionModel,
    band: Band,
    n: usize,
) -> Result<Vec<(f64, f64)>, DispersionError> {
    if n < 2 {
        return Err(DispersionError::InvalidParameter { name: "n", value: n as f64 });
    }
    let (k_lo, k_hi) = match (model, band) {
        (DispersionModel::Modulated { .. }, Band::Lower) => (0.0, std::f64::consts::FRAC_PI_2),
        (DispersionModel::Modulated { .. }, Band::Upper) => {
            (std::f64::consts::FRAC_PI_2, std::f64::consts::PI)
        }
        _ => (0.0, std::f64::consts::PI),
    };
    (0..n)
        .map(|i| {
            let kappa = k_lo + (k_hi - k_lo) * (i as f64) / ((n - 1) as f64);
            omega_of_kappa(model, kappa, band).map(|w| (kappa, w))
        })
        .collect()
}

/// Wavenumber mismatch Delta = kappa_p - kappa_s - kappa_i for a pump at
/// `omega_p` and the signal/idler pair at omega_{s,i} = (1 +- delta)
/// omega_p / 2.
pub fn phase_mismatch(
    model: &DispersionModel,
    omega_p: f64,
    delta: f64,
) -> Result<f64, DispersionError> {
    if !(delta.abs() < 1.0) {
        return Err(DispersionError::InvalidParameter { name: "delta", value: delta });
    }
    let kp = kappa_of_omega(model, omega_p)?;
    let ks = kappa_of_omega(model, (1.0 + delta) * omega_p / 2.0)?;
    let ki = kappa_of_omega(model, (1.0 - delta) * omega_p / 2.0)?;
    Ok(kp - ks - ki)
}

/// Fate of the pump, signal and idler under up-conversion by the pump on a
/// plain uniform chain with cutoff 2*omega0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpConversion {
    /// Pump, signal and idler can all up-convert (omega_p <= omega0).
    AllConvertible,
    /// The pump's second harmonic is cut off but both sidebands up-convert.
    SignalIdlerConvertible,
    /// Exactly one of signal and idler can up-convert.
    OneOfSignalIdlerConvertible,
    /// Every up-converted frequency lies above the cutoff.
    AllBlocked,
}

/// Classify which of the three modes can up-convert by one pump quantum on
/// a uniform chain. A mode at omega converts when omega + omega_p lies
/// within the band (strictly above the cutoff blocks it, so the boundary
/// itself still converts).
pub fn classify_up_conversion(omega_p_over_omega0: f64, delta: f64) -> UpConversion {
    let wp = omega_p_over_omega0;
    if wp <= 1.0 {
        return UpConversion::AllConvertible;
    }
    let blocked_s = (3.0 + delta) * wp / 2.0 > 2.0;
    let blocked_i = (3.0 - delta) * wp / 2.0 > 2.0;
    match (blocked_s, blocked_i) {
        (true, true) => UpConversion::AllBlocked,
        (false, false) => UpConversion::SignalIdlerConvertible,
        _ => UpConversion::OneOfSignalIdlerConvertible,
    }
}

/// Pump frequency threshold above which a fully blocked configuration
/// exists at small enough |delta|: Omega_th = 4*omega0/3 (in units of
/// omega0 when called with omega0 = 1).
pub fn up_conversion_threshold(omega0: f64) -> f64 {
    4.0 * omega0 / 3.0
}

/// Result of a phase-matched pump search on a two-band model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweetSpot {
    /// Pump frequency.
    pub omega_p: f64,
    /// Pump wavenumber on the upper branch.
    pub kappa_p: f64,
}

/// Degenerate phase-matched pump frequency on the `LcOscillator` model:
/// the pump rides the upper branch while the half-frequency signal rides
/// the lower one with kappa_s = kappa_p / 2 exactly.
pub fn sweet_spot_lc(omega1: f64, nu: f64, omega0: f64) -> Result<f64, DispersionError> {
    let model = DispersionModel::LcOscillator { omega0, omega1, nu };
    model.validate()?;
    let (_, lower_top) = model.band_edges(Band::Lower)?;
    let (upper_bottom, upper_top) = model.band_edges(Band::Upper)?;
    let u_top = 4.0 * omega0 * omega0;
    // Matching condition in terms of u = 4 omega0^2 sin^2(kappa/2):
    // sin^2(kappa_p/2) = sin^2(kappa_s) requires
    // u(w_p) = 4 u(w_p/2) (1 - u(w_p/2)/(4 omega0^2)).
    let f = |wp: f64| {
        let us = lc_u(wp / 2.0, omega1, nu);
        lc_u(wp, omega1, nu) - 4.0 * us * (1.0 - us / u_top)
    };
    // The signal at w_p/2 must stay inside the lower band.
    let wp_max = upper_top.min(2.0 * lower_top);
    if upper_bottom >= wp_max {
        return Err(DispersionError::NoSweetSpot);
    }
    const SCAN: usize = 400;
    let mut prev_w = upper_bottom * (1.0 + 1e-12);
    let mut prev_f = f(prev_w);
    for i in 1..=SCAN {
        let w = upper_bottom + (wp_max - upper_bottom) * (i as f64) / (SCAN as f64);
        let w = w.min(wp_max * (1.0 - 1e-12));
        let fv = f(w);
        if prev_f == 0.0 {
            return Ok(prev_w);
        }
        if prev_f * fv <= 0.0 {
            let root = solve_bracketed(&f, prev_w, w)
                .map_err(|_| DispersionError::NoSweetSpot)?;
            return Ok(root);
        }
        prev_w = w;
        prev_f = fv;
    }
    Err(DispersionError::NoSweetSpot)
}

/// Degenerate phase-matched pump on the `Modulated` model, in closed form:
///
/// omega_p^2 = 8 [(omega1^2 + omega2^2) - sqrt(3) omega1 omega2],
/// sin^2(kappa_p/2) = sqrt(3) [(omega1^2 + omega2^2) - sqrt(3) omega1
/// omega2] / (omega1 omega2).
///
/// The pump rides the upper branch (for frequency ratios near 1 the closed
/// form lands on its fold kappa_p < pi/2, which carries the same frequency
/// as the mirror pi - kappa_p) and satisfies kappa_s = kappa_p / 2 on the
/// lower branch exactly. No sweet spot exists once sin^2(kappa_p/2) would
/// exceed 1, i.e. for omega2/omega1 outside [0.5774, 1.7321].
pub fn sweet_spot_modulated(omega1: f64, omega2: f64) -> Result<SweetSpot, DispersionError> {
    let model = DispersionModel::Modulated { omega1, omega2 };
    model.validate()?;
    let s = omega1 * omega1 + omega2 * omega2;
    let w = omega1 * omega2;
    let core = s - 3.0f64.sqrt() * w;
    let x = 3.0f64.sqrt() * core / w;
    if !(0.0..=1.0).contains(&x) {
        return Err(DispersionError::NoSweetSpot);
    }
    let omega_p = (8.0 * core).sqrt();
    let kappa_p = 2.0 * x.sqrt().asin();
    Ok(SweetSpot { omega_p, kappa_p })
}
