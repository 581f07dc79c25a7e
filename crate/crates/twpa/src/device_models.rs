//! Unit-cell models: dc bias points and per-cell coefficients.
//!
//! A chain cell is one of three flavours: a single dc-biased junction, a
//! flux-biased rf-SQUID, or a flux-biased SNAIL. Each flavour reduces, after
//! solving its static bias equation, to the same small set of numbers that
//! every downstream solver consumes: the bias phase `theta0`, the cell
//! resonance frequency `omega0`, and the dimensionless mixing coefficients
//! `chi3` (three-wave) and `chi4` (four-wave).
//!
//! All circuit quantities are SI (farad, henry, rad/s). Flux bias is accepted
//! as the ratio Phi/Phi0 and converted to the phase F = 2*pi*Phi/Phi0 at the
//! boundary of this module.

use serde::{Deserialize, Serialize};

use crate::numerics::root::{golden_max, solve_bracketed};

/// Flux quantum over 2 pi, Phi0/(2 pi) = hbar/(2e), in weber.
pub const PHI0_OVER_2PI: f64 = 3.291_059_784_019_349_5e-16;

/// Residual tolerance for the bias-equation solvers (relative to the leading
/// term of each equation).
pub const BIAS_TOL: f64 = 1e-12;

/// Description of a single chain cell.
///
/// `chi4` is an optional user override for the four-wave coefficient; when
/// absent, [`cell_coefficients`] fills in the zero-bias junction default 1/2
/// for `Junction` and leaves the field empty otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviceSpec {
    Junction {
        /// Ground capacitance per cell (F).
        c: f64,
        /// Junction capacitance (F, may be 0).
        #[serde(default)]
        cj: f64,
        /// Josephson inductance (H).
        lj: f64,
        /// dc bias as a fraction of the critical current.
        idc_over_ic: f64,
        #[serde(default)]
        chi4: Option<f64>,
    },
    RfSquid {
        /// Ground capacitance per cell (F).
        c: f64,
        /// Junction capacitance (F, may be 0).
        #[serde(default)]
        cj: f64,
        /// Josephson inductance (H).
        lj: f64,
        /// Shunt loop inductance (H).
        l: f64,
        /// Flux bias Phi/Phi0.
        phi_over_phi0: f64,
        #[serde(default)]
        chi4: Option<f64>,
    },
    Snail {
        /// Ground capacitance per cell (F).
        c: f64,
        /// Junction capacitance (F, may be 0).
        #[serde(default)]
        cj: f64,
        /// Inductance of the single-junction arm (H).
        lj1: f64,
        /// Inductance of one junction in the array arm (H).
        lj2: f64,
        /// Number of series junctions in the array arm.
        n_arm: u32,
        /// Flux bias Phi/Phi0.
        phi_over_phi0: f64,
        #[serde(default)]
        chi4: Option<f64>,
    },
}

impl DeviceSpec {
    /// Ground capacitance of the cell (F).
    pub fn c(&self) -> f64 {
        match *self {
            DeviceSpec::Junction { c, .. }
            | DeviceSpec::RfSquid { c, .. }
            | DeviceSpec::Snail { c, .. } => c,
        }
    }

    /// Junction capacitance of the cell (F).
    pub fn cj(&self) -> f64 {
        match *self {
            DeviceSpec::Junction { cj, .. }
            | DeviceSpec::RfSquid { cj, .. }
            | DeviceSpec::Snail { cj, .. } => cj,
        }
    }
}

/// Josephson inductance of a junction with critical current `ic` (A),
/// L_J = Phi0/(2 pi I_c).
#[inline]
pub fn lj_from_ic(ic: f64) -> f64 {
    PHI0_OVER_2PI / ic
}

/// Per-cell coefficients derived from a [`DeviceSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellCoefficients {
    /// Static bias phase (rad).
    pub theta0: f64,
    /// Cell resonance frequency (rad/s): omega_bar0, omega_rf, or omega_s
    /// depending on the device kind.
    pub omega0: f64,
    /// Dimensionless three-wave mixing coefficient.
    pub chi3: f64,
    /// Dimensionless four-wave mixing coefficient, when known.
    pub chi4: Option<f64>,
}

/// dc-bias optimum returned by [`max_pump_strength_dc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpBudget {
    /// Largest attainable pumping strength epsilon under the current budget.
    pub epsilon_max: f64,
    /// Optimal dc bias I_dc/I_c.
    pub idc_opt: f64,
    /// Optimal pump current amplitude I_p/I_c.
    pub ip_opt: f64,
}

/// Errors from bias solving and coefficient evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceError {
    /// |I_dc| >= I_c: no static solution on the principal branch.
    BiasOutOfRange { idc_over_ic: f64 },
    /// rf-SQUID with beta_L >= 1: the bias equation may have several roots.
    HystereticRegime { beta_l: f64 },
    /// SNAIL with a single array junction: the two arms cancel and the
    /// three-wave term vanishes identically.
    DegenerateSnail,
    /// A bias root could not be bracketed or refined.
    NoRoot { detail: String },
    /// A circuit parameter is outside its physical range.
    InvalidParameter { name: &'static str, value: f64 },
}

impl std::fmt::Display for DeviceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeviceError::BiasOutOfRange { idc_over_ic } => {
                write!(f, "dc bias {idc_over_ic} exceeds the critical current")
            }
            DeviceError::HystereticRegime { beta_l } => {
                write!(f, "rf-SQUID beta_L = {beta_l} is hysteretic (requires beta_L < 1)")
            }
            DeviceError::DegenerateSnail => {
                write!(f, "SNAIL with n_arm = 1 has no three-wave response")
            }
            DeviceError::NoRoot { detail } => write!(f, "bias root not found: {detail}"),
            DeviceError::InvalidParameter { name, value } => {
                write!(f, "parameter {name} = {value} is out of range")
            }
        }
    }
}

impl std::error::Error for DeviceError {}

#[inline]
fn check_positive(name: &'static str, value: f64) -> Result<(), DeviceError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DeviceError::InvalidParameter { name, value })
    }
}

/// Bias phase of a current-biased junction, sin(theta0) = I_dc/I_c, on the
/// principal branch |theta0| < pi/2.
pub fn solve_bias_junction(idc_over_ic: f64) -> Result<f64, DeviceError> {
    if !(idc_over_ic.abs() < 1.0) {
        return Err(DeviceError::BiasOutOfRange { idc_over_ic });
    }
    Ok(idc_over_ic.asin())
}

/// Bias phase of a flux-biased rf-SQUID: the root of
/// beta_L*sin(theta0) + theta0 + F = 0 with beta_L = L/L_J.
///
/// For beta_L < 1 the left side is strictly increasing in theta0, so the root
/// is unique and always bracketed by [-F - beta_L, -F + beta_L].
pub fn solve_bias_rf_squid(f_flux: f64, beta_l: f64) -> Result<f64, DeviceError> {
    if !(beta_l < 1.0) {
        return Err(DeviceError::HystereticRegime { beta_l });
    }
    if beta_l < 0.0 || !beta_l.is_finite() || !f_flux.is_finite() {
        return Err(DeviceError::InvalidParameter { name: "beta_l/F", value: beta_l });
    }
    if beta_l == 0.0 {
        return Ok(-f_flux);
    }
    let eq = |theta: f64| beta_l * theta.sin() + theta + f_flux;
    let theta0 = solve_bracketed(&eq, -f_flux - beta_l, -f_flux + beta_l)
        .map_err(|e| DeviceError::NoRoot { detail: e.to_string() })?;
    debug_assert!(eq(theta0).abs() < BIAS_TOL * (1.0 + f_flux.abs()));
    Ok(theta0)
}

/// Bias phase of a flux-biased SNAIL: the root of
/// sin(theta0 + F)/L_J1 + sin(theta0/N)/L_J2 = 0
/// continuously connected to theta0 = 0 at F = 0.
///
/// The root is followed by a flux continuation from F = 0 in small steps,
/// re-bracketing around the previous solution at each step; this selects a
/// single branch even where the equation has several roots in the full
/// interval (-N*pi, N*pi).
pub fn solve_bias_snail(
    f_flux: f64,
    lj1: f64,
    lj2: f64,
    n_arm: u32,
) -> Result<f64, DeviceError> {
    if n_arm == 1 {
        return Err(DeviceError::DegenerateSnail);
    }
    if n_arm == 0 {
        return Err(DeviceError::InvalidParameter { name: "n_arm", value: 0.0 });
    }
    check_positive("lj1", lj1)?;
    check_positive("lj2", lj2)?;
    if !f_flux.is_finite() {
        return Err(DeviceError::InvalidParameter { name: "F", value: f_flux });
    }
    let n = f64::from(n_arm);
    let rho = lj1 / lj2;
    // Scaled by L_J1 so the residual tolerance is relative to 1/L_J1.
    let eq = |theta: f64, f: f64| (theta + f).sin() + rho * (theta / n).sin();

    let n_steps = (f_flux.abs() / 0.02).ceil().max(1.0) as usize;
    let mut theta = 0.0_f64;
    for k in 1..=n_steps {
        let f = f_flux * (k as f64) / (n_steps as f64);
        let g = |t: f64| eq(t, f);
        let mut half_width = 0.1;
        let limit = n * std::f64::consts::PI;
        let bracket = loop {
            let lo = (theta - half_width).max(-limit);
            let hi = (theta + half_width).min(limit);
            if g(lo) * g(hi) <= 0.0 {
                break (lo, hi);
            }
            half_width *= 2.0;
            if half_width > 2.0 * limit {
                return Err(DeviceError::NoRoot {
                    detail: format!("continuation lost the branch at F = {f}"),
                });
            }
        };
        theta = solve_bracketed(&g, bracket.0, bracket.1)
            .map_err(|e| DeviceError::NoRoot { detail: e.to_string() })?;
    }
    debug_assert!(eq(theta, f_flux).abs() < BIAS_TOL * (1.0 + rho));
    Ok(theta)
}

/// Per-cell coefficients for any device kind (Table-like summary):
///
/// * Junction: omega0^2 = cos(theta0)/(L_J C), chi3 = tan(theta0).
/// * rf-SQUID: omega_rf^2 = omega_bar0^2 + 1/(L C),
///   chi3 = (omega_bar0/omega_rf)^2 tan(theta0).
/// * SNAIL: omega_s^2 = cos(theta0+F)/(L_J1 C) + cos(theta0/N)/(L_J2 C N),
///   chi3 = [sin(theta0+F)/(L_J1 C) + sin(theta0/N)/(L_J2 C N^2)]/omega_s^2.
pub fn cell_coefficients(spec: &DeviceSpec) -> Result<CellCoefficients, DeviceError> {
    match *spec {
        DeviceSpec::Junction { c, lj, idc_over_ic, chi4, .. } => {
            check_positive("c", c)?;
            check_positive("lj", lj)?;
            let theta0 = solve_bias_junction(idc_over_ic)?;
            let omega0 = (theta0.cos() / (lj * c)).sqrt();
            Ok(CellCoefficients {
                theta0,
                omega0,
                chi3: theta0.tan(),
                chi4: Some(chi4.unwrap_or(0.5)),
            })
        }
        DeviceSpec::RfSquid { c, lj, l, phi_over_phi0, chi4, .. } => {
            check_positive("c", c)?;
            check_positive("lj", lj)?;
            check_positive("l", l)?;
            let f_flux = 2.0 * std::f64::consts::PI * phi_over_phi0;
            let beta_l = l / lj;
            let theta0 = solve_bias_rf_squid(f_flux, beta_l)?;
            let omega_bar0_sq = theta0.cos() / (lj * c);
            let omega_rf_sq = omega_bar0_sq + 1.0 / (l * c);
            if omega_rf_sq <= 0.0 {
                return Err(DeviceError::NoRoot {
                    detail: format!("unstable bias point, omega_rf^2 = {omega_rf_sq}"),
                });
            }
            Ok(CellCoefficients {
                theta0,
                omega0: omega_rf_sq.sqrt(),
                chi3: omega_bar0_sq / omega_rf_sq * theta0.tan(),
                chi4,
            })
        }
        DeviceSpec::Snail { c, lj1, lj2, n_arm, phi_over_phi0, chi4, .. } => {
            check_positive("c", c)?;
            let f_flux = 2.0 * std::f64::consts::PI * phi_over_phi0;
            let theta0 = solve_bias_snail(f_flux, lj1, lj2, n_arm)?;
            let n = f64::from(n_arm);
            let omega_s_sq =
                (theta0 + f_flux).cos() / (lj1 * c) + (theta0 / n).cos() / (lj2 * c * n);
            if omega_s_sq <= 0.0 {
                return Err(DeviceError::NoRoot {
                    detail: format!("unstable bias point, omega_s^2 = {omega_s_sq}"),
                });
            }
            let chi3 = ((theta0 + f_flux).sin() / (lj1 * c)
                + (theta0 / n).sin() / (lj2 * c * n * n))
                / omega_s_sq;
            Ok(CellCoefficients { theta0, omega0: omega_s_sq.sqrt(), chi3, chi4 })
        }
    }
}

/// Largest pumping strength available from dc biasing a junction chain.
///
/// In the adiabatic small-signal model, epsilon(I_dc, I_p) =
/// tan(theta0) * I_p/(I_c cos(theta0)) with sin(theta0) = I_dc/I_c, and the
/// currents share a budget I_dc + I_p <= switch_fraction * I_c. The budget
/// binds at the optimum, leaving a 1-D maximization over I_dc that is done by
/// a dense grid (1e4 points) followed by golden-section refinement.
pub fn max_pump_strength_dc(switch_fraction: f64) -> Result<PumpBudget, DeviceError> {
    if !(0.0..=1.0).contains(&switch_fraction) || !switch_fraction.is_finite() {
        return Err(DeviceError::InvalidParameter {
            name: "switch_fraction",
            value: switch_fraction,
        });
    }
    if switch_fraction == 0.0 {
        return Ok(PumpBudget { epsilon_max: 0.0, idc_opt: 0.0, ip_opt: 0.0 });
    }
    let s = switch_fraction;
    let eps = |x: f64| x * (s - x) / (1.0 - x * x);

    const GRID: usize = 10_000;
    let mut best_x = 0.0;
    let mut best = 0.0;
    for k in 1..GRID {
        let x = s * (k as f64) / (GRID as f64);
        let e = eps(x);
        if e > best {
            best = e;
            best_x = x;
        }
    }
    let step = s / (GRID as f64);
    let (x_opt, eps_max) =
        golden_max(&eps, (best_x - step).max(0.0), (best_x + step).min(s), 1e-12);
    Ok(PumpBudget { epsilon_max: eps_max, idc_opt: x_opt, ip_opt: s - x_opt })
}

/// Upper bound on the rf-SQUID pumping strength, epsilon <= beta_L *
/// theta_p_max, from |chi3| <= beta_L at the steepest usable bias.
pub fn rf_squid_epsilon_bound(beta_l: f64, theta_p_max: f64) -> Result<f64, DeviceError> {
    if !(beta_l < 1.0) {
        return Err(DeviceError::HystereticRegime { beta_l });
    }
    if beta_l < 0.0 {
        return Err(DeviceError::InvalidParameter { name: "beta_l", value: beta_l });
    }
    check_positive("theta_p_max", theta_p_max)?;
    Ok(beta_l * theta_p_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Independently evaluated arcsin(0.63) and its tangent (30-digit
    /// arbitrary-precision arithmetic, rounded to f64).
    const THETA0_063: f64 = 0.681_553_211_563_116_9;
    const CHI3_063: f64 = 0.811_233_516_078_459_4;

    #[test]
    fn junction_bias_is_the_arcsin() {
        assert_eq!(solve_bias_junction(0.0).unwrap(), 0.0);
        let theta = solve_bias_junction(0.63).unwrap();
        assert!((theta - THETA0_063).abs() < 1e-15);
        assert!((theta.sin() - 0.63).abs() < 1e-15);
        assert!(matches!(
            solve_bias_junction(1.0),
            Err(DeviceError::BiasOutOfRange { .. })
        ));
        assert!(matches!(
            solve_bias_junction(-1.3),
            Err(DeviceError::BiasOutOfRange { .. })
        ));
    }

    #[test]
    fn rf_squid_bias_hits_known_points() {
        assert_eq!(solve_bias_rf_squid(0.0, 0.5).unwrap(), 0.0);
        // At F = pi/2 + beta_L the root is exactly -pi/2.
        let theta = solve_bias_rf_squid(PI / 2.0 + 0.5, 0.5).unwrap();
        assert!((theta + PI / 2.0).abs() < 1e-12);
        // Independently solved root of 0.3 sin(t) + t + 0.7 = 0.
        let theta = solve_bias_rf_squid(0.7, 0.3).unwrap();
        assert!((theta - (-0.544_581_856_275_072_5)).abs() < 1e-12);
        assert!(matches!(
            solve_bias_rf_squid(0.3, 1.2),
            Err(DeviceError::HystereticRegime { .. })
        ));
    }

    #[test]
    fn rf_squid_bias_is_odd_in_flux() {
        for k in 0..40 {
            let f = -2.0 + 4.0 * (k as f64) / 39.0;
            for beta in [0.1, 0.5, 0.9] {
                let plus = solve_bias_rf_squid(f, beta).unwrap();
                let minus = solve_bias_rf_squid(-f, beta).unwrap();
                assert!((plus + minus).abs() < 1e-11, "F = {f}, beta = {beta}");
            }
        }
    }

    #[test]
    fn bias_residuals_stay_tiny_over_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_0001);
        for _ in 0..1000 {
            let idc: f64 = rng.gen_range(-0.999..0.999);
            let t = solve_bias_junction(idc).unwrap();
            assert!((t.sin() - idc).abs() < 1e-12);

            let beta: f64 = rng.gen_range(0.01..0.99);
            let f: f64 = rng.gen_range(-3.0..3.0);
            let t = solve_bias_rf_squid(f, beta).unwrap();
            assert!((beta * t.sin() + t + f).abs() < 1e-12 * (1.0 + f.abs()));

            let rho: f64 = rng.gen_range(0.2..5.0);
            let n: u32 = rng.gen_range(2..6);
            let flux: f64 = rng.gen_range(-0.45..0.45);
            let lj1 = 1e-10;
            let t = solve_bias_snail(2.0 * PI * flux, lj1, lj1 / rho, n).unwrap();
            let res = (t + 2.0 * PI * flux).sin() + rho * (t / f64::from(n)).sin();
            assert!(res.abs() < 1e-12 * (1.0 + rho), "rho={rho} n={n} flux={flux}");
        }
    }

    #[test]
    fn snail_bias_matches_the_reference_device() {
        // I_c1 = 0.8 uA, I_c2 = 3 uA, N = 3, Phi = 0.4 Phi0. Root and chi3
        // frozen from an independent 30-digit continuation solve.
        let lj1 = lj_from_ic(0.8e-6);
        let lj2 = lj_from_ic(3.0e-6);
        let theta = solve_bias_snail(2.0 * PI * 0.4, lj1, lj2, 3).unwrap();
        assert!((theta - (-0.801_575_346_759_645_1)).abs() < 1e-10);
        assert!(matches!(
            solve_bias_snail(1.0, lj1, lj2, 1),
            Err(DeviceError::DegenerateSnail)
        ));
    }

    #[test]
    fn snail_branch_is_continuous_in_flux() {
        let lj1 = lj_from_ic(0.8e-6);
        let lj2 = lj_from_ic(3.0e-6);
        let mut prev = 0.0;
        for k in 0..=100 {
            let flux = 0.45 * (k as f64) / 100.0;
            let theta = solve_bias_snail(2.0 * PI * flux, lj1, lj2, 3).unwrap();
            assert!((theta - prev).abs() < 0.1, "jump at flux {flux}");
            prev = theta;
        }
    }

    #[test]
    fn junction_coefficients_follow_the_bias() {
        let spec = DeviceSpec::Junction {
            c: 154e-15,
            cj: 0.0,
            lj: lj_from_ic(1e-6),
            idc_over_ic: 0.63,
            chi4: None,
        };
        let coeffs = cell_coefficients(&spec).unwrap();
        assert!((coeffs.chi3 - CHI3_063).abs() < 1e-12);
        assert_eq!(coeffs.chi4, Some(0.5));
        let expected = (THETA0_063.cos() / (lj_from_ic(1e-6) * 154e-15)).sqrt();
        assert!((coeffs.omega0 - expected).abs() < 1e-3 * expected);

        let unbiased = DeviceSpec::Junction {
            c: 154e-15,
            cj: 0.0,
            lj: lj_from_ic(1e-6),
            idc_over_ic: 0.0,
            chi4: None,
        };
        assert_eq!(cell_coefficients(&unbiased).unwrap().chi3, 0.0);
    }

    #[test]
    fn rf_squid_coefficients_vanish_at_zero_flux() {
        let spec = DeviceSpec::RfSquid {
            c: 100e-15,
            cj: 0.0,
            lj: 2e-10,
            l: 1e-10,
            phi_over_phi0: 0.0,
            chi4: None,
        };
        let coeffs = cell_coefficients(&spec).unwrap();
        assert_eq!(coeffs.chi3, 0.0);
        assert_eq!(coeffs.theta0, 0.0);
        // omega_rf^2 = 1/(L_J C) + 1/(L C) at zero bias.
        let expected = (1.0_f64 / (2e-10 * 100e-15) + 1.0 / (1e-10 * 100e-15)).sqrt();
        assert!((coeffs.omega0 - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn snail_coefficients_match_the_reference_device() {
        // Frozen from the same independent solve as the bias test:
        // omega_s/2pi = 20.637 GHz, chi3 = 0.8262.
        let spec = DeviceSpec::Snail {
            c: 154e-15,
            cj: 17.9e-15,
            lj1: lj_from_ic(0.8e-6),
            lj2: lj_from_ic(3.0e-6),
            n_arm: 3,
            phi_over_phi0: 0.4,
            chi4: None,
        };
        let coeffs = cell_coefficients(&spec).unwrap();
        assert!((coeffs.chi3 - 0.826_204_172_199_596_5).abs() < 1e-9);
        let ghz = coeffs.omega0 / (2.0 * PI) / 1e9;
        assert!((ghz - 20.637_362_315_975_25).abs() < 1e-6);
        assert_eq!(coeffs.chi4, None);
    }

    #[test]
    fn zero_bias_kills_chi3_for_every_kind() {
        let lj = 2e-10;
        let specs = [
            DeviceSpec::Junction { c: 1e-13, cj: 0.0, lj, idc_over_ic: 0.0, chi4: None },
            DeviceSpec::RfSquid {
                c: 1e-13,
                cj: 0.0,
                lj,
                l: 1e-10,
                phi_over_phi0: 0.0,
                chi4: None,
            },
            DeviceSpec::Snail {
                c: 1e-13,
                cj: 0.0,
                lj1: lj,
                lj2: lj / 3.75,
                n_arm: 3,
                phi_over_phi0: 0.0,
                chi4: None,
            },
        ];
        for spec in &specs {
            assert_eq!(cell_coefficients(spec).unwrap().chi3, 0.0);
        }
    }

    #[test]
    fn pump_budget_matches_the_closed_form() {
        // With the budget s binding, the maximizer of x(s-x)/(1-x^2) is
        // x = (1 - sqrt(1-s^2))/s; values frozen from 30-digit arithmetic.
        let b = max_pump_strength_dc(0.9).unwrap();
        assert!((b.idc_opt - 0.626_789_006_273_258_5).abs() < 1e-6);
        assert!((b.ip_opt - 0.273_210_993_726_741_5).abs() < 1e-6);
        assert!((b.epsilon_max - 0.282_055_052_822_966_3).abs() < 1e-9);

        let b = max_pump_strength_dc(0.5).unwrap();
        assert!((b.idc_opt - 0.267_949_192_431_122_7).abs() < 1e-6);
        assert!((b.epsilon_max - 0.066_987_298_107_780_68).abs() < 1e-9);

        let b = max_pump_strength_dc(0.0).unwrap();
        assert_eq!(b.epsilon_max, 0.0);
    }

    #[test]
    fn pump_budget_beats_exhaustive_grid_search() {
        // The reduced 1-D search must dominate a brute-force 2-D scan over
        // (I_dc, I_p) pairs within the budget.
        let s = 0.9;
        let b = max_pump_strength_dc(s).unwrap();
        let mut best = 0.0_f64;
        for i in 1..600 {
            let x = s * (i as f64) / 600.0;
            for j in 1..600 {
                let ip = (s - x) * (j as f64) / 600.0;
                let theta = x.asin();
                best = best.max(theta.tan() * ip / theta.cos());
            }
        }
        assert!(b.epsilon_max >= best - 1e-6);
        assert!(b.epsilon_max <= best + 2e-3);
    }

    #[test]
    fn rf_squid_bound_is_the_product() {
        assert!((rf_squid_epsilon_bound(0.5, 0.1).unwrap() - 0.05).abs() < 1e-15);
        assert!((rf_squid_epsilon_bound(0.9, 0.05).unwrap() - 0.045).abs() < 1e-15);
        assert!((rf_squid_epsilon_bound(0.999, 0.1).unwrap() - 0.0999).abs() < 1e-15);
        assert!(matches!(
            rf_squid_epsilon_bound(1.0, 0.1),
            Err(DeviceError::HystereticRegime { .. })
        ));
    }

    #[test]
    fn device_spec_round_trips_through_json() {
        let spec = DeviceSpec::Snail {
            c: 154e-15,
            cj: 17.9e-15,
            lj1: lj_from_ic(0.8e-6),
            lj2: lj_from_ic(3.0e-6),
            n_arm: 3,
            phi_over_phi0: 0.4,
            chi4: None,
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: DeviceSpec = serde_json::from_str(&json).unwrap();
        // The JSON number path is not guaranteed bit-exact, so compare
        // fields at machine-level relative tolerance.
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-14 * a.abs().max(b.abs());
        match (&spec, &back) {
            (
                DeviceSpec::Snail {
                    c: ca, cj: ja, lj1: l1a, lj2: l2a, n_arm: na, phi_over_phi0: fa, chi4: xa,
                },
                DeviceSpec::Snail {
                    c: cb, cj: jb, lj1: l1b, lj2: l2b, n_arm: nb, phi_over_phi0: fb, chi4: xb,
                },
            ) => {
                assert!(close(*ca, *cb) && close(*ja, *jb));
                assert!(close(*l1a, *l1b) && close(*l2a, *l2b));
                assert_eq!(na, nb);
                assert_eq!(fa, fb);
                assert_eq!(xa, xb);
            }
            _ => panic!("kind changed in round trip"),
        }
        assert!(serde_json::from_str::<DeviceSpec>("{\"kind\":\"junction\",\"c\":1,\"lj\":1,\"idc_over_ic\":0,\"bogus\":2}").is_err());
    }
}
